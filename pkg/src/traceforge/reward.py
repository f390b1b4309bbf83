"""Rule-based verifiable reward for task completions.

A completion earns a format score of 0.1 when its think/answer tags are
well formed, and an answer score of 0.9 when the extracted answer verifies
exactly against the instance. By default the answer score is gated on the
format score (a malformed completion totals 0 even if its answer happens
to be right), so totals land in {0, 0.1, 1.0}; with gating off the answer
contributes independently.

Every completion also gets one of three categories: ``correct``,
``incorrect`` (well formed and parseable, wrong answer), and
``incorrect_format`` (broken tags or an answer the task grammar cannot
parse).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import arc1d, countdown, sudoku, xtasks
from .core import ProblemInstance, TaskKind, extract_tags

CORRECT = "correct"
INCORRECT = "incorrect"
INCORRECT_FORMAT = "incorrect_format"

CATEGORIES = (CORRECT, INCORRECT, INCORRECT_FORMAT)


@dataclass(frozen=True)
class RewardConfig:
    format_points: float = 0.1
    answer_points: float = 0.9
    gated: bool = True  # answer points require well-formed tags


DEFAULT_REWARD = RewardConfig()


@dataclass(frozen=True)
class ScoreBreakdown:
    format_score: float
    answer_score: float
    total: float
    category: str


def check_answer(instance: ProblemInstance, answer_text: str):
    """(parseable, correct) of an answer string under the task's grammar."""
    task = instance.task
    if task == TaskKind.COUNTDOWN:
        puzzle = countdown.puzzle_from_instance(instance)
        if countdown.parse_answer(answer_text) is None:
            return False, False
        return True, countdown.verify(puzzle, answer_text)
    if task == TaskKind.SUDOKU:
        parsed = sudoku.parse_answer(answer_text)
        if parsed is None:
            return False, False
        solution = tuple(int(ch) for ch in instance.meta["solution"])
        return True, parsed == solution
    if task == TaskKind.ARC1D:
        parsed = arc1d.parse_answer(answer_text)
        if parsed is None:
            return False, False
        return True, parsed == tuple(instance.meta["expected"])
    if task == TaskKind.GEOMETRY_ANGLE:
        if xtasks.parse_angle(answer_text) is None:
            return False, False
        return True, xtasks.verify_angle(instance.ground_truth, answer_text)
    if task == TaskKind.GEOMETRY_ORTHOCENTER:
        if xtasks.parse_point(answer_text) is None:
            return False, False
        return True, xtasks.verify_point(instance.ground_truth, answer_text)
    if task == TaskKind.GEOMETRY_INCIRCLE:
        if xtasks.parse_radius(answer_text) is None:
            return False, False
        return True, xtasks.verify_radius(instance.ground_truth, answer_text)
    if task in (TaskKind.COLOR_CUBE, TaskKind.ZEBRA):
        if not answer_text.strip():
            return False, False
        verify = (xtasks.cube_verify if task == TaskKind.COLOR_CUBE
                  else xtasks.zebra_verify)
        return True, verify(instance.ground_truth, answer_text)
    if task == TaskKind.SELF_REFERENCE:
        try:
            value = int(answer_text.strip())
        except ValueError:
            return False, False
        return True, value == int(instance.ground_truth)
    if task == TaskKind.LIST_FUNCTIONS:
        if xtasks.parse_number_list(answer_text) is None:
            return False, False
        return True, xtasks.listfunc_verify(instance.ground_truth, answer_text)
    raise ValueError(f"no verifier for task {task!r}")


def score(instance: ProblemInstance, completion: str,
          config: Optional[RewardConfig] = None) -> ScoreBreakdown:
    """Score one completion against its instance."""
    cfg = config or DEFAULT_REWARD
    tags = extract_tags(completion)
    format_score = cfg.format_points if tags.well_formed else 0.0
    parseable = False
    right = False
    if tags.answer is not None:
        parseable, right = check_answer(instance, tags.answer.strip())
    eligible = tags.well_formed if cfg.gated else True
    answer_score = cfg.answer_points if (right and eligible) else 0.0
    if tags.well_formed and parseable:
        category = CORRECT if right else INCORRECT
    else:
        category = INCORRECT_FORMAT
    return ScoreBreakdown(format_score, answer_score,
                          format_score + answer_score, category)


def classify(instance: ProblemInstance, completion: str,
             config: Optional[RewardConfig] = None) -> str:
    return score(instance, completion, config).category


def pass_at_1(breakdowns) -> float:
    """Fraction of completions whose category is ``correct``."""
    items = list(breakdowns)
    if not items:
        raise ValueError("no scores to aggregate")
    return sum(1 for b in items if b.category == CORRECT) / len(items)


# --- evaluation table --------------------------------------------------------

# short column names; the three geometry subtasks pool into one column
TASK_COLUMNS = {
    TaskKind.GEOMETRY_ANGLE: "AG",
    TaskKind.GEOMETRY_ORTHOCENTER: "AG",
    TaskKind.GEOMETRY_INCIRCLE: "AG",
    TaskKind.COUNTDOWN: "CD",
    TaskKind.ARC1D: "ARC",
    TaskKind.SUDOKU: "SDK",
    TaskKind.COLOR_CUBE: "CCR",
    TaskKind.ZEBRA: "ZP",
    TaskKind.LIST_FUNCTIONS: "LF",
    TaskKind.SELF_REFERENCE: "SR",
}

COLUMN_ORDER = ("AG", "CD", "ARC", "SDK", "CCR", "ZP", "LF", "SR")


def evaluate(instances, completions,
             config: Optional[RewardConfig] = None) -> dict:
    """Pass rate per evaluation column.

    ``completions`` maps instance id -> completion text (or is a list of
    {"instance_id", "completion"} items). Instances without a completion
    count as failures; completions without an instance raise ValueError.
    """
    if not isinstance(completions, dict):
        completions = {int(c["instance_id"]): c["completion"]
                       for c in completions}
    by_id = {inst.id: inst for inst in instances}
    for iid in completions:
        if iid not in by_id:
            raise ValueError(f"completion references unknown instance {iid}")
    hits: dict = {}
    totals: dict = {}
    for inst in instances:
        column = TASK_COLUMNS[inst.task]
        totals[column] = totals.get(column, 0) + 1
        text = completions.get(inst.id)
        if text is None:
            continue
        if score(inst, text, config).category == CORRECT:
            hits[column] = hits.get(column, 0) + 1
    return {col: hits.get(col, 0) / totals[col]
            for col in COLUMN_ORDER if col in totals}


def render_eval_table(rates: dict) -> str:
    """Fixed-order single-row table of pass rates."""
    columns = [col for col in COLUMN_ORDER if col in rates]
    if not columns:
        return "(no results)"
    header = "  ".join(f"{col:>6}" for col in columns)
    row = "  ".join(f"{rates[col]:6.3f}" for col in columns)
    return header + "\n" + row
