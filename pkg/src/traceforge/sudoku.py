"""9x9 Sudoku: full-grid generation, hole digging that preserves solution
uniqueness, exact solving, and trace construction.

Cells are indexed 0..80 row-major; digits are 1..9 with 0 for blanks.
Solvers keep one 9-bit candidate mask per row, column and box. The
uniqueness counter picks the most constrained cell first (fast early
exits); the trace solver fills cells in plain row-major order, where
multi-candidate cells are common and give detours room to branch.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .core import (
    GenerationError,
    MultipleSolutionsError,
    NoSolutionError,
    ProblemInstance,
    TaskKind,
    derive_seed,
)
from .search import (
    SearchTree,
    TraceVerbalizer,
    linearize,
    select_detours,
    solution_path,
)
from .countdown import CONCLUSION

ROW_OF = tuple(i // 9 for i in range(81))
COL_OF = tuple(i % 9 for i in range(81))
BOX_OF = tuple((i // 27) * 3 + (i % 9) // 3 for i in range(81))
FULL = 0x3FE  # candidate bits for digits 1..9

PROMPT_TEMPLATE = (
    "Solve this Sudoku puzzle. Empty cells are shown as 0:\n"
    "{grid}\n"
    "Give the completed grid as nine lines of nine digits, "
    "with the digits in each line separated by single spaces."
)


@dataclass(frozen=True)
class SudokuPuzzle:
    givens: tuple    # 81 ints, 0 marks a blank
    solution: tuple  # 81 ints, the unique completion
    blanks: int


@dataclass(frozen=True)
class SudokuConfig:
    blank_range: tuple = (30, 60)
    max_detour_depth: int = 2
    max_trace_retries: int = 50
    fill_restart_steps: int = 20_000  # backtrack cap before a fresh fill


DEFAULT_CONFIG = SudokuConfig()


def _prepare(grid):
    """Build row/col/box masks from a grid, or None on conflicting givens."""
    rows = [0] * 9
    cols = [0] * 9
    boxes = [0] * 9
    empties = []
    for i in range(81):
        v = grid[i]
        if v:
            bit = 1 << v
            r, c, b = ROW_OF[i], COL_OF[i], BOX_OF[i]
            if (rows[r] | cols[c] | boxes[b]) & bit:
                return None
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
        else:
            empties.append(i)
    return rows, cols, boxes, empties


def count_solutions(grid, limit: int = 2) -> int:
    """Number of completions of ``grid``, capped at ``limit``.

    Conflicting givens count as zero solutions. Most-constrained-cell
    ordering keeps this fast even on empty-ish grids.
    """
    prep = _prepare(grid)
    if prep is None:
        return 0
    rows, cols, boxes, empties = prep
    count = 0

    def rec(n):
        nonlocal count
        if n == 0:
            count += 1
            return count >= limit
        best_k = 0
        best_mask = 0
        best_n = 10
        for k in range(n):
            i = empties[k]
            m = FULL & ~(rows[ROW_OF[i]] | cols[COL_OF[i]] | boxes[BOX_OF[i]])
            bc = m.bit_count()
            if bc < best_n:
                best_k, best_mask, best_n = k, m, bc
                if bc <= 1:
                    break
        if best_n == 0:
            return False
        i = empties[best_k]
        empties[best_k] = empties[n - 1]
        empties[n - 1] = i
        r, c, b = ROW_OF[i], COL_OF[i], BOX_OF[i]
        m = best_mask
        stop = False
        while m:
            bit = m & -m
            m ^= bit
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
            stop = rec(n - 1)
            rows[r] ^= bit
            cols[c] ^= bit
            boxes[b] ^= bit
            if stop:
                break
        empties[n - 1] = empties[best_k]
        empties[best_k] = i
        return stop

    rec(len(empties))
    return count


def solve_grid(grid) -> Optional[tuple]:
    """First completion of ``grid`` in candidate order, or None."""
    prep = _prepare(grid)
    if prep is None:
        return None
    rows, cols, boxes, empties = prep
    out = list(grid)

    def rec(n):
        if n == 0:
            return True
        best_k = 0
        best_mask = 0
        best_n = 10
        for k in range(n):
            i = empties[k]
            m = FULL & ~(rows[ROW_OF[i]] | cols[COL_OF[i]] | boxes[BOX_OF[i]])
            bc = m.bit_count()
            if bc < best_n:
                best_k, best_mask, best_n = k, m, bc
                if bc <= 1:
                    break
        if best_n == 0:
            return False
        i = empties[best_k]
        empties[best_k] = empties[n - 1]
        empties[n - 1] = i
        r, c, b = ROW_OF[i], COL_OF[i], BOX_OF[i]
        m = best_mask
        while m:
            bit = m & -m
            m ^= bit
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
            out[i] = bit.bit_length() - 1
            if rec(n - 1):
                return True
            rows[r] ^= bit
            cols[c] ^= bit
            boxes[b] ^= bit
        out[i] = 0
        empties[n - 1] = empties[best_k]
        empties[best_k] = i
        return False

    if not rec(len(empties)):
        return None
    return tuple(out)


def generate_full(rng: random.Random,
                  config: SudokuConfig = DEFAULT_CONFIG) -> tuple:
    """A uniformly scrambled complete grid via randomized backtracking."""
    while True:
        grid = [0] * 81
        rows = [0] * 9
        cols = [0] * 9
        boxes = [0] * 9
        steps = 0

        def fill(i):
            nonlocal steps
            if i == 81:
                return True
            steps += 1
            if steps > config.fill_restart_steps:
                return False
            r, c, b = ROW_OF[i], COL_OF[i], BOX_OF[i]
            m = FULL & ~(rows[r] | cols[c] | boxes[b])
            if not m:
                return False
            bits = []
            while m:
                bit = m & -m
                m ^= bit
                bits.append(bit)
            rng.shuffle(bits)
            for bit in bits:
                rows[r] |= bit
                cols[c] |= bit
                boxes[b] |= bit
                grid[i] = bit.bit_length() - 1
                if fill(i + 1):
                    return True
                rows[r] ^= bit
                cols[c] ^= bit
                boxes[b] ^= bit
            grid[i] = 0
            return False

        if fill(0):
            return tuple(grid)


def dig_holes(solution, blanks: int, rng: random.Random,
              config: SudokuConfig = DEFAULT_CONFIG) -> SudokuPuzzle:
    """Remove givens from a complete grid, keeping the solution unique.

    A cell may be blanked only if no alternative digit there admits any
    completion. Once a removal is rejected it stays impossible (removing
    more givens only widens the alternative's options), so one pass over a
    shuffled cell order is exhaustive. When fewer than ``blanks`` cells can
    be removed the puzzle reports the achieved count in its ``blanks``
    field rather than failing.
    """
    lo, hi = config.blank_range
    if not lo <= blanks <= hi:
        raise ValueError(f"blank count {blanks} outside allowed range {lo}..{hi}")
    grid = list(solution)
    removed = 0
    order = rng.sample(range(81), 81)
    for cell in order:
        if removed >= blanks:
            break
        original = grid[cell]
        grid[cell] = 0
        if count_solutions(grid, limit=2) == 1:
            removed += 1
        else:
            grid[cell] = original
    return SudokuPuzzle(tuple(grid), tuple(solution), removed)


def generate(rng: random.Random,
             config: SudokuConfig = DEFAULT_CONFIG) -> SudokuPuzzle:
    full = generate_full(rng, config)
    blanks = rng.randint(*config.blank_range)
    return dig_holes(full, blanks, rng, config)


def from_givens(grid, config: SudokuConfig = DEFAULT_CONFIG) -> SudokuPuzzle:
    """Wrap an untrusted givens grid, proving it has exactly one solution."""
    solved = solve_grid(grid)
    if solved is None:
        raise NoSolutionError("grid has no completion")
    if count_solutions(grid, limit=2) > 1:
        raise MultipleSolutionsError("grid has more than one completion")
    return SudokuPuzzle(tuple(grid), solved, sum(1 for v in grid if v == 0))


# --- solving into a tree -----------------------------------------------------

def solve_dfs(puzzle: SudokuPuzzle, config: SudokuConfig = DEFAULT_CONFIG,
              validate: bool = False):
    """Build the search tree for a puzzle's unique solution.

    The tree mirrors a plain backtracking solver: empty cells in row-major
    order, candidate digits ascending at each cell. Because the solution
    is unique, any candidate other than the solution's digit is a dead
    branch, so the root-to-solution path is the solver's successful line
    and off-path children are the wrong placements a detour can take.
    Pass ``validate=True`` to re-prove uniqueness first (for puzzles that
    did not come from :func:`generate`).
    """
    if validate:
        n = count_solutions(puzzle.givens, limit=2)
        if n == 0:
            raise NoSolutionError("puzzle givens admit no completion")
        if n > 1:
            raise MultipleSolutionsError("puzzle givens admit several completions")
    prep = _prepare(puzzle.givens)
    if prep is None:
        raise NoSolutionError("puzzle givens conflict")
    rows, cols, boxes, empties = prep
    solution = puzzle.solution

    tree = SearchTree()
    grid = list(puzzle.givens)
    parent = tree.add_node("", payload=tuple(grid))
    for pos, cell in enumerate(empties):
        r, c, b = ROW_OF[cell], COL_OF[cell], BOX_OF[cell]
        mask = FULL & ~(rows[r] | cols[c] | boxes[b])
        want = solution[cell]
        next_parent = None
        last = pos == len(empties) - 1
        while mask:
            bit = mask & -mask
            mask ^= bit
            d = bit.bit_length() - 1
            grid[cell] = d
            child = tree.add_node(
                f"place {d} at row {r + 1}, column {c + 1}.",
                parent=parent,
                is_solution=(last and d == want),
                payload=tuple(grid),
            )
            if d == want:
                next_parent = child
        grid[cell] = want
        rows[r] |= 1 << want
        cols[c] |= 1 << want
        boxes[b] |= 1 << want
        parent = next_parent
    return tree, solution


# --- traces ------------------------------------------------------------------

def _contradiction_cell(grid):
    """An empty cell with no candidates left, or None."""
    prep = _prepare(grid)
    if prep is None:
        return None
    rows, cols, boxes, empties = prep
    for i in empties:
        if not FULL & ~(rows[ROW_OF[i]] | cols[COL_OF[i]] | boxes[BOX_OF[i]]):
            return i
    return None


def _extend_sudoku(config: SudokuConfig):
    """Walk a wrong placement deeper, following the solver's cell order.

    Every branch off the solution path is dead by uniqueness, so unlike
    countdown no reachability check is needed. The walk stops early when
    the next cell has no valid digit left (the contradiction is already
    visible).
    """

    def extend(tree, branch_id, excluded, rng):
        node = tree.nodes[branch_id]
        candidates = [c for c in node.children
                      if c not in excluded and not tree.nodes[c].is_solution]
        if not candidates:
            return None
        cand = candidates[rng.randrange(len(candidates))]
        wrong = [cand]
        cursor = cand
        while len(wrong) < config.max_detour_depth:
            grid = list(tree.nodes[cursor].payload)
            prep = _prepare(grid)
            if prep is None:
                break
            rows, cols, boxes, empties = prep
            if not empties:
                break
            cell = empties[0]  # next cell in row-major order
            mask = FULL & ~(rows[ROW_OF[cell]] | cols[COL_OF[cell]] | boxes[BOX_OF[cell]])
            if not mask:
                break
            bits = []
            while mask:
                bit = mask & -mask
                mask ^= bit
                bits.append(bit)
            d = bits[rng.randrange(len(bits))].bit_length() - 1
            grid[cell] = d
            cursor = tree.add_node(
                f"place {d} at row {ROW_OF[cell] + 1}, column {COL_OF[cell] + 1}.",
                parent=cursor,
                payload=tuple(grid),
            )
            wrong.append(cursor)
        return wrong

    return extend


class _SudokuVerbalizer(TraceVerbalizer):
    def __init__(self, answer: str, tree: SearchTree):
        self.answer = answer
        self._tree = tree

    def observation(self, detour, wrong_nodes) -> str:
        end = wrong_nodes[-1]
        stuck = _contradiction_cell(end.payload)
        if stuck is not None:
            return (f"There is no digit that can go in row {ROW_OF[stuck] + 1}, "
                    f"column {COL_OF[stuck] + 1}.")
        # no visible contradiction yet: the first wrong placement is still
        # impossible because the solution is unique
        before = self._tree.nodes[detour.branch_point].payload
        after = wrong_nodes[0].payload
        cell = next(i for i in range(81) if before[i] != after[i])
        return (f"The digit {after[cell]} cannot go in row {ROW_OF[cell] + 1}, "
                f"column {COL_OF[cell] + 1}.")

    def conclusion(self) -> str:
        return CONCLUSION


def make_trace(puzzle: SudokuPuzzle, k: int, rng: random.Random,
               config: SudokuConfig = DEFAULT_CONFIG,
               require_exact: bool = True):
    """Linearize the solve into a trace with exactly ``k`` backtracks.

    Detours can only branch where the chosen cell had several candidates;
    heavily constrained puzzles may not host ``k`` of them, in which case
    this raises GenerationError (or records the shortfall in trace meta
    when ``require_exact`` is false) and callers resample.
    """
    tree, solution = solve_dfs(puzzle, config)
    path = solution_path(tree)
    plan = select_detours(tree, path, k, rng, extend_fn=_extend_sudoku(config))
    if plan.shortfall and require_exact:
        raise GenerationError(
            f"puzzle hosts {len(plan.detours)} of {k} requested detours"
        )
    trace = linearize(tree, path, plan.detours,
                      _SudokuVerbalizer(render_grid(solution), tree))
    if plan.shortfall:
        trace.meta["detour_shortfall"] = plan.shortfall
    return trace


# --- answer checking ---------------------------------------------------------

def render_grid(grid) -> str:
    """Nine lines of nine space-separated digits (0 allowed for blanks)."""
    return "\n".join(
        " ".join(str(grid[r * 9 + c]) for c in range(9)) for r in range(9)
    )


def parse_answer(text: str) -> Optional[tuple]:
    """Strict grid parse: nine lines, nine single digits 1..9 each."""
    lines = text.strip().split("\n")
    if len(lines) != 9:
        return None
    out = []
    for line in lines:
        tokens = line.split()
        if len(tokens) != 9:
            return None
        for tok in tokens:
            if len(tok) == 1 and "1" <= tok <= "9":
                out.append(int(tok))
            else:
                return None
    return tuple(out)


def verify(puzzle: SudokuPuzzle, answer: str) -> bool:
    parsed = parse_answer(answer)
    return parsed is not None and parsed == puzzle.solution


# --- instances ---------------------------------------------------------------

def format_prompt(puzzle: SudokuPuzzle) -> str:
    return PROMPT_TEMPLATE.format(grid=render_grid(puzzle.givens))


def _instance(instance_id: int, seed: int, puzzle: SudokuPuzzle) -> ProblemInstance:
    return ProblemInstance(
        id=instance_id,
        task=TaskKind.SUDOKU,
        prompt=format_prompt(puzzle),
        ground_truth=render_grid(puzzle.solution),
        seed=seed,
        meta={
            "givens": "".join(map(str, puzzle.givens)),
            "solution": "".join(map(str, puzzle.solution)),
            "blanks": puzzle.blanks,
        },
    )


def puzzle_from_instance(instance: ProblemInstance) -> SudokuPuzzle:
    givens = tuple(int(ch) for ch in instance.meta["givens"])
    solution = tuple(int(ch) for ch in instance.meta["solution"])
    return SudokuPuzzle(givens, solution, sum(1 for v in givens if v == 0))


def build_instance(instance_id: int, seed: int,
                   config: SudokuConfig = DEFAULT_CONFIG) -> ProblemInstance:
    rng = random.Random(seed)
    return _instance(instance_id, seed, generate(rng, config))


def build_traced(instance_id: int, seed: int, k: int,
                 config: SudokuConfig = DEFAULT_CONFIG):
    for attempt in range(config.max_trace_retries):
        rng = random.Random(derive_seed(seed, attempt))
        puzzle = generate(rng, config)
        try:
            trace = make_trace(puzzle, k, rng, config)
        except GenerationError:
            continue
        trace.meta["instance_id"] = instance_id
        return _instance(instance_id, seed, puzzle), trace
    raise GenerationError(
        f"no sudoku puzzle hosting {k} backtracks after "
        f"{config.max_trace_retries} attempts (seed {seed:#018x})"
    )
