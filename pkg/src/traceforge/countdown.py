"""Countdown arithmetic puzzles: reach a target by combining numbers with
+ - * /, each number used at most once, every intermediate value a positive
integer and every division exact.

Generation works backwards (build a random expression, read off its value)
so every emitted puzzle carries a witness. Solving is exhaustive DFS over
combine moves with dead-state memoization, which both finds the canonical
solution and proves unsolvability when there is none.
"""

from __future__ import annotations

import ast
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    GenerationError,
    NoSolutionError,
    ProblemInstance,
    TaskKind,
    derive_seed,
)
from .search import (
    Detour,
    SearchTree,
    TraceVerbalizer,
    linearize,
    select_detours,
    solution_path,
)

CONCLUSION = "This matches the problem statement. This is the solution."

PROMPT_TEMPLATE = (
    "Using the numbers {numbers}, create an expression that equals {target}. "
    "You can only use each number once, and may combine them with +, -, * and /. "
    "Give only the expression, without an equals sign."
)


@dataclass(frozen=True)
class CountdownPuzzle:
    numbers: tuple
    target: int


@dataclass(frozen=True)
class CountdownConfig:
    count_range: tuple = (4, 6)        # how many numbers a puzzle offers
    value_range: tuple = (1, 99)
    target_range: tuple = (10, 999)
    node_budget: int = 200_000         # DFS states before giving up
    max_detour_depth: int = 2
    max_generate_attempts: int = 500
    max_trace_retries: int = 50


DEFAULT_CONFIG = CountdownConfig()


@dataclass(frozen=True)
class ArithExpr:
    """Expression tree over puzzle numbers. Leaves store an index into
    ``puzzle.numbers``; internal nodes store one of ``+ - * /``."""

    op: Optional[str] = None
    index: Optional[int] = None
    left: Optional["ArithExpr"] = None
    right: Optional["ArithExpr"] = None

    @staticmethod
    def leaf(index: int) -> "ArithExpr":
        return ArithExpr(index=index)

    @staticmethod
    def combine(op: str, left: "ArithExpr", right: "ArithExpr") -> "ArithExpr":
        if op not in "+-*/" or len(op) != 1:
            raise ValueError(f"unknown operator {op!r}")
        return ArithExpr(op=op, left=left, right=right)

    @property
    def is_leaf(self) -> bool:
        return self.op is None

    def value(self, numbers) -> Fraction:
        if self.is_leaf:
            return Fraction(numbers[self.index])
        a = self.left.value(numbers)
        b = self.right.value(numbers)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0:
            raise ZeroDivisionError("division by zero in expression")
        return a / b

    def used_indices(self) -> list:
        if self.is_leaf:
            return [self.index]
        return self.left.used_indices() + self.right.used_indices()

    def render(self, numbers) -> str:
        """Infix text with the fewest parentheses that preserve value."""
        text, _ = self._render(numbers)
        return text

    _PREC = {"+": 1, "-": 1, "*": 2, "/": 2}

    def _render(self, numbers):
        if self.is_leaf:
            return str(numbers[self.index]), 3
        lhs, lp = self.left._render(numbers)
        rhs, rp = self.right._render(numbers)
        prec = self._PREC[self.op]
        if lp < prec:
            lhs = f"({lhs})"
        # - and / are left-associative, so an equal-precedence right child
        # still needs parentheses under them
        if rp < prec or (rp == prec and self.op in "-/"):
            rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}", prec


# --- moves -------------------------------------------------------------------
#
# A move combines the values at positions i < j into one result. Orientation
# for - and / is forced by positivity and exact division, so each (pair, op)
# yields at most one move. Move order is the solver's child order: pairs
# lexicographic, operators + - * /. Determinism over speed.

def legal_moves(values):
    """Yield (i, j, op, x, y, result, swapped) for every legal combine.

    ``x op y = result`` is the display orientation; ``swapped`` is True when
    x came from position j.
    """
    n = len(values)
    for i in range(n - 1):
        vi = values[i]
        for j in range(i + 1, n):
            vj = values[j]
            yield (i, j, "+", vi, vj, vi + vj, False)
            if vi > vj:
                yield (i, j, "-", vi, vj, vi - vj, False)
            elif vj > vi:
                yield (i, j, "-", vj, vi, vj - vi, True)
            yield (i, j, "*", vi, vj, vi * vj, False)
            if vi % vj == 0:
                yield (i, j, "/", vi, vj, vi // vj, False)
            elif vj % vi == 0:
                yield (i, j, "/", vj, vi, vj // vi, True)


def _apply_move(values, move):
    i, j, _, _, _, result, _ = move
    nxt = [values[m] for m in range(len(values)) if m != i and m != j]
    nxt.append(result)
    return nxt


def reachable(values, target, memo=None) -> bool:
    """Exact reachability of ``target`` from a value multiset."""
    if memo is None:
        memo = {}

    def go(vals):
        if target in vals:
            return True
        if len(vals) < 2:
            return False
        key = tuple(sorted(vals))
        hit = memo.get(key)
        if hit is not None:
            return hit
        out = False
        for move in legal_moves(vals):
            if move[5] == target or go(_apply_move(vals, move)):
                out = True
                break
        memo[key] = out
        return out

    return go(list(values))


# --- generation --------------------------------------------------------------

def _random_combine(rng: random.Random, items) -> None:
    """Merge two random items in place with a random legal operator."""
    a, b = rng.sample(range(len(items)), 2)
    va, ea = items[a]
    vb, eb = items[b]
    options = [("+", va + vb, ea, eb), ("*", va * vb, ea, eb)]
    if va > vb:
        options.append(("-", va - vb, ea, eb))
    elif vb > va:
        options.append(("-", vb - va, eb, ea))
    if vb != 0 and va % vb == 0:
        options.append(("/", va // vb, ea, eb))
    elif va != 0 and vb % va == 0:
        options.append(("/", vb // va, eb, ea))
    op, value, lhs, rhs = options[rng.randrange(len(options))]
    for pos in sorted((a, b), reverse=True):
        items.pop(pos)
    items.append((value, ArithExpr.combine(op, lhs, rhs)))


def generate(rng: random.Random,
             config: CountdownConfig = DEFAULT_CONFIG):
    """Sample a puzzle together with a witness expression.

    The witness proves solvability; the solver is still free to find a
    different (canonical) solution. Targets that already appear among the
    puzzle numbers are rejected so no puzzle is solvable with zero moves.
    """
    lo_t, hi_t = config.target_range
    for _ in range(config.max_generate_attempts):
        n = rng.randint(*config.count_range)
        numbers = tuple(rng.randint(*config.value_range) for _ in range(n))
        ops = rng.randint(1, n - 1)
        chosen = rng.sample(range(n), ops + 1)
        items = [(numbers[i], ArithExpr.leaf(i)) for i in chosen]
        for _ in range(ops):
            _random_combine(rng, items)
        value, witness = items[0]
        if not (lo_t <= value <= hi_t):
            continue
        if value in numbers:
            continue
        return CountdownPuzzle(numbers, value), witness
    raise GenerationError("could not sample a countdown puzzle within budget")


# --- solving -----------------------------------------------------------------

class _BudgetExhausted(Exception):
    pass


def _find_solution(values, target, budget):
    """First solution in move order, as the list of moves taken, or None.

    Same move order as :func:`legal_moves`, but with the enumeration
    inlined and the value list mutated in place; this loop dominates
    record-building time.
    """
    dead = set()
    steps = []
    visits = 0

    def pair_hit(a, b):
        # The move, if any, that takes the two-value state [a, b] to the
        # target, trying ops in the canonical order.
        if a + b == target:
            return (0, 1, "+", a, b, target, False)
        if a != b:
            if a > b:
                if a - b == target:
                    return (0, 1, "-", a, b, target, False)
            elif b - a == target:
                return (0, 1, "-", b, a, target, True)
        if a * b == target:
            return (0, 1, "*", a, b, target, False)
        if a % b == 0:
            if a // b == target:
                return (0, 1, "/", a, b, target, False)
        elif b % a == 0 and b // a == target:
            return (0, 1, "/", b, a, target, True)
        return None

    def dfs(vals, key):
        # key is tuple(sorted(vals)), computed by the caller and known not
        # to be dead yet
        nonlocal visits
        visits += 1
        if visits > budget:
            raise _BudgetExhausted

        n = len(vals)
        if n == 3:
            # Children are two-value states; evaluate them inline instead
            # of recursing.
            for i in range(2):
                vi = vals[i]
                for j in range(i + 1, 3):
                    vj = vals[j]
                    w = vals[3 - i - j]

                    r = vi + vj
                    if r == target:
                        steps.append((i, j, "+", vi, vj, r, False))
                        return True
                    mv = pair_hit(w, r)
                    if mv is not None:
                        steps.append((i, j, "+", vi, vj, r, False))
                        steps.append(mv)
                        return True

                    if vi != vj:
                        if vi > vj:
                            x, y, sw = vi, vj, False
                        else:
                            x, y, sw = vj, vi, True
                        r = x - y
                        if r == target:
                            steps.append((i, j, "-", x, y, r, sw))
                            return True
                        mv = pair_hit(w, r)
                        if mv is not None:
                            steps.append((i, j, "-", x, y, r, sw))
                            steps.append(mv)
                            return True

                    r = vi * vj
                    if r == target:
                        steps.append((i, j, "*", vi, vj, r, False))
                        return True
                    mv = pair_hit(w, r)
                    if mv is not None:
                        steps.append((i, j, "*", vi, vj, r, False))
                        steps.append(mv)
                        return True

                    if vi % vj == 0:
                        x, y, r, sw = vi, vj, vi // vj, False
                    elif vj % vi == 0:
                        x, y, r, sw = vj, vi, vj // vi, True
                    else:
                        continue
                    if r == target:
                        steps.append((i, j, "/", x, y, r, sw))
                        return True
                    mv = pair_hit(w, r)
                    if mv is not None:
                        steps.append((i, j, "/", x, y, r, sw))
                        steps.append(mv)
                        return True
            dead.add(key)
            return False

        deeper = n > 2
        for i in range(n - 1):
            vi = vals[i]
            for j in range(i + 1, n):
                vj = vals[j]

                r = vi + vj
                if r == target:
                    steps.append((i, j, "+", vi, vj, r, False))
                    return True
                if deeper:
                    del vals[j]
                    del vals[i]
                    vals.append(r)
                    ckey = tuple(sorted(vals))
                    if ckey in dead:
                        hit = False
                    else:
                        steps.append((i, j, "+", vi, vj, r, False))
                        hit = dfs(vals, ckey)
                        if not hit:
                            steps.pop()
                    vals.pop()
                    vals.insert(i, vi)
                    vals.insert(j, vj)
                    if hit:
                        return True

                if vi != vj:
                    if vi > vj:
                        x, y, sw = vi, vj, False
                    else:
                        x, y, sw = vj, vi, True
                    r = x - y
                    if r == target:
                        steps.append((i, j, "-", x, y, r, sw))
                        return True
                    if deeper:
                        del vals[j]
                        del vals[i]
                        vals.append(r)
                        ckey = tuple(sorted(vals))
                        if ckey in dead:
                            hit = False
                        else:
                            steps.append((i, j, "-", x, y, r, sw))
                            hit = dfs(vals, ckey)
                            if not hit:
                                steps.pop()
                        vals.pop()
                        vals.insert(i, vi)
                        vals.insert(j, vj)
                        if hit:
                            return True

                r = vi * vj
                if r == target:
                    steps.append((i, j, "*", vi, vj, r, False))
                    return True
                if deeper:
                    del vals[j]
                    del vals[i]
                    vals.append(r)
                    ckey = tuple(sorted(vals))
                    if ckey in dead:
                        hit = False
                    else:
                        steps.append((i, j, "*", vi, vj, r, False))
                        hit = dfs(vals, ckey)
                        if not hit:
                            steps.pop()
                    vals.pop()
                    vals.insert(i, vi)
                    vals.insert(j, vj)
                    if hit:
                        return True

                if vi % vj == 0:
                    x, y, r, sw = vi, vj, vi // vj, False
                elif vj % vi == 0:
                    x, y, r, sw = vj, vi, vj // vi, True
                else:
                    continue
                if r == target:
                    steps.append((i, j, "/", x, y, r, sw))
                    return True
                if deeper:
                    del vals[j]
                    del vals[i]
                    vals.append(r)
                    ckey = tuple(sorted(vals))
                    if ckey in dead:
                        hit = False
                    else:
                        steps.append((i, j, "/", x, y, r, sw))
                        hit = dfs(vals, ckey)
                        if not hit:
                            steps.pop()
                    vals.pop()
                    vals.insert(i, vi)
                    vals.insert(j, vj)
                    if hit:
                        return True
        dead.add(key)
        return False

    start = list(values)
    if dfs(start, tuple(sorted(start))):
        return steps
    return None


def solve_dfs(puzzle: CountdownPuzzle,
              config: CountdownConfig = DEFAULT_CONFIG):
    """Solve by exhaustive DFS; returns the search tree and the solution.

    The tree holds the root-to-solution path plus every sibling move at
    each path node (one level of off-path children), which is all the
    detour machinery needs; deeper wrong nodes are materialized on demand.
    Raises NoSolutionError when search exhausts the move space (or the
    node budget) without reaching the target.
    """
    target = puzzle.target
    tree = SearchTree()
    values = list(puzzle.numbers)
    if target in values:
        tree.add_node("", is_solution=True, payload=tuple(values))
        return tree, ArithExpr.leaf(values.index(target))
    try:
        steps = _find_solution(values, target, config.node_budget)
    except _BudgetExhausted:
        raise NoSolutionError(
            f"search budget exhausted on {puzzle.numbers} -> {target}"
        ) from None
    if steps is None:
        raise NoSolutionError(f"{target} is unreachable from {puzzle.numbers}")

    parent = tree.add_node("", payload=tuple(values))
    exprs = [ArithExpr.leaf(m) for m in range(len(values))]
    answer = None
    for step in steps:
        next_parent = None
        for move in legal_moves(values):
            _, _, op, x, y, result, _ = move
            child = tree.add_node(
                f"{x} {op} {y} = {result}.",
                parent=parent,
                is_solution=(result == target),
                payload=tuple(_apply_move(values, move)),
            )
            if move == step:
                next_parent = child
        i, j, op, _, _, _, swapped = step
        lhs, rhs = (exprs[j], exprs[i]) if swapped else (exprs[i], exprs[j])
        combined = ArithExpr.combine(op, lhs, rhs)
        exprs = [exprs[m] for m in range(len(values)) if m != i and m != j]
        exprs.append(combined)
        values = _apply_move(values, step)
        parent = next_parent
        answer = combined
    return tree, answer


# --- traces ------------------------------------------------------------------

def _make_extend(config: CountdownConfig, target: int, memo: dict):
    """Detour extension: walk a wrong branch, then insist it is dead.

    A candidate wrong branch is accepted only when no value along it equals
    the target and the values remaining at its end cannot reach the target
    at all, so the trace's claim of a dead end is literally true.
    """

    def extend(tree, branch_id, excluded, rng):
        node = tree.nodes[branch_id]
        candidates = [c for c in node.children
                      if c not in excluded and not tree.nodes[c].is_solution]
        rng.shuffle(candidates)
        for cand in candidates:
            wrong = [cand]
            values = list(tree.nodes[cand].payload)
            cursor = cand
            while len(wrong) < config.max_detour_depth and len(values) >= 2:
                moves = [m for m in legal_moves(values) if m[5] != target]
                if not moves:
                    break
                move = moves[rng.randrange(len(moves))]
                _, _, op, x, y, result, _ = move
                values = _apply_move(values, move)
                cursor = tree.add_node(
                    f"{x} {op} {y} = {result}.",
                    parent=cursor,
                    payload=tuple(values),
                )
                wrong.append(cursor)
            if not reachable(values, target, memo):
                return wrong
        return None

    return extend


class _CountdownVerbalizer(TraceVerbalizer):
    def __init__(self, answer: str):
        self.answer = answer

    def observation(self, detour: Detour, wrong_nodes) -> str:
        end_values = wrong_nodes[-1].payload
        return f"{end_values[-1]} is not the correct answer."

    def conclusion(self) -> str:
        return CONCLUSION


def make_trace(puzzle: CountdownPuzzle, k: int, rng: random.Random,
               config: CountdownConfig = DEFAULT_CONFIG,
               require_exact: bool = True):
    """Solve and linearize with exactly ``k`` backtracks.

    When the puzzle's tree cannot host k dead detours, raises
    GenerationError if ``require_exact`` (callers resample a fresh puzzle),
    otherwise returns the trace with the shortfall recorded in its meta.
    """
    tree, expr = solve_dfs(puzzle, config)
    path = solution_path(tree)
    memo: dict = {}
    plan = select_detours(
        tree, path, k, rng,
        extend_fn=_make_extend(config, puzzle.target, memo),
    )
    if plan.shortfall and require_exact:
        raise GenerationError(
            f"puzzle hosts {len(plan.detours)} of {k} requested detours"
        )
    trace = linearize(tree, path, plan.detours,
                      _CountdownVerbalizer(expr.render(puzzle.numbers)))
    if plan.shortfall:
        trace.meta["detour_shortfall"] = plan.shortfall
    return trace


# --- answer checking ---------------------------------------------------------

_AST_OPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/"}


class _BadExpression(Exception):
    pass


def parse_answer(text: str):
    """Parse an arithmetic expression into (value, number multiset).

    Only binary + - * / over positive integer literals are accepted; an
    equals sign, names, unary operators or anything else fails the parse.
    Returns None when the text is not a valid expression.
    """
    text = text.strip()
    if not text or "=" in text:
        return None
    try:
        node = ast.parse(text, mode="eval").body
    except (SyntaxError, ValueError):
        return None
    used: Counter = Counter()

    def walk(n) -> Fraction:
        if isinstance(n, ast.BinOp) and type(n.op) in _AST_OPS:
            a = walk(n.left)
            b = walk(n.right)
            op = _AST_OPS[type(n.op)]
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise _BadExpression
            return a / b
        if (isinstance(n, ast.Constant) and isinstance(n.value, int)
                and not isinstance(n.value, bool)):
            used[n.value] += 1
            return Fraction(n.value)
        raise _BadExpression

    try:
        value = walk(node)
    except _BadExpression:
        return None
    return value, used


def verify(puzzle: CountdownPuzzle, answer: str) -> bool:
    """True iff the answer evaluates to the target using each puzzle
    number at most once."""
    parsed = parse_answer(answer)
    if parsed is None:
        return False
    value, used = parsed
    if value != puzzle.target:
        return False
    available = Counter(puzzle.numbers)
    return all(available[num] >= cnt for num, cnt in used.items())


# --- instances ---------------------------------------------------------------

def format_prompt(puzzle: CountdownPuzzle) -> str:
    numbers = "[" + ", ".join(str(v) for v in puzzle.numbers) + "]"
    return PROMPT_TEMPLATE.format(numbers=numbers, target=puzzle.target)


def _instance(instance_id: int, seed: int, puzzle: CountdownPuzzle,
              ground_truth: str) -> ProblemInstance:
    return ProblemInstance(
        id=instance_id,
        task=TaskKind.COUNTDOWN,
        prompt=format_prompt(puzzle),
        ground_truth=ground_truth,
        seed=seed,
        meta={"numbers": list(puzzle.numbers), "target": puzzle.target},
    )


def puzzle_from_instance(instance: ProblemInstance) -> CountdownPuzzle:
    return CountdownPuzzle(tuple(instance.meta["numbers"]),
                           int(instance.meta["target"]))


def build_instance(instance_id: int, seed: int,
                   config: CountdownConfig = DEFAULT_CONFIG) -> ProblemInstance:
    rng = random.Random(seed)
    puzzle, _ = generate(rng, config)
    _, expr = solve_dfs(puzzle, config)
    return _instance(instance_id, seed, puzzle, expr.render(puzzle.numbers))


def build_traced(instance_id: int, seed: int, k: int,
                 config: CountdownConfig = DEFAULT_CONFIG):
    """Generate a puzzle whose trace carries exactly k backtracks.

    Resamples (with seeds derived from the instance seed) when a sampled
    puzzle cannot host k dead detours. Returns (instance, trace).
    """
    for attempt in range(config.max_trace_retries):
        rng = random.Random(derive_seed(seed, attempt))
        puzzle, _ = generate(rng, config)
        try:
            trace = make_trace(puzzle, k, rng, config)
        except (GenerationError, NoSolutionError):
            continue
        trace.meta["instance_id"] = instance_id
        return _instance(instance_id, seed, puzzle, trace.answer), trace
    raise GenerationError(
        f"no countdown puzzle hosting {k} backtracks after "
        f"{config.max_trace_retries} attempts (seed {seed:#018x})"
    )
