import random

import pytest
from helpers import sudoku_grid_valid, sudoku_solutions

from traceforge import sudoku as sd
from traceforge.core import (
    BacktrackMarker,
    MultipleSolutionsError,
    NoSolutionError,
    Step,
    derive_seed,
    extract_tags,
    render_completion,
)
from traceforge.search import solution_path, strip_detours


def sample_puzzles(n, master=808):
    for i in range(n):
        yield sd.generate(random.Random(derive_seed(master, i)))


def no_solution_grid():
    # row 0 needs a 9 in its last cell, but column 8 already has one
    grid = [0] * 81
    for c in range(8):
        grid[c] = c + 1
    grid[9 + 8] = 9
    return grid


# --- generation --------------------------------------------------------------


def test_generate_full_is_valid_grid():
    for i in range(5):
        grid = sd.generate_full(random.Random(i))
        assert sudoku_grid_valid(grid)


def test_generate_full_varies_with_seed():
    assert sd.generate_full(random.Random(1)) != sd.generate_full(random.Random(2))


def test_dig_holes_keeps_unique_solution():
    for puzzle in sample_puzzles(8):
        sols = sudoku_solutions(puzzle.givens, limit=2)
        assert len(sols) == 1
        assert sols[0] == puzzle.solution
        assert sudoku_grid_valid(puzzle.solution)


def test_dig_holes_givens_agree_with_solution():
    for puzzle in sample_puzzles(5):
        blanks = 0
        for given, solved in zip(puzzle.givens, puzzle.solution):
            if given == 0:
                blanks += 1
            else:
                assert given == solved
        assert blanks == puzzle.blanks
        lo, hi = sd.DEFAULT_CONFIG.blank_range
        assert lo <= puzzle.blanks <= hi


def test_dig_holes_rejects_out_of_range_request():
    grid = sd.generate_full(random.Random(3))
    with pytest.raises(ValueError):
        sd.dig_holes(grid, 99, random.Random(0))


def test_golden_instance_frozen():
    inst = sd.build_instance(0, 777)
    assert inst.meta["givens"] == (
        "710065900250009000090108072020000600806002040900300800"
        "580023010167080050300650090"
    )
    assert inst.meta["solution"] == (
        "713265984258479361694138572425817639836592147971346825"
        "589723416167984253342651798"
    )
    assert inst.meta["blanks"] == 45


# --- solving and counting ----------------------------------------------------


def test_count_solutions_on_generated_puzzles():
    for puzzle in sample_puzzles(6):
        assert sd.count_solutions(puzzle.givens, limit=2) == 1


def test_count_solutions_empty_grid_hits_limit():
    assert sd.count_solutions([0] * 81, limit=2) == 2
    assert sd.count_solutions([0] * 81, limit=5) == 5


def test_count_solutions_conflicting_givens():
    grid = [0] * 81
    grid[0] = grid[1] = 7  # same row
    assert sd.count_solutions(grid) == 0


def test_count_solutions_unsatisfiable_cell():
    assert sd.count_solutions(no_solution_grid()) == 0


def test_solve_grid_agrees_with_naive_solver():
    for puzzle in sample_puzzles(6):
        assert sd.solve_grid(puzzle.givens) == puzzle.solution
        assert sudoku_solutions(puzzle.givens, limit=1)[0] == puzzle.solution


def test_solve_grid_none_when_unsolvable():
    assert sd.solve_grid(no_solution_grid()) is None


def test_from_givens_validates():
    puzzle = next(iter(sample_puzzles(1)))
    wrapped = sd.from_givens(puzzle.givens)
    assert wrapped.solution == puzzle.solution
    with pytest.raises(MultipleSolutionsError):
        sd.from_givens([0] * 81)
    with pytest.raises(NoSolutionError):
        sd.from_givens(no_solution_grid())


def test_solve_dfs_path_is_row_major():
    puzzle = next(iter(sample_puzzles(1)))
    tree, solution = sd.solve_dfs(puzzle)
    assert solution == puzzle.solution
    path = solution_path(tree)
    empties = [i for i in range(81) if puzzle.givens[i] == 0]
    assert len(path) == len(empties) + 1
    grid = list(puzzle.givens)
    for cell, nid in zip(empties, path[1:]):
        node = tree.node(nid)
        grid[cell] = puzzle.solution[cell]
        assert node.payload == tuple(grid)
        r, c = divmod(cell, 9)
        assert node.state_text == (
            f"place {puzzle.solution[cell]} at row {r + 1}, column {c + 1}."
        )


def test_solve_dfs_children_are_ascending_candidates():
    puzzle = next(iter(sample_puzzles(1)))
    tree, _ = sd.solve_dfs(puzzle)
    path = solution_path(tree)
    for nid in path[:-1]:
        digits = [int(tree.node(c).state_text.split()[1])
                  for c in tree.node(nid).children]
        assert digits == sorted(digits)
        assert len(set(digits)) == len(digits)


def test_solve_dfs_validate_flag():
    with pytest.raises(MultipleSolutionsError):
        sd.solve_dfs(sd.SudokuPuzzle(tuple([0] * 81), tuple([0] * 81), 81),
                     validate=True)


# --- traces ------------------------------------------------------------------


@pytest.mark.parametrize("k", [0, 1, 5, 10])
def test_trace_marker_count_is_exact(k):
    inst, trace = sd.build_traced(2, derive_seed(17, 2), k)
    markers = [ev for ev in trace.events if isinstance(ev, BacktrackMarker)]
    assert len(markers) == k
    assert trace.backtracks == k


def test_trace_answer_is_solution_grid():
    inst, trace = sd.build_traced(0, derive_seed(19, 0), 5)
    puzzle = sd.puzzle_from_instance(inst)
    assert sd.verify(puzzle, trace.answer)
    assert trace.answer == sd.render_grid(puzzle.solution)


def test_trace_observation_names_a_cell():
    _, trace = sd.build_traced(1, derive_seed(23, 1), 5)
    for ev in trace.events:
        if isinstance(ev, BacktrackMarker):
            assert ("cannot go in row" in ev.text
                    or "no digit that can go in row" in ev.text)


def test_trace_wrong_steps_use_solver_vocabulary():
    _, trace = sd.build_traced(3, derive_seed(29, 3), 5)
    for ev in trace.events:
        if isinstance(ev, Step):
            assert ev.text.startswith("place ")


def test_strip_detours_matches_plain_build():
    for k in (1, 5, 10):
        inst, trace = sd.build_traced(0, derive_seed(31, 0), k)
        puzzle = sd.puzzle_from_instance(inst)
        plain = sd.make_trace(puzzle, 0, random.Random(0))
        assert render_completion(strip_detours(trace)) == render_completion(plain)


def test_trace_completion_is_well_formed():
    _, trace = sd.build_traced(5, derive_seed(37, 5), 1)
    tags = extract_tags(render_completion(trace))
    assert tags.well_formed


def test_build_traced_deterministic():
    a = sd.build_traced(4, derive_seed(41, 4), 5)
    b = sd.build_traced(4, derive_seed(41, 4), 5)
    assert a[0] == b[0]
    assert render_completion(a[1]) == render_completion(b[1])


# --- answers -----------------------------------------------------------------


def test_render_parse_roundtrip():
    puzzle = next(iter(sample_puzzles(1)))
    text = sd.render_grid(puzzle.solution)
    assert sd.parse_answer(text) == puzzle.solution


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t.replace(" ", ", "),          # commas between digits
        lambda t: t.replace("\n", " ", 1),        # eight lines
        lambda t: t[:-1] + "0",                   # zero digit
        lambda t: t + "\n1 2 3 4 5 6 7 8 9",      # ten lines
        lambda t: t.replace(" ", "", 4),          # fused digits
        lambda t: "",
    ],
)
def test_parse_answer_rejects(mutate):
    puzzle = next(iter(sample_puzzles(1)))
    text = mutate(sd.render_grid(puzzle.solution))
    assert sd.parse_answer(text) is None


def test_parse_answer_tolerates_surrounding_whitespace():
    puzzle = next(iter(sample_puzzles(1)))
    text = "\n " + sd.render_grid(puzzle.solution) + " \n"
    assert sd.parse_answer(text) == puzzle.solution


def test_verify_rejects_wrong_grid():
    puzzle = next(iter(sample_puzzles(1)))
    wrong = list(puzzle.solution)
    wrong[0], wrong[1] = wrong[1], wrong[0]
    assert not sd.verify(puzzle, sd.render_grid(wrong))
