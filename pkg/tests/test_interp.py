"""Concrete execution: stores, step counts, fuel, peaks, growth probing."""

import pytest

from helpers import CORPUS, load_corpus
from mwpflow.interp import (
    FuelExhausted,
    IndexOutOfBounds,
    InputMismatch,
    UninitializedRead,
    classify_growth,
    growth_probe,
    run,
)
from mwpflow.parser import parse


def program(name: str):
    return parse((CORPUS / name).read_text(), name)


# ---------------------------------------------------------------------------
# Stores and step counting

def test_straight_line_steps_and_store():
    prog = parse("void main() { int a = 1; int b = 2; b = a + b; }")
    result = run(prog)
    assert result.steps == 3
    assert result.store == {"a": 1, "b": 3}


def test_loop_steps_scale_with_trips():
    prog = program("poly_sum.c")
    assert run(prog, inputs={"n": 5, "x": 2}).steps == 1 + 5
    assert run(prog, inputs={"n": 0, "x": 2}).steps == 1


def test_counter_exit_value():
    prog = program("poly_sum.c")
    assert run(prog, inputs={"n": 7, "x": 3}).store["i"] == 7
    assert run(prog, inputs={"n": -4, "x": 3}).store["i"] == 0
    assert run(prog, inputs={"n": -4, "x": 3}).store["s"] == 0


def test_accumulator_value():
    prog = program("poly_sum.c")
    assert run(prog, inputs={"n": 9, "x": -5}).store["s"] == -45


def test_parameters_default_to_zero():
    prog = parse("void main(int x) { int y = x + 1; }")
    assert run(prog).store == {"x": 0, "y": 1}


def test_branch_statements_cost_nothing_extra():
    prog = parse(
        "void main(int x) { int s = 0; if (x < 0) { s = 1; } else { s = 2; } }"
    )
    result = run(prog, inputs={"x": -3})
    assert result.steps == 2
    assert result.store["s"] == 1


def test_max_abs_tracks_peaks_not_finals():
    prog = parse("void main() { int x = 100; x = 1; }")
    result = run(prog)
    assert result.store["x"] == 1
    assert result.max_abs["x"] == 100


def test_exact_doubling_is_exact():
    prog = program("exp_double_for.c")
    assert run(prog, inputs={"n": 64, "y": 1}).store["y"] == 2**64


@pytest.mark.parametrize("n,peak", [(4, 16), (8, 256), (16, 65536)])
def test_doubling_peaks(n, peak):
    prog = program("exp_double_for.c")
    assert run(prog, inputs={"n": n, "y": 1}).max_abs["y"] == peak


# ---------------------------------------------------------------------------
# Inputs

def test_locals_and_arrays_seedable():
    prog = parse(
        "void main(int n) { int s; int a[3]; s = s + a[0] + a[2]; }"
    )
    result = run(prog, inputs={"s": 5, "a": [1, 2, 3]})
    assert result.store["s"] == 9


def test_array_length_from_parameter():
    prog = parse(
        "void main(int n) { int a[n]; int s = 0;"
        " for (int i = 0; i < n; i++) { s = s + a[i]; } }"
    )
    assert run(prog, inputs={"n": 3, "a": [4, 5, 6]}).store["s"] == 15


def test_wrong_array_length_rejected():
    prog = parse("void main() { int a[3]; a[0] = 1; }")
    with pytest.raises(InputMismatch):
        run(prog, inputs={"a": [1, 2]})


def test_unknown_input_rejected():
    prog = parse("void main(int x) { x = 1; }")
    with pytest.raises(InputMismatch):
        run(prog, inputs={"nope": 3})


def test_negative_symbolic_array_length_rejected():
    prog = parse("void main(int n) { int a[n]; a[0] = 1; }")
    with pytest.raises(InputMismatch):
        run(prog, inputs={"n": -1})


# ---------------------------------------------------------------------------
# Runtime faults

def test_uninitialized_scalar_read():
    prog = parse("void main() { int s; int t = s + 1; }")
    with pytest.raises(UninitializedRead):
        run(prog)


def test_uninitialized_array_cell_read():
    prog = parse("void main() { int a[4]; a[1] = 2; int t = a[0]; }")
    with pytest.raises(UninitializedRead):
        run(prog)


def test_index_out_of_bounds():
    prog = parse("void main(int n) { int a[3]; a[n] = 1; }")
    with pytest.raises(IndexOutOfBounds):
        run(prog, inputs={"n": 5})
    with pytest.raises(IndexOutOfBounds):
        run(prog, inputs={"n": -1})


def test_fuel_exhaustion_on_divergence():
    prog = parse("void main(int x) { while (x < 1) { } }")
    with pytest.raises(FuelExhausted):
        run(prog, inputs={"x": 0}, fuel=100)


def test_fuel_counts_loop_iterations_not_only_steps():
    prog = parse("void main(int n) { for (int i = 0; i < n; i++) { } }")
    with pytest.raises(FuelExhausted):
        run(prog, inputs={"n": 10**7}, fuel=1000)


# ---------------------------------------------------------------------------
# Calls

def test_call_computes_and_costs_one_step():
    prog = program("misc_helper_call.c")
    result = run(prog, inputs={"y": 6})
    assert result.store["z"] == 37
    # z = sq(y), z = z + 1 at top level; r = x * x and the return inside
    assert result.steps == 4


def test_recursive_sum_closed_form():
    prog = program("misc_recurse_acc.c")
    assert run(prog, inputs={"n": 10}).store["z"] == 55
    assert run(prog, inputs={"n": 0}).store["z"] == 0


def test_recursion_under_fuel():
    prog = program("misc_recurse_acc.c")
    with pytest.raises(FuelExhausted):
        run(prog, inputs={"n": 10**6}, fuel=500)


# ---------------------------------------------------------------------------
# Growth probing

def test_probe_table_shape():
    table = growth_probe(program("poly_sum.c"), scales=(4, 8, 16))
    assert table.scales == (4, 8, 16)
    assert set(table.rows) >= {"s", "x", "n"}
    lines = table.csv_lines()
    assert lines[0].startswith("scale,")
    assert len(lines) == 4


def test_probe_rows_are_monotone_scales():
    table = growth_probe(program("poly_nested_sum.c"), scales=(4, 8, 16, 32))
    assert table.rows["s"] == [4**3, 8**3, 16**3, 32**3]


@pytest.mark.parametrize(
    "name,label",
    [
        ("poly_sum.c", "polynomial"),
        ("poly_cascade.c", "polynomial"),
        ("exp_double_for.c", "superpolynomial"),
        ("exp_prod_acc.c", "superpolynomial"),
    ],
)
def test_probe_classification(name, label):
    assert classify_growth(growth_probe(program(name))) == label
