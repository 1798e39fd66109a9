"""Loop rewrites: quasi-invariant hoisting, fission, and their composition."""

import random
import textwrap

import pytest

from helpers import gen_inputs, load_corpus, user_store
from mwpflow.depgraph import NoSplit
from mwpflow.emit import emit
from mwpflow.interp import run
from mwpflow.parser import parse
from mwpflow.syntax import Block, ForCounted, While, iter_stmts
from mwpflow.transform import NothingToHoist, apply_all, fission_loop, hoist_loop


def corpus(name: str):
    return load_corpus(name)[0][1]


def loops_of(fn):
    return [s for s in iter_stmts(fn.body) if isinstance(s, (While, ForCounted))]


def transformed(prog, **kw):
    out, rewrites = apply_all(prog, **kw)
    return out, rewrites


def assert_emits(prog, expected: str):
    assert emit(prog) == textwrap.dedent(expected).lstrip("\n")


# ---------------------------------------------------------------------------
# Golden rewrites

def test_independent_array_loops_split_in_two():
    out, rewrites = transformed(corpus("fission_two_arrays"))
    assert [r.kind for r in rewrites] == ["fission"]
    assert_emits(
        out,
        """
        void main() {
            int a[10];
            int b[10];
            for (int i = 1; i < 10; i++) {
                a[i] = a[i - 1] + i;
            }
            for (int i = 1; i < 10; i++) {
                b[i] = b[i - 1] + i;
            }
        }
        """,
    )


def test_fully_settling_counted_loop_is_eliminated():
    out, rewrites = transformed(corpus("hoist_for_flat"))
    assert [r.kind for r in rewrites] == ["hoist"]
    # one guarded copy of the body; the counter jumps straight to its
    # exit value on either path
    assert_emits(
        out,
        """
        void main(int n, int c) {
            int t;
            int u;
            int i;
            t = 0;
            u = 0;
            if (0 < n) {
                t = c * c;
                u = t + c;
                i = n;
            } else {
                i = 0;
            }
        }
        """,
    )


def test_while_peel_keeps_residual_loop():
    out, rewrites = transformed(corpus("hoist_while_basic"))
    assert [r.kind for r in rewrites] == ["hoist"]
    assert_emits(
        out,
        """
        void main(int n, int x, int y) {
            int t;
            int s;
            int k;
            t = 0;
            s = 0;
            k = 0;
            if (k < n) {
                t = x + y;
                s = s + t;
                k = k + 1;
            }
            while (k < n) {
                s = s + t;
                k = k + 1;
            }
        }
        """,
    )


def test_second_degree_peels_nest():
    out, rewrites = transformed(corpus("hoist_for_deg2"))
    assert [r.kind for r in rewrites] == ["hoist"]
    # q needs two settled iterations (it reads p from the previous one),
    # so the peels nest and the residual loop starts two trips in
    assert_emits(
        out,
        """
        void main(int n, int c) {
            int p;
            int q;
            int s;
            int i;
            p = 0;
            q = 0;
            s = 0;
            if (0 < n) {
                q = p * p;
                p = c * c;
                s = s + q;
                if (0 + 1 < n) {
                    q = p * p;
                    s = s + q;
                    for (i = 0 + 2; i < n; i++) {
                        s = s + q;
                    }
                } else {
                    i = 0 + 1;
                }
            } else {
                i = 0;
            }
        }
        """,
    )


def test_while_fission_saves_and_restores_control():
    out, rewrites = transformed(corpus("fission_while_pair"))
    assert [r.kind for r in rewrites] == ["fission"]
    assert_emits(
        out,
        """
        void main(int n, int c, int d) {
            int x;
            int y;
            int k;
            int __fis0;
            x = 0;
            y = 0;
            k = 0;
            __fis0 = k;
            while (k < n) {
                x = x + c;
                k = k + 1;
            }
            k = __fis0;
            while (k < n) {
                y = y + d;
                k = k + 1;
            }
        }
        """,
    )


def test_hoist_then_fission_on_the_residual():
    out, rewrites = transformed(corpus("fission_after_hoist"))
    assert [r.kind for r in rewrites] == ["hoist", "fission"]
    assert_emits(
        out,
        """
        void main(int n, int c, int d) {
            int t;
            int a;
            int b;
            int k;
            int __fis0;
            t = 0;
            a = 0;
            b = 0;
            k = 0;
            if (k < n) {
                t = c * c;
                a = a + t;
                b = b + d;
                k = k + 1;
            }
            __fis0 = k;
            while (k < n) {
                a = a + t;
                k = k + 1;
            }
            k = __fis0;
            while (k < n) {
                b = b + d;
                k = k + 1;
            }
        }
        """,
    )


def test_inner_loop_hoists_before_outer():
    out, rewrites = transformed(corpus("hoist_inner_loop"))
    assert [r.kind for r in rewrites] == ["hoist", "hoist"]
    assert_emits(
        out,
        """
        void main(int n, int m, int c) {
            int x;
            int t;
            int k;
            int j;
            x = 0;
            t = 0;
            k = 0;
            if (k < n) {
                if (0 < m) {
                    t = c + c;
                    j = m;
                } else {
                    j = 0;
                }
                x = x + t;
                k = k + 1;
            }
            while (k < n) {
                x = x + t;
                k = k + 1;
            }
        }
        """,
    )


def test_unstable_init_steps_the_counter_explicitly():
    # The init reads x, which the body writes, so peels cannot substitute
    # concrete offsets; the counter is driven statement by statement.
    out, rewrites = transformed(corpus("fission_init_guard"))
    assert [r.kind for r in rewrites] == ["hoist"]
    assert_emits(
        out,
        """
        void main(int n, int x, int c) {
            int t;
            int i;
            t = 0;
            i = x;
            if (i < n) {
                x = x + 1;
                t = c * c;
                i = i + 1;
            }
            for (i = i; i < n; i++) {
                x = x + 1;
            }
        }
        """,
    )


# ---------------------------------------------------------------------------
# Direct rewrite calls

def test_hoist_report_contents():
    prog = corpus("hoist_while_deg2")
    fn = prog.function("main")
    loop = loops_of(fn)[0]
    sid = {s.target: s.sid for s in loop.body}
    replacement, report, residual = hoist_loop(loop, fn)
    assert report["kind"] == "hoist"
    assert report["max_degree"] == 2
    assert report["degrees"] == {
        str(sid["q"]): 2,
        str(sid["p"]): 1,
        str(sid["s"]): "inf",
        str(sid["k"]): "inf",
    }
    assert report["hoisted"] == sorted([sid["q"], sid["p"]])
    assert report["residual"] == [sid["s"], sid["k"]]
    assert replacement[-1] is residual
    assert isinstance(residual, While)
    assert [s.target for s in residual.body] == ["s", "k"]


def test_eliminated_loop_has_no_residual():
    prog = corpus("hoist_for_flat")
    fn = prog.function("main")
    replacement, report, residual = hoist_loop(loops_of(fn)[0], fn)
    assert residual is None
    assert len(replacement) == 1
    assert report["residual"] == []


def test_hoist_requires_a_settling_statement():
    prog = corpus("poly_sum")
    fn = prog.function("main")
    with pytest.raises(NothingToHoist):
        hoist_loop(loops_of(fn)[0], fn)


def test_fission_report_lists_groups_in_order():
    prog = corpus("fission_three_way")
    fn = prog.function("main")
    loop = loops_of(fn)[0]
    sid = {s.target: s.sid for s in loop.body}
    replacement, report = fission_loop(loop, fn)
    assert report["kind"] == "fission"
    assert report["groups"] == [[sid["s"]], [sid["t"]], [sid["u"]]]
    assert not report["pragma"]
    assert len(replacement) == 3
    assert all(isinstance(c, ForCounted) and c.counter == "i" for c in replacement)


def test_dependent_chain_refuses_to_split():
    prog = corpus("fission_chain")
    fn = prog.function("main")
    with pytest.raises(NoSplit):
        fission_loop(loops_of(fn)[0], fn)


def test_pragma_wrapping_marks_independent_splits():
    prog = corpus("fission_three_way")
    fn = prog.function("main")
    replacement, report = fission_loop(loops_of(fn)[0], fn, pragmas=True)
    assert report["pragma"]
    assert len(replacement) == 1 and isinstance(replacement[0], Block)
    assert replacement[0].pragmas == ("#pragma omp parallel sections",)
    assert all(c.pragmas == ("#pragma omp section",) for c in replacement[0].body)


def test_pragma_wrapping_skips_dependent_control():
    # a while split shares its counter across clones, so the clones are
    # ordered and never marked parallel
    prog = corpus("fission_while_pair")
    fn = prog.function("main")
    replacement, report = fission_loop(loops_of(fn)[0], fn, pragmas=True)
    assert not report["pragma"]
    assert not any(isinstance(s, Block) for s in replacement)


def test_pragma_output_emits_section_markers():
    out, _ = apply_all(corpus("fission_three_way"), pragmas=True)
    text = emit(out)
    assert text.count("#pragma omp parallel sections") == 1
    assert text.count("#pragma omp section\n") >= 3


# ---------------------------------------------------------------------------
# apply_all plumbing

def test_apply_all_leaves_the_input_alone():
    prog = corpus("fission_two_arrays")
    before = emit(prog)
    out, _ = apply_all(prog)
    assert emit(prog) == before
    assert out is not prog


def test_untransformable_program_is_returned_unchanged():
    prog = corpus("poly_sum")
    out, rewrites = apply_all(prog)
    assert rewrites == []
    assert emit(out) == emit(prog)


def test_flags_select_the_rewrites():
    prog = corpus("fission_after_hoist")
    _, only_hoist = apply_all(prog, fission=False)
    assert [r.kind for r in only_hoist] == ["hoist"]
    # without the hoist, t = c * c rides along in the first group
    _, only_fission = apply_all(prog, hoist=False)
    assert [r.kind for r in only_fission] == ["fission"]
    assert [len(g) for g in only_fission[0].report["groups"]] == [2, 1]
    _, both = apply_all(prog)
    assert [r.kind for r in both] == ["hoist", "fission"]
    assert [len(g) for g in both[1].report["groups"]] == [1, 1]


def test_rewrites_name_function_and_loop():
    prog = corpus("fission_while_pair")
    loop = loops_of(prog.function("main"))[0]
    _, rewrites = apply_all(prog)
    assert len(rewrites) == 1
    r = rewrites[0]
    assert r.function == "main"
    assert r.loop_span == loop.span
    assert r.report["loop_span"] == [loop.span.line, loop.span.col]


def test_sids_are_unique_after_rewriting():
    for name, prog in load_corpus():
        out, _ = apply_all(prog)
        sids = [
            s.sid for f in out.functions for s in iter_stmts(f.body)
        ]
        assert len(sids) == len(set(sids)), name


def test_transformed_text_reparses():
    for name, prog in load_corpus():
        out, _ = apply_all(prog)
        reparsed = parse(emit(out), name)
        assert emit(reparsed) == emit(out), name


# ---------------------------------------------------------------------------
# Behavioral equivalence

@pytest.mark.parametrize("name", [n for n, _ in load_corpus()])
def test_rewrites_preserve_final_stores(name):
    prog = load_corpus(name.removesuffix(".c"))[0][1]
    out, rewrites = apply_all(prog)
    fn = prog.function("main")
    rng = random.Random(hash(name) & 0xFFFF)
    cases = [gen_inputs(fn, rng) for _ in range(8)]
    cases += [gen_inputs(fn, rng, trips=t) for t in (0, 1, 2)]
    for inputs in cases:
        base = run(prog, inputs=dict(inputs))
        opt = run(out, inputs=dict(inputs))
        assert user_store(opt.store) == user_store(base.store), inputs


@pytest.mark.parametrize("name", [n for n, _ in load_corpus("hoist_")])
def test_hoisted_loops_cost_fewer_steps(name):
    prog = load_corpus(name.removesuffix(".c"))[0][1]
    out, rewrites = apply_all(prog)
    assert any(r.kind == "hoist" for r in rewrites)
    fn = prog.function("main")
    rng = random.Random(11)
    inputs = gen_inputs(fn, rng, trips=9)
    base = run(prog, inputs=dict(inputs))
    opt = run(out, inputs=dict(inputs))
    assert user_store(opt.store) == user_store(base.store)
    assert opt.steps < base.steps
