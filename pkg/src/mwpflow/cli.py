"""Command line interface.

Subcommands: analyze, bound, hoist, fission, interp, depgraph, probe.
Results go to stdout; diagnostics go to stderr as `file:line:col: message`.
Exit codes: 0 success, 1 runtime or internal error, 2 parse or validation
error, 3 when --strict finds a function with no feasible assignment.
Output is deterministic: running a command twice produces identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .analysis import AnalysisResult, analyze_program
from .algebra import matrix_to_obj
from .depgraph import build_dep_graph, control_kernel
from .emit import emit, emit_stmt
from .interp import InterpError, classify_growth, growth_probe, run
from .parser import FrontendError, parse
from .syntax import ForCounted, FunctionDef, Program, Stmt, While, iter_stmts
from .transform import apply_all


def _read_program(path: str) -> Program:
    text = Path(path).read_text()
    return parse(text, path)


class _UnknownFunction(Exception):
    def __init__(self, path: str, name: str):
        super().__init__(f"{path}: no function named {name!r}")


def _functions(program: Program, name: Optional[str]) -> list[FunctionDef]:
    if name is None:
        return list(program.functions)
    fn = program.function(name)
    if fn is None:
        raise _UnknownFunction(program.path, name)
    return [fn]


# ---------------------------------------------------------------------------
# analyze / bound


def _feasible_text(result: AnalysisResult) -> str:
    fs = result.feasible
    if fs.is_empty:
        return "none"
    if fs.all_free:
        return f"all assignments ({result.choice_count} choice point(s) free)"
    pts = ", ".join(str(i) for i in fs.constrained)
    text = f"{len(fs.assignments)} assignment(s) over constrained point(s) {pts}"
    if fs.truncated:
        text += " (truncated)"
    return text


def _bounds_obj(result: AnalysisResult) -> object:
    if result.bounds is None:
        return "none"
    out = {}
    for v in result.bounds.targets:
        out[v] = {
            "m": list(result.bounds.m_set[v]),
            "w": list(result.bounds.w_set[v]),
            "p": list(result.bounds.p_set[v]),
            "bound": result.bounds.render(v),
        }
    return out


def _analysis_obj(result: AnalysisResult) -> dict:
    obj = {
        "function": result.function,
        "vars": list(result.vars),
        "matrix": matrix_to_obj(result.matrix),
        "choice_points": result.choice_count,
        "feasible": result.feasible.to_obj(),
        "bounds": _bounds_obj(result),
    }
    if result.feasible.truncated:
        obj["feasible_truncated"] = True
    return obj


def _print_json(objs: list[dict]) -> None:
    payload: object = objs[0] if len(objs) == 1 else objs
    print(json.dumps(payload, indent=2))


def cmd_analyze(args) -> int:
    code = 0
    strict_hit = False
    objs: list[dict] = []
    for path in args.files:
        try:
            program = _read_program(path)
            analysis = analyze_program(program)
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        for fn in _functions(program, args.function):
            result = analysis.results[fn.name]
            if result.feasible.is_empty:
                strict_hit = True
            if args.format == "json":
                objs.append(_analysis_obj(result))
                continue
            print(f"== {fn.name} ({path}:{fn.span.line}:{fn.span.col})")
            print("vars: " + ", ".join(result.vars))
            print(f"choice points: {result.choice_count}")
            print("feasible: " + _feasible_text(result))
            print("matrix:")
            print(result.matrix.pretty())
            if result.bounds is not None:
                print("bounds:")
                for line in result.bounds.lines():
                    print("  " + line)
            print()
    if args.format == "json" and objs:
        _print_json(objs)
    if code:
        return code
    if args.strict and strict_hit:
        return 3
    return 0


def cmd_bound(args) -> int:
    code = 0
    objs: list[dict] = []
    for path in args.files:
        try:
            program = _read_program(path)
            analysis = analyze_program(program)
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        for fn in _functions(program, args.function):
            result = analysis.results[fn.name]
            if args.format == "json":
                sigma = result.feasible.to_obj()
                first = sigma[0] if isinstance(sigma, list) else "none"
                objs.append(
                    {
                        "function": fn.name,
                        "sigma": first,
                        "bounds": (
                            "none"
                            if result.bounds is None
                            else {v: result.bounds.render(v) for v in result.bounds.targets}
                        ),
                    }
                )
                continue
            print(f"== {fn.name} ({path}:{fn.span.line}:{fn.span.col})")
            if result.bounds is None:
                print("no feasible choice assignment")
            else:
                for line in result.bounds.lines():
                    print(line)
            print()
    if args.format == "json" and objs:
        _print_json(objs)
    return code


# ---------------------------------------------------------------------------
# hoist / fission


def _cmd_rewrite(args, do_hoist: bool, do_fission: bool) -> int:
    code = 0
    for path in args.files:
        try:
            program = _read_program(path)
            rewritten, rewrites = apply_all(
                program,
                hoist=do_hoist,
                fission=do_fission,
                pragmas=getattr(args, "pragma", False),
            )
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        if args.format == "json":
            _print_json(
                [
                    {
                        "file": path,
                        "program": emit(rewritten),
                        "rewrites": [
                            {"function": r.function, **r.report} for r in rewrites
                        ],
                    }
                ]
            )
        else:
            sys.stdout.write(emit(rewritten))
    return code


def cmd_hoist(args) -> int:
    return _cmd_rewrite(args, do_hoist=True, do_fission=False)


def cmd_fission(args) -> int:
    return _cmd_rewrite(args, do_hoist=False, do_fission=True)


# ---------------------------------------------------------------------------
# interp


def _parse_inputs(specs: list[str], arrays: list[str]) -> dict:
    out: dict = {}
    for spec in specs:
        for pair in spec.split(","):
            if not pair.strip():
                continue
            name, eq, value = pair.partition("=")
            if not eq:
                raise ValueError(f"input {pair!r} is not name=value")
            out[name.strip()] = int(value)
    for spec in arrays:
        name, eq, values = spec.partition("=")
        if not eq:
            raise ValueError(f"array {spec!r} is not name=v1,v2,...")
        out[name.strip()] = [int(v) for v in values.split(",") if v.strip() != ""]
    return out


def _store_obj(store: dict) -> dict:
    return {k: v for k, v in sorted(store.items())}


def cmd_interp(args) -> int:
    code = 0
    objs: list[dict] = []
    for path in args.files:
        try:
            program = _read_program(path)
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        try:
            inputs = _parse_inputs(args.input, args.array)
            result = run(program, args.function or "main", inputs, fuel=args.fuel)
        except (InterpError, ValueError) as e:
            if isinstance(e, InterpError):
                print(e.render(path), file=sys.stderr)
            else:
                print(f"{path}: {e}", file=sys.stderr)
            return 1
        if args.format == "json":
            objs.append(
                {
                    "file": path,
                    "steps": result.steps,
                    "store": _store_obj(result.store),
                    "max_abs": _store_obj(result.max_abs),
                }
            )
        else:
            print(f"steps: {result.steps}")
            for name, value in sorted(result.store.items()):
                print(f"{name} = {value}")
    if args.format == "json" and objs:
        _print_json(objs)
    return code


# ---------------------------------------------------------------------------
# depgraph


def _stmt_label(s: Stmt) -> str:
    lines: list[str] = []
    emit_stmt(s, 0, lines)
    first = lines[0].strip() if lines else "?"
    if len(first) > 40:
        first = first[:37] + "..."
    return f"{s.span.line}:{s.span.col} {first}"


def _loops_of(fn: FunctionDef) -> list[While | ForCounted]:
    return [s for s in iter_stmts(fn.body) if isinstance(s, (While, ForCounted))]


def cmd_depgraph(args) -> int:
    code = 0
    objs: list[dict] = []
    for path in args.files:
        try:
            program = _read_program(path)
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        for fn in _functions(program, args.function):
            for loop in _loops_of(fn):
                graph = build_dep_graph(loop.body)
                kernel = control_kernel(loop)
                if args.format == "dot":
                    name = f"{fn.name}_loop_{loop.span.line}_{loop.span.col}"
                    print(f'digraph "{name}" {{')
                    print(f'    label="{fn.name}: loop at {loop.span}";')
                    print("    node [shape=box];")
                    for sid in graph.nodes:
                        shape = ' style="bold"' if sid in kernel else ""
                        print(f'    s{sid} [label="{_stmt_label(graph.stmts[sid])}"{shape}];')
                    for e in graph.edges:
                        carried = "true" if e.carried else "false"
                        print(
                            f'    s{e.src} -> s{e.dst} '
                            f'[label="{e.kind}", carried="{carried}"];'
                        )
                    print("}")
                elif args.format == "json":
                    objs.append(
                        {
                            "function": fn.name,
                            "loop_span": [loop.span.line, loop.span.col],
                            "nodes": list(graph.nodes),
                            "kernel": sorted(kernel),
                            "edges": [
                                {
                                    "src": e.src,
                                    "dst": e.dst,
                                    "kind": e.kind,
                                    "carried": e.carried,
                                    "vars": sorted(e.vars),
                                }
                                for e in graph.edges
                            ],
                        }
                    )
                else:
                    print(f"== {fn.name}: loop at {loop.span} ({path})")
                    for sid in graph.nodes:
                        mark = " [kernel]" if sid in kernel else ""
                        print(f"  s{sid}: {_stmt_label(graph.stmts[sid])}{mark}")
                    for e in graph.edges:
                        carried = " carried" if e.carried else ""
                        shared = ",".join(sorted(e.vars))
                        print(f"  s{e.src} -> s{e.dst} {e.kind}{carried} ({shared})")
                    print()
    if args.format == "json" and objs:
        _print_json(objs)
    return code


# ---------------------------------------------------------------------------
# probe


def cmd_probe(args) -> int:
    code = 0
    objs: list[dict] = []
    for path in args.files:
        try:
            program = _read_program(path)
        except FrontendError as e:
            print(e.render(path), file=sys.stderr)
            code = 2
            continue
        scales = tuple(int(s) for s in args.scales.split(","))
        try:
            table = growth_probe(program, args.function or "main", scales, fuel=args.fuel)
        except InterpError as e:
            print(e.render(path), file=sys.stderr)
            return 1
        label = classify_growth(table)
        stem = Path(path).stem
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{stem}_growth.csv"
        png_path = out_dir / f"{stem}_growth.png"
        csv_path.write_text("\n".join(table.csv_lines()) + "\n")
        _write_probe_figure(table, stem, png_path)
        if args.format == "json":
            objs.append(
                {
                    "file": path,
                    "entry": table.entry,
                    "scales": list(table.scales),
                    "rows": {k: list(v) for k, v in sorted(table.rows.items())},
                    "classification": label,
                    "csv": str(csv_path),
                    "png": str(png_path),
                }
            )
        else:
            print(f"== {table.entry} ({path})")
            for line in table.csv_lines():
                print(line)
            print(f"classification: {label}")
            print(f"wrote {csv_path}")
            print(f"wrote {png_path}")
    if args.format == "json" and objs:
        _print_json(objs)
    return code


def _write_probe_figure(table, stem: str, png_path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(table.rows):
        ax.loglog(table.scales, [max(1, v) for v in table.rows[name]], marker="o", label=name)
    ax.set_xlabel("input scale")
    ax.set_ylabel("peak |value|")
    ax.set_title(f"{stem}: growth probe")
    ax.grid(True, which="both", alpha=0.3)
    if table.rows:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=100, metadata={"Software": "mwpflow"})
    plt.close(fig)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sp, formats=("text", "json")) -> None:
    sp.add_argument("files", nargs="+", help="source files of the supported C subset")
    sp.add_argument("--format", choices=formats, default=formats[0])
    sp.add_argument("--function", help="restrict to one function (interp/probe: the entry)")


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mwpflow",
        description="Certify polynomial growth and rewrite loops for a C subset.",
    )
    p.add_argument("--seed", type=int, default=0, help="reserved for reproducibility")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="flow matrices, feasibility, bounds")
    _add_common(sp)
    sp.add_argument("--strict", action="store_true", help="exit 3 when a function has no feasible assignment")
    sp.set_defaults(handler=cmd_analyze)

    sp = sub.add_parser("bound", help="growth bounds per variable")
    _add_common(sp)
    sp.set_defaults(handler=cmd_bound)

    sp = sub.add_parser("hoist", help="peel quasi-invariant statements out of loops")
    _add_common(sp)
    sp.set_defaults(handler=cmd_hoist)

    sp = sub.add_parser("fission", help="split loops into independent pieces")
    _add_common(sp)
    sp.add_argument("--pragma", action="store_true", help="wrap independent pieces in omp section pragmas")
    sp.set_defaults(handler=cmd_fission)

    sp = sub.add_parser("interp", help="run a function with concrete inputs")
    _add_common(sp)
    sp.add_argument("--fuel", type=int, default=10**6)
    sp.add_argument("--input", "-i", action="append", default=[], help="x=3,y=4 scalar inputs (repeatable)")
    sp.add_argument("--array", "-a", action="append", default=[], help="a=0,0,0 array contents (repeatable)")
    sp.set_defaults(handler=cmd_interp)

    sp = sub.add_parser("depgraph", help="dependence graphs of loop bodies")
    _add_common(sp, formats=("dot", "text", "json"))
    sp.set_defaults(handler=cmd_depgraph)

    sp = sub.add_parser("probe", help="measure growth at geometric input scales; writes csv and png")
    _add_common(sp)
    sp.add_argument("--scales", default="4,8,16,32,64")
    sp.add_argument("--fuel", type=int, default=10**7)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(handler=cmd_probe)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.handler(args)
    except _UnknownFunction as e:
        print(str(e), file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
