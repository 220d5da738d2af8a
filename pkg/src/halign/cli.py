"""Command-line front end.

Exit codes: 0 success, 1 infeasible alignment or failed validation,
2 bad input (unreadable file, malformed JSON, bad option).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import fields
from typing import Any

import numpy as np

from . import __version__, dfo, report
from .bilevel import (
    BaselineInfeasible,
    OptimizationReport,
    alignment_from_dict,
    baseline_alignment,
    evaluate_alignment,
    optimize,
)
from .geometry import Alignment, GeometryError
from .render import RenderSpec, render_svg
from .synth import FAMILIES, SynthSpec, synth_corridor
from .terrain import Corridor, CorridorError, load_corridor

log = logging.getLogger("halign")

SCHEMA_VERSION = 1

OK, FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    """Anything wrong with the user's files or flags; maps to exit code 2."""


# -- input helpers -----------------------------------------------------------

def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path: str) -> Any:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} col {exc.colno} ({exc.msg})") from None


def read_corridor_file(path: str) -> Corridor:
    try:
        return load_corridor(_read_text(path))
    except CorridorError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_alignment_file(path: str) -> Alignment:
    """An alignment file, or optimize output: the first report's ``best`` is used."""
    data = _read_json(path)
    if isinstance(data, dict) and data.get("reports"):
        data = data["reports"][0]
    if isinstance(data, dict) and "best" in data:
        data = data["best"]
    try:
        return alignment_from_dict(data)
    except (GeometryError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None


SEARCH_KEYS = {f.name for f in fields(dfo.SearchConfig)}
CONFIG_KEYS = SEARCH_KEYS | {"solver", "runs", "render"}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise InputError(f"{path}: unknown config key(s) {sorted(unknown)}")
    return data


def search_config(conf: dict, seed: int | None) -> dfo.SearchConfig:
    kw = {k: v for k, v in conf.items() if k in SEARCH_KEYS}
    if "scale" in kw and kw["scale"] is not None:
        kw["scale"] = tuple(float(v) for v in kw["scale"])
    if seed is not None:
        kw["seed"] = seed
    try:
        return dfo.SearchConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad search config: {exc}") from None


def render_spec(conf: dict) -> RenderSpec:
    try:
        return RenderSpec.from_dict(conf.get("render", {}))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad render config: {exc}") from None


# -- output helpers ----------------------------------------------------------

def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _say(args, text: str = "") -> None:
    if not args.quiet:
        print(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _figures_dir(args) -> str | None:
    return getattr(args, "figures", None)


# -- commands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    corridor = read_corridor_file(args.corridor)
    base = baseline_alignment(corridor)
    out = evaluate_alignment(corridor, base)
    rep = out.report
    doc = {"schema_version": SCHEMA_VERSION, "command": "validate", **rep.to_dict()}
    if out.feasible:
        doc["baseline_cost"] = out.cost
    if args.out:
        _write(args.out, _json(doc))
    if rep.feasible:
        _say(args, f"ok: {corridor.n_stations} stations, {corridor.n - 2} intersection points; "
                   f"baseline feasible, cost {out.cost:.6g}")
        return OK
    _say(args, f"invalid: baseline alignment fails ({', '.join(rep.reasons)})")
    if rep.build_error:
        _say(args, f"  path: {rep.build_error}")
    for c in rep.containment:
        flag = "" if c.inside else "  <-- outside"
        t = "none" if c.t is None else f"{c.t:.4f}"
        _say(args, f"  station {c.station:3d}  t = {t}{flag}")
    return FAILED


def _solution_doc(out) -> dict:
    doc: dict[str, Any] = {"feasible": out.feasible, "cost": out.cost, "reasons": out.reason}
    if out.solution is not None:
        doc["summary"] = out.solution.summary()
        doc["stations"] = [
            {"station": c.station, "t": c.t, "chainage": c.chainage, "ground": float(h),
             "offset": float(u)}
            for c, h, u in zip(out.report.containment, out.problem.ground, out.solution.offsets)
        ]
    return doc


def cmd_evaluate(args) -> int:
    corridor = read_corridor_file(args.corridor)
    alignment = read_alignment_file(args.alignment)
    if alignment.n != corridor.n:
        raise InputError(f"alignment has {alignment.n} points, corridor expects {corridor.n}")
    out = evaluate_alignment(corridor, alignment)
    doc = {"schema_version": SCHEMA_VERSION, "command": "evaluate", **_solution_doc(out)}
    if args.out:
        _write(args.out, _json(doc))
    if not out.feasible:
        _say(args, f"infeasible ({out.reason})")
        return FAILED
    _say(args, f"cost {out.cost:.6g}")
    for k, v in out.solution.summary().items():
        _say(args, f"  {k:16s} {v:.6g}" if isinstance(v, float) else f"  {k:16s} {v}")
    figs = _figures_dir(args)
    if figs:
        from . import plotting

        plotting.profile_figure(out.problem, out.solution, os.path.join(figs, "profile.png"))
        plotting.plan_figure(corridor, [("alignment", alignment)], os.path.join(figs, "plan.png"))
    return OK


def _run(corridor, cfg, solver, seed, name) -> OptimizationReport:
    rep, _ = optimize(corridor, cfg, solver, seed=seed, name=name)
    log.info("%s %s seed=%s: %.6g -> %.6g in %d evaluations (%d inner solves, %.1f s)",
             name, solver, seed, rep.initial_cost, rep.optimized_cost, rep.evaluations,
             rep.inner_solves, rep.wall_clock)
    return rep


def cmd_optimize(args) -> int:
    corridor = read_corridor_file(args.corridor)
    conf = load_config(args.config)
    solver = args.solver or conf.get("solver", "det")
    if solver not in ("det", "stoch"):
        raise InputError(f"unknown solver {solver!r}")
    runs = args.runs if args.runs is not None else int(conf.get("runs", 1))
    if runs < 1:
        raise InputError("runs must be >= 1")
    cfg = search_config(conf, args.seed)
    name = args.name or os.path.splitext(os.path.basename(args.corridor))[0]
    try:
        if solver == "det":
            reports = [_run(corridor, cfg, "det", None, name)]
            comparison = None
        else:
            det = _run(corridor, cfg, "det", None, name)
            stoch = [_run(corridor, cfg, "stoch", cfg.seed + k, name) for k in range(runs)]
            reports = [det, *stoch]
            comparison = report.compare(det, stoch, name)
    except BaselineInfeasible as exc:
        log.error("%s", exc)
        return FAILED

    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "command": "optimize",
                           "reports": [r.to_dict() for r in reports]}
    if comparison is not None:
        doc["comparison"] = [r.to_dict() for r in comparison]
    if args.out:
        _write(args.out, _json(doc))
    _say(args, report.summary_table(reports))
    if comparison is not None:
        _say(args)
        _say(args, report.comparison_table(comparison))

    base = baseline_alignment(corridor)
    drawn = [("baseline", base)] + [
        (r.solver if r.seed is None else f"{r.solver}-{r.seed}", r.best) for r in reports if r.best is not None
    ]
    if args.svg:
        _write(args.svg, render_svg(corridor, drawn, render_spec(conf)))
    figs = _figures_dir(args)
    if figs:
        from . import plotting

        os.makedirs(figs, exist_ok=True)
        _write(os.path.join(figs, "summary.csv"), report.summary_csv(reports))
        if comparison is not None:
            _write(os.path.join(figs, "comparison.csv"), report.comparison_csv(comparison))
        plotting.trace_figure(reports, os.path.join(figs, "trace.png"))
        plotting.plan_figure(corridor, drawn, os.path.join(figs, "plan.png"))
        best = evaluate_alignment(corridor, reports[0].best)
        if best.solution is not None:
            plotting.profile_figure(best.problem, best.solution, os.path.join(figs, "profile.png"))
    return OK


def cmd_render(args) -> int:
    corridor = read_corridor_file(args.corridor)
    conf = load_config(args.config)
    drawn = []
    for path in args.alignments:
        a = read_alignment_file(path)
        if a.n != corridor.n:
            raise InputError(f"{path}: {a.n} points, corridor expects {corridor.n}")
        drawn.append((os.path.splitext(os.path.basename(path))[0], a))
    try:
        svg = render_svg(corridor, drawn, render_spec(conf))
    except GeometryError as exc:
        log.error("cannot draw alignment: %s", exc)
        return FAILED
    _write(args.out, svg)
    figs = _figures_dir(args)
    if figs:
        from . import plotting

        plotting.plan_figure(corridor, drawn, os.path.join(figs, "plan.png"))
    return OK


def cmd_synth(args) -> int:
    spec = dict(
        family=args.family,
        stations=args.stations,
        spacing=args.spacing,
        half_width=args.half_width,
        t_star=args.t_star,
        depth=args.depth,
        intersection_points=args.intersection_points,
        seed=args.seed if args.seed is not None else 0,
    )
    try:
        corridor = synth_corridor(SynthSpec(**spec))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write(args.out, corridor.dumps() + "\n")
    return OK


def _bench_corridor(entry: dict, base_dir: str) -> tuple[str, Corridor]:
    if not isinstance(entry, dict):
        raise InputError("each manifest corridor must be an object")
    if "path" in entry:
        path = entry["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        name = entry.get("name", os.path.splitext(os.path.basename(path))[0])
        return name, read_corridor_file(path)
    if "synth" in entry:
        try:
            spec = SynthSpec.from_dict(entry["synth"])
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad synth entry: {exc}") from None
        return entry.get("name", f"{spec.family}-{spec.seed}"), synth_corridor(spec)
    raise InputError("manifest corridor needs a 'path' or a 'synth' entry")


def cmd_bench(args) -> int:
    manifest = _read_json(args.manifest)
    if not isinstance(manifest, dict) or "corridors" not in manifest:
        raise InputError("manifest must be an object with a 'corridors' list")
    unknown = set(manifest) - {"corridors", "search", "seeds", "tolerances"}
    if unknown:
        raise InputError(f"unknown manifest key(s) {sorted(unknown)}")
    conf = load_config(args.config)
    conf.update(manifest.get("search", {}))
    unknown = set(conf) - CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown search key(s) {sorted(unknown)}")
    cfg = search_config(conf, None)
    seed0 = args.seed if args.seed is not None else cfg.seed
    seeds = manifest.get("seeds", [seed0 + k for k in range(5)])
    tolerances = manifest.get("tolerances", list(report.TOLERANCES))
    base_dir = os.path.dirname(os.path.abspath(args.manifest))
    corridors = [_bench_corridor(e, base_dir) for e in manifest["corridors"]]

    dets, stochs, rows = [], [], []
    t0 = time.perf_counter()
    for name, corridor in corridors:
        try:
            det = _run(corridor, cfg, "det", None, name)
            runs = [_run(corridor, cfg, "stoch", int(s), name) for s in seeds]
        except BaselineInfeasible as exc:
            log.error("%s: %s", name, exc)
            return FAILED
        dets.append(det)
        stochs.append(runs)
        rows += report.compare(det, runs, name)
    sweep = report.win_tie_counts([r.cost_diff for r in rows], tolerances)
    elapsed = time.perf_counter() - t0

    _say(args, report.summary_table(dets))
    _say(args)
    _say(args, report.comparison_table(rows))
    _say(args)
    _say(args, report.sweep_table(sweep))
    if rows:
        mean_eval = float(np.mean([r.eval_diff for r in rows]))
        _say(args, f"\nstochastic runs used {mean_eval:+.1f}% fewer evaluations on average "
                   f"({len(rows)} runs, {elapsed:.1f} s)")

    out = args.out
    if out:
        os.makedirs(out, exist_ok=True)
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "bench",
            "deterministic": [r.to_dict() for r in dets],
            "stochastic": [[r.to_dict() for r in rs] for rs in stochs],
            "comparison": [r.to_dict() for r in rows],
            "sweep": [vars(r) for r in sweep],
        }
        _write(os.path.join(out, "bench.json"), _json(doc))
        _write(os.path.join(out, "summary.csv"), report.summary_csv(dets))
        _write(os.path.join(out, "comparison.csv"), report.comparison_csv(rows))
        _write(os.path.join(out, "sweep.csv"), report.sweep_csv(sweep))
        from . import plotting

        plotting.sweep_figure(sweep, os.path.join(out, "sweep.png"))
        for (name, corridor), det, runs in zip(corridors, dets, stochs):
            plotting.trace_figure([det, *runs], os.path.join(out, f"trace-{name}.png"))
            drawn = [("baseline", baseline_alignment(corridor)), ("det", det.best)]
            drawn += [(f"stoch-{r.seed}", r.best) for r in runs]
            plotting.plan_figure(corridor, drawn, os.path.join(out, f"plan-{name}.png"))
    return OK


# -- argument parsing ----------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON config block (search and render settings)")
    parser.add_argument("--out", default=d, help="output file (directory for bench)")
    parser.add_argument("--seed", type=int, default=d, help="random seed")
    parser.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="suppress progress and tables on stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="halign", description="Horizontal road alignment optimizer.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a corridor and its baseline alignment")
    s.add_argument("corridor")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("evaluate", parents=[common], help="cost of one alignment")
    s.add_argument("corridor")
    s.add_argument("alignment")
    s.add_argument("--figures", metavar="DIR", help="write profile and plan figures here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("optimize", parents=[common], help="optimize the baseline alignment")
    s.add_argument("corridor")
    s.add_argument("--solver", choices=("det", "stoch"))
    s.add_argument("--runs", type=int, help="stochastic runs (seeds seed, seed+1, ...)")
    s.add_argument("--name", help="row label in tables")
    s.add_argument("--svg", metavar="PATH", help="also render baseline and optimized alignments")
    s.add_argument("--figures", metavar="DIR", help="write CSV tables and figures here")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("render", parents=[common], help="SVG plan of a corridor and alignments")
    s.add_argument("corridor")
    s.add_argument("alignments", nargs="*")
    s.add_argument("--figures", metavar="DIR", help="also write a matplotlib plan figure here")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic corridor")
    s.add_argument("--family", choices=FAMILIES, default="valley")
    s.add_argument("--stations", type=int, default=20)
    s.add_argument("--spacing", type=float, default=10.0)
    s.add_argument("--half-width", type=float, default=10.0)
    s.add_argument("--t-star", type=float, default=0.5)
    s.add_argument("--depth", type=float, default=8.0)
    s.add_argument("--intersection-points", type=int, default=3)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("bench", parents=[common], help="deterministic vs stochastic benchmark matrix")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else BAD_INPUT
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
