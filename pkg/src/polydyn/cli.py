"""Command line front end.

Exit codes: 0 success, 2 degenerate input, 3 excluded scaling parameter,
4 a property suite or verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .dynamics import FlipWord, StaircaseState
from .errors import DegenerateError, ExcludedParameter, NoCyclicPlacement, PolyDynError
from .harness import (
    ExperimentConfig,
    Orbit,
    build_state,
    relations_suite,
    run_collapse,
    scan_conjecture,
    scan_rows_csv,
    special_staircase,
    state_curvature,
    state_logderiv,
    state_polygon,
)
from .invariants import (
    finite_diff_monodromy,
    infinitesimal_monodromy,
    predict_collapse,
    traceless,
)

EXIT_OK, EXIT_DEGENERATE, EXIT_EXCLUDED, EXIT_PROPERTY = 0, 2, 3, 4


def _complex_list(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        out.append(tok if tok.lower() in ("inf", "infinity", "oo") else complex(tok))
    return out


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _point(p) -> object:
    if p.is_infinity:
        return "inf"
    return _pair(p.value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _pair(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(obj, out=None):
    out = out or sys.stdout
    json.dump(_jsonable(obj), out, indent=2)
    out.write("\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields (flags override it)")
    p.add_argument("--system", choices=("staircase", "flat", "leapfrog"))
    p.add_argument("--eta", type=complex, help="staircase scaling exponent (default 1)")
    p.add_argument("--n", type=int, help="vertices per polygon (default 5)")
    p.add_argument("--seed", type=int)
    p.add_argument("--vertices", type=_complex_list,
                   help="comma separated vertex values, e.g. '1,1j,-1,-1j' ('inf' allowed)")
    p.add_argument("--curvature", type=_complex_list, help="comma separated mu_i or alpha_i")
    p.add_argument("--tol", type=float, help="collapse tolerance (default 1e-4)")
    p.add_argument("--iters", type=int, help="iterations (default 200)")
    p.add_argument("--word", help="staircase flip word: 'sweep' or comma separated indices")


def _config(args, **extra) -> ExperimentConfig:
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
    cfg = ExperimentConfig.from_dict(d)
    over = {"system": args.system, "eta": args.eta, "n": args.n, "seed": args.seed,
            "vertices": args.vertices, "curvature": args.curvature,
            "collapse_tol": args.tol, "iterations": args.iters, "word": args.word}
    over.update(extra)
    fields = cfg.to_dict()
    fields.update({k: v for k, v in over.items() if v is not None})
    fields["eta"] = complex(*fields["eta"]) if isinstance(fields["eta"], list) else fields["eta"]
    if args.vertices is not None and args.n is None and not args.config:
        size = len(args.vertices)
        fields["n"] = size // 2 if fields["system"] == "leapfrog" else size
    return ExperimentConfig.from_dict(fields)


# --- subcommands --------------------------------------------------------------

def cmd_predict(args) -> int:
    cfg = _config(args)
    state = build_state(cfg)
    P = state_polygon(state)
    cands = predict_collapse(P, cfg.spec, state_curvature(state))
    im = infinitesimal_monodromy(P, state_logderiv(cfg.spec, state))
    out = {
        "system": cfg.system,
        "vertices": [_point(p) for p in P.vertices],
        "I": im.I, "J": im.J, "K": im.K, "Delta": im.Delta,
        "matrix": im.matrix,
        "candidates": [_point(r) for r in cands.roots],
        "labels": list(cands.labels()),
        "class": cands.classification.kind if cands.classification else None,
    }
    if args.oracle:
        fd = traceless(finite_diff_monodromy(P, cfg.spec, state_curvature(state), h=args.h))
        ref = im.traceless
        out["oracle"] = {"h": args.h, "traceless": fd,
                         "relative_error": float(np.abs(fd - ref).max() / np.abs(ref).max())}
    _emit(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args, direction=args.direction, trace_path=args.csv, report_path=args.report)
    rep = run_collapse(cfg)
    _emit(rep.summary())
    return EXIT_OK


def cmd_invariants(args) -> int:
    cfg = _config(args)
    state = build_state(cfg)
    word = FlipWord.parse(cfg.word, state.n) if isinstance(state, StaircaseState) and cfg.word else None
    orbit = Orbit(state, cfg.spec, word=word)
    size = state_polygon(state).n
    ks = list(range(1, min(3, size // 2) + 1))
    rows = []
    steps = args.steps if args.steps is not None else 1
    for it in range(steps + 1):
        if it:
            orbit.step()
        I, J, K = orbit.ijk()
        rows.append({"step": it, "I": I, "J": J, "K": K, "Delta": orbit.delta(),
                     **{f"G{k}": v for k, v in orbit.g_values(ks).items()}})
    first = rows[0]
    scale = max(abs(first["I"]), abs(first["J"]), abs(first["K"])) or 1.0
    drift = {}
    for key in first:
        if key == "step":
            continue
        ref = {"Delta": max(abs(first["Delta"]), scale * scale)}.get(
            key, scale if key in "IJK" else max(1.0, abs(first[key])))
        drift[key] = max(abs(r[key] - first[key]) for r in rows) / ref
    ok = max(drift.values()) <= args.drift_tol
    _emit({"system": cfg.system, "steps": steps, "series": rows, "drift": drift,
           "drift_tol": args.drift_tol, "pass": ok})
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_special(args) -> int:
    try:
        state, expected, rep = special_staircase(args.n, args.kind, q=args.q, lam=args.lam)
    except NoCyclicPlacement as exc:
        _emit({"error": str(exc)})
        return EXIT_PROPERTY
    out = rep.to_dict()
    out["expected_class"] = expected.kind
    out["expected_fixed_points"] = [_point(p) for p in expected.fixed_points]
    out["mu"] = list(state.mu)
    _emit(out)
    return EXIT_OK


def cmd_relations(args) -> int:
    res = relations_suite(args.n, trials=args.trials, seed=args.seed or 0, tol=args.tol)
    _emit(res)
    return EXIT_OK if res["pass"] else EXIT_PROPERTY


def cmd_scan(args) -> int:
    cfg = _config(args)
    res = scan_conjecture(cfg, args.trials, workers=args.workers)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(scan_rows_csv(res))
    if not args.rows:
        res = {k: v for k, v in res.items() if k != "rows"}
    _emit(res)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polydyn", description="Collapse points of polygonal dynamics on the projective line.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="collapse candidates and I/J/K/Delta as JSON")
    _add_common(p)
    p.add_argument("--oracle", action="store_true", help="also run the finite-difference oracle")
    p.add_argument("--h", type=float, default=1e-4, help="oracle step")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="iterate and write a collapse report and CSV trace")
    _add_common(p)
    p.add_argument("--direction", choices=("forward", "backward"), default=None)
    p.add_argument("--csv", help="trace output path")
    p.add_argument("--report", help="JSON report output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("invariants", help="I/J/K/Delta/G_k along an orbit")
    _add_common(p)
    p.add_argument("--steps", type=int, help="number of words/steps to apply (default 1)")
    p.add_argument("--drift-tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("special", help="staircase configurations whose sweep is a Mobius map")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--kind", choices=("parabolic", "geometric", "from_lambda"), default="parabolic")
    p.add_argument("--q", type=complex)
    p.add_argument("--lam", type=complex)
    p.set_defaults(func=cmd_special)

    p = sub.add_parser("relations", help="flip relation property suite")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_relations)

    p = sub.add_parser("scan", help="seeded collapse statistics over many trials")
    _add_common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="per-trial rows output path")
    p.add_argument("--rows", action="store_true", help="include per-trial rows in the JSON")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "direction", "x") is None:
        args.direction = "forward"
    try:
        return args.func(args)
    except ExcludedParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXCLUDED
    except DegenerateError as exc:
        print(f"error: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (PolyDynError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
