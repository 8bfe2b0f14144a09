"""Command-line front end.

Every subcommand prints one JSON report on stdout and exits 0, or prints a
JSON error object and exits 2.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import pmean as pm
from .norms import parse_norm
from .oracle import MAX_ASSIGNMENTS, MAX_ATOMS, MAX_K, brute_force
from .quantizer import QuantizerConfig, certify, lloyd, minimizing_trace
from .simplefn import SimpleFunction, cost
from .space import read_space
from .voronoi import DEFAULT_TIE_TOL

log = logging.getLogger("lpquant")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _p_value(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return np.inf
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid p {text!r}") from None
    if not p >= 1:
        raise argparse.ArgumentTypeError(f"p must be in [1, inf], got {text}")
    return p


def _p_json(p):
    return "inf" if p == np.inf else p


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lpquant", description="Best L^p approximation by simple functions with k values.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def shared(sp, need_k=False):
        sp.add_argument("--space", required=True, help="space file (.json or .csv)")
        sp.add_argument("--norm", default="euclidean", help="euclidean | q:<float> | weighted:<w1,...,wd>")
        sp.add_argument("--p", type=_p_value, default=2.0, help="exponent in [1, inf], or 'inf' (default 2)")
        sp.add_argument("--k", type=int, required=need_k, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-iter", type=int, default=None)
        sp.add_argument("--restarts", type=int, default=10)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--tie-tol", type=float, default=DEFAULT_TIE_TOL)
        sp.add_argument("--pinned-zero", action="store_true", help="treat the space as having an infinite-mass background")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    shared(sub.add_parser("quantize", help="multi-restart alternation"), need_k=True)
    sp = sub.add_parser("pmean", help="p-th mean of one cell")
    shared(sp)
    sp.add_argument("--cell", default=None, help="comma-separated atom indices (default: all atoms)")
    sp = sub.add_parser("oracle", help="exhaustive optimum on tiny instances")
    shared(sp, need_k=True)
    sp.add_argument("--max-atoms", type=int, default=MAX_ATOMS)
    sp.add_argument("--max-k", type=int, default=MAX_K)
    sp.add_argument("--max-assignments", type=int, default=MAX_ASSIGNMENTS)
    sp = sub.add_parser("certify", help="structure certificate of a simple function")
    shared(sp)
    sp.add_argument("--h", "--function", dest="function", required=True,
                    help="simple-function JSON, or a quantize report (its 'best' entry is used)")
    shared(sub.add_parser("trace", help="center iterates of the best restart"), need_k=True)
    return parser


def _config(args) -> QuantizerConfig:
    return QuantizerConfig(
        p=args.p,
        k=args.k if args.k is not None else 1,
        restarts=args.restarts,
        seed=args.seed,
        tol=args.tol if args.tol is not None else 1e-9,
        max_iter=args.max_iter if args.max_iter is not None else 1000,
        tie_tol=args.tie_tol,
        jobs=args.jobs,
    )


def _manifest(args, config_echo: dict) -> dict:
    return {
        "subcommand": args.subcommand,
        "space": str(args.space),
        "norm": args.norm,
        "config": config_echo,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed_used": args.seed,
    }


def _read_function(path) -> SimpleFunction:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed simple-function JSON: {exc}") from None
    if isinstance(obj, dict) and "best" in obj:
        obj = obj["best"]
    return SimpleFunction.from_json_dict(obj)


def _dispatch(args) -> dict:
    space = read_space(args.space, infinite_mass=True if args.pinned_zero else None)
    norm = parse_norm(args.norm, dim=space.dim)
    cmd = args.subcommand

    if cmd == "pmean":
        cell = list(range(space.n)) if args.cell is None else [int(t) for t in args.cell.split(",") if t.strip()]
        if not cell or min(cell) < 0 or max(cell) >= space.n:
            raise ValueError(f"cell indices must lie in [0, {space.n})")
        tol = args.tol if args.tol is not None else pm.DEFAULT_TOL
        if args.p == np.inf:
            res = pm.chebyshev_center(space, cell, norm, tol=tol)
        else:
            max_iter = args.max_iter if args.max_iter is not None else pm.DEFAULT_MAX_ITER
            res = pm.solve_pmean(space, cell, norm, args.p, tol=tol, max_iter=max_iter)
        echo = {"p": _p_json(args.p), "tol": tol, "cell": cell}
        return {"manifest": _manifest(args, echo), "result": res.to_json_dict()}

    if cmd == "oracle":
        res = brute_force(space, norm, args.p, args.k, max_atoms=args.max_atoms, max_k=args.max_k,
                          max_assignments=args.max_assignments)
        echo = {"p": _p_json(args.p), "k": args.k, "max_atoms": args.max_atoms, "max_k": args.max_k,
                "max_assignments": args.max_assignments}
        return {"manifest": _manifest(args, echo), "result": res.to_json_dict()}

    config = _config(args)
    if cmd == "quantize":
        report = lloyd(space, norm, config)
        return {"manifest": _manifest(args, config.to_json_dict()), **report.to_json_dict()}

    if cmd == "certify":
        h = _read_function(args.function)
        cert = certify(space, norm, config, h)
        echo = {"p": _p_json(args.p), "tie_tol": args.tie_tol, "function": str(args.function)}
        return {"manifest": _manifest(args, echo), "cost": cost(space, norm, args.p, h),
                "certificate": cert.to_json_dict()}

    if cmd == "trace":
        if not 1 < args.p < np.inf:
            raise ValueError("trace needs 1 < p < inf")
        tr = minimizing_trace(space, norm, config)
        return {
            "manifest": _manifest(args, config.to_json_dict()),
            "steps": [{"centers": [[float(x) for x in c] for c in cs], "cost": c_} for cs, c_ in tr.steps],
            "displacements": tr.displacements,
            "flagged": tr.flagged,
        }
    raise UsageError(f"unknown subcommand {cmd!r}")


def _emit(obj, stream) -> None:
    stream.write(json.dumps(obj, indent=1) + "\n")
    stream.flush()


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = _build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        report = _dispatch(args)
    except UsageError as exc:
        _emit({"error": {"type": "usage", "message": str(exc)}}, stdout)
        return 2
    except FileNotFoundError as exc:
        _emit({"error": {"type": "io", "message": str(exc)}}, stdout)
        return 2
    except ValueError as exc:
        _emit({"error": {"type": "validation", "message": str(exc)}}, stdout)
        return 2
    _emit(report, stdout)
    return 0


def main() -> None:
    sys.exit(run())
