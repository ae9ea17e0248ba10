"""Command-line interface: ``arrayobs analyze | effcond | simulate | gen``.

Exit status is 0 on success whatever the verdicts are, 2 for unreadable
or invalid input, and 3 when two independent numerical routes disagree.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .decisions import ArrayAnalysis, analyze, conductance_rank
from .document import (
    ArrayDocument,
    DocumentError,
    conductance_to_dict,
    document_to_json,
    dump_json,
    load_document,
    report_to_dict,
)
from .dynamics import OscillatorSpec, build_oscillator_array, lyapunov_values, simulate, simulate_coupled, trajectory_to_csv
from .generate import random_array
from .ngraph import to_dot
from .numerics import NumericalError, Tolerance, ValidationError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _tolerance(doc: ArrayDocument) -> Tolerance:
    """Defaults, then the document's overrides, then ``ARRAYOBS_*`` environment values."""
    return Tolerance.from_env(os.environ, **{k: v for k, v in (doc.tolerance or {}).items()
                                             if "ARRAYOBS_" + k.upper() not in os.environ})


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    doc = load_document(args.input)
    tol = _tolerance(doc)
    system = doc.system
    for k, l in args.pair:
        if k == l or not (1 <= k <= system.q and 1 <= l <= system.q):
            raise ValidationError(f"--pair {k} {l}: need two distinct vertices in 1..{system.q}")
    start = time.perf_counter()
    report = analyze(system, pairs=[tuple(p) for p in args.pair], tol=tol, cross_check=args.cross_check)
    elapsed = time.perf_counter() - start
    data = report_to_dict(report, tol, __version__, elapsed)

    if args.dot:
        out = Path(args.dot)
        out.mkdir(parents=True, exist_ok=True)
        an = ArrayAnalysis(system, tol)
        for sigma, g in enumerate(an.eigengraphs, start=1):
            if g.n == 1:
                (out / f"eigengraph_{sigma}.dot").write_text(to_dot(g, f"eigengraph_{sigma}", tol), encoding="utf-8")

    text = dump_json(data)
    if args.json:
        _write(text, args.json)
        v = data["verdicts"]
        print(f"observable={v['observable']} detectable={v['detectable']} "
              f"eigengraphs={len(data['eigengraphs'])} pairs={len(data['pairs'])}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------- effcond


def cmd_effcond(args) -> int:
    doc = load_document(args.input)
    tol = _tolerance(doc)
    an = ArrayAnalysis(doc.system, tol)
    ec = an.conductance(args.k, args.l)
    data = conductance_to_dict(ec, conductance_rank(an, ec), an.laplacian_scale, tol)
    _write(dump_json(data), args.json)
    return EXIT_OK


# -------------------------------------------------------------- simulate


def _initial_from_file(path: str, q: int, n: int) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: line {exc.lineno} column {exc.colno}", f"malformed JSON ({exc.msg})") from exc
    if not isinstance(data, dict) or "x0" not in data:
        raise DocumentError(f"{path}: x0", "missing required field")
    rows = data["x0"]
    if not isinstance(rows, list) or len(rows) != q:
        raise DocumentError(f"{path}: x0", f"expected {q} rows (one per system)")
    x0 = np.zeros((q, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise DocumentError(f"{path}: x0[{i}]", f"expected {n} entries")
        for r, z in enumerate(row):
            where = f"{path}: x0[{i}][{r}]"
            if isinstance(z, (int, float)) and not isinstance(z, bool):
                z = [z, 0]
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in z)):
                raise DocumentError(where, "expected a number or [re, im]")
            x0[i, r] = complex(z[0], z[1])
    if not np.all(np.isfinite(x0)):
        raise DocumentError(f"{path}: x0", "entries must be finite")
    return x0


def _initial_from_report(path: str, name: str | None, q: int, n: int) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: line {exc.lineno} column {exc.colno}", f"malformed JSON ({exc.msg})") from exc
    witnesses = data.get("witnesses") if isinstance(data, dict) else None
    if not witnesses:
        raise DocumentError(f"{path}: witnesses", "report holds no witness")
    if name is None:
        if len(witnesses) > 1:
            raise DocumentError(f"{path}: witnesses", f"several witnesses, choose one with --witness: {sorted(witnesses)}")
        name = next(iter(witnesses))
    if name not in witnesses:
        raise DocumentError(f"{path}: witnesses.{name}", f"no such witness; have {sorted(witnesses)}")
    vec = np.array([complex(re, im) for re, im in witnesses[name]], dtype=np.complex128)
    if vec.size != q * n:
        raise ValidationError(f"witness {name} has {vec.size} entries, array needs q*n = {q * n}")
    return vec.reshape(q, n)


def cmd_simulate(args) -> int:
    doc = load_document(args.input)
    system = doc.system
    if args.init and args.init_witness:
        raise ValidationError("use either --init or --init-witness, not both")
    if args.init:
        x0 = _initial_from_file(args.init, system.q, system.n)
    elif args.init_witness:
        x0 = _initial_from_report(args.init_witness, args.witness, system.q, system.n)
    else:
        raise ValidationError("an initial state is required (--init or --init-witness)")
    if not (args.t_final > 0 and np.isfinite(args.t_final)):
        raise ValidationError("--t-final must be positive")
    if args.samples < 2:
        raise ValidationError("--samples must be at least 2")
    times = np.linspace(0.0, args.t_final, args.samples)

    energy = None
    if doc.oscillator is not None and not args.uncoupled:
        traj = simulate_coupled(doc.oscillator, system.q, doc.oscillator_kind, x0, times)
        energy = lyapunov_values(doc.oscillator, doc.oscillator_kind, traj)
    else:
        traj = simulate(system, x0, times)
    _write(trajectory_to_csv(traj, energy), args.csv)
    return EXIT_OK


# ------------------------------------------------------------------- gen


def _oscillator_spec(args, rng) -> OscillatorSpec:
    for flag in ("p", "q"):
        if getattr(args, flag) < 1:
            raise ValidationError(f"--{flag} must be a positive integer")
    for flag in ("mass", "stiffness", "conductance"):
        v = getattr(args, flag)
        if not (np.isfinite(v) and v > 0):
            raise ValidationError(f"--{flag} must be positive, got {v}")
    if not 0 <= args.jitter < 1:
        raise ValidationError("--jitter must lie in [0, 1)")

    def draw(value, count):
        return tuple(float(value * (1 + args.jitter * u)) for u in rng.uniform(-1, 1, count))

    p, q = args.p, args.q
    conductances = {(i, j): draw(args.conductance, p) for i in range(1, q + 1) for j in range(i + 1, q + 1)}
    return OscillatorSpec(draw(args.mass, p), draw(args.stiffness, p + 1), conductances)


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind in ("lc", "spring"):
        spec = _oscillator_spec(args, rng)
        system = build_oscillator_array(spec, args.q, args.kind)
        doc = ArrayDocument(system, None, args.kind, spec)
    else:
        if args.n < 1 or args.q < 1:
            raise ValidationError("--n and --q must be positive integers")
        if not 0 <= args.density <= 1:
            raise ValidationError("--density must lie in [0, 1]")
        doc = ArrayDocument(random_array(rng, args.n, args.q, args.density, complex_=args.complex))
    _write(document_to_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arrayobs",
        description="Decide observability and detectability of arrays of identical linear systems.",
        epilog="Tolerances can be overridden with ARRAYOBS_RANK_RTOL, ARRAYOBS_EIG_CLUSTER_ATOL, "
               "ARRAYOBS_PSD_SLACK and ARRAYOBS_BOUNDARY_ATOL.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="observability, detectability and pairwise verdicts")
    p.add_argument("input", help="array document (JSON)")
    p.add_argument("--pair", nargs=2, type=int, action="append", default=[], metavar=("K", "L"),
                   help="also decide (K,L)-observability and detectability; repeatable")
    p.add_argument("--cross-check", action="store_true",
                   help="run the independent second route for every verdict and fail on disagreement")
    p.add_argument("--json", metavar="OUT", help="write the report here instead of stdout")
    p.add_argument("--dot", metavar="DIR", help="write DOT files for the scalar eigengraphs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("effcond", help="effective conductance of the interconnection graph")
    p.add_argument("input")
    p.add_argument("k", type=int)
    p.add_argument("l", type=int)
    p.add_argument("--json", metavar="OUT", help="write here instead of stdout")
    p.set_defaults(func=cmd_effcond)

    p = sub.add_parser("simulate", help="exact trajectory of the array as CSV")
    p.add_argument("input")
    p.add_argument("--init", metavar="FILE", help='JSON file {"x0": [[...], ...]} with one row per system')
    p.add_argument("--init-witness", metavar="REPORT", help="start from a witness stored in an analyze report")
    p.add_argument("--witness", metavar="NAME", help="which witness to use when the report has several")
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--csv", metavar="OUT", help="write here instead of stdout")
    p.add_argument("--uncoupled", action="store_true",
                   help="ignore the oscillator dampers and propagate each system on its own")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="generate an array document")
    p.add_argument("kind", choices=["lc", "spring", "random"])
    p.add_argument("--p", type=int, default=2, help="oscillator nodes per system")
    p.add_argument("--q", type=int, default=3, help="number of systems")
    p.add_argument("--n", type=int, default=3, help="state dimension (random kind)")
    p.add_argument("--density", type=float, default=0.6, help="probability that a pair is coupled (random kind)")
    p.add_argument("--complex", action="store_true", help="complex A and couplings (random kind)")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--stiffness", type=float, default=1.0)
    p.add_argument("--conductance", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.0,
                   help="relative random spread of the oscillator parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="OUT", help="write here instead of stdout")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"arrayobs: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"arrayobs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
