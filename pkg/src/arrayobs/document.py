"""JSON wire formats: array documents in, reports and conductances out.

Complex numbers travel as two-element arrays ``[re, im]``. Matrices are
lists of rows. Every validation failure names the offending field as a
path such as ``couplings[2].C[0][1]``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any

import numpy as np

from .array_model import ArraySystem, symmetrize
from .decisions import AnalysisReport
from .dynamics import OSCILLATOR_KINDS, OscillatorSpec, build_oscillator_array
from .ngraph import EffectiveConductance
from .numerics import Tolerance, ValidationError

FORMAT_VERSION = "arrayobs/1"
REPORT_DIGITS = 12


class DocumentError(ValidationError):
    """A document failed to parse or validate; ``where`` locates the problem."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class ArrayDocument:
    system: ArraySystem
    tolerance: dict[str, float] | None = None
    oscillator_kind: str | None = None
    oscillator: OscillatorSpec | None = None

    def tolerance_object(self, base: Tolerance | None = None) -> Tolerance:
        base = base or Tolerance()
        return base.with_overrides(**(self.tolerance or {}))


# ------------------------------------------------------------- parsing


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(where, f"expected a number, got {type(value).__name__}")
    x = float(value)
    if not math.isfinite(x):
        raise DocumentError(where, "number is not finite")
    return x


def _complex(value, where: str) -> complex:
    if not isinstance(value, list) or len(value) != 2:
        raise DocumentError(where, "expected a complex number as [re, im]")
    return complex(_number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]"))


def _matrix(value, where: str, cols: int | None = None) -> np.ndarray:
    if not isinstance(value, list):
        raise DocumentError(where, "expected a list of rows")
    rows = []
    for r, row in enumerate(value):
        if not isinstance(row, list):
            raise DocumentError(f"{where}[{r}]", "expected a row (list of [re, im])")
        if cols is not None and len(row) != cols:
            raise DocumentError(f"{where}[{r}]", f"expected {cols} entries, got {len(row)}")
        rows.append([_complex(z, f"{where}[{r}][{c}]") for c, z in enumerate(row)])
    if cols is None:
        return np.array(rows, dtype=np.complex128)
    return np.array(rows, dtype=np.complex128).reshape(len(rows), cols)


def _count(doc: dict, key: str) -> int:
    if key not in doc:
        raise DocumentError(key, "missing required field")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise DocumentError(key, f"expected a positive integer, got {v!r}")
    return v


def _index(value, where: str, q: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(where, f"expected an integer vertex label, got {value!r}")
    if not 1 <= value <= q:
        raise DocumentError(where, f"vertex {value} outside 1..{q}")
    return value


def _positive_list(value, where: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise DocumentError(where, "expected a list of numbers")
    if length is not None and len(value) != length:
        raise DocumentError(where, f"expected {length} values, got {len(value)}")
    out = []
    for a, v in enumerate(value):
        x = _number(v, f"{where}[{a}]")
        if x <= 0:
            raise DocumentError(f"{where}[{a}]", f"value {x!r} must be positive")
        out.append(x)
    return tuple(out)


def _parse_oscillator(block, q: int) -> tuple[str, OscillatorSpec]:
    where = "oscillator"
    if not isinstance(block, dict):
        raise DocumentError(where, "expected an object")
    kind = block.get("kind")
    if kind not in OSCILLATOR_KINDS:
        raise DocumentError(f"{where}.kind", f"expected one of {list(OSCILLATOR_KINDS)}, got {kind!r}")
    masses = _positive_list(block.get("masses"), f"{where}.masses")
    if not masses:
        raise DocumentError(f"{where}.masses", "need at least one node")
    stiffness = _positive_list(block.get("stiffness"), f"{where}.stiffness", len(masses) + 1)
    conductances = {}
    entries = block.get("conductances", [])
    if not isinstance(entries, list):
        raise DocumentError(f"{where}.conductances", "expected a list")
    for e, entry in enumerate(entries):
        ew = f"{where}.conductances[{e}]"
        if not isinstance(entry, dict):
            raise DocumentError(ew, "expected an object with i, j, b")
        i = _index(entry.get("i"), f"{ew}.i", q)
        j = _index(entry.get("j"), f"{ew}.j", q)
        if i == j:
            raise DocumentError(ew, "a replica cannot be coupled to itself")
        b = entry.get("b")
        if not isinstance(b, list) or len(b) != len(masses):
            raise DocumentError(f"{ew}.b", f"expected {len(masses)} conductances")
        vals = tuple(_number(v, f"{ew}.b[{a}]") for a, v in enumerate(b))
        if any(v < 0 for v in vals):
            raise DocumentError(f"{ew}.b", "conductances must be nonnegative")
        key = (min(i, j), max(i, j))
        if key in conductances:
            raise DocumentError(ew, f"pair ({i},{j}) given twice")
        conductances[key] = vals
    return kind, OscillatorSpec(masses, stiffness, conductances)


def document_from_dict(doc: Any) -> ArrayDocument:
    if not isinstance(doc, dict):
        raise DocumentError("", "top level must be a JSON object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise DocumentError("version", f"expected {FORMAT_VERSION!r}, got {version!r}")
    n = _count(doc, "n")
    q = _count(doc, "q")
    if "A" not in doc:
        raise DocumentError("A", "missing required field")
    A = _matrix(doc["A"], "A", n)
    if A.shape != (n, n):
        raise DocumentError("A", f"expected {n} rows, got {A.shape[0]}")

    couplings = doc.get("couplings", [])
    if not isinstance(couplings, list):
        raise DocumentError("couplings", "expected a list")
    raw = {}
    for e, entry in enumerate(couplings):
        ew = f"couplings[{e}]"
        if not isinstance(entry, dict):
            raise DocumentError(ew, "expected an object with i, j, C")
        i = _index(entry.get("i"), f"{ew}.i", q)
        j = _index(entry.get("j"), f"{ew}.j", q)
        if i == j:
            raise DocumentError(ew, f"self-coupling ({i},{j}) is not allowed")
        if (i, j) in raw:
            raise DocumentError(ew, f"coupling ({i},{j}) given twice")
        if "C" not in entry:
            raise DocumentError(f"{ew}.C", "missing required field")
        raw[(i, j)] = _matrix(entry["C"], f"{ew}.C", n).reshape(-1, n)
    try:
        system = ArraySystem(A, q, symmetrize(raw, n, q))
    except ValidationError as exc:
        raise DocumentError("couplings", str(exc)) from exc

    tolerance = None
    if "tolerance" in doc:
        block = doc["tolerance"]
        if not isinstance(block, dict):
            raise DocumentError("tolerance", "expected an object")
        known = set(Tolerance().as_dict())
        tolerance = {}
        for key, value in block.items():
            if key not in known:
                raise DocumentError(f"tolerance.{key}", f"unknown field; expected one of {sorted(known)}")
            tolerance[key] = _number(value, f"tolerance.{key}")
        try:
            Tolerance(**tolerance)
        except ValidationError as exc:
            raise DocumentError("tolerance", str(exc)) from exc

    kind = spec = None
    if "oscillator" in doc:
        kind, spec = _parse_oscillator(doc["oscillator"], q)
        if 2 * spec.p != n:
            raise DocumentError("oscillator.masses", f"{spec.p} nodes need n = {2 * spec.p}, document has n = {n}")
        built = build_oscillator_array(spec, q, kind)
        if not (np.allclose(built.A, system.A, rtol=1e-12, atol=1e-12) and built.pairs() == system.pairs()
                and all(np.allclose(built.couplings[p], system.couplings[p], rtol=1e-12, atol=1e-12)
                        for p in built.pairs())):
            raise DocumentError("oscillator", "A and couplings do not match the oscillator parameters")

    return ArrayDocument(system, tolerance, kind, spec)


def parse_document(text: str) -> ArrayDocument:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}", f"malformed JSON ({exc.msg})") from exc
    return document_from_dict(doc)


def load_document(path) -> ArrayDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


# --------------------------------------------------------- serializing


def _num(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # fold -0.0
    return json.dumps(x)


def _row_text(row) -> str:
    return "[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "]"


def _matrix_text(M: np.ndarray, indent: str) -> str:
    if M.shape[0] == 0:
        return "[]"
    inner = (",\n" + indent + "  ").join(_row_text(row) for row in M)
    return "[\n" + indent + "  " + inner + "\n" + indent + "]"


def document_to_json(doc: ArrayDocument) -> str:
    """Deterministic serialization: fixed key order, one matrix row per line."""
    s = doc.system
    parts = [
        f'  "version": {json.dumps(FORMAT_VERSION)}',
        f'  "n": {s.n}',
        f'  "q": {s.q}',
        f'  "A": {_matrix_text(s.A, "  ")}',
    ]
    entries = []
    for (i, j) in s.pairs():
        C = _matrix_text(s.couplings[(i, j)], "      ")
        entries.append(f'    {{\n      "i": {i},\n      "j": {j},\n      "C": {C}\n    }}')
    parts.append('  "couplings": ' + ("[\n" + ",\n".join(entries) + "\n  ]" if entries else "[]"))
    if doc.tolerance is not None:
        tol = ", ".join(f"{json.dumps(k)}: {_num(v)}" for k, v in sorted(doc.tolerance.items()))
        parts.append(f'  "tolerance": {{{tol}}}')
    if doc.oscillator is not None:
        spec = doc.oscillator
        cond = ",\n".join(
            f'      {{"i": {i}, "j": {j}, "b": [{", ".join(_num(v) for v in b)}]}}'
            for (i, j), b in sorted(spec.conductances.items())
        )
        cond_text = "[\n" + cond + "\n    ]" if cond else "[]"
        parts.append(
            '  "oscillator": {\n'
            f'    "kind": {json.dumps(doc.oscillator_kind)},\n'
            f'    "masses": [{", ".join(_num(v) for v in spec.masses)}],\n'
            f'    "stiffness": [{", ".join(_num(v) for v in spec.stiffness)}],\n'
            f'    "conductances": {cond_text}\n'
            "  }"
        )
    return "{\n" + ",\n".join(parts) + "\n}\n"


# -------------------------------------------------------------- reports


def _round(x: float) -> float:
    r = round(float(x), REPORT_DIGITS)
    return 0.0 if r == 0.0 else r


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [_round(z.real), _round(z.imag)]


def vector_json(v: np.ndarray) -> list[list[float]]:
    return [complex_pair(z) for z in np.ravel(v)]


def matrix_json(M: np.ndarray) -> list[list[list[float]]]:
    return [[complex_pair(z) for z in row] for row in np.atleast_2d(M)]


def report_to_dict(report: AnalysisReport, tol: Tolerance, version: str, timing: float | None) -> dict:
    """Stable schema: every verdict is always present as a boolean."""
    return {
        "tool": "arrayobs",
        "version": version,
        "tolerance": tol.as_dict(),
        "n": report.n,
        "q": report.q,
        "verdicts": {
            "observable": bool(report.observable),
            "detectable": bool(report.detectable),
            "nonderogatory": bool(report.nonderogatory),
            "cross_checked": bool(report.cross_checked),
        },
        "eigengraphs": [
            {
                "sigma": s,
                "mu": complex_pair(e.mu),
                "n_sigma": e.n_sigma,
                "algebraic_multiplicity": e.algebraic_mult,
                "connected": bool(e.connected),
                "re_nonnegative": bool(e.re_nonneg),
            }
            for s, e in enumerate(report.per_eigengraph, start=1)
        ],
        "pairs": [
            {
                "k": k,
                "l": l,
                "pair_observable": bool(p.pair_observable),
                "pair_detectable": bool(p.pair_detectable),
                "conductance_rank": p.conductance_rank,
                "eigengraph_pair_connected": [bool(b) for b in p.eigengraph_pair_connected],
            }
            for (k, l), p in report.pairwise.items()
        ],
        "witnesses": {name: vector_json(v) for name, v in sorted(report.witnesses.items())},
        "diagnostics": list(report.diagnostics),
        "timing_seconds": None if timing is None else round(float(timing), 6),
    }


def conductance_to_dict(ec: EffectiveConductance, rank: int, scale: float, tol: Tolerance) -> dict:
    G = ec.gamma
    herm = float(np.linalg.norm(G - G.conj().T, 2))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T)))) if G.size else 0.0
    return {
        "tool": "arrayobs",
        "k": ec.k,
        "l": ec.l,
        "n": G.shape[0],
        "gamma": matrix_json(G),
        "rank": int(rank),
        "full_rank": bool(rank == G.shape[0]),
        "residual": float(ec.residual),
        "hermitian_defect": herm,
        "min_eigenvalue": _round(min_eig),
        "laplacian_norm": _round(scale),
        "tolerance": tol.as_dict(),
    }


_SCALAR = r"(?:-?[0-9.eE+-]+|true|false|null)"
_LEAF_LIST = re.compile(r"\[\s*(" + _SCALAR + r"(?:,\s*" + _SCALAR + r")*)\s*\]")


def dump_json(data: dict) -> str:
    """Indented JSON with lists of scalars (complex pairs, flags) kept on one line."""
    text = json.dumps(data, indent=2)
    text = _LEAF_LIST.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
    return text + "\n"
