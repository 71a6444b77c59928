"""Channel JSON, analytic-family shorthands and CSV helpers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .analytic import (
    AnalyticPdf,
    MixedUnitaryQubitSpec,
    pauli_spec,
    pdf_mixed_unitary,
    pdf_pauli,
    pdf_qubit_unitary,
    pdf_qutrit_unitary,
)
from .errors import ValidationError
from .quantum_core import ChannelSpec, validate_channel
from .schur import SchurChannel

FAMILIES = ("qubit_unitary", "pauli", "qutrit_unitary", "schur", "mixed_unitary")


class ParseError(ValueError):
    """Input is not well-formed JSON of a recognised shape."""


def fmt(x: float) -> str:
    """17 significant digits; infinities as ``inf``."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _complex_entry(v: Any) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
        return complex(v[0], v[1])
    raise ParseError(f"expected a number or [re, im] pair, got {v!r}")


def complex_matrix(rows: Any) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError("matrix must be a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError("matrix rows have unequal length")
    return np.array([[_complex_entry(v) for v in r] for r in rows], dtype=complex)


def channel_to_json(ch: ChannelSpec) -> dict:
    return {
        "dim": ch.dim,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in ch.kraus],
    }


def channel_from_json(obj: dict) -> ChannelSpec:
    if not isinstance(obj, dict) or "kraus" not in obj:
        raise ParseError('channel JSON needs a "kraus" list')
    if not isinstance(obj["kraus"], list):
        raise ParseError('"kraus" must be a list of matrices')
    mats = [complex_matrix(k) for k in obj["kraus"]]
    ch = validate_channel(mats)
    if "dim" in obj and obj["dim"] != ch.dim:
        raise ValidationError(f'"dim" is {obj["dim"]} but the matrices are {ch.dim}x{ch.dim}')
    return ch


def dumps(obj: Any) -> str:
    # json uses repr for floats, which round-trips exactly
    return json.dumps(obj, allow_nan=False, sort_keys=True)


@dataclass(frozen=True, eq=False)
class Source:
    """A parsed input: the channel plus, for families, its analytic density."""

    channel: ChannelSpec
    family: str | None = None
    params: dict = field(default_factory=dict)
    analytic: Callable[[], AnalyticPdf] | None = None
    schur: SchurChannel | None = None


def _num(obj: dict, key: str) -> float:
    if key not in obj:
        raise ParseError(f'family "{obj.get("family")}" needs "{key}"')
    v = obj[key]
    if not isinstance(v, (int, float)):
        raise ParseError(f'"{key}" must be a number')
    return float(v)


def _mixed_unitary(terms: Any) -> MixedUnitaryQubitSpec:
    if not isinstance(terms, list) or not terms:
        raise ParseError('"terms" must be a non-empty list')
    try:
        probs = [float(t["p"]) for t in terms]
        axes = [[float(c) for c in t["axis"]] for t in terms]
        angles = [float(t["angle"]) for t in terms]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError('each term needs "p", "axis" and "angle"') from exc
    return MixedUnitaryQubitSpec(np.array(probs), np.array(axes), np.array(angles))


def family_source(obj: dict) -> Source:
    fam = obj.get("family")
    if fam == "qubit_unitary":
        a = _num(obj, "alpha")
        ch = validate_channel([np.diag([1.0, np.exp(1j * a)])])
        return Source(ch, fam, {"alpha": a}, lambda: pdf_qubit_unitary(a))
    if fam == "qutrit_unitary":
        a, b = _num(obj, "alpha"), _num(obj, "beta")
        ch = validate_channel([np.diag([1.0, np.exp(1j * a), np.exp(1j * b)])])
        return Source(ch, fam, {"alpha": a, "beta": b}, lambda: pdf_qutrit_unitary(a, b))
    if fam == "pauli":
        p = obj.get("p")
        if not isinstance(p, list) or len(p) != 4:
            raise ParseError('pauli family needs "p": [p0, p1, p2, p3]')
        p = [float(v) for v in p]
        ch = pauli_spec(*p).to_channel()
        return Source(ch, fam, {"p": p}, lambda: pdf_pauli(*p))
    if fam == "mixed_unitary":
        spec = _mixed_unitary(obj.get("terms"))
        return Source(spec.to_channel(), fam, {"terms": obj["terms"]}, lambda: pdf_mixed_unitary(spec))
    if fam == "schur":
        if "eigs" not in obj:
            raise ParseError('schur family needs "eigs"')
        sc = SchurChannel.from_eigs(complex_matrix(obj["eigs"]))
        return Source(sc.to_channel(), fam, {"eigs": obj["eigs"]}, schur=sc)
    raise ParseError(f"unknown family {fam!r}; expected one of {', '.join(FAMILIES)}")


def parse_source(obj: Any) -> Source:
    if not isinstance(obj, dict):
        raise ParseError("input must be a JSON object")
    if "family" in obj:
        return family_source(obj)
    return Source(channel_from_json(obj))


def load_source(path: str) -> Source:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_source(obj)
