"""Schur channels: simultaneously diagonal Kraus operators.

With ``K_j = diag(lambda_j0, ..., lambda_j,d-1)`` the fidelity of a state
depends only on ``p_i = |psi_i|^2`` and equals the quadratic form
``p^T G p`` with Gram matrix ``G_il = Re sum_j conj(lambda_ji) lambda_jl``.
Its extremes over the probability simplex give ``F_min`` and ``F_max``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ProblemTooLarge, ValidationError
from .quantum_core import ChannelSpec, PureState, validate_channel

MAX_DIM = 20
SINGULAR_EIG = 1e-12


@dataclass(frozen=True, eq=False)
class SchurChannel:
    dim: int
    eigs: np.ndarray

    def __post_init__(self) -> None:
        eigs = np.atleast_2d(np.asarray(self.eigs, dtype=complex))
        if eigs.shape[1] != self.dim:
            raise DimensionMismatch(f"eigenvalue matrix has {eigs.shape[1]} columns, expected {self.dim}")
        norms = np.sum(np.abs(eigs) ** 2, axis=0)
        dev = float(np.max(np.abs(norms - 1.0)))
        if dev > 1e-10:
            raise ValidationError(f"columns of the eigenvalue matrix are not unit vectors (deviation {dev:.3e})")
        eigs.setflags(write=False)
        object.__setattr__(self, "eigs", eigs)

    @classmethod
    def from_eigs(cls, eigs) -> "SchurChannel":
        eigs = np.atleast_2d(np.asarray(eigs, dtype=complex))
        return cls(dim=eigs.shape[1], eigs=eigs)

    @classmethod
    def from_channel(cls, channel: ChannelSpec, atol: float = 1e-12) -> "SchurChannel":
        for k in channel.kraus:
            if np.max(np.abs(k - np.diag(np.diag(k)))) > atol:
                raise ValidationError("Kraus operators are not all diagonal")
        return cls(dim=channel.dim, eigs=np.array([np.diag(k) for k in channel.kraus]))

    def to_channel(self) -> ChannelSpec:
        return validate_channel([np.diag(row) for row in self.eigs])


def phi_p(p: float) -> SchurChannel:
    """Qubit family ``K1 = diag(sqrt p, sqrt(1-p))``, ``K2 = diag(sqrt(1-p), sqrt p)``."""
    a, b = math.sqrt(p), math.sqrt(1 - p)
    return SchurChannel.from_eigs([[a, b], [b, a]])


def phi_prime(p: float, q: float) -> SchurChannel:
    """Qutrit family with three diagonal Kraus operators, parameters ``p`` and ``q``."""
    a, b = math.sqrt(p), math.sqrt(1 - p)
    return SchurChannel.from_eigs([
        [a, b, math.sqrt(q)],
        [b, a, 0.0],
        [0.0, 0.0, math.sqrt(1 - q)],
    ])


@dataclass(frozen=True, eq=False)
class GramMatrix:
    g: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch("Gram matrix must be square")
        if np.max(np.abs(g - g.T), initial=0.0) > 1e-12:
            raise ValidationError("Gram matrix must be symmetric")
        g = (g + g.T) / 2
        if np.linalg.eigvalsh(g)[0] < -1e-10:
            raise ValidationError("Gram matrix must be positive semidefinite")
        if np.max(np.abs(np.diag(g) - 1.0)) > 1e-10:
            raise ValidationError("Gram matrix of a channel has unit diagonal")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("point must be a probability vector")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


def gram_matrix(ch: SchurChannel) -> GramMatrix:
    g = (ch.eigs.conj().T @ ch.eigs).real
    g = (g + g.T) / 2
    # columns are unit vectors; pin the diagonal against rounding
    np.fill_diagonal(g, 1.0)
    return GramMatrix(g)


def fidelity_quadratic(g: GramMatrix, p: SimplexPoint) -> float:
    if p.p.shape[0] != g.dim:
        raise DimensionMismatch(f"point has {p.p.shape[0]} coordinates, Gram matrix is {g.dim}x{g.dim}")
    return float(p.p @ g.g @ p.p)


@dataclass(frozen=True)
class QuadraticMinimum:
    value: float
    p: np.ndarray
    support: tuple[int, ...]
    location: str  # "interior" or "boundary"


def _face_minimizer(g: np.ndarray) -> np.ndarray | None:
    """Minimizer of ``p^T G p`` on the affine plane ``sum p = 1``, or None."""
    k = g.shape[0]
    ones = np.ones(k)
    vals = np.linalg.eigvalsh(g)
    if vals[0] >= SINGULAR_EIG:
        w = np.linalg.solve(g, ones)
        return w / w.sum()
    # singular block: stationarity 2 G p = mu 1, sum p = 1
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2 * g
    kkt[:k, k] = -1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if np.max(np.abs(kkt @ sol - rhs)) > 1e-9:
        return None
    return sol[:k]


def minimize_on_simplex(g: np.ndarray) -> QuadraticMinimum:
    """Exact minimum of a PSD quadratic form over the probability simplex.

    Tries the interior stationary point first; if it is infeasible or ``G``
    is singular, every face of the simplex is solved on its own sub-block
    and the best feasible candidate wins.  Ties go to the lexicographically
    smallest support.
    """
    g = np.asarray(g, dtype=float)
    d = g.shape[0]
    if d > MAX_DIM:
        raise ProblemTooLarge(f"face enumeration over 2^{d} faces refused (limit d <= {MAX_DIM})")

    if np.linalg.eigvalsh(g)[0] >= SINGULAR_EIG:
        ginv = np.linalg.inv(g)
        total = ginv.sum()
        p = ginv.sum(axis=1) / total
        if np.all(p >= 0):
            return QuadraticMinimum(float(1.0 / total), p, tuple(range(d)), "interior")

    best: QuadraticMinimum | None = None
    for size in range(1, d + 1):
        for support in itertools.combinations(range(d), size):
            idx = list(support)
            sub = _face_minimizer(g[np.ix_(idx, idx)])
            if sub is None or np.any(sub < -1e-12):
                continue
            sub = np.clip(sub, 0.0, None)
            sub /= sub.sum()
            p = np.zeros(d)
            p[idx] = sub
            val = float(p @ g @ p)
            if best is None or val < best.value - 1e-12 or (
                abs(val - best.value) <= 1e-12 and support < best.support
            ):
                loc = "interior" if np.all(p > 0) else "boundary"
                best = QuadraticMinimum(val, p, support, loc)
    assert best is not None  # vertices are always feasible
    return best


@dataclass(frozen=True)
class SchurMinimum:
    f_min: float
    p_star: SimplexPoint
    location: str

    def __iter__(self):
        yield self.f_min
        yield self.p_star
        yield self.location


def schur_min_fidelity(g: GramMatrix) -> SchurMinimum:
    res = minimize_on_simplex(g.g)
    return SchurMinimum(res.value, SimplexPoint(res.p), res.location)


def schur_max_fidelity(g: GramMatrix) -> tuple[float, SimplexPoint]:
    """The convex form peaks at a vertex; unit diagonal makes that value 1."""
    i = int(np.argmax(np.diag(g.g)))
    p = np.zeros(g.dim)
    p[i] = 1.0
    return float(g.g[i, i]), SimplexPoint(p)


def min_fidelity_state(g: GramMatrix, p_star: SimplexPoint) -> PureState:
    """State with amplitudes ``sqrt(p_i)``; phases are irrelevant so zero is used."""
    if p_star.p.shape[0] != g.dim:
        raise DimensionMismatch("p_star does not match the Gram matrix dimension")
    return PureState.from_vector(np.sqrt(p_star.p).astype(complex))
