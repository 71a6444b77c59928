"""Joint numerical range tools for collections of Hermitian operators.

The joint numerical radius ``w`` and Crawford number ``c`` are the largest
and smallest Euclidean norms of expectation vectors ``<psi|H|psi>``.  For a
channel split into its 2m Hermitian parts, ``c**2`` and ``w**2`` are the
extreme operation fidelities.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatch, NonConvergence, ValidationError
from .quantum_core import (
    HERMITIAN_ATOL,
    ChannelSpec,
    PureState,
    as_generator,
    expectations,
    haar_states,
    parallel_map_chunks,
)

RESTARTS = 32
TOL = 1e-10
AGREEMENT = 1e-6


@dataclass(frozen=True, eq=False)
class HermitianCollection:
    ops: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        mats = [np.asarray(h, dtype=complex) for h in self.ops]
        if not mats:
            raise ValidationError("collection must contain at least one operator")
        d = mats[0].shape[0]
        for h in mats:
            if h.ndim != 2 or h.shape != (d, d):
                raise DimensionMismatch("operators must be square and of equal size")
            if np.max(np.abs(h - h.conj().T)) > HERMITIAN_ATOL:
                raise ValidationError("operator is not Hermitian")
        frozen = []
        for h in mats:
            h = (h + h.conj().T) / 2
            h.setflags(write=False)
            frozen.append(h)
        object.__setattr__(self, "ops", tuple(frozen))

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.ops)

    def stacked(self) -> np.ndarray:
        return np.stack(self.ops)

    @classmethod
    def from_channel(cls, channel: ChannelSpec) -> "HermitianCollection":
        return cls(tuple(channel.split()))

    def conjugated(self, u: np.ndarray) -> "HermitianCollection":
        """The collection ``U^dag H_i U``."""
        u = np.asarray(u, dtype=complex)
        return HermitianCollection(tuple(u.conj().T @ h @ u for h in self.ops))


def joint_expectation(ops: HermitianCollection, state: PureState) -> np.ndarray:
    if state.dim != ops.dim:
        raise DimensionMismatch(f"operators act on C^{ops.dim}, state lives in C^{state.dim}")
    e = expectations(ops.stacked(), state.amplitudes[None, :])[0]
    return e.real.copy()


@dataclass(frozen=True)
class ExtremumResult:
    """Best value found by the sphere optimizer.

    ``converged`` is False when fewer than two restarts reached the best
    value within the agreement tolerance.
    """

    value: float
    state: np.ndarray
    converged: bool = True
    agreeing_restarts: int = 0
    method: str = "optimizer"

    def __float__(self) -> float:
        return self.value


def _sq_norm_and_grad(x: np.ndarray, ops: np.ndarray, d: int) -> tuple[float, np.ndarray]:
    """``|<z|H|z>|^2 / |z|^4`` summed over ops, and its gradient in (Re z, Im z)."""
    z = x[:d] + 1j * x[d:]
    nrm = float(np.vdot(z, z).real)
    hz = ops @ z
    e = (hz @ z.conj()).real / nrm
    f = float(e @ e)
    # d e_i / d(Re z, Im z) = 2 (H_i z - e_i z) / |z|^2, split into parts
    g = (4.0 / nrm) * np.einsum("i,ij->j", e, hz - e[:, None] * z[None, :])
    return f, np.concatenate([g.real, g.imag])


def sq_norm_gradient(x: np.ndarray, ops: np.ndarray) -> np.ndarray:
    d = ops.shape[1]
    return _sq_norm_and_grad(np.asarray(x, dtype=float), ops, d)[1]


def sq_norm_objective(x: np.ndarray, ops: np.ndarray) -> float:
    d = ops.shape[1]
    return _sq_norm_and_grad(np.asarray(x, dtype=float), ops, d)[0]


def _polish_max(z: np.ndarray, ops: np.ndarray, iters: int = 200) -> np.ndarray:
    # Ascent on a convex function of rho: replace psi by the top eigenvector
    # of sum r_i H_i until the norm stops growing.
    z = z / np.linalg.norm(z)
    best = None
    for _ in range(iters):
        r = (ops @ z @ z.conj()).real
        f = float(r @ r)
        if best is not None and f <= best + 1e-16:
            break
        best = f
        _, vecs = np.linalg.eigh(np.tensordot(r, ops, axes=1))
        z = vecs[:, -1]
    return z


def _optimize(
    ops: HermitianCollection,
    maximize: bool,
    restarts: int,
    tol: float,
    seed: int | None,
) -> ExtremumResult:
    stack = ops.stacked()
    d = ops.dim
    sign = -1.0 if maximize else 1.0
    rng = as_generator(seed)
    starts = haar_states(d, restarts, rng)

    def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
        f, g = _sq_norm_and_grad(x, stack, d)
        return sign * f, sign * g

    values, states = [], []
    for z0 in starts:
        x0 = np.concatenate([z0.real, z0.imag])
        res = minimize(
            fun, x0, jac=True, method="L-BFGS-B",
            options={"ftol": tol * 1e-2, "gtol": 1e-12, "maxiter": 2000},
        )
        z = res.x[:d] + 1j * res.x[d:]
        if maximize:
            z = _polish_max(z, stack)
        z = z / np.linalg.norm(z)
        r = (stack @ z @ z.conj()).real
        values.append(float(np.sqrt(r @ r)))
        states.append(z)

    values_arr = np.array(values)
    best = int(np.argmax(values_arr) if maximize else np.argmin(values_arr))
    agree = int(np.sum(np.abs(values_arr - values_arr[best]) <= AGREEMENT))
    return ExtremumResult(
        value=float(values_arr[best]),
        state=states[best],
        converged=agree >= 2 or restarts == 1,
        agreeing_restarts=agree,
    )


def _single_operator(h: np.ndarray, maximize: bool) -> ExtremumResult:
    vals, vecs = np.linalg.eigh(h)
    if maximize:
        i = int(np.argmax(np.abs(vals)))
        return ExtremumResult(float(abs(vals[i])), vecs[:, i], method="eigenvalues")
    if vals[0] <= 0.0 <= vals[-1]:
        # eigenvalues straddle zero: mix the extreme eigenvectors to hit <H> = 0
        lo, hi = vals[0], vals[-1]
        if hi == lo:
            z = vecs[:, 0]
        else:
            t = hi / (hi - lo)
            z = np.sqrt(t) * vecs[:, 0] + np.sqrt(1 - t) * vecs[:, -1]
        return ExtremumResult(0.0, z, method="eigenvalues")
    i = int(np.argmin(np.abs(vals)))
    return ExtremumResult(float(abs(vals[i])), vecs[:, i], method="eigenvalues")


def _nonzero(ops: HermitianCollection) -> HermitianCollection | None:
    kept = tuple(h for h in ops.ops if np.max(np.abs(h)) > 0.0)
    return HermitianCollection(kept) if kept else None


def numerical_radius(
    ops: HermitianCollection,
    restarts: int = RESTARTS,
    tol: float = TOL,
    seed: int | None = 0,
) -> ExtremumResult:
    """Joint numerical radius ``w = sup |<psi|H|psi>|``."""
    active = _nonzero(ops)
    if active is None:
        return ExtremumResult(0.0, np.eye(ops.dim, 1)[:, 0].astype(complex), method="zero")
    if active.n == 1:
        return _single_operator(active.ops[0], maximize=True)
    return _optimize(active, True, restarts, tol, seed)


def crawford_number(
    ops: HermitianCollection,
    restarts: int = RESTARTS,
    tol: float = TOL,
    seed: int | None = 0,
) -> ExtremumResult:
    """Crawford number ``c = inf |<psi|H|psi>|``."""
    active = _nonzero(ops)
    if active is None:
        return ExtremumResult(0.0, np.eye(ops.dim, 1)[:, 0].astype(complex), method="zero")
    if active.n == 1:
        return _single_operator(active.ops[0], maximize=False)
    return _optimize(active, False, restarts, tol, seed)


@dataclass(frozen=True)
class FidelityBounds:
    f_min: float
    f_max: float
    min_state: np.ndarray = field(repr=False)
    max_state: np.ndarray = field(repr=False)
    converged: bool = True

    def __iter__(self):
        yield self.f_min
        yield self.f_max


def extremal_fidelity(
    channel: ChannelSpec,
    restarts: int = RESTARTS,
    tol: float = TOL,
    seed: int | None = 0,
    strict: bool = False,
) -> FidelityBounds:
    """``(F_min, F_max) = (c**2, w**2)`` of the channel's 2m Hermitian parts.

    With ``strict=True`` a restart disagreement raises NonConvergence
    instead of only clearing the ``converged`` flag.
    """
    coll = HermitianCollection.from_channel(channel)
    lo = crawford_number(coll, restarts, tol, seed)
    hi = numerical_radius(coll, restarts, tol, seed)
    ok = lo.converged and hi.converged
    if strict and not ok:
        raise NonConvergence("restarts disagree on an extremal fidelity", best_value=lo.value**2)
    return FidelityBounds(
        f_min=min(lo.value**2, 1.0),
        f_max=min(hi.value**2, 1.0),
        min_state=lo.state,
        max_state=hi.state,
        converged=ok,
    )


@dataclass(frozen=True, eq=False)
class ShadowCloud:
    points: np.ndarray
    seed: int | None = None
    workers: int = 1

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def to_csv(self, fh: io.TextIOBase | None = None) -> str:
        """One row per point, columns ``r_1..r_n`` with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"r_{i + 1}" for i in range(self.points.shape[1])])
        for row in self.points:
            w.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "ShadowCloud":
        rows = list(csv.reader(io.StringIO(text)))
        return cls(np.array([[float(v) for v in r] for r in rows[1:]]))


def shadow_sample(
    ops: HermitianCollection | Sequence[np.ndarray],
    n: int,
    seed: int | None = None,
    workers: int = 1,
) -> ShadowCloud:
    """Expectation vectors of ``n`` Haar-random states."""
    if not isinstance(ops, HermitianCollection):
        ops = HermitianCollection(tuple(ops))
    stack = ops.stacked()
    d = ops.dim

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        return expectations(stack, haar_states(d, k, rng)).real

    pts = parallel_map_chunks(draw, n, seed, workers)
    return ShadowCloud(points=pts.reshape(n, stack.shape[0]), seed=seed, workers=workers)
