"""Telling channels apart by their operation-fidelity distributions.

Two channels in the same equivalence class share ``P(F)``.  Sampling can
only fail to reject that hypothesis, so the verdict ``same-class`` means
"not rejected at the configured level", never a proof.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySample, ValidationError
from .numrange import extremal_fidelity
from .quantum_core import (
    ChannelSpec,
    EmpiricalDistribution,
    expectations,
    haar_states,
    parallel_map_chunks,
    validate_channel,
)
from .stats import ks_two_sample

ORTHO_ATOL = 1e-10
SUPPORT_TOL = 1e-9
KS_COEFF = 1.63  # asymptotic two-sample critical coefficient at alpha = 0.01
BAND = 0.10

SAME = "same-class"
DISTINCT = "distinct"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class ChannelTransform:
    orthogonal: np.ndarray
    unitary: np.ndarray

    def __post_init__(self) -> None:
        o = np.asarray(self.orthogonal, dtype=float)
        u = np.asarray(self.unitary, dtype=complex)
        if o.ndim != 2 or o.shape[0] != o.shape[1]:
            raise DimensionMismatch("O must be square")
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionMismatch("U must be square")
        if np.max(np.abs(o.T @ o - np.eye(o.shape[0]))) > ORTHO_ATOL:
            raise ValidationError("O is not orthogonal")
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > ORTHO_ATOL:
            raise ValidationError("U is not unitary")
        object.__setattr__(self, "orthogonal", o)
        object.__setattr__(self, "unitary", u)

    @classmethod
    def from_kraus_unitary(cls, v: np.ndarray, u: np.ndarray) -> "ChannelTransform":
        """Real form of the Kraus remixing ``K'_i = sum_j V_ij K_j`` (always trace preserving)."""
        v = np.asarray(v, dtype=complex)
        o = np.block([[v.real, -v.imag], [v.imag, v.real]])
        return cls(o, u)


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    if a.count == 0 or b.count == 0:
        raise EmptySample("both distributions need at least one sample")
    return ks_two_sample(a.samples, b.samples)


def transform_channel(ch: ChannelSpec, t: ChannelTransform) -> ChannelSpec:
    """Mix the 2m Hermitian parts with O, conjugate by U, and reassemble.

    Only O that keep ``sum_j i[H_j, A_j]`` fixed give a trace-preserving
    result; anything else raises NotTracePreserving.
    """
    m, d = ch.m, ch.dim
    o, u = t.orthogonal, t.unitary
    if o.shape != (2 * m, 2 * m):
        raise DimensionMismatch(f"O must be {2 * m}x{2 * m} for {m} Kraus operators, got {o.shape}")
    if u.shape != (d, d):
        raise DimensionMismatch(f"U must be {d}x{d}, got {u.shape}")
    parts = np.stack(ch.split())
    rotated = np.einsum("ij,jab->iab", o, u.conj().T @ parts @ u)
    return validate_channel([rotated[j] + 1j * rotated[j + m] for j in range(m)])


@dataclass(frozen=True)
class DiscriminationReport:
    ks_statistic: float
    threshold: float
    support_exclusions: tuple[int, int]
    verdict: str
    sample_sizes: tuple[int, int]
    seed: int | None
    supports: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self) -> None:
        excluded = sum(self.support_exclusions) > 0
        if self.verdict == DISTINCT and not (excluded or self.ks_statistic > self.threshold):
            raise ValidationError("distinct verdict without evidence")
        if self.verdict != DISTINCT and excluded:
            raise ValidationError("support exclusion must yield a distinct verdict")

    def to_dict(self) -> dict:
        return asdict(self)


def _paired_fidelities(a: ChannelSpec, b: ChannelSpec, n: int, seed, workers: int):
    ka, kb = a.stacked(), b.stacked()
    d = a.dim

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        psi = haar_states(d, k, rng)
        ea, eb = expectations(ka, psi), expectations(kb, psi)
        fa = np.sum(ea.real**2 + ea.imag**2, axis=1)
        fb = np.sum(eb.real**2 + eb.imag**2, axis=1)
        return np.clip(np.stack([fa, fb], axis=1), 0.0, 1.0)

    out = parallel_map_chunks(draw, n, seed, workers)
    return (
        EmpiricalDistribution(out[:, 0], seed=seed, workers=workers),
        EmpiricalDistribution(out[:, 1], seed=seed, workers=workers),
    )


def _outside(samples: np.ndarray, lo: float, hi: float) -> int:
    return int(np.sum(samples < lo - SUPPORT_TOL) + np.sum(samples > hi + SUPPORT_TOL))


def default_threshold(n: int) -> float:
    return KS_COEFF * math.sqrt(2.0 / n)


def discriminate(
    a: ChannelSpec,
    b: ChannelSpec,
    n: int = 10_000,
    seed: int | None = 0,
    ks_threshold: float | None = None,
    workers: int = 1,
) -> DiscriminationReport:
    """Compare two channels by support exclusion, then by the KS distance.

    Both channels are evaluated on the same Haar-random states (common
    random numbers).  That makes the verdict symmetric in its arguments and
    the KS threshold conservative, since paired samples fluctuate less
    than independent ones.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"channels act on C^{a.dim} and C^{b.dim}")
    thr = default_threshold(n) if ks_threshold is None else float(ks_threshold)
    fa, fb = _paired_fidelities(a, b, n, seed, workers)
    sa, sb = tuple(extremal_fidelity(a)), tuple(extremal_fidelity(b))
    excl = (_outside(fa.samples, *sb), _outside(fb.samples, *sa))
    ks = ks_distance(fa, fb)
    if sum(excl) > 0:
        verdict = DISTINCT
    elif abs(ks - thr) <= BAND * thr:
        verdict = INCONCLUSIVE
    elif ks > thr:
        verdict = DISTINCT
    else:
        verdict = SAME
    return DiscriminationReport(
        ks_statistic=ks,
        threshold=thr,
        support_exclusions=excl,
        verdict=verdict,
        sample_sizes=(fa.count, fb.count),
        seed=seed,
        supports=(sa, sb),
    )
