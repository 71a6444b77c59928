"""Channels, pure states, Haar sampling and operation fidelity.

A channel is stored as its ordered Kraus set.  The operation fidelity of a
pure state ``psi`` is ``sum_j |<psi|K_j|psi>|**2``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import DimensionMismatch, InvalidDimension, NotTracePreserving, ValidationError

TP_ATOL = 1e-10
HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-12

# Haar states are drawn in blocks of this many rows to bound memory.
_BLOCK = 1 << 16


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    dim: int
    kraus: tuple[np.ndarray, ...]

    @property
    def m(self) -> int:
        return len(self.kraus)

    def stacked(self) -> np.ndarray:
        """Kraus operators as an ``(m, d, d)`` array."""
        return np.stack(self.kraus)

    def split(self) -> list[np.ndarray]:
        """The 2m Hermitian operators ``(H_1..H_m, A_1..A_m)``."""
        pairs = [hermitian_split(k) for k in self.kraus]
        return [p.h for p in pairs] + [p.a for p in pairs]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelSpec):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.m == other.m
            and all(np.array_equal(a, b) for a, b in zip(self.kraus, other.kraus))
        )

    __hash__ = None  # type: ignore[assignment]


def validate_channel(kraus: Sequence[np.ndarray], atol: float = TP_ATOL) -> ChannelSpec:
    """Check shapes and the completeness relation, returning a ChannelSpec.

    Raises:
        DimensionMismatch: empty input, non-square or ragged matrices.
        NotTracePreserving: ``sum K^dag K`` deviates from the identity by
            more than ``atol`` in any entry.
    """
    mats = [np.asarray(k, dtype=complex) for k in kraus]
    if not mats:
        raise DimensionMismatch("at least one Kraus operator is required")
    d = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for k in mats:
        if k.ndim != 2 or k.shape != (d, d):
            raise DimensionMismatch(
                f"Kraus operators must all be square of size {mats[0].shape}, got {k.shape}"
            )
    if d < 1:
        raise DimensionMismatch("Kraus operators must be at least 1x1")
    completeness = sum(k.conj().T @ k for k in mats)
    dev = float(np.max(np.abs(completeness - np.eye(d))))
    if dev > atol:
        raise NotTracePreserving(f"sum K^dag K deviates from identity by {dev:.3e}")
    return ChannelSpec(dim=d, kraus=tuple(_frozen(k) for k in mats))


def identity_channel(d: int) -> ChannelSpec:
    return validate_channel([np.eye(d)])


def unitary_channel(u: np.ndarray) -> ChannelSpec:
    return validate_channel([u])


@dataclass(frozen=True, eq=False)
class HermitianPair:
    h: np.ndarray
    a: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.h + 1j * self.a


def hermitian_split(k: np.ndarray) -> HermitianPair:
    """Split ``K = H + iA`` with ``H = (K + K^dag)/2`` and ``A = (K - K^dag)/(2i)``."""
    k = np.asarray(k, dtype=complex)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {k.shape}")
    kd = k.conj().T
    return HermitianPair(h=_frozen((k + kd) / 2), a=_frozen((k - kd) / 2j))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size == 0:
            raise InvalidDimension("amplitudes must be a non-empty vector")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValidationError(f"state is not normalized (|psi|^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "PureState":
        v = np.asarray(v, dtype=complex)
        return cls(v / np.linalg.norm(v))


def basis_state(d: int, i: int) -> PureState:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return PureState(v)


def bloch_state(theta: float, phi: float) -> PureState:
    """Qubit state ``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
    return PureState(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def haar_state(d: int, rng: np.random.Generator | int | None = None) -> PureState:
    """Draw a pure state from the unitarily invariant measure on C^d.

    ``2d`` standard normal reals form ``d`` complex amplitudes, which are
    then normalized.
    """
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    g = as_generator(rng).standard_normal(2 * d)
    return PureState.from_vector(g[:d] + 1j * g[d:])


def haar_states(d: int, n: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """``n`` Haar-random unit vectors as rows of an ``(n, d)`` complex array."""
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    g = as_generator(rng).standard_normal((n, 2 * d))
    z = g[:, :d] + 1j * g[:, d:]
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def expectations(ops: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``<psi|O_k|psi>`` for a stack ``(k, d, d)`` and states ``(n, d)``.

    Returns a complex ``(n, k)`` array.
    """
    # (n, k, d): O_k psi for every state
    opsi = np.einsum("kij,nj->nki", ops, psi)
    return np.einsum("ni,nki->nk", psi.conj(), opsi)


def _check_dims(channel: ChannelSpec, d: int) -> None:
    if channel.dim != d:
        raise DimensionMismatch(f"channel acts on C^{channel.dim}, state lives in C^{d}")


def fidelity(channel: ChannelSpec, state: PureState) -> float:
    _check_dims(channel, state.dim)
    psi = state.amplitudes
    f = sum(abs(np.vdot(psi, k @ psi)) ** 2 for k in channel.kraus)
    return float(min(max(f, 0.0), 1.0))


def fidelity_split(channel: ChannelSpec, state: PureState) -> float:
    """Fidelity from the Hermitian split: ``sum <H_j>^2 + <A_j>^2``."""
    _check_dims(channel, state.dim)
    psi = state.amplitudes
    return float(sum(np.vdot(psi, op @ psi).real ** 2 for op in channel.split()))


def fidelities(channel: ChannelSpec, psi: np.ndarray) -> np.ndarray:
    """Vectorized fidelity for the rows of ``psi``."""
    psi = np.atleast_2d(psi)
    _check_dims(channel, psi.shape[1])
    e = expectations(channel.stacked(), psi)
    f = np.sum(e.real**2 + e.imag**2, axis=1)
    return np.clip(f, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted fidelity samples with the seed and worker count that made them."""

    samples: np.ndarray
    seed: int | None = None
    workers: int = 1
    count: int = field(init=False)

    def __post_init__(self) -> None:
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size and (s[0] < 0.0 or s[-1] > 1.0):
            raise ValidationError("fidelity samples must lie in [0, 1]")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "count", int(s.size))

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def std(self) -> float:
        return float(np.std(self.samples))

    def stderr(self) -> float:
        return self.std() / np.sqrt(self.count)

    def cdf(self, x: np.ndarray | float) -> np.ndarray:
        return np.searchsorted(self.samples, x, side="right") / self.count

    def histogram(self, bins: int | np.ndarray = 50, range_: tuple[float, float] | None = None):
        """Density-normalized histogram ``(edges, density)``."""
        dens, edges = np.histogram(self.samples, bins=bins, range=range_, density=True)
        return edges, dens


def default_workers() -> int:
    return max(1, int(os.environ.get("FIDSHADOW_WORKERS", "1")))


def child_seeds(seed: int | None, k: int) -> list[int]:
    """``k`` independent 64-bit seeds derived from ``seed``."""
    state = np.random.SeedSequence(seed).generate_state(k, dtype=np.uint64)
    return [int(x) for x in state]


def worker_streams(seed: int | None, workers: int) -> list[np.random.Generator]:
    """One independent generator per worker, derived from ``(seed, worker index)``."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(workers)]


def parallel_map_chunks(fn, n: int, seed: int | None, workers: int) -> np.ndarray:
    """Run ``fn(count, rng)`` on ``workers`` shares of ``n`` and concatenate.

    Results depend only on ``(seed, workers)``, not on thread scheduling.
    """
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n}")
    if workers < 1:
        raise ValidationError(f"worker count must be >= 1, got {workers}")
    shares = [len(c) for c in np.array_split(np.arange(n), workers)]
    streams = worker_streams(seed, workers)

    def run(i: int) -> np.ndarray:
        out = []
        left = shares[i]
        while left > 0:
            k = min(left, _BLOCK)
            out.append(fn(k, streams[i]))
            left -= k
        return np.concatenate(out) if out else None

    if workers == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(workers)))
    return np.concatenate([p for p in parts if p is not None])


def sample_fidelities(
    channel: ChannelSpec, n: int, seed: int | None = None, workers: int = 1
) -> EmpiricalDistribution:
    """Fidelities of ``n`` independent Haar-random pure states."""
    stacked = channel.stacked()
    d = channel.dim

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        e = expectations(stacked, haar_states(d, k, rng))
        return np.clip(np.sum(e.real**2 + e.imag**2, axis=1), 0.0, 1.0)

    return EmpiricalDistribution(parallel_map_chunks(draw, n, seed, workers), seed=seed, workers=workers)


def random_unitary(d: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Haar-random ``d x d`` unitary."""
    if d < 1:
        raise InvalidDimension(f"dimension must be >= 1, got {d}")
    rng = as_generator(rng)
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def random_channel(d: int, m: int, rng: np.random.Generator | int | None = None) -> ChannelSpec:
    """Channel with ``m`` Kraus operators cut from a random ``dm x d`` isometry."""
    v = random_unitary(d * m, rng)[:, :d]
    return validate_channel([v[j * d:(j + 1) * d] for j in range(m)])
