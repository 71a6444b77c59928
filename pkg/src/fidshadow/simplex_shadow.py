"""Uniform shadows of commuting Hermitian collections.

When ``m`` commuting Hermitian operators together with the identity span
all diagonal matrices (in their common eigenbasis), the joint numerical
range is a simplex whose vertices are the joint eigenvalue tuples and the
Haar shadow on it is uniform.  Fidelity densities of such channels, and of
unitary channels padded with a small commuting Hermitian part, then follow
from sampling the simplex directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import hadamard, schur

from .errors import InapplicableMethod, NotCommuting, NotSpanning, ValidationError
from .numrange import HermitianCollection, shadow_sample
from .quantum_core import (
    ChannelSpec,
    EmpiricalDistribution,
    child_seeds,
    hermitian_split,
    parallel_map_chunks,
    validate_channel,
)
from .schur import minimize_on_simplex
from .stats import sliced_energy_test

COMMUTATOR_ATOL = 1e-10
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CommutingCollection:
    ops: tuple[np.ndarray, ...]
    diagonalizer: np.ndarray
    eigs: np.ndarray  # (m, d): row i holds the eigenvalues of ops[i]
    rank: int

    @property
    def dim(self) -> int:
        return self.diagonalizer.shape[0]

    @property
    def spanning(self) -> bool:
        return self.rank == self.dim

    @property
    def rank_deficit(self) -> int:
        return self.dim - self.rank


def _is_scalar(b: np.ndarray, tol: float) -> bool:
    return np.max(np.abs(b - np.trace(b) / b.shape[0] * np.eye(b.shape[0]))) <= tol


def _clusters(vals: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _refine(q: np.ndarray, ops: Sequence[np.ndarray], tol: float) -> list[np.ndarray]:
    """Split the subspace spanned by ``q`` into joint eigenspaces of ``ops``."""
    if q.shape[1] == 1:
        return [q]
    for h in ops:
        b = q.conj().T @ h @ q
        if _is_scalar(b, tol):
            continue
        vals, vecs = np.linalg.eigh((b + b.conj().T) / 2)
        out = []
        for g in _clusters(vals, tol):
            out.extend(_refine(q @ vecs[:, g], ops, tol))
        return out
    return [q]


def simultaneous_diagonalizer(ops: Sequence[np.ndarray], seed: int = 12345) -> np.ndarray:
    """Unitary ``U`` with every ``U^dag H_i U`` diagonal.

    Eigenvectors of a random real combination separate the joint eigenspaces
    generically; any cluster left degenerate is refined operator by operator.
    """
    d = ops[0].shape[0]
    scale = max(1.0, max(float(np.max(np.abs(h))) for h in ops))
    tol = 1e-8 * scale
    coeffs = np.random.default_rng(seed).standard_normal(len(ops))
    mix = sum(c * h for c, h in zip(coeffs, ops))
    vals, vecs = np.linalg.eigh((mix + mix.conj().T) / 2)
    blocks = []
    for g in _clusters(vals, tol):
        blocks.extend(_refine(vecs[:, g], ops, tol))
    u = np.hstack(blocks)
    assert u.shape == (d, d)
    return u


def commuting_collection(ops: Sequence[np.ndarray], require_spanning: bool = True) -> CommutingCollection:
    """Validate, simultaneously diagonalize and rank-check a commuting collection.

    Raises:
        NotCommuting: some commutator exceeds 1e-10 in max norm.
        NotSpanning: with ``require_spanning``, when the diagonals plus the
            identity do not span all diagonal matrices.
    """
    coll = HermitianCollection(tuple(ops))
    mats = coll.ops
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            c = mats[i] @ mats[j] - mats[j] @ mats[i]
            if np.max(np.abs(c)) > COMMUTATOR_ATOL:
                raise NotCommuting(f"operators {i} and {j} do not commute")
    u = simultaneous_diagonalizer(mats)
    eigs = np.array([np.diag(u.conj().T @ h @ u).real for h in mats])
    for h in mats:
        off = u.conj().T @ h @ u
        if np.max(np.abs(off - np.diag(np.diag(off)))) > COMMUTATOR_ATOL:
            raise NotCommuting("simultaneous diagonalization failed")
    d = coll.dim
    rank = int(np.linalg.matrix_rank(np.vstack([eigs, np.ones((1, d))]), tol=RANK_TOL))
    out = CommutingCollection(ops=mats, diagonalizer=u, eigs=eigs, rank=rank)
    if require_spanning and not out.spanning:
        raise NotSpanning(
            f"diagonals together with the identity have rank {rank} < {d}; "
            "the joint numerical range is a degenerate simplex",
            rank_deficit=d - rank,
        )
    return out


@dataclass(frozen=True, eq=False)
class SimplexEmbedding:
    vertices: np.ndarray      # (m, d): column i is the i-th vertex
    affine_frame: np.ndarray  # (m, d-1) orthonormal basis of the affine hull's direction
    volume: float

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def ambient(self) -> int:
        return self.vertices.shape[0]

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    def gram(self) -> np.ndarray:
        return self.vertices.T @ self.vertices

    def crawford_squared(self) -> float:
        """Squared distance from the origin to the simplex."""
        return minimize_on_simplex(self.gram()).value


def bordered_volume(vertices: np.ndarray) -> float:
    """``|det [[vertices], [1 ... 1]]| / (d - 1)!`` for ``d - 1`` coordinates and ``d`` vertices."""
    m, d = vertices.shape
    if m != d - 1:
        raise ValidationError("bordered determinant needs exactly d - 1 coordinates")
    return abs(float(np.linalg.det(np.vstack([vertices, np.ones((1, d))])))) / math.factorial(d - 1)


def simplex_embedding(coll: CommutingCollection) -> SimplexEmbedding:
    if not coll.spanning:
        raise NotSpanning("collection does not span the diagonal matrices", rank_deficit=coll.rank_deficit)
    v = coll.eigs
    d = v.shape[1]
    edges = v[:, :-1] - v[:, [-1]]
    if d == 1:
        return SimplexEmbedding(v, np.zeros((v.shape[0], 0)), 1.0)
    frame, _ = np.linalg.qr(edges)
    vol = math.sqrt(max(float(np.linalg.det(edges.T @ edges)), 0.0)) / math.factorial(d - 1)
    return SimplexEmbedding(vertices=v, affine_frame=frame, volume=vol)


def _uniform_weights(k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    e = rng.exponential(size=(k, d))
    return e / e.sum(axis=1, keepdims=True)


def uniform_simplex_sample(s: SimplexEmbedding, n: int, seed: int | None = None, workers: int = 1) -> np.ndarray:
    """``n`` points uniform on the simplex, as rows of an ``(n, m)`` array."""
    verts = s.vertices

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        return _uniform_weights(k, s.dim, rng) @ verts.T

    return parallel_map_chunks(draw, n, seed, workers).reshape(n, s.ambient)


@dataclass(frozen=True)
class UniformityReport:
    statistic: float
    p_value: float
    p_permutation: float
    alpha: float
    passed: bool
    n: int
    seed: int | None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic, "p_value": self.p_value,
            "p_permutation": self.p_permutation, "alpha": self.alpha,
            "passed": self.passed, "n": self.n, "seed": self.seed,
        }


def shadow_uniformity_check(
    coll: CommutingCollection | Sequence[np.ndarray],
    n: int,
    seed: int | None = 0,
    alpha: float = 1e-3,
    directions: int = 8,
    permutations: int = 200,
) -> UniformityReport:
    """Two-sample energy test: Haar-state shadow versus uniform simplex points."""
    if not isinstance(coll, CommutingCollection):
        coll = commuting_collection(coll)
    emb = simplex_embedding(coll)
    s_shadow, s_uniform, test_seed = child_seeds(seed, 3)
    shadow = shadow_sample(coll.ops, n, seed=s_shadow).points
    uniform = uniform_simplex_sample(emb, n, seed=s_uniform)
    res = sliced_energy_test(shadow, uniform, directions=directions, permutations=permutations, seed=test_seed)
    return UniformityReport(res.statistic, res.p_value, res.p_permutation, alpha, res.p_value > alpha, n, seed)


@dataclass(frozen=True, eq=False)
class HistogramPdf:
    """Density estimated from fidelity samples on a known support."""

    support: tuple[float, float]
    edges: np.ndarray
    values: np.ndarray
    samples: EmpiricalDistribution = field(repr=False)
    cusps: tuple[float, ...] = ()
    singularities: tuple[float, ...] = ()
    name: str = ""

    def evaluate(self, f: np.ndarray | float) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        idx = np.searchsorted(self.edges, f, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        inside = (f >= self.edges[0]) & (f <= self.edges[-1])
        out = np.where(inside, self.values[idx], 0.0)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def cdf(self, f: np.ndarray | float) -> np.ndarray:
        return self.samples.cdf(f)

    def mean(self) -> float:
        return self.samples.mean()

    def std(self) -> float:
        return self.samples.std()

    def normalization(self) -> float:
        return float(np.sum(self.values * np.diff(self.edges)))

    def grid(self, points: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        f = np.linspace(0.0, 1.0, points)
        return f, self.evaluate(f)


def histogram_pdf(
    samples: EmpiricalDistribution,
    support: tuple[float, float],
    bins: int | None = None,
    pinned_edges: Sequence[float] = (),
    smoothing: float | None = None,
    name: str = "",
) -> HistogramPdf:
    """Histogram density; Freedman-Diaconis bin width unless ``bins`` is given.

    ``pinned_edges`` inserts known critical values as bin edges.
    ``smoothing`` is a Gaussian kernel width in units of bins.
    """
    x = samples.samples
    lo = min(support[0], float(x[0]))
    hi = max(support[1], float(x[-1])) if x[-1] > support[1] else support[1]
    if hi <= lo:
        hi = lo + 1e-12
    if bins is None:
        edges = np.histogram_bin_edges(x, bins="fd", range=(lo, hi))
    else:
        edges = np.linspace(lo, hi, bins + 1)
    if len(pinned_edges):
        edges = np.union1d(edges, [p for p in pinned_edges if lo < p < hi])
    counts, edges = np.histogram(x, bins=edges)
    if smoothing:
        half = int(math.ceil(4 * smoothing))
        k = np.exp(-0.5 * (np.arange(-half, half + 1) / smoothing) ** 2)
        k /= k.sum()
        padded = np.pad(counts.astype(float), half, mode="reflect")
        counts = np.convolve(padded, k, mode="valid")
    values = counts / (counts.sum() * np.diff(edges))
    return HistogramPdf(support=(lo, hi), edges=edges, values=values, samples=samples, name=name)


def simplex_fidelities(
    emb: SimplexEmbedding, n: int, seed: int | None = None, workers: int = 1
) -> EmpiricalDistribution:
    """``F = |r|^2`` for ``r`` uniform on the simplex."""
    verts = emb.vertices

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        r = _uniform_weights(k, emb.dim, rng) @ verts.T
        return np.clip(np.sum(r * r, axis=1), 0.0, 1.0)

    return EmpiricalDistribution(parallel_map_chunks(draw, n, seed, workers), seed=seed, workers=workers)


def _require_hermitian(kraus: Sequence[np.ndarray]) -> None:
    for k in kraus:
        if np.max(np.abs(k - k.conj().T)) > 1e-12:
            raise InapplicableMethod("simplex method needs Hermitian Kraus operators")


def pdf_commuting_channel(
    ch: ChannelSpec,
    n: int,
    seed: int | None = None,
    bins: int | None = None,
    workers: int = 1,
    pinned_edges: Sequence[float] = (),
    smoothing: float | None = None,
) -> HistogramPdf:
    """Fidelity density of a channel with commuting Hermitian Kraus operators.

    Samples the simplex spanned by the joint eigenvalue tuples uniformly,
    which has the law of the Haar shadow.  Support is ``[c^2, 1]``.
    """
    _require_hermitian(ch.kraus)
    coll = commuting_collection(ch.kraus)
    emb = simplex_embedding(coll)
    samples = simplex_fidelities(emb, n, seed, workers)
    support = (emb.crawford_squared(), 1.0)
    return histogram_pdf(samples, support, bins, pinned_edges, smoothing, name="commuting_channel")


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    stderr: float
    n: int


def bspline_measure(
    s: SimplexEmbedding,
    region: Callable[[np.ndarray], np.ndarray],
    n: int,
    seed: int | None = None,
    workers: int = 1,
) -> MeasureEstimate:
    """Monte Carlo estimate of ``vol(simplex & A) / vol(simplex)``.

    ``region`` maps an ``(k, m)`` array of points to a boolean mask.
    """
    verts = s.vertices

    def draw(k: int, rng: np.random.Generator) -> np.ndarray:
        pts = _uniform_weights(k, s.dim, rng) @ verts.T
        return np.asarray(region(pts), dtype=float)

    hits = parallel_map_chunks(draw, n, seed, workers)
    p = float(hits.mean())
    return MeasureEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n)


def ball_region(radius: float, center: Sequence[float] | None = None) -> Callable[[np.ndarray], np.ndarray]:
    def inside(pts: np.ndarray) -> np.ndarray:
        c = 0.0 if center is None else np.asarray(center)
        return np.sum((pts - c) ** 2, axis=1) <= radius * radius
    return inside


def halfspace_region(normal: Sequence[float], offset: float) -> Callable[[np.ndarray], np.ndarray]:
    """Points with ``normal . r <= offset``."""
    nv = np.asarray(normal, dtype=float)
    return lambda pts: pts @ nv <= offset


def _commutes(a: np.ndarray, b: np.ndarray) -> bool:
    return np.max(np.abs(a @ b - b @ a)) <= COMMUTATOR_ATOL


def default_aux_operators(u: np.ndarray) -> list[np.ndarray]:
    """Commuting ``+-1`` operators (scaled) with ``sum H_i^2 = I`` that always span.

    Rows of a Sylvester-Hadamard matrix, truncated to ``d`` columns and
    placed in the eigenbasis of ``U``.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    _, z = schur(u, output="complex")
    size = 1 << max(1, (d - 1).bit_length())
    rows = hadamard(size)[1:, :d].astype(float)
    k = rows.shape[0]
    return [z @ np.diag(r / math.sqrt(k)) @ z.conj().T for r in rows]


def epsilon_channel(u: np.ndarray, aux: Sequence[np.ndarray], epsilon: float, drop_unitary: bool = False) -> ChannelSpec:
    """Kraus set ``{sqrt(1-eps) U, sqrt(eps) H_i}``."""
    kraus = [] if drop_unitary else [math.sqrt(1 - epsilon) * np.asarray(u, dtype=complex)]
    kraus += [math.sqrt(epsilon) * np.asarray(h, dtype=complex) for h in aux]
    return validate_channel(kraus)


def pdf_unitary_epsilon(
    u: np.ndarray,
    aux: Sequence[np.ndarray] | None,
    epsilon: float,
    n: int,
    seed: int | None = None,
    bins: int | None = None,
    workers: int = 1,
    drop_unitary: bool = False,
) -> HistogramPdf:
    """Fidelity density of ``(1 - eps) U.U^dag + eps sum_i H_i . H_i``.

    The auxiliary ``H_i`` must be Hermitian, commute with ``U`` and each
    other, and satisfy ``sum H_i^2 = I`` so the channel is trace
    preserving.  As ``eps -> 0`` the result approaches the density of ``U``.
    ``aux=None`` picks :func:`default_aux_operators`.  An empty ``aux`` is
    allowed when the parts of ``U`` already span (always true for d = 2);
    the family is then ``U`` itself for every ``eps``.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise ValidationError("U is not unitary")
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError("epsilon must lie in (0, 1]")
    aux = default_aux_operators(u) if aux is None else [np.asarray(h, dtype=complex) for h in aux]
    if drop_unitary and epsilon != 1.0:
        raise ValidationError("the unitary term may only be dropped at epsilon = 1")
    for i, h in enumerate(aux):
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise ValidationError(f"auxiliary operator {i} is not Hermitian")
        if not _commutes(h, u):
            raise NotCommuting(f"auxiliary operator {i} does not commute with U")
    if aux:
        sq = sum(h @ h for h in aux)
        if np.max(np.abs(sq - np.eye(d))) > 1e-10:
            raise ValidationError("auxiliary operators must satisfy sum H_i^2 = I")
        epsilon_channel(u, aux, epsilon, drop_unitary)  # raises if not trace preserving
    elif drop_unitary:
        raise ValidationError("dropping U leaves no Kraus operators")
    else:
        epsilon = 0.0

    parts: list[np.ndarray] = []
    if not drop_unitary:
        pair = hermitian_split(u)
        w = math.sqrt(1 - epsilon)
        parts += [w * pair.h, w * pair.a]
    parts += [math.sqrt(epsilon) * h for h in aux]
    parts = [p for p in parts if np.max(np.abs(p)) > 0]
    try:
        coll = commuting_collection(parts)
    except NotSpanning as exc:
        raise NotSpanning(
            f"{exc}; add more commuting Hermitian operators to the auxiliary set",
            rank_deficit=exc.rank_deficit,
        ) from exc
    emb = simplex_embedding(coll)
    samples = simplex_fidelities(emb, n, seed, workers)
    return histogram_pdf(samples, (emb.crawford_squared(), 1.0), bins, name=f"epsilon({epsilon!r})")
