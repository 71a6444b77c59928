"""Closed-form fidelity densities for qubit and qutrit channels.

Covers single-qubit unitaries, mixed-unitary qubit channels (through the
real symmetric matrix ``S`` with ``F = b^T S b`` for Bloch vector ``b``),
Pauli channels, and diagonal qutrit unitaries whose numerical range is a
triangle with a uniform shadow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DegenerateChannel, DegenerateSpectrum, DegenerateTriangle, ValidationError
from .quantum_core import ChannelSpec, validate_channel

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

QUAD_EPSREL = 1e-8
# lambda_1 == lambda_3 within this tolerance means a point-mass distribution
DEGENERATE_TOL = 1e-12
PAIR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AnalyticPdf:
    """A piecewise-smooth density on ``support``.

    ``density`` is vectorized and only called strictly inside the support
    and away from the declared singularities.  ``evaluate`` returns 0
    outside the support and ``math.inf`` at a declared singularity.
    """

    support: tuple[float, float]
    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    cusps: tuple[float, ...] = ()
    singularities: tuple[float, ...] = ()
    cusp_labels: tuple[str, ...] = ()
    cdf_func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    name: str = ""

    def evaluate(self, f: np.ndarray | float) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        out = np.zeros(f.shape)
        lo, hi = self.support
        inside = (f >= lo) & (f <= hi)
        sing = np.zeros(f.shape, dtype=bool)
        for s in self.singularities:
            sing |= np.abs(f - s) <= 1e-15 * max(1.0, abs(s))
        ok = inside & ~sing
        if np.any(ok):
            out[ok] = self.density(f[ok])
        out[inside & sing] = math.inf
        return out if out.ndim else float(out)

    __call__ = evaluate

    def breakpoints(self) -> list[float]:
        lo, hi = self.support
        pts = {lo, hi}
        pts.update(p for p in (*self.cusps, *self.singularities) if lo < p < hi)
        return sorted(pts)

    def _scalar(self, g: Callable[[float], float] | None) -> Callable[[float], float]:
        dens = self.density
        if g is None:
            return lambda x: float(dens(np.array([x]))[0])
        return lambda x: g(x) * float(dens(np.array([x]))[0])

    def integrate(self, g: Callable[[float], float] | None = None, a: float | None = None,
                  b: float | None = None) -> float:
        """``int g(F) P(F) dF`` over ``[a, b]`` (default the support), split at breakpoints."""
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
        if b <= a:
            return 0.0
        fn = self._scalar(g)
        pts = [a] + [p for p in self.breakpoints() if a < p < b] + [b]
        total = 0.0
        with warnings.catch_warnings():
            # endpoint singularities trip QUADPACK's roundoff heuristics
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for x0, x1 in zip(pts[:-1], pts[1:]):
                val, _ = integrate.quad(fn, x0, x1, epsabs=1e-12, epsrel=1e-10, limit=200)
                total += val
        return total

    def normalization(self) -> float:
        return self.integrate()

    @cached_property
    def _moments(self) -> tuple[float, float]:
        m1 = self.integrate(lambda x: x)
        m2 = self.integrate(lambda x: x * x)
        return m1, m2

    def mean(self) -> float:
        return self._moments[0]

    def std(self) -> float:
        m1, m2 = self._moments
        return math.sqrt(max(m2 - m1 * m1, 0.0))

    @cached_property
    def _cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        bps = self.breakpoints()
        total = bps[-1] - bps[0]
        nodes = [np.array([bps[0]])]
        for x0, x1 in zip(bps[:-1], bps[1:]):
            k = max(32, int(2048 * (x1 - x0) / total))
            # cluster nodes at both ends of each smooth piece
            t = (1 - np.cos(np.pi * np.arange(1, k + 1) / k)) / 2
            nodes.append(x0 + (x1 - x0) * t)
        grid = np.concatenate(nodes)
        fn = self._scalar(None)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            inc = [
                integrate.quad(fn, x0, x1, epsabs=1e-13, epsrel=1e-10, limit=50)[0]
                for x0, x1 in zip(grid[:-1], grid[1:])
            ]
        vals = np.concatenate([[0.0], np.cumsum(inc)])
        return grid, vals / vals[-1]

    def cdf(self, f: np.ndarray | float) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        lo, hi = self.support
        if self.cdf_func is not None:
            inner = np.clip(f, lo, hi)
            out = np.where(f <= lo, 0.0, np.where(f >= hi, 1.0, self.cdf_func(inner)))
        else:
            grid, vals = self._cdf_table
            out = np.interp(f, grid, vals, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def grid(self, points: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        """``(F, P(F))`` on an even grid over [0, 1]; singular points give inf."""
        f = np.linspace(0.0, 1.0, points)
        return f, self.evaluate(f)


# ---------------------------------------------------------------------------
# single-qubit unitary


def pdf_qubit_unitary(alpha: float) -> AnalyticPdf:
    """Density of ``U = |0><0| + e^{i alpha}|1><1|``.

    ``P(F) = [(1 - cos a)(2F - 1 - cos a)]^{-1/2}`` on ``[(1 + cos a)/2, 1]``.
    """
    c = math.cos(alpha)
    if 1.0 - c < DEGENERATE_TOL:
        raise DegenerateChannel("alpha = 0 is the identity channel; F = 1 almost surely")
    lo = (1.0 + c) / 2.0
    scale = 1.0 - c

    def density(f: np.ndarray) -> np.ndarray:
        return 1.0 / np.sqrt(scale * (2.0 * f - 1.0 - c))

    def cdf(f: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(2.0 * f - 1.0 - c, 0.0) / scale)

    return AnalyticPdf(
        support=(lo, 1.0), density=density, singularities=(lo,), cdf_func=cdf,
        name=f"qubit_unitary(alpha={alpha!r})",
    )


def qubit_unitary_moments(alpha: float) -> tuple[float, float]:
    """Mean ``(2 + cos a)/3`` and std ``2 sin^2(a/2) / (3 sqrt 5)``."""
    return (2.0 + math.cos(alpha)) / 3.0, 2.0 * math.sin(alpha / 2) ** 2 / (3.0 * math.sqrt(5.0))


# ---------------------------------------------------------------------------
# mixed-unitary qubit channels


@dataclass(frozen=True, eq=False)
class MixedUnitaryQubitSpec:
    """``rho -> sum_j p_j U_j rho U_j^dag`` with ``U_j = exp(i theta_j/2 n_j.sigma)``."""

    probs: np.ndarray
    axes: np.ndarray
    angles: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).ravel()
        n = np.asarray(self.axes, dtype=float).reshape(-1, 3)
        th = np.asarray(self.angles, dtype=float).ravel()
        if not (p.size == n.shape[0] == th.size) or p.size == 0:
            raise ValidationError("probs, axes and angles must have equal, non-zero length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError("probabilities must be non-negative and sum to 1")
        if np.max(np.abs(np.linalg.norm(n, axis=1) - 1.0)) > 1e-12:
            raise ValidationError("rotation axes must be unit vectors")
        for name, arr in (("probs", p), ("axes", n), ("angles", th)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def unitaries(self) -> list[np.ndarray]:
        out = []
        for n, th in zip(self.axes, self.angles):
            ns = sum(c * s for c, s in zip(n, PAULI))
            out.append(math.cos(th / 2) * np.eye(2) + 1j * math.sin(th / 2) * ns)
        return out

    def to_channel(self) -> ChannelSpec:
        return validate_channel([math.sqrt(p) * u for p, u in zip(self.probs, self.unitaries())])


def pauli_spec(p0: float, p1: float, p2: float, p3: float) -> MixedUnitaryQubitSpec:
    """Pauli channel as rotations by pi about x, y, z plus the identity."""
    return MixedUnitaryQubitSpec(
        probs=np.array([p0, p1, p2, p3]),
        axes=np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float),
        angles=np.array([0.0, math.pi, math.pi, math.pi]),
    )


@dataclass(frozen=True, eq=False)
class SMatrix:
    s: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)


def build_s_matrix(spec: MixedUnitaryQubitSpec) -> SMatrix:
    """``S_kl = sum_j p_j (cos^2(t_j/2) delta_kl + sin^2(t_j/2) n_jk n_jl)``."""
    c2 = np.cos(spec.angles / 2) ** 2
    s2 = np.sin(spec.angles / 2) ** 2
    s = np.sum(spec.probs * c2) * np.eye(3) + np.einsum("j,jk,jl->kl", spec.probs * s2, spec.axes, spec.axes)
    s = (s + s.T) / 2
    vals, vecs = np.linalg.eigh(s)
    return SMatrix(s=s, eigenvalues=np.clip(vals, 0.0, 1.0), eigenvectors=vecs)


def extremes_mixed_unitary(s: SMatrix) -> tuple[float, float]:
    return float(s.eigenvalues[0]), float(s.eigenvalues[2])


def mean_mixed_unitary(spec: MixedUnitaryQubitSpec) -> float:
    """``sum_k p_k (2 cos^2(theta_k/2) + 1) / 3``."""
    return float(np.sum(spec.probs * (2 * np.cos(spec.angles / 2) ** 2 + 1)) / 3)


def std_mixed_unitary(s: SMatrix) -> float:
    # uniform Bloch sphere: E[b_k^4] = 1/5, E[b_k^2 b_l^2] = 1/15
    lam = s.eigenvalues
    tr = lam.sum()
    var = (2 * np.sum(lam**2) + tr**2) / 15 - tr**2 / 9
    return math.sqrt(max(var, 0.0))


def _lambdas(s: SMatrix | MixedUnitaryQubitSpec) -> tuple[float, float, float]:
    if isinstance(s, MixedUnitaryQubitSpec):
        s = build_s_matrix(s)
    l1, l2, l3 = (float(v) for v in s.eigenvalues)
    return l1, l2, l3


def mixed_unitary_density_quad(f: float, l1: float, l2: float, l3: float) -> float:
    """Density at one ``F`` by Gauss-Kronrod quadrature over the Bloch azimuth.

    For ``F > l2`` integrates ``[(F - a)(l3 - a)]^{-1/2} / (4 pi)`` with
    ``a = l1 cos^2 phi + l2 sin^2 phi``; below ``l2`` the roles of ``l1``
    and ``l3`` are exchanged.  The integrand has period pi and is even, so
    ``[0, 2 pi]`` folds onto four copies of ``[0, pi/2]``.
    """
    if f > l2:
        lo_, hi_ = l1, l3
    elif f < l2:
        lo_, hi_ = l3, l1
    else:
        return math.inf

    du, dv = f - lo_, f - l2
    eu, ev = hi_ - lo_, hi_ - l2

    def integrand(phi: float) -> float:
        # f - a and hi - a written without cancellation near F = l2
        c2, s2 = math.cos(phi) ** 2, math.sin(phi) ** 2
        return 1.0 / math.sqrt((du * c2 + dv * s2) * (eu * c2 + ev * s2))

    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    return val / math.pi


def mixed_unitary_density_elliptic(f: np.ndarray, l1: float, l2: float, l3: float) -> np.ndarray:
    """Same density through the complete elliptic integral of the first kind.

    With ``t = tan phi`` the azimuthal integral becomes
    ``int_0^inf dt / sqrt((A + B t^2)(C + D t^2))``.
    """
    f = np.asarray(f, dtype=float)
    out = np.full(f.shape, np.inf)
    up = f > l2
    dn = f < l2
    a_ = np.where(up, f - l1, l3 - f)
    b_ = np.where(up, f - l2, l2 - f)
    c_ = np.where(up, l3 - l1, l3 - l1)
    d_ = np.where(up, l3 - l2, l2 - l1)
    ok = up | dn
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = a_ / b_
        r2 = c_ / d_
        p2 = np.maximum(r1, r2)
        q2 = np.minimum(r1, r2)
        val = special.ellipk(1.0 - q2 / p2) / (np.sqrt(p2) * np.sqrt(b_ * d_))
    out[ok] = val[ok] / np.pi
    return out


def mixed_unitary_cdf(f: float, l1: float, l2: float, l3: float) -> float:
    """``P(b^T S b <= f)`` for Bloch vectors uniform on the sphere.

    At fixed azimuth, ``F = a + (l3 - a) u^2`` with ``u = cos(theta)``
    uniform on [-1, 1], so the conditional CDF is ``sqrt((f - a)/(l3 - a))``.
    """
    if f <= l1:
        return 0.0
    if f >= l3:
        return 1.0

    def integrand(phi: float) -> float:
        a = l1 * math.cos(phi) ** 2 + l2 * math.sin(phi) ** 2
        span = l3 - a
        if span <= 0.0:
            return 1.0 if f >= l3 else 0.0
        t = (f - a) / span
        return math.sqrt(min(max(t, 0.0), 1.0))

    pts = None
    if l1 < f < l2:
        pts = [math.acos(math.sqrt((l2 - f) / (l2 - l1)))]
    val, _ = integrate.quad(integrand, 0.0, math.pi / 2, points=pts, epsabs=1e-13, epsrel=1e-11, limit=200)
    return min(max(2.0 * val / math.pi, 0.0), 1.0)


def _tabulated(fn: Callable[[float], float], lo: float, hi: float, knots: Sequence[float],
               n: int = 1500) -> Callable[[np.ndarray], np.ndarray]:
    pts = sorted({lo, hi, *(k for k in knots if lo < k < hi)})
    nodes = [np.array([lo])]
    for x0, x1 in zip(pts[:-1], pts[1:]):
        k = max(64, int(n * (x1 - x0) / (hi - lo)))
        t = (1 - np.cos(np.pi * np.arange(1, k + 1) / k)) / 2
        nodes.append(x0 + (x1 - x0) * t)
    grid = np.concatenate(nodes)
    vals = np.array([fn(float(x)) for x in grid])
    vals = np.maximum.accumulate(vals)
    return lambda f: np.interp(f, grid, vals)


def pdf_mixed_unitary(spec: MixedUnitaryQubitSpec | SMatrix, method: str = "quadrature") -> AnalyticPdf:
    """Fidelity density of a mixed-unitary qubit channel.

    ``method="quadrature"`` integrates over the azimuth per point;
    ``"elliptic"`` evaluates the equivalent complete elliptic integral.
    The density diverges at the middle eigenvalue of ``S``.
    """
    s = build_s_matrix(spec) if isinstance(spec, MixedUnitaryQubitSpec) else spec
    l1, l2, l3 = _lambdas(s)
    if l3 - l1 < DEGENERATE_TOL:
        raise DegenerateChannel(f"S is proportional to the identity; F = {l1!r} almost surely")
    if method not in ("quadrature", "elliptic"):
        raise ValueError(f"unknown method {method!r}")
    # a repeated eigenvalue (up to rounding) puts the singularity on the
    # support edge; the azimuthal integral is then elementary
    closed = _equal_pair_pdf(l1, l2, l3, PAIR_TOL)
    if closed is not None:
        return closed
    if method == "quadrature":
        def density(f: np.ndarray) -> np.ndarray:
            return np.array([mixed_unitary_density_quad(float(x), l1, l2, l3) for x in np.ravel(f)]).reshape(np.shape(f))
    else:
        def density(f: np.ndarray) -> np.ndarray:
            return mixed_unitary_density_elliptic(f, l1, l2, l3)

    cdf = _tabulated(lambda x: mixed_unitary_cdf(x, l1, l2, l3), l1, l3, [l2])
    return AnalyticPdf(
        support=(l1, l3), density=density, singularities=(l2,), cdf_func=cdf,
        name=f"mixed_unitary(lambda=({l1!r}, {l2!r}, {l3!r}))",
    )


def _equal_pair_pdf(l1: float, l2: float, l3: float, tol: float) -> AnalyticPdf | None:
    if abs(l2 - l1) <= tol:
        lo, span = l1, l3 - l1

        def density(f: np.ndarray) -> np.ndarray:
            return 1.0 / (2.0 * np.sqrt((f - lo) * span))

        def cdf(f: np.ndarray) -> np.ndarray:
            return np.sqrt(np.maximum(f - lo, 0.0) / span)

        return AnalyticPdf((l1, l3), density, singularities=(l1,), cdf_func=cdf, name="equal_pair(closed form)")
    if abs(l3 - l2) <= tol:
        hi, span = l3, l3 - l1

        def density(f: np.ndarray) -> np.ndarray:
            return 1.0 / (2.0 * np.sqrt((hi - f) * span))

        def cdf(f: np.ndarray) -> np.ndarray:
            return 1.0 - np.sqrt(np.maximum(hi - f, 0.0) / span)

        return AnalyticPdf((l1, l3), density, singularities=(l3,), cdf_func=cdf, name="equal_pair(closed form)")
    return None


def pdf_pauli(p0: float, p1: float, p2: float, p3: float, method: str = "quadrature") -> AnalyticPdf:
    """Fidelity density of ``p0 rho + sum_j p_j sigma_j rho sigma_j``.

    ``S = diag(p0 + p1, p0 + p2, p0 + p3)``.  When two of its entries
    coincide the density is ``1 / (2 sqrt((F - l_lo)(l_hi - l_lo)))`` (or
    its mirror image) and no quadrature is needed.
    """
    p = np.array([p0, p1, p2, p3], dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValidationError("Pauli probabilities must be non-negative and sum to 1")
    l1, l2, l3 = sorted(p0 + p[1:])
    if l3 - l1 < DEGENERATE_TOL:
        raise DegenerateChannel(f"all eigenvalues of S equal {l1!r}; F is constant")
    closed = _equal_pair_pdf(l1, l2, l3, PAIR_TOL)
    if closed is not None:
        return closed
    return pdf_mixed_unitary(build_s_matrix(pauli_spec(p0, p1, p2, p3)), method=method)


# ---------------------------------------------------------------------------
# qutrit unitaries


class Cusp(NamedTuple):
    value: float
    label: str


def cusp_points(alpha: float, beta: float) -> tuple[Cusp, Cusp, Cusp]:
    """Fidelities where a circle about 0 touches a side of the triangle ``{1, e^{ia}, e^{ib}}``.

    Returned in ascending order, each labelled with the formula it came from.
    """
    if not (0.0 <= alpha <= beta < 2 * math.pi):
        raise DegenerateSpectrum("require 0 <= alpha <= beta < 2 pi")
    if alpha == 0.0 or alpha == beta:
        raise DegenerateSpectrum("eigenphases 0, alpha, beta must be distinct")
    cusps = [
        Cusp(math.cos(alpha / 2) ** 2, "cos^2(alpha/2)"),
        Cusp(math.cos(beta / 2) ** 2, "cos^2(beta/2)"),
        Cusp(math.cos((beta - alpha) / 2) ** 2, "cos^2((beta-alpha)/2)"),
    ]
    return tuple(sorted(cusps, key=lambda c: c.value))  # type: ignore[return-value]


def triangle_crawford(alpha: float, beta: float) -> float:
    """Distance from 0 to the triangle with vertices ``1, e^{ia}, e^{ib}``."""
    gaps = (alpha, beta - alpha, 2 * math.pi - beta)
    g = max(gaps)
    return abs(math.cos(g / 2)) if g > math.pi else 0.0


def qutrit_angles(u: np.ndarray) -> tuple[float, float]:
    """Canonical ``(alpha, beta)`` of a 3x3 unitary: rotate one eigenvalue to 1."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (3, 3):
        raise ValidationError("expected a 3x3 unitary")
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(u)), 2 * np.pi))
    alpha = float(phases[1] - phases[0])
    beta = float(phases[2] - phases[0])
    return alpha, beta


def pdf_qutrit_unitary(alpha: float, beta: float) -> AnalyticPdf:
    """Density for ``U = diag(1, e^{i alpha}, e^{i beta})``, ``0 < alpha < beta < 2 pi``.

    The shadow of ``U`` is uniform on the triangle of its eigenvalues, so
    ``P(F)`` is the angle of the circle of radius ``sqrt(F)`` that lies in
    the triangle, divided by twice its area.  The arccos arguments leave
    [-1, 1] once the circle clears a side; the real part of the complex
    arccos then switches that side's contribution off.
    """
    if not (0.0 < alpha < beta < 2 * math.pi):
        raise DegenerateTriangle("require 0 < alpha < beta < 2 pi (three distinct eigenphases)")
    den = math.sin(alpha) + math.sin(beta - alpha) - math.sin(beta)
    if abs(den) < 1e-14:
        raise DegenerateTriangle("eigenvalues are collinear; the triangle has no area")
    ca, cb, cba = math.cos(alpha / 2), math.cos(beta / 2), math.cos((beta - alpha) / 2)

    def density(f: np.ndarray) -> np.ndarray:
        r = np.sqrt(np.maximum(f, 1e-300)) + 0j
        val = np.arccos(cb / r) - np.arccos(ca / r) - np.arccos(cba / r)
        return np.maximum(2.0 * val.real / den, 0.0)

    lo = triangle_crawford(alpha, beta) ** 2
    cps = cusp_points(alpha, beta)
    inner = [c for c in cps if lo < c.value < 1.0]
    return AnalyticPdf(
        support=(lo, 1.0),
        density=density,
        cusps=tuple(c.value for c in inner),
        cusp_labels=tuple(c.label for c in inner),
        name=f"qutrit_unitary(alpha={alpha!r}, beta={beta!r})",
    )


def pdf_qutrit_from_unitary(u: np.ndarray) -> AnalyticPdf:
    return pdf_qutrit_unitary(*qutrit_angles(u))
