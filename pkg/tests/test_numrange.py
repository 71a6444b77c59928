import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from fidshadow.errors import DimensionMismatch, ValidationError
from fidshadow.numrange import (
    HermitianCollection,
    ShadowCloud,
    crawford_number,
    extremal_fidelity,
    joint_expectation,
    numerical_radius,
    shadow_sample,
    sq_norm_gradient,
    sq_norm_objective,
)
from fidshadow.quantum_core import PureState, random_channel, random_unitary, sample_fidelities

from conftest import unitary_phase


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def support_extreme(h1, h2, largest):
    """max over theta of the top (or bottom) eigenvalue of cos(t) H1 + sin(t) H2.

    For two operators the joint range is the convex numerical range of
    H1 + i H2, so its support function gives ``w`` and ``c`` directly.
    """
    idx = -1 if largest else 0

    def g(t):
        return -np.linalg.eigvalsh(np.cos(t) * h1 + np.sin(t) * h2)[idx]

    grid = np.linspace(0, 2 * np.pi, 4001)
    vals = np.array([g(t) for t in grid])
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(g, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                          options={"xatol": 1e-12})
    return -min(res.fun, vals[i])


def test_gradient_matches_finite_differences(rng):
    ops = np.stack([random_hermitian(3, rng) for _ in range(4)])
    x = rng.standard_normal(6)
    g = sq_norm_gradient(x, ops)
    h = 1e-6
    fd = np.array([
        (sq_norm_objective(x + h * e, ops) - sq_norm_objective(x - h * e, ops)) / (2 * h)
        for e in np.eye(6)
    ])
    np.testing.assert_allclose(g, fd, atol=1e-7)


@pytest.mark.parametrize("seed", range(6))
def test_two_operator_oracle(seed):
    rng = np.random.default_rng(seed)
    d = 2 + seed % 3
    h1, h2 = random_hermitian(d, rng), random_hermitian(d, rng)
    if seed % 2:
        h1 = h1 + 3 * np.eye(d)  # push the origin outside the range so c > 0
    coll = HermitianCollection((h1, h2))
    w = numerical_radius(coll)
    c = crawford_number(coll)
    assert w.value == pytest.approx(support_extreme(h1, h2, True), abs=1e-8)
    assert c.value == pytest.approx(max(0.0, support_extreme(h1, h2, False)), abs=1e-7)
    assert w.converged and c.converged


def test_single_operator_uses_eigenvalues():
    coll = HermitianCollection((np.diag([-0.5, 2.0, 1.0]),))
    assert numerical_radius(coll).value == 2.0
    assert crawford_number(coll).value == 0.0
    assert crawford_number(HermitianCollection((np.diag([0.5, 2.0]),))).value == 0.5


def test_extremal_states_attain_values(rng):
    coll = HermitianCollection(tuple(random_hermitian(3, rng) + np.eye(3) for _ in range(3)))
    for res in (numerical_radius(coll), crawford_number(coll)):
        r = joint_expectation(coll, PureState.from_vector(res.state))
        assert np.linalg.norm(r) == pytest.approx(res.value, abs=1e-9)


def test_collection_validation():
    with pytest.raises(ValidationError):
        HermitianCollection((np.array([[0, 1], [0, 0]]),))
    with pytest.raises(DimensionMismatch):
        HermitianCollection((np.eye(2), np.eye(3)))
    with pytest.raises(ValidationError):
        HermitianCollection(())


def test_radius_is_unitarily_invariant(rng):
    coll = HermitianCollection(tuple(random_hermitian(3, rng) for _ in range(3)))
    u = random_unitary(3, rng)
    assert numerical_radius(coll).value == pytest.approx(numerical_radius(coll.conjugated(u)).value, abs=1e-9)


@pytest.mark.parametrize("alpha", [np.pi / 3, np.pi / 2, 2 * np.pi / 3, np.pi])
def test_unitary_support(alpha):
    lo, hi = extremal_fidelity(unitary_phase(alpha))
    assert lo == pytest.approx((1 + np.cos(alpha)) / 2, abs=1e-9)
    assert hi == pytest.approx(1.0, abs=1e-12)


def test_projector_and_bit_flip_supports(projectors, bit_flip):
    assert tuple(extremal_fidelity(projectors)) == pytest.approx((0.5, 1.0), abs=1e-9)
    assert tuple(extremal_fidelity(bit_flip)) == pytest.approx((0.0, 0.5), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(d=st.integers(2, 3), m=st.integers(1, 3), seed=st.integers(0, 10**6))
def test_samples_lie_within_bounds(d, m, seed):
    ch = random_channel(d, m, seed)
    b = extremal_fidelity(ch)
    s = sample_fidelities(ch, 2000, seed=seed).samples
    assert s[0] >= b.f_min - 1e-9
    assert s[-1] <= b.f_max + 1e-9


def test_shadow_csv_round_trip():
    coll = HermitianCollection((np.diag([1.0, -1.0]), np.array([[0, 1], [1, 0]])))
    cloud = shadow_sample(coll, 50, seed=4)
    back = ShadowCloud.from_csv(cloud.to_csv())
    assert np.array_equal(back.points, cloud.points)
    assert cloud.to_csv().splitlines()[0] == "r_1,r_2"
    assert cloud.count == 50


SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def test_joint_expectation_examples():
    plus = PureState.from_vector([1.0, 1.0])
    np.testing.assert_allclose(joint_expectation(HermitianCollection((SX, SZ)), plus), [1.0, 0.0], atol=1e-15)
    zero = PureState(np.array([1.0, 0.0]))
    assert joint_expectation(HermitianCollection((SZ,)), zero) == pytest.approx([1.0])
    with pytest.raises(DimensionMismatch):
        joint_expectation(HermitianCollection((SZ,)), PureState(np.eye(3)[0]))


def test_pair_against_haar_search():
    rng = np.random.default_rng(33)
    coll = HermitianCollection((random_hermitian(3, rng), random_hermitian(3, rng)))
    pts = shadow_sample(coll, 1_000_000, seed=1).points
    norms = np.linalg.norm(pts, axis=1)
    # random states only approach the extremes from inside, slowly in d = 3
    assert numerical_radius(coll).value == pytest.approx(norms.max(), abs=5e-3)
    assert numerical_radius(coll).value >= norms.max() - 1e-12
    assert crawford_number(coll).value <= norms.min() + 1e-12


def test_sigma_z_shadow_is_uniform():
    from scipy import stats
    pts = shadow_sample([SZ], 100_000, seed=2).points[:, 0]
    assert stats.kstest(pts, stats.uniform(-1, 2).cdf).statistic < 0.01


def test_identity_shadow_is_a_point():
    pts = shadow_sample([np.eye(3)], 100, seed=0).points
    np.testing.assert_allclose(pts, 1.0, atol=1e-14)


def test_shadow_is_unitarily_covariant(rng):
    from fidshadow.stats import ks_two_sample
    coll = HermitianCollection((random_hermitian(3, rng), random_hermitian(3, rng)))
    u = random_unitary(3, rng)
    a = np.linalg.norm(shadow_sample(coll, 50_000, seed=1).points, axis=1)
    b = np.linalg.norm(shadow_sample(coll.conjugated(u), 50_000, seed=2).points, axis=1)
    assert ks_two_sample(a, b) < 0.02


def test_norms_between_crawford_and_radius(rng):
    coll = HermitianCollection(tuple(random_hermitian(3, rng) + 0.5 * np.eye(3) for _ in range(3)))
    c, w = crawford_number(coll).value, numerical_radius(coll).value
    norms = np.linalg.norm(shadow_sample(coll, 10_000, seed=3).points, axis=1)
    assert norms.min() >= c - 1e-9 and norms.max() <= w + 1e-9


def test_identity_channel_bounds():
    from fidshadow.quantum_core import identity_channel
    assert tuple(extremal_fidelity(identity_channel(3))) == pytest.approx((1.0, 1.0))


def test_optimizer_agrees_with_eigenvalue_shortcut(rng):
    # two copies of one operator go through the optimizer; |r| = sqrt 2 |<H>|
    from fidshadow.numrange import _optimize
    h = random_hermitian(4, rng)
    vals = np.linalg.eigvalsh(h)
    coll = HermitianCollection((h, h))
    w = _optimize(coll, True, 32, 1e-10, 0).value / np.sqrt(2)
    assert w == pytest.approx(np.max(np.abs(vals)), abs=1e-9)
