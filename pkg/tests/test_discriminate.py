import numpy as np
import pytest

from fidshadow.discriminate import (
    DISTINCT,
    INCONCLUSIVE,
    SAME,
    ChannelTransform,
    DiscriminationReport,
    default_threshold,
    discriminate,
    ks_distance,
    transform_channel,
)
from fidshadow.errors import DimensionMismatch, EmptySample, NotTracePreserving, ValidationError
from fidshadow.quantum_core import (
    EmpiricalDistribution,
    random_channel,
    random_unitary,
    sample_fidelities,
    validate_channel,
)
from fidshadow.stats import ks_critical_value

from conftest import unitary_phase

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def test_ks_distance_trivial():
    a = EmpiricalDistribution(np.linspace(0, 1, 11))
    assert ks_distance(a, a) == 0.0
    assert ks_distance(EmpiricalDistribution(np.zeros(4)), EmpiricalDistribution(np.ones(4))) == 1.0
    with pytest.raises(EmptySample):
        ks_distance(a, EmpiricalDistribution(np.array([])))


def test_ks_null_below_one_percent(projectors):
    a = sample_fidelities(projectors, 100_000, seed=1)
    b = sample_fidelities(projectors, 100_000, seed=2)
    assert ks_distance(a, b) < 0.01


def test_identity_transform(projectors):
    t = ChannelTransform(np.eye(4), np.eye(2))
    assert transform_channel(projectors, t) == projectors


def test_hadamard_transform(projectors):
    out = transform_channel(projectors, ChannelTransform(np.eye(4), HADAMARD))
    plus = np.full((2, 2), 0.5)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
    np.testing.assert_allclose(out.kraus[0], plus, atol=1e-15)
    np.testing.assert_allclose(out.kraus[1], minus, atol=1e-15)
    a = sample_fidelities(projectors, 100_000, seed=1)
    b = sample_fidelities(out, 100_000, seed=2)
    assert ks_distance(a, b) < 0.01


def test_rotation_swaps_parts():
    u = unitary_phase(np.pi / 2)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    out = transform_channel(u, ChannelTransform(rot, np.eye(2)))
    # H' = -A, A' = H, so K' = i K
    np.testing.assert_allclose(out.kraus[0], 1j * u.kraus[0], atol=1e-15)


def test_transform_validation(projectors):
    with pytest.raises(ValidationError):
        ChannelTransform(np.ones((2, 2)), np.eye(2))
    with pytest.raises(ValidationError):
        ChannelTransform(np.eye(2), 2 * np.eye(2))
    with pytest.raises(DimensionMismatch):
        transform_channel(projectors, ChannelTransform(np.eye(2), np.eye(2)))
    with pytest.raises(DimensionMismatch):
        transform_channel(projectors, ChannelTransform(np.eye(4), np.eye(3)))


def test_generic_rotation_breaks_trace_preservation():
    # mixing H and A of a non-unital channel changes sum_j i[H_j, A_j]
    ch = random_channel(2, 2, 3)
    c, s = np.cos(0.7), np.sin(0.7)
    o = np.eye(4)
    o[[0, 0, 2, 2], [0, 2, 0, 2]] = [c, -s, s, c]
    o2 = np.eye(4)
    o2[[0, 0, 1, 1], [0, 1, 0, 1]] = [c, -s, s, c]
    with pytest.raises(NotTracePreserving):
        transform_channel(ch, ChannelTransform(o @ o2 @ np.diag([1, 1, -1, 1]), np.eye(2)))


def test_kraus_unitary_transform_preserves_distribution():
    ch = random_channel(3, 2, 5)
    t = ChannelTransform.from_kraus_unitary(random_unitary(2, 1), random_unitary(3, 2))
    out = transform_channel(ch, t)
    a = sample_fidelities(ch, 50_000, seed=1)
    b = sample_fidelities(out, 50_000, seed=2)
    assert ks_distance(a, b) < ks_critical_value(50_000, 50_000)


def test_reference_cases(projectors, bit_flip):
    assert discriminate(unitary_phase(np.pi / 2), projectors, 10_000, seed=1).verdict == SAME
    rep = discriminate(projectors, bit_flip, 10_000, seed=1)
    assert rep.verdict == DISTINCT and sum(rep.support_exclusions) > 0
    rep = discriminate(unitary_phase(np.pi / 3), unitary_phase(2 * np.pi / 3), 10_000, seed=1)
    assert rep.verdict == DISTINCT


def test_self_comparison_is_same_class():
    ch = random_channel(3, 2, 8)
    for seed in range(5):
        assert discriminate(ch, ch, 2000, seed=seed).verdict == SAME


def test_verdict_is_symmetric():
    a, b = random_channel(2, 2, 1), random_channel(2, 2, 2)
    for seed in range(3):
        ab, ba = discriminate(a, b, 3000, seed=seed), discriminate(b, a, 3000, seed=seed)
        assert ab.verdict == ba.verdict
        assert ab.ks_statistic == ba.ks_statistic
        assert ab.support_exclusions == ba.support_exclusions[::-1]


def test_near_threshold_is_inconclusive():
    a, b = unitary_phase(1.0), unitary_phase(1.02)
    rep = discriminate(a, b, 5000, seed=0)
    thr = rep.ks_statistic  # force the statistic onto the threshold
    assert discriminate(a, b, 5000, seed=0, ks_threshold=thr).verdict in (INCONCLUSIVE, DISTINCT)
    if sum(rep.support_exclusions) == 0:
        assert discriminate(a, b, 5000, seed=0, ks_threshold=thr).verdict == INCONCLUSIVE


def test_default_threshold():
    assert default_threshold(10_000) == pytest.approx(1.63 * np.sqrt(2e-4))


def test_report_consistency_is_enforced():
    with pytest.raises(ValidationError):
        DiscriminationReport(0.0, 0.1, (0, 0), DISTINCT, (1, 1), 0, ((0, 1), (0, 1)))
    with pytest.raises(ValidationError):
        DiscriminationReport(0.0, 0.1, (3, 0), SAME, (1, 1), 0, ((0, 1), (0, 1)))


def test_dimension_mismatch(projectors):
    with pytest.raises(DimensionMismatch):
        discriminate(projectors, validate_channel([np.eye(3)]))
