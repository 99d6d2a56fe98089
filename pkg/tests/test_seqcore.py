import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weightlab import seqcore
from weightlab.errors import InvalidArgument, PreconditionViolation
from weightlab.seqcore import WeightSequence


def log_convex_from_increments(incs):
    logmu = np.cumsum(incs)
    return WeightSequence(np.concatenate([[0.0], np.cumsum(logmu)]))


increments = st.lists(st.floats(0.0, 3.0, allow_nan=False), min_size=2, max_size=40)


def test_gevrey_matches_lgamma():
    M = seqcore.gevrey(1.5, 300)
    expected = [1.5 * math.lgamma(p + 1) for p in range(301)]
    assert np.allclose(M.logM, expected, rtol=1e-13, atol=1e-12)
    assert M.normalized and M.log_convex


@pytest.mark.parametrize("alpha,p_max", [(0, 10), (-1, 10), (1, 0), (1, 2.5)])
def test_gevrey_rejects_bad_arguments(alpha, p_max):
    with pytest.raises(InvalidArgument):
        seqcore.gevrey(alpha, p_max)


def test_from_values_and_validation():
    M = seqcore.from_values([1, 2, 8])
    assert np.allclose(M.logM, np.log([1, 2, 8]))
    with pytest.raises(InvalidArgument):
        seqcore.from_values([1, 0, 2])
    with pytest.raises(InvalidArgument):
        WeightSequence(np.array([0.0, np.inf]))


def test_json_round_trip():
    M = seqcore.gevrey(2, 20)
    N = WeightSequence.loads(M.dumps())
    assert np.array_equal(M.logM, N.logM)
    with pytest.raises(InvalidArgument):
        WeightSequence.from_dict({"p_max": 3, "logM": [0.0, 1.0]})


def test_lc_membership():
    assert seqcore.check_lc(seqcore.gevrey(1, 400)).holds
    bumpy = WeightSequence(np.array([0.0, 2.0, 2.5, 6.0, 7.0] + [8.0 + k * k for k in range(1, 40)]))
    assert seqcore.check_lc(bumpy).fails


def test_moderate_growth():
    assert seqcore.check_mg(seqcore.gevrey(2, 400)).holds
    # log M_p = p^2 is log-convex but grows too fast for (mg)
    p = np.arange(401, dtype=float)
    assert seqcore.check_mg(WeightSequence(p ** 2 / 10)).fails


def test_relations_on_gevrey_scale():
    G1, G2 = seqcore.gevrey(1, 400), seqcore.gevrey(2, 400)
    assert seqcore.relation(G1, G2, "preceq").holds
    assert seqcore.relation(G1, G2, "triangle").holds
    assert seqcore.relation(G2, G1, "preceq").fails
    assert seqcore.relation(G1, G1, "triangle").fails
    scaled = G1.shifted(math.log(3.0))
    assert seqcore.relation(G1, scaled, "equiv").holds
    with pytest.raises(InvalidArgument):
        seqcore.relation(G1, G2, "below")


def test_preceq_constant_is_geometric_ratio():
    G1 = seqcore.gevrey(1, 200)
    N = G1.shifted(math.log(0.5))  # N_p = 2^-p p!
    assert seqcore.preceq_constant(G1, N) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(PreconditionViolation):
        seqcore.preceq_constant(seqcore.gevrey(2, 200), G1)


def test_pointwise_algebra():
    a, b = seqcore.gevrey(1, 50), seqcore.gevrey(0.5, 50)
    assert np.allclose(seqcore.pointwise_product(a, b).logM, seqcore.gevrey(1.5, 50).logM)
    assert np.allclose(seqcore.pointwise_quotient(a, b).logM, seqcore.gevrey(0.5, 50).logM)
    with pytest.raises(InvalidArgument):
        seqcore.pointwise_product(a, seqcore.gevrey(1, 10))


def brute_minorant(y):
    # largest convex function below the points: min over chords through i
    n = len(y)
    out = np.array(y, float)
    for i in range(n):
        for j in range(i):
            for k in range(i + 1, n):
                out[i] = min(out[i], y[j] + (y[k] - y[j]) * (i - j) / (k - j))
    return out


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=25))
@settings(max_examples=60, deadline=None)
def test_log_convex_minorant_matches_chord_oracle(y):
    L = seqcore.log_convex_minorant(WeightSequence(np.array(y)))
    assert np.allclose(L.logM, brute_minorant(y), atol=1e-9)
    assert np.all(L.logM <= np.array(y) + 1e-12)


@given(increments)
@settings(max_examples=40, deadline=None)
def test_minorant_fixes_log_convex_sequences(incs):
    M = log_convex_from_increments(incs)
    assert np.allclose(seqcore.log_convex_minorant(M).logM, M.logM, atol=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_thilliez_bracket_of_gevrey(alpha):
    b = seqcore.thilliez_gamma(seqcore.gevrey(alpha, 400))
    assert b.contains(alpha) and b.width <= 0.1


def test_thilliez_small_window_is_uninformative():
    b = seqcore.thilliez_gamma(seqcore.gevrey(1, 20))
    assert b.lower == 0 and math.isinf(b.upper)
