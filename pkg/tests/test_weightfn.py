import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from weightlab import seqcore, weightfn
from weightlab.errors import DomainError, InvalidArgument


def gevrey_brute(alpha, t, p_max=4000):
    p = np.arange(p_max + 1)
    return np.max(np.log(t)[:, None] * p - alpha * gammaln(p + 1.0), axis=1)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_gevrey_closed_form_matches_enumeration(alpha):
    # keep the maximizing index t^(1/alpha) inside the enumeration
    t = np.geomspace(0.5, min(1e6, 3000.0 ** alpha), 120)
    w = weightfn.gevrey_weight(alpha)
    assert np.allclose(w(t), np.maximum(gevrey_brute(alpha, t), 0), rtol=1e-12, atol=1e-9)


def test_gevrey_large_argument_branch_is_continuous_and_finite():
    w = weightfn.gevrey_weight(1.0)
    t = np.array([0.99e15, 1.01e15, 1e100, 1e300])
    v = w(t)
    assert np.all(np.isfinite(v)) and np.all(np.diff(v) > 0)
    # Stirling: omega_{G^1}(t) = t - log(2 pi t)/2 + O(1/t)
    assert v[1] == pytest.approx(1.01e15 - 0.5 * math.log(2 * math.pi * 1.01e15), rel=1e-15)


def test_catalog_values():
    t = np.array([0.5, 1.0, 4.0])
    assert np.allclose(weightfn.id_power(0.5)(t), np.sqrt(t))
    assert np.allclose(weightfn.normalized_id_power(2)(t), [0, 0, 9])
    assert np.allclose(weightfn.log_power(2)(t), [0, 0, math.log(4) ** 2])
    assert weightfn.catalog("gevrey", 1)(3.0) == pytest.approx(3 * math.log(3) - math.log(6))
    with pytest.raises(InvalidArgument):
        weightfn.catalog("nope")
    with pytest.raises(InvalidArgument):
        weightfn.id_power(0)


def test_assoc_weight_domain_and_values():
    M = seqcore.gevrey(1, 30)
    w = weightfn.assoc_weight(M)
    assert w.hi == pytest.approx(30.0)
    t = np.geomspace(1, 29, 40)
    assert np.allclose(w(t), weightfn.gevrey_weight(1)(t), atol=1e-12)
    with pytest.raises(DomainError):
        w(31.0)
    with pytest.raises(InvalidArgument):
        weightfn.assoc_weight(seqcore.from_values([2.0, 3.0]))


@given(st.lists(st.floats(0.0, 2.0, allow_nan=False), min_size=2, max_size=60),
       st.lists(st.floats(0.0, 1.0), min_size=5, max_size=20))
@settings(max_examples=60, deadline=None)
def test_assoc_closed_form_property(incs, us):
    logmu = np.cumsum(incs)
    M = seqcore.WeightSequence(np.concatenate([[0.0], np.cumsum(logmu)]))
    t = np.exp(np.array(us) * logmu[-1])
    assert np.allclose(weightfn.assoc_closed_form(M, t), weightfn.assoc_brute_force(M, t), atol=1e-10)


def test_combinators():
    w = weightfn.id_power(1.0)
    t = np.array([1.0, 4.0, 9.0])
    assert np.allclose(weightfn.power_substitute(w, 2)(t), np.sqrt(t))
    inv = weightfn.invert(w)
    assert np.allclose(inv(t), 1 / t)
    assert inv.monotone == "down"
    with pytest.raises(DomainError):
        inv(0.0)
    with pytest.raises(InvalidArgument):
        weightfn.power_substitute(w, 0)


def test_from_kind_rebuilds():
    w = weightfn.power_substitute(weightfn.gevrey_weight(2), 0.5)
    r = weightfn.from_kind(w.kind)
    t = np.geomspace(1, 1e3, 30)
    assert np.array_equal(w(t), r(t))


def test_phi_star_of_exponential():
    # omega = id: phi(y) = e^y, phi*(x) = x log x - x
    ps = weightfn.phi_star(weightfn.id_power(1.0))
    x = np.array([1.0, 5.0, 50.0, 500.0])
    assert np.allclose(ps(x), x * np.log(x) - x, rtol=1e-10)


def test_fn_relations():
    g1, g2 = weightfn.gevrey_weight(1), weightfn.gevrey_weight(2)
    assert weightfn.fn_relation(g1, g2, "o_small").holds
    assert weightfn.fn_relation(g2, g1, "preceq").fails
    assert weightfn.fn_relation(g1, weightfn.id_power(1.0), "equiv").holds
    with pytest.raises(InvalidArgument):
        weightfn.fn_relation(g1, g2, "sim")


def test_conditions_of_catalog_weights():
    rep = weightfn.check_conditions(weightfn.gevrey_weight(1))
    for name in ("omega0", "omega1", "omega3", "omega4", "omega6"):
        assert rep[name].holds, name
    assert rep["omega5"].fails  # omega_{G^1} ~ t is not o(t)
    v6, _ = weightfn.check_omega6(weightfn.log_power(2))
    assert v6.fails
    v1, L = weightfn.check_omega1(weightfn.id_power(0.3))
    assert v1.holds and L == pytest.approx(2 ** 0.3, rel=0.05)


@pytest.mark.parametrize("beta", [0.25, 1.0])
def test_index_brackets_of_powers(beta):
    # t^beta has gamma = gamma_bar = 1/beta
    w = weightfn.id_power(beta)
    assert weightfn.gamma_index(w).contains(1 / beta, slack=0.02)
    assert weightfn.gamma_bar_index(w).contains(1 / beta, slack=0.02)


def test_index_of_gevrey_weight():
    b = weightfn.gamma_index(weightfn.gevrey_weight(2))
    assert b.contains(2.0, slack=b.width)
