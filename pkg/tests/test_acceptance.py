"""The twelve acceptance criteria, at their stated tolerances.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL line
per criterion at the end of the run.
"""

import math
import time

import numpy as np
import pytest

from weightlab import conjugate, matrixcalc, seqcore, theoremlab, weightfn
from weightlab.errors import WellDefinednessError

criterion = pytest.mark.criterion
T = np.geomspace(1.0, 1e6, 200)


def rel_dev(a, b):
    # relative, floored at 1 so that omega(1) = 0 does not divide by zero
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))


@criterion(1, "lower_conj(G1, G1) = omega_G2 within 1e-4 relative, < 10 s")
def test_gevrey_lower_identity():
    t0 = time.perf_counter()
    res = conjugate.lower_conj(weightfn.gevrey_weight(1), weightfn.gevrey_weight(1), t=T)
    elapsed = time.perf_counter() - t0
    target = weightfn.gevrey_weight(2)(T)
    assert rel_dev(res.value, target) <= 1e-4
    assert rel_dev(res.result(T), target) <= 1e-4
    assert elapsed < 10


@criterion(2, "upper_conj(G3, G1) = omega_G2 within 1e-4 relative, guard Holds, < 10 s")
def test_gevrey_upper_identity():
    t0 = time.perf_counter()
    res = conjugate.upper_conj(weightfn.gevrey_weight(3), weightfn.gevrey_weight(1), t=T)
    elapsed = time.perf_counter() - t0
    target = weightfn.gevrey_weight(2)(T)
    assert rel_dev(res.value, target) <= 1e-4
    assert res.guard.holds
    assert elapsed < 10


@criterion(3, "upper conjugate well-defined iff: prongs agree on (G1,G1) Fails and (G2,G1) Holds")
def test_well_definedness_iff():
    g1, g2 = weightfn.gevrey_weight(1), weightfn.gevrey_weight(2)
    with pytest.raises(WellDefinednessError):
        conjugate.upper_conj(g1, g1)
    bad = conjugate.guard_prongs(g1, g1)
    good = conjugate.guard_prongs(g2, g1)
    assert set(bad) == set(good) == {"a", "b", "c"}
    assert all(v.fails for v in bad.values())
    assert all(v.holds for v in good.values())
    assert conjugate.well_defined_guard(g2, g1).holds


@pytest.fixture(scope="module")
def g1_matrix():
    return matrixcalc.assoc_matrix(weightfn.gevrey_weight(1), (0.25, 0.5, 1.0, 2.0, 4.0), 400)


@criterion(4, "sandwich l*omega_W <= omega <= 2l*omega_W + D_l for G1, l in {1/2, 1, 2}")
@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
def test_sandwich(g1_matrix, ell):
    v = matrixcalc.sandwich_check(weightfn.gevrey_weight(1), g1_matrix, ell)
    assert v.holds, v.witness
    assert v.witness["violations"] == 0
    assert math.isfinite(v.witness["D"])


@criterion(5, "sharp (mg) W(l)_{p+q} <= W(2l)_p W(2l)_q, p+q <= 200, log-defect <= 1e-9")
@pytest.mark.parametrize("weight", [weightfn.gevrey_weight(1), weightfn.id_power(0.5),
                                    weightfn.normalized_id_power(1 / 3)], ids=lambda w: w.describe())
def test_sharp_matrix_mg(weight):
    M = matrixcalc.assoc_matrix(weight, (0.5, 1.0, 2.0, 4.0), 200)
    assert M.p_max == 200
    for ell in (0.5, 1.0, 2.0):
        defect, _ = matrixcalc.sharp_mg_defect(M, ell)
        assert defect <= 1e-9


@criterion(6, "quotient-sequence identity for G1, l=1, c=2, p <= 100, 1e-9 log-absolute")
def test_quotient_sequence_identity():
    M = matrixcalc.assoc_matrix(weightfn.gevrey_weight(1), (0.5, 1.0, 2.0), 201)
    v = matrixcalc.quotient_sequence_identity(M, 1.0, 2, tol=1e-9)
    assert v.holds, v.witness
    assert v.window["p"][1] >= 100
    assert v.witness["max_abs_error"] <= 1e-9


@criterion(7, "index brackets: id^(1/2) gamma and gamma_bar contain 2 (width <= 0.2); Thilliez G^1.5")
def test_index_brackets():
    w = weightfn.id_power(0.5)
    for fn in (weightfn.gamma_index, weightfn.gamma_bar_index):
        t0 = time.perf_counter()
        b = fn(w)
        assert time.perf_counter() - t0 < 30
        assert b.width <= 0.2 and b.contains(2.0), b.to_dict()
    t0 = time.perf_counter()
    b = seqcore.thilliez_gamma(seqcore.gevrey(1.5, 400))
    assert time.perf_counter() - t0 < 30
    assert b.width <= 0.1 and b.contains(1.5)


@criterion(8, "gamma bracket of lower_conj(G1, G1/2) contains 1.5 within one bracket width")
def test_index_transport_gevrey():
    res = conjugate.lower_conj(weightfn.gevrey_weight(1), weightfn.gevrey_weight(0.5))
    b = weightfn.gamma_index(res.result)
    assert b.contains(1.5, slack=b.width), b.to_dict()


@criterion(9, "suite_division(G3, alpha=1): all claims Hold")
def test_division_desk_check():
    rep = theoremlab.suite_division(weightfn.gevrey_weight(3), 1.0)
    assert rep.aborted is None
    bad = {k: v.state.value for k, v in rep.claims.items() if not v.holds}
    assert not bad
    assert {"identity", "c_equivalence", "power_identity", "thilliez_uniformity",
            "gevrey_rows"} <= set(rep.claims)
    assert rep.claims["identity"].witness["max_rel_dev"] <= 1e-4


def smallest_n_above_8_ln_n(n_max=200):
    # independent oracle named by the criterion: first n from which n > 8 ln n holds
    ok = [n > 8 * math.log(n) for n in range(2, n_max + 1)]
    last_bad = max(i for i, x in enumerate(ok) if not x)
    return last_bad + 3


@criterion(10, "obstruction_demo(1, 2, 1, 200): n* = 27, margins positive and increasing")
def test_obstruction_contradiction_index():
    # Expected to fail: the margin keeps the (n+1) log(4 mu) term, which puts
    # the crossing at 29; the oracle drops the +1.  See the decisions ledger.
    tr = theoremlab.obstruction_demo(1.0, 2.0, 1.0, 200)
    expected = smallest_n_above_8_ln_n()
    assert expected == 27
    n_star = tr.n_star
    tail = tr.margins[tr.n >= n_star]
    assert np.all(tail > 0) and np.all(np.diff(tail) > 0)
    assert n_star == expected


@criterion(11, "assoc_weight closed form = brute force, 50 sequences x 50 t, abs err <= 1e-10")
def test_assoc_oracle():
    rng = np.random.default_rng(20261016)
    worst = 0.0
    for _ in range(50):
        p_max = int(rng.integers(5, 120))
        logmu = np.cumsum(rng.exponential(0.5, p_max))
        logmu[0] = max(logmu[0], 0.0)
        M = seqcore.WeightSequence(np.concatenate([[0.0], np.cumsum(logmu)]))
        assert M.log_convex and M.normalized
        w = weightfn.assoc_weight(M)
        t = np.exp(rng.uniform(-1.0, logmu[-1], 50)) * (1 - 1e-12)
        worst = max(worst, float(np.max(np.abs(w(t) - weightfn.assoc_brute_force(M, t)))))
    assert worst <= 1e-10


CONTROLS = {
    "lower-product": (dict(sigma=weightfn.gevrey_weight(1), tau=weightfn.gevrey_weight(1)), "identity"),
    "index-transport": (dict(sigma=weightfn.gevrey_weight(1), tau=weightfn.gevrey_weight(0.5)), "lower_gamma"),
    "upper-welldef": (dict(sigma=weightfn.gevrey_weight(2), tau=weightfn.gevrey_weight(1)), "prong_agreement"),
    "division": (dict(omega=weightfn.gevrey_weight(3), alpha=1.0), "identity"),
    "obstruction": ({}, "b_bounded"),
}


@criterion(12, "negative controls: every suite flips Holds -> Fails under its perturbation")
@pytest.mark.parametrize("suite", sorted(CONTROLS))
def test_negative_control(suite):
    params, claim = CONTROLS[suite]
    run = theoremlab.SUITES[suite]
    clean = run(**params)
    perturbed = run(**params, perturb=True)
    assert clean.claims[claim].holds
    assert perturbed.claims[claim].fails
    assert perturbed.exit_code == 1
