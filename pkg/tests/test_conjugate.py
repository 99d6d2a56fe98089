import math

import numpy as np
import pytest

from weightlab import conjugate, weightfn
from weightlab.errors import HorizonError, InvalidArgument, WellDefinednessError

T = np.geomspace(1.0, 1e4, 50)


def test_lower_conj_of_identity_is_twice_sqrt():
    # inf_s s + t/s = 2 sqrt(t)
    w = weightfn.id_power(1.0)
    res = conjugate.lower_conj(w, w, t=T)
    assert np.allclose(res.value, 2 * np.sqrt(T), rtol=1e-9)
    assert np.allclose(res.s_opt, np.sqrt(T), rtol=1e-4)


def test_lower_conj_of_powers_closed_form():
    # inf_s s^a + (t/s)^b: stationary point s^(a+b) = (b/a) t^b
    a, b = 0.5, 1.0
    res = conjugate.lower_conj(weightfn.id_power(a), weightfn.id_power(b), t=T)
    s = ((b / a) * T ** b) ** (1 / (a + b))
    assert np.allclose(res.value, s ** a + (T / s) ** b, rtol=1e-9)


def test_upper_conj_closed_form():
    # sup_s sqrt(s) - s/t = t/4
    res = conjugate.upper_conj(weightfn.id_power(0.5), weightfn.id_power(1.0), t=T)
    assert np.allclose(res.value, T / 4, rtol=1e-9)
    assert res.guard.holds


def test_lower_product_horizon_is_product_of_horizons():
    from weightlab import seqcore
    a = weightfn.assoc_weight(seqcore.gevrey(1, 20))
    b = weightfn.assoc_weight(seqcore.gevrey(1, 30))
    res = conjugate.lower_conj(a, b)
    assert res.result.hi == pytest.approx(20 * 30)


def test_trace_grid_validation():
    w = weightfn.id_power(1.0)
    for bad in ([], [1.0, 1.0], [-1.0, 2.0]):
        with pytest.raises(InvalidArgument):
            conjugate.lower_conj(w, w, t=bad)


def test_upper_conj_rejects_ill_defined_pairs():
    g1, g2 = weightfn.gevrey_weight(1), weightfn.gevrey_weight(2)
    with pytest.raises(WellDefinednessError) as err:
        conjugate.upper_conj(g1, g2)
    assert err.value.to_dict()["guard"]["state"] == "Fails"
    assert conjugate.well_defined_guard(g1, g2).fails


def test_guard_on_power_pairs():
    root, ident = weightfn.id_power(0.5), weightfn.id_power(1.0)
    # sup_s sqrt(s) - s/t is finite; sup_s s - sqrt(s/t) is not
    assert conjugate.combine_prongs(conjugate.guard_prongs(root, ident)).holds
    assert conjugate.combine_prongs(conjugate.guard_prongs(ident, root)).fails


def test_classical_envelopes_of_identity_power():
    # h(s) = sqrt(s): upper envelope sup_s sqrt(s) - t s = 1/(4t)
    _, up = conjugate.classical_envelopes(weightfn.id_power(0.5))
    t = np.array([0.1, 1.0, 10.0])
    assert np.allclose(up(t), 1 / (4 * t), rtol=1e-8)


def test_upper_result_raises_beyond_localization():
    from weightlab import seqcore
    sigma = weightfn.assoc_weight(seqcore.gevrey(3, 60))
    res = conjugate.upper_conj(sigma, weightfn.gevrey_weight(1))
    with pytest.raises(HorizonError):
        res.result(np.array([sigma.hi * 0.999]))


def test_csv_has_header_lines():
    res = conjugate.lower_conj(weightfn.gevrey_weight(1), weightfn.gevrey_weight(1), t=T[:3])
    lines = res.to_csv({"tol_rel": 1e-6}).splitlines()
    assert lines[0].startswith("# kind:") and lines[1].startswith("# grid:")
    assert "t,value,s_opt" in lines
    assert len([x for x in lines if not x.startswith("#")]) == 4
