import json
import math

import numpy as np
import pytest

from weightlab import theoremlab, weightfn
from weightlab.errors import InvalidArgument
from weightlab.verdict import State

g = weightfn.gevrey_weight


def crossing_by_loop(alpha, mu, C, n_max):
    # independent evaluation of the obstruction inequality in the log domain
    first_ok = None
    for n in range(2, n_max + 1):
        m = (n * (2 - alpha) * math.log(n) - math.log(C) - (n + 1) * math.log(4 * mu)
             - n * math.log(math.log(n)))
        if m > 0:
            first_ok = n if first_ok is None else first_ok
        else:
            first_ok = None
    return first_ok


def test_obstruction_crossing_with_full_exponent():
    tr = theoremlab.obstruction_demo(1.0, 2.0, 1.0, 200)
    assert tr.n_star == crossing_by_loop(1.0, 2.0, 1.0, 200) == 29
    assert tr.monotone_after_crossing()


def test_obstruction_large_constant_shifts_crossing_up():
    base = theoremlab.obstruction_demo(1.0, 2.0, 1.0, 200).n_star
    big = theoremlab.obstruction_demo(1.0, 2.0, 1e6, 200).n_star
    assert big == crossing_by_loop(1.0, 2.0, 1e6, 200)
    assert base < big < 200


def test_obstruction_crossing_grows_as_alpha_approaches_two():
    stars = [theoremlab.obstruction_demo(a, 2.0, 1.0, 100000).n_star for a in (1.0, 1.25, 1.5)]
    assert all(s is not None for s in stars) and stars == sorted(stars) and len(set(stars)) == 3
    tr = theoremlab.obstruction_demo(1.8, 2.0, 1.0, 100000)
    assert tr.n_star is None and tr.monotone_after_crossing() is None
    ref = theoremlab.obstruction_demo(1.5, 2.0, 1.0, 100000)
    assert tr.margins[-1] < ref.margins[-1]


@pytest.mark.parametrize("kw", [dict(alpha=2.0), dict(alpha=0.0), dict(mu_abs=1.0), dict(C=0.0), dict(n_max=5)])
def test_obstruction_rejects_bad_arguments(kw):
    args = dict(alpha=1.0, mu_abs=2.0, C=1.0, n_max=200)
    args.update(kw)
    with pytest.raises(InvalidArgument):
        theoremlab.obstruction_demo(**args)


def test_obstruction_schedule():
    tr = theoremlab.obstruction_demo(1.0, 2.0, 1.0, 200)
    assert list(tr.ell_j) == list(range(1, 9))
    assert np.all(np.diff(tr.p_j) > 0) and tr.p_j[0] >= 2
    assert np.all(tr.p_j >= np.ceil(np.exp(tr.h_j)))
    assert all(v.holds for v in tr.schedule_checks.values())
    json.dumps(tr.to_dict())


def test_unrelaxed_margin_dominates():
    # the relaxed margin uses n^{2n} <= (n+2)^{2n} and n!^alpha <= n^{n alpha}
    n = np.arange(2, 300)
    assert np.all(theoremlab.unrelaxed_margin(n, 1.0, 2.0, 1.0) >= theoremlab.obstruction_margin(n, 1.0, 2.0, 1.0))


@pytest.mark.parametrize("a,b,state", [
    ((1.0, 1.1), (2.0, 2.1), State.HOLDS),
    ((2.0, 2.1), (1.0, 1.1), State.FAILS),
    ((1.0, 1.2), (1.05, 1.1), State.HOLDS),
    ((1.0, 2.0), (0.5, 0.6), State.INCONCLUSIVE),
    ((0.0, math.inf), (1.0, 1.1), State.INCONCLUSIVE),
])
def test_bracket_leq(a, b, state):
    assert theoremlab.bracket_leq(a, b, "x").state is state


def test_lower_product_suite_and_report_schema():
    rep = theoremlab.suite_lower_product(g(1), g(0.5))
    assert rep.exit_code == 0 and rep.summary["Holds"] == rep.summary["total"]
    d = rep.to_dict()
    assert set(d) >= {"suite", "params", "claims", "summary"}
    for c in d["claims"]:
        assert set(c) >= {"id", "description", "state", "witness", "margin"}
    assert rep.dumps() == theoremlab.suite_lower_product(g(1), g(0.5)).dumps()


def test_lower_product_perturbation_fails_identity():
    rep = theoremlab.suite_lower_product(weightfn.id_power(0.5), weightfn.id_power(1.0), perturb=True)
    assert rep.claims["identity"].fails and rep.exit_code == 1


def test_upper_welldef_prongs_for_wrong_order():
    rep = theoremlab.suite_upper_welldef(g(1), g(2))
    assert rep.claims["prong_agreement"].holds
    assert rep.observations["guard"]["state"] == "Fails"


def test_division_aborts_when_alpha_too_large():
    rep = theoremlab.suite_division(g(3), 4.0)
    assert rep.aborted
    assert rep.claims["hypothesis_thilliez"].fails


def test_division_shifted_gevrey():
    rep = theoremlab.suite_division(g(2.5), 1.0)
    assert rep.exit_code == 0, rep.summary


def test_suite_registry():
    assert set(theoremlab.SUITES) == {"lower-product", "index-transport", "upper-welldef", "division",
                                      "obstruction"}
