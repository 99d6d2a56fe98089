import numpy as np
import pytest

from weightlab import matrixcalc, seqcore, weightfn
from weightlab.errors import InvalidArgument
from weightlab.matrixcalc import WeightMatrix

ELLS = (0.5, 1.0, 2.0, 4.0)


@pytest.fixture(scope="module")
def id_matrix():
    return matrixcalc.assoc_matrix(weightfn.id_power(1.0), ELLS, 100)


def test_rows_of_identity_weight(id_matrix):
    # sup_{y >= 0} x y - e^y is x log x - x for x >= 1 and -1 below,
    # and log W(l)_p = phi*(l p) / l
    p = np.arange(101)
    for ell in ELLS:
        x = ell * p
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(x >= 1, x * np.log(x) - x, -1.0)
        assert np.allclose(id_matrix.row(ell).logM, phi / ell, rtol=1e-9, atol=1e-8)


def test_json_round_trip(id_matrix):
    N = WeightMatrix.loads(id_matrix.dumps())
    assert N.ells == id_matrix.ells
    for ell in ELLS:
        assert np.array_equal(N.row(ell).logM, id_matrix.row(ell).logM)
    with pytest.raises(InvalidArgument):
        WeightMatrix.from_dict({"ells": [1.0]})


def test_order_and_mg(id_matrix):
    assert all(v.holds for v in matrixcalc.check_order(id_matrix).values())
    for flavor in ("roumieu", "beurling"):
        assert matrixcalc.matrix_mg(id_matrix, flavor).holds


def test_matrix_relations_follow_gevrey_order():
    A = matrixcalc.assoc_matrix(weightfn.gevrey_weight(1), ELLS, 400)
    B = matrixcalc.assoc_matrix(weightfn.gevrey_weight(2), ELLS, 400)
    assert matrixcalc.matrix_relation(A, B, "roumieu_preceq").holds
    assert matrixcalc.matrix_relation(A, B, "triangle").holds
    assert matrixcalc.matrix_relation(B, A, "beurling_preceq").fails
    with pytest.raises(InvalidArgument):
        matrixcalc.matrix_relation(A, B, "sideways")


def test_gevrey_matrix_is_constant():
    A = matrixcalc.assoc_matrix(weightfn.gevrey_weight(1), ELLS, 400)
    assert matrixcalc.is_constant(A).holds
    assert matrixcalc.constancy_criterion(A).holds


def test_constant_matrix_rows_are_shared():
    G = seqcore.gevrey(2, 50)
    C = matrixcalc.constant_matrix(G, (1.0, 2.0))
    assert np.array_equal(C.row(1.0).logM, C.row(2.0).logM)
    assert matrixcalc.is_constant(C).holds


def test_gevrey_quotient_rows_equivalent_to_lower_gevrey():
    M = matrixcalc.assoc_matrix(weightfn.gevrey_weight(3), (1.0, 2.0), 400)
    Q = matrixcalc.gevrey_quotient(M, 1.0)
    G2 = seqcore.gevrey(2, Q.p_max)
    for ell in Q.ells:
        assert seqcore.relation(Q.row(ell), G2, "equiv").holds


def test_regularize_is_normalized_log_convex():
    Q = seqcore.WeightSequence(np.array([0.3, 1.0, 0.8, 2.0, 5.0]))
    R = matrixcalc.regularize(Q)
    assert R.logM[0] == 0 and R.log_convex


def test_quotient_identity_requires_grid_rows(id_matrix):
    with pytest.raises(InvalidArgument):
        matrixcalc.quotient_sequence_identity(id_matrix, 4.0, 2)
    assert matrixcalc.quotient_sequence_identity(id_matrix, 1.0, 2).holds


def test_sharp_mg_defect_brute_force(id_matrix):
    A, B = id_matrix.row(1.0).logM, id_matrix.row(2.0).logM
    n = id_matrix.p_max
    brute = max(A[p + q] - B[p] - B[q] for p in range(n + 1) for q in range(n + 1 - p))
    d, _ = matrixcalc.sharp_mg_defect(id_matrix, 1.0)
    assert d == pytest.approx(brute, abs=1e-12)
