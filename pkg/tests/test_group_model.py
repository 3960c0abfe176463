import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspec.errors import (GroupDefinitionError, JacobiViolation, NotBracketGenerating,
                            NotNilpotent, NotStratified)
from subspec.group_model import (StructureConstants, ball_volume, bch, build_group,
                                 center_net, dilate, engel, euclidean, group_from_definition,
                                 heisenberg, homogeneous_norm, inverse, load_group, multiply,
                                 norm_power, unit_ball_volume)
from subspec.poly import Poly

from strategies import rational_points

H1 = heisenberg(1)
H2 = heisenberg(2)
ENGEL = engel()

# a step-4 filiform algebra: [E1, Ej] = E(j+1), j = 2..4
FILIFORM = build_group(
    StructureConstants.from_brackets(5, [(0, 1, 2, 1), (0, 2, 3, 1), (0, 3, 4, 1)]), (0, 1))


def test_heisenberg_fields_match_closed_form():
    x, y, t = (Poly.var(3, i) for i in range(3))
    X, Y = H1.left_fields[0], H1.left_fields[1]
    assert X.coefficients == (Poly.const(3, 1), Poly.zero(3), y * Fraction(-1, 2))
    assert Y.coefficients == (Poly.zero(3), Poly.const(3, 1), x * Fraction(1, 2))
    XR = H1.right_fields[0]
    assert XR.coefficients == (Poly.const(3, 1), Poly.zero(3), y * Fraction(1, 2))


def test_heisenberg_product_and_invariants():
    assert multiply(H1, (1, 0, 0), (0, 1, 0)) == (1, 1, Fraction(1, 2))
    assert H1.step == 2 and H1.weights == (1, 1, 2) and H1.homogeneous_dimension == 4
    assert ENGEL.weights == (1, 1, 2, 3) and ENGEL.homogeneous_dimension == 7
    assert euclidean(3).homogeneous_dimension == 3
    assert FILIFORM.step == 4 and FILIFORM.homogeneous_dimension == 1 + 1 + 2 + 3 + 4


@settings(max_examples=1000)
@given(rational_points(4), rational_points(4), rational_points(4))
def test_bch_associativity_and_inverse_engel(a, b, c):
    m = ENGEL
    assert multiply(m, multiply(m, a, b), c) == multiply(m, a, multiply(m, b, c))
    assert multiply(m, a, inverse(a)) == (0,) * 4
    assert multiply(m, inverse(a), a) == (0,) * 4


@settings(max_examples=200)
@given(rational_points(5), rational_points(5), rational_points(5))
def test_bch_associativity_step_four(a, b, c):
    m = FILIFORM
    assert multiply(m, multiply(m, a, b), c) == multiply(m, a, multiply(m, b, c))
    assert multiply(m, a, inverse(a)) == (0,) * 5


@pytest.mark.parametrize("model", [H1, H2, ENGEL, FILIFORM], ids=["H1", "H2", "engel", "filiform"])
def test_bracket_fidelity(model):
    """[X_i, X_j] of left-invariant fields equals sum_k c_ij^k X_k exactly."""
    n = model.dim
    L = model.left_fields
    R = model.right_fields
    for i in range(n):
        for j in range(n):
            comm = L[i].commutator(L[j])
            coeffs = [model.structure.constants.get((i, j, k), Fraction(0)) for k in range(n)]
            expected = [sum((L[k].coefficients[r] * coeffs[k] for k in range(n)), Poly.zero(n))
                        for r in range(n)]
            assert list(comm.coefficients) == expected
            # right-invariant fields realise the opposite bracket
            commR = R[i].commutator(R[j])
            expectedR = [sum((R[k].coefficients[r] * -coeffs[k] for k in range(n)), Poly.zero(n))
                         for r in range(n)]
            assert list(commR.coefficients) == expectedR


def test_left_and_right_fields_commute():
    for model in (H1, ENGEL):
        for X in model.left_fields:
            for Y in model.right_fields:
                assert all(c.is_zero() for c in X.commutator(Y).coefficients)


def test_bch_low_order_terms():
    sc = H1.structure
    x, y = [Fraction(1), 0, 0], [0, Fraction(1), 0]
    assert bch(sc, x, y, 2) == [1, 1, Fraction(1, 2)]


def test_jacobi_violation_reports_triple():
    # [E1,E2]=E3, [E2,E3]=E1, [E3,E1]=E1 breaks Jacobi
    sc = StructureConstants.from_brackets(3, [(0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 0, 1)])
    with pytest.raises(JacobiViolation) as err:
        build_group(sc, (0, 1, 2))
    assert err.value.triple == (0, 1, 2)


def test_not_nilpotent():
    sc = StructureConstants.from_brackets(2, [(0, 1, 1, 1)])  # ax + b group
    with pytest.raises(NotNilpotent):
        build_group(sc, (0, 1))


def test_not_bracket_generating():
    with pytest.raises(NotBracketGenerating) as err:
        build_group(H1.structure, (0,))
    assert err.value.span_dim == 1


def test_inconsistent_antisymmetry():
    with pytest.raises(GroupDefinitionError):
        StructureConstants.from_brackets(3, [(0, 1, 2, 1), (1, 0, 2, 1)])


def test_not_stratified_norm():
    # basis not adapted to the grading: [E1, E2] = E2 + E3 style mixing
    sc = StructureConstants.from_brackets(3, [(0, 1, 2, 1)])
    m = build_group(sc, (0, 1, 2))  # E3 declared horizontal -> weights 1,1,1 but bracket lands in layer 1
    assert not m.stratified
    with pytest.raises(NotStratified):
        homogeneous_norm(m, (1, 0, 0))


def test_definition_file_roundtrip(tmp_path):
    data = {"dim": 4, "brackets": [[1, 2, 3, "1"], [1, 3, 4, "1"]], "horizontal": [1, 2]}
    p = tmp_path / "engel.json"
    p.write_text(__import__("json").dumps(data))
    m = load_group(str(p))
    assert m.weights == ENGEL.weights
    assert m.product_map == ENGEL.product_map
    with pytest.raises(GroupDefinitionError):
        group_from_definition({"dim": 3, "brackets": [[1, 2]], "horizontal": [1]})
    with pytest.raises(GroupDefinitionError):
        load_group("no-such-group")


def test_content_hash_stable():
    assert heisenberg(1).content_hash() == H1.content_hash()
    assert H1.content_hash() != ENGEL.content_hash()


@settings(max_examples=100)
@given(rational_points(3), st.sampled_from([Fraction(1, 2), Fraction(2), Fraction(3)]))
def test_norm_homogeneity_and_dilation_automorphism(a, lam):
    val, k = norm_power(H1, a)
    val2, _ = norm_power(H1, dilate(H1, a, lam))
    assert val2 == lam ** k * val
    b = (Fraction(1), Fraction(-2), Fraction(1, 3))
    assert dilate(H1, multiply(H1, a, b), lam) == multiply(H1, dilate(H1, a, lam), dilate(H1, b, lam))


def test_kaplan_unit_ball_volume():
    v, err = unit_ball_volume(H1)
    assert abs(v - math.pi ** 2 / 8) < max(5 * err, 2e-3)
    assert unit_ball_volume(euclidean(2)) == (4.0, 0.0)
    vol, _ = ball_volume(euclidean(1), 0.5)
    assert vol == 1.0


def test_in_ball_is_left_invariant():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, size=(500, 3))
    c = np.array([0.75, -0.5, 0.25])
    inside = H1.in_ball(pts, c, 1.0)
    moved = H1.multiply_array(-c, pts)
    assert np.array_equal(inside, H1.in_ball(moved, np.zeros(3), 1.0))
    lo, hi = H1.ball_bounding_box(c, 1.0)
    assert np.all(pts[inside] >= lo) and np.all(pts[inside] <= hi)


def test_center_net():
    ray = center_net(H1, 4, 1, (0, 0, 1))
    assert ray == [(0, 0, k) for k in range(1, 5)]
    net = center_net(euclidean(1), 6, 1)
    assert len(net) == 13
    with pytest.raises(ValueError):
        center_net(H1, 4, 1, (0, 0))
