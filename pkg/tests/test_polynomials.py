from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspec.errors import DegreeSearchOverflow, IdentityFailed
from subspec.group_model import engel, euclidean, heisenberg
from subspec.polynomials import (DISCRETE, NOT_DISCRETE, GroupPolynomial, apply_field,
                                 basis_labels, field_of, kernel_to_string, leibman_degree,
                                 ordinary_degree_bound, right_annihilator, witness_check)
from subspec.poly import Poly

from strategies import rational_points, small_fractions

H1 = heisenberg(1)
ENGEL = engel()


def gp(text, model=H1):
    return GroupPolynomial.parse(text, model)


def test_apply_field_examples():
    T = H1.right_fields[2]
    assert apply_field(T, gp("x^2 + y^2")).is_zero()
    assert apply_field(H1.left_fields[0], gp("y^2*x + 2*y*t")).is_zero()
    assert apply_field(H1.right_fields[0], gp("x^2 + y^2")) == gp("2*x")


def test_leibman_degree_examples():
    assert leibman_degree(H1, gp("3")) == 0
    assert leibman_degree(H1, gp("x^2 + y^2")) == 2
    assert leibman_degree(H1, gp("t")) == 2
    with pytest.raises(ValueError):
        leibman_degree(H1, gp("0"))
    with pytest.raises(DegreeSearchOverflow):
        leibman_degree(H1, gp("x^3"), cap=1)


@pytest.mark.parametrize("text,verdict,kernel", [
    ("x^2 + y^2", NOT_DISCRETE, "T"),
    ("t^2", DISCRETE, None),
    ("y^2*x + 2*y*t", DISCRETE, None),
    ("y^2*x - 2*y*t", NOT_DISCRETE, "X"),
])
def test_heisenberg_decisions(text, verdict, kernel):
    res = right_annihilator(H1, gp(text))
    assert res.verdict == verdict
    if kernel is None:
        assert res.kernel_basis == () and res.witness is None
    else:
        assert res.dimension == 1
        assert kernel_to_string(res.witness, basis_labels(H1)) == kernel


def test_zero_and_constant_polynomials_not_discrete():
    assert right_annihilator(H1, gp("0")).dimension == 3
    assert right_annihilator(H1, gp("5")).verdict == NOT_DISCRETE


def test_abelian_and_vector_valued():
    R2 = euclidean(2)
    res = right_annihilator(R2, gp("x1^2", R2))
    assert res.kernel_basis == ((0, 1),)
    assert right_annihilator(R2, gp("x1, x2", R2)).discrete
    assert right_annihilator(H1, gp("x, y")).kernel_basis == ((0, 0, 1),)


def test_witness_check():
    rep = witness_check(H1, gp("x^2 + y^2"), (0, 0, 1), samples=5, points=2048)
    assert rep.identity_holds and rep.uniformly_bounded
    R2 = euclidean(2)
    assert witness_check(R2, gp("x1^2", R2), (0, 1), samples=3, points=512).uniformly_bounded
    with pytest.raises(IdentityFailed):
        witness_check(H1, gp("t^2"), (1, 0, 0))
    with pytest.raises(ValueError):
        witness_check(H1, gp("t^2"), (0, 0, 0))


def test_kernel_to_string_formats():
    assert kernel_to_string((Fraction(1), Fraction(-1, 2), 0), ["X", "Y", "T"]) == "X - 1/2*Y"
    assert kernel_to_string((0, 0, 0), ["X", "Y", "T"]) == "0"


# ---- properties ----------------------------------------------------------

def random_poly(nvars, max_deg=3):
    mono = st.tuples(*[st.integers(0, max_deg)] * nvars).filter(lambda m: 0 < sum(m) <= max_deg)
    return (st.dictionaries(mono, small_fractions, min_size=1, max_size=4)
            .map(lambda t: Poly(nvars, t)).filter(lambda p: not p.is_zero()))


@settings(max_examples=100)
@given(random_poly(3), rational_points(3), st.sampled_from([Fraction(-2), Fraction(1, 3), Fraction(5)]))
def test_annihilator_dimension_invariance(p, g, c):
    dim = right_annihilator(H1, p).dimension
    assert right_annihilator(H1, p.compose(H1.translate_left(g))).dimension == dim
    assert right_annihilator(H1, p.compose(H1.translate_right(g))).dimension == dim
    assert right_annihilator(H1, p * c).kernel_basis == right_annihilator(H1, p).kernel_basis


@settings(max_examples=60)
@given(random_poly(4, max_deg=2))
def test_kernel_consistency_and_degree_bound_engel(p):
    res = right_annihilator(ENGEL, p)
    for v in res.kernel_basis:
        assert apply_field(field_of(ENGEL, v), p).is_zero()
    assert leibman_degree(ENGEL, p) <= ordinary_degree_bound(ENGEL, p)


@settings(max_examples=40)
@given(random_poly(3, max_deg=2))
def test_not_discrete_implies_witness(p):
    res = right_annihilator(H1, p)
    for v in res.kernel_basis:
        assert witness_check(H1, p, v, samples=2, points=256).identity_holds
