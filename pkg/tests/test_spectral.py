import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspec.errors import EmptyDomain, PotentialNotEvaluable
from subspec.group_model import euclidean, heisenberg
from subspec.spectral import (DIRICHLET, NEUMANN, BallSpec, Box, assemble, discretize,
                              poincare_constant, sigma, sigma_scan, smallest_eigenvalues,
                              tail_mass_dense, tail_mass_profile, tail_mass_sup)
from subspec.verdicts import BOUNDED, GROWTH, INCONCLUSIVE, VerdictConfig, envelope_verdict

R1, R2, H1 = euclidean(1), euclidean(2), heisenberg(1)

# regression baselines: sigma_D of the potential-free form on the Kaplan ball B(e, 1)
H1_BASELINE = {1 / 8: 7.651417049775505, 1 / 16: 8.109814523451007}


def test_hand_assembled_three_node_stencil():
    op = assemble(R1, Box((-1.0,), (1.0,)), 1.0)
    assert op.stiffness.shape == (1, 1)
    assert op.stiffness.toarray()[0, 0] == pytest.approx(2.0, abs=1e-14)


def test_oscillator_spectrum():
    op = assemble(R1, Box((-8.0,), (8.0,)), 1 / 64, "x^2")
    vals = smallest_eigenvalues(op, 5).values
    assert np.all(np.abs(vals - [1, 3, 5, 7, 9]) <= 0.01 * np.array([1, 3, 5, 7, 9]))


def test_dense_and_lanczos_agree_on_oscillator():
    op = assemble(R1, Box((-8.0,), (8.0,)), 1 / 32, "x^2")
    d = smallest_eigenvalues(op, 4, method="dense").values
    l = smallest_eigenvalues(op, 4, method="lanczos").values
    assert np.allclose(d, l, rtol=0, atol=1e-7)


def test_constant_shift_moves_spectrum_exactly():
    dom = Box((-2.0, -2.0), (2.0, 2.0))
    a = smallest_eigenvalues(assemble(R2, dom, 1 / 4, "x1^2"), 3, method="dense").values
    b = smallest_eigenvalues(assemble(R2, dom, 1 / 4, "x1^2 + 7/2"), 3, method="dense").values
    assert np.allclose(b - a, 3.5, atol=1e-10)


def test_dirichlet_interval_closed_forms():
    assert abs(sigma(R1, 0, (0.0,), math.pi / 2, 1 / 128) - 1) < 0.02
    assert abs(sigma(R1, 0, (0.0,), math.pi / 2, 1 / 128, NEUMANN)) < 1e-8
    vals = smallest_eigenvalues(assemble(R1, Box((0.0,), (math.pi,)), math.pi / 400), 3).values
    assert np.all(np.abs(vals - [1, 4, 9]) < 0.01 * np.array([1, 4, 9]))


def test_second_order_grid_convergence():
    errs = []
    for n in (50, 100, 200):
        op = assemble(R1, Box((0.0,), (math.pi,)), math.pi / n)
        errs.append(abs(smallest_eigenvalues(op, 3).values - [1, 4, 9]))
    for coarse, fine in zip(errs, errs[1:]):
        ratio = coarse / fine
        assert np.all((ratio > 4 * 0.7) & (ratio < 4 * 1.3)), ratio


@pytest.mark.parametrize("h", sorted(H1_BASELINE))
def test_heisenberg_baseline(h):
    val = sigma(H1, 0, (0, 0, 0), 1.0, h)
    assert val == pytest.approx(H1_BASELINE[h], rel=1e-9)


def test_heisenberg_self_convergence():
    # differences between successive refinements shrink
    d1 = H1_BASELINE[1 / 16] - H1_BASELINE[1 / 8]
    fine = sigma(H1, 0, (0, 0, 0), 1.0, (1 / 16, 1 / 16, 1 / 32))
    assert 0 < fine - H1_BASELINE[1 / 16] < d1


@pytest.mark.parametrize("model,h", [(R2, 1 / 4), (H1, 1 / 4)])
def test_bitwise_symmetric_and_psd(model, h):
    for bc in (DIRICHLET, NEUMANN):
        op = assemble(model, BallSpec((0.5,) * model.dim, 1.5), h, "x1^2" if model is R2 else "t^2", bc)
        K = op.stiffness
        assert (K != K.T).nnz == 0
        assert np.linalg.eigvalsh(K.toarray()).min() > -1e-10


def _random_potential(coeffs, model):
    names = model.names
    return " + ".join(f"{c}*{n}^2" for c, n in zip(coeffs, names))


config = st.tuples(
    st.sampled_from(["R2", "H1"]),
    st.lists(st.integers(0, 4), min_size=3, max_size=3),
    st.lists(st.integers(0, 3), min_size=3, max_size=3),
    st.lists(st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0]), min_size=3, max_size=3),
    st.sampled_from([1.0, 1.5, 2.0]),
)


@settings(max_examples=20)
@given(config)
def test_neumann_below_dirichlet_and_monotone_in_V(cfg):
    name, c1, extra, center, r = cfg
    model = R2 if name == "R2" else H1
    n = model.dim
    V1 = _random_potential(c1[:n], model) or "0"
    V2 = V1 + " + " + _random_potential(extra[:n], model) + " + 1/4"
    ctr = tuple(center[:n])
    h = 1 / 4
    sD = sigma(model, V1, ctr, r, h, DIRICHLET)
    sN = sigma(model, V1, ctr, r, h, NEUMANN)
    assert sN <= sD + 1e-10
    dom = BallSpec(ctr, r)
    a = smallest_eigenvalues(assemble(model, dom, h, V1), 3, method="dense").values
    b = smallest_eigenvalues(assemble(model, dom, h, V2), 3, method="dense").values
    assert np.all(a <= b + 1e-10)


@pytest.mark.parametrize("model", [R2, H1])
def test_dirichlet_domain_monotonicity(model):
    vals = [sigma(model, 0, (0,) * model.dim, r, 1 / 4) for r in (1.0, 1.5, 2.0)]
    assert vals[0] >= vals[1] >= vals[2]


def test_sigma_scan_verdicts():
    res = sigma_scan(R1, "x^2", [(float(k),) for k in range(1, 9)], 1.0, 1 / 32)
    assert res.verdict == GROWTH
    assert len(res.rows()) == 8 and res.rows()[0]["bc"] == DIRICHLET
    res = sigma_scan(H1, "x^2 + y^2", [(0, 0, k) for k in range(1, 9)], 1.0, 1 / 8, threads=2)
    assert res.verdict == BOUNDED
    assert max(res.values) - min(res.values) < 1e-8


def test_envelope_verdict_rules():
    assert envelope_verdict([1, 2, 4, 8]) == GROWTH
    assert envelope_verdict([3, 3, 3, 3]) == BOUNDED
    assert envelope_verdict([1, 1, 2, 3]) == INCONCLUSIVE
    assert envelope_verdict([5]) == INCONCLUSIVE
    assert envelope_verdict([1, 1, 2, 3], VerdictConfig(bounded_ratio=5.0)) == BOUNDED


def test_tail_mass_oscillator_decreases_and_matches_dense():
    dom = Box((-8.0,), (8.0,))
    prof = tail_mass_profile(R1, "x^2", dom, 1 / 8, [2, 3, 4, 5, 6])
    assert all(a > b for a, b in zip(prof, prof[1:]))
    for rho, val in zip([2, 4, 6], prof[::2]):
        assert val == pytest.approx(tail_mass_dense(R1, "x^2", dom, 1 / 8, rho), rel=1e-6)


def test_tail_mass_huge_potential():
    assert tail_mass_sup(R1, 1e6, Box((-8.0,), (8.0,)), 1 / 8, 2) <= 1e-6


def test_tail_mass_plateau_coarse_dense():
    dom = Box((-8.0, -8.0), (8.0, 8.0))
    vals = tail_mass_profile(R2, "x1^2", dom, 1 / 2, [2, 6])
    dense = [tail_mass_dense(R2, "x1^2", dom, 1 / 2, rho) for rho in (2, 6)]
    assert np.allclose(vals, dense, rtol=1e-6)
    assert vals[1] >= 0.5 * vals[0]


def test_poincare_euclidean():
    lam1 = poincare_constant(R1, 1.0, 1 / 256)
    assert lam1 == pytest.approx((math.pi / 2) ** 2, rel=0.02)
    lam2 = poincare_constant(R1, 2.0, 1 / 256)
    assert lam1 / lam2 == pytest.approx(4, rel=0.05)
    q1 = poincare_constant(R2, 1.0, 1 / 16)
    q2 = poincare_constant(R2, 2.0, 1 / 16)
    assert q1 / q2 == pytest.approx(4, rel=0.05)


def test_poincare_heisenberg_dilation():
    h = (1 / 8, 1 / 8, 1 / 32)
    ratio = poincare_constant(H1, 1.0, h) / poincare_constant(H1, 2.0, h)
    assert ratio == pytest.approx(4, rel=0.15)


def test_errors():
    with pytest.raises(EmptyDomain):
        Box((1.0,), (1.0,))
    with pytest.raises(EmptyDomain):
        assemble(R1, Box((0.0,), (1.0,)), 1.0)
    with pytest.raises(EmptyDomain):
        BallSpec((0.0,), 0.0)
    with pytest.raises(PotentialNotEvaluable):
        assemble(R1, Box((-1.0,), (1.0,)), 0.25, "log(x)")
    with pytest.raises(ValueError):
        discretize(R1, Box((-1.0,), (1.0,)), 0.25, "Robin")


def test_discretization_lookup():
    disc = discretize(R2, Box((-1.0, -1.0), (1.0, 1.0)), 0.5, NEUMANN)
    assert disc.size == 25
    idx = disc.lookup(disc.lattice)
    assert np.array_equal(np.sort(idx), np.arange(25))
    assert disc.lookup(np.array([[10, 10]]))[0] == -1


def test_t_squared_along_x_ray_is_recorded_not_judged():
    res = sigma_scan(H1, "t^2", [(float(k), 0.0, 0.0) for k in range(1, 6)], 1.0, 1 / 8)
    assert all(np.isfinite(res.values)) and min(res.values) > 0
    assert res.verdict in (GROWTH, BOUNDED, INCONCLUSIVE)
