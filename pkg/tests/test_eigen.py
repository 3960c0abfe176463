import numpy as np
import pytest
import scipy.sparse as sps

from subspec.eigen import eigsh_smallest, standard_form
from subspec.errors import NoConvergence, NotSymmetric


def random_spd(n, seed, density=0.01):
    rng = np.random.default_rng(seed)
    A = sps.random(n, n, density=density, random_state=rng, format="csr")
    A = A + A.T
    d = np.abs(A).sum(axis=1).A1 + rng.uniform(0.1, 2.0, n)
    B = (A + sps.diags(d)).tocsr()
    return ((B + B.T) * 0.5).tocsr()


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_diagonal_exact(method):
    d = np.arange(1.0, 301.0)[::-1]
    res = eigsh_smallest(sps.diags(d).tocsr(), 4, method=method, shift=0.5)
    assert np.allclose(res.values, [1, 2, 3, 4], atol=1e-10)
    assert res.method == method


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_lanczos_matches_dense(seed):
    B = random_spd(500, seed)
    tol = 1e-8
    dense = eigsh_smallest(B, 6, method="dense")
    lz = eigsh_smallest(B, 6, tol=tol, method="lanczos", seed=seed)
    assert np.all(np.abs(lz.values - dense.values) <= 10 * tol * np.maximum(1, np.abs(dense.values)))
    assert np.all(lz.residuals <= tol * np.maximum(1, np.abs(lz.values)))


def test_repeated_eigenvalues_found():
    d = np.array([1.0, 1.0, 1.0, 2.0] + list(np.linspace(3, 10, 200)))
    res = eigsh_smallest(sps.diags(d).tocsr(), 4, method="lanczos", shift=0.5)
    assert np.allclose(res.values, [1, 1, 1, 2], atol=1e-9)


def test_standard_form_mass_scaling():
    K = sps.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    B = standard_form(K, np.array([4.0, 4.0]))
    assert np.allclose(B.toarray(), K.toarray() / 4)


def test_not_symmetric():
    with pytest.raises(NotSymmetric):
        standard_form(sps.csr_matrix(np.array([[1.0, 2.0], [0.0, 1.0]])))
    with pytest.raises(NotSymmetric):
        standard_form(sps.csr_matrix(np.ones((2, 3))))


def test_no_convergence_with_starved_iterations():
    rng = np.random.default_rng(3)
    d = 1.0 + 1e-7 * rng.random(400)
    with pytest.raises(NoConvergence):
        eigsh_smallest(sps.diags(d).tocsr(), 3, tol=1e-14, method="lanczos", max_iter=4)


def test_bad_arguments():
    B = sps.identity(5, format="csr")
    with pytest.raises(ValueError):
        eigsh_smallest(B, 0)
    with pytest.raises(ValueError):
        eigsh_smallest(B, 2, method="power")
