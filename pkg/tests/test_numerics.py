import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from hvzkit.lattice import SubspaceQ, canonicalize, enumerate_strata, generate_semilattice, msc_generators
from hvzkit.model import Hamiltonian, PotentialTerm
from hvzkit.numerics import (
    Grid,
    GridCapExceeded,
    OperatorMatrix,
    ThresholdConfig,
    classify_eigenvalue_stability,
    discretize_hamiltonian,
    lowest_eigenvalues,
    min_singular_value,
    richardson,
    sample_directions,
    threshold_estimate,
)
from hvzkit.potentials import AngularHomogeneous, PoschlTeller

FREE_1D = Hamiltonian(1, ())


def pt1d(strength=2.0):
    return Hamiltonian(1, (PotentialTerm(SubspaceQ.zero(1), PoschlTeller(strength)),))


def test_grid_conventions():
    g = Grid(1, 4.0, 8)
    assert g.spacing == 1.0 and g.axis_size == 7
    assert g.axis().tolist() == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    p = Grid(2, 4.0, 8, "periodic")
    assert p.shape == (8, 8) and p.axis()[0] == -4.0
    assert p.points().shape == (64, 2)
    with pytest.raises(GridCapExceeded):
        Grid(3, 1.0, 200)


@pytest.mark.parametrize("n", [10, 57])
def test_free_fd_spectrum_closed_form(n):
    g = Grid(1, 3.0, n)
    h = g.spacing
    m = n - 1
    k = np.arange(1, m + 1)
    oracle = np.sort((2 - 2 * np.cos(k * np.pi / (m + 1))) / h**2)
    got = lowest_eigenvalues(discretize_hamiltonian(FREE_1D, g), m).eigenvalues
    assert np.allclose(got, oracle, rtol=1e-12, atol=1e-10)


def test_free_2d_is_sum_of_1d():
    g = Grid(2, 2.0, 12)
    h, m = g.spacing, g.axis_size
    lam = (2 - 2 * np.cos(np.arange(1, m + 1) * np.pi / (m + 1))) / h**2
    oracle = np.sort((lam[:, None] + lam[None, :]).ravel())[:6]
    got = lowest_eigenvalues(discretize_hamiltonian(Hamiltonian(2, ()), g), 6).eigenvalues
    assert np.allclose(got, oracle, rtol=1e-12)


def test_dense_and_iterative_agree():
    A = discretize_hamiltonian(pt1d(), Grid.from_spacing(1, 12.0, 0.05))
    d = lowest_eigenvalues(A, 4, method="dense")
    i = lowest_eigenvalues(A, 4, method="iterative")
    assert d.method == "dense" and i.method == "iterative"
    assert np.allclose(d.eigenvalues, i.eigenvalues, atol=1e-9)
    assert np.all(i.residual_norms <= 1e-8 * A.norm_estimate())


def test_large_problem_uses_iterative():
    A = discretize_hamiltonian(pt1d(), Grid.from_spacing(1, 40.0, 0.02))
    assert A.N > 3000
    r = lowest_eigenvalues(A, 1)
    assert r.method == "iterative" and abs(r.eigenvalues[0] + 1) < 1e-3


def test_poschl_teller_ground_state():
    lam = lowest_eigenvalues(discretize_hamiltonian(pt1d(), Grid.from_spacing(1, 12.0, 0.02)), 1).eigenvalues[0]
    assert abs(lam + 1.0) < 1e-3


def test_second_order_convergence():
    exact = -1.0
    e = [
        lowest_eigenvalues(discretize_hamiltonian(pt1d(), Grid.from_spacing(1, 12.0, h)), 1).eigenvalues[0] - exact
        for h in (0.1, 0.05)
    ]
    assert 3.4 <= e[0] / e[1] <= 4.6


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 0.5))
def test_richardson_exact_on_quadratic_error(a, b, h):
    f = lambda s: a + b * s * s
    assert richardson(h, f(h), h / 2, f(h / 2)) == pytest.approx(a, abs=1e-9 * (1 + abs(a) + abs(b)))


def test_min_singular_value():
    D = np.diag([3.0, -0.5, 2.0])
    assert min_singular_value(D) == pytest.approx(0.5)
    big = sp.diags(np.linspace(0.25, 5.0, 5000)).tocsr()
    assert min_singular_value(OperatorMatrix(big)) == pytest.approx(0.25, rel=1e-6)


def test_sample_directions_stay_in_stratum():
    S = generate_semilattice(msc_generators(3, 1), 3)
    for st_ in enumerate_strata(S):
        dirs = sample_directions(st_, 8)
        assert dirs[0] == st_.representative
        assert len(set(dirs)) == len(dirs)
        assert all(st_.contains(a) for a in dirs)
        assert dirs == sample_directions(st_, 8)


def test_threshold_two_axis():
    H = Hamiltonian(
        2,
        (
            PotentialTerm(canonicalize([[1, 0]], 2), PoschlTeller(2.0)),
            PotentialTerm(canonicalize([[0, 1]], 2), PoschlTeller(2.0)),
        ),
    )
    rep = threshold_estimate(H)
    assert abs(rep.sigma_ess + 1) < 1e-3
    assert rep.attaining == [0, 1]
    assert rep.onsets_by_stratum()[2] == [0.0]


def test_threshold_direction_dependent():
    H = Hamiltonian(1, (PotentialTerm(SubspaceQ.zero(1), AngularHomogeneous.one_dim(2.0, 5.0)),))
    rep = threshold_estimate(H, cfg=ThresholdConfig())
    assert sorted(r.onset for r in rep.records) == [2.0, 5.0]
    assert rep.sigma_ess == 2.0


def test_stability_free_line():
    rep = classify_eigenvalue_stability(FREE_1D)
    assert rep.stable == []
    assert abs(rep.onset) < 0.05


def test_stability_poschl_teller():
    rep = classify_eigenvalue_stability(pt1d())
    assert len(rep.stable) == 1 and abs(rep.stable[0] + 1) < 2e-3
    assert abs(rep.onset) < 0.05


def test_stability_dimension_limit():
    with pytest.raises(ValueError):
        classify_eigenvalue_stability(Hamiltonian(3, ()))
