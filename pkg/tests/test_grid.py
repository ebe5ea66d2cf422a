import numpy as np
import pytest

from strongfield.grid import build_grid, build_hamiltonian, build_hamiltonians
from strongfield.specfun import coulomb_radial_wave


@pytest.fixture(scope="module")
def grid400():
    return build_grid(400, 200.0, 0.4)


class TestBuildGrid:
    def test_mapping_endpoints(self, grid400):
        # x=-1 -> r=0 and x=+1 -> r=r_max are excluded; interior strictly
        # inside and increasing
        r = grid400.nodes
        assert r[0] > 0.0 and r[-1] < grid400.r_max
        assert np.all(np.diff(r) > 0)

    def test_quadrature_exact_on_1_and_r(self, grid400):
        w, r = grid400.weights, grid400.nodes
        assert abs(w.sum() - grid400.r_max) / grid400.r_max < 1e-12
        assert abs((w * r).sum() - grid400.r_max**2 / 2) \
            / (grid400.r_max**2 / 2) < 1e-12

    def test_1s_density_quadrature(self, grid400):
        # closed-form Gamma integral: int 4 r^2 e^(-2r) dr = 1
        val = grid400.integrate(4.0 * grid400.nodes**2
                                * np.exp(-2.0 * grid400.nodes))
        assert abs(val - 1.0) < 1e-10

    def test_node_density_near_origin(self, grid400):
        assert np.sum(grid400.nodes < 1.0) >= 10

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            build_grid(8, 100.0)
        with pytest.raises(ValueError):
            build_grid(100, -5.0)
        with pytest.raises(ValueError):
            build_grid(100, 100.0, 0.0)


@pytest.fixture(scope="module")
def ham600():
    grid = build_grid(600, 400.0, 0.4)
    return build_hamiltonian(grid, 0, keep_matrix=True), grid


class TestHamiltonian:
    def test_symmetry(self, ham600):
        ham, _ = ham600
        asym = np.max(np.abs(ham.matrix - ham.matrix.T))
        assert asym < 1e-12

    def test_hydrogen_spectrum_l0(self, ham600):
        ham, _ = ham600
        eps = ham.eigenvalues
        assert abs(eps[0] + 0.5) < 1e-8
        assert abs(eps[1] + 0.125) < 1e-8
        assert abs(eps[2] + 1.0 / 18.0) < 1e-8

    def test_hydrogen_spectrum_l1(self, ham600):
        _, grid = ham600
        ham1 = build_hamiltonian(grid, 1)
        assert abs(ham1.eigenvalues[0] + 0.125) < 1e-8

    def test_bound_spectrum_accuracy(self):
        # lowest 5 bound states at n=800, r_max=600: eps_n -> -1/(2 n^2)
        grid = build_grid(800, 600.0, 0.4)
        ham = build_hamiltonian(grid, 0)
        for i in range(5):
            exact = -0.5 / (i + 1) ** 2
            assert abs(ham.eigenvalues[i] - exact) / abs(exact) < 1e-6

    def test_eigenvalues_nondegenerate_increasing(self, ham600):
        ham, _ = ham600
        bound = ham.eigenvalues[ham.eigenvalues < 0]
        assert np.all(np.diff(bound) > 0)

    def test_completeness_of_1s(self, ham600):
        # quadrature-sampled analytic 1s has unit norm in the basis and its
        # projections on the eigenvectors resolve it completely
        ham, grid = ham600
        u = 2.0 * grid.nodes * np.exp(-grid.nodes) * grid.sqrt_mass
        overlaps = ham.eigenvectors.T @ u
        assert abs(np.sum(overlaps**2) - 1.0) < 1e-10
        assert abs(u @ u - 1.0) < 1e-10

    def test_positive_energy_state_matches_coulomb_wave(self, ham600):
        # box eigenstate at eps ~ k^2/2 vs the Numerov wave, cosine
        # similarity >= 0.999 on r < r_max/2
        ham, grid = ham600
        target = 0.125  # k = 0.5
        idx = int(np.argmin(np.abs(ham.eigenvalues - target)))
        eps = ham.eigenvalues[idx]
        k = np.sqrt(2.0 * eps)
        wave = coulomb_radial_wave(k, 0, grid)
        sel = grid.nodes < grid.r_max / 2
        a = ham.eigenvectors[sel, idx] / grid.sqrt_mass[sel]
        b = wave.samples[sel]
        cos = abs(a @ b) / np.sqrt((a @ a) * (b @ b))
        assert cos >= 0.999

    def test_negative_l_rejected(self, grid400):
        with pytest.raises(ValueError):
            build_hamiltonian(grid400, -1)


class TestEigenCache:
    def test_round_trip(self, tmp_path):
        grid = build_grid(64, 80.0, 0.4)
        hams = build_hamiltonians(grid, 2, cache_dir=tmp_path)
        again = build_hamiltonians(grid, 2, cache_dir=tmp_path)
        for h1, h2 in zip(hams, again):
            assert np.array_equal(h1.eigenvalues, h2.eigenvalues)
            assert np.array_equal(h1.eigenvectors, h2.eigenvectors)

    def test_cache_rejects_other_grid(self, tmp_path):
        grid = build_grid(64, 80.0, 0.4)
        build_hamiltonians(grid, 1, cache_dir=tmp_path)
        other = build_grid(64, 80.0, 0.5)
        hams = build_hamiltonians(other, 1, cache_dir=tmp_path)
        assert abs(hams[0].eigenvalues[0] + 0.5) < 1e-6
