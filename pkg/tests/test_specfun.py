import numpy as np
import pytest

from strongfield.grid import build_grid
from strongfield.specfun import (
    CoulombRadialWave,
    coulomb_phase_shift,
    coulomb_radial_wave,
    coulomb_wave_bank,
    gauss_lobatto,
    kepler_pericenter,
    legendre,
    legendre_all,
    log_gamma,
    phase_shift_table,
)

# oracle values frozen from mpmath at 40 digits (see docstrings)


class TestLegendre:
    def test_p0_is_one(self):
        assert legendre(0, 0.37) == 1.0

    def test_p1_is_x(self):
        assert legendre(1, -0.5) == -0.5

    def test_p6_zeros(self):
        # positive zeros of P6 from mpmath polyroots on the recurrence
        zeros = [0.238619186083, 0.661209386466, 0.932469514203]
        for x0 in zeros:
            assert abs(legendre(6, x0)) < 1e-11

    def test_endpoint_exact(self):
        for l in (0, 1, 7, 40, 60):
            assert legendre(l, 1.0) == 1.0
            assert legendre(l, -1.0) == (-1.0) ** l

    def test_domain_error(self):
        with pytest.raises(ValueError):
            legendre(3, 1.2)

    def test_recurrence_consistency(self):
        # (l+1) P_{l+1} = (2l+1) x P_l - l P_{l-1} to 1e-13, random x
        rng = np.random.default_rng(7)
        x = rng.uniform(-1.0, 1.0, 1000)
        P = legendre_all(61, x)
        for l in range(1, 60):
            lhs = (l + 1) * P[l + 1]
            rhs = (2 * l + 1) * x * P[l] - l * P[l - 1]
            assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_legendre_all_matches_single(self):
        x = np.linspace(-1, 1, 11)
        P = legendre_all(12, x)
        for l in (0, 3, 12):
            assert np.allclose(P[l], legendre(l, x), rtol=0, atol=1e-14)


class TestGaussLobatto:
    def test_endpoints_and_symmetry(self):
        x, w = gauss_lobatto(12)
        assert x[0] == -1.0 and x[-1] == 1.0
        assert np.allclose(x, -x[::-1], atol=1e-15)
        assert np.allclose(w, w[::-1], atol=1e-15)

    def test_weights_sum_to_two(self):
        for n in (2, 5, 33, 402):
            _, w = gauss_lobatto(n)
            assert abs(w.sum() - 2.0) < 1e-13

    def test_polynomial_exactness(self):
        # (n)-point Lobatto integrates degree 2n-3 exactly
        x, w = gauss_lobatto(9)
        for deg in range(0, 2 * 9 - 2):
            exact = 2.0 / (deg + 1) if deg % 2 == 0 else 0.0
            assert abs(np.sum(w * x**deg) - exact) < 1e-14


class TestLogGamma:
    def test_against_factorials(self):
        import math

        for n in range(1, 12):
            assert abs(log_gamma(n + 1).real - math.lgamma(n + 1)) < 1e-12

    def test_complex_value(self):
        # mpmath: loggamma(1 - 1j) = -0.65092319930... + 0.30164032046753...j
        val = log_gamma(1.0 - 1.0j)
        assert abs(val.real - (-0.6509231993018563)) < 1e-13
        assert abs(val.imag - 0.30164032046753320) < 1e-13

    def test_recurrence_identity(self):
        rng = np.random.default_rng(3)
        z = rng.uniform(0.3, 5.0, 50) + 1j * rng.uniform(-80.0, 80.0, 50)
        diff = log_gamma(z + 1.0) - log_gamma(z) - np.log(z)
        assert np.max(np.abs(diff)) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            log_gamma(-0.5 + 1j)


class TestCoulombPhaseShift:
    def test_spec_value(self):
        # arg Gamma(1 - i) from mpmath at 40 digits
        assert abs(coulomb_phase_shift(0, 1.0) - 0.30164032046753320) < 1e-12

    def test_gamma_recurrence_difference(self):
        # delta_1 - delta_0 at k=1 is arg(1 - i) = -pi/4 exactly
        d = coulomb_phase_shift(1, 1.0) - coulomb_phase_shift(0, 1.0)
        assert abs(d - (-np.pi / 4)) < 1e-13

    def test_high_k_limit(self):
        assert abs(coulomb_phase_shift(5, 1e6)) < 1e-5

    def test_domain_error(self):
        with pytest.raises(ValueError):
            coulomb_phase_shift(2, -0.3)
        with pytest.raises(ValueError):
            coulomb_phase_shift(2, 0.0)

    def test_table_recurrence_invariant(self):
        # delta_{l+1}(k) - delta_l(k) = arg((l+1) + i eta), eta = -1/k
        k = np.linspace(0.05, 3.0, 60)
        table = phase_shift_table(k, 60)
        eta = -1.0 / k
        for l in range(60):
            expect = np.arctan2(eta, l + 1.0)
            got = table.delta[l + 1] - table.delta[l]
            assert np.max(np.abs(got - expect)) < 1e-12

    def test_table_continuity_in_k(self):
        # fine grid where the true variation per step is << 2 pi: any
        # branch wrap would show as a ~6.3 jump
        k = np.arange(0.2, 3.0, 1e-3)
        table = phase_shift_table(k, 10)
        jumps = np.abs(np.diff(table.delta, axis=1))
        assert jumps.max() < 0.5

    def test_all_finite(self):
        table = phase_shift_table(np.linspace(0.01, 2.0, 100), 40)
        assert np.all(np.isfinite(table.delta))


@pytest.fixture(scope="module")
def wave_grid():
    return build_grid(400, 280.0, 0.4)


class TestCoulombRadialWave:
    def test_asymptotic_amplitude_normalization(self, wave_grid):
        # k=0.5, l=0: amplitude at the outermost two extrema (via the local
        # envelope) within 1e-6 relative of the mpmath Coulomb wave, i.e.
        # the sqrt(2/(pi k)) normalization is realized there
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 25
        from strongfield.specfun import _derivative_5pt, _numerov_batch, \
            _normalize_energy

        k = 0.5
        h = 0.05
        r, u = _numerov_batch([k], 0, wave_grid.r_max, h)
        du = _derivative_5pt(u, h)
        scale = _normalize_energy(r, u[:, 0], du[:, 0], k, 0)
        un = u[:, 0] * scale
        jmin = int(0.55 * len(r))
        s = np.sign(du[jmin:-2, 0])
        flips = np.nonzero(s[:-1] * s[1:] < 0)[0] + jmin
        amp = np.sqrt(2.0 / (np.pi * k))
        for j in flips[-2:]:
            oracle = float(mp.coulombf(0, -1.0 / k, k * r[j])) * amp
            assert abs(un[j] - oracle) <= 1e-6 * amp

    def test_against_mpmath(self, wave_grid):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        for k, l in [(0.5, 0), (0.19, 8), (1.0, 3)]:
            wave = coulomb_radial_wave(k, l, wave_grid)
            amp = np.sqrt(2.0 / (np.pi * k))
            idx = np.searchsorted(wave_grid.nodes, [40.0, 110.0, 190.0])
            for j in idx:
                rv = wave_grid.nodes[j]
                oracle = float(mp.coulombf(l, -1.0 / k, k * rv)) * amp
                assert abs(wave.samples[j] - oracle) < 2e-5 * amp

    def test_regular_at_origin(self, wave_grid):
        w = coulomb_radial_wave(0.5, 2, wave_grid)
        # r^(l+1) behavior: tiny at the innermost nodes, growing
        inner = np.abs(w.samples[:4])
        assert inner[0] < 1e-4
        assert np.all(np.diff(inner) > 0)

    def test_turning_point_matches_pericenter_formula(self):
        # oracle = direct evaluation of (sqrt(1+(kl)^2)-1)/k^2
        assert abs(kepler_pericenter(0.19, 8) - 22.6994589055) < 1e-9
        # and the wave is suppressed below / oscillatory above it
        grid = build_grid(400, 320.0, 0.4)
        w = coulomb_radial_wave(0.19, 8, grid)
        r = grid.nodes
        amp = np.sqrt(2.0 / (np.pi * 0.19))
        below = np.abs(w.samples[r < 0.5 * 22.7])
        above = np.abs(w.samples[(r > 1.5 * 22.7) & (r < 300.0)])
        assert below.max() < 1e-2 * amp
        assert above.max() > 0.5 * amp

    def test_orthogonality_quadrature(self, wave_grid):
        # overlap of far-separated k at |k-k'| r_max >> 1 is <= 1e-3 of
        # the self-overlap; oracle = direct trapezoid quadrature on the
        # integrator's fine uniform grid
        from strongfield.specfun import _derivative_5pt, _numerov_batch, \
            _normalize_energy

        h = 0.05
        r, u = _numerov_batch([0.25, 2.75], 0, wave_grid.r_max, h)
        du = _derivative_5pt(u, h)
        w1 = u[:, 0] * _normalize_energy(r, u[:, 0], du[:, 0], 0.25, 0)
        w2 = u[:, 1] * _normalize_energy(r, u[:, 1], du[:, 1], 2.75, 0)
        cross = abs(np.trapezoid(w1 * w2, r))
        self1 = np.trapezoid(w1 * w1, r)
        assert cross <= 1e-3 * self1

    def test_precondition_error_names_radius(self):
        grid = build_grid(64, 60.0, 0.4)
        with pytest.raises(ValueError, match="r_max"):
            coulomb_radial_wave(0.05, 0, grid)  # needs 50/k = 1000

    def test_wkb_amplitude_constancy(self, wave_grid):
        # local WKB amplitude sqrt(p)*envelope constant to 1e-4 in the
        # asymptotic region (where the second-order WKB residual
        # ~ 1/(2 k^4 r^2) is itself below 1e-4), several k and l
        from strongfield.specfun import _derivative_5pt, _numerov_batch, \
            _normalize_energy

        for k, l in [(0.5, 1), (0.8, 4), (1.4, 10)]:
            h = min(2 * np.pi / (20 * k), 0.05)
            r, u = _numerov_batch([k], l, wave_grid.r_max, h)
            du = _derivative_5pt(u, h)
            scale = _normalize_energy(r, u[:, 0], du[:, 0], k, l)
            lam2 = l * (l + 1)
            # envelope residual falls off like ~1.3e-3/(k^3 r); the window
            # starts where it is safely below the 1e-4 tolerance
            r_asym = max(3.0 * kepler_pericenter(k, l) + 20.0,
                         20.0 / k**3, 120.0)
            assert r_asym < 0.8 * wave_grid.r_max
            sel = (r > r_asym) & (r < wave_grid.r_max - 0.2)
            rs = r[sel]
            p = np.sqrt(k * k + 2.0 / rs - lam2 / rs**2)
            C = np.hypot(u[sel, 0] * scale, du[sel, 0] * scale / p) * np.sqrt(p)
            target = np.sqrt(2.0 / np.pi)
            assert np.max(np.abs(C - target)) / target < 1e-4


class TestWaveBank:
    def test_inaccessible_channels_zeroed(self):
        grid = build_grid(128, 150.0, 0.4)
        waves, ok = coulomb_wave_bank([0.05, 1.0], 30, grid.nodes, grid.r_max)
        # l=30 at k=0.05: turning point ~ sqrt(930)/0.05 = 610 >> 150
        assert not ok[30, 0]
        assert np.all(waves[30, 0] == 0.0)
        # l=0 at k=1.0 is fine
        assert ok[0, 1]
        assert np.max(np.abs(waves[0, 1])) > 0.1

    def test_bank_matches_single_wave(self, wave_grid):
        waves, ok = coulomb_wave_bank([0.5], 2, wave_grid.nodes,
                                      wave_grid.r_max)
        single = coulomb_radial_wave(0.5, 2, wave_grid)
        assert ok[2, 0]
        assert np.allclose(waves[2, 0], single.samples, atol=1e-10)
