"""
Everything downstream of the final wavefunction: projection onto
energy-normalized Coulomb waves, momentum-space densities and maps,
ATI ring detection, ring-resolved partial-wave probabilities, and the
single-Legendre angular fits.

With energy-normalized continuum states the amplitudes a_l(k) satisfy

    P_ion = sum_l  int |a_l(k)|^2  k dk,

and the momentum-space density is

    dP/dk = (1/4 pi k) | sum_l e^{i delta_l(k)} sqrt(2l+1)
                          P_l(cos theta_k) a_l(k) |^2 .
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import AtomBasis, WaveFunction
from .specfun import coulomb_phase_shift, coulomb_wave_bank, legendre_all

__all__ = [
    "PartialWaveAmplitudes",
    "MomentumMap",
    "RingSpec",
    "AngularCut",
    "project",
    "momentum_density",
    "momentum_map",
    "detect_rings",
    "ring_partial_probability",
    "angular_cut",
    "angle_integrated_spectrum",
]


@dataclass
class PartialWaveAmplitudes:
    """
    Complex projections a_l(k) = <k,l|psi(tau)> on a uniform momentum grid,
    energy-normalized continuum states (normalization = "energy").

    channel_ok marks (l, k) channels whose Coulomb wave fits in the box;
    the others are classically inaccessible there and carry zero amplitude.
    """

    k: np.ndarray
    l_max: int
    a: np.ndarray
    time: float
    bound_population: float
    norm: float
    channel_ok: np.ndarray
    normalization: str = "energy"

    def continuum_probability(self) -> float:
        """sum_l int |a_l|^2 k dk over the covered momentum range."""
        return float(np.trapezoid(np.sum(np.abs(self.a) ** 2, axis=0) * self.k,
                              self.k))

    def phase_table(self) -> np.ndarray:
        """delta_l(k) for the stored grid, shape (l_max+1, nk)."""
        if not hasattr(self, "_delta"):
            delta = np.empty((self.l_max + 1, len(self.k)))
            for l in range(self.l_max + 1):
                delta[l] = coulomb_phase_shift(l, self.k)
            self._delta = delta
        return self._delta


def project(psi: WaveFunction, basis: AtomBasis, k_values,
            l_max: int | None = None,
            wave_bank=None) -> PartialWaveAmplitudes:
    """
    Project psi(tau) onto the Coulomb continuum.

    Bound components (all eigenvectors of H_l with eps < 0) are removed
    first; the remainder is overlapped with the energy-normalized Coulomb
    waves via the grid quadrature.  wave_bank may carry a precomputed
    (waves, ok) pair from specfun.coulomb_wave_bank to share work between
    runs on the same grid.
    """
    k = np.asarray(k_values, dtype=float)
    if l_max is None:
        l_max = psi.l_max
    if l_max > psi.l_max:
        raise ValueError("requested l_max exceeds the wavefunction channels")
    grid = psi.grid
    dr_max = float(np.max(np.diff(grid.nodes)))
    if np.any(k * dr_max > np.pi):
        raise ValueError(
            f"momenta above {np.pi/dr_max:.2f} a.u. are not resolvable on "
            "this radial grid"
        )
    if wave_bank is None:
        wave_bank = coulomb_wave_bank(k, l_max, grid.nodes, grid.r_max)
    waves, ok = wave_bank

    sm = grid.sqrt_mass
    a = np.zeros((l_max + 1, len(k)), dtype=complex)
    bound_pop = 0.0
    for l in range(l_max + 1):
        c = psi.coefficients[l]
        vb = basis.hamiltonians[l].bound_vectors()
        proj = vb.T @ c
        bound_pop += float(np.sum(np.abs(proj) ** 2))
        c_free = c - vb @ proj
        a[l] = waves[l] @ (sm * c_free)
        a[l, ~ok[l]] = 0.0
    return PartialWaveAmplitudes(
        k=k.copy(), l_max=l_max, a=a, time=psi.time,
        bound_population=bound_pop, norm=psi.norm(),
        channel_ok=ok[: l_max + 1].copy(),
    )


# ---------------------------------------------------------------------------
# momentum-space density
# ---------------------------------------------------------------------------

def _amplitudes_at(amps: PartialWaveAmplitudes, k: np.ndarray) -> np.ndarray:
    """
    a_l at arbitrary momenta by linear interpolation with the fast common
    dynamical phase e^{-i k^2 tau / 2} factored out first (the remaining
    channel structure is smooth on the grid scale).  Exact at grid nodes.
    """
    kg = amps.k
    carrier = np.exp(0.5j * kg**2 * amps.time)
    out = np.empty((amps.l_max + 1,) + k.shape, dtype=complex)
    smooth = amps.a * carrier
    for l in range(amps.l_max + 1):
        re = np.interp(k, kg, smooth[l].real, left=0.0, right=0.0)
        im = np.interp(k, kg, smooth[l].imag, left=0.0, right=0.0)
        out[l] = re + 1j * im
    out *= np.exp(-0.5j * k**2 * amps.time)
    return out


def momentum_density(amps: PartialWaveAmplitudes, k, cos_theta):
    """
    dP/dk-vector at momentum magnitude k and emission angle cos_theta
    (broadcastable arrays or scalars).
    """
    k_arr, ct_arr = np.broadcast_arrays(np.asarray(k, dtype=float),
                                        np.asarray(cos_theta, dtype=float))
    scalar = k_arr.ndim == 0
    k_arr = np.atleast_1d(k_arr)
    ct_arr = np.atleast_1d(ct_arr)
    if np.any(k_arr <= 0):
        raise ValueError("momentum magnitude must be positive")
    a = _amplitudes_at(amps, k_arr)
    P = legendre_all(amps.l_max, ct_arr)
    ls = np.arange(amps.l_max + 1)
    delta = np.empty((amps.l_max + 1,) + k_arr.shape)
    for l in ls:
        delta[l] = coulomb_phase_shift(l, k_arr)
    terms = np.exp(1j * delta) * np.sqrt(2 * ls + 1)[(...,) + (None,) * k_arr.ndim] * P * a
    dens = np.abs(np.sum(terms, axis=0)) ** 2 / (4.0 * np.pi * k_arr)
    return float(dens[0]) if scalar else dens


def _density_polar(amps: PartialWaveAmplitudes, n_theta: int = 801):
    """Density table on the native (k grid) x (cos theta grid)."""
    ct = np.linspace(-1.0, 1.0, n_theta)
    ls = np.arange(amps.l_max + 1)
    pref = np.exp(1j * amps.phase_table()) * np.sqrt(2 * ls + 1)[:, None]
    # (l, nk) x (l, nct) -> coherent sum over l per (k, theta)
    S = np.tensordot(pref * amps.a, legendre_all(amps.l_max, ct),
                     axes=([0], [0]))
    dens = np.abs(S) ** 2 / (4.0 * np.pi * amps.k[:, None])
    return amps.k, ct, dens


@dataclass
class MomentumMap:
    """
    Doubly-differential density d^2P/dk_rho dk_z = 2 pi k_rho dP/dk-vector
    on a cylindrical-momentum mesh; density[i, j] corresponds to
    (k_rho[i], k_z[j]).
    """

    k_z: np.ndarray
    k_rho: np.ndarray
    density: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.density, self.k_z, axis=1),
                              self.k_rho))


def momentum_map(amps: PartialWaveAmplitudes, step: float = 0.01,
                 k_max: float | None = None) -> MomentumMap:
    """
    Evaluate the density on a (k_z, k_rho) mesh (bilinear in the native
    polar table, which resolves the ring structure by construction).
    """
    if k_max is None:
        k_max = float(amps.k[-1])
    from scipy.interpolate import RegularGridInterpolator

    kg, ct, dens = _density_polar(amps)
    interp = RegularGridInterpolator((kg, ct), dens, bounds_error=False,
                                     fill_value=0.0)
    kz = np.arange(-k_max, k_max + 0.5 * step, step)
    krho = np.arange(0.0, k_max + 0.5 * step, step)
    KZ, KR = np.meshgrid(kz, krho)
    K = np.hypot(KZ, KR)
    with np.errstate(invalid="ignore", divide="ignore"):
        CT = np.where(K > 0, KZ / np.maximum(K, 1e-300), 1.0)
    pts = np.stack([K.ravel(), np.clip(CT.ravel(), -1.0, 1.0)], axis=1)
    rho = interp(pts).reshape(K.shape)
    density = 2.0 * np.pi * KR * rho
    return MomentumMap(k_z=kz, k_rho=krho, density=density)


# ---------------------------------------------------------------------------
# ATI rings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RingSpec:
    """One ATI ring: bounding minima and the peak momentum k_i."""

    index: int
    k_lo: float
    k_hi: float
    k_peak: float

    @property
    def energy(self) -> float:
        return 0.5 * self.k_peak**2

    def __post_init__(self):
        if not (0 < self.k_lo < self.k_peak < self.k_hi):
            raise ValueError("ring bounds must satisfy k_lo < k_peak < k_hi")


def angle_integrated_spectrum(amps: PartialWaveAmplitudes) -> np.ndarray:
    """S(k) = k sum_l |a_l(k)|^2 (the dP/dk spectrum)."""
    return amps.k * np.sum(np.abs(amps.a) ** 2, axis=0)


def _moving_average(y: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return y.copy()
    kernel = np.ones(window) / window
    pad = window // 2
    ypad = np.pad(y, pad, mode="edge")
    out = np.convolve(ypad, kernel, mode="same")[pad:pad + len(y)]
    return out


def detect_rings(amps: PartialWaveAmplitudes, smooth_window: int = 5,
                 k_threshold: float = 0.05,
                 min_prominence: float = 0.02) -> list[RingSpec]:
    """
    Locate ATI rings: peaks of the smoothed angle-integrated spectrum with
    bounding minima taken from the unsmoothed spectrum.  Peaks below
    k_threshold or with fractional prominence below min_prominence over
    their bounding minima are discarded.  Returns [] when nothing is found.
    """
    k = amps.k
    S = angle_integrated_spectrum(amps)
    Ssm = _moving_average(S, smooth_window)
    cand = [i for i in range(1, len(k) - 1)
            if Ssm[i] > Ssm[i - 1] and Ssm[i] >= Ssm[i + 1]
            and k[i] > k_threshold]
    if not cand:
        return []

    def unsmoothed_min(i_lo, i_hi):
        seg = S[i_lo:i_hi + 1]
        return i_lo + int(np.argmin(seg))

    i_start = int(np.searchsorted(k, k_threshold))
    rings = []
    kept: list[tuple[int, int, int]] = []  # (min_lo, peak, min_hi)
    prev_min = unsmoothed_min(i_start, cand[0])
    for j, ip in enumerate(cand):
        i_hi_limit = cand[j + 1] if j + 1 < len(cand) else len(k) - 1
        next_min = unsmoothed_min(ip, i_hi_limit)
        prom = (Ssm[ip] - max(S[prev_min], S[next_min])) / max(Ssm[ip], 1e-300)
        if prom >= min_prominence and next_min > ip > prev_min:
            kept.append((prev_min, ip, next_min))
            prev_min = next_min
        else:
            # rejected jitter: carry the lower of the two minima forward so
            # the next accepted ring is bounded by the true valley
            prev_min = prev_min if S[prev_min] <= S[next_min] else next_min
    for idx, (ilo, ip, ihi) in enumerate(kept, start=1):
        rings.append(RingSpec(index=idx, k_lo=float(k[ilo]),
                              k_hi=float(k[ihi]), k_peak=float(k[ip])))
    return rings


def ring_partial_probability(amps: PartialWaveAmplitudes,
                             ring: RingSpec) -> np.ndarray:
    """p_l = int_ring k |a_l(k)|^2 dk for every l (trapezoidal)."""
    if ring.k_lo < amps.k[0] - 1e-12 or ring.k_hi > amps.k[-1] + 1e-12:
        raise ValueError("ring bounds outside the momentum grid")
    sel = (amps.k >= ring.k_lo - 1e-12) & (amps.k <= ring.k_hi + 1e-12)
    ksel = amps.k[sel]
    integrand = np.abs(amps.a[:, sel]) ** 2 * ksel
    return np.trapezoid(integrand, ksel, axis=1)


# ---------------------------------------------------------------------------
# angular cuts and the single-Legendre fit
# ---------------------------------------------------------------------------

@dataclass
class AngularCut:
    """d^2P/dk d(cos theta) at fixed k with its best [P_l0]^2 fit."""

    k: float
    cos_theta: np.ndarray
    density: np.ndarray
    best_l0: int
    fit_amplitude: float
    fit: np.ndarray
    residuals: np.ndarray


def angular_cut(amps: PartialWaveAmplitudes, k: float,
                n_theta: int = 401) -> AngularCut:
    """
    Angular distribution 2 pi k^2 dP/dk-vector at fixed k (k must lie on
    the momentum grid) and the l0 minimizing the least-squares distance to
    A [P_l0(cos theta)]^2 with a single free non-negative amplitude.
    """
    idx = int(np.argmin(np.abs(amps.k - k)))
    dk = amps.k[1] - amps.k[0]
    if abs(amps.k[idx] - k) > 0.45 * dk:
        raise ValueError(f"k={k} is not on the momentum grid")
    k_exact = float(amps.k[idx])
    ct = np.linspace(-1.0, 1.0, n_theta)
    dens = 2.0 * np.pi * k_exact**2 * momentum_density(amps, k_exact, ct)
    P = legendre_all(amps.l_max, ct)
    P2 = P**2
    # least squares  dens ~ A * P_l^2  per candidate l
    num = P2 @ dens
    den = np.sum(P2 * P2, axis=1)
    A = np.maximum(num / den, 0.0)
    residuals = np.sum((dens[None, :] - A[:, None] * P2) ** 2, axis=1)
    best = int(np.argmin(residuals))
    return AngularCut(k=k_exact, cos_theta=ct, density=dens, best_l0=best,
                      fit_amplitude=float(A[best]), fit=A[best] * P2[best],
                      residuals=residuals)
