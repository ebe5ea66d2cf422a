"""
Special functions for the Coulomb continuum.

Everything here is self-contained numerics: Legendre polynomials and
Gauss-Lobatto rules for the radial discretization, complex log-Gamma for
the Coulomb phase shifts delta_l(k) = arg Gamma(l+1 + i*eta), and
energy-normalized regular Coulomb waves u_{k,l}(r) obtained by Numerov
integration with a power-series start.

Conventions (atomic units, hydrogen, Z = 1):
    eta = -1/k                      (attractive Coulomb)
    u_{k,l}(r) ~ sqrt(2/(pi*k)) * sin(kr + (1/k) ln(2kr) - l pi/2 + delta_l)
so that <u_k | u_k'> = delta(E - E') with E = k^2/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "legendre",
    "legendre_all",
    "gauss_lobatto",
    "lobatto_diffmat",
    "log_gamma",
    "coulomb_phase_shift",
    "phase_shift_table",
    "PhaseShiftTable",
    "CoulombRadialWave",
    "coulomb_radial_wave",
    "coulomb_wave_bank",
    "kepler_pericenter",
]


# ---------------------------------------------------------------------------
# Legendre polynomials
# ---------------------------------------------------------------------------

def legendre(l: int, x):
    """P_l(x) by upward recurrence;|x| <= 1 required, P_l(1) = 1 exactly."""
    if l < 0:
        raise ValueError("l must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("legendre: argument outside [-1, 1]")
    p0 = np.ones_like(x)
    if l == 0:
        return p0 if p0.ndim else float(p0)
    p1 = x.copy()
    for k in range(1, l):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1 if p1.ndim else float(p1)


def legendre_all(l_max: int, x):
    """All P_l(x), l = 0..l_max, stacked along a leading axis."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0):
        raise ValueError("legendre_all: argument outside [-1, 1]")
    out = np.empty((l_max + 1,) + x.shape)
    out[0] = 1.0
    if l_max >= 1:
        out[1] = x
    for k in range(1, l_max):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    return out


# ---------------------------------------------------------------------------
# Gauss-Lobatto rule and collocation derivative
# ---------------------------------------------------------------------------

def gauss_lobatto(npts: int):
    """
    Legendre-Gauss-Lobatto nodes (ascending, incl. +-1) and weights.

    Nodes are the zeros of (1 - x^2) P'_N(x), N = npts - 1, found by the
    classic Newton iteration on a Chebyshev initial guess.
    """
    if npts < 2:
        raise ValueError("need at least 2 Lobatto points")
    N = npts - 1
    x = np.cos(np.pi * np.arange(npts) / N)
    P = np.zeros((npts, npts))
    x_prev = 2.0 * np.ones_like(x)
    while np.max(np.abs(x - x_prev)) > 1e-15:
        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(1, N):
            P[:, k + 1] = ((2 * k + 1) * x * P[:, k] - k * P[:, k - 1]) / (k + 1)
        x_prev = x.copy()
        x = x_prev - (x * P[:, N] - P[:, N - 1]) / (npts * P[:, N])
    w = 2.0 / (N * npts * P[:, N] ** 2)
    idx = np.argsort(x)
    x = x[idx]
    w = w[idx]
    # pin the endpoints exactly
    x[0], x[-1] = -1.0, 1.0
    return x, w


def lobatto_diffmat(x: np.ndarray) -> np.ndarray:
    """First-derivative collocation matrix on Lobatto nodes x (ascending)."""
    npts = len(x)
    N = npts - 1
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(1, N):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    PN = p1
    with np.errstate(divide="ignore"):
        dx = x[:, None] - x[None, :]
        np.fill_diagonal(dx, 1.0)
        D = (PN[:, None] / PN[None, :]) / dx
    np.fill_diagonal(D, 0.0)
    D[0, 0] = -N * npts / 4.0
    D[-1, -1] = N * npts / 4.0
    return D


# ---------------------------------------------------------------------------
# Complex log-Gamma and Coulomb phase shifts
# ---------------------------------------------------------------------------

# Stirling series coefficients B_{2n} / (2n (2n-1))
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)


def log_gamma(z):
    """
    Principal branch of log Gamma for Re(z) > 0 (scalar or array).

    Stirling series after shifting the argument to |z| >= 12 by the
    recurrence Gamma(z+1) = z Gamma(z); accurate to ~1e-15 relative.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= 0):
        raise ValueError("log_gamma requires Re(z) > 0")
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    shift = np.zeros_like(z)
    for _ in range(12):
        small = np.abs(z) < 12.0
        if not small.any():
            break
        shift[small] += np.log(z[small])
        z[small] += 1.0
    zi = 1.0 / z
    zi2 = zi * zi
    series = np.zeros_like(z)
    term = zi
    for c in _STIRLING:
        series += c * term
        term = term * zi2
    out = (z - 0.5) * np.log(z) - z + 0.5 * np.log(2.0 * np.pi) + series - shift
    return out[0] if scalar else out


def coulomb_phase_shift(l: int, k) -> float | np.ndarray:
    """
    Coulomb phase shift delta_l(k) = arg Gamma(l+1 + i*eta), eta = -1/k.

    Continuous in k by construction (imaginary part of the principal
    log-Gamma along the line Re(z) = l+1).
    """
    if l < 0:
        raise ValueError("l must be non-negative")
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("coulomb_phase_shift: k must be positive")
    val = log_gamma(l + 1.0 - 1j / k).imag
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class PhaseShiftTable:
    """delta_l(k) on a momentum grid, shape (l_max+1, len(k_values))."""

    k_values: np.ndarray
    l_max: int
    delta: np.ndarray

    def __post_init__(self):
        if self.delta.shape != (self.l_max + 1, len(self.k_values)):
            raise ValueError("phase-shift table shape mismatch")


def phase_shift_table(k_values, l_max: int) -> PhaseShiftTable:
    """Tabulate delta_l(k) for l = 0..l_max over the given momenta."""
    k = np.asarray(k_values, dtype=float)
    if np.any(k <= 0):
        raise ValueError("phase_shift_table: momenta must be positive")
    delta = np.empty((l_max + 1, len(k)))
    for l in range(l_max + 1):
        delta[l] = coulomb_phase_shift(l, k)
    if not np.all(np.isfinite(delta)):
        raise ArithmeticError("non-finite Coulomb phase shift")
    return PhaseShiftTable(k_values=k, l_max=l_max, delta=delta)


# ---------------------------------------------------------------------------
# Regular Coulomb waves
# ---------------------------------------------------------------------------

def kepler_pericenter(k: float, L: float) -> float:
    """Closest approach (sqrt(1 + (kL)^2) - 1) / k^2 of a Kepler hyperbola."""
    return (np.sqrt(1.0 + (k * L) ** 2) - 1.0) / k**2


def _series_seed(r, ks, l, nterms=48):
    """
    Regular solution u = r^{l+1} (1 + sum_m c_m r^m) at radius r, one value
    per momentum in ks (unnormalized).  Valid for moderate r; the recursion
    c_m = (-2 c_{m-1} - k^2 c_{m-2}) / (m (m + 2l + 1)) converges quickly.
    """
    ks = np.asarray(ks, dtype=float)
    c_prev2 = np.zeros_like(ks)
    c_prev1 = np.ones_like(ks)
    tot = np.ones_like(ks)
    rm = 1.0
    for m in range(1, nterms):
        c = (-2.0 * c_prev1 - ks * ks * c_prev2) / (m * (m + 2 * l + 1))
        rm *= r
        tot = tot + c * rm
        c_prev2, c_prev1 = c_prev1, c
    return r ** (l + 1) * tot


def _numerov_batch(ks, l, r_end, h):
    """
    Numerov integration of u'' = [l(l+1)/r^2 - 2/r - k^2] u for all momenta
    in ks at once, on the uniform grid r_j = j*h.  Seeded with the exact
    power series at a start radius where the step resolves the local scale;
    below a deep centrifugal barrier the growing solution takes over and the
    arbitrary scale is removed by the later normalization.

    Returns (r, u) with u of shape (len(r), len(ks)), unnormalized.
    """
    m = int(np.ceil(r_end / h))
    r = h * np.arange(m + 1)
    lam = np.sqrt(l * (l + 1))
    j0 = max(1, int(np.ceil(lam / (6.0 * h))))
    if j0 + 2 >= m:
        raise ValueError("radial range too short for this l")
    ks = np.asarray(ks, dtype=float)
    rr = r.copy()
    rr[0] = 1.0  # dummy, never used
    Q = (l * (l + 1) / rr**2 - 2.0 / rr)[:, None] - (ks**2)[None, :]
    u = np.zeros((m + 1, len(ks)))
    u[j0] = _series_seed(r[j0], ks, l)
    u[j0 + 1] = _series_seed(r[j0 + 1], ks, l)
    h2 = h * h
    a = 1.0 - (h2 / 12.0) * Q
    b = 2.0 + (5.0 * h2 / 6.0) * Q
    for j in range(j0 + 1, m):
        u[j + 1] = (b[j] * u[j] - a[j - 1] * u[j - 1]) / a[j + 1]
        if j % 256 == 0:
            big = np.abs(u[j + 1]) > 1e200
            if big.any():
                fac = np.where(big, 1e-200, 1.0)
                u[j] *= fac
                u[j + 1] *= fac
    return r, u


def _derivative_5pt(u, h):
    """Interior 4th-order first derivative along axis 0; edges left zero."""
    du = np.zeros_like(u)
    du[2:-2] = (u[:-4] - 8.0 * u[1:-3] + 8.0 * u[3:-1] - u[4:]) / (12.0 * h)
    return du


def _turning_point(k, l):
    lam2 = l * (l + 1)
    return (np.sqrt(1.0 + k * k * lam2) - 1.0) / (k * k)


def _normalize_energy(r, u, du, k, l):
    """
    Scale one column u to the energy normalization by matching the WKB
    envelope sqrt(u^2 + (u'/p)^2) = sqrt(2/pi) / sqrt(p) at the outermost
    two extrema.  Returns the scale factor, or None when fewer than two
    extrema lie inside the asymptotic window (classically inaccessible or
    box too small for this channel).
    """
    h = r[1] - r[0]
    m1 = len(r)
    lam2 = l * (l + 1)
    rt = _turning_point(k, l)
    jmin = int(max((1.3 * rt + 5.0) / h, 0.55 * m1))
    if jmin > m1 - 20:
        return None
    s = np.sign(du[jmin:-2])
    flips = np.nonzero(s[:-1] * s[1:] < 0)[0] + jmin
    if len(flips) < 2:
        return None
    C = 0.0
    for j in flips[-2:]:
        rj = r[j]
        p2 = k * k + 2.0 / rj - lam2 / rj**2
        if p2 <= 0.0:
            return None
        p = np.sqrt(p2)
        env = np.hypot(u[j], du[j] / p)
        C += 0.5 * env * np.sqrt(p)
    if C == 0.0 or not np.isfinite(C):
        return None
    return np.sqrt(2.0 / np.pi) / C


@dataclass(frozen=True)
class CoulombRadialWave:
    """Energy-normalized regular Coulomb wave sampled on a radial grid."""

    k: float
    l: int
    r: np.ndarray
    samples: np.ndarray


def coulomb_radial_wave(k: float, l: int, grid) -> CoulombRadialWave:
    """
    Regular Coulomb wave u_{k,l} on grid.nodes, energy-normalized.

    The grid must reach the asymptotic region: r_max >= max(50/k, 2 * the
    classical turning point), otherwise the amplitude matching is not
    trustworthy and a ValueError naming the required radius is raised.
    """
    if k <= 0:
        raise ValueError("coulomb_radial_wave: k must be positive")
    if l < 0:
        raise ValueError("coulomb_radial_wave: l must be non-negative")
    r_need = max(50.0 / k, 2.0 * _turning_point(k, l))
    if grid.r_max < r_need:
        raise ValueError(
            f"grid too short for (k={k}, l={l}): r_max must be >= {r_need:.1f} a.u."
        )
    h = min(2.0 * np.pi / (20.0 * k), 0.05)
    r, u = _numerov_batch([k], l, grid.r_max, h)
    du = _derivative_5pt(u, h)
    scale = _normalize_energy(r, u[:, 0], du[:, 0], k, l)
    if scale is None:
        raise ValueError(
            f"no asymptotic oscillation inside the box for (k={k}, l={l})"
        )
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(r, u[:, 0] * scale)
    return CoulombRadialWave(k=float(k), l=int(l), r=grid.nodes.copy(),
                             samples=spline(grid.nodes))


def coulomb_wave_bank(k_values, l_max: int, nodes, r_max: float,
                      progress=None):
    """
    Energy-normalized Coulomb waves for every (k, l) with k in k_values and
    l = 0..l_max, sampled at the given radial nodes.

    Channels whose asymptotic oscillation does not fit inside r_max (deep
    centrifugal barrier at small k) carry exponentially small amplitude in
    the box and are returned as zeros, with ok[l, ik] = False.

    Returns (waves, ok): waves has shape (l_max+1, len(k_values), len(nodes)).
    """
    from scipy.interpolate import CubicSpline

    ks = np.asarray(k_values, dtype=float)
    if np.any(ks <= 0):
        raise ValueError("coulomb_wave_bank: momenta must be positive")
    nodes = np.asarray(nodes, dtype=float)
    h = min(2.0 * np.pi / (20.0 * ks.max()), 0.05)
    waves = np.zeros((l_max + 1, len(ks), len(nodes)))
    ok = np.zeros((l_max + 1, len(ks)), dtype=bool)
    for l in range(l_max + 1):
        r, u = _numerov_batch(ks, l, r_max, h)
        du = _derivative_5pt(u, h)
        scales = np.zeros(len(ks))
        for i, k in enumerate(ks):
            s = _normalize_energy(r, u[:, i], du[:, i], k, l)
            if s is not None:
                scales[i] = s
                ok[l, i] = True
        keep = np.nonzero(ok[l])[0]
        if len(keep):
            spline = CubicSpline(r, u[:, keep] * scales[keep], axis=0)
            waves[l, keep, :] = spline(nodes).T
        if progress is not None:
            progress(l, l_max)
    return waves, ok
