"""
Classical-trajectory Monte Carlo with tunneling (CTMC-T).

Ionization events are sampled from the quasistatic hydrogen rate
w(F) = (4/|F|) exp(-2/(3|F|)); each event releases the electron at the
outer root of the static barrier -1/|z| - |z| |F| = -1/2 on the downfield
side, with zero longitudinal velocity and a Gaussian transverse velocity
spread exp(-v_perp^2 / |F|).  Trajectories then follow the full laser plus
Coulomb dynamics to the end of the pulse; the asymptotic momentum is read
off the field-free Kepler invariants (Runge-Lenz vector) at t = tau, with
no further time integration.

The trajectory integrator is an adaptive Dormand-Prince 5(4) compiled with
numba and parallelized over trajectories; every trajectory's arithmetic is
self-contained, so results are bit-reproducible for a given seed regardless
of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .pulse import IONIZATION_POTENTIAL, LaserPulse

__all__ = [
    "TunnelEvent",
    "TunnelEvents",
    "TrajectoryRecord",
    "TrajectoryEnsemble",
    "PericenterSummary",
    "tunneling_rate",
    "barrier_exit",
    "sample_events",
    "integrate",
    "integrate_events",
    "l_distribution",
    "pericenter_check",
]

KAPPA = np.sqrt(2.0 * IONIZATION_POTENTIAL)  # = 1 for hydrogen


# ---------------------------------------------------------------------------
# event sampling
# ---------------------------------------------------------------------------

def tunneling_rate(F):
    """Quasistatic hydrogen 1s rate w(F) = (4/|F|) exp(-2/(3|F|))."""
    F = np.abs(np.asarray(F, dtype=float))
    out = np.zeros_like(F)
    nz = F > 0
    out[nz] = (4.0 / F[nz]) * np.exp(-2.0 / (3.0 * F[nz]))
    return float(out) if out.ndim == 0 else out


def barrier_exit(F: float) -> float:
    """
    Tunnel-exit distance |z| for field strength F: the outermost real root
    of |F| z^2 - z/2 + 1 = 0 (total energy -1/2 on the downfield slope of
    -1/|z| - |z||F|); above the barrier (|F| > 1/16) the root disappears
    and the exit collapses to I_p/|F| = 1/(2|F|).
    """
    Fa = abs(F)
    if Fa <= 0:
        raise ValueError("barrier_exit needs a nonzero field")
    disc = 0.0625 - Fa  # (1/4)^2 - 4 F * 1, scaled by 1/4
    if disc >= 0.0:
        return float((0.25 + np.sqrt(disc)) / Fa)
    return float(0.5 / Fa)


@dataclass(frozen=True)
class TunnelEvent:
    """One ionization event: release time, exit point, transverse speed."""

    t_release: float
    z_exit: float
    v_perp: float
    weight: float


@dataclass
class TunnelEvents:
    """Ensemble of ionization events (arrays share one index)."""

    t_release: np.ndarray
    z_exit: np.ndarray
    v_perp: np.ndarray
    weight: np.ndarray

    def __len__(self) -> int:
        return len(self.t_release)

    def __getitem__(self, i: int) -> TunnelEvent:
        return TunnelEvent(float(self.t_release[i]), float(self.z_exit[i]),
                           float(self.v_perp[i]), float(self.weight[i]))


def sample_events(pulse: LaserPulse, n_events: int, seed: int) -> TunnelEvents:
    """
    Draw n_events release times proportional to w(F(t)) by inverse-CDF
    sampling (uniform weights afterwards), with the exit point from the
    quasistatic barrier and a transverse speed whose two-component Gaussian
    density is exp(-kappa v_perp^2 / |F|).  Deterministic for a given seed.
    """
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    tgrid = np.linspace(0.0, pulse.tau, 200_001)
    rate = tunneling_rate(pulse.field(tgrid))
    total = np.trapezoid(rate, tgrid)
    if not np.isfinite(total) or total <= 1e-280:
        raise ValueError(
            f"tunneling rate underflows at peak field F0={pulse.F0}; "
            "no events can be sampled"
        )
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1])
                                           * np.diff(tgrid))])
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    t_rel = np.interp(rng.random(n_events), cdf, tgrid)
    F = pulse.field(t_rel)
    Fa = np.maximum(np.abs(F), 1e-12)
    disc = 0.0625 - Fa
    exit_dist = np.where(disc >= 0.0,
                         (0.25 + np.sqrt(np.maximum(disc, 0.0))) / Fa,
                         0.5 / Fa)
    z_exit = -np.sign(F) * exit_dist
    sigma = np.sqrt(Fa / (2.0 * KAPPA))
    v_perp = rng.rayleigh(scale=sigma)
    weight = np.full(n_events, 1.0 / n_events)
    return TunnelEvents(t_release=t_rel, z_exit=z_exit, v_perp=v_perp,
                        weight=weight)


# ---------------------------------------------------------------------------
# trajectory integration (numba kernel)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _field_nb(t, F0, omega, tau, phi):
    if t <= 0.0 or t >= tau:
        return 0.0
    s = np.sin(np.pi * t / tau)
    return F0 * s * s * np.cos(omega * t + phi)


@njit(cache=True, inline="always")
def _rhs(t, y, F0, omega, tau, phi, coulomb):
    x, z, vx, vz = y[0], y[1], y[2], y[3]
    out = np.empty(4)
    out[0] = vx
    out[1] = vz
    ax = 0.0
    az = -_field_nb(t, F0, omega, tau, phi)
    if coulomb:
        r2 = x * x + z * z
        r = np.sqrt(r2)
        inv_r3 = 1.0 / (r2 * r)
        ax -= x * inv_r3
        az -= z * inv_r3
    out[2] = ax
    out[3] = az
    return out


@njit(cache=True)
def _integrate_dp54(y0, t0, t1, F0, omega, tau, phi, coulomb, rtol, atol):
    """
    Adaptive Dormand-Prince 5(4) from t0 to t1.

    Returns (y, min_r_refined, flag, n_steps): flag 0 = ok, 1 = step
    underflow near the nucleus, 2 = step budget exceeded.  The minimum
    nuclear distance is refined with a parabola through the three samples
    around the smallest one.
    """
    y = y0.copy()
    t = t0
    span = t1 - t0
    if span <= 0.0:
        r0 = np.sqrt(y[0] * y[0] + y[1] * y[1])
        return y, r0, 0, 0
    h = min(1e-2, span)
    k1 = _rhs(t, y, F0, omega, tau, phi, coulomb)
    # min-r bookkeeping: squared distances before/at/after the minimum
    r2_min = y[0] * y[0] + y[1] * y[1]
    r2_before = r2_min
    r2_after = r2_min
    h_before = 0.0
    h_after = 0.0
    have_before = False
    pending_after = False
    r2_prev = r2_min
    h_prev = h
    flag = 0
    n_steps = 0
    max_steps = 5_000_000
    while t < t1:
        if h > t1 - t:
            h = t1 - t
        k2 = _rhs(t + 0.2 * h, y + h * 0.2 * k1, F0, omega, tau, phi, coulomb)
        k3 = _rhs(t + 0.3 * h, y + h * (0.075 * k1 + 0.225 * k2),
                  F0, omega, tau, phi, coulomb)
        k4 = _rhs(t + 0.8 * h, y + h * (0.9777777777777777 * k1
                  - 3.7333333333333334 * k2 + 3.5555555555555554 * k3),
                  F0, omega, tau, phi, coulomb)
        k5 = _rhs(t + 8.0 / 9.0 * h, y + h * (2.9525986892242035 * k1
                  - 11.595793324188385 * k2 + 9.822892851699436 * k3
                  - 0.2908093278463649 * k4), F0, omega, tau, phi, coulomb)
        k6 = _rhs(t + h, y + h * (2.8462752525252526 * k1
                  - 10.757575757575758 * k2 + 8.906422717743473 * k3
                  + 0.2784090909090909 * k4 - 0.2735313036020583 * k5),
                  F0, omega, tau, phi, coulomb)
        y_new = y + h * (0.09114583333333333 * k1 + 0.44923629829290207 * k3
                         + 0.6510416666666666 * k4 - 0.322376179245283 * k5
                         + 0.13095238095238096 * k6)
        k7 = _rhs(t + h, y_new, F0, omega, tau, phi, coulomb)
        err_vec = h * (0.0012326388888888888 * k1 - 0.0042527702905061394 * k3
                       + 0.03697916666666667 * k4 - 0.05086379716981132 * k5
                       + 0.0419047619047619 * k6 - 0.025 * k7)
        err = 0.0
        for i in range(4):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            e = err_vec[i] / sc
            err += e * e
        err = np.sqrt(err / 4.0)
        if err <= 1.0:
            t += h
            y = y_new
            k1 = k7
            n_steps += 1
            r2 = y[0] * y[0] + y[1] * y[1]
            if pending_after:
                r2_after = r2
                h_after = h
                pending_after = False
            if r2 < r2_min:
                r2_before = r2_prev
                h_before = h_prev
                have_before = True
                r2_min = r2
                pending_after = True
            r2_prev = r2
            h_prev = h
        fac = 0.9 * err ** (-0.2) if err > 1e-12 else 5.0
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if h < 1e-13 * span:
            flag = 1
            break
        if n_steps >= max_steps:
            flag = 2
            break
    # parabola through (-h_before, r2_before), (0, r2_min), (h_after, r2_after)
    min_r = np.sqrt(r2_min)
    if have_before and not pending_after and h_after > 0.0 and h_before > 0.0:
        d1 = (r2_before - r2_min) / h_before
        d2 = (r2_after - r2_min) / h_after
        aa = (d1 + d2) / (h_before + h_after)
        bb = (d2 * h_before - d1 * h_after) / (h_before + h_after)
        if aa > 0.0:
            r2_vertex = r2_min - 0.25 * bb * bb / aa
            if 0.0 < r2_vertex < r2_min:
                min_r = np.sqrt(r2_vertex)
    return y, min_r, flag, n_steps


@njit(cache=True, parallel=True)
def _integrate_batch(t_rel, z_exit, v_perp, F0, omega, tau, phi,
                     coulomb, rtol, atol, t_end):
    n = len(t_rel)
    finals = np.empty((n, 4))
    min_r = np.empty(n)
    flags = np.zeros(n, dtype=np.int8)
    for i in prange(n):
        y0 = np.empty(4)
        y0[0] = 0.0
        y0[1] = z_exit[i]
        y0[2] = v_perp[i]
        y0[3] = 0.0
        y, mr, fl, _ = _integrate_dp54(y0, t_rel[i], t_end, F0, omega, tau,
                                       phi, coulomb, rtol, atol)
        finals[i] = y
        min_r[i] = mr
        flags[i] = fl
    return finals, min_r, flags


# ---------------------------------------------------------------------------
# asymptotics via Kepler invariants
# ---------------------------------------------------------------------------

def _kepler_asymptotics(finals: np.ndarray):
    """
    Field-free invariants at the final phase point: energy, |L|, pericenter
    of the matching hyperbola, and the outgoing asymptotic momentum from
    the Runge-Lenz (eccentricity) vector.  Closed orbits (E <= 0) get NaN
    asymptotics.
    """
    x, z, vx, vz = finals.T
    r = np.hypot(x, z)
    E = 0.5 * (vx**2 + vz**2) - 1.0 / r
    Ly = z * vx - x * vz
    L = np.abs(Ly)
    ex = -vz * Ly - x / r
    ez = vx * Ly - z / r
    ecc = np.hypot(ex, ez)
    k = np.sqrt(np.maximum(2.0 * E, 0.0))
    open_orbit = E > 0
    kz = np.full_like(E, np.nan)
    krho = np.full_like(E, np.nan)
    r_min = np.full_like(E, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(Ly >= 0, 1.0, -1.0)
        sin_nu = np.sqrt(np.maximum(1.0 - 1.0 / ecc**2, 0.0))
        ux = (-ex / ecc**2 + sin_nu * s * ez / ecc)
        uz = (-ez / ecc**2 - sin_nu * s * ex / ecc)
        kz = np.where(open_orbit, k * uz, np.nan)
        krho = np.where(open_orbit, np.abs(k * ux), np.nan)
        r_min = np.where(open_orbit,
                         (np.sqrt(1.0 + (k * L) ** 2) - 1.0)
                         / np.maximum(k, 1e-300) ** 2,
                         np.nan)
    theta_major = np.arctan2(ex, ez)
    nu_inf = np.where(open_orbit, np.arccos(np.clip(-1.0 / ecc, -1.0, 1.0)),
                      np.nan)
    return E, L, kz, krho, r_min, ecc, theta_major, nu_inf


@dataclass(frozen=True)
class TrajectoryRecord:
    """Final state and asymptotics of one trajectory."""

    event: TunnelEvent
    position: tuple[float, float]
    velocity: tuple[float, float]
    energy: float
    angular_momentum: float
    k_z: float
    k_rho: float
    r_min: float
    min_r_seen: float
    flag: int

    @property
    def k_inf(self) -> float:
        return float(np.sqrt(max(2.0 * self.energy, 0.0)))


@dataclass
class TrajectoryEnsemble:
    """Trajectory results as parallel arrays (one row per event)."""

    events: TunnelEvents
    finals: np.ndarray
    energy: np.ndarray
    angular_momentum: np.ndarray
    k_z: np.ndarray
    k_rho: np.ndarray
    r_min: np.ndarray
    min_r_seen: np.ndarray
    flags: np.ndarray
    eccentricity: np.ndarray
    theta_major: np.ndarray
    nu_inf: np.ndarray

    def __len__(self) -> int:
        return len(self.energy)

    def __getitem__(self, i: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            event=self.events[i],
            position=(float(self.finals[i, 0]), float(self.finals[i, 1])),
            velocity=(float(self.finals[i, 2]), float(self.finals[i, 3])),
            energy=float(self.energy[i]),
            angular_momentum=float(self.angular_momentum[i]),
            k_z=float(self.k_z[i]), k_rho=float(self.k_rho[i]),
            r_min=float(self.r_min[i]),
            min_r_seen=float(self.min_r_seen[i]), flag=int(self.flags[i]),
        )

    @property
    def flagged_fraction(self) -> float:
        return float(np.mean(self.flags != 0))

    def good(self) -> np.ndarray:
        return self.flags == 0


def integrate_events(events: TunnelEvents, pulse: LaserPulse,
                     rtol: float = 1e-10, atol: float = 1e-12,
                     include_coulomb: bool = True,
                     t_end: float | None = None) -> TrajectoryEnsemble:
    """
    Integrate every event from its release time to t_end (default: tau)
    and attach the Kepler asymptotics.  Flagged trajectories (hard
    collisions, step budget) keep their final state but are excluded from
    histograms by callers.
    """
    if t_end is None:
        t_end = pulse.tau
    finals, min_r, flags = _integrate_batch(
        events.t_release, events.z_exit, events.v_perp,
        pulse.F0, pulse.omega, pulse.tau, pulse.phi,
        include_coulomb, rtol, atol, t_end,
    )
    if include_coulomb:
        E, L, kz, krho, r_min, ecc, th, nu = _kepler_asymptotics(finals)
    else:
        x, z, vx, vz = finals.T
        E = 0.5 * (vx**2 + vz**2)
        L = np.abs(z * vx - x * vz)
        kz, krho = vz.copy(), np.abs(vx)
        r_min = np.full_like(E, np.nan)
        ecc = np.full_like(E, np.nan)
        th = np.full_like(E, np.nan)
        nu = np.full_like(E, np.nan)
    return TrajectoryEnsemble(
        events=events, finals=finals, energy=E, angular_momentum=L,
        k_z=kz, k_rho=krho, r_min=r_min, min_r_seen=min_r, flags=flags,
        eccentricity=ecc, theta_major=th, nu_inf=nu,
    )


def integrate(event: TunnelEvent, pulse: LaserPulse,
              rtol: float = 1e-10, atol: float = 1e-12,
              include_coulomb: bool = True,
              t_end: float | None = None) -> TrajectoryRecord:
    """Integrate a single tunnel event; see integrate_events."""
    events = TunnelEvents(
        t_release=np.array([event.t_release]),
        z_exit=np.array([event.z_exit]),
        v_perp=np.array([event.v_perp]),
        weight=np.array([event.weight]),
    )
    return integrate_events(events, pulse, rtol=rtol, atol=atol,
                            include_coulomb=include_coulomb, t_end=t_end)[0]


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def l_distribution(records: TrajectoryEnsemble,
                   k_max: float | None = 0.25,
                   k_min: float = 0.0):
    """
    Weighted histogram of the classical angular momentum in integer bins
    [l, l+1), over unflagged E > 0 records inside the momentum window.
    Normalized to unit total; returns (l values, weights), empty when the
    selection is empty.
    """
    sel = records.good() & (records.energy > 0)
    kmag = np.sqrt(np.maximum(2.0 * records.energy, 0.0))
    if k_max is not None:
        sel &= kmag <= k_max
    sel &= kmag >= k_min
    if not np.any(sel):
        return np.array([], dtype=int), np.array([])
    L = records.angular_momentum[sel]
    w = records.events.weight[sel]
    n_bins = int(np.floor(L.max())) + 1
    hist, _ = np.histogram(L, bins=np.arange(n_bins + 1), weights=w)
    hist /= hist.sum()
    return np.arange(n_bins), hist


@dataclass(frozen=True)
class PericenterSummary:
    """Median Kepler pericenter vs the quiver amplitude."""

    median_r_min: float
    alpha: float
    ratio: float
    n_selected: int
    status: str


def pericenter_check(records: TrajectoryEnsemble, pulse: LaserPulse,
                     k_max: float = 0.25) -> PericenterSummary:
    """
    Compare the median pericenter of near-threshold (k <= k_max) open
    orbits against the quiver amplitude alpha = F0/omega^2.  An empty
    selection is reported as skipped, not an error.
    """
    alpha = pulse.quiver_amplitude
    sel = records.good() & (records.energy > 0)
    kmag = np.sqrt(np.maximum(2.0 * records.energy, 0.0))
    sel &= kmag <= k_max
    n_sel = int(np.count_nonzero(sel))
    if n_sel == 0:
        return PericenterSummary(median_r_min=np.nan, alpha=alpha,
                                 ratio=np.nan, n_selected=0, status="skipped")
    med = float(np.median(records.r_min[sel]))
    return PericenterSummary(median_r_min=med, alpha=alpha,
                             ratio=med / alpha, n_selected=n_sel, status="ok")
