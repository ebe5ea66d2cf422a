"""
Split-operator time evolution of the partial-wave wavefunction.

The state is stored as metric-scaled samples c~_{l,j} = sqrt(M_j) u_l(r_j)
(complex, shape (l_max+1, n)), so the norm is the plain sum of |c~|^2 and
every factor of the propagator is exactly unitary:

  - the field-free half/full steps act per l through the stored
    eigendecomposition of H_l,
  - the dipole step exp(-i z F dt) couples adjacent l at fixed radius
    through the tridiagonal cos(theta) matrix, diagonalized once; the
    field enters only as the scalar angle dt * F * r_j.

Length gauge throughout, m = 0.
"""

from __future__ import annotations

import hashlib
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .grid import RadialGrid, RadialHamiltonian, build_grid, build_hamiltonians
from .pulse import LaserPulse

__all__ = [
    "AtomBasis",
    "WaveFunction",
    "DipoleCoupling",
    "PropagationResult",
    "PropagationError",
    "ground_state",
    "step",
    "propagate",
    "propagate_batch",
    "save_checkpoint",
    "load_checkpoint",
]

TOP_CHANNEL_LIMIT = 1e-8
NORM_DRIFT_LIMIT = 1e-4


class PropagationError(RuntimeError):
    """Signals inadequate numerical parameters (grid, dt, or l_max)."""


@dataclass(frozen=True)
class DipoleCoupling:
    """
    Angular factors of z = r cos(theta) in the Legendre basis:
    c_l = (l+1)/sqrt((2l+1)(2l+3)) couples l <-> l+1, and the radius
    enters diagonally. Q/angles hold the eigendecomposition of the
    symmetric tridiagonal coupling matrix.
    """

    coefficients: np.ndarray
    radii: np.ndarray
    angles: np.ndarray
    Q: np.ndarray


def dipole_coupling(grid: RadialGrid, l_max: int) -> DipoleCoupling:
    from scipy.linalg import eigh_tridiagonal

    ls = np.arange(l_max)
    c = (ls + 1) / np.sqrt((2 * ls + 1) * (2 * ls + 3))
    lam, Q = eigh_tridiagonal(np.zeros(l_max + 1), c)
    return DipoleCoupling(coefficients=c, radii=grid.nodes.copy(),
                          angles=lam, Q=Q)


@dataclass
class AtomBasis:
    """Grid plus per-l Hamiltonians and the dipole coupling."""

    grid: RadialGrid
    hamiltonians: list[RadialHamiltonian]
    dipole: DipoleCoupling

    @property
    def l_max(self) -> int:
        return len(self.hamiltonians) - 1

    @classmethod
    def build(cls, n: int = 800, r_max: float = 600.0, map_param: float = 0.4,
              l_max: int = 60, cache_dir=None) -> "AtomBasis":
        grid = build_grid(n, r_max, map_param)
        hams = build_hamiltonians(grid, l_max, cache_dir=cache_dir)
        return cls(grid=grid, hamiltonians=hams,
                   dipole=dipole_coupling(grid, l_max))


@dataclass
class WaveFunction:
    """
    Partial-wave wavefunction at one instant.

    coefficients are the quadrature-weighted amplitudes
    c~_{l,j} = sqrt(M_j) u_l(r_j), shape (l_max+1, n).
    """

    grid: RadialGrid
    coefficients: np.ndarray
    time: float = 0.0

    @property
    def l_max(self) -> int:
        return self.coefficients.shape[0] - 1

    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def channel_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.coefficients) ** 2, axis=1)

    def radial_values(self, l: int) -> np.ndarray:
        """u_l(r_j), the unscaled radial samples of channel l."""
        return self.coefficients[l] / self.grid.sqrt_mass

    def expectation_r(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2 * self.grid.nodes))

    def expectation_z(self) -> float:
        c = self.coefficients
        l_max = self.l_max
        ls = np.arange(l_max)
        ang = (ls + 1) / np.sqrt((2 * ls + 1) * (2 * ls + 3))
        cross = np.sum(np.conj(c[:-1]) * c[1:] * self.grid.nodes, axis=1)
        return float(2.0 * np.real(np.sum(ang * cross)))

    def copy(self) -> "WaveFunction":
        return WaveFunction(grid=self.grid,
                            coefficients=self.coefficients.copy(),
                            time=self.time)


def ground_state(basis: AtomBasis) -> WaveFunction:
    """
    Hydrogen 1s on the grid: lowest l=0 eigenvector, unit norm, phase fixed
    so the amplitude at the innermost node is real and positive.
    """
    ham0 = basis.hamiltonians[0]
    v = ham0.eigenvectors[:, 0].copy()
    if v[0] < 0:
        v = -v
    c = np.zeros((basis.l_max + 1, basis.grid.n), dtype=complex)
    c[0] = v
    return WaveFunction(grid=basis.grid, coefficients=c, time=0.0)


# ---------------------------------------------------------------------------
# elementary factors
# ---------------------------------------------------------------------------

def _apply_h0(state: np.ndarray, hams, dt: float, phases=None):
    """state[l] <- V_l exp(-i eps dt) V_l^T state[l]; state is (L+1, n, B)."""
    for l, ham in enumerate(hams):
        V = ham.eigenvectors
        ph = phases[l] if phases is not None else np.exp(-1j * dt * ham.eigenvalues)
        block = state[l]                       # (n, B) complex, contiguous
        y = V.T @ block.view(np.float64)       # (n, 2B) real
        yc = y.view(np.complex128)
        yc *= ph[:, None]
        state[l] = (V @ y).view(np.complex128)
    return state


def _apply_dipole(state: np.ndarray, dip: DipoleCoupling, F: float, dt: float):
    """state <- exp(-i dt F z) state via the l-coupling eigenbasis."""
    state = np.ascontiguousarray(state)
    L1, n, B = state.shape
    theta = dt * F
    phase = np.exp(-1j * theta * np.outer(dip.angles, dip.radii))  # (L+1, n)
    flat = state.reshape(L1, n * B).view(np.float64)               # (L+1, 2nB)
    y = dip.Q.T @ flat
    yc = y.view(np.complex128).reshape(L1, n, B)
    yc *= phase[:, :, None]
    out = dip.Q @ y
    return out.view(np.complex128).reshape(L1, n, B)


def step(psi: WaveFunction, basis: AtomBasis, pulse: LaserPulse,
         t: float, dt: float) -> WaveFunction:
    """
    One Strang step: exp(-i H0 dt/2) exp(-i z F(t+dt/2) dt) exp(-i H0 dt/2).

    dt may be negative (exact inverse of the forward step at the same
    midpoint), which is what time-reversal tests exercise.
    """
    state = psi.coefficients[:, :, None].copy()
    _apply_h0(state, basis.hamiltonians, 0.5 * dt)
    F = pulse.field(t + 0.5 * dt)
    state = _apply_dipole(state, basis.dipole, F, dt)
    _apply_h0(state, basis.hamiltonians, 0.5 * dt)
    return WaveFunction(grid=psi.grid, coefficients=state[:, :, 0],
                        time=psi.time + dt)


# ---------------------------------------------------------------------------
# full propagation
# ---------------------------------------------------------------------------

@dataclass
class PropagationResult:
    psi: WaveFunction
    times: np.ndarray
    norms: np.ndarray
    z_mean: np.ndarray
    wall_fraction: np.ndarray
    top_channel_max: float
    wall_time: float = 0.0


def _mask_profile(grid: RadialGrid) -> np.ndarray:
    """cos^(1/8) absorber over the outer 10% of the box."""
    r0 = 0.9 * grid.r_max
    s = np.clip((grid.nodes - r0) / (grid.r_max - r0), 0.0, 1.0)
    return np.cos(0.5 * np.pi * s) ** 0.125


def propagate_batch(psi0s: list[WaveFunction], basis: AtomBasis,
                    pulses: list[LaserPulse], dt: float,
                    mask: bool = False,
                    record_every: int = 1) -> list[PropagationResult]:
    """
    Propagate several initial states over [0, tau] in lockstep.

    All pulses must share tau; the runs share every field-free transform,
    which is where nearly all the time goes, so batching paper runs that
    differ only in F0 is essentially free.  dt is reduced to divide tau
    into an integer number of steps.
    """
    if len(psi0s) != len(pulses):
        raise ValueError("one initial state per pulse required")
    tau = pulses[0].tau
    if any(abs(p.tau - tau) > 1e-12 for p in pulses):
        raise ValueError("batched pulses must share tau")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, int(np.ceil(tau / dt - 1e-12)))
    dt = tau / n_steps

    B = len(psi0s)
    L1 = basis.l_max + 1
    n = basis.grid.n
    state = np.empty((L1, n, B), dtype=complex)
    for b, psi in enumerate(psi0s):
        if psi.coefficients.shape != (L1, n):
            raise ValueError("initial state does not match the basis")
        state[:, :, b] = psi.coefficients

    hams = basis.hamiltonians
    phases_full = [np.exp(-1j * dt * h.eigenvalues) for h in hams]
    phases_half = [np.exp(-0.5j * dt * h.eigenvalues) for h in hams]
    t_mid = (np.arange(n_steps) + 0.5) * dt
    fields = np.stack([p.field(t_mid) for p in pulses], axis=1)
    mask_profile = _mask_profile(basis.grid) if mask else None
    wall_sel = basis.grid.nodes > 0.9 * basis.grid.r_max

    n_rec = n_steps // record_every + 1
    times = np.empty(n_rec)
    norms = np.empty((n_rec, B))
    z_mean = np.empty((n_rec, B))
    wall = np.empty((n_rec, B))
    ls = np.arange(basis.l_max)
    ang = (ls + 1) / np.sqrt((2 * ls + 1) * (2 * ls + 3))

    def record(i_rec, t):
        times[i_rec] = t
        norms[i_rec] = np.sum(np.abs(state) ** 2, axis=(0, 1))
        cross = np.einsum("ljb,ljb,j->lb", np.conj(state[:-1]), state[1:],
                          basis.grid.nodes)
        z_mean[i_rec] = 2.0 * np.real(ang @ cross)
        wall[i_rec] = np.sum(np.abs(state[:, wall_sel, :]) ** 2, axis=(0, 1))

    t_start = _time.perf_counter()
    record(0, 0.0)
    top_max = 0.0
    i_rec = 1
    _apply_h0(state, hams, 0.5 * dt, phases_half)
    for k in range(n_steps):
        for b in range(B):
            sub = state[:, :, b:b + 1]
            state[:, :, b:b + 1] = _apply_dipole(sub, basis.dipole,
                                                 fields[k, b], dt)
        if k < n_steps - 1:
            _apply_h0(state, hams, dt, phases_full)
        else:
            _apply_h0(state, hams, 0.5 * dt, phases_half)
        if mask_profile is not None:
            state *= mask_profile[None, :, None]

        top = float(np.sum(np.abs(state[-2:]) ** 2))
        top_max = max(top_max, top)
        if top > TOP_CHANNEL_LIMIT:
            raise PropagationError(
                f"population {top:.2e} in the top two l channels at "
                f"t={dt*(k+1):.1f}; increase l_max"
            )
        if (k + 1) % record_every == 0:
            record(i_rec, dt * (k + 1))
            if not mask:
                drift = np.max(np.abs(norms[i_rec] - norms[0]))
                if drift > NORM_DRIFT_LIMIT:
                    raise PropagationError(
                        f"norm drift {drift:.2e} at t={dt*(k+1):.1f}; "
                        "grid or dt inadequate"
                    )
            i_rec += 1
    wall_time = _time.perf_counter() - t_start

    results = []
    for b in range(B):
        psi = WaveFunction(grid=basis.grid,
                           coefficients=state[:, :, b].copy(), time=tau)
        results.append(PropagationResult(
            psi=psi, times=times[:i_rec], norms=norms[:i_rec, b].copy(),
            z_mean=z_mean[:i_rec, b].copy(),
            wall_fraction=wall[:i_rec, b].copy(),
            top_channel_max=top_max, wall_time=wall_time,
        ))
    return results


def propagate(psi0: WaveFunction, basis: AtomBasis, pulse: LaserPulse,
              dt: float, mask: bool = False,
              record_every: int = 1) -> PropagationResult:
    """Propagate one state from t=0 to t=tau; see propagate_batch."""
    return propagate_batch([psi0], basis, [pulse], dt, mask=mask,
                           record_every=record_every)[0]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(psi: WaveFunction, path) -> None:
    """Binary dump of the state plus grid signature for restart/analysis."""
    np.savez_compressed(
        path,
        coefficients=psi.coefficients,
        time=psi.time,
        n=psi.grid.n,
        r_max=psi.grid.r_max,
        map_param=psi.grid.map_param,
        grid_hash=psi.grid.content_hash(),
        format_version=1,
    )


def load_checkpoint(path, grid: RadialGrid | None = None) -> WaveFunction:
    """
    Load a checkpoint; the grid is rebuilt from the stored signature unless
    one is supplied, in which case its hash must match.
    """
    with np.load(path, allow_pickle=False) as data:
        if int(data["format_version"]) != 1:
            raise ValueError("unsupported checkpoint format")
        if grid is None:
            grid = build_grid(int(data["n"]), float(data["r_max"]),
                              float(data["map_param"]))
        if grid.content_hash() != str(data["grid_hash"]):
            raise ValueError("checkpoint grid does not match the supplied grid")
        return WaveFunction(grid=grid,
                            coefficients=np.array(data["coefficients"]),
                            time=float(data["time"]))
