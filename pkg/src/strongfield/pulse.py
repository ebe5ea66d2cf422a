"""
Few-cycle laser pulse: field, vector potential, and derived strong-field
parameters.

The field is a sin^2-envelope carrier,

    F(t) = F0 sin^2(pi t / tau) cos(omega t + phi)    for 0 <= t <= tau

and exactly zero outside the pulse window.  All quantities are in atomic
units; the ionization potential entering the Keldysh parameter is fixed to
the hydrogen ground state, I_p = 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IONIZATION_POTENTIAL = 0.5

__all__ = ["LaserPulse", "IONIZATION_POTENTIAL"]


@dataclass(frozen=True)
class LaserPulse:
    """
    Linearly polarized sin^2 pulse.

    Parameters
    ----------
    F0 : float
        Peak field amplitude (a.u.).
    omega : float
        Carrier angular frequency (a.u.).
    tau : float
        Total pulse duration (a.u.); the envelope vanishes at 0 and tau.
    phi : float, default 0.0
        Carrier-envelope phase (radians).
    """

    F0: float
    omega: float
    tau: float
    phi: float = 0.0

    def __post_init__(self):
        if self.F0 <= 0 or self.omega <= 0 or self.tau <= 0:
            raise ValueError("pulse parameters F0, omega, tau must be positive")

    # -- field and vector potential -------------------------------------

    def field(self, t):
        """F(t); exactly zero for t <= 0 and t >= tau. Scalars or arrays."""
        t = np.asarray(t, dtype=float)
        env = np.sin(np.pi * t / self.tau) ** 2
        f = self.F0 * env * np.cos(self.omega * t + self.phi)
        f = np.where((t > 0.0) & (t < self.tau), f, 0.0)
        return float(f) if f.ndim == 0 else f

    def envelope(self, t):
        """sin^2 envelope, exactly zero outside the open pulse window."""
        t = np.asarray(t, dtype=float)
        env = self.F0 * np.sin(np.pi * t / self.tau) ** 2
        env = np.where((t > 0.0) & (t < self.tau), env, 0.0)
        return float(env) if env.ndim == 0 else env

    def vector_potential(self, t):
        """
        A(t) = -int_0^t F(t') dt', evaluated in closed form.

        Writing sin^2 as (1 - cos(2 pi t/tau))/2 splits F into three pure
        cosines at omega and omega +- 2 pi/tau, each of which integrates
        to a sine; A is constant outside [0, tau].
        """
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, self.tau)
        wc = 2.0 * np.pi / self.tau
        out = 0.5 * self._cos_integral(self.omega, tc)
        out -= 0.25 * self._cos_integral(self.omega + wc, tc)
        out -= 0.25 * self._cos_integral(self.omega - wc, tc)
        out = -self.F0 * out
        return float(out) if out.ndim == 0 else out

    def _cos_integral(self, w, t):
        # int_0^t cos(w t' + phi) dt', stable as w -> 0
        if abs(w) < 1e-12:
            return t * np.cos(self.phi)
        return (np.sin(w * t + self.phi) - np.sin(self.phi)) / w

    # -- derived strong-field parameters ---------------------------------

    @property
    def ponderomotive_energy(self) -> float:
        """U_p = F0^2 / (4 omega^2)."""
        return self.F0**2 / (4.0 * self.omega**2)

    @property
    def keldysh_gamma(self) -> float:
        """gamma = sqrt(I_p / (2 U_p)) with I_p = 0.5."""
        return np.sqrt(IONIZATION_POTENTIAL / (2.0 * self.ponderomotive_energy))

    @property
    def quiver_amplitude(self) -> float:
        """alpha = F0 / omega^2."""
        return self.F0 / self.omega**2

    def keldysh_parameters(self) -> tuple[float, float, float]:
        """(U_p, gamma, alpha) in one call."""
        return (self.ponderomotive_energy, self.keldysh_gamma,
                self.quiver_amplitude)
