"""
strongfield: single ionization of hydrogen by few-cycle laser pulses.

Quantum side: a generalized-pseudospectral TDSE solver (mapped
Gauss-Lobatto radial grid, split-operator stepping, length gauge) with
projection of the final wavefunction onto energy-normalized Coulomb
waves, giving two-dimensional photoelectron momentum distributions,
ring-resolved partial-wave probabilities, and single-Legendre angular
fits.  Classical side: a trajectory Monte Carlo with quasistatic
tunneling initial conditions (CTMC-T) whose asymptotics come from the
Kepler invariants.  The `strongfield` CLI regenerates the data behind
each paper-style figure.
"""

__version__ = "0.1.0"

from .analysis import (
    AngularCut,
    MomentumMap,
    PartialWaveAmplitudes,
    RingSpec,
    angle_integrated_spectrum,
    angular_cut,
    detect_rings,
    momentum_density,
    momentum_map,
    project,
    ring_partial_probability,
)
from .config import PRESETS, ConfigError, RunConfig, parse_config, \
    preset_config, write_config
from .ctmc import (
    PericenterSummary,
    TrajectoryEnsemble,
    TrajectoryRecord,
    TunnelEvent,
    TunnelEvents,
    barrier_exit,
    integrate,
    integrate_events,
    l_distribution,
    pericenter_check,
    sample_events,
    tunneling_rate,
)
from .grid import RadialGrid, RadialHamiltonian, build_grid, build_hamiltonian
from .propagator import (
    AtomBasis,
    DipoleCoupling,
    PropagationError,
    PropagationResult,
    WaveFunction,
    ground_state,
    load_checkpoint,
    propagate,
    propagate_batch,
    save_checkpoint,
    step,
)
from .pulse import IONIZATION_POTENTIAL, LaserPulse
from .specfun import (
    CoulombRadialWave,
    PhaseShiftTable,
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
