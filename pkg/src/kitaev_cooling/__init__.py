"""Cooling dynamics of Kitaev chains coupled to Markovian thermal baths."""

from .bath import BathSpec, relaxation_rate, spectral_density
from .errors import ModeEvolutionError, NumericalError, QuadratureError, StepSizeUnderflow
from .model import (
    ChainModel,
    LongRange,
    LowEnergyParams,
    ShortRange,
    critical_mu,
    fermi_dirac,
    grid_energies,
    low_energy_params,
    mode_energy,
    mode_grid,
    thermal_excitation_density,
)
from .ramp import (
    ModeOccupations,
    RampProtocol,
    Trajectory,
    evolve_all,
    evolve_mode_exact,
    evolve_mode_ode,
    excitation_density,
)

__version__ = "0.1.0"
