"""Wavepacket simulation of the electric two-tube Aharonov-Bohm experiment,
with and without the image charge induced on the tube walls."""

from .analytic import ab_phase, branch_energies, phase_factor, predicted_intensity
from .grid import (
    ComplexField,
    PacketSpec,
    SpatialGrid,
    expectation_energy,
    gaussian_packet,
    inner_product,
    make_grid,
)
from .potentials import ChargeConfig, ConfinementSpec, PulseSchedule
from .config import RunConfig, default_config, load_config
from .fringes import fringe_shift
from .propagator import EvolutionConfig, HamiltonianSpec, evolve, step
from .scenarios import SimulationReport, energy_audit, run, run_single_particle, run_two_particle, sweep_voltage

__version__ = "0.1.0"
