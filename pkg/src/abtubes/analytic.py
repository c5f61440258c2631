"""Closed-form phases, branch energies and two-beam intensities (hbar = 1)."""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateFringeError
from .potentials import ChargeConfig, PulseSchedule


class EnergyModel(str, Enum):
    NO_INDUCED = "no_induced"
    WITH_INDUCED = "with_induced"


@dataclass(frozen=True)
class PhaseResult:
    delta_phi: float
    phase_integral: float


@dataclass(frozen=True)
class BranchEnergies:
    e1: float
    e2: float
    model: EnergyModel


def ab_phase(s: PulseSchedule, q: float) -> PhaseResult:
    """Relative phase ``q v0 (t2 - t1)`` picked up by the tube-2 branch."""
    integral = s.integral()
    return PhaseResult(delta_phi=q * integral, phase_integral=integral)


def phase_factor(s: PulseSchedule, q: float, t: float) -> complex:
    """``exp(-i q * integral of U up to t)`` carried by the tube-2 branch."""
    return cmath.exp(-1j * q * s.integral(t))


def branch_energies(ek, ek_induced, conf_energy, coulomb_energy, u, c: ChargeConfig, model) -> BranchEnergies:
    """Energy bookkeeping of the two branches at tube voltage ``u``.

    Without the induced charge only the moving charge's kinetic energy
    enters and branch 2 gains ``q u``. With it, both branches share the
    full system energy and branch 2 gains ``(q + q') u``.
    """
    model = EnergyModel(model)
    if model is EnergyModel.NO_INDUCED:
        return BranchEnergies(ek, ek + c.q * u, model)
    e1 = ek + ek_induced + conf_energy + coulomb_energy
    return BranchEnergies(e1, e1 + c.charge_sum * u, model)


def predicted_intensity(delta_phi: float, tilt: float, x, envelope) -> np.ndarray:
    """``envelope(x) * 2 (1 + cos(tilt x - delta_phi))`` for unit-amplitude beams."""
    if tilt == 0:
        raise DegenerateFringeError("tilt must be non-zero to form fringes")
    x = np.asarray(x, dtype=float)
    return np.asarray(envelope(x), dtype=float) * 2.0 * (1.0 + np.cos(tilt * x - delta_phi))
