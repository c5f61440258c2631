"""Potential-energy terms: shutter voltage, induced-charge walls, Coulomb coupling.

All functions broadcast over numpy arrays of coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError

MAX_DETUNING = 0.1


@dataclass(frozen=True)
class PulseSchedule:
    """Tube-2 voltage: ``v0`` on the closed interval ``[t1, t2]``, zero otherwise.

    The packet enters the tubes at ``t0`` and leaves at ``t3``.
    """

    t0: float
    t1: float
    t2: float
    t3: float
    v0: float

    def __post_init__(self):
        times = (self.t0, self.t1, self.t2, self.t3, self.v0)
        if not all(math.isfinite(v) for v in times):
            raise ConfigurationError(f"schedule values must be finite: {times}")
        if not (self.t0 < self.t1 < self.t2 < self.t3):
            raise ConfigurationError(
                f"schedule ordering t0 < t1 < t2 < t3 violated: "
                f"({self.t0}, {self.t1}, {self.t2}, {self.t3})"
            )

    @property
    def pulse_duration(self) -> float:
        return self.t2 - self.t1

    def integral(self, t=None):
        """Closed-form integral of the voltage from before ``t1`` up to ``t`` (default: all)."""
        if t is None:
            return self.v0 * (self.t2 - self.t1)
        elapsed = np.clip(np.asarray(t, dtype=float) - self.t1, 0.0, self.t2 - self.t1)
        out = self.v0 * elapsed
        return float(out) if np.ndim(out) == 0 else out

    def with_voltage(self, v0: float) -> PulseSchedule:
        return PulseSchedule(self.t0, self.t1, self.t2, self.t3, v0)


@dataclass(frozen=True)
class ChargeConfig:
    """Charges and masses of the moving particle and the induced image charge.

    ``q_induced`` must equal ``-q`` unless ``detuned`` is set, in which case
    ``q_induced = -q (1 - eps)`` with ``|eps| <= 0.1``.
    """

    q: float = 1.0
    q_induced: float = -1.0
    m: float = 1.0
    m_induced: float = 1.0
    softening: float = 1.0
    coulomb_exponent: int = 1
    detuned: bool = False

    def __post_init__(self):
        if not (self.m > 0 and self.m_induced > 0):
            raise ConfigurationError(f"masses must be positive: m={self.m}, m_induced={self.m_induced}")
        if not self.softening > 0:
            raise ConfigurationError(f"softening must be positive, got {self.softening}")
        if self.coulomb_exponent not in (1, 2):
            raise ConfigurationError(f"coulomb_exponent must be 1 or 2, got {self.coulomb_exponent!r}")
        if self.detuned:
            if abs(self.detuning) > MAX_DETUNING * (1 + 1e-12):
                raise ConfigurationError(
                    f"detuning {self.detuning} exceeds {MAX_DETUNING} (q={self.q}, q_induced={self.q_induced})"
                )
        elif self.q_induced != -self.q:
            raise ConfigurationError(
                f"q_induced={self.q_induced} must equal -q={-self.q} unless the config is flagged detuned"
            )

    @classmethod
    def with_detuning(cls, eps: float, q: float = 1.0, **kwargs) -> ChargeConfig:
        return cls(q=q, q_induced=-q * (1.0 - eps), detuned=True, **kwargs)

    @property
    def detuning(self) -> float:
        """``eps`` such that ``q_induced = -q (1 - eps)``."""
        if self.q == 0:
            return 0.0 if self.q_induced == 0 else math.inf
        return 1.0 + self.q_induced / self.q

    @property
    def charge_sum(self) -> float:
        """``q + q_induced``: the net charge coupling to the tube voltage."""
        return self.q + self.q_induced


@dataclass(frozen=True)
class ConfinementSpec:
    wall_center_low: float
    wall_center_high: float
    wall_height: float
    wall_steepness: float

    def __post_init__(self):
        if not self.wall_center_low < self.wall_center_high:
            raise ConfigurationError(
                f"wall_center_low={self.wall_center_low} must be below wall_center_high={self.wall_center_high}"
            )
        if not self.wall_height > 0:
            raise ConfigurationError(f"wall_height must be positive, got {self.wall_height}")
        if not self.wall_steepness > 0:
            raise ConfigurationError(f"wall_steepness must be positive, got {self.wall_steepness}")

    @property
    def separation(self) -> float:
        return self.wall_center_high - self.wall_center_low

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.wall_center_low + self.wall_center_high)


def shutter_voltage(t, s: PulseSchedule):
    t_arr = np.asarray(t, dtype=float)
    out = np.where((t_arr >= s.t1) & (t_arr <= s.t2), s.v0, 0.0)
    return float(out) if out.ndim == 0 else out


def confinement(y, c: ConfinementSpec):
    """Two smooth sigmoid walls; near zero between them, ``wall_height`` outside."""
    y = np.asarray(y, dtype=float)
    low = expit((c.wall_center_low - y) / c.wall_steepness)
    high = expit((y - c.wall_center_high) / c.wall_steepness)
    out = c.wall_height * (low + high)
    return float(out) if out.ndim == 0 else out


def soft_coulomb(x, y, c: ChargeConfig):
    """``q q' / ((x-y)^2 + a^2)^(p/2)`` with ``p = c.coulomb_exponent``."""
    r2 = (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2 + c.softening**2
    denom = np.sqrt(r2) if c.coulomb_exponent == 1 else r2
    out = (c.q * c.q_induced) / denom
    return float(out) if np.ndim(out) == 0 else out


def _check_branch(branch) -> None:
    if branch not in (1, 2):
        raise ConfigurationError(f"branch must be 1 or 2, got {branch!r}")


def branch_potential_single(x, t, branch, s: PulseSchedule, c: ChargeConfig):
    """Tube 1 is grounded; tube 2 adds the uniform ``q U(t)``."""
    _check_branch(branch)
    value = 0.0 if branch == 1 else c.q * shutter_voltage(t, s)
    if np.ndim(x) == 0:
        return value
    return np.full(np.shape(x), value)


def external_pair_term(t, branch, s: PulseSchedule, c: ChargeConfig, external_on: bool) -> float:
    """Uniform ``(q + q') U(t)`` on branch 2 with the charges summed first."""
    _check_branch(branch)
    if not external_on or branch == 1:
        return 0.0
    return c.charge_sum * shutter_voltage(t, s)


def pair_static_potential(x, y, c: ChargeConfig, conf: ConfinementSpec):
    """The voltage-independent part: walls on ``y`` plus the Coulomb coupling."""
    return confinement(y, conf) + soft_coulomb(x, y, c)


def branch_potential_pair(x, y, t, branch, s: PulseSchedule, c: ChargeConfig, conf: ConfinementSpec,
                          external_on: bool):
    return pair_static_potential(x, y, c, conf) + external_pair_term(t, branch, s, c, external_on)
