"""Second-order Strang split-operator propagation with spectral kinetic steps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalBlowupError, PreconditionError
from .grid import NORM_TOL, ComplexField, SpatialGrid, kinetic_multiplier

ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class HamiltonianSpec:
    """Kinetic masses (one per axis) plus a potential ``V(coords, t)``.

    ``potential`` receives the grid's broadcastable coordinate tuple and a
    time, and returns an array broadcastable to the grid shape (a scalar is
    fine for uniform potentials).
    """

    masses: tuple
    potential: Callable = field(default=lambda coords, t: 0.0)
    time_dependent: bool = False

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        if not masses or len(masses) > 2 or any(not m > 0 for m in masses):
            raise ConfigurationError(f"masses must be one or two positive numbers, got {self.masses!r}")
        object.__setattr__(self, "masses", masses)

    def potential_on(self, grid: SpatialGrid, t: float) -> np.ndarray:
        v = np.asarray(self.potential(grid.coordinates, t), dtype=float)
        v = np.broadcast_to(v, grid.shape)
        if not np.all(np.isfinite(v)):
            raise ConfigurationError(f"potential is not finite on the grid at t={t}")
        return v


def free_hamiltonian(mass: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec((mass,))


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_start: float
    t_end: float
    record_stride: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt!r}")
        if self.t_end < self.t_start:
            raise ConfigurationError(f"t_end={self.t_end} precedes t_start={self.t_start}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigurationError(f"record_stride must be a positive integer, got {self.record_stride!r}")

    @property
    def n_steps(self) -> int:
        """Steps needed to reach ``t_end``; a fractional remainder pads the span up."""
        ratio = (self.t_end - self.t_start) / self.dt
        return int(math.ceil(ratio - ALIGN_TOL * max(1.0, ratio)))

    @property
    def t_end_padded(self) -> float:
        return self.time_at(self.n_steps)

    @property
    def padded(self) -> bool:
        return not math.isclose(self.t_end_padded, self.t_end, rel_tol=0, abs_tol=ALIGN_TOL * self.dt)

    def time_at(self, k: int) -> float:
        return self.t_start + k * self.dt

    def step_index(self, t: float) -> int | None:
        """Index ``k`` with ``time_at(k) == t`` (to rounding), or None if ``t`` is off-grid."""
        ratio = (t - self.t_start) / self.dt
        k = round(ratio)
        return k if abs(ratio - k) <= ALIGN_TOL * max(1.0, abs(ratio)) else None


class SplitOperator:
    """Precomputed Strang stepper for one Hamiltonian on one grid at fixed dt.

    One step is ``exp(-iV dt/2) exp(-iK dt) exp(-iV dt/2)`` with V sampled at
    the interval midpoint.
    """

    def __init__(self, grid: SpatialGrid, h: HamiltonianSpec, dt: float):
        self.grid = grid
        self.h = h
        self.dt = dt
        self.kinetic_phase = np.exp(-1j * dt * kinetic_multiplier(grid, h.masses))
        self._static_half = None if h.time_dependent else self._half_phase(0.0)

    def _half_phase(self, t_mid: float) -> np.ndarray:
        return np.exp(-0.5j * self.dt * self.h.potential_on(self.grid, t_mid))

    def advance(self, values: np.ndarray, t: float) -> np.ndarray:
        half = self._static_half if self._static_half is not None else self._half_phase(t + 0.5 * self.dt)
        out = np.fft.ifftn(self.kinetic_phase * np.fft.fftn(half * values))
        out *= half
        return out


def _require_normalized(psi: ComplexField) -> None:
    if not psi.is_normalized():
        raise PreconditionError(f"propagation needs a normalized field, norm^2={psi.norm_squared()!r}")


def step(psi: ComplexField, h: HamiltonianSpec, t: float, dt: float) -> ComplexField:
    _require_normalized(psi)
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt!r}")
    out = SplitOperator(psi.grid, h, dt).advance(psi.values, t)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError(0)
    return ComplexField(out, psi.grid)


@dataclass
class Trajectory:
    final: ComplexField
    times: list
    snapshots: list
    n_steps: int
    t_end: float
    norm_drift: float


def evolve_lockstep(
    fields: Sequence[ComplexField],
    hamiltonians: Sequence[HamiltonianSpec],
    cfg: EvolutionConfig,
    observer: Callable[[int, float, list], None] | None = None,
) -> tuple[list[ComplexField], float]:
    """Advance several fields side by side, calling ``observer(k, t_k, values)`` after each step.

    The observer also sees ``k = 0`` before the first step. Returns the final
    fields and the largest ``| ||psi||^2 - 1 |`` seen over the run.
    """
    if len(fields) != len(hamiltonians):
        raise ConfigurationError("one Hamiltonian per field required")
    for psi in fields:
        _require_normalized(psi)
    steppers = [SplitOperator(psi.grid, h, cfg.dt) for psi, h in zip(fields, hamiltonians)]
    values = [psi.values.copy() for psi in fields]
    volumes = [psi.grid.cell_volume for psi in fields]
    drift = 0.0
    if observer is not None:
        observer(0, cfg.t_start, values)
    for k in range(cfg.n_steps):
        t = cfg.time_at(k)
        for i, stepper in enumerate(steppers):
            values[i] = stepper.advance(values[i], t)
            norm2 = float(np.sum(values[i].real ** 2 + values[i].imag ** 2) * volumes[i])
            if not math.isfinite(norm2):
                raise NumericalBlowupError(k + 1)
            drift = max(drift, abs(norm2 - 1.0))
        if observer is not None:
            observer(k + 1, cfg.time_at(k + 1), values)
    return [ComplexField(v, psi.grid) for v, psi in zip(values, fields)], drift


def evolve(psi0: ComplexField, h: HamiltonianSpec, cfg: EvolutionConfig) -> Trajectory:
    times, snapshots = [], []

    def record(k, t, values):
        if k % cfg.record_stride == 0 or k == cfg.n_steps:
            times.append(t)
            snapshots.append(ComplexField(values[0], psi0.grid))

    if cfg.n_steps == 0:
        _require_normalized(psi0)
        return Trajectory(psi0, [cfg.t_start], [psi0], 0, cfg.t_start, 0.0)
    (final,), drift = evolve_lockstep([psi0], [h], cfg, record)
    return Trajectory(final, times, snapshots, cfg.n_steps, cfg.t_end_padded, drift)
