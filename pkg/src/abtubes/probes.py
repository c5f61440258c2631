"""Propagator self-checks run by ``abtubes validate`` on a reduced grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import PacketSpec, gaussian_packet, make_grid, sup_distance
from .potentials import PulseSchedule, shutter_voltage
from .propagator import EvolutionConfig, HamiltonianSpec, evolve

PROBE_POINTS = 256
PROBE_LENGTH = 40.0
NORM_STEPS = 10_000
NORM_TOL = 1e-10
SLOPE_TARGET = 2.0
SLOPE_TOL = 0.2
GAUGE_TOL = 1e-10
CONVERGENCE_SPAN = 2.0


@dataclass(frozen=True)
class ProbeResult:
    name: str
    passed: bool
    value: float
    criterion: str


def _probe_setup(omega: float = 1.0):
    grid = make_grid(PROBE_POINTS, PROBE_LENGTH, 1)
    psi0 = gaussian_packet(grid, PacketSpec(center=2.0, width=1.0, wavenumber=1.0))
    h = HamiltonianSpec((1.0,), lambda coords, t: 0.5 * omega**2 * coords[0] ** 2)
    return grid, psi0, h


def norm_drift_probe(dt: float = 0.01, n_steps: int = NORM_STEPS) -> ProbeResult:
    _, psi0, h = _probe_setup()
    traj = evolve(psi0, h, EvolutionConfig(dt, 0.0, n_steps * dt, record_stride=n_steps))
    return ProbeResult("norm_drift", traj.norm_drift < NORM_TOL, traj.norm_drift, f"< {NORM_TOL:g} over {n_steps} steps")


def convergence_errors(dt: float, span: float = CONVERGENCE_SPAN, halvings: int = 3):
    """Final-state errors for ``dt, dt/2, ...`` against a run with ``dt / 2**(halvings + 3)``.

    The span is rounded to a whole number (at least one) of base steps.
    """
    _, psi0, h = _probe_setup()
    span = dt * max(1, round(span / dt))
    reference = evolve(psi0, h, EvolutionConfig(dt / 2 ** (halvings + 3), 0.0, span, record_stride=10**9)).final
    steps, errors = [], []
    for j in range(halvings + 1):
        h_dt = dt / 2**j
        final = evolve(psi0, h, EvolutionConfig(h_dt, 0.0, span, record_stride=10**9)).final
        steps.append(h_dt)
        errors.append(math.sqrt(np.sum(np.abs(final.values - reference.values) ** 2) * final.grid.spacing))
    return np.array(steps), np.array(errors)


def convergence_slope(dt: float, span: float = CONVERGENCE_SPAN, halvings: int = 3) -> float:
    steps, errors = convergence_errors(dt, span, halvings)
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def convergence_probe(dt: float) -> ProbeResult:
    slope = convergence_slope(dt)
    ok = abs(slope - SLOPE_TARGET) <= SLOPE_TOL
    return ProbeResult("convergence_order", ok, slope, f"slope {SLOPE_TARGET} +/- {SLOPE_TOL}")


def gauge_probe(schedule: PulseSchedule, q: float, dt: float) -> ProbeResult:
    """A uniform ``q U(t)`` on top of a trap must only multiply the state by ``exp(-i q int U)``."""
    _, psi0, h = _probe_setup()
    h_shifted = HamiltonianSpec(
        h.masses, lambda coords, t: h.potential(coords, t) + q * shutter_voltage(t, schedule), time_dependent=True
    )
    cfg = EvolutionConfig(dt, schedule.t0, schedule.t3, record_stride=10**9)
    plain = evolve(psi0, h, cfg).final
    shifted = evolve(psi0, h_shifted, cfg).final
    expected = plain.scaled(np.exp(-1j * q * schedule.integral(cfg.t_end_padded)))
    err = sup_distance(shifted, expected)
    return ProbeResult("gauge_phase", err < GAUGE_TOL, err, f"sup error < {GAUGE_TOL:g}")


def run_probes(schedule: PulseSchedule, q: float, dt: float) -> list[ProbeResult]:
    return [norm_drift_probe(dt), convergence_probe(dt), gauge_probe(schedule, q, dt)]
