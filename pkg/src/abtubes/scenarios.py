"""End-to-end runs of the two-tube experiment with and without the induced charge.

Each run evolves, in lockstep over ``[t0, t3]``:

* branch 1 (grounded tube),
* branch 2 with the tube voltage switched on,
* branch 2 with the voltage switched off (reference),

and measures the relative phase of branch 2 as ``-arg <psi2_off | psi2_on>``,
unwrapped step by step so that phases beyond pi are tracked continuously.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .config import RunConfig
from .errors import (
    AuditFailure,
    ConfigurationError,
    ConfinementFailureError,
    ModelViolationError,
    ShapeError,
)
from .fringes import fringe_shift, synthesize_fringes
from .grid import (
    ComplexField,
    expectation_energy,
    gaussian_packet,
    inner_product,
    make_grid,
    product_packet,
    sup_distance,
)
from .potentials import (
    branch_potential_single,
    confinement,
    external_pair_term,
    pair_static_potential,
    soft_coulomb,
)
from .propagator import HamiltonianSpec, evolve_lockstep

MIN_OVERLAP_MODULUS = 0.999
MAX_LEAKAGE = 1e-6
SINGLE_ENERGY_TOL = 1e-6
PAIR_ENERGY_RTOL = 1e-10

TUBE_EXTERIOR_NOTE = (
    "free flight before t0 and after t3 is not simulated; it adds the same phase to both branches"
)


@dataclass(frozen=True)
class BranchPair:
    branch1: ComplexField
    branch2: ComplexField

    def __post_init__(self):
        if self.branch1.grid != self.branch2.grid:
            raise ShapeError("branches must share a grid")


@dataclass
class SimulationReport:
    mode: str
    external_on: bool
    measured_delta_phi: float
    analytic_delta_phi: float
    overlap_modulus: float
    deviation_sup: float
    e1: float
    e2: float
    t_mid: float
    norm_drift: float
    fringe_shift_periods: float
    leakage: float
    n_steps: int
    t_end: float
    config: dict
    energy_components: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    fringe_x: np.ndarray = field(default=None, repr=False)
    intensity_off: np.ndarray = field(default=None, repr=False)
    intensity_on: np.ndarray = field(default=None, repr=False)

    RESULT_FIELDS = (
        "measured_delta_phi", "analytic_delta_phi", "overlap_modulus", "deviation_sup", "e1", "e2",
        "t_mid", "norm_drift", "fringe_shift_periods", "leakage", "n_steps", "t_end",
    )

    def __post_init__(self):
        for name in self.RESULT_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise ModelViolationError(f"report field {name} is not finite: {getattr(self, name)!r}")
        if self.deviation_sup < 0:
            raise ModelViolationError("deviation_sup must be non-negative")

    def results(self) -> dict:
        """The measured quantities, without the config echo."""
        out = {name: getattr(self, name) for name in self.RESULT_FIELDS}
        out["energy_components"] = dict(self.energy_components)
        return out

    def to_dict(self) -> dict:
        s = self.config["schedule"]
        return {
            "mode": self.mode,
            "external_on": self.external_on,
            "results": self.results(),
            "comparison": {
                "phase_error": self.measured_delta_phi - self.analytic_delta_phi,
                "naive_delta_phi_without_induced": self.config["charges"]["q"] * s["v0"] * (s["t2"] - s["t1"]),
            },
            "notes": list(self.notes),
            "config": self.config,
        }


class _PhaseTracker:
    """Accumulates ``-arg <ref|psi>`` continuously across steps."""

    def __init__(self):
        self.phase = 0.0
        self.modulus = 1.0

    def update(self, overlap: complex) -> None:
        raw = -math.atan2(overlap.imag, overlap.real)
        delta = raw - self.phase
        self.phase += delta - 2.0 * math.pi * round(delta / (2.0 * math.pi))
        self.modulus = abs(overlap)


def _check_aligned(cfg: RunConfig) -> None:
    ev = cfg.evolution_config()
    s = cfg.schedule
    for name in ("t1", "t2"):
        if ev.step_index(getattr(s, name)) is None:
            raise ConfigurationError(f"schedule.{name} is not on the time grid (t0 + k dt)")


def _mid_pulse_step(cfg: RunConfig) -> int:
    ev = cfg.evolution_config()
    s = cfg.schedule
    return round((0.5 * (s.t1 + s.t2) - s.t0) / ev.dt)


def _run(cfg, psi0, h1, h2_on, h2_off, external_on, pair_mode, chi=None, exterior=None):
    ev = cfg.evolution_config()
    grid = psi0.grid
    volume = grid.cell_volume
    k_mid = _mid_pulse_step(cfg)
    tracker = _PhaseTracker()
    state = {"leakage": 0.0}
    mid = {}

    def observe(k, t, values):
        b1, on, off = values
        tracker.update(complex(np.vdot(off, on) * volume))
        if k == k_mid:
            mid["t"] = t
            mid["fields"] = (ComplexField(b1, grid), ComplexField(on, grid))
        if exterior is not None and (k % ev.record_stride == 0 or k == ev.n_steps):
            for v in values:
                state["leakage"] = max(state["leakage"], float(np.sum(np.abs(v[:, exterior]) ** 2) * volume))

    hams = [h1, h2_on if external_on else h2_off, h2_off]
    (b1, b2_on, b2_off), drift = evolve_lockstep([psi0, psi0, psi0], hams, ev, observe)

    if exterior is not None and state["leakage"] > MAX_LEAKAGE:
        raise ConfinementFailureError(
            f"induced charge probability outside the walls reached {state['leakage']:.3g} > {MAX_LEAKAGE:g}"
        )
    overlap = inner_product(b2_off, b2_on)
    if abs(overlap) < MIN_OVERLAP_MODULUS:
        raise ModelViolationError(
            f"|<psi2_off|psi2_on>| = {abs(overlap):.6f} < {MIN_OVERLAP_MODULUS}: the tube voltage changed more than a phase"
        )

    t_mid = mid["t"]
    mid1, mid2 = mid["fields"]
    e1 = expectation_energy(mid1, h1, t_mid)
    e2 = expectation_energy(mid2, hams[1], t_mid)

    tilt = cfg.fringes.tilt
    x = grid.axis
    if pair_mode:
        a1, a_on, a_off = (_project(f, chi) for f in (b1, b2_on, b2_off))
    else:
        a1, a_on, a_off = b1.values, b2_on.values, b2_off.values
    i_on = synthesize_fringes(a1, a_on, x, tilt)
    i_off = synthesize_fringes(a1, a_off, x, tilt)
    return {
        "measured": tracker.phase,
        "modulus": abs(overlap),
        "deviation": sup_distance(b2_on, b2_off),
        "e1": e1,
        "e2": e2,
        "t_mid": t_mid,
        "mid_fields": (mid1, mid2),
        "drift": drift,
        "shift": fringe_shift(i_on, i_off, tilt, x),
        "leakage": state["leakage"],
        "n_steps": ev.n_steps,
        "t_end": ev.t_end_padded,
        "fringes": (x, i_off, i_on),
        "padded": ev.padded,
    }


def pair_fringes(pair: BranchPair, tilt: float) -> np.ndarray:
    """Fringe intensity of a 1D branch pair recombined with tilt wavenumber ``tilt``."""
    if pair.branch1.grid.dims != 1:
        raise ShapeError("project two-particle branches onto x before rendering fringes")
    return synthesize_fringes(pair.branch1.values, pair.branch2.values, pair.branch1.grid.axis, tilt)


def _project(psi: ComplexField, chi: np.ndarray) -> np.ndarray:
    """Amplitude along x after overlapping the y coordinate with the reference mode ``chi``."""
    dy = psi.grid.spacing
    a = psi.values @ np.conj(chi) * dy
    return a / math.sqrt(float(np.sum(np.abs(a) ** 2)) * dy)


def _notes(out) -> list:
    notes = [TUBE_EXTERIOR_NOTE]
    if out["padded"]:
        notes.append(f"t3 padded to {out['t_end']!r} to fit a whole number of steps")
    return notes


def run_single_particle(cfg: RunConfig, external_on: bool = True) -> SimulationReport:
    """Moving charge alone: tube 2 adds the uniform energy ``q U(t)``."""
    if cfg.mode != "single_particle":
        raise ConfigurationError("run_single_particle needs a single_particle config")
    _check_aligned(cfg)
    grid = cfg.make_grid()
    schedule = cfg.make_schedule()
    charges = cfg.make_charges()
    m = charges.m
    psi0 = gaussian_packet(grid, cfg.particle_packet())

    h_free = HamiltonianSpec((m,))
    h_on = HamiltonianSpec(
        (m,), lambda coords, t: branch_potential_single(0.0, t, 2, schedule, charges), time_dependent=True
    )
    out = _run(cfg, psi0, h_free, h_on, h_free, external_on, pair_mode=False)

    mid1, _ = out["mid_fields"]
    components = {"kinetic": expectation_energy(mid1, h_free, out["t_mid"])}
    analytic_phi = analytic.ab_phase(schedule, charges.q).delta_phi if external_on else 0.0
    return SimulationReport(
        mode=cfg.mode, external_on=external_on,
        measured_delta_phi=out["measured"], analytic_delta_phi=analytic_phi,
        overlap_modulus=out["modulus"], deviation_sup=out["deviation"],
        e1=out["e1"], e2=out["e2"], t_mid=out["t_mid"], norm_drift=out["drift"],
        fringe_shift_periods=out["shift"], leakage=0.0, n_steps=out["n_steps"], t_end=out["t_end"],
        config=cfg.to_dict(), energy_components=components, notes=_notes(out),
        fringe_x=out["fringes"][0], intensity_off=out["fringes"][1], intensity_on=out["fringes"][2],
    )


def pair_energy_components(psi: ComplexField, cfg: RunConfig) -> dict:
    """Kinetic energies of both particles, wall energy and Coulomb energy of a 2D state."""
    grid = psi.grid
    charges = cfg.make_charges()
    x, y = grid.coordinates
    k = grid.wavenumbers
    spectrum = np.abs(np.fft.fft2(psi.values)) ** 2
    spectrum *= grid.cell_volume / grid.size
    rho = psi.density() * grid.cell_volume
    return {
        "kinetic": float(np.sum(spectrum * (k**2 / (2.0 * charges.m))[:, None])),
        "kinetic_induced": float(np.sum(spectrum * (k**2 / (2.0 * charges.m_induced))[None, :])),
        "confinement": float(np.sum(rho * confinement(y, cfg.make_confinement()))),
        "coulomb": float(np.sum(rho * soft_coulomb(x, y, charges))),
    }


def run_two_particle(cfg: RunConfig, external_on: bool = True) -> SimulationReport:
    """Moving charge plus induced image charge; tube 2 adds ``(q + q') U(t)``."""
    if cfg.mode != "two_particle":
        raise ConfigurationError("run_two_particle needs a two_particle config")
    _check_aligned(cfg)
    grid = cfg.make_grid()
    schedule = cfg.make_schedule()
    charges = cfg.make_charges()
    conf = cfg.make_confinement()
    induced = cfg.induced_packet()
    if not conf.wall_center_low < induced.center < conf.wall_center_high:
        raise ConfigurationError("induced packet must start between the walls")
    psi0 = product_packet(grid, cfg.particle_packet(), induced)
    chi = gaussian_packet(make_grid(grid.n_points, grid.length, 1), induced).values

    x, y = grid.coordinates
    static = np.broadcast_to(pair_static_potential(x, y, charges, conf), grid.shape).copy()
    static.flags.writeable = False
    masses = (charges.m, charges.m_induced)
    h1 = HamiltonianSpec(masses, lambda coords, t: static)
    h2_off = HamiltonianSpec(masses, lambda coords, t: static)
    h2_on = HamiltonianSpec(
        masses,
        lambda coords, t: static + external_pair_term(t, 2, schedule, charges, True),
        time_dependent=True,
    )
    axis = grid.axis
    exterior = (axis < conf.wall_center_low) | (axis > conf.wall_center_high)
    out = _run(cfg, psi0, h1, h2_on, h2_off, external_on, pair_mode=True, chi=chi, exterior=exterior)

    mid1, _ = out["mid_fields"]
    components = pair_energy_components(mid1, cfg)
    analytic_phi = analytic.ab_phase(schedule, charges.charge_sum).delta_phi if external_on else 0.0
    notes = _notes(out)
    notes.append("induced charge modeled as one particle confined by smooth walls; outer-surface charge omitted")
    return SimulationReport(
        mode=cfg.mode, external_on=external_on,
        measured_delta_phi=out["measured"], analytic_delta_phi=analytic_phi,
        overlap_modulus=out["modulus"], deviation_sup=out["deviation"],
        e1=out["e1"], e2=out["e2"], t_mid=out["t_mid"], norm_drift=out["drift"],
        fringe_shift_periods=out["shift"], leakage=out["leakage"], n_steps=out["n_steps"], t_end=out["t_end"],
        config=cfg.to_dict(), energy_components=components, notes=notes,
        fringe_x=out["fringes"][0], intensity_off=out["fringes"][1], intensity_on=out["fringes"][2],
    )


def run(cfg: RunConfig, external_on: bool = True) -> SimulationReport:
    if cfg.mode == "single_particle":
        return run_single_particle(cfg, external_on)
    return run_two_particle(cfg, external_on)


@dataclass(frozen=True)
class AuditVerdict:
    passed: bool
    expected_gap: float
    measured_gap: float
    tolerance: float
    rule: str


def energy_audit(report: SimulationReport, cfg: RunConfig) -> AuditVerdict:
    """Check the branch-energy bookkeeping at mid-pulse; raise :class:`AuditFailure` on mismatch.

    Single particle: ``e2 - e1 = q U``. With the induced charge and
    ``q' = -q``: ``e1 = e2`` to relative 1e-10. Detuned: ``e2 - e1 = (q + q') U``.
    """
    charges = cfg.make_charges()
    u = cfg.make_schedule().v0 if report.external_on else 0.0
    gap = report.e2 - report.e1
    if report.mode == "single_particle":
        expected = analytic.branch_energies(report.e1, 0, 0, 0, u, charges, "no_induced")
        tol, rule = SINGLE_ENERGY_TOL, "e2 - e1 = q U"
    else:
        expected = analytic.branch_energies(report.e1, 0, 0, 0, u, charges, "with_induced")
        if charges.detuned:
            tol, rule = SINGLE_ENERGY_TOL, "e2 - e1 = (q + q') U"
        else:
            tol, rule = PAIR_ENERGY_RTOL * max(abs(report.e1), 1.0), "e1 = e2"
    expected_gap = expected.e2 - expected.e1
    verdict = AuditVerdict(abs(gap - expected_gap) < tol, expected_gap, gap, tol, rule)
    if not verdict.passed:
        raise AuditFailure(f"energy audit '{rule}' failed: gap {gap!r}, expected {expected_gap!r} +/- {tol:g}",
                           report.e1, report.e2)
    return verdict


@dataclass(frozen=True)
class SweepRow:
    v0: float
    delta_phi_measured: float
    delta_phi_analytic: float
    fringe_shift_periods: float


def _sweep_one(args) -> SweepRow:
    cfg, v0 = args
    report = run(cfg.with_updates(schedule={"v0": v0}), external_on=True)
    return SweepRow(v0, report.measured_delta_phi, report.analytic_delta_phi, report.fringe_shift_periods)


def sweep_voltage(cfg: RunConfig, v0_values, workers: int = 1) -> list[SweepRow]:
    """One run per tube voltage; rows come back in input order."""
    v0_values = [float(v) for v in v0_values]
    if not v0_values:
        raise ConfigurationError("sweep needs at least one voltage")
    jobs = [(cfg, v) for v in v0_values]
    if workers <= 1 or len(jobs) == 1:
        return [_sweep_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))


def check_sweep(rows, cfg: RunConfig) -> list[str]:
    """Rows that break the expected phase law, as messages (empty if all agree)."""
    failures = []
    s = cfg.schedule
    if cfg.mode == "single_particle":
        tol = 1e-6
        for r in rows:
            expected = cfg.charges.q * r.v0 * (s.t2 - s.t1)
            if abs(r.delta_phi_measured - expected) > tol:
                failures.append(f"v0={r.v0!r}: measured {r.delta_phi_measured!r}, expected {expected!r}")
    elif not cfg.make_charges().detuned:
        for r in rows:
            if abs(r.delta_phi_measured) >= 1e-10:
                failures.append(f"v0={r.v0!r}: measured {r.delta_phi_measured!r}, expected 0")
    else:
        for r in rows:
            expected = r.delta_phi_analytic
            if abs(r.delta_phi_measured - expected) > 0.01 * abs(expected) + 1e-10:
                failures.append(f"v0={r.v0!r}: measured {r.delta_phi_measured!r}, expected {expected!r}")
    return failures
