"""Uniform periodic grids, wavefunctions on them, and basic observables.

Natural units are used throughout: hbar = 1, so wavenumber and momentum
coincide and the kinetic energy of mode k is k**2 / (2 m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    ConfigurationError,
    DomainSizeError,
    PreconditionError,
    ResolutionError,
    ShapeError,
)

NORM_TOL = 1e-12
TAIL_THRESHOLD = 1e-10
MIN_POINTS = 64
MIN_SAMPLES_PER_WIDTH = 4


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid of ``n_points`` per axis covering ``[-length/2, length/2)``.

    A 2D grid is the tensor product of two identical 1D axes; axis 0 holds
    the moving charge coordinate and axis 1 the induced charge coordinate.
    """

    n_points: int
    length: float
    dims: int = 1

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def momentum_spacing(self) -> float:
        return 2.0 * math.pi / self.length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.dims

    @property
    def size(self) -> int:
        return self.n_points**self.dims

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dims

    @cached_property
    def axis(self) -> np.ndarray:
        """Coordinates of one axis, ``-length/2 + j * spacing``."""
        return -0.5 * self.length + self.spacing * np.arange(self.n_points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Dual-grid wavenumbers of one axis in FFT order, spanning [-pi/dx, pi/dx)."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable (sparse) coordinate arrays, one per axis."""
        if self.dims == 1:
            return (self.axis,)
        return (self.axis[:, None], self.axis[None, :])


def make_grid(n_points: int, length: float, dims: int = 1) -> SpatialGrid:
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise ConfigurationError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if not _is_power_of_two(n_points):
        raise ConfigurationError(f"n_points={n_points}: power of two required")
    if n_points < MIN_POINTS:
        raise ConfigurationError(f"n_points={n_points}: at least {MIN_POINTS} required")
    if not (length > 0 and math.isfinite(length)):
        raise ConfigurationError(f"length={length!r} must be a positive finite number")
    if dims not in (1, 2):
        raise ConfigurationError(f"dims={dims!r} must be 1 or 2")
    return SpatialGrid(n_points, float(length), int(dims))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitudes sampled on a :class:`SpatialGrid`.

    The value array is made read-only on construction; operations return new
    fields instead of mutating.
    """

    values: np.ndarray
    grid: SpatialGrid = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128, copy=True)
        if values.shape != self.grid.shape:
            raise ShapeError(f"values of shape {values.shape} do not match grid {self.grid.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def scaled(self, factor: complex) -> ComplexField:
        return ComplexField(self.values * factor, self.grid)

    def normalized(self) -> ComplexField:
        return self.scaled(1.0 / self.norm())


@dataclass(frozen=True)
class PacketSpec:
    center: float
    width: float
    wavenumber: float = 0.0


def check_packet(grid: SpatialGrid, spec: PacketSpec) -> None:
    """Raise if ``spec`` is unresolved on ``grid`` or its tail reaches the boundary."""
    if not spec.width > 0:
        raise ResolutionError(f"packet width {spec.width!r} must be positive")
    if spec.width < MIN_SAMPLES_PER_WIDTH * grid.spacing:
        raise ResolutionError(
            f"packet width {spec.width} is below {MIN_SAMPLES_PER_WIDTH} grid spacings "
            f"({MIN_SAMPLES_PER_WIDTH * grid.spacing})"
        )
    half = 0.5 * grid.length
    distance = min(spec.center + half, half - spec.center)
    # amplitude relative to peak at the nearest boundary point
    tail = math.exp(-(distance**2) / (4.0 * spec.width**2)) if distance > 0 else 1.0
    if tail >= TAIL_THRESHOLD:
        raise DomainSizeError(
            f"packet centred at {spec.center} with width {spec.width} has boundary tail "
            f"{tail:.3g} >= {TAIL_THRESHOLD:g} of peak"
        )


def gaussian_amplitude(x: np.ndarray, spec: PacketSpec) -> np.ndarray:
    return np.exp(-((x - spec.center) ** 2) / (4.0 * spec.width**2) + 1j * spec.wavenumber * x)


def gaussian_packet(grid: SpatialGrid, spec: PacketSpec) -> ComplexField:
    """Normalized ``exp(-(x-x0)^2 / 4 sigma^2) exp(i k0 x)`` on a 1D grid."""
    if grid.dims != 1:
        raise ConfigurationError("gaussian_packet builds 1D packets; use product_packet for 2D")
    check_packet(grid, spec)
    return ComplexField(gaussian_amplitude(grid.axis, spec), grid).normalized()


def product_packet(grid: SpatialGrid, spec_x: PacketSpec, spec_y: PacketSpec) -> ComplexField:
    """Normalized product state ``g_x(x) g_y(y)`` on a 2D grid."""
    if grid.dims != 2:
        raise ConfigurationError("product_packet requires a 2D grid")
    check_packet(grid, spec_x)
    check_packet(grid, spec_y)
    values = np.multiply.outer(gaussian_amplitude(grid.axis, spec_x), gaussian_amplitude(grid.axis, spec_y))
    return ComplexField(values, grid).normalized()


def _same_grid(a: ComplexField, b: ComplexField) -> None:
    if a.grid != b.grid:
        raise ShapeError(f"grid mismatch: {a.grid} vs {b.grid}")


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """``<a|b> = sum(conj(a) * b) * dx**dims``."""
    _same_grid(a, b)
    return complex(np.vdot(a.values, b.values) * a.grid.cell_volume)


def sup_distance(a: ComplexField, b: ComplexField) -> float:
    _same_grid(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def kinetic_multiplier(grid: SpatialGrid, masses) -> np.ndarray:
    """Kinetic energy ``sum_i k_i^2 / 2 m_i`` on the (sparse) dual grid."""
    masses = tuple(masses)
    if len(masses) != grid.dims:
        raise ConfigurationError(f"{len(masses)} masses given for a {grid.dims}D grid")
    k = grid.wavenumbers
    if grid.dims == 1:
        return k**2 / (2.0 * masses[0])
    return (k**2 / (2.0 * masses[0]))[:, None] + (k**2 / (2.0 * masses[1]))[None, :]


def position_expectation(psi: ComplexField, axis: int = 0) -> float:
    coords = psi.grid.coordinates[axis]
    return float(np.sum(coords * psi.density()) * psi.grid.cell_volume)


def position_width(psi: ComplexField, axis: int = 0) -> float:
    """Standard deviation of the position density along ``axis``."""
    coords = psi.grid.coordinates[axis]
    rho = psi.density() * psi.grid.cell_volume
    mean = np.sum(coords * rho)
    return float(math.sqrt(np.sum((coords - mean) ** 2 * rho)))


def expectation_energy(psi: ComplexField, h, t: float) -> float:
    """``<psi|H(t)|psi>`` from spectral kinetic and grid potential quadrature.

    ``h`` is any object with ``masses`` and ``potential_on(grid, t)``
    (see :class:`abtubes.propagator.HamiltonianSpec`).
    """
    if not psi.is_normalized():
        raise PreconditionError(f"expectation_energy needs a normalized field, norm^2={psi.norm_squared()!r}")
    grid = psi.grid
    kinetic = kinetic_multiplier(grid, h.masses)
    h_psi = np.fft.ifftn(kinetic * np.fft.fftn(psi.values))
    h_psi = h_psi + h.potential_on(grid, t) * psi.values
    raw = np.vdot(psi.values, h_psi) * grid.cell_volume
    if abs(raw.imag) > 1e-10 * max(1.0, abs(raw.real)):
        raise PreconditionError(f"energy quadrature has imaginary part {raw.imag!r}; H not Hermitian on psi")
    return float(raw.real)
