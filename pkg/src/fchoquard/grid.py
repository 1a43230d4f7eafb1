"""Uniform periodic boxes and sampled fields."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, UnsupportedDimensionError

#: default ceiling on the mass fraction allowed in the outer shell of the box
TRUNCATION_THRESHOLD = 1e-10
#: relative thickness of the boundary shell inspected by the truncation monitor
SHELL_FRACTION = 0.1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the periodic box ``[-L/2, L/2)^N``.

    Sample ``j`` along each axis sits at ``-L/2 + j*h`` so index ``M//2`` is the
    origin. The wave numbers are ``2*pi*k/L`` with ``k`` in ``[-M/2, M/2)``.

    ``boundary`` selects how the fractional Laplacian treats the box:
    ``"periodic"`` is the Fourier multiplier on the torus; ``"free"`` applies
    it to the zero extension of the samples (padded to ``2L``) and restricts
    the result back to the box, so that mass pushed against the box edge pays
    kinetic energy as it would on R^N.
    """

    dim: int
    box_length: float
    points_per_dim: int
    boundary: str = "periodic"

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_dim,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_dim ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def origin_index(self) -> tuple:
        return (self.points_per_dim // 2,) * self.dim

    def coords(self) -> np.ndarray:
        """One-dimensional sample positions (shared by every axis)."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.points_per_dim)

    def mesh(self) -> list:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        x = self.coords()
        return np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True)

    def radius(self) -> np.ndarray:
        r2 = sum(xi * xi for xi in self.mesh())
        return np.sqrt(np.broadcast_to(r2, self.shape))

    def wavenumbers(self) -> np.ndarray:
        """Angular wave numbers ``2*pi*k/L`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.spacing)

    def symbol(self, s: float) -> np.ndarray:
        """``|xi|^(2s)`` on the half spectrum used by ``rfftn``."""
        return _symbol(self.dim, self.box_length, self.points_per_dim, float(s))

    def padded_symbol(self, s: float) -> np.ndarray:
        """``|xi|^(2s)`` on the half spectrum of the ``2M``-point, ``2L`` box."""
        return _symbol(self.dim, 2.0 * self.box_length, 2 * self.points_per_dim, float(s))

    def doubled(self) -> "Grid":
        """Same box, twice the resolution."""
        return Grid(self.dim, self.box_length, 2 * self.points_per_dim, self.boundary)

    def rescaled(self, factor: float) -> "Grid":
        """Same resolution, box stretched by ``factor``."""
        return Grid(self.dim, self.box_length * factor, self.points_per_dim, self.boundary)

    def with_boundary(self, boundary: str) -> "Grid":
        return build_grid(self.dim, self.box_length, self.points_per_dim, boundary)


@lru_cache(maxsize=32)
def _unit_symbol(dim, m, s):
    # symbol for unit spacing; |xi|^(2s) scales as h^(-2s)
    k_full = 2.0 * np.pi * np.fft.fftfreq(m)
    k_half = 2.0 * np.pi * np.fft.rfftfreq(m)
    axes = [k_full] * (dim - 1) + [k_half]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    xi2 = sum(k * k for k in mesh)
    out = np.power(xi2, s)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _symbol(dim, box_length, m, s):
    out = _unit_symbol(dim, m, s) * (box_length / m) ** (-2.0 * s)
    out.setflags(write=False)
    return out


BOUNDARIES = ("periodic", "free")


def build_grid(dim: int, box_length: float, points_per_dim: int, boundary: str = "periodic") -> Grid:
    """Validate and build a :class:`Grid`.

    >>> build_grid(1, 32.0, 64).spacing
    0.5
    """
    if dim not in (1, 2, 3):
        raise UnsupportedDimensionError(f"dimension {dim} not supported (1-3)")
    if not isinstance(points_per_dim, (int, np.integer)) or not _is_power_of_two(int(points_per_dim)):
        raise ConfigurationError(f"points_per_dim={points_per_dim} is not a power of two")
    if points_per_dim < 16:
        raise ConfigurationError("points_per_dim must be at least 16")
    if not box_length > 0:
        raise ConfigurationError("box_length must be positive")
    if boundary not in BOUNDARIES:
        raise ConfigurationError(f"unknown boundary {boundary!r}")
    return Grid(int(dim), float(box_length), int(points_per_dim), boundary)


@dataclass(eq=False)
class Field:
    """Real samples of a function on a :class:`Grid`.

    The sample array is copied on construction and frozen, so a Field can be
    shared between threads. Mass and kinetic values are cached lazily.
    """

    grid: Grid
    values: np.ndarray
    warnings: tuple = ()
    _cache: dict = dc_field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        v.setflags(write=False)
        self.values = v
        self.warnings = tuple(self.warnings)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Sample ``func(*mesh)`` on the grid."""
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def like(self, values, warnings=()) -> "Field":
        return Field(self.grid, values, warnings)

    @property
    def mass(self) -> float:
        """``||u||_2^2`` by the rectangle (periodic trapezoid) rule."""
        if "mass" not in self._cache:
            self._cache["mass"] = float(self.grid.cell_volume * np.sum(self.values * self.values))
        return self._cache["mass"]

    def kinetic(self, s: float) -> float:
        """``||(-Delta)^(s/2) u||_2^2`` (see :func:`fchoquard.spectral.norms`)."""
        key = ("kinetic", float(s))
        if key not in self._cache:
            from .spectral import kinetic_energy

            self._cache[key] = kinetic_energy(self.values, self.grid, s)
        return self._cache[key]

    def l2_norm(self) -> float:
        return float(np.sqrt(self.mass))

    def inner(self, other) -> float:
        w = other.values if isinstance(other, Field) else other
        return float(self.grid.cell_volume * np.sum(self.values * w))

    def tail_fraction(self) -> float:
        """Fraction of the mass sitting in the outer shell of the box."""
        g = self.grid
        cut = (1.0 - SHELL_FRACTION) * 0.5 * g.box_length
        shell = np.zeros(g.shape, dtype=bool)
        for xi in g.mesh():
            shell = shell | (np.abs(xi) >= cut)
        total = float(np.sum(self.values ** 2))
        if total == 0.0:
            return 0.0
        return float(np.sum(self.values[shell] ** 2)) / total

    def truncation_suspect(self, threshold: float | None = None) -> bool:
        thr = TRUNCATION_THRESHOLD if threshold is None else threshold
        return self.tail_fraction() > thr
