"""Fourier-multiplier operators and the scalar integrals built on them.

Transform convention: forward FFT without prefactor, inverse with ``M^-N``,
physical-space integrals carry ``h^N``. With it Parseval reads
``h^N sum u^2 = h^N M^-N sum |u_hat|^2`` exactly.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import InvalidExponentError, TruncationWarning
from .grid import Field, Grid


class Norms(NamedTuple):
    mass: float
    kinetic: float


def _rfft_weights(dim: int, m: int) -> np.ndarray:
    """Multiplicity of each half-spectrum coefficient in the full spectrum."""
    w = np.full(m // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0  # Nyquist
    return w.reshape((1,) * (dim - 1) + (-1,))


def _spectrum(values: np.ndarray, grid: Grid, s: float):
    # half spectrum and symbol of the operator attached to the grid
    axes = tuple(range(grid.dim))
    if grid.boundary == "free":
        m = 2 * grid.points_per_dim
        return np.fft.rfftn(values, s=(m,) * grid.dim, axes=axes), grid.padded_symbol(s), m
    return np.fft.rfftn(values, axes=axes), grid.symbol(s), grid.points_per_dim


def frac_constant(dim: int, s: float) -> float:
    """``C_{N,s}`` in ``(-Delta)^s u(x) = C_{N,s} PV int (u(x) - u(y)) |x-y|^(-N-2s) dy``."""
    return float(4.0 ** s * special.gamma(dim / 2 + s) / (np.pi ** (dim / 2) * abs(special.gamma(-s))))


@lru_cache(maxsize=16)
def _unit_image_spectrum(dim: int, m: int, s: float):
    """Transform of ``W(d) = sum_{n != 0} |d + 2 m n|^(-N-2s)`` on the 2m-periodic offset lattice.

    ``W`` is the part of the ``2L``-periodic kernel of ``(-Delta)^s`` coming
    from the periodic images; it is smooth for offsets inside the box.
    """
    sig = dim + 2.0 * s
    d = np.arange(2 * m)
    d = np.where(d < m, d, d - 2 * m).astype(float)
    if dim == 1:
        w = (2.0 * m) ** (-sig) * (special.zeta(sig, 1.0 + d / (2 * m)) + special.zeta(sig, 1.0 - d / (2 * m)))
        w[0] = 2.0 * (2.0 * m) ** (-sig) * special.zeta(sig, 1.0)
        w[m] = 0.0  # offset m is never used by the restricted product
    else:
        w = _lattice_images(dim, m, sig, d)
    spec = np.fft.rfftn(w).real
    spec.setflags(write=False)
    return spec


def _lattice_images(dim: int, m: int, sig: float, d: np.ndarray, reach: int = 6) -> np.ndarray:
    # direct image sum over |n|_inf <= reach, remainder by the integral of |y|^-sig outside the cube
    mesh = np.meshgrid(*([d / (2.0 * m)] * dim), indexing="ij", sparse=True)
    out = np.zeros((2 * m,) * dim)
    for n in np.ndindex(*([2 * reach + 1] * dim)):
        nn = [k - reach for k in n]
        if not any(nn):
            continue
        r2 = sum((x + k) ** 2 for x, k in zip(mesh, nn))
        out += r2 ** (-sig / 2)
    out += _cube_exterior_integral(dim, sig, reach + 0.5)
    return (2.0 * m) ** (-sig) * out


def _cube_exterior_integral(dim: int, sig: float, a: float) -> float:
    """``int_{|y|_inf > a} |y|^-sig dy`` (by homogeneity ``a^(N-sig)`` times the value at ``a=1``)."""
    # divergence theorem on the homogeneous field |y|^-sig y: one face integral, 2N faces
    f = lambda *t: (1.0 + sum(v * v for v in t)) ** (-sig / 2)
    face, _ = integrate.nquad(f, [[-1.0, 1.0]] * (dim - 1), opts={"epsabs": 1e-12})
    return 2 * dim * face / (sig - dim) * a ** (dim - sig)


def _image_term(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    # C_{N,s} h^N (W * u) restricted to the box
    m = grid.points_per_dim
    axes = tuple(range(grid.dim))
    pad = (2 * m,) * grid.dim
    wh = _unit_image_spectrum(grid.dim, m, float(s))
    full = np.fft.irfftn(np.fft.rfftn(values, s=pad, axes=axes) * wh, s=pad, axes=axes)
    h = grid.spacing
    return (frac_constant(grid.dim, s) * h ** (-2.0 * s)) * full[(slice(0, m),) * grid.dim]


def kinetic_energy(values: np.ndarray, grid: Grid, s: float) -> float:
    """``||(-Delta)^(s/2) u||^2`` with the Parseval normalisation.

    Periodic grids: ``sum |xi|^(2s) |u_hat|^2`` (nonnegative). Free grids: the
    same sum on the ``2L`` torus plus the periodic-image correction, which
    gives the energy of the zero extension on R^N.
    """
    uh, sym, m = _spectrum(values, grid, s)
    dens = sym * (uh.real ** 2 + uh.imag ** 2) * _rfft_weights(grid.dim, m)
    kin = float(grid.cell_volume * np.sum(dens) / m ** grid.dim)
    if grid.boundary == "free":
        kin += float(grid.cell_volume * np.sum(values * _image_term(values, grid, s)))
    return kin


def frac_laplacian(u: Field, s: float) -> Field:
    """Apply ``(-Delta)^s`` as the multiplier ``|xi|^(2s)``; the mean is annihilated.

    On a ``"free"`` grid the multiplier acts on the zero extension and the
    result is restricted to the box (see :class:`Grid`).
    """
    if not 0.0 < s <= 1.0:
        raise ValueError(f"fractional order s={s} must lie in (0, 1]")
    g = u.grid
    axes = tuple(range(g.dim))
    uh, sym, m = _spectrum(u.values, g, s)
    out = np.fft.irfftn(uh * sym, s=(m,) * g.dim, axes=axes)
    if m != g.points_per_dim:
        out = out[(slice(0, g.points_per_dim),) * g.dim] + _image_term(u.values, g, s)
    return u.like(out)


def norms(u: Field, s: float) -> Norms:
    return Norms(u.mass, u.kinetic(s))


# ---------------------------------------------------------------------------
# Riesz potential


@lru_cache(maxsize=16)
def lattice_zeta(dim: int, mu: float) -> float:
    """Analytic continuation of ``sum_{j in Z^N, j != 0} |j|^(-mu)``.

    Evaluated through the theta-function splitting at ``t = 1``; valid for
    ``0 < mu`` with ``mu != dim``. For ``dim = 1`` this is ``2*zeta(mu)``.
    """
    n = np.arange(1, 40)

    def theta_minus_one(t):
        th = 1.0 + 2.0 * np.sum(np.exp(-np.pi * t * n * n))
        return th ** dim - 1.0

    def integrand(t):
        return (t ** (mu / 2 - 1) + t ** ((dim - mu) / 2 - 1)) * theta_minus_one(t)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        tail, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-15, epsrel=1e-14, limit=200)
    completed = tail - 2.0 / (dim - mu) - 2.0 / mu
    return float(completed * np.pi ** (mu / 2) / special.gamma(mu / 2))


@lru_cache(maxsize=16)
def cube_average(dim: int, mu: float) -> float:
    """Mean of ``|y|^(-mu)`` over the unit cell ``[-1/2, 1/2]^N``."""
    if dim == 1:
        return 2.0 * 0.5 ** (1 - mu) / (1 - mu)
    f = lambda *y: np.sqrt(sum(v * v for v in y)) ** (-mu)
    val, _ = integrate.nquad(f, [[0.0, 0.5]] * dim, opts={"limit": 200, "epsabs": 1e-13})
    return float(2 ** dim * val)


def singular_weight(dim: int, mu: float, h: float, rule: str = "zeta") -> float:
    """Kernel value assigned to the zero offset.

    ``"zeta"`` is the corrected-trapezoid weight ``-Z_N(mu) h^-mu``, which
    cancels the ``h^(N-mu)`` error term of the punctured lattice sum (see
    :func:`_unit_kernel_spectrum` for the next correction). ``"average"`` is
    the plain cell average of ``|x|^-mu``, which only reaches ``O(h^(N-mu))``.
    """
    if rule == "zeta":
        return -lattice_zeta(dim, mu) * h ** (-mu)
    if rule == "average":
        return cube_average(dim, mu) * h ** (-mu)
    raise ValueError(f"unknown singular-cell rule {rule!r}")


@lru_cache(maxsize=16)
def _unit_kernel_spectrum(dim, m, mu, rule):
    # kernel for unit spacing; the sampled kernel scales exactly as h^(-mu)
    h = 1.0
    d = np.arange(2 * m)
    d = np.where(d < m, d, d - 2 * m) * h
    mesh = np.meshgrid(*([d] * dim), indexing="ij", sparse=True)
    r = np.sqrt(sum(x * x for x in mesh))
    r = np.broadcast_to(r, (2 * m,) * dim).copy()
    r[(0,) * dim] = 1.0
    ker = r ** (-mu)
    ker[(0,) * dim] = singular_weight(dim, mu, h, rule)
    if rule == "zeta":
        # second term of the lattice-sum expansion, -Z_N(mu-2) h^(N+2-mu) Lap f(0) / (2N),
        # with the Laplacian on the nearest-neighbour stencil: error O(h^(N+4-mu))
        z2 = lattice_zeta(dim, mu - 2.0) * h ** (-mu)
        ker[(0,) * dim] += z2
        for axis in range(dim):
            for step in (1, -1):
                idx = [0] * dim
                idx[axis] = step
                ker[tuple(idx)] -= z2 / (2 * dim)
    spec = np.fft.rfftn(ker).real  # even kernel
    spec.setflags(write=False)
    return spec


def _convolve_values(values: np.ndarray, grid: Grid, mu: float, rule: str) -> np.ndarray:
    m = grid.points_per_dim
    axes = tuple(range(grid.dim))
    pad = (2 * m,) * grid.dim
    kh = _unit_kernel_spectrum(grid.dim, m, float(mu), rule)
    fh = np.fft.rfftn(values, s=pad, axes=axes)
    full = np.fft.irfftn(fh * kh, s=pad, axes=axes)
    return (grid.cell_volume * grid.spacing ** (-mu)) * full[(slice(0, m),) * grid.dim]


def _check_mu(grid: Grid, mu: float):
    if not 0.0 < mu < grid.dim:
        raise InvalidExponentError(f"Riesz exponent mu={mu} must lie in (0, N={grid.dim})")


def riesz_convolve(f: Field, mu: float, rule: str = "zeta") -> Field:
    """Free-space ``(I_mu * f)(x) = int f(y) |x-y|^-mu dy`` sampled on the grid.

    The input is zero-padded to ``2M`` points per axis, so there is no
    periodic aliasing and no zero-mode issue; the kernel is sampled in
    physical space with a corrected weight at the singular offset.
    """
    _check_mu(f.grid, mu)
    notes = ()
    if f.truncation_suspect():
        notes = ("truncation-suspect input",)
    return f.like(_convolve_values(f.values, f.grid, mu, rule), warnings=notes)


def hartree_parts(u: Field, r: float, mu: float, rule: str = "zeta"):
    """Return ``(D_r(u), I_mu*|u|^r, |u|^r)`` sharing a single convolution."""
    _check_mu(u.grid, mu)
    a = np.abs(u.values) ** r
    conv = _convolve_values(a, u.grid, mu, rule)
    d = float(u.grid.cell_volume * np.sum(conv * a))
    return d, conv, a


def hartree(u: Field, r: float, mu: float, rule: str = "zeta") -> float:
    """``D_r(u) = int (I_mu * |u|^r) |u|^r``."""
    if u.truncation_suspect():
        warnings.warn("Hartree integral of a truncation-suspect field", TruncationWarning, stacklevel=2)
    return hartree_parts(u, r, mu, rule)[0]
