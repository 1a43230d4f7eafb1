"""Energy, Pohozaev and Nehari functionals, the L2 gradient and the fibering map."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import RegimeError, ScalingDegradedError, UndefinedFiberError, ZeroMassError
from .grid import Field, Grid
from .params import ProblemParams
from .spectral import frac_laplacian, hartree_parts

#: default bound on |t| accepted by :func:`scale`
T_MAX = 5.0
#: accepted deviation of the post-dilation mass renormalisation factor from 1
RENORM_TOL = 1e-4
#: |p*gamma - 1| below this is treated as the L2-critical case
CRITICAL_TOL = 1e-14


@dataclass(frozen=True)
class EnergyBreakdown:
    mass: float
    kinetic: float
    d_star: float
    d_p: float
    j_alpha: float
    p_alpha: float
    n_c: Optional[float] = None
    i_alpha: Optional[float] = None
    lam: Optional[float] = None


class FiberSample(NamedTuple):
    t: float
    e: float
    de: float
    dde: float


def assemble_energy(kinetic, d_star, d_p, params: ProblemParams, mass=None, lam=None) -> EnergyBreakdown:
    """Combine the three scalar integrals into every functional value."""
    j = 0.5 * kinetic - params.lower_coeff * d_star - d_p / (2.0 * params.p)
    pa = params.s * kinetic - params.s * params.gamma * d_p
    n_c = i_a = None
    if lam is not None:
        n_c = kinetic - lam * mass - params.alpha * d_star - d_p
        i_a = j - 0.5 * lam * mass
    return EnergyBreakdown(mass, kinetic, d_star, d_p, j, pa, n_c, i_a, lam)


def energy(u: Field, params: ProblemParams, lam: float | None = None) -> EnergyBreakdown:
    """Energy breakdown of ``u``; Nehari and action values only when ``lam`` is given."""
    d_star = hartree_parts(u, params.two_mu_star, params.mu)[0]
    d_p = hartree_parts(u, params.p, params.mu)[0]
    return assemble_energy(u.kinetic(params.s), d_star, d_p, params, u.mass, lam)


def _odd_power(values: np.ndarray, q: float) -> np.ndarray:
    # |u|^(q-2) u, extended by 0 at u = 0 (q > 1)
    return np.sign(values) * np.abs(values) ** (q - 1.0)


class Evaluation(NamedTuple):
    energy: EnergyBreakdown
    gradient: Field
    lam: float


def evaluate(u: Field, params: ProblemParams) -> Evaluation:
    """Energy, gradient and multiplier from one pass (two convolutions, two FFT pairs)."""
    q = params.two_mu_star
    d_star, conv_s, _ = hartree_parts(u, q, params.mu)
    d_p, conv_p, _ = hartree_parts(u, params.p, params.mu)
    lap = frac_laplacian(u, params.s).values
    g = lap - params.alpha * conv_s * _odd_power(u.values, q) - conv_p * _odd_power(u.values, params.p)
    kin = u.kinetic(params.s)
    mass = u.mass
    lam = (kin - params.alpha * d_star - d_p) / mass if mass > 0 else float("nan")
    e = assemble_energy(kin, d_star, d_p, params, mass, lam if mass > 0 else None)
    return Evaluation(e, u.like(g), lam)


def gradient(u: Field, params: ProblemParams) -> Field:
    """Unconstrained L2 gradient of the energy (weak form of the equation with ``lambda = 0``)."""
    return evaluate(u, params).gradient


def lagrange_multiplier(u: Field, params: ProblemParams) -> float:
    """``lambda = (||u||^2 - alpha D_* - D_p) / ||u||_2^2`` from testing the equation against ``u``."""
    if u.mass <= 0.0:
        raise ZeroMassError("Lagrange multiplier undefined for a zero-mass field")
    e = energy(u, params)
    return (e.kinetic - params.alpha * e.d_star - e.d_p) / e.mass


# ---------------------------------------------------------------------------
# dilation


def _chirp(m: np.ndarray, et: float, n: int) -> np.ndarray:
    # exp(i*pi*et*m^2/n); m^2 split as hi*n + lo keeps the phase accurate for large m
    q = m.astype(np.int64) ** 2
    hi, lo = np.divmod(q, n)
    ph = np.mod(hi * et, 2.0) + np.mod(lo * et / n, 2.0)
    return np.exp(1j * np.pi * ph)


def _dilate_last_axis(values: np.ndarray, grid: Grid, et: float) -> np.ndarray:
    """Evaluate the trigonometric interpolant along the last axis at ``et * x``.

    The interpolant is evaluated on the stretched uniform point set with a
    Bluestein chirp-z transform; points leaving the box are set to zero.
    """
    m = grid.points_per_dim
    length = grid.box_length
    x0 = -0.5 * length
    c = np.fft.fft(values, axis=-1)
    # symmetric coefficient list k = -m/2 .. m/2 with the Nyquist term split
    d = np.empty(values.shape[:-1] + (m + 1,), dtype=complex)
    d[..., 0] = 0.5 * c[..., m // 2]
    d[..., m] = 0.5 * c[..., m // 2]
    n = np.arange(1, m)
    d[..., 1:m] = c[..., (n - m // 2) % m]
    k = np.arange(m + 1) - m // 2
    shift = (et - 1.0) * x0 / length
    d *= np.exp(2j * np.pi * np.mod(k * shift, 1.0))
    # X_j = sum_n d_n W^(n j), W = exp(2 pi i et / m)
    a = d * _chirp(np.arange(m + 1), et, m)
    b = np.conj(_chirp(np.arange(-m, m + 1), et, m))
    nfft = 1 << int(np.ceil(np.log2(a.shape[-1] + b.size - 1)))
    conv = np.fft.ifft(np.fft.fft(a, nfft, axis=-1) * np.fft.fft(b, nfft), axis=-1)
    j = np.arange(m)
    out = conv[..., j + m] * _chirp(j, et, m)
    out = (out * np.exp(-1j * np.pi * np.mod(j * et, 2.0))).real / m
    z = et * grid.coords()
    out[..., (z < x0) | (z >= x0 + length)] = 0.0
    return out


def dilate_values(u: Field, t: float) -> np.ndarray:
    """``e^(Nt/2) u(e^t x)`` without mass renormalisation."""
    et = math.exp(t)
    v = np.array(u.values)
    for axis in range(u.grid.dim):
        v = np.moveaxis(_dilate_last_axis(np.moveaxis(v, axis, -1), u.grid, et), -1, axis)
    return v * math.exp(0.5 * u.grid.dim * t)


def scale_with_factor(u: Field, t: float, t_max: float = T_MAX, tol: float = RENORM_TOL):
    """Mass-preserving dilation ``t * u`` and the renormalisation factor applied."""
    if abs(t) > t_max:
        raise ValueError(f"|t|={abs(t)} exceeds t_max={t_max}")
    if t == 0.0 or u.mass == 0.0:
        return u.like(u.values, u.warnings), 1.0
    v = dilate_values(u, t)
    mv = float(u.grid.cell_volume * np.sum(v * v))
    if mv == 0.0:
        raise ScalingDegradedError(float("inf"), "dilated field vanished on the grid")
    factor = math.sqrt(u.mass / mv)
    notes = ()
    if abs(factor - 1.0) > tol:
        if not u.truncation_suspect():
            raise ScalingDegradedError(factor)
        notes = (f"scaling-degraded (factor {factor:.6g})",)
    out = u.like(v * factor, notes)
    return out, factor


def scale(u: Field, t: float, t_max: float = T_MAX, tol: float = RENORM_TOL) -> Field:
    return scale_with_factor(u, t, t_max, tol)[0]


def dilation_direction(u: Field) -> Field:
    """``d/dt (t * u)`` at ``t = 0``: ``(N/2) u + x . grad u`` (spectral derivative)."""
    g = u.grid
    k = g.wavenumbers()
    out = 0.5 * g.dim * u.values
    for axis, x in enumerate(g.mesh()):
        uh = np.fft.fft(u.values, axis=axis)
        shape = [1] * g.dim
        shape[axis] = -1
        ik = (1j * k).reshape(shape).copy()
        ik.flat[g.points_per_dim // 2] = 0.0  # drop the unpaired Nyquist mode
        du = np.fft.ifft(uh * ik, axis=axis).real
        out = out + x * du
    return u.like(out)


# ---------------------------------------------------------------------------
# fibering map


@dataclass(frozen=True)
class FiberMap:
    """``E_u(t) = J(t * u)`` in closed form from the three integrals of ``u``."""

    kinetic: float
    d_star: float
    d_p: float
    s: float
    gamma: float
    p: float
    lower_coeff: float

    @classmethod
    def from_energy(cls, e: EnergyBreakdown, params: ProblemParams) -> "FiberMap":
        return cls(e.kinetic, e.d_star, e.d_p, params.s, params.gamma, params.p, params.lower_coeff)

    @property
    def rate(self) -> float:
        """Growth rate ``2 p gamma s`` of the Hartree term along the fiber."""
        return 2.0 * self.p * self.gamma * self.s

    def e(self, t):
        t = np.asarray(t, dtype=float)
        return (0.5 * np.exp(2 * self.s * t) * self.kinetic - self.lower_coeff * self.d_star
                - np.exp(self.rate * t) * self.d_p / (2 * self.p))

    def de(self, t):
        t = np.asarray(t, dtype=float)
        return (self.s * np.exp(2 * self.s * t) * self.kinetic
                - self.s * self.gamma * np.exp(self.rate * t) * self.d_p)

    def dde(self, t):
        t = np.asarray(t, dtype=float)
        return (2 * self.s ** 2 * np.exp(2 * self.s * t) * self.kinetic
                - 2 * self.p * self.s ** 2 * self.gamma ** 2 * np.exp(self.rate * t) * self.d_p)

    def sample(self, t: float) -> FiberSample:
        return FiberSample(float(t), float(self.e(t)), float(self.de(t)), float(self.dde(t)))

    def argmax(self) -> float:
        pg = self.p * self.gamma
        if abs(pg - 1.0) <= CRITICAL_TOL:
            raise RegimeError("L2-critical exponent: the fibering map has no interior maximum")
        if pg < 1.0:
            raise RegimeError("L2-subcritical exponent: the fibering map has no interior maximum")
        if not self.d_p > 0.0 or not self.kinetic > 0.0:
            raise UndefinedFiberError("fibering map undefined for a field with vanishing Hartree or kinetic term")
        return math.log(self.kinetic / (self.gamma * self.d_p)) / (2.0 * self.s * (pg - 1.0))


def fiber_map(u: Field, params: ProblemParams) -> FiberMap:
    return FiberMap.from_energy(energy(u, params), params)


def fiber(u: Field, params: ProblemParams, t: float) -> FiberSample:
    return fiber_map(u, params).sample(t)


def fiber_argmax(u: Field, params: ProblemParams) -> float:
    """Unique maximiser ``t_u`` of the fibering map (closed form)."""
    return fiber_map(u, params).argmax()


def pohozaev(u: Field, params: ProblemParams) -> float:
    return energy(u, params).p_alpha


def nehari(u: Field, params: ProblemParams, lam: float) -> float:
    return energy(u, params, lam).n_c
