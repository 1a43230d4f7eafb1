"""Exponent algebra, the lower-critical optimiser family and empirical constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .errors import (EstimationUnstableError, FclError, RegimeError, ResolutionWarning)
from .functionals import CRITICAL_TOL, energy
from .grid import Field, Grid
from .params import ProblemParams
from .spectral import hartree_parts

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"

#: default probe widths for the S_mu estimate, in grid spacings
S_MU_PROBES = (4.0, 4.0 * math.sqrt(2.0), 8.0)
#: relative spread across probes above which the S_mu estimate is rejected
S_MU_MAX_SPREAD = 0.05


def regime(dim: int, s: float, mu: float, p: float) -> str:
    pg = p * (dim * (p - 2.0) + mu) / (2.0 * s * p)
    if abs(pg - 1.0) <= CRITICAL_TOL:
        return CRITICAL
    return SUPERCRITICAL if pg > 1.0 else SUBCRITICAL


@dataclass(frozen=True)
class DerivedExponents:
    gamma_ps: float
    p_gamma: float
    two_mu_star: float
    two_mu_s_star: float
    a: float
    b: float
    m1_exponent: float
    regime: str
    a_mu: Optional[float] = None
    c: float = 1.0

    @property
    def m1_of_c(self) -> float:
        """``M_1(c) = c^(2p(1-gamma)/(p gamma - 1))``; NaN at the critical exponent."""
        if math.isnan(self.m1_exponent):
            return float("nan")
        return self.c ** self.m1_exponent

    def m1(self, c: float) -> float:
        return c ** self.m1_exponent


def derived_exponents(params: ProblemParams, s_mu: float | None = None) -> DerivedExponents:
    n, s, mu, p = params.dim, params.s, params.mu, params.p
    gamma = (n * (p - 2.0) + mu) / (2.0 * s * p)
    pg = p * gamma
    reg = regime(n, s, mu, p)
    if reg == CRITICAL:
        a = m1_exp = float("nan")
    else:
        a = 2.0 * (pg - p) / (pg - 1.0)
        m1_exp = 2.0 * (p - pg) / (pg - 1.0)  # = 2p(1 - gamma)/(p gamma - 1), bitwise equal to -a
    b = 2.0 * (2 * n - mu) / n
    a_mu = None
    if s_mu is not None:
        a_mu = params.lower_coeff * s_mu ** (-(2 * n - mu) / n)
    return DerivedExponents(gamma, pg, (2 * n - mu) / n, (2 * n - mu) / (n - 2 * s),
                            a, b, m1_exp, reg, a_mu, params.c)


# ---------------------------------------------------------------------------
# optimiser family V_{eps,z}


def optimizer_mass_constant(dim: int) -> float:
    """``int_{R^N} (1 + |y|^2)^(-N) dy = pi^(N/2) Gamma(N/2) / Gamma(N)``."""
    return math.pi ** (dim / 2) * math.gamma(dim / 2) / math.gamma(dim)


def optimizer_field(grid: Grid, eps: float, z=0.0, c: float = 1.0, normalize: str = "continuum") -> Field:
    """Sample ``K (eps / (eps^2 + |x - z|^2))^(N/2)``.

    With ``normalize="continuum"`` the amplitude makes the mass on all of
    R^N equal ``c^2``; the grid mass then falls short by the part of the
    algebraic tail lying outside the box. ``normalize="grid"`` rescales so the
    grid mass is exactly ``c^2``.
    """
    if eps <= 0 or c <= 0:
        raise ValueError("eps and c must be positive")
    h = grid.spacing
    if eps < 4 * h * (1 - 1e-12) or eps > grid.box_length / 8:
        warnings.warn(f"eps={eps:g} outside resolvable band [{4 * h:g}, {grid.box_length / 8:g}]",
                      ResolutionWarning, stacklevel=2)
    zs = np.broadcast_to(np.asarray(z, dtype=float), (grid.dim,))
    r2 = sum((x - zi) ** 2 for x, zi in zip(grid.mesh(), zs))
    k = c / math.sqrt(optimizer_mass_constant(grid.dim))
    v = k * (eps / (eps * eps + r2)) ** (grid.dim / 2)
    v = np.broadcast_to(v, grid.shape)
    if normalize == "grid":
        v = v * (c / math.sqrt(grid.cell_volume * np.sum(v * v)))
    elif normalize != "continuum":
        raise ValueError(f"unknown normalisation {normalize!r}")
    return Field(grid, v)


def lower_critical_quotient(u: Field, mu: float) -> float:
    """``||u||_2^2 / D_{2_mu*}(u)^(N/(2N-mu))``; bounded below by ``S_mu``."""
    n = u.grid.dim
    d = hartree_parts(u, (2 * n - mu) / n, mu)[0]
    return u.mass / d ** (n / (2 * n - mu))


@dataclass(frozen=True)
class SMuEstimate:
    value: float
    eps: tuple
    quotients: tuple

    @property
    def spread(self) -> float:
        q = np.asarray(self.quotients)
        return float((q.max() - q.min()) / q.min())


def s_mu_probes(grid: Grid, mu: float, eps_factors: Sequence[float] = S_MU_PROBES,
                max_spread: float = S_MU_MAX_SPREAD) -> SMuEstimate:
    """Evaluate the Rayleigh quotient on ``V_{eps,0}`` for each probe width."""
    eps = tuple(float(f) * grid.spacing for f in eps_factors)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        quots = tuple(lower_critical_quotient(optimizer_field(grid, e), mu) for e in eps)
    est = SMuEstimate(min(quots), eps, quots)
    if est.spread > max_spread:
        raise EstimationUnstableError(f"S_mu probes disagree by {est.spread:.3%}")
    return est


def s_mu_estimate(grid: Grid, mu: float, eps_factors: Sequence[float] = S_MU_PROBES,
                  max_spread: float = S_MU_MAX_SPREAD) -> float:
    """Estimate of the sharp lower-critical constant ``S_mu`` (an upper estimate).

    Every quotient is ``>= S_mu`` in the continuum; box truncation of the
    ``|x|^-N`` tail of the optimiser biases it upward by roughly ``eps/L``,
    so the probes sit a few grid spacings wide and the minimum is reported.
    """
    return s_mu_probes(grid, mu, eps_factors, max_spread).value


# ---------------------------------------------------------------------------
# interpolation constant C_p


def interpolation_ratio(u: Field, params: ProblemParams) -> float:
    """``R(u) = D_p / (||u||^(2p gamma) ||u||_2^(2p(1-gamma)))``; ``R(u) <= C_p``."""
    e = energy(u, params)
    pg = params.p * params.gamma
    return e.d_p / (e.kinetic ** pg * e.mass ** (params.p * (1.0 - params.gamma)))


def random_smooth_field(grid: Grid, rng: np.random.Generator, n_bumps: int | None = None,
                        signed: bool = False, width=(1 / 64, 1 / 16)) -> Field:
    """Sum of randomly placed Gaussian bumps, confined to the central half of the box."""
    if n_bumps is None:
        n_bumps = int(rng.integers(1, 5))
    L = grid.box_length
    mesh = grid.mesh()
    v = np.zeros(grid.shape)
    for _ in range(n_bumps):
        centre = rng.uniform(-L / 8, L / 8, size=grid.dim)
        w = L * rng.uniform(*width)
        amp = rng.uniform(0.3, 1.0) * (rng.choice((-1.0, 1.0)) if signed else 1.0)
        r2 = sum((x - z) ** 2 for x, z in zip(mesh, centre))
        v = v + amp * np.exp(-r2 / (2 * w * w))
    return Field(grid, v)


def trial_corpus(grid: Grid, trials: int, seed: int = 0) -> list:
    """Gaussians of varied width, optimiser fields and random smooth fields."""
    rng = np.random.default_rng(seed)
    L, h = grid.box_length, grid.spacing
    out = []
    for i in range(trials):
        kind = i % 3
        if kind == 0:
            w = L * 10 ** rng.uniform(math.log10(1 / 128), math.log10(1 / 16))
            out.append(Field.from_function(grid, lambda *x, w=w: np.exp(-sum(xi * xi for xi in x) / (2 * w * w))))
        elif kind == 1:
            eps = 10 ** rng.uniform(math.log10(4 * h), math.log10(L / 64))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ResolutionWarning)
                out.append(optimizer_field(grid, eps))
        else:
            out.append(random_smooth_field(grid, rng))
    return out


@dataclass
class CpBound:
    """Lower bound of ``C_p`` with the field that attains it."""

    value: float
    ratios: list
    best_field: Optional[Field] = dc_field(default=None, repr=False)

    def __float__(self):
        return float(self.value)

    def extended(self, fields, params: ProblemParams) -> "CpBound":
        """Fold more fields into the maximum (never decreases the bound)."""
        best, value = self.best_field, self.value
        ratios = list(self.ratios)
        for f in fields:
            r = interpolation_ratio(f, params)
            ratios.append(r)
            if r > value:
                value, best = r, f
        return CpBound(value, ratios, best)


def c_p_lower_bound(grid: Grid, params: ProblemParams, trials: int, seed: int = 0,
                    extra_fields: Sequence[Field] = ()) -> CpBound:
    """Maximum of ``R(u)`` over a trial corpus plus any supplied fields."""
    if regime(params.dim, params.s, params.mu, params.p) == SUBCRITICAL:
        raise RegimeError("C_p lower bound requested in the L2-subcritical regime")
    fields = trial_corpus(grid, trials, seed) + list(extra_fields)
    if not fields:
        raise FclError("empty corpus")
    return CpBound(-math.inf, [], None).extended(fields, params)


@dataclass(frozen=True)
class CriticalMassCheck:
    threshold: float
    satisfied: bool


def critical_mass_check(params: ProblemParams, c_p_est: float) -> CriticalMassCheck:
    """Small-mass condition of the L2-critical nonexistence result, evaluated with ``c_p_est``.

    With a lower bound of ``C_p`` a positive threshold is necessary for the
    hypothesis, not a certificate of it.
    """
    n, s, mu = params.dim, params.s, params.mu
    if regime(n, s, mu, params.p) != CRITICAL:
        raise RegimeError("critical-mass check only applies at the L2-critical exponent")
    power = 2.0 * ((2 * s - mu) / n + 1.0)
    thr = 1.0 - n * float(c_p_est) * params.c ** power / (2 * n + 2 * s - mu)
    return CriticalMassCheck(thr, thr > 0.0)


def kinetic_floor(ratio: float, params: ProblemParams) -> float:
    """``(c^(2p(gamma-1)) / (gamma R))^(1/(p gamma - 1))``: kinetic of a Pohozaev-manifold field with ``R(u)=ratio``."""
    g, p = params.gamma, params.p
    mass = params.c ** 2
    return (mass ** (p * (g - 1.0)) / (g * ratio)) ** (1.0 / (p * g - 1.0))
