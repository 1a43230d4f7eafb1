"""Normalised ground states by descent on the Pohozaev manifold.

Each iterate lives on the mass sphere and on the Pohozaev manifold: the
inner maximisation over the dilation orbit is solved in closed form
(:meth:`FiberMap.argmax`) and the outer minimisation is a preconditioned
projected gradient descent with Armijo backtracking on ``J o project``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import FclError, RegimeError
from .functionals import (EnergyBreakdown, FiberMap, dilation_direction, energy, evaluate,
                          scale_with_factor)
from .spectral import frac_laplacian, hartree_parts
from .grid import Field, Grid, build_grid
from .params import ProblemParams
from .constants import SUPERCRITICAL, regime

log = logging.getLogger(__name__)

#: default box factor: L = kappa * ell * ln(1/tail)
BOX_KAPPA = 16.0
BOX_TAIL = 1e-10


@dataclass
class SolverConfig:
    max_iters: int = 3000
    pde_residual_tol: float = 1e-6
    pohozaev_tol: float = 1e-10
    step_init: float = 1.0
    armijo_c: float = 1e-4
    multistart_count: int = 3
    seed: int = 0
    continuation: bool = True
    #: weight of the penalty on the dilation gauge t_v (relative to |J|)
    gauge: float = 1.0
    #: stop once the residual has not dropped by 1% over this many iterations
    patience: int = 200

    def __post_init__(self):
        if not (self.pde_residual_tol > 0 and self.pohozaev_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.max_iters < 1 or self.multistart_count < 1 or self.patience < 1:
            raise ValueError("max_iters, multistart_count and patience must be positive")
        if self.gauge < 0:
            raise ValueError("gauge must be nonnegative")


@dataclass
class SolverResult:
    field: Field
    lam: float
    m1: float
    energy: EnergyBreakdown
    pde_residual: float
    pohozaev_residual: float
    nehari_residual: float
    nu: float
    converged: bool
    iterations: int
    trace: list = dc_field(default_factory=list)
    multistart_best_gap: float = 0.0
    start_energies: list = dc_field(default_factory=list)
    max_fiber_curvature: float = -math.inf
    max_renorm_deviation: float = 0.0

    def summary(self) -> dict:
        """JSON-ready scalars (the field itself goes to a checkpoint file)."""
        g = self.field.grid
        e = asdict(self.energy)
        return {
            "grid": {"dim": g.dim, "box_length": g.box_length, "points_per_dim": g.points_per_dim},
            "lambda": self.lam,
            "m1": self.m1,
            "energy": e,
            "pde_residual": self.pde_residual,
            "pohozaev_residual": self.pohozaev_residual,
            "nehari_residual": self.nehari_residual,
            "nu": self.nu,
            "converged": self.converged,
            "iterations": self.iterations,
            "multistart_best_gap": self.multistart_best_gap,
            "start_energies": list(self.start_energies),
            "max_fiber_curvature": self.max_fiber_curvature,
            "max_renorm_deviation": self.max_renorm_deviation,
            "tail_fraction": self.field.tail_fraction(),
            "trace": [list(t) for t in self.trace],
        }


# ---------------------------------------------------------------------------
# projection onto the Pohozaev manifold


@dataclass
class Projection:
    field: Field
    energy: EnergyBreakdown
    t: float
    curvature: float  # E_u''(t_u) of the first step
    renorm_deviation: float


def dilate_box(u: Field, t: float) -> Field:
    """Exact dilation ``t * u``: same samples times ``e^(Nt/2)`` on a box shrunk by ``e^-t``.

    Sample ``j`` of the result sits at ``e^-t x_j`` where it takes the value
    ``e^(Nt/2) u(x_j)``, so no interpolation is involved and the mass, kinetic
    and Hartree dilation laws hold to rounding on the discrete level.
    """
    g = u.grid
    return Field(g.rescaled(math.exp(-t)), u.values * math.exp(0.5 * g.dim * t), u.warnings)


def _project(u: Field, params: ProblemParams, tol: float = 1e-10, max_rounds: int = 8,
             e: EnergyBreakdown | None = None, rescale_box: bool = False) -> Projection:
    """Dilate ``u`` onto the Pohozaev manifold.

    With ``rescale_box`` the dilation moves the box (:func:`dilate_box`) and
    one closed-form step lands on the manifold. Otherwise the field is
    resampled on its own grid; the closed-form maximiser is exact for the
    continuum dilation laws but on the periodic box the kinetic law holds only
    up to image terms, so the step is repeated until ``|P|/kinetic <= tol``.
    """
    e = energy(u, params) if e is None else e
    fm = FiberMap.from_energy(e, params)
    t0 = fm.argmax()
    curvature = float(fm.dde(t0))
    if rescale_box:
        v = dilate_box(u, t0)
        return Projection(v, energy(v, params), t0, curvature, 0.0)
    total, dev, t = 0.0, 0.0, t0
    for _ in range(max_rounds):
        if abs(e.p_alpha) <= tol * e.kinetic:
            break
        u, factor = scale_with_factor(u, t)
        dev = max(dev, abs(factor - 1.0))
        total += t
        e = energy(u, params)
        t = FiberMap.from_energy(e, params).argmax()
    return Projection(u, e, total, curvature, dev)


def project_pohozaev(u: Field, params: ProblemParams, tol: float = 1e-10, rescale_box: bool = False) -> Field:
    """``t_u * u`` with ``t_u`` the fibering-map maximiser; the mass is preserved.

    By default the field is resampled on its own grid; ``rescale_box=True``
    returns the exact dilation on a rescaled box instead.
    """
    return _project(u, params, tol, rescale_box=rescale_box).field


def residual(u: Field, lam: float, params: ProblemParams) -> float:
    """``||gradient(u) - lambda u||_2 / ||u||_2``."""
    g = evaluate(u, params).gradient
    r = g.values - lam * u.values
    return math.sqrt(u.grid.cell_volume * float(np.sum(r * r)) / u.mass)


# ---------------------------------------------------------------------------
# grid selection and initial data


def length_scale(params: ProblemParams, points_per_dim: int = 1024) -> float:
    """Width of a unit-variance Gaussian of mass ``c^2`` after projection onto the Pohozaev manifold."""
    params.check_admissible()
    m = min(points_per_dim, {1: 1024, 2: 128, 3: 64}[params.dim])
    g = Grid(params.dim, 24.0, m, "free")
    gauss = Field.from_function(g, lambda *x: np.exp(-0.5 * sum(xi * xi for xi in x)))
    gauss = gauss.like(gauss.values * (params.c / gauss.l2_norm()))
    t = FiberMap.from_energy(energy(gauss, params), params).argmax()
    return math.exp(-t)


def auto_grid(params: ProblemParams, points_per_dim: int, kappa: float = BOX_KAPPA,
              tail: float = BOX_TAIL) -> Grid:
    """Box tracking the decay length of the ground state: ``L = kappa * ell * ln(1/tail)``."""
    ell = length_scale(params, points_per_dim)
    return build_grid(params.dim, kappa * ell * math.log(1.0 / tail), points_per_dim, "free")


def _radial_profile(grid: Grid, kind: str, width: float) -> np.ndarray:
    r = grid.radius() / width
    if kind == "gauss":
        return np.exp(-0.5 * r * r)
    if kind == "sech":
        return 1.0 / np.cosh(np.minimum(r, 700.0))
    if kind == "lorentz":
        return (1.0 + r * r) ** (-grid.dim / 2)
    raise ValueError(kind)


def initial_guesses(grid: Grid, params: ProblemParams, count: int, seed: int, ell: float) -> list:
    """Radial, nonnegative starting fields with mass ``c^2``."""
    kinds = ("gauss", "sech", "lorentz")
    out = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        kind = kinds[i % len(kinds)]
        w = ell * (1.0 if i < len(kinds) else float(np.exp(rng.uniform(-0.7, 0.7))))
        v = _radial_profile(grid, kind, w)
        if i >= len(kinds):
            r = grid.radius()
            for _ in range(2):
                wb = ell * float(np.exp(rng.uniform(-1.0, 1.0)))
                v = v + 0.1 * rng.uniform() * np.exp(-0.5 * (r / wb) ** 2)
        v = v * (params.c / math.sqrt(grid.cell_volume * np.sum(v * v)))
        out.append(Field(grid, v))
    return out


def transfer(u: Field, grid: Grid, c_new: float) -> Field:
    """Reuse the samples of ``u`` on a box of the same resolution and new length.

    This is a pure dilation plus amplitude change, so the shape carries over
    exactly; the mass becomes ``c_new^2``.
    """
    if grid.points_per_dim != u.grid.points_per_dim or grid.dim != u.grid.dim:
        raise ValueError("transfer needs grids of equal resolution and dimension")
    return Field(grid, _renormalise(u.values, grid, c_new))


# ---------------------------------------------------------------------------
# descent
#
# The iterate v is kept on a fixed grid; the state it represents is its
# projection t_v * v, realised exactly by dilate_box. The objective is the
# closed-form fiber maximum Jhat(v) = E_v(t_v) = J(project(v)), and by the
# envelope theorem its gradient is the gradient of J at the projected state
# with the kinetic and p-Hartree parts weighted by e^(2st) and e^(2p gamma st).
# The same samples give identical residuals and multipliers for v and t_v * v.


@dataclass
class _Point:
    v: np.ndarray
    jhat: float
    t: float
    grad: np.ndarray  # unconstrained gradient of Jhat
    lam: float
    res: np.ndarray  # grad - lam * v
    curvature: float
    pde: float = 0.0  # ||residual|| without the gauge term, per unit mass


def _point(v: np.ndarray, grid: Grid, params: ProblemParams, gauge: float = 0.0) -> _Point:
    u = Field(grid, v)
    q = params.two_mu_star
    d_star, conv_s, _ = hartree_parts(u, q, params.mu)
    d_p, conv_p, _ = hartree_parts(u, params.p, params.mu)
    kin = u.kinetic(params.s)
    fm = FiberMap(kin, d_star, d_p, params.s, params.gamma, params.p, params.lower_coeff)
    t = fm.argmax()
    ek, ep = math.exp(2 * params.s * t), math.exp(fm.rate * t)
    lap = frac_laplacian(u, params.s).values
    g = (ek * lap - params.alpha * conv_s * np.sign(v) * np.abs(v) ** (q - 1.0)
         - ep * conv_p * np.sign(v) * np.abs(v) ** (params.p - 1.0))
    jhat = float(fm.e(t))
    mass = u.mass
    lam0 = float(np.sum(g * v)) * grid.cell_volume / mass
    r0 = g - lam0 * v
    pde = math.sqrt(grid.cell_volume * float(np.sum(r0 * r0)) / mass)
    if gauge:
        # pin the dilation gauge: penalise t_v, whose gradient is (dK/K - dD_p/D_p) / (2s(p gamma - 1))
        pg = params.p * params.gamma
        conv_p_term = conv_p * np.sign(v) * np.abs(v) ** (params.p - 1.0)
        dt = (2.0 * lap / kin - 2.0 * params.p * conv_p_term / d_p) / (2.0 * params.s * (pg - 1.0))
        jhat += 0.5 * gauge * t * t
        g = g + gauge * t * dt
    lam = float(np.sum(g * v)) * grid.cell_volume / mass
    return _Point(v, jhat, t, g, lam, g - lam * v, float(fm.dde(t)), pde)


def _renormalise(v: np.ndarray, grid: Grid, c: float) -> np.ndarray:
    return v * (c / math.sqrt(grid.cell_volume * float(np.sum(v * v))))


def _preconditioned(r: np.ndarray, grid: Grid, s: float, weight: float, shift: float) -> np.ndarray:
    axes = tuple(range(grid.dim))
    rh = np.fft.rfftn(r, axes=axes)
    return np.fft.irfftn(rh / (shift + weight * grid.symbol(s)), s=grid.shape, axes=axes)


def _descend(u0: Field, params: ProblemParams, cfg: SolverConfig, memory: int = 8) -> SolverResult:
    """Preconditioned L-BFGS for ``Jhat`` on the mass sphere (projection retraction)."""
    grid = u0.grid
    hN = grid.cell_volume
    c = params.c
    dot = lambda a, b: hN * float(np.sum(a * b))
    x = _point(_renormalise(np.abs(u0.values), grid, c), grid, params)
    gauge = cfg.gauge * max(1.0, abs(x.jhat))
    x = _point(x.v, grid, params, gauge)
    max_curv = x.curvature
    hist = []  # (s, y, 1/(y.s))
    trace = []
    best_res, best_it = math.inf, 0
    it = 0
    for it in range(cfg.max_iters + 1):
        res = x.pde
        trace.append((x.jhat, res))
        if res <= cfg.pde_residual_tol or it == cfg.max_iters:
            break
        if res < 0.99 * best_res:
            best_res, best_it = res, it
        elif it - best_it >= cfg.patience:
            log.debug("residual stalled at %.3e after %d iterations", res, it)
            break
        tangent = lambda w: w - (dot(w, x.v) / (c * c)) * x.v
        weight = math.exp(2 * params.s * x.t)
        shift = max(abs(x.lam), 1e-3 * weight)
        # two-loop recursion with the Sobolev preconditioner as initial inverse Hessian
        q = x.res.copy()
        alphas = []
        for s_k, y_k, rho in reversed(hist):
            a_k = rho * dot(s_k, q)
            alphas.append(a_k)
            q -= a_k * y_k
        z = _preconditioned(q, grid, params.s, weight, shift)
        for (s_k, y_k, rho), a_k in zip(hist, reversed(alphas)):
            z += (a_k - rho * dot(y_k, z)) * s_k
        d = -tangent(z)
        slope = dot(x.res, d)
        if not slope < 0:
            hist.clear()
            d = -tangent(_preconditioned(x.res, grid, params.s, weight, shift))
            slope = dot(x.res, d)
            if not slope < 0:
                break
        slack = min(1e-12, 64 * np.finfo(float).eps * max(1.0, abs(x.jhat)))
        tau, new = 1.0, None
        for _ in range(40):
            try:
                cand = _point(_renormalise(np.abs(x.v + tau * d), grid, c), grid, params, gauge)
            except FclError:
                cand = None
            if cand is not None and cand.jhat <= x.jhat + cfg.armijo_c * tau * slope + slack:
                new = cand
                break
            tau *= 0.5
        if new is None:
            log.debug("line search stalled at iteration %d (residual %.3e)", it, res)
            break
        s_k = new.v - x.v
        y_k = new.res - x.res
        ys = dot(y_k, s_k)
        if ys > 1e-14 * math.sqrt(dot(y_k, y_k) * dot(s_k, s_k)):
            hist.append((s_k, y_k, 1.0 / ys))
            if len(hist) > memory:
                hist.pop(0)
        x = new
        max_curv = max(max_curv, x.curvature)
    u = dilate_box(Field(grid, x.v), x.t)
    return _certify(u, evaluate(u, params), params, cfg, it, trace, max_curv, 0.0)


def _certify(u, ev, params, cfg, iterations, trace, max_curv, max_dev) -> SolverResult:
    e = ev.energy
    lam = ev.lam
    r = ev.gradient.values - lam * u.values
    hN = u.grid.cell_volume
    res = math.sqrt(hN * float(np.sum(r * r)) / u.mass)
    zeta = dilation_direction(u)
    fm = FiberMap.from_energy(e, params)
    nu = hN * float(np.sum(r * zeta.values)) / float(fm.dde(0.0))
    denom = e.kinetic - lam * e.mass
    pres = abs(e.p_alpha) / e.kinetic
    converged = res <= cfg.pde_residual_tol and pres <= cfg.pohozaev_tol
    return SolverResult(
        field=u, lam=lam, m1=e.j_alpha, energy=e, pde_residual=res,
        pohozaev_residual=pres,
        nehari_residual=abs(e.n_c) / denom if denom != 0 else float("inf"),
        nu=nu, converged=converged, iterations=iterations, trace=trace,
        max_fiber_curvature=max_curv, max_renorm_deviation=max_dev,
    )


def ground_state(params: ProblemParams, config: SolverConfig | None = None, grid: Grid | None = None,
                 points_per_dim: int = 4096, initial: Optional[list] = None,
                 box_kappa: float = BOX_KAPPA) -> SolverResult:
    """Minimise the energy on the Pohozaev manifold; best of several starts.

    ``initial`` replaces the generated starts (used for continuation).
    Non-convergence is reported through ``converged=False``.
    """
    cfg = config or SolverConfig()
    params.check_admissible()
    if regime(params.dim, params.s, params.mu, params.p) != SUPERCRITICAL:
        raise RegimeError("ground states are computed only in the L2-supercritical regime")
    ell = length_scale(params, points_per_dim)
    if grid is None:
        grid = build_grid(params.dim, box_kappa * ell * math.log(1.0 / BOX_TAIL), points_per_dim, "free")
    starts = list(initial) if initial else initial_guesses(grid, params, cfg.multistart_count, cfg.seed, ell)
    results = [_descend(u0, params, cfg) for u0 in starts]
    pool = [r for r in results if r.converged] or results
    best = min(pool, key=lambda r: r.m1)
    energies = [r.m1 for r in pool]
    best.multistart_best_gap = float(max(energies) - min(energies))
    best.start_energies = [r.m1 for r in results]
    return best
