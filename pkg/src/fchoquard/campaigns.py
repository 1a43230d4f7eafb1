"""Sweeps over the mass and the three verification campaigns."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields as dc_fields
from typing import Optional

import numpy as np
from scipy import stats

from . import __version__
from .constants import (CRITICAL, SUPERCRITICAL, critical_mass_check, c_p_lower_bound, derived_exponents,
                        regime, s_mu_probes, trial_corpus)
from .errors import DomainError, FclError, InsufficientDataError, RegimeError
from .functionals import FiberMap, energy
from .grid import Field, build_grid
from .params import ProblemParams
from .solver import (BOX_KAPPA, SolverConfig, SolverResult, auto_grid, dilate_box, ground_state,
                     transfer)

SMALL_MASS_LADDER = (0.25, 0.35, 0.5, 0.7, 1.0)
LARGE_MASS_LADDER = (1.0, 1.5, 2.0, 3.0)
MIN_FIT_ROWS = 4


@dataclass(frozen=True)
class PowerFit:
    slope: float
    intercept: float
    r_squared: float
    n: int


def fit_powerlaw(pairs) -> PowerFit:
    """Least-squares line through ``(log x, log y)``."""
    pairs = [(float(x), float(y)) for x, y in pairs]
    if len(pairs) < 2:
        raise InsufficientDataError("a power-law fit needs at least two points")
    if any(not (x > 0 and y > 0) for x, y in pairs):
        raise DomainError("power-law fit needs positive x and y")
    lx = np.log([x for x, _ in pairs])
    ly = np.log([y for _, y in pairs])
    if np.ptp(lx) == 0:
        raise DomainError("all x values coincide")
    if len(pairs) == 2:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return PowerFit(float(slope), float(ly[0] - slope * lx[0]), 1.0, 2)
    fit = stats.linregress(lx, ly)
    return PowerFit(float(fit.slope), float(fit.intercept), float(min(1.0, fit.rvalue ** 2)), len(pairs))


@dataclass
class CampaignConfig:
    dim: int = 1
    s: float = 0.4
    mu: float = 0.5
    alpha: float = 1.0
    p: float = 3.0
    c_list: tuple = ()
    points_per_dim: int = 4096
    box_length: Optional[float] = None  # None: box from the length scale of each mass
    box_kappa: float = BOX_KAPPA
    solver: SolverConfig = dc_field(default_factory=SolverConfig)
    workers: int = 1
    # critical campaign
    corpus_size: int = 50
    t_range: float = 10.0
    t_step: float = 1e-3
    # verdict tolerances
    slope_tol: float = 0.10
    r2_min: float = 0.99
    energy_slope_tol: float = 0.15
    rho_tol: float = 0.10
    remainder_spread: float = 10.0
    b_tol: float = 0.05
    alpha0_control: bool = True

    def params(self, c: float, **changes) -> ProblemParams:
        d = dict(dim=self.dim, s=self.s, mu=self.mu, alpha=self.alpha, p=self.p, c=float(c))
        d.update(changes)
        return ProblemParams(**d)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["c_list"] = [float(c) for c in self.c_list]
        return d

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Row:
    c: float
    lam: float
    m1: float
    kinetic: float
    d_star: float
    d_p: float
    pde_residual: float
    pohozaev_residual: float
    nehari_residual: float
    nu: float
    converged: bool
    iterations: int
    tail_fraction: float
    box_length: float

    @classmethod
    def from_result(cls, c: float, r: SolverResult) -> "Row":
        e = r.energy
        return cls(float(c), r.lam, r.m1, e.kinetic, e.d_star, e.d_p, r.pde_residual, r.pohozaev_residual,
                   r.nehari_residual, r.nu, bool(r.converged), int(r.iterations), r.field.tail_fraction(),
                   r.field.grid.box_length)


ROW_FIELDS = tuple(f.name for f in dc_fields(Row))


@dataclass
class SweepReport:
    campaign: str
    rows: list
    fits: dict
    verdicts: dict
    diagnostics: dict
    provenance: dict

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "campaign": self.campaign,
            "rows": [asdict(r) for r in self.rows],
            "fits": {k: (asdict(v) if v is not None else None) for k, v in self.fits.items()},
            "verdicts": dict(self.verdicts),
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }


class CampaignDataError(InsufficientDataError):
    """Too few converged rows for a fit; the partial report is attached."""

    def __init__(self, message, report: SweepReport):
        super().__init__(message)
        self.report = report


def _workers(cfg: CampaignConfig) -> int:
    env = os.environ.get("FCL_WORKERS")
    n = int(env) if env else cfg.workers
    return max(1, n)


def _provenance(cfg: CampaignConfig) -> dict:
    return {"config_sha256": cfg.digest(), "version": __version__, "seed": cfg.solver.seed}


def _grid_for(cfg: CampaignConfig, params: ProblemParams):
    if cfg.box_length is not None:
        return build_grid(cfg.dim, cfg.box_length, cfg.points_per_dim, "free")
    return auto_grid(params, cfg.points_per_dim, cfg.box_kappa)


def _solve_one(cfg: CampaignConfig, params: ProblemParams, seed_index: int, initial=None) -> SolverResult:
    solver_cfg = SolverConfig(**{**asdict(cfg.solver), "seed": cfg.solver.seed + 1000 * seed_index})
    grid = _grid_for(cfg, params)
    if initial is not None:
        initial = [transfer(initial, grid, params.c)]
    return ground_state(params, solver_cfg, grid=grid, points_per_dim=cfg.points_per_dim, initial=initial)


def sweep(cfg: CampaignConfig, c_list, **changes) -> list:
    """Ground states along ``c_list`` (in the given order).

    With continuation each point starts from the previous solution carried
    to the new box; otherwise the points are independent and solved on a
    pool of ``FCL_WORKERS`` threads.
    """
    c_list = [float(c) for c in c_list]
    plist = [cfg.params(c, **changes) for c in c_list]
    if cfg.solver.continuation:
        out, prev = [], None
        for i, pr in enumerate(plist):
            r = _solve_one(cfg, pr, i, None if prev is None else prev.field)
            out.append(r)
            prev = r
        return out
    with ThreadPoolExecutor(max_workers=_workers(cfg)) as pool:
        return list(pool.map(lambda ip: _solve_one(cfg, ip[1], ip[0]), enumerate(plist)))


def probe_upper_bound(params: ProblemParams, grid) -> float:
    """``J`` of the projected probe ``c * (unit Gaussian)``, an upper bound of ``m_1``."""
    g = build_grid(grid.dim, grid.box_length, grid.points_per_dim, "free")
    width = grid.box_length / 64.0
    v = Field.from_function(g, lambda *x: np.exp(-0.5 * sum(xi * xi for xi in x) / width ** 2))
    v = v.like(v.values * (params.c / v.l2_norm()))
    t = FiberMap.from_energy(energy(v, params), params).argmax()
    return energy(dilate_box(v, t), params).j_alpha


def _s_mu(cfg: CampaignConfig):
    m = cfg.points_per_dim
    g = build_grid(cfg.dim, float(m), m)
    return s_mu_probes(g, cfg.mu)


def _require_supercritical(cfg: CampaignConfig):
    if regime(cfg.dim, cfg.s, cfg.mu, cfg.p) != SUPERCRITICAL:
        raise RegimeError("this campaign needs an L2-supercritical exponent")


def _usable(rows):
    return [r for r in rows if r.converged and r.lam < 0]


def _energy_pairs(rows, a_mu, b):
    return [(r.c, r.m1 + a_mu * r.c ** b) for r in rows if r.m1 + a_mu * r.c ** b > 0]


def _slope_ok(fit: Optional[PowerFit], target: float, tol: float, r2_min: float | None = None) -> bool:
    if fit is None:
        return False
    ok = abs(fit.slope - target) <= tol * abs(target)
    if r2_min is not None:
        ok = ok and fit.r_squared >= r2_min
    return bool(ok)


def _maybe_fit(pairs) -> Optional[PowerFit]:
    try:
        return fit_powerlaw(pairs) if len(pairs) >= 2 else None
    except FclError:
        return None


def _finish(report: SweepReport, n_usable: int) -> SweepReport:
    if n_usable < MIN_FIT_ROWS:
        raise CampaignDataError(f"only {n_usable} converged rows (need {MIN_FIT_ROWS})", report)
    return report


# ---------------------------------------------------------------------------
# campaigns


def run_critical_campaign(cfg: CampaignConfig) -> SweepReport:
    """Fiber monotonicity at the L2-critical exponent over a trial corpus."""
    if regime(cfg.dim, cfg.s, cfg.mu, cfg.p) != CRITICAL:
        raise RegimeError("critical campaign needs p = 2 + (2s - mu)/N")
    c_list = list(cfg.c_list) or [0.05]
    box = cfg.box_length if cfg.box_length is not None else 32.0
    grid = build_grid(cfg.dim, box, cfg.points_per_dim)
    corpus = trial_corpus(grid, cfg.corpus_size, cfg.solver.seed)
    n_t = int(round(2 * cfg.t_range / cfg.t_step)) + 1
    ts = np.linspace(-cfg.t_range, cfg.t_range, n_t)
    rows, per_c = [], {}
    for c in c_list:
        params = cfg.params(c)
        fields = [f.like(f.values * (c / f.l2_norm())) for f in corpus]
        min_de, first_change = math.inf, None
        for i, f in enumerate(fields):
            fm = FiberMap.from_energy(energy(f, params), params)
            de = fm.de(ts)
            min_de = min(min_de, float(np.min(de)))
            bad = np.nonzero(de <= 0)[0]
            if bad.size and first_change is None:
                first_change = {"field": i, "t": float(ts[bad[0]])}
        bound = c_p_lower_bound(grid, params, 0, extra_fields=fields)
        check = critical_mass_check(params, bound.value)
        monotone = first_change is None
        per_c[repr(float(c))] = {
            "monotone": monotone, "min_de": min_de, "first_sign_change": first_change,
            "c_p_lower_bound": bound.value, "threshold": check.threshold, "satisfied": check.satisfied,
        }
        rows.append((c, monotone, check))
    verdicts = {
        "fiber_monotone": all(m for _, m, _ in rows),
        # a positive threshold (small-mass hypothesis with the estimated constant) must come with monotone fibers
        "mass_check_consistent": all(m or not ch.satisfied for _, m, ch in rows),
    }
    diag = {"per_c": per_c, "corpus_size": len(corpus), "t_points": n_t, "box_length": box}
    return SweepReport("critical", [], {}, verdicts, diag, _provenance(cfg))


def run_small_mass_campaign(cfg: CampaignConfig) -> SweepReport:
    """Multiplier and energy laws along a decreasing-``M_1`` ladder."""
    _require_supercritical(cfg)
    c_list = sorted(float(c) for c in (cfg.c_list or SMALL_MASS_LADDER))
    if len(c_list) < MIN_FIT_ROWS:
        raise InsufficientDataError(f"need at least {MIN_FIT_ROWS} masses, got {len(c_list)}")
    # continuation runs from the largest mass down
    results = sweep(cfg, c_list[::-1])[::-1]
    rows = [Row.from_result(c, r) for c, r in zip(c_list, results)]
    ex = derived_exponents(cfg.params(1.0))
    smu = _s_mu(cfg)
    a_mu = cfg.params(1.0).lower_coeff * smu.value ** (-(2 * cfg.dim - cfg.mu) / cfg.dim)
    good = _usable(rows)
    fits = {
        "lambda": _maybe_fit([(r.c, -r.lam) for r in good]),
        "energy": _maybe_fit(_energy_pairs(good, a_mu, ex.b)),
        # same laws over every row, converged or not (diagnostic only)
        "lambda_all_rows": _maybe_fit([(r.c, -r.lam) for r in rows if r.lam < 0]),
        "energy_all_rows": _maybe_fit(_energy_pairs(rows, a_mu, ex.b)),
    }
    probes = [probe_upper_bound(cfg.params(r.c), res.field.grid) for r, res in zip(rows, results)]
    verdicts = {
        "lambda_law": _slope_ok(fits["lambda"], ex.a - 2.0, cfg.slope_tol, cfg.r2_min),
        "energy_law": _slope_ok(fits["energy"], ex.a, cfg.energy_slope_tol),
        "probe_upper_bound": all(r.m1 <= pb + 1e-12 * abs(pb) for r, pb in zip(rows, probes)),
    }
    diag = {"a": ex.a, "b": ex.b, "target_lambda_slope": ex.a - 2.0, "s_mu": smu.value,
            "s_mu_spread": smu.spread, "a_mu": a_mu, "probe_energies": probes,
            "m1_over_c_a": [r.m1 / r.c ** ex.a for r in rows]}
    if cfg.alpha0_control and cfg.alpha != 0.0:
        ctrl = [Row.from_result(c, r) for c, r in zip(c_list, sweep(cfg, c_list[::-1], alpha=0.0)[::-1])]
        cgood = _usable(ctrl)
        fits["lambda_alpha0"] = _maybe_fit([(r.c, -r.lam) for r in cgood])
        fits["lambda_alpha0_all_rows"] = _maybe_fit([(r.c, -r.lam) for r in ctrl if r.lam < 0])
        verdicts["alpha0_lambda_law"] = _slope_ok(fits["lambda_alpha0"], ex.a - 2.0, cfg.slope_tol, cfg.r2_min)
        diag["alpha0_rows"] = [asdict(r) for r in ctrl]
    report = SweepReport("small-mass", rows, fits, verdicts, diag, _provenance(cfg))
    return _finish(report, len(good))


def run_large_mass_campaign(cfg: CampaignConfig) -> SweepReport:
    """Approach of ``-lambda c^2`` to its lower-critical limit along an increasing ladder."""
    _require_supercritical(cfg)
    c_list = sorted(float(c) for c in (cfg.c_list or LARGE_MASS_LADDER))
    if len(c_list) < 2:
        raise InsufficientDataError("need at least two masses")
    results = sweep(cfg, c_list)
    rows = [Row.from_result(c, r) for c, r in zip(c_list, results)]
    ex = derived_exponents(cfg.params(1.0))
    smu = _s_mu(cfg)
    n, mu = cfg.dim, cfg.mu
    lead = cfg.alpha * smu.value ** (-(2 * n - mu) / n)
    a_mu = cfg.params(1.0).lower_coeff * smu.value ** (-(2 * n - mu) / n)
    rho = [(-r.lam * r.c ** 2) / (lead * r.c ** ex.b) for r in rows]
    remainder = [abs(-r.lam * r.c ** 2 - lead * r.c ** ex.b) / r.c ** ex.a for r in rows]
    good_idx = [i for i, r in enumerate(rows) if r.converged and r.lam < 0]
    good = [rows[i] for i in good_idx]
    fits = {
        "lambda_c2": _maybe_fit([(r.c, -r.lam * r.c ** 2) for r in good]),
        "energy": _maybe_fit(_energy_pairs(good, a_mu, ex.b)),
        "lambda_c2_all_rows": _maybe_fit([(r.c, -r.lam * r.c ** 2) for r in rows if r.lam < 0]),
        "energy_all_rows": _maybe_fit(_energy_pairs(rows, a_mu, ex.b)),
    }
    verdicts = {"rho_limit": False, "remainder_bounded": False,
                "leading_exponent": _slope_ok(fits["lambda_c2"], ex.b, cfg.b_tol)}
    if good_idx:
        last = good_idx[-1]
        verdicts["rho_limit"] = bool(abs(rho[last] - 1.0) <= cfg.rho_tol)
        rem = [remainder[i] for i in good_idx]
        # bounded: never more than remainder_spread times its value at the smallest mass
        verdicts["remainder_bounded"] = bool(max(rem) <= cfg.remainder_spread * rem[0])
    diag = {"a": ex.a, "b": ex.b, "s_mu": smu.value, "s_mu_spread": smu.spread, "a_mu": a_mu,
            "rho": rho, "remainder_over_c_a": remainder}
    report = SweepReport("large-mass", rows, fits, verdicts, diag, _provenance(cfg))
    return _finish(report, len(good)) if len(c_list) >= MIN_FIT_ROWS else report


CAMPAIGNS = {
    "critical": run_critical_campaign,
    "small-mass": run_small_mass_campaign,
    "large-mass": run_large_mass_campaign,
}
