"""Command line entry point: ``fchoquard solve|campaign|constants|check-field``.

Exit status is 0 when every verdict holds (or a solve converged), 2 when a
verdict fails and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .campaigns import CAMPAIGNS, CampaignDataError, _grid_for
from .checkpoint import load_field, save_field
from .config import build_config, check_key, parse_text
from .constants import (CRITICAL, SUBCRITICAL, c_p_lower_bound, critical_mass_check, derived_exponents,
                        regime, s_mu_probes)
from .errors import ConfigParseError, FclError
from .functionals import energy, lagrange_multiplier
from .grid import build_grid
from .report import to_json, write_report
from .solver import ground_state, residual

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2

# shortcut flags and the configuration key each one overrides
SHORTCUTS = {"dim": "dim", "s": "s", "mu": "mu", "alpha": "alpha", "p": "p", "c_list": "c_list",
             "points_per_dim": "points_per_dim", "box_length": "box_length", "seed": "solver.seed",
             "max_iters": "solver.max_iters", "multistart": "solver.multistart_count"}

log = logging.getLogger("fchoquard")


def _add_common(sp):
    sp.add_argument("--config", type=Path, help="key = value configuration file")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one configuration key (repeatable)")
    sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
    for flag in SHORTCUTS:
        sp.add_argument("--" + flag.replace("_", "-"), dest="opt_" + flag, default=None)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fchoquard", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("solve", help="one ground state (first entry of c_list)"))
    cp = sub.add_parser("campaign", help="run a verification campaign")
    cp.add_argument("name", choices=sorted(CAMPAIGNS))
    _add_common(cp)
    _add_common(sub.add_parser("constants", help="exponents, S_mu estimate and C_p lower bound"))
    cf = sub.add_parser("check-field", help="diagnostics of a field checkpoint")
    cf.add_argument("file", type=Path)
    cf.add_argument("--out", type=Path, default=None)
    return ap


def _load(args):
    raw = parse_text(args.config.read_text(encoding="utf-8")) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ConfigParseError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = (x.strip() for x in item.split("=", 1))
        check_key(k)
        raw[k] = v
    for flag, key in SHORTCUTS.items():
        v = getattr(args, "opt_" + flag)
        if v is not None:
            raw[key] = v
    if "box_length" in raw and "box_auto" in raw and args.opt_box_length is not None:
        del raw["box_auto"]  # an explicit --box-length wins over the file
    return build_config(raw)


def cmd_solve(args) -> int:
    cfg, _ = _load(args)
    c = cfg.c_list[0] if cfg.c_list else 1.0
    params = cfg.params(c)
    grid = _grid_for(cfg, params)
    res = ground_state(params, cfg.solver, grid=grid, points_per_dim=cfg.points_per_dim)
    args.out.mkdir(parents=True, exist_ok=True)
    body = {"params": params.as_dict(), "config": cfg.as_dict(), "result": res.summary(),
            "checkpoint": "solve_field.fcl", "version": __version__}
    (args.out / "solve.json").write_text(to_json(body), encoding="utf-8")
    save_field(args.out / "solve_field.fcl", res.field, params)
    print(f"c={c:g} lambda={res.lam:.10g} m1={res.m1:.10g} pde_residual={res.pde_residual:.3e} "
          f"pohozaev_residual={res.pohozaev_residual:.3e} converged={res.converged}")
    return EXIT_OK if res.converged else EXIT_VERDICT


def cmd_campaign(args) -> int:
    cfg, _ = _load(args)
    try:
        report = CAMPAIGNS[args.name](cfg)
    except CampaignDataError as exc:
        write_report(exc.report, args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    write_report(report, args.out)
    for k, v in report.verdicts.items():
        print(f"{k}: {'pass' if v else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_constants(args) -> int:
    cfg, _ = _load(args)
    c = cfg.c_list[0] if cfg.c_list else 1.0
    params = cfg.params(c)
    m = cfg.points_per_dim
    est = s_mu_probes(build_grid(cfg.dim, float(m), m), cfg.mu)
    ex = derived_exponents(params, est.value)
    body = {"params": params.as_dict(), "exponents": asdict(ex),
            "s_mu": {"value": est.value, "eps": list(est.eps), "quotients": list(est.quotients),
                     "spread": est.spread}}
    reg = regime(cfg.dim, cfg.s, cfg.mu, cfg.p)
    if reg != SUBCRITICAL:
        box = cfg.box_length if cfg.box_length is not None else 32.0
        bound = c_p_lower_bound(build_grid(cfg.dim, box, m), params, cfg.corpus_size, cfg.solver.seed)
        body["c_p_lower_bound"] = bound.value
        if reg == CRITICAL:
            chk = critical_mass_check(params, bound.value)
            body["critical_mass_check"] = {"threshold": chk.threshold, "satisfied": chk.satisfied}
    key = ",".join(f"{k}={v!r}" for k, v in params.as_dict().items())
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "constants.json").write_text(to_json({key: body}), encoding="utf-8")
    print(json.dumps({"gamma": ex.gamma_ps, "a": ex.a, "b": ex.b, "regime": ex.regime, "s_mu": est.value}))
    return EXIT_OK


def cmd_check_field(args) -> int:
    u, params, head = load_field(args.file)
    info = {"header": head, "mass": u.mass, "tail_fraction": u.tail_fraction(),
            "truncation_suspect": u.truncation_suspect()}
    if params is not None:
        e = energy(u, params)
        lam = lagrange_multiplier(u, params)
        info.update({"kinetic": e.kinetic, "d_star": e.d_star, "d_p": e.d_p, "j_alpha": e.j_alpha,
                     "pohozaev_residual": abs(e.p_alpha) / e.kinetic if e.kinetic else None,
                     "lambda": lam, "pde_residual": residual(u, lam, params)})
    text = to_json(info, timestamp=False)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "check-field.json").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "campaign": cmd_campaign, "constants": cmd_constants,
            "check-field": cmd_check_field}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (FclError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
