"""``key = value`` experiment configuration files.

One assignment per line, ``#`` starts a comment. Recognised keys::

    dim s mu alpha p c_list box_length box_auto points_per_dim campaign
    solver.<field>     any SolverConfig field
    campaign.<field>   campaign tolerances and corpus settings

``c_list`` is a comma-separated list. ``box_auto`` is ``true`` (default
factor) or a number used as the box factor; it is exclusive with
``box_length``. Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import fields as dc_fields
from pathlib import Path

from .campaigns import CAMPAIGNS, CampaignConfig
from .errors import ConfigParseError
from .solver import SolverConfig

TOP_KEYS = ("dim", "s", "mu", "alpha", "p", "c_list", "box_length", "box_auto", "points_per_dim", "campaign")
SOLVER_KEYS = tuple(f.name for f in dc_fields(SolverConfig))
CAMPAIGN_KEYS = ("workers", "corpus_size", "t_range", "t_step", "slope_tol", "r2_min", "energy_slope_tol",
                 "rho_tol", "remainder_spread", "b_tol", "alpha0_control")
_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ConfigParseError(f"{key}: expected a boolean, got {text!r}")


def _coerce(value: str, proto, key: str):
    try:
        if isinstance(proto, bool):
            return _bool(value, key)
        if isinstance(proto, int):
            return int(value)
        return float(value)
    except ValueError:
        raise ConfigParseError(f"{key}: cannot parse {value!r}") from None


def parse_text(text: str) -> dict:
    """Raw ``{key: value-string}`` with duplicates and unknown keys rejected."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        check_key(key)
        if key in out:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def check_key(key: str):
    if key in TOP_KEYS:
        return
    head, _, tail = key.partition(".")
    if head == "solver" and tail in SOLVER_KEYS:
        return
    if head == "campaign" and tail in CAMPAIGN_KEYS:
        return
    raise ConfigParseError(f"unknown configuration key {key!r}")


def build_config(raw: dict):
    """``(CampaignConfig, campaign name or None)`` from raw key/value strings."""
    cfg = CampaignConfig()
    solver = {}
    name = None
    if "box_length" in raw and "box_auto" in raw:
        raise ConfigParseError("box_length and box_auto are exclusive")
    for key, value in raw.items():
        check_key(key)
        if key == "campaign":
            if value not in CAMPAIGNS:
                raise ConfigParseError(f"unknown campaign {value!r}")
            name = value
        elif key == "c_list":
            try:
                cfg.c_list = tuple(float(v) for v in value.split(",") if v.strip())
            except ValueError:
                raise ConfigParseError(f"c_list: cannot parse {value!r}") from None
        elif key == "box_length":
            cfg.box_length = _coerce(value, 0.0, key)
        elif key == "box_auto":
            try:
                cfg.box_kappa = float(value)
            except ValueError:
                if not _bool(value, key):
                    raise ConfigParseError("box_auto = false needs box_length") from None
            cfg.box_length = None
        elif key.startswith("solver."):
            f = key.split(".", 1)[1]
            solver[f] = _coerce(value, getattr(SolverConfig(), f), key)
        elif key.startswith("campaign."):
            f = key.split(".", 1)[1]
            setattr(cfg, f, _coerce(value, getattr(cfg, f), key))
        else:
            setattr(cfg, key, _coerce(value, getattr(cfg, key), key))
    try:
        cfg.solver = SolverConfig(**solver)
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(str(exc)) from None
    return cfg, name


def load_config(path):
    return build_config(parse_text(Path(path).read_text(encoding="utf-8")))
