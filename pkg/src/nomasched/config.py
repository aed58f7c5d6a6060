"""YAML experiment configuration: parsing, validation and emission.

Recognised keys (all optional; omitted keys take the defaults shown)::

    bandwidth_hz: 10.0e6
    num_subbands: 128
    pmax_dbm: 46.0
    noise_psd_mw_per_hz: 4.0e-18
    cell_radius_m: 500.0
    carrier_hz: 2.0e9
    velocity_kmh: 50.0
    num_users: 15
    max_users_per_subband: 2
    scheduler: WNOPF            # or a list, e.g. [PF_NOMA, WNOPF]
    t_c: 100
    b_factor: 1.5
    ftpa_alpha: 0.4
    num_slots: 100
    num_drops: 20
    seed: 0
    services:                   # premium mode when non-empty
      - {name: basic, target_rate_bps: 5.0e6, num_users: 5}
      - {name: gold, target_rate_bps: 15.0e6, users: [5, 6, 7]}
    flags:
      clamp_weights: true
      w_floor: 0.0
      epsilon_rate: 1.0e-3
      subband_order: ascending  # or random
      cell_edge_percentile: 5.0
      first_slot_rule: weighted # weighted | all | none
      fading: ar1               # ar1 | sos
      min_distance_m: 35.0

Services given with ``num_users`` take consecutive user ids in file order.
"""

from __future__ import annotations

import re

import yaml

from .channel import CellGeometry
from .engine import ExperimentConfig
from .sched import SchedulerKind, ServiceClass

__all__ = ["ConfigError", "parse_config", "load_config", "config_from_dict", "config_to_dict",
           "emit_config"]


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1.0e6`` (unsigned exponent) as a float, as YAML 1.2 does."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                 |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                 |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                 |[-+]?\.(?:inf|Inf|INF)
                 |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


_FLOAT, _INT, _BOOL, _STR = "number", "integer", "boolean", "string"

# file key -> (type, target)
_TOP = {
    "bandwidth_hz": (_FLOAT, "geometry"),
    "num_subbands": (_INT, "geometry"),
    "pmax_dbm": (_FLOAT, "geometry"),
    "noise_psd_mw_per_hz": (_FLOAT, "geometry"),
    "cell_radius_m": (_FLOAT, "geometry"),
    "carrier_hz": (_FLOAT, "geometry"),
    "velocity_kmh": (_FLOAT, "config"),
    "num_users": (_INT, "config"),
    "max_users_per_subband": (_INT, "config"),
    "scheduler": (None, "config"),
    "t_c": (_INT, "config"),
    "b_factor": (_FLOAT, "config"),
    "ftpa_alpha": (_FLOAT, "config"),
    "num_slots": (_INT, "config"),
    "num_drops": (_INT, "config"),
    "seed": (_INT, "config"),
    "services": (None, "config"),
    "flags": (None, "config"),
}
_FLAGS = {
    "clamp_weights": _BOOL,
    "w_floor": _FLOAT,
    "epsilon_rate": _FLOAT,
    "subband_order": _STR,
    "cell_edge_percentile": _FLOAT,
    "first_slot_rule": _STR,
    "fading": _STR,
    "min_distance_m": _FLOAT,
}
_GEOMETRY_NAMES = {
    "bandwidth_hz": "bandwidth_hz",
    "num_subbands": "num_subbands",
    "pmax_dbm": "bs_power_dbm",
    "noise_psd_mw_per_hz": "noise_psd",
    "cell_radius_m": "radius_m",
    "carrier_hz": "carrier_hz",
    "min_distance_m": "min_distance_m",
}
_CONFIG_NAMES = {
    "velocity_kmh": "velocity_kmh",
    "num_users": "num_users",
    "max_users_per_subband": "max_users_per_subband",
    "t_c": "t_c",
    "b_factor": "b_factor",
    "ftpa_alpha": "ftpa_alpha",
    "num_slots": "num_slots",
    "num_drops": "num_drops",
    "seed": "seed",
    "clamp_weights": "clamp_weights",
    "w_floor": "w_floor",
    "epsilon_rate": "epsilon_rate",
    "subband_order": "subband_order",
    "cell_edge_percentile": "cell_edge_percentile",
    "first_slot_rule": "first_slot_rule",
    "fading": "fading",
}


def _check(value, kind, path):
    ok = {
        _FLOAT: isinstance(value, (int, float)) and not isinstance(value, bool),
        _INT: isinstance(value, int) and not isinstance(value, bool),
        _BOOL: isinstance(value, bool),
        _STR: isinstance(value, str),
    }[kind]
    if not ok:
        raise ConfigError(f"{path}: expected {kind}, got {type(value).__name__} {value!r}")
    return float(value) if kind == _FLOAT else value


def _services(raw):
    if not isinstance(raw, list):
        raise ConfigError("services: expected a list of service classes")
    out, next_user = [], 0
    for i, entry in enumerate(raw):
        path = f"services[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: expected a mapping")
        unknown = set(entry) - {"name", "target_rate_bps", "num_users", "users"}
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}: unknown key")
        name = _check(entry.get("name", f"class{i}"), _STR, f"{path}.name")
        if "target_rate_bps" not in entry:
            raise ConfigError(f"{path}.target_rate_bps: required")
        rate = _check(entry["target_rate_bps"], _FLOAT, f"{path}.target_rate_bps")
        if not rate > 0:
            raise ConfigError(f"{path}.target_rate_bps: must be positive")
        if ("users" in entry) == ("num_users" in entry):
            raise ConfigError(f"{path}: give exactly one of 'users' or 'num_users'")
        if "users" in entry:
            if not isinstance(entry["users"], list):
                raise ConfigError(f"{path}.users: expected a list of user ids")
            users = tuple(_check(u, _INT, f"{path}.users[{j}]") for j, u in enumerate(entry["users"]))
        else:
            n = _check(entry["num_users"], _INT, f"{path}.num_users")
            if n < 1:
                raise ConfigError(f"{path}.num_users: must be >= 1")
            users = tuple(range(next_user, next_user + n))
        next_user = max(users, default=next_user - 1) + 1
        out.append(ServiceClass(name, rate, users))
    return tuple(out)


def config_from_dict(raw) -> ExperimentConfig:
    """Validate a parsed mapping and build an :class:`ExperimentConfig`."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a mapping of keys to values")
    geo_kw, cfg_kw = {}, {}
    for key, value in raw.items():
        if key not in _TOP:
            raise ConfigError(f"{key}: unknown key")
        kind, target = _TOP[key]
        if key == "scheduler":
            names = value if isinstance(value, list) else [value]
            try:
                cfg_kw["schedulers"] = tuple(SchedulerKind.parse(_check(n, _STR, "scheduler"))
                                             for n in names)
            except ValueError as exc:
                raise ConfigError(f"scheduler: {exc}") from None
        elif key == "flags":
            if not isinstance(value, dict):
                raise ConfigError("flags: expected a mapping")
            for fk, fv in value.items():
                if fk not in _FLAGS:
                    raise ConfigError(f"flags.{fk}: unknown key")
                v = _check(fv, _FLAGS[fk], f"flags.{fk}")
                if fk in _GEOMETRY_NAMES:
                    geo_kw[_GEOMETRY_NAMES[fk]] = v
                else:
                    cfg_kw[_CONFIG_NAMES[fk]] = v
        elif key == "services":
            if value is not None:
                cfg_kw["services"] = _services(value)
        else:
            v = _check(value, kind, key)
            if target == "geometry":
                geo_kw[_GEOMETRY_NAMES[key]] = v
            else:
                cfg_kw[_CONFIG_NAMES[key]] = v
    try:
        geometry = CellGeometry(**geo_kw)
    except ValueError as exc:
        raise ConfigError(_geometry_path(str(exc))) from None
    try:
        return ExperimentConfig(geometry=geometry, **cfg_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _geometry_path(msg: str) -> str:
    inverse = {v: k for k, v in _GEOMETRY_NAMES.items()}
    field_name = msg.split(" ", 1)[0]
    key = inverse.get(field_name, field_name)
    if key == "min_distance_m":
        key = "flags.min_distance_m"
    return f"{key}: {msg}"


def parse_config(text: str) -> ExperimentConfig:
    """Parse YAML text into a validated config."""
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<root>: malformed YAML: {exc}") from None
    return config_from_dict(raw)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    geo = cfg.geometry
    return {
        "bandwidth_hz": geo.bandwidth_hz,
        "num_subbands": geo.num_subbands,
        "pmax_dbm": geo.bs_power_dbm,
        "noise_psd_mw_per_hz": geo.noise_psd,
        "cell_radius_m": geo.radius_m,
        "carrier_hz": geo.carrier_hz,
        "velocity_kmh": cfg.velocity_kmh,
        "num_users": cfg.num_users,
        "max_users_per_subband": cfg.max_users_per_subband,
        "scheduler": [k.value for k in cfg.schedulers],
        "t_c": cfg.t_c,
        "b_factor": cfg.b_factor,
        "ftpa_alpha": cfg.ftpa_alpha,
        "num_slots": cfg.num_slots,
        "num_drops": cfg.num_drops,
        "seed": cfg.seed,
        "services": [{"name": s.name, "target_rate_bps": s.target_rate, "users": list(s.users)}
                     for s in cfg.services],
        "flags": {
            "clamp_weights": cfg.clamp_weights,
            "w_floor": cfg.w_floor,
            "epsilon_rate": cfg.epsilon_rate,
            "subband_order": cfg.subband_order,
            "cell_edge_percentile": cfg.cell_edge_percentile,
            "first_slot_rule": cfg.first_slot_rule,
            "fading": cfg.fading,
            "min_distance_m": geo.min_distance_m,
        },
    }


def emit_config(cfg: ExperimentConfig) -> str:
    """YAML text that :func:`parse_config` maps back to ``cfg``."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
