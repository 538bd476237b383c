"""Run configuration: INI files with a fixed schema.

Unknown sections or keys are rejected.  ``resolve`` returns the complete
configuration (defaults filled in) and ``config_hash`` a stable digest of it
that is written into every output header.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from pathlib import Path

from .errors import ConfigError


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(",", " ").split()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if str(text).strip().lower() in ("", "none") else float(text)


def _choice(*options):
    def parse(text):
        t = str(text).strip().lower()
        if t not in options:
            raise ValueError(f"{text!r} not in {options}")
        return t
    return parse


SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "kind": (_choice("stand_in", "tabulated"), "stand_in"),
        "mass": (float, 20963.2195),
        "de_cm1": (float, 200.0),
        "we_cm1": (float, 24.0),
        "re": (float, 9.8),
        "beta": (float, 0.35),
        "k0": (float, 3.0e-3),
        "r_cross": (float, 13.5),
        "ref_wavelength": (float, 576.0),
        "mu0": (float, 5.0),
        "mu_slope": (float, 0.0),
        "v1_file": (str, ""),
        "v2_file": (str, ""),
    },
    "grid": {
        "r_min": (float, 5.0),
        "r_max": (float, 55.0),
        "n_points": (int, 1024),
    },
    "solver": {
        "method": (_choice("global", "grid"), "global"),
        "n_blocks": (int, 2),
        "fd_order": (int, 8),
        "absorber_start": (float, 0.8),
        "absorber_strength": (float, 1e-3),
        "scaling_angle": (float, 0.3),
        "scaling_start": (float, 0.8),
        "tol": (float, 1e-10),
    },
    "semiclassical": {
        "chi": (float, -0.7853981633974483),
        "guess_intensity": (float, 1e4),
        "convention": (_choice("matrix_element", "field"), "matrix_element"),
        "mode": (_choice("two_branch", "diabatic"), "two_branch"),
    },
    "scan": {
        "origin_v": (int, 8),
        "i_min": (float, 1e5),
        "i_max": (float, 1e8),
        "n_intensity": (int, 7),
        "lambda_min": (float, 560.0),
        "lambda_max": (float, 590.0),
        "n_lambda": (int, 61),
        "cross_every": (int, 0),
    },
    "trace": {
        "origin_v": (int, 8),
        "v_plus": (_ints, "0 1 2 3"),
        "i_min": (float, 1e5),
        "i_max": (float, 1e8),
        "n_rungs": (int, 40),
        "bracket": (float, 0.5),
        "xtol": (float, 1e-4),
        "objective_floor": (float, 1e-16),
        "seed_lambda": (_opt_float, None),
        "window": (float, 120.0),
    },
    "pulse": {
        "path": (str, ""),
        "t_total_ps": (float, 12.0),
        "kinds": (lambda t: [_choice("adiabatic", "naive")(x) for x in str(t).replace(",", " ").split()],
                  "adiabatic naive"),
        "carrier": (_choice("path", "fixed"), "path"),
        "points_per_cycle": (int, 64),
        "sample_stride": (int, 16),
    },
    "propagate": {
        "path": (str, ""),
        "kinds": (lambda t: [_choice("adiabatic", "naive")(x) for x in str(t).replace(",", " ").split()],
                  "adiabatic naive"),
        "initial": (_ints, "7 8 9"),
        "coherent": (_bool, False),
        "t_total_ps": (float, 12.0),
        "points_per_cycle": (int, 64),
        "absorber_start": (float, 0.8),
        "absorber_strength": (float, 1e-3),
        "scheme": (_choice("yoshida4", "strang"), "yoshida4"),
        "v_max": (int, 12),
        "width_samples": (int, 41),
        "energy_stride": (int, 64),
    },
    "output": {
        "dir": (str, "out"),
    },
}


def _parse(section: str, key: str, raw):
    parser, _ = SCHEMA[section][key]
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def defaults() -> dict:
    return {s: {k: _parse(s, k, d) if isinstance(d, str) and p is not str else d
                for k, (p, d) in keys.items()} for s, keys in SCHEMA.items()}


def resolve(overrides: dict | None = None) -> dict:
    """Defaults updated with ``overrides`` ({section: {key: raw value}})."""
    cfg = defaults()
    bad = []
    for section, keys in (overrides or {}).items():
        if section not in SCHEMA:
            bad.append(f"[{section}]")
            continue
        for key, raw in keys.items():
            if key not in SCHEMA[section]:
                bad.append(f"[{section}] {key}")
                continue
            cfg[section][key] = _parse(section, key, raw)
    if bad:
        raise ConfigError("unknown configuration keys: " + ", ".join(bad))
    return cfg


def load(path: str | Path | None) -> dict:
    if path is None:
        return resolve()
    p = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with p.open() as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{p}: {exc}") from None
    return resolve({s: dict(parser.items(s)) for s in parser.sections()})


def _jsonable(cfg: dict) -> dict:
    return json.loads(json.dumps(cfg, sort_keys=True, default=str))


def config_hash(cfg: dict) -> str:
    blob = json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dump_ini(cfg: dict) -> str:
    """Resolved snapshot in INI form (lists space separated, None as empty)."""
    lines = []
    for section in SCHEMA:
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            val = cfg[section][key]
            if isinstance(val, list):
                val = " ".join(str(x) for x in val)
            elif val is None:
                val = ""
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
