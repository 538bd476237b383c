"""CSV/JSON writers and readers.  Every file carries the config hash."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .pathfinder import PathFit, PathPoint, ZwrPath
from .model import FieldPoint


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | Path, columns: list[str], rows, meta: dict | None = None) -> Path:
    """Header comment lines '# key: value' followed by a plain CSV table."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return p


def read_csv(path: str | Path) -> tuple[dict, list[str], np.ndarray]:
    meta, lines = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    data = np.array([[float(x) for x in r] for r in reader if r], float)
    return meta, columns, data.reshape(-1, len(columns))


def _default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


def write_json(path: str | Path, payload: dict) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")
    return p


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


PATH_COLUMNS = ["intensity_wcm2", "wavelength_nm", "gamma_hartree", "re_energy_hartree"]


def path_stem(origin_v: int, v_plus: int) -> str:
    return f"path_v{origin_v}_vp{v_plus}"


def write_path(out_dir: str | Path, path: ZwrPath, meta: dict) -> tuple[Path, Path]:
    stem = Path(out_dir) / path_stem(path.origin_v, path.v_plus)
    fit = path.require_fit()
    header = {**meta, "origin_v": path.origin_v, "v_plus": path.v_plus, "a_nm_per_1e8": fit.a,
              "b_nm": fit.b, "rms_nm": fit.rms, "n_points": len(path.points),
              "samples": stem.name + ".csv", **path.meta}
    j = write_json(stem.with_suffix(".json"), header)
    c = write_csv(stem.with_suffix(".csv"), PATH_COLUMNS, path.rows(), meta)
    return j, c


def read_path(json_path: str | Path) -> ZwrPath:
    """Rebuild a path (without resonance vectors) from its JSON header and CSV."""
    jp = Path(json_path)
    head = read_json(jp)
    _, _, data = read_csv(jp.parent / head["samples"])
    points = [PathPoint(FieldPoint(float(i), float(lam)), float(g), None, 0, float(e))
              for i, lam, g, e in data]
    path = ZwrPath(int(head["origin_v"]), int(head["v_plus"]), points,
                   PathFit(float(head["a_nm_per_1e8"]), float(head["b_nm"]), float(head["rms_nm"])))
    return path
