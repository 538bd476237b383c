"""Command line pipeline: scan -> trace -> pulse -> propagate -> report.

Each subcommand reads an INI config (unknown keys are rejected), writes a
resolved snapshot next to its outputs, and stamps every output file with the
config hash.  Exit codes: 0 ok, 2 config error, 3 convergence failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from . import io
from .errors import ConfigError, ConvergenceError, ModelError, NoCoincidence, ZwrError
from .floquet import Method, ResonanceTracker, SolverSettings, width_surface
from .model import (LinearDipole, MolecularModel, RadialGrid, StandInParameters, TabulatedPotential,
                    stand_in_model)
from .pathfinder import evaluate_path_on_states, trace_path
from .pulse import default_step, frequency_shift, power_spectrum, spectral_width, synthesize
from .semiclassical import guess_zwr_wavelengths, proximity, wavelength_ceiling
from .tdse import (AbsorberSettings, adiabatic_survival_estimate, attach_reference, effective_energy,
                   propagate, sample_adiabatic_states)
from .units import UNITS

log = logging.getLogger("zwrcool")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4


# --------------------------------------------------------------------------
# config -> objects
# --------------------------------------------------------------------------
def build_model(cfg: dict) -> MolecularModel:
    m, g = cfg["model"], cfg["grid"]
    grid = RadialGrid(g["r_min"], g["r_max"], g["n_points"])
    if m["kind"] == "stand_in":
        params = StandInParameters(mass=m["mass"], de_cm1=m["de_cm1"], we_cm1=m["we_cm1"], re=m["re"],
                                   beta=m["beta"], k0=m["k0"], r_cross=m["r_cross"],
                                   ref_wavelength=m["ref_wavelength"], mu0=m["mu0"],
                                   mu_slope=m["mu_slope"])
        return stand_in_model(params, grid)
    if not (m["v1_file"] and m["v2_file"]):
        raise ConfigError("[model] kind = tabulated needs v1_file and v2_file")
    v1 = TabulatedPotential.from_file(m["v1_file"])
    v2 = TabulatedPotential.from_file(m["v2_file"])
    return MolecularModel(m["mass"], v1, v2, LinearDipole(m["mu0"], m["mu_slope"], m["re"]), grid)


def build_settings(cfg: dict) -> SolverSettings:
    s = cfg["solver"]
    return SolverSettings(n_blocks=s["n_blocks"], fd_order=s["fd_order"],
                          absorber_start=s["absorber_start"], absorber_strength=s["absorber_strength"],
                          scaling_angle=s["scaling_angle"], scaling_start=s["scaling_start"], tol=s["tol"])


def _meta(cfg: dict, kind: str) -> dict:
    return {"zwrcool": __version__, "config_hash": cfgmod.config_hash(cfg), "content": kind}


def _snapshot(cfg: dict, out: Path, name: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"resolved_{name}.ini").write_text(
        f"# config_hash: {cfgmod.config_hash(cfg)}\n" + cfgmod.dump_ini(cfg))


def _ladder(i_min: float, i_max: float, n: int) -> np.ndarray:
    return np.array([i_min]) if n <= 1 else np.geomspace(i_min, i_max, n)


def _path_file(cfg: dict, section: str, out: Path) -> Path:
    p = cfg[section]["path"]
    if p:
        return Path(p)
    t = cfg["trace"]
    return out / (io.path_stem(t["origin_v"], t["v_plus"][0]) + ".json")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------
def cmd_scan(cfg: dict, out: Path, workers: int) -> int:
    model, settings = build_model(cfg), build_settings(cfg)
    s = cfg["scan"]
    intensities = _ladder(s["i_min"], s["i_max"], s["n_intensity"])
    lams = np.linspace(s["lambda_min"], s["lambda_max"], s["n_lambda"]) if s["n_lambda"] > 1 \
        else np.array([s["lambda_min"]])
    surf = width_surface(model, intensities, lams, s["origin_v"], cfg["solver"]["method"], settings,
                         workers=workers, cross_every=s["cross_every"])
    meta = _meta(cfg, "width surface")
    rows = []
    for i, inten in enumerate(intensities):
        for j, lam in enumerate(lams):
            e = surf.energy[i, j]
            rows.append((inten, lam, e.real, -2.0 * e.imag, bool(surf.converged[i, j])))
    io.write_csv(out / "scan.csv", ["intensity_wcm2", "wavelength_nm", "re_energy_hartree",
                                    "gamma_hartree", "converged"], rows, meta)
    g = surf.gamma
    ok = np.isfinite(g)
    if not ok.any():
        raise ConvergenceError("every cell of the scan failed")
    med = float(np.median(g[ok]))
    floor = 1e-16
    depth = float(np.log10(med / max(float(np.min(g[ok])), floor)))
    io.write_json(out / "scan.json", {**meta, "n_cells": int(g.size), "n_failed": int((~ok).sum()),
                                      "median_gamma": med, "min_gamma": float(np.min(g[ok])),
                                      "decades_below_median": depth,
                                      "errors": {f"{k[0]},{k[1]}": v for k, v in sorted(surf.errors.items())},
                                      "cross_checks": surf.cross_checks})
    log.info("scan: %d cells, min gamma %.3e, %.1f decades below median", g.size, np.min(g[ok]), depth)
    return EXIT_OK


def _trace_one(args):
    cfg, vp, seed = args
    model, settings = build_model(cfg), build_settings(cfg)
    t = cfg["trace"]
    path = trace_path(model, t["origin_v"], vp, _ladder(t["i_min"], t["i_max"], t["n_rungs"]), seed,
                      cfg["solver"]["method"], settings, bracket=t["bracket"], xtol=t["xtol"],
                      floor=t["objective_floor"])
    path.meta["seed_lambda"] = seed
    return path


def cmd_trace(cfg: dict, out: Path, workers: int) -> int:
    model = build_model(cfg)
    t, sc = cfg["trace"], cfg["semiclassical"]
    vps = sorted(set(t["v_plus"]))
    if t["seed_lambda"] is not None:
        if len(vps) != 1:
            raise ConfigError("[trace] seed_lambda applies to a single v_plus label")
        ceiling = wavelength_ceiling(model, t["origin_v"], sc["guess_intensity"])
        if not ceiling - t["window"] < t["seed_lambda"] < ceiling:
            raise NoCoincidence(f"seed {t['seed_lambda']} nm lies outside the search window "
                                f"({ceiling - t['window']:.2f}, {ceiling:.2f}) nm")
        seeds = {vps[0]: t["seed_lambda"]}
    else:
        guesses, ceiling = guess_zwr_wavelengths(model, t["origin_v"], max(vps), sc["guess_intensity"],
                                                 t["window"], chi=sc["chi"])
        seeds = {vp: lam for vp, lam in guesses if vp in vps}
    meta = _meta(cfg, "ZWR path")
    rows = []
    for vp in vps:
        d = []
        for w in (1, 2):
            try:
                d.append(proximity(model, seeds[vp], t["origin_v"], vp, w, sc["guess_intensity"], sc["chi"]))
            except ZwrError:
                d.append(float("nan"))
        rows.append((vp, seeds[vp], d[0], d[1]))
    io.write_csv(out / "guesses.csv", ["v_plus", "lambda_guess_nm", "d_w1", "d_w2"], rows,
                 {**meta, "ceiling_nm": ceiling})
    jobs = [(cfg, vp, seeds[vp]) for vp in vps]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            paths = list(ex.map(_trace_one, jobs))
    else:
        paths = [_trace_one(j) for j in jobs]
    fits = {}
    for path in sorted(paths, key=lambda p: p.v_plus):
        io.write_path(out, path, meta)
        fits[str(path.v_plus)] = {"a_nm_per_1e8": path.fit.a, "b_nm": path.fit.b, "rms_nm": path.fit.rms,
                                  "max_gamma": float(path.gammas.max())}
        log.info("path v+=%d: a=%.6f b=%.5f rms=%.2e", path.v_plus, path.fit.a, path.fit.b, path.fit.rms)
    io.write_json(out / "trace.json", {**meta, "ceiling_nm": ceiling, "fits": fits})
    return EXIT_OK


def _read_path(p: Path):
    if not p.exists():
        raise FileNotFoundError(f"path file {p} not found; run 'trace' first or set path =")
    return io.read_path(p)


def cmd_pulse(cfg: dict, out: Path, workers: int) -> int:
    pc = cfg["pulse"]
    path = _read_path(_path_file(cfg, "pulse", out))
    meta = _meta(cfg, "pulse")
    summary = {}
    for kind in pc["kinds"]:
        dt = default_step(path.fit, path.max_intensity, pc["points_per_cycle"])
        p = synthesize(path, pc["t_total_ps"], kind, dt=dt, carrier=pc["carrier"])
        s = p.samples()
        k = pc["sample_stride"]
        io.write_json(out / f"pulse_{kind}.json", {**meta, **p.header(), "samples": f"pulse_{kind}.csv"})
        io.write_csv(out / f"pulse_{kind}.csv", ["t_au", "intensity_wcm2", "envelope_au", "phase_rad",
                                                  "field_au"],
                     zip(*(s[c][::k] for c in ("t", "intensity", "envelope", "phase", "field"))), meta)
        freq, spec = power_spectrum(p)
        w0 = float(p.omega_eff(p.envelope_law.t_half))
        band = (freq > 0.95 * w0) & (freq < 1.05 * w0)
        io.write_csv(out / f"spectrum_{kind}.csv", ["omega_au", "density"], zip(freq[band], spec[band]), meta)
        t, rel_eff, rel_star = frequency_shift(p)
        io.write_csv(out / f"shift_{kind}.csv", ["t_ps", "shift_eff", "shift_star"],
                     zip(UNITS.au_to_ps(t[::k]), rel_eff[::k], rel_star[::k]), meta)
        summary[kind] = {"width_20db_au": spectral_width(freq, spec), "peak_omega_au": float(freq[np.argmax(spec)]),
                         "max_abs_shift": float(np.max(np.abs(rel_eff))), "dt_au": p.dt}
    io.write_json(out / "pulse.json", {**meta, "kinds": summary})
    return EXIT_OK


def _pulse_for(cfg: dict, path, kind: str):
    pc = cfg["propagate"]
    dt = default_step(path.fit, path.max_intensity, pc["points_per_cycle"])
    return synthesize(path, pc["t_total_ps"], kind, dt=dt, carrier=cfg["pulse"]["carrier"])


def cmd_propagate(cfg: dict, out: Path, workers: int) -> int:
    model, settings = build_model(cfg), build_settings(cfg)
    pc = cfg["propagate"]
    path = _read_path(_path_file(cfg, "propagate", out))
    levels = pc["initial"]
    meta = _meta(cfg, "propagation")
    absorber = AbsorberSettings(pc["absorber_start"], pc["absorber_strength"])
    tracker = ResonanceTracker(model, method=Method(cfg["solver"]["method"]), settings=settings)
    table = evaluate_path_on_states(path, levels, tracker=tracker)
    report = {"origin_v": path.origin_v, "v_plus": path.v_plus, "initial": levels, "runs": {}}
    for kind in pc["kinds"]:
        pulse = _pulse_for(cfg, path, kind)
        run = propagate(model, pulse, levels, basis=None, coherent=pc["coherent"], absorber=absorber,
                        v_max=pc["v_max"], scheme=pc["scheme"])
        tr = run.trace
        cols = ["t_ps"] + [f"pop_v{v}" for v in tr.levels] + ["remainder", "dissociated"]
        rows = (np.column_stack([tr.times_ps, tr.populations, tr.remainder, tr.dissociated])).tolist()
        io.write_csv(out / f"populations_{kind}.csv", cols, rows, meta)
        est = adiabatic_survival_estimate(table, pulse, levels, tr.times)
        io.write_csv(out / f"survival_estimate_{kind}.csv", ["t_ps"] + [f"p_v{v}" for v in levels],
                     np.column_stack([tr.times_ps] + [est[v] for v in levels]).tolist(), meta)
        final = {v: float(tr.population(v)[-1]) for v in levels}
        surv = {v: float(tr.survival(v)[-1]) for v in levels} if not pc["coherent"] else {}
        run_rep = {"final_populations": final, "survival": surv,
                   "dissociated": float(tr.dissociated[-1]), "dt_au": run.dt,
                   "n_steps": run.meta["n_steps"], "scheme": pc["scheme"], "pulse": pulse.header()}
        if surv and path.origin_v in surv:
            others = [surv[v] for v in levels if v != path.origin_v]
            if others:
                run_rep["contrast"] = surv[path.origin_v] / max(max(others), 1e-300)
        if not pc["coherent"]:
            if path.origin_v in levels:
                samples = sample_adiabatic_states(model, pulse, path.origin_v, pc["width_samples"], tracker)
            for v in levels:
                ee = effective_energy(run, v, stride=pc["energy_stride"])
                refcols = []
                if v == path.origin_v:
                    attach_reference(ee, samples, pulse)
                    refcols = [ee.reference_rolling.real, ee.reference_rolling.imag]
                    run_rep["eeff_distance_to_reference_hartree"] = ee.distance_to_reference()
                run_rep.setdefault("eeff_max_imag_hartree", {})[v] = ee.max_imag()
                io.write_csv(out / f"eeff_{kind}_v{v}.csv",
                             ["t_ps", "re_hartree", "im_hartree", "rolling_re", "rolling_im"]
                             + (["reference_rolling_re", "reference_rolling_im"] if refcols else []),
                             np.column_stack([UNITS.au_to_ps(ee.times), ee.energy.real, ee.energy.imag,
                                              ee.rolling.real, ee.rolling.imag] + refcols).tolist(), meta)
        report["runs"][kind] = run_rep
        log.info("propagate %s: final %s", kind, {v: round(p, 4) for v, p in final.items()})
    io.write_json(out / "filtration_report.json", {**meta, **report})
    io.write_json(out / "manifest_propagate.json", {**meta, "grid": cfg["grid"], "propagate": pc,
                                                    "path_fit": path.fit.__dict__})
    return EXIT_OK


def _partner_d(model, lam, v, vp, intensity, chi) -> float:
    """|d| of a level against its semiclassical partner; missing partners count as far (1)."""
    try:
        return min(abs(proximity(model, lam, v, vp, w, intensity, chi)) for w in (1, 2))
    except ZwrError:
        return 1.0


def cmd_report(cfg: dict, out: Path, workers: int) -> int:
    """Rank traced paths by semiclassical proximity and by neighbour widths."""
    model, settings = build_model(cfg), build_settings(cfg)
    t, sc = cfg["trace"], cfg["semiclassical"]
    files = sorted(out.glob(f"path_v{t['origin_v']}_vp*.json"))
    if not files:
        raise FileNotFoundError(f"no path files in {out}; run 'trace' first")
    meta = _meta(cfg, "path ranking")
    neighbours = [v for v in cfg["propagate"]["initial"] if v != t["origin_v"]]
    tracker = ResonanceTracker(model, method=Method(cfg["solver"]["method"]), settings=settings)
    rows, ranking = [], {}
    for f in files:
        path = io.read_path(f)
        table = evaluate_path_on_states(path, neighbours, tracker=tracker)
        d = {v: _partner_d(model, path.fit.b, v, path.v_plus + v - path.origin_v, sc["guess_intensity"],
                           sc["chi"]) for v in neighbours}
        g = {v: table.min_gamma(v) for v in neighbours}
        rows.append([path.v_plus] + [d[v] for v in neighbours] + [g[v] for v in neighbours])
        ranking[path.v_plus] = {"min_d": min(d.values()), "min_neighbour_gamma": min(g.values())}
    by_d = sorted(ranking, key=lambda k: -ranking[k]["min_d"])
    by_g = sorted(ranking, key=lambda k: -ranking[k]["min_neighbour_gamma"])
    io.write_csv(out / "ranking.csv", ["v_plus"] + [f"d_v{v}" for v in neighbours]
                 + [f"min_gamma_v{v}" for v in neighbours], rows, meta)
    io.write_json(out / "report.json", {**meta, "paths": ranking, "rank_by_d": by_d, "rank_by_gamma": by_g,
                                        "best_by_d": by_d[0], "best_by_gamma": by_g[0],
                                        "rankings_agree": by_d[0] == by_g[0]})
    log.info("report: best path by d %s, by neighbour width %s", by_d[0], by_g[0])
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "trace": cmd_trace, "pulse": cmd_pulse, "propagate": cmd_propagate,
            "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI configuration file")
    common.add_argument("-o", "--out", help="output directory (overrides [output] dir)")
    common.add_argument("-j", "--workers", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: available CPUs)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")
    parser = argparse.ArgumentParser(prog="zwrcool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"scan": "width surface Gamma(I, lambda)", "trace": "semiclassical guesses and ZWR paths",
             "pulse": "control pulses, spectra and frequency shifts",
             "propagate": "wavepacket runs and filtration report", "report": "rank paths"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else
                                                logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config)
        out = Path(args.out or cfg["output"]["dir"])
        _snapshot(cfg, out, args.command)
        return COMMANDS[args.command](cfg, out, max(1, args.workers))
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ZwrError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
