"""Command line front end: ``stbands {capacitance,bands,validate,perturb,gaps}``.

Every subcommand reads one JSON configuration (``--config``), writes its
outputs into ``--out`` and records the fully resolved configuration, defaults
included, in ``report.json``.

Exit codes: 0 success, 2 configuration or I/O error, 3 degenerate point not
found, 4 a ``--check`` tolerance failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bands import (
    DegeneracyNotFound,
    GapKind,
    detect_gaps,
    load_bands_csv,
    sweep,
    write_bands_csv,
    write_gaps_json,
)
from .capacitance import (
    CapacitanceAssembler,
    CapacitanceError,
    ValidationError,
    save_capacitance,
    write_capacitance_csv,
)
from .green import GreenSumConfig, UnsupportedLimitError
from .hill import ModulationSpec, build_hill
from .lattice import (
    BrillouinPath,
    ConfigurationError,
    GeometryError,
    Lattice,
    LatticeKind,
    ResonatorGeometry,
    brillouin_path,
    chain_path,
    geometry_from_dict,
    honeycomb_geometry,
    load_geometry,
    make_lattice,
    square_trimer_geometry,
    trimer_chain_geometry,
)
from .perturbation import ClassificationUnsupported, analyze, classify
from .svg import band_plot

log = logging.getLogger("stbands")

EXIT_OK, EXIT_CONFIG, EXIT_SEARCH, EXIT_CHECK = 0, 2, 3, 4

DEFAULTS = {
    "lattice": {"kind": "chain", "scale": 1.0},
    "geometry": {"preset": "trimer_chain", "radius": 0.1, "intra_gap": 0.05, "period": 1.0},
    "modulation": {"epsilon": 0.0, "Omega": 0.3, "K": 1e-3, "rho_phases": None, "kappa_phases": None},
    "method": "floquet",
    "path": {"samples": 101},
    "green": asdict(GreenSumConfig()),
    "tolerances": {"ode": 1e-11, "im_threshold": 1e-6, "omega_resolution": None,
                   "tol_deg": None, "hermitian": 1e-10},
    "validate": {"protocols": ["synthetic", "reference"], "eps_grid": [0.005, 0.01, 0.02, 0.04, 0.08],
                 "table_tolerance": 0.2, "slope_min": 1.9, "fit_tolerance": 0.02,
                 "calibration": {"Omega": 0.3, "alpha_deg": 2.395, "omega0": 0.12, "radius": 0.1,
                                 "period": 1.0, "gap_bracket": [0.03, 0.09]}},
    "perturb": {"alpha": None},
    "gaps": {"csv": None, "alpha_window": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "geometry":
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path) -> dict:
    if path is None:
        doc = {}
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{p}: invalid JSON ({exc})") from exc
        doc["_base"] = str(p.parent)
    cfg = _merge(DEFAULTS, {k: v for k, v in doc.items() if k != "geometry"})
    if "geometry" in doc:
        geo = doc["geometry"]
        cfg["geometry"] = geo if isinstance(geo, dict) else {"file": geo}
    return cfg


# -- config resolution ---------------------------------------------------------


def _resolve_file(cfg, name) -> Path:
    p = Path(name)
    if not p.is_absolute() and "_base" in cfg:
        p = Path(cfg["_base"]) / p
    return p


def build_geometry(cfg) -> tuple[Lattice, ResonatorGeometry]:
    g = cfg["geometry"]
    if "file" in g:
        p = _resolve_file(cfg, g["file"])
        if not p.exists():
            raise ConfigurationError(f"geometry file not found: {p}")
        return load_geometry(p)
    lat_cfg = dict(cfg["lattice"])
    if "generators" in lat_cfg:
        lat_cfg["kind"] = "custom"
    if "resonators" in g:
        return geometry_from_dict({"lattice": lat_cfg, "resonators": g["resonators"]})
    lat = Lattice.from_dict(lat_cfg)
    preset = g.get("preset", "trimer_chain")
    if preset == "trimer_chain":
        if lat.kind is not LatticeKind.CHAIN:
            raise ConfigurationError("trimer_chain needs a chain lattice")
        period = float(g.get("period", lat.cell_measure))
        lat = make_lattice("chain", period)
        geo = trimer_chain_geometry(float(g.get("radius", 0.1)), float(g.get("intra_gap", 0.05)), period)
    elif preset == "honeycomb":
        geo = honeycomb_geometry(float(g.get("R", 0.1)), float(g.get("radius", 0.1)), lat.scale)
    elif preset == "square_trimer":
        geo = square_trimer_geometry(float(g.get("radius", 0.1)), float(g.get("intra_gap", 0.05)), lat.scale)
    else:
        raise ConfigurationError(f"unknown geometry preset {preset!r}")
    geo.check(lat)
    return lat, geo


def build_path(cfg, lat: Lattice) -> BrillouinPath:
    p = cfg["path"]
    if "alphas" in p:
        a = np.asarray(p["alphas"], dtype=float)
        if a.ndim == 1:
            a = np.column_stack([a, np.zeros_like(a)])
        arc = a[:, 0].copy() if lat.dim == 1 else np.concatenate(
            [[0.0], np.cumsum(np.linalg.norm(np.diff(a, axis=0), axis=1))])
        return BrillouinPath([], a, arc, [])
    if "waypoints" in p:
        return brillouin_path(lat, p["waypoints"], int(p.get("samples_per_leg", 20)))
    if lat.dim == 1:
        return chain_path(lat, int(p.get("samples", 101)))
    raise ConfigurationError("2D lattices need path.waypoints or path.alphas")


def build_modulation(cfg) -> ModulationSpec:
    return ModulationSpec.from_dict(cfg["modulation"])


def build_green(cfg) -> GreenSumConfig:
    try:
        return GreenSumConfig(**cfg["green"])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"green: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items() if not k.startswith("_")}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _write_report(out: Path, command: str, cfg: dict, args, result: dict, started: float) -> None:
    report = {
        "command": command,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": args.seed,
        "threads": args.threads,
        "elapsed_s": round(time.time() - started, 3),
        "config": cfg,
        "result": result,
    }
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2))


# -- subcommands -----------------------------------------------------------------


def cmd_capacitance(cfg, args, out: Path) -> tuple[int, dict]:
    lat, geo = build_geometry(cfg)
    path = build_path(cfg, lat)
    asm = CapacitanceAssembler(geo, lat, build_green(cfg))
    tol = float(cfg["tolerances"]["hermitian"])
    mats, rows, failed = [], [], False
    for k, a in enumerate(path.samples):
        try:
            C = asm(a)
        except (UnsupportedLimitError, CapacitanceError) as exc:
            log.warning("alpha=%s skipped: %s", a.tolist(), exc)
            rows.append({"alpha": a.tolist(), "error": str(exc)})
            continue
        save_capacitance(out / f"capacitance_{k:04d}.json", C)
        mats.append(C)
        row = {"alpha": a.tolist(), "min_eigenvalue": C.min_eigenvalue,
               "hermiticity_residual": C.hermiticity_residual}
        rows.append(row)
        if args.check:
            ok = C.min_eigenvalue > 0 and C.hermiticity_residual <= tol
            failed |= not ok
            print(f"alpha={np.array2string(a, precision=6)} min_eig={C.min_eigenvalue:.6e} "
                  f"herm={C.hermiticity_residual:.3e} {'ok' if ok else 'FAIL'}")
    write_capacitance_csv(out / "capacitance.csv", mats)
    return (EXIT_CHECK if failed else EXIT_OK), {"samples": rows}


def cmd_bands(cfg, args, out: Path) -> tuple[int, dict]:
    lat, geo = build_geometry(cfg)
    path = build_path(cfg, lat)
    mod = build_modulation(cfg)
    tol = cfg["tolerances"]
    asm = CapacitanceAssembler(geo, lat, build_green(cfg))
    bs = sweep(path, geo, lat, mod, cfg["method"], assembler=asm, tol=float(tol["ode"]),
               tol_deg=tol["tol_deg"], threads=args.threads)
    gaps = detect_gaps(bs, float(tol["im_threshold"]), tol["omega_resolution"])
    write_bands_csv(out / "bands.csv", bs)
    write_gaps_json(out / "gaps.json", gaps)
    band_plot(bs, out / "bands.svg", f"Ω={mod.Omega:g}, ε={mod.epsilon:g}, {mod.kind.value}")
    det = None if bs.det_residuals is None else float(np.nanmax(bs.det_residuals))
    result = {
        "samples": len(bs.arc),
        "flagged": [{"index": k, "flag": f} for k, f in enumerate(bs.flags) if f],
        "gaps": [g.to_dict() for g in gaps],
        "n_kgaps": sum(g.kind is GapKind.K for g in gaps),
        "n_bandgaps": sum(g.kind is GapKind.BAND for g in gaps),
        "det_residual_max": det,
    }
    code = EXIT_OK
    if args.check and det is not None and det > 1e-8:
        code = EXIT_CHECK
    return code, result


def cmd_gaps(cfg, args, out: Path) -> tuple[int, dict]:
    g = cfg["gaps"]
    if not g.get("csv"):
        raise ConfigurationError("gaps.csv must name a band CSV file")
    p = _resolve_file(cfg, g["csv"])
    if not p.exists():
        raise ConfigurationError(f"band CSV not found: {p}")
    mod = build_modulation(cfg)
    bs = load_bands_csv(p, mod.Omega, mod.epsilon)
    tol = cfg["tolerances"]
    gaps = detect_gaps(bs, float(tol["im_threshold"]), tol["omega_resolution"],
                       alpha_window=g.get("alpha_window"))
    write_gaps_json(out / "gaps.json", gaps)
    return EXIT_OK, {"source": str(p), "gaps": [x.to_dict() for x in gaps]}


def cmd_perturb(cfg, args, out: Path) -> tuple[int, dict]:
    lat, geo = build_geometry(cfg)
    mod = build_modulation(cfg)
    alpha = cfg["perturb"].get("alpha")
    if alpha is None:
        raise ConfigurationError("perturb.alpha is required")
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.size == 1:
        a = np.array([a[0], 0.0])
    asm = CapacitanceAssembler(geo, lat, build_green(cfg))
    C = asm(a)
    tol_deg = cfg["tolerances"]["tol_deg"]
    an = analyze(build_hill(C, geo, mod), tol_deg if tol_deg is not None else 1e-4 * mod.Omega)
    results = []
    for res in an.results:
        try:
            cls = classify(res, mod.kind, an.diag.hermitian).value
        except ClassificationUnsupported as exc:
            cls = f"unsupported: {exc}"
        results.append({
            "alpha": a.tolist(), "Omega": mod.Omega,
            "f0": {"re": res.f0.real, "im": res.f0.imag},
            "f1": [{"re": z.real, "im": z.imag} for z in res.f1],
            "classification": cls, "case": res.case.value,
            "group": list(res.group), "omega0": res.omega0,
        })
    (out / "perturbation.json").write_text(json.dumps(_jsonable(results), indent=2))
    return EXIT_OK, {"mu": an.diag.mu.tolist(), "omega0": an.F0.omega0.tolist(), "degeneracies": results}


def cmd_validate(cfg, args, out: Path) -> tuple[int, dict]:
    from .validation import TABLE_REFERENCE, calibrate_trimer, synthetic_order_check, reference_point_run

    v = cfg["validate"]
    eps = [float(e) for e in v["eps_grid"]]
    if len(eps) < 5:
        raise ConfigurationError("validate.eps_grid needs at least 5 amplitudes")
    result, ok = {}, True
    if "synthetic" in v["protocols"]:
        syn = synthetic_order_check(args.seed, eps)
        result["synthetic"] = syn
        for mode, r in syn["modes"].items():
            good = r["slope"] >= v["slope_min"] and r["fit_rel_error"] <= v["fit_tolerance"]
            ok &= good
            print(f"synthetic {mode:5s} slope={r['slope']:.3f} fit_rel_err={r['fit_rel_error']:.2e} "
                  f"{'ok' if good else 'FAIL'}")
    if "reference" in v["protocols"]:
        c = v["calibration"]
        cal = calibrate_trimer(float(c["Omega"]), float(c["alpha_deg"]), float(c["omega0"]),
                               float(c["radius"]), float(c["period"]), tuple(c["gap_bracket"]),
                               build_green(cfg))
        print(f"calibrated intra_gap={cal.intra_gap:.10f} K={cal.K:.6e}")
        tab = reference_point_run(cal, eps, bracket=(cal.alpha_deg - 0.2, cal.alpha_deg + 0.2))
        for row in tab["rows"]:
            t = TABLE_REFERENCE[row["mode"]]
            row["reference"] = t
            row["rel_error"] = abs(row["abs_f1"] - t) / t
            good = row["rel_error"] <= v["table_tolerance"]
            ok &= good
            print(f"table {row['mode']:5s} |f1| analytic={row['abs_f1']:.5f} "
                  f"numeric={row.get('abs_f1_numeric', float('nan')):.5f} reference={t:.4f} "
                  f"rel_err={row['rel_error']:.3f} {'ok' if good else 'FAIL'}")
        result["reference"] = tab
    code = EXIT_CHECK if (args.check and not ok) else EXIT_OK
    return code, result


COMMANDS = {
    "capacitance": cmd_capacitance,
    "bands": cmd_bands,
    "validate": cmd_validate,
    "perturb": cmd_perturb,
    "gaps": cmd_gaps,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stbands", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", default="out", help="output directory (default: ./out)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        sp.add_argument("--seed", type=int, default=0, help="seed for synthetic matrices")
        sp.add_argument("--check", action="store_true", help="verify tolerances; exit 4 on failure")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code, result = COMMANDS[args.command](cfg, args, out)
        _write_report(out, args.command, cfg, args, result, started)
        return code
    except DegeneracyNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ConfigurationError, GeometryError, ValidationError, UnsupportedLimitError,
            CapacitanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
