"""Command-line front end: ``objrates {rates,verify,simulate,geodesic}``.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numeric or domain error. Flags override values from ``--config``.
"""
from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, MissingReference, ObjectiveRatesError
from .kinematics import MotionSpec, load_motion_spec, motion_from_spec, motion_state, tgrid_from
from .met_geometry import exp_map, log_map
from .rates import OBJECTIVE_KINDS, RateContext, parse_rate, spatial_rate_con, spatial_rate_cov
from .schemas import validate
from .simulate import (
    VOIGT,
    VOIGT_LABELS,
    HypoLaw,
    MaxwellLaw,
    config_hash,
    fmt,
    integrate_hypo,
    integrate_maxwell,
    to_voigt,
)
from .tensor_core import sym
from .verify import random_spd, run_matrix, write_reports

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _from_voigt(v) -> np.ndarray:
    a = np.zeros((3, 3))
    for (i, j), x in zip(VOIGT, v):
        a[i, j] = a[j, i] = x
    return a


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def split_rate_list(text: str) -> list[str]:
    """Split ``"oldroyd,hill:1,0,mh:2"``; the two Hill parameters stay together."""
    return re.findall(r"hill:[^,;\s]+,[^,;\s]+|[^,;\s]+", text)


def load_config(args) -> dict:
    cfg: dict = {}
    base = Path.cwd()
    if args.config:
        p = Path(args.config)
        try:
            cfg = json.loads(p.read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {p}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from None
        base = p.parent
    validate(cfg, "run_config")
    if args.out is not None:
        cfg["out"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tol is not None:
        cfg["tol"] = args.tol
    if args.dt is not None:
        cfg["dt"] = args.dt
    if args.only:
        cfg["rates"] = split_rate_list(args.only)
    if "motion_spec" in cfg:
        mp = Path(cfg["motion_spec"])
        cfg["motion_spec"] = str(mp if mp.is_absolute() else base / mp)
    cfg["command"] = args.command
    return cfg


def _motion(cfg: dict) -> MotionSpec:
    if "motion_spec" in cfg:
        return load_motion_spec(cfg["motion_spec"])
    if "motion" in cfg:
        return motion_from_spec(cfg["motion"])
    return motion_from_spec({"family": "simple_shear", "reference": True})


def _kinds(cfg: dict, default=OBJECTIVE_KINDS):
    names = cfg.get("rates") or list(default)
    kinds = []
    for n in names:
        try:
            kinds.append(parse_rate(n))
        except ConfigError as exc:
            raise ConfigError(f"rates: {exc}") from None
    return kinds


def _require_reference(kinds, spec: MotionSpec):
    if spec.gamma0 is None and any(k.needs_reference for k in kinds):
        raise MissingReference("reference configuration required (set \"reference\" in the motion spec)")


def _out(cfg: dict) -> Path:
    out = Path(cfg.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, cfg: dict, files: list, extra: dict | None = None):
    meta = {"command": cfg["command"], "config_hash": config_hash(cfg), "version": __version__,
            "seed": cfg.get("seed", 0), "files": sorted(str(Path(f).name) for f in files)}
    meta.update(extra or {})
    (out / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


# -----------------------------------------------------------------------------
# subcommands
# -----------------------------------------------------------------------------

def cmd_rates(cfg: dict) -> int:
    spec = _motion(cfg)
    kinds = _kinds(cfg)
    _require_reference(kinds, spec)
    rng = np.random.default_rng(cfg.get("seed", 0))
    tcfg = cfg.get("tensor", {})
    if "coeffs" in tcfg:
        coeffs = [_from_voigt(c) for c in tcfg["coeffs"]]
    else:
        coeffs = [sym(rng.standard_normal((3, 3)))]
    cov = tcfg.get("variance", "con") == "cov"
    rate = spatial_rate_cov if cov else spatial_rate_con
    unit = "[S/T]" if not cov else "[1/T]"
    out = _out(cfg)
    path = out / "rates.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t [T]"] + [f"{k.name}_{v} {unit}" for k in kinds for v in VOIGT_LABELS])
        for t in spec.tgrid:
            a = sum(t**i * c for i, c in enumerate(coeffs))
            ad = sum(i * t ** (i - 1) * c for i, c in enumerate(coeffs) if i)
            ad = np.zeros((3, 3)) if np.isscalar(ad) else ad
            ctx = RateContext(motion_state(spec.motion, spec.points[0], t), spec.gamma0)
            row = [fmt(t)]
            for k in kinds:
                row += [fmt(x) for x in to_voigt(rate(k, ctx, a, ad))]
            w.writerow(row)
    _write_meta(out, cfg, [path], {"rates": [k.name for k in kinds]})
    return EXIT_OK


def cmd_verify(cfg: dict, objectivity: bool = True, covariance: bool = True) -> int:
    vcfg = cfg.get("verify", {})
    kinds = _kinds(cfg, list(OBJECTIVE_KINDS) + ["particle"])
    tol = cfg.get("tol")
    res = run_matrix(
        kinds,
        sampled=vcfg.get("sampled", True),
        objectivity=vcfg.get("objectivity", True) and objectivity,
        covariance=vcfg.get("covariance", True) and covariance,
        tol=tol, cov_tol=tol, n_sampled=vcfg.get("n_sampled", 1024), seed=cfg.get("seed", 0),
    )
    out = _out(cfg)
    files = write_reports(res.reports, out)
    _write_meta(out, cfg, list(files), {"cells": len(res.reports), "unexpected": len(res.unexpected)})
    for r in res.unexpected:
        print(f"UNEXPECTED {r.check} {r.kind} {r.motion} {r.path} {r.field} "
              f"residual={r.residual:.3e} tol={r.tol:.1e}", file=sys.stderr)
    print(f"{len(res.reports)} cells, {len(res.unexpected)} unexpected")
    return EXIT_OK if res.ok else EXIT_VERIFY


def cmd_simulate(cfg: dict) -> int:
    spec = _motion(cfg)
    kinds = _kinds(cfg, ["jaumann"])
    _require_reference(kinds, spec)
    law_cfg = cfg.get("law", {"type": "hypo", "lam": 1.0, "mu": 1.0})
    t_end = float(cfg.get("t_end", spec.tgrid[-1]))
    dt = float(cfg.get("dt", 1e-3))
    tau0 = _from_voigt(cfg["tau0"]) if "tau0" in cfg else None
    out = _out(cfg)
    files = []
    for k in kinds:
        if law_cfg["type"] == "hypo":
            law = HypoLaw(law_cfg["lam"], law_cfg["mu"])
            tr = integrate_hypo(law, k, spec.motion, t_end, dt, tau0=tau0, gamma0=spec.gamma0,
                                X=spec.points[0])
        else:
            law = MaxwellLaw(law_cfg["eta"], law_cfg["lambda_relax"])
            tr = integrate_maxwell(law, k, spec.motion, t_end, dt, sigma0=tau0, gamma0=spec.gamma0,
                                   X=spec.points[0])
        p, side = tr.write_csv(out / f"traj_{_safe(k.name)}.csv", {"law": law_cfg, "config_hash": config_hash(cfg)})
        files += [p, side]
    _write_meta(out, cfg, files)
    return EXIT_OK


def cmd_geodesic(cfg: dict) -> int:
    gcfg = cfg.get("geodesic", {})
    rng = np.random.default_rng(cfg.get("seed", 0))
    g0 = np.asarray(gcfg["gamma0"], dtype=float) if "gamma0" in gcfg else random_spd(rng)
    eps = np.asarray(gcfg["eps"], dtype=float) if "eps" in gcfg else sym(rng.standard_normal((3, 3)))
    times = tgrid_from(gcfg.get("tgrid"))
    out = _out(cfg)
    path = out / "geodesic.csv"
    worst = 0.0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t [T]"] + [f"gamma_{v} [1]" for v in VOIGT_LABELS] + ["log_roundtrip [1]"])
        for t in times:
            g = exp_map(g0, t * eps)
            back = log_map(g0, g)
            r = float(np.linalg.norm(back - t * eps) / (1.0 + np.linalg.norm(t * eps)))
            worst = max(worst, r)
            w.writerow([fmt(t)] + [fmt(x) for x in to_voigt(g)] + [fmt(r)])
    _write_meta(out, cfg, [path], {"max_log_roundtrip": worst})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="objrates", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"objrates {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("rates", "verify", "simulate", "geodesic"):
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--tol", type=float, metavar="X")
        p.add_argument("--only", metavar="LIST", help="comma-separated rate names")
        p.add_argument("--dt", type=float, metavar="X")
        if name == "verify":
            p.add_argument("--objectivity", action="store_true", help="run only objectivity cells")
            p.add_argument("--covariance", action="store_true", help="run only general-covariance cells")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "rates":
            return cmd_rates(cfg)
        if args.command == "verify":
            only_obj, only_cov = args.objectivity, args.covariance
            return cmd_verify(cfg, objectivity=only_obj or not only_cov, covariance=only_cov or not only_obj)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_geodesic(cfg)
    except (ConfigError, MissingReference) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ObjectiveRatesError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
