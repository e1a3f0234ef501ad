"""Hypoelastic simple shear for a list of rates: shear stress vs amount of shear.

    python3 scripts/shear_oscillation.py --kappa 12 --dt 2e-3 --out out/shear
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from objrates.kinematics import ClosedFormMotion
from objrates.rates import parse_rate
from objrates.simulate import HypoLaw, fmt, integrate_hypo, is_monotone


@dataclass
class ShearConfig:
    kappa: float = 12.0
    dt: float = 2e-3
    lam: float = 2.0
    mu: float = 1.0
    rates: list[str] = field(default_factory=lambda: ["jaumann", "oldroyd", "truesdell", "green-naghdi",
                                                      "xbm:logspin-like"])
    out: str = "out/shear"


def run(cfg: ShearConfig) -> dict:
    motion = ClosedFormMotion("simple_shear", {"rate": 1.0}, mu_density=1.0)
    law = HypoLaw(cfg.lam, cfg.mu)
    curves = {}
    for name in cfg.rates:
        kind = parse_rate(name)
        tr = integrate_hypo(law, kind, motion, cfg.kappa, cfg.dt)
        curves[kind.name] = (tr.times, tr.component(0, 1))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    times = next(iter(curves.values()))[0]
    with (out / "shear_stress.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kappa [1]"] + [f"{k}_12 [S]" for k in curves])
        for i, t in enumerate(times):
            w.writerow([fmt(t)] + [fmt(c[1][i]) for c in curves.values()])
    return curves


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, default=ShearConfig.kappa)
    ap.add_argument("--dt", type=float, default=ShearConfig.dt)
    ap.add_argument("--out", default=ShearConfig.out)
    ap.add_argument("--rates", help="comma-separated rate names")
    a = ap.parse_args()
    cfg = ShearConfig(kappa=a.kappa, dt=a.dt, out=a.out)
    if a.rates:
        cfg.rates = a.rates.split(",")
    curves = run(cfg)
    print(f"{'rate':<22} {'tau_12(end)':>12} {'max':>10} monotone")
    for name, (_, s) in curves.items():
        print(f"{name:<22} {s[-1]:12.5f} {np.max(s):10.5f} {is_monotone(s)}")
    print(f"wrote {Path(cfg.out) / 'shear_stress.csv'}")


if __name__ == "__main__":
    main()
