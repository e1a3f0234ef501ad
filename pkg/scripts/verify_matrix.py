"""Run the full objectivity / general-covariance matrix and summarise per kind.

    python3 scripts/verify_matrix.py --out out/verify
"""
from __future__ import annotations

import argparse
from collections import defaultdict
from dataclasses import dataclass

from objrates.rates import default_kinds, parse_rate
from objrates.verify import run_matrix, write_reports


@dataclass
class MatrixConfig:
    seed: int = 0
    n_sampled: int = 1024
    out: str = "out/verify"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=MatrixConfig.seed)
    ap.add_argument("--n-sampled", type=int, default=MatrixConfig.n_sampled)
    ap.add_argument("--out", default=MatrixConfig.out)
    a = ap.parse_args()
    cfg = MatrixConfig(a.seed, a.n_sampled, a.out)

    res = run_matrix(default_kinds() + [parse_rate("particle")], n_sampled=cfg.n_sampled, seed=cfg.seed)
    rows = defaultdict(lambda: {"objectivity": 0.0, "sampled": 0.0, "covariance": 0.0})
    for r in res.reports:
        col = "covariance" if r.check == "covariance" else ("sampled" if r.sampled else "objectivity")
        rows[r.kind][col] = max(rows[r.kind][col], r.residual)
    print(f"{'kind':<22} {'objectivity':>12} {'sampled':>10} {'covariance':>11}")
    for kind, v in rows.items():
        print(f"{kind:<22} {v['objectivity']:12.2e} {v['sampled']:10.2e} {v['covariance']:11.2e}")
    jl, _ = write_reports(res.reports, cfg.out)
    print(f"{len(res.reports)} cells, {len(res.unexpected)} unexpected; reports in {jl.parent}")
    return 0 if res.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
