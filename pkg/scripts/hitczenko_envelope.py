"""Exact L_p of Rademacher sums divided by the head-plus-tail functional, binned by p."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from _config import parse, write_rows

from radmat.rademacher import exact_lp_radsum, hitczenko_lp
from radmat.rng import stream


@dataclass(frozen=True)
class Config:
    per_p: int = 200
    orders: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)
    max_len: int = 18
    seed: int = 0
    out: str = "-"


def run(cfg: Config) -> list[dict]:
    rows = []
    for i, p in enumerate(cfg.orders):
        rng = stream(cfg.seed, 0x4845, i)
        ratios = []
        for _ in range(cfg.per_p):
            m = int(rng.integers(1, cfg.max_len + 1))
            c = rng.standard_normal(m) * np.exp(rng.uniform(-3, 3, m))
            ratios.append(exact_lp_radsum(c, p) / hitczenko_lp(c, p))
        rows.append({"p": p, "count": len(ratios), "min_ratio": min(ratios), "max_ratio": max(ratios),
                     "mean_ratio": float(np.mean(ratios))})
    return rows


if __name__ == "__main__":
    cfg = parse(Config)
    write_rows(run(cfg), cfg.out)
