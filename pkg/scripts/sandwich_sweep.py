"""Monte Carlo expected norm of randomized circulant graphs against the two-sided shape.

Prints one CSV row per (n, offsets) with the ratios MC/lower and MC/upper.
"""

from __future__ import annotations

from dataclasses import dataclass

from _config import parse, write_rows

from radmat.bounds import circulant_bounds
from radmat.montecarlo import estimate_expected_norm
from radmat.patterns import CirculantSpec, OffsetGraphSpec, circulant_matrix
from radmat.rademacher import RadNormConfig


@dataclass(frozen=True)
class Config:
    """Sweep n for a fixed offset set."""

    sizes: tuple[int, ...] = (16, 32, 64, 128, 256, 512)
    offsets: tuple[int, ...] = (1, 2)
    samples: int = 100
    seed: int = 0
    tol: float = 1e-8
    out: str = "-"


def run(cfg: Config) -> list[dict]:
    rows = []
    for n in cfg.sizes:
        spec = CirculantSpec.from_offsets(OffsetGraphSpec(n, cfg.offsets))
        lo, up, bd = circulant_bounds(spec, RadNormConfig(seed=cfg.seed))
        est = estimate_expected_norm(circulant_matrix(spec), cfg.samples, cfg.seed, cfg.tol)
        rows.append({
            "n": n, "mc_mean": est.mean, "mc_stderr": est.stderr,
            "lower": lo, "upper": up, "rad_norm": bd.terms["rad_norm"],
            "mc_over_lower": est.mean / lo, "mc_over_upper": est.mean / up,
        })
    return rows


if __name__ == "__main__":
    cfg = parse(Config)
    write_rows(run(cfg), cfg.out)
