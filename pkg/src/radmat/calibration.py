"""Ratio windows standing in for unnamed constants, and the data file that stores them.

``radmat calibrate`` rebuilds ``data/calibration.json``.  Every envelope is
a pure function of the corpus seed and sample counts recorded next to it,
so the acceptance suite can recompute and compare.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from radmat.bounds import circulant_bounds, hypercube_Np_bounds, seginer_bound
from radmat.campaign import RatioEnvelope, ratio_envelope
from radmat.corpora import general_corpus, sandwich_corpus
from radmat.montecarlo import estimate_expected_norm
from radmat.patterns import circulant_matrix, hypercube
from radmat.rademacher import RadNormConfig, estimate_rad_norm, exact_lp_radsum, hitczenko_lp
from radmat.rng import GENERATOR_ID, stream

DATA_FILE = "calibration.json"
REGRESSION_FACTOR = 1.05
_HITZ_TAG = 0x4849

DEFAULTS = {
    "seed": 0,
    "hitczenko_count": 1000,
    "mc_samples": 40,
    "mc_tol": 1e-6,
    "hypercube_max_d": 10,
}


def hitczenko_envelope(count: int, seed: int) -> RatioEnvelope:
    rng = stream(seed, _HITZ_TAG)
    inst = []
    for _ in range(count):
        m = int(rng.integers(1, 19))
        c = rng.standard_normal(m) * np.exp(rng.uniform(-3, 3, size=m))
        inst.append((c, float(rng.uniform(1, 16))))
    return ratio_envelope(inst, lambda x: exact_lp_radsum(*x), lambda x: hitczenko_lp(*x),
                          ("exact_lp", "hitczenko"), f"random coefficient vectors, len<=18, p in [1,16], n={count}")


def _mc(a, samples, seed, tol):
    return estimate_expected_norm(a, samples, seed, tol).mean


def sandwich_envelopes(seed: int, samples: int, tol: float) -> dict[str, RatioEnvelope]:
    specs = sandwich_corpus(seed)
    rows = []
    for spec in specs:
        lo, up, _ = circulant_bounds(spec, RadNormConfig(seed=seed))
        rows.append((_mc(circulant_matrix(spec), samples, seed, tol), lo, up))
    desc = f"sandwich_corpus(seed={seed}), {len(specs)} bands"
    return {
        "circulant_lower": ratio_envelope(rows, lambda r: r[0], lambda r: r[1], ("mc_expected_norm", "circulant_lower"), desc),
        "circulant_upper": ratio_envelope(rows, lambda r: r[0], lambda r: r[2], ("mc_expected_norm", "circulant_upper"), desc),
    }


def seginer_envelope(seed: int, samples: int, tol: float) -> RatioEnvelope:
    mats = general_corpus(seed=seed)
    rows = [(_mc(a, samples, seed, tol), seginer_bound(a)) for a in mats]
    return ratio_envelope(rows, lambda r: r[0], lambda r: r[1], ("mc_expected_norm", "seginer"),
                          f"general_corpus(seed={seed}), {len(mats)} matrices")


def hypercube_window(max_d: int, seed: int) -> RatioEnvelope:
    pairs = [(d, p) for d in range(2, max_d + 1) for p in range(2, d + 1)]
    cfg = RadNormConfig(seed=seed)
    mats = {d: hypercube(d).adjacency() for d in range(2, max_d + 1)}
    return ratio_envelope(pairs, lambda x: estimate_rad_norm(mats[x[0]], x[1], cfg).lower, lambda x: math.sqrt(x[1]),
                          ("radnorm_lower", "sqrt_p"), f"hypercube d in [2,{max_d}], integer p in [2,d]")


def hypercube_regime_gaps(max_d: int) -> RatioEnvelope:
    """Jump factors of the regime-dispatched hypercube shape at ``p = d`` and ``p = d 2^d``."""
    eps = 1e-9
    rows = []
    for d in range(2, max_d + 1):
        for p in (d, d * 2**d):
            for side in ("lower", "upper"):
                a = getattr(hypercube_Np_bounds(d, p), side)
                b = getattr(hypercube_Np_bounds(d, p * (1 + eps) if p == d else p * (1 - eps)), side)
                rows.append((a, b))
    return ratio_envelope(rows, lambda r: max(r), lambda r: min(r), ("regime_side_max", "regime_side_min"),
                          f"hypercube d in [2,{max_d}] at both regime boundaries")


def calibrate(params: dict | None = None) -> dict:
    params = {**DEFAULTS, **(params or {})}
    seed, samples, tol = params["seed"], params["mc_samples"], params["mc_tol"]
    env = {"hitczenko": hitczenko_envelope(params["hitczenko_count"], seed)}
    env.update(sandwich_envelopes(seed, samples, tol))
    env["seginer"] = seginer_envelope(seed, samples, tol)
    env["hypercube_window"] = hypercube_window(params["hypercube_max_d"], seed)
    env["hypercube_regimes"] = hypercube_regime_gaps(params["hypercube_max_d"])
    return {
        "command": "radmat calibrate",
        "generator": GENERATOR_ID,
        "params": params,
        "regression_factor": REGRESSION_FACTOR,
        "envelopes": {k: v.as_record() for k, v in env.items()},
    }


def default_path() -> Path:
    return Path(str(resources.files("radmat") / "data" / DATA_FILE))


def load_calibration(path: str | Path | None = None) -> dict:
    with open(path or default_path()) as fh:
        return json.load(fh)


def write_calibration(data: dict, path: str | Path | None = None) -> Path:
    path = Path(path or default_path())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def within(envelope: dict, reference: dict, factor: float = REGRESSION_FACTOR) -> bool:
    """``envelope`` has not widened past ``reference`` by more than ``factor`` on either side."""
    return envelope["min_ratio"] >= reference["min_ratio"] / factor and envelope["max_ratio"] <= reference["max_ratio"] * factor
