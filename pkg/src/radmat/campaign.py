"""Campaign runner: evaluate requested quantities on one pattern and emit report records."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from radmat.bounds import (
    circulant_bounds,
    gaussian_hly_bound,
    graph_Np_bounds,
    harper_check,
    hypercube_Np_bounds,
    seginer_bound,
    theorem_lower_rhs,
    torus_expected_norm_bounds,
)
from radmat.decomp import CertificateError, block_cover, composed_upper_bound, cube_identities
from radmat.linalg import ORACLE_MAX_DIM, operator_norm, operator_norm_oracle
from radmat.montecarlo import check_contraction, check_floor, estimate_expected_norm
from radmat.patterns import BuiltPattern, build_pattern
from radmat.rademacher import RadNormConfig, estimate_rad_norm
from radmat.rng import GENERATOR_ID, stream

QUANTITIES = ("expected-norm", "radnorm", "bounds", "decompose", "verify", "norm")
CSV_COLUMNS = ("quantity", "value", "stderr", "pass", "seed", "samples", "runtime_ms")
LOWER_RHS_MAX_N = 256
_HARPER_TAG = 0x4841


class UsageError(ValueError):
    """Bad pattern string, quantity name or option."""


def parse_quantity(text: str) -> tuple[str, float | None]:
    name, _, arg = text.partition(":")
    if name not in QUANTITIES:
        raise UsageError(f"unknown quantity {text!r}; expected one of {', '.join(QUANTITIES)}")
    if name == "radnorm" and not arg:
        raise UsageError("radnorm needs a moment order, e.g. radnorm:4")
    if arg and name not in ("radnorm", "bounds"):
        raise UsageError(f"{name} takes no moment order")
    if arg:
        try:
            p = float(arg)
        except ValueError:
            raise UsageError(f"bad moment order in {text!r}") from None
        if p < 1:
            raise UsageError("moment order must be at least 1")
        return name, p
    return name, None


@dataclass(frozen=True)
class CampaignConfig:
    pattern: str
    quantities: tuple[str, ...]
    samples: int = 200
    seed: int = 0
    tol: float = 1e-10
    threads: int = 1
    out: str | None = None
    format: str = "json"
    timing: bool = False

    def validate(self) -> None:
        if not self.quantities:
            raise UsageError("no quantity requested")
        for q in self.quantities:
            parse_quantity(q)
        if self.format not in ("json", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        mc = any(parse_quantity(q)[0] in ("expected-norm", "verify") for q in self.quantities)
        if mc and self.samples < 2:
            raise UsageError("Monte Carlo quantities need samples >= 2")
        if self.seed < 0:
            raise UsageError("seed must be nonnegative")
        if self.tol <= 0:
            raise UsageError("tol must be positive")


def _record(quantity, value, stderr=None, passed=None, config=None, **detail) -> dict:
    rec = {
        "quantity": quantity,
        "value": value,
        "stderr": stderr,
        "pass": passed,
        "seed": config.seed,
        "samples": config.samples,
        "generator": GENERATOR_ID,
    }
    rec.update(detail)
    return rec


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


# --------------------------------------------------------------------------
# quantity evaluators; each returns a list of records


def _q_norm(bp: BuiltPattern, cfg: CampaignConfig, _p) -> list[dict]:
    r = operator_norm(bp.matrix, tol=cfg.tol, seed=cfg.seed)
    return [_record("norm", r.value, None, None, cfg, iterations=r.iterations, converged=r.converged,
                    residual=r.residual)]


def _q_expected(bp: BuiltPattern, cfg: CampaignConfig, _p) -> list[dict]:
    est = estimate_expected_norm(bp.matrix, cfg.samples, cfg.seed, cfg.tol, cfg.threads)
    return [_record("expected-norm", est.mean, est.stderr, None, cfg, all_converged=est.all_converged)]


def _q_radnorm(bp: BuiltPattern, cfg: CampaignConfig, p) -> list[dict]:
    est = estimate_rad_norm(bp.matrix, p, RadNormConfig(seed=cfg.seed, mc_samples=max(cfg.samples, 2)))
    rec = est.as_record()
    lower = rec.pop("lower")
    stderr = rec.pop("stderr")
    return [_record(f"radnorm:{p:g}", lower, stderr, None, cfg, **rec)]


def _graph_dims(bp: BuiltPattern) -> dict:
    return {k: int(v[0]) for k, v in bp.params.items() if k in ("d", "m") and v}


def _q_bounds(bp: BuiltPattern, cfg: CampaignConfig, p) -> list[dict]:
    a = bp.matrix
    out = [_record("bounds.seginer", seginer_bound(a), config=cfg)]
    if a.nnz and a.max_abs() <= 1:
        out.append(_record("bounds.gaussian", gaussian_hly_bound(a), config=cfg))
    if a.rows == a.cols and a.rows <= LOWER_RHS_MAX_N:
        bd = theorem_lower_rhs(a)
        out.append(_record("bounds.general_lower_rhs", bd.terms["total"], config=cfg, **bd.as_record()))
    if bp.circulant is not None:
        lo, up, bd = circulant_bounds(bp.circulant, RadNormConfig(seed=cfg.seed))
        out.append(_record("bounds.circulant", up, config=cfg, **bd.as_record()))
        comp = composed_upper_bound(bp.circulant, RadNormConfig(seed=cfg.seed))
        out.append(_record("bounds.circulant_composed", comp.total, config=cfg, per_level=list(comp.per_level),
                           closed_form=comp.closed_form, scale=comp.scale))
    p = 2.0 if p is None else p
    dims = _graph_dims(bp)
    if bp.name == "hypercube":
        hb = hypercube_Np_bounds(dims["d"], p)
        out.append(_record("bounds.hypercube_Np", hb.upper, config=cfg, **hb.as_record()))
    elif bp.graph is not None and bp.graph.n <= 1024:
        gb = graph_Np_bounds(bp.graph, p)
        out.append(_record("bounds.graph_Np", gb.upper, config=cfg, p=p, **gb.as_record()))
    if bp.name == "torus" and dims.get("d", 0) >= 2:
        lo, up = torus_expected_norm_bounds(dims["m"], dims["d"])
        out.append(_record("bounds.torus_expected_norm", up, config=cfg, lower=lo, upper=up))
    return out


def _q_decompose(bp: BuiltPattern, cfg: CampaignConfig, _p) -> list[dict]:
    if bp.offsets is None:
        raise UsageError("decompose needs a circulant graph pattern (circulant:n=..,offsets=.. or band-graph)")
    try:
        cover = block_cover(bp.offsets)
    except CertificateError as exc:
        return [_record("decompose", None, None, False, cfg, failed=str(exc))]
    rec = cover.record()
    return [_record("decompose", float(rec["min_average"]), None, bool(rec["ok"]), cfg,
                    good_sequence=cover.sequence.certificates, **rec)]


def _failed(cert: dict) -> list[str]:
    return [k for k, v in cert.items() if v is False]


def _q_verify(bp: BuiltPattern, cfg: CampaignConfig, _p) -> list[dict]:
    a = bp.matrix
    out = []
    rep = check_floor(a, cfg.samples, cfg.seed, cfg.tol, cfg.threads)
    out.append(_record("verify.floor", rep.mean, rep.stderr, rep.passed, cfg, **_floor_detail(rep)))
    if max(a.shape) <= ORACLE_MAX_DIM:
        got = operator_norm(a, tol=cfg.tol, seed=cfg.seed).value
        ref = operator_norm_oracle(a.to_dense())
        err = abs(got - ref) / max(ref, 1e-300)
        out.append(_record("verify.oracle", got, None, err <= 1e-8, cfg, oracle=ref, relative_error=err))
    k = min(cfg.samples, 64)
    e1 = estimate_expected_norm(a, k, cfg.seed, cfg.tol)
    e2 = estimate_expected_norm(a.scale(-1.0), k, cfg.seed, cfg.tol)
    out.append(_record("verify.sign_symmetry", e1.mean, e1.stderr, e1 == e2, replace(cfg, samples=k),
                       negated_mean=e2.mean))
    rep = check_contraction(a.scale(0.5), a, k, cfg.seed, cfg.tol)
    out.append(_record("verify.contraction", rep.mean, rep.stderr, rep.passed, replace(cfg, samples=k),
                       slack=rep.slack, mean_a=rep.detail["mean_a"], mean_b=rep.detail["mean_b"]))
    if bp.offsets is not None:
        cert = cube_identities(bp.offsets)
        out.append(_record("verify.cubes", float(cert["m"]), None, cert["ok"], cfg, failed=_failed(cert), **cert))
        out.extend(_q_decompose(bp, cfg, None))
    if bp.name == "hypercube":
        d = _graph_dims(bp)["d"]
        rng = stream(cfg.seed, _HARPER_TAG, d)
        subsets = [rng.choice(1 << d, size=int(rng.integers(1, (1 << d) + 1)), replace=False) for _ in range(200)]
        bad = harper_check(d, subsets)
        out.append(_record("verify.harper", float(len(bad)), None, not bad, cfg, subsets=200,
                           violations=[list(b) for b in bad]))
    return out


def _floor_detail(rep) -> dict:
    return {k: rep.detail[k] for k in ("floor", "min_margin", "violations")}


_EVALUATORS = {
    "norm": _q_norm,
    "expected-norm": _q_expected,
    "radnorm": _q_radnorm,
    "bounds": _q_bounds,
    "decompose": _q_decompose,
    "verify": _q_verify,
}


def evaluate(config: CampaignConfig) -> list[dict]:
    """Records for every requested quantity, in declaration order."""
    config.validate()
    try:
        bp = build_pattern(config.pattern)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad pattern {config.pattern!r}: {exc}") from None
    records = []
    for q in config.quantities:
        name, p = parse_quantity(q)
        start = time.perf_counter()
        recs = _EVALUATORS[name](bp, config, p)
        elapsed = (time.perf_counter() - start) * 1000.0
        for r in recs:
            r["pattern"] = config.pattern
            # wall time breaks bitwise reproducibility, so it is opt-in
            r["runtime_ms"] = round(elapsed, 3) if config.timing else None
        records.extend(recs)
    return [_jsonable(r) for r in records]


def campaign_passed(records: list[dict]) -> bool:
    return all(r.get("pass") is not False for r in records)


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"generator": GENERATOR_ID, "records": records}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = []
        for col in CSV_COLUMNS:
            v = r.get(col)
            if v is None:
                row.append("")
            elif isinstance(v, bool):
                row.append("true" if v else "false")
            elif isinstance(v, float):
                row.append(repr(v))
            else:
                row.append(v)
        w.writerow(row)
    return buf.getvalue()


def run_campaign(config: CampaignConfig) -> tuple[list[dict], int]:
    """Evaluate, write the report if ``out`` is set, and return ``(records, exit status)``."""
    records = evaluate(config)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(render(records, config.format))
    return records, 0 if campaign_passed(records) else 1


def run_items(configs: list[CampaignConfig], threads: int = 1) -> list[list[dict]]:
    """Evaluate several items concurrently; results come back in declaration order."""
    for c in configs:
        c.validate()
    if threads <= 1 or len(configs) <= 1:
        return [evaluate(c) for c in configs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate, configs))


def parse_config_text(text: str) -> list[dict[str, str]]:
    """``[item]`` sections of ``key = value`` lines; ``#`` starts a comment."""
    items: list[dict[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[item]":
            items.append({})
            continue
        if line.startswith("["):
            raise UsageError(f"line {lineno}: only [item] sections are allowed")
        if not items:
            raise UsageError(f"line {lineno}: key outside any [item] section")
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"line {lineno}: expected key = value")
        items[-1][key.strip()] = val.strip()
    return items


def configs_from_items(items: list[dict[str, str]], defaults: CampaignConfig) -> list[CampaignConfig]:
    known = {"pattern", "quantity", "quantities", "samples", "seed", "tol", "threads", "format", "out", "timing"}
    out = []
    for item in items:
        extra = set(item) - known
        if extra:
            raise UsageError(f"unknown config keys {sorted(extra)}")
        if "pattern" not in item:
            raise UsageError("every [item] needs a pattern")
        qs = item.get("quantities", item.get("quantity", ""))
        cfg = replace(
            defaults,
            pattern=item["pattern"],
            quantities=tuple(q.strip() for q in qs.split() if q.strip()),
            samples=int(item.get("samples", defaults.samples)),
            seed=int(item.get("seed", defaults.seed)),
            tol=float(item.get("tol", defaults.tol)),
            threads=int(item.get("threads", defaults.threads)),
            format=item.get("format", defaults.format),
            out=item.get("out", defaults.out),
            timing=item.get("timing", str(defaults.timing)).lower() in ("1", "true", "yes"),
        )
        cfg.validate()
        out.append(cfg)
    return out


# --------------------------------------------------------------------------
# ratio envelopes


@dataclass(frozen=True)
class RatioEnvelope:
    pair: tuple[str, str]
    min_ratio: float
    max_ratio: float
    count: int
    corpus: str
    skipped: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("an envelope needs at least one instance")
        if self.min_ratio > self.max_ratio:
            raise ValueError("min ratio exceeds max ratio")

    def as_record(self) -> dict:
        return {
            "pair": list(self.pair),
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "count": self.count,
            "skipped": self.skipped,
            "corpus": self.corpus,
            **self.extra,
        }


def ratio_envelope(instances, numerator, denominator, pair: tuple[str, str], corpus: str) -> RatioEnvelope:
    """Min and max of ``numerator(x) / denominator(x)``; zero denominators are skipped and counted."""
    ratios = []
    skipped = 0
    for x in instances:
        den = denominator(x)
        if den == 0 or not math.isfinite(den):
            skipped += 1
            continue
        ratios.append(numerator(x) / den)
    if not ratios:
        raise ValueError("every instance was skipped")
    return RatioEnvelope(pair, min(ratios), max(ratios), len(ratios), corpus, skipped)
