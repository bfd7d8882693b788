"""Seeded sampling of ``eps . A`` and the distributional checks built on it.

Sample ``k`` under root seed ``s`` draws its signs from the counter
``(s, SAMPLE_TAG, k)``: one bit per stored entry, in the canonical
row-major entry order.  Results are therefore a pure function of
``(A, seed, samples)`` whatever the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from radmat.linalg import SparsePattern, as_pattern, entrywise_dominates, operator_norm, operator_norm_oracle
from radmat.patterns import CirculantSpec, circulant_matrix
from radmat.rademacher import EXACT_MAX_COEFFS, exact_lp_radsum, mc_lp_radsum
from radmat.rng import GENERATOR_ID, sign_bits, stream

SAMPLE_TAG = 0x534D
SHIFT_TAG = 0x5348
SLACK_SIGMAS = 3.0
FLOOR_ATOL = 1e-9
EXACT_NORM_MAX_NNZ = 16


@dataclass(frozen=True, eq=False)
class SignSample:
    seed: int
    index: int
    signs: np.ndarray

    def apply(self, a: SparsePattern) -> SparsePattern:
        return a.with_values(a.val * self.signs)


def sign_sample(a: SparsePattern, seed: int, index: int) -> SignSample:
    return SignSample(seed, index, sign_bits(seed, (SAMPLE_TAG, index), a.nnz))


@dataclass(frozen=True)
class NormEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    all_converged: bool = True

    def as_record(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "generator": GENERATOR_ID,
            "all_converged": self.all_converged,
        }


@dataclass(frozen=True)
class CheckReport:
    """One pass/fail record; ``slack`` is the tolerance the comparison used."""

    quantity: str
    mean: float
    stderr: float
    samples: int
    seed: int
    passed: bool
    slack: float
    detail: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {
            "quantity": self.quantity,
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "generator": GENERATOR_ID,
            "pass": self.passed,
            "slack": self.slack,
            **self.detail,
        }


def _summary(values: np.ndarray) -> tuple[float, float]:
    # fsum in sample order keeps the result independent of scheduling
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _map_ordered(fn, count: int, threads: int) -> list:
    if threads <= 1 or count <= 1:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def sample_norms(a, samples: int, seed: int, tol: float = 1e-10, threads: int = 1,
                 signs_from: SparsePattern | None = None) -> tuple[np.ndarray, bool]:
    """Operator norms of ``samples`` independent realizations, in sample order.

    With ``signs_from = B`` the signs are drawn on ``B``'s entry list and
    restricted to ``a``'s support, which must lie inside ``B``'s.
    """
    a = as_pattern(a)
    if signs_from is None:
        pick = None
        width = a.nnz
    else:
        src = as_pattern(signs_from)
        if (src.rows, src.cols) != (a.rows, a.cols):
            raise ValueError("shape mismatch")
        src_keys = src.row * src.cols + src.col
        keys = a.row * a.cols + a.col
        pick = np.searchsorted(src_keys, keys)
        if np.any(pick >= src.nnz) or not np.array_equal(src_keys[np.minimum(pick, src.nnz - 1)], keys):
            raise ValueError("support of a must lie inside the sign source pattern")
        width = src.nnz

    def one(k: int):
        eps = sign_bits(seed, (SAMPLE_TAG, k), width)
        if pick is not None:
            eps = eps[pick]
        r = operator_norm(a.with_values(a.val * eps), tol=tol)
        return r.value, r.converged

    out = _map_ordered(one, samples, threads)
    return np.array([v for v, _ in out]), all(c for _, c in out)


def estimate_expected_norm(a, samples: int, seed: int, tol: float = 1e-10, threads: int = 1) -> NormEstimate:
    """Monte Carlo estimate of ``E ||(a_ij eps_ij)||``."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    values, conv = sample_norms(a, samples, seed, tol, threads)
    mean, se = _summary(values)
    return NormEstimate(mean, se, samples, seed, conv)


def exact_expected_norm(a) -> float:
    """``E ||eps . A||`` by enumerating every sign pattern (small patterns only).

    Flipping all signs leaves the norm unchanged, so the first sign is fixed.
    """
    a = as_pattern(a)
    if a.nnz > EXACT_NORM_MAX_NNZ:
        raise ValueError(f"exact expectation is limited to {EXACT_NORM_MAX_NNZ} entries")
    if a.nnz == 0:
        return 0.0
    m = a.nnz
    codes = np.arange(1 << (m - 1))
    bits = (codes[:, None] >> np.arange(m - 1)) & 1
    signs = np.hstack([np.ones((len(codes), 1)), 2.0 * bits - 1.0])
    norms = [operator_norm_oracle(a.with_values(a.val * sg).to_dense()) for sg in signs]
    return math.fsum(norms) / len(norms)


def check_contraction(a, b, samples: int, seed: int, tol: float = 1e-10, threads: int = 1) -> CheckReport:
    """``E||eps . A|| <= E||eps . B||`` when ``|A| <= |B|``, with signs shared on ``B``'s support."""
    a, b = as_pattern(a), as_pattern(b)
    if not entrywise_dominates(a.abs(), b.abs()):
        raise ValueError("contraction check needs |a_ij| <= |b_ij| entrywise")
    va, ca = sample_norms(a, samples, seed, tol, threads, signs_from=b)
    vb, cb = sample_norms(b, samples, seed, tol, threads)
    ma, sa = _summary(va)
    mb, sb = _summary(vb)
    slack = SLACK_SIGMAS * (sa + sb)
    return CheckReport(
        "contraction", ma - mb, math.hypot(sa, sb), samples, seed, ma <= mb + slack, slack,
        {"mean_a": ma, "stderr_a": sa, "mean_b": mb, "stderr_b": sb, "converged": ca and cb},
    )


def _shift_coefficients(a: SparsePattern, s: np.ndarray, t: np.ndarray, k: int) -> np.ndarray:
    n = len(s)
    return a.val * s[(a.row + k) % n] * t[(a.col + k) % n]


def check_shift_invariance(spec: CirculantSpec, s, t, p: float, samples: int, seed: int,
                           shifts=None, max_shifts: int = 8) -> CheckReport:
    """L_p of ``sum a_ij eps_ij s_(i+k) t_(j+k)`` across shifts ``k``.

    Exact when the pattern has at most 20 entries (shifted values must agree
    to rounding); otherwise each shift is a Monte Carlo estimate with its
    own stream and the largest pairwise gap is compared with 3 combined
    standard errors.
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    n = spec.n
    if len(s) != n or len(t) != n:
        raise ValueError("s and t must have length n")
    if np.linalg.norm(s) > 1 + 1e-12 or np.linalg.norm(t) > 1 + 1e-12:
        raise ValueError("s and t must have norm at most 1")
    a = circulant_matrix(spec)
    if shifts is None:
        if n <= max_shifts:
            shifts = list(range(n))
        else:
            rng = stream(seed, SHIFT_TAG)
            shifts = [0] + sorted(rng.choice(np.arange(1, n), size=max_shifts - 1, replace=False).tolist())
    shifts = [int(k) for k in shifts]
    exact = a.nnz <= EXACT_MAX_COEFFS
    vals, ses = [], []
    for j, k in enumerate(shifts):
        c = _shift_coefficients(a, s, t, k)
        if exact:
            vals.append(exact_lp_radsum(c, p))
            ses.append(0.0)
        else:
            v, se = mc_lp_radsum(c, p, samples, seed * 1000003 + j)
            vals.append(v)
            ses.append(se)
    vals, ses = np.array(vals), np.array(ses)
    gap = np.abs(vals[:, None] - vals[None, :])
    if exact:
        allowed = 1e-12 * max(1.0, float(vals.max()))
        worst = float(gap.max())
        passed = worst <= allowed
        slack = allowed
    else:
        allowed = SLACK_SIGMAS * (ses[:, None] + ses[None, :])
        worst = float(gap.max())
        passed = bool(np.all(gap <= allowed))
        slack = float(allowed.max())
    return CheckReport(
        "shift_invariance", float(np.mean(vals)), float(np.max(ses)), 0 if exact else samples, seed, passed, slack,
        {"method": "exact" if exact else "mc", "shifts": shifts, "values": vals.tolist(), "max_deviation": worst},
    )


def deterministic_floor(a) -> float:
    """``max(max_i ||row_i||, max_j ||col_j||)``; every realization has at least this norm."""
    a = as_pattern(a)
    if a.nnz == 0:
        return 0.0
    return float(max(a.row_norms().max(), a.col_norms().max()))


def check_floor(a, samples: int, seed: int, tol: float = 1e-10, threads: int = 1) -> CheckReport:
    """Every realization's norm is at least the row/column floor, minus ``1e-9``."""
    a = as_pattern(a)
    values, conv = sample_norms(a, samples, seed, tol, threads)
    floor = deterministic_floor(a)
    worst = float(np.min(values - floor)) if len(values) else 0.0
    violations = int(np.count_nonzero(values < floor - FLOOR_ATOL))
    mean, se = _summary(values)
    return CheckReport(
        "deterministic_floor", mean, se, samples, seed, violations == 0, FLOOR_ATOL,
        {"floor": floor, "min_margin": worst, "violations": violations, "converged": conv},
    )
