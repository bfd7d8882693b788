"""L_p norms of Rademacher sums and the matrix quantity ``||A||_{eps,p}``.

``||A||_{eps,p}`` is the supremum over unit ``s, t`` of the L_p norm of
``sum_ij a_ij eps_ij s_i t_j``.  It is not computable exactly, so
:func:`estimate_rad_norm` returns the best *feasible* value it can certify
(an exact or Monte Carlo L_p value at an explicit witness pair) together
with the optimum of the Hitczenko surrogate that guided the search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from radmat.linalg import SparsePattern, operator_norm
from radmat.rng import sign_bits, stream

EXACT_MAX_COEFFS = 20
EXACT_SUBSET_BUDGET = 10**6
EXACT_SMALL_NNZ = 24

_MC_TAG = 0x4D43
_ASCENT_TAG = 0x4153
_CERT_TAG = 0x4345


def _as_abs_vector(c) -> np.ndarray:
    return np.abs(np.asarray(c, dtype=np.float64).ravel())


def hitczenko_lp(c, p: float) -> float:
    """Head sum of the ``floor(p)`` largest ``|c_k|`` plus ``sqrt(p)`` times the l2 norm of the rest."""
    if p < 1:
        raise ValueError("p must be at least 1")
    c = np.sort(_as_abs_vector(c))[::-1]
    k = int(math.floor(p))
    return float(np.sum(c[:k]) + math.sqrt(p) * math.sqrt(np.sum(c[k:] ** 2)))


def _hitczenko_grad(c: np.ndarray, p: float) -> np.ndarray:
    # linearization at c >= 0: <grad, c> == hitczenko_lp(c, p)
    k = int(math.floor(p))
    order = np.argsort(-c, kind="stable")
    g = np.zeros_like(c)
    g[order[:k]] = 1.0
    tail = order[k:]
    tn = math.sqrt(float(np.sum(c[tail] ** 2)))
    if tn > 0:
        g[tail] = math.sqrt(p) * c[tail] / tn
    return g


def radsum_values(c) -> np.ndarray:
    """``|sum_k c_k sigma_k|`` over all sign patterns with ``sigma_1 = +1``.

    By symmetry these ``2^(m-1)`` values are equally likely and carry the
    full distribution of ``|S|``.
    """
    c = np.asarray(c, dtype=np.float64).ravel()
    c = c[c != 0]
    if len(c) > EXACT_MAX_COEFFS:
        raise ValueError(f"exact enumeration is limited to {EXACT_MAX_COEFFS} coefficients, got {len(c)}")
    if len(c) == 0:
        return np.zeros(1)
    sums = np.array([c[0]])
    for x in c[1:]:
        sums = np.concatenate([sums + x, sums - x])
    return np.abs(sums)


def lp_of_values(values: np.ndarray, p: float) -> float:
    """``(mean |v|^p)^(1/p)`` computed with scaling to avoid overflow."""
    top = float(values.max()) if len(values) else 0.0
    if top == 0:
        return 0.0
    return top * float(np.mean((values / top) ** p)) ** (1.0 / p)


def exact_lp_radsum(c, p: float) -> float:
    """``||sum_k c_k eps_k||_p`` by enumerating every sign pattern (at most 20 coefficients)."""
    if p <= 0:
        raise ValueError("p must be positive")
    return lp_of_values(radsum_values(c), p)


def paley_zygmund_check(c, p: float) -> dict:
    """Exact ``P(|S| >= ||S||_p / 2)`` against ``(||S||_p / ||S||_2p)^(2p) / 4``."""
    vals = radsum_values(c)
    lp, l2p = lp_of_values(vals, p), lp_of_values(vals, 2 * p)
    prob = float(np.mean(vals >= 0.5 * lp))
    bound = 0.25 * (lp / l2p) ** (2 * p) if l2p > 0 else 0.0
    return {"p": p, "lp": lp, "l2p": l2p, "probability": prob, "bound": bound, "pass": prob >= bound}


def khintchine_check(c, p: float) -> dict:
    """Exact ``||S||_p`` against ``sqrt(p) ||S||_2`` (valid for ``p >= 2``)."""
    vals = radsum_values(c)
    lp, l2 = lp_of_values(vals, p), lp_of_values(vals, 2)
    bound = math.sqrt(p) * l2
    return {"p": p, "lp": lp, "bound": bound, "pass": lp <= bound * (1 + 1e-12)}


def mc_lp_radsum(c, p: float, samples: int, seed: int, chunk: int = 4096) -> tuple[float, float]:
    """Monte Carlo estimate of ``||sum c_k eps_k||_p`` and its delta-method stderr.

    Signs for chunk ``j`` come from the counter ``(seed, j)`` so the result
    does not depend on how chunks are scheduled.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    c = np.asarray(c, dtype=np.float64).ravel()
    c = c[c != 0]
    if len(c) == 0:
        return 0.0, 0.0
    scale = float(np.abs(c).max())
    cs = c / scale
    moments = []
    for j, start in enumerate(range(0, samples, chunk)):
        size = min(chunk, samples - start)
        eps = sign_bits(seed, (_MC_TAG, j), size * len(c)).reshape(size, len(c))
        moments.append(np.abs(eps @ cs) ** p)
    z = np.concatenate(moments)
    mean = float(np.mean(z))
    if mean == 0:
        return 0.0, 0.0
    se_mean = float(np.std(z, ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
    est = mean ** (1.0 / p)
    stderr = est * se_mean / (p * mean)
    return scale * est, scale * stderr


# --------------------------------------------------------------------------
# combinatorial surrogate M(A, p)


@dataclass(frozen=True)
class CombinatorialM:
    value: float
    subset: np.ndarray
    mode: str
    budget: int = 0

    def pattern(self, a: SparsePattern) -> SparsePattern:
        mask = np.zeros(a.nnz, dtype=bool)
        mask[self.subset] = True
        return a.abs().select(mask)


def subset_size(p: float) -> int:
    return max(1, int(math.floor(p)))


def _subset_norms(row: np.ndarray, col: np.ndarray, w: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Spectral norms of ``|A|`` restricted to each row of entry indices ``idx``.

    Uses ``||R W C^T|| = ||(R^T R)^(1/2) W (C^T C)^(1/2)||`` so every subset
    becomes a ``k x k`` matrix regardless of which rows/columns it touches.
    """
    idx = np.atleast_2d(idx)
    r, c, v = row[idx], col[idx], np.abs(w[idx])
    req = (r[:, :, None] == r[:, None, :]).astype(np.float64)
    ceq = (c[:, :, None] == c[:, None, :]).astype(np.float64)
    req /= np.sqrt(req.sum(axis=2))[:, :, None]
    ceq /= np.sqrt(ceq.sum(axis=2))[:, None, :]
    b = req * v[:, None, :] @ ceq
    return np.linalg.svd(b, compute_uv=False)[:, 0]


def _pick(values: np.ndarray, rel: float = 1e-12) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best - rel * abs(best))[0])


def _touching(row, col, chosen: np.ndarray, exclude: np.ndarray) -> np.ndarray:
    """Entries sharing a row or column with ``chosen``, plus the largest isolated entry."""
    nnz = len(row)
    avail = np.ones(nnz, dtype=bool)
    avail[exclude] = False
    if len(chosen):
        near = np.isin(row, row[chosen]) | np.isin(col, col[chosen])
    else:
        near = np.zeros(nnz, dtype=bool)
    pool = np.flatnonzero(avail & near)
    far = np.flatnonzero(avail & ~near)
    return pool, far


def _candidates(row, col, aw, chosen, exclude):
    pool, far = _touching(row, col, chosen, exclude)
    if len(far):
        pool = np.sort(np.append(pool, far[np.argmax(aw[far])]))
    return pool


def combinatorial_M(a: SparsePattern, p: float, mode: str = "local") -> CombinatorialM:
    """Largest norm of ``|A|`` restricted to at most ``floor(p)`` entries.

    ``exact`` enumerates all subsets (refused beyond the budget), ``greedy``
    adds the entry with the largest norm gain, ``local`` improves the greedy
    set by single-entry swaps.  Ties go to the lowest (row, col) entry.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    k = subset_size(p)
    nnz = a.nnz
    if nnz == 0:
        return CombinatorialM(0.0, np.zeros(0, dtype=np.int64), mode)
    row, col, aw = a.row, a.col, np.abs(a.val)
    if nnz <= k:
        idx = np.arange(nnz)
        return CombinatorialM(float(_subset_norms(row, col, aw, idx[None, :])[0]), idx, mode)
    if mode == "exact":
        return _exact_M(row, col, aw, k)
    if mode not in ("greedy", "local"):
        raise ValueError(f"unknown mode {mode!r}")
    chosen = np.zeros(0, dtype=np.int64)
    value = 0.0
    for _ in range(k):
        pool = _candidates(row, col, aw, chosen, chosen)
        trial = np.concatenate([np.broadcast_to(chosen, (len(pool), len(chosen))), pool[:, None]], axis=1)
        vals = _subset_norms(row, col, aw, trial)
        j = _pick(vals)
        chosen = np.sort(trial[j])
        value = float(vals[j])
    if mode == "greedy":
        return CombinatorialM(value, chosen, "greedy")
    for _ in range(10 * k + 100):
        best_val, best_set = value, None
        for pos in range(k):
            rest = np.delete(chosen, pos)
            pool = _candidates(row, col, aw, rest, chosen)
            if not len(pool):
                continue
            trial = np.concatenate([np.broadcast_to(rest, (len(pool), k - 1)), pool[:, None]], axis=1)
            vals = _subset_norms(row, col, aw, trial)
            j = _pick(vals)
            if vals[j] > best_val * (1 + 1e-12):
                best_val, best_set = float(vals[j]), np.sort(trial[j])
        if best_set is None:
            break
        value, chosen = best_val, best_set
    return CombinatorialM(value, chosen, "local")


def exact_M_budget(nnz: int, p: float) -> int:
    return comb(nnz, min(subset_size(p), nnz))


def _exact_M(row, col, aw, k, chunk: int = 20000) -> CombinatorialM:
    nnz = len(row)
    budget = comb(nnz, k)
    if not (nnz <= EXACT_SMALL_NNZ or budget <= EXACT_SUBSET_BUDGET):
        raise ValueError(
            f"exact mode over budget: C({nnz},{k}) = {budget} subsets exceeds {EXACT_SUBSET_BUDGET} "
            f"and nnz {nnz} exceeds {EXACT_SMALL_NNZ}"
        )
    best_val, best_set = -1.0, None
    combos = itertools.combinations(range(nnz), k)
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64)
        if not len(flat):
            break
        idx = flat.reshape(-1, k)
        vals = _subset_norms(row, col, aw, idx)
        j = _pick(vals)
        if vals[j] > best_val * (1 + 1e-12):
            best_val, best_set = float(vals[j]), idx[j].copy()
    return CombinatorialM(best_val, best_set, "exact", budget)


# --------------------------------------------------------------------------
# ||A||_{eps,p}


@dataclass(frozen=True)
class RadNormConfig:
    restarts: int = 8
    iterations: int = 60
    mc_samples: int = 4000
    seed: int = 0
    exact_max: int = EXACT_MAX_COEFFS
    m_mode: str = "local"
    certify_top: int = 4


@dataclass(frozen=True, eq=False)
class WitnessPair:
    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        for v in (self.s, self.t):
            if np.linalg.norm(v) > 1 + 1e-9:
                raise ValueError("witness vectors must have norm at most 1")


@dataclass(frozen=True, eq=False)
class RadNormEstimate:
    p: float
    lower: float
    stderr: float
    method: str
    certified_floor: float
    surrogate: float
    restricted_surrogate: float
    surrogate_upper: float
    witness: WitnessPair
    source: str
    support: int
    candidates: dict = field(default_factory=dict, repr=False)

    def as_record(self) -> dict:
        return {
            "p": self.p,
            "lower": self.lower,
            "stderr": self.stderr,
            "method": self.method,
            "certified_floor": self.certified_floor,
            "surrogate": self.surrogate,
            "restricted_surrogate": self.restricted_surrogate,
            "surrogate_upper": self.surrogate_upper,
            "witness_source": self.source,
            "witness_support": self.support,
        }


def witness_coefficients(a: SparsePattern, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    return a.val * s[a.row] * t[a.col]


def lp_at_witness(
    a: SparsePattern, s: np.ndarray, t: np.ndarray, p: float, config: RadNormConfig = RadNormConfig(), counter: int = 0
) -> tuple[float, float, str, float]:
    """L_p norm of the bilinear sign sum at ``(s, t)``.

    Returns ``(value, stderr, method, floor)``.  ``floor`` is the exact L_p
    of the largest ``exact_max`` coefficients, a rigorous lower bound since
    adding independent mean-zero terms never decreases an L_p norm.
    """
    coef = witness_coefficients(a, s, t)
    coef = coef[coef != 0]
    if len(coef) <= config.exact_max:
        v = exact_lp_radsum(coef, p)
        return v, 0.0, "exact", v
    top = np.sort(np.abs(coef))[::-1][: config.exact_max]
    floor = exact_lp_radsum(top, p)
    est, se = mc_lp_radsum(coef, p, config.mc_samples, config.seed * 1000003 + counter)
    return est, se, "mc", floor


def _unit(v: np.ndarray, support: int | None = None) -> np.ndarray | None:
    v = np.abs(v)
    if support is not None and support < np.count_nonzero(v):
        cut = np.argsort(-v, kind="stable")[support:]
        v = v.copy()
        v[cut] = 0.0
    nv = np.linalg.norm(v)
    if nv == 0:
        return None
    return v / nv


def _ascent(a, aw, p, s, t, iterations, support):
    row, col = a.row, a.col

    def h(s_, t_):
        return hitczenko_lp(aw * s_[row] * t_[col], p)

    best = (h(s, t), s, t)
    stale = 0
    for _ in range(iterations):
        g = _hitczenko_grad(aw * s[row] * t[col], p)
        s_new = _unit(np.bincount(row, weights=g * aw * t[col], minlength=a.rows), support)
        if s_new is None:
            break
        s = s_new
        g = _hitczenko_grad(aw * s[row] * t[col], p)
        t_new = _unit(np.bincount(col, weights=g * aw * s[row], minlength=a.cols), support)
        if t_new is None:
            break
        t = t_new
        val = h(s, t)
        if val > best[0] * (1 + 1e-10):
            best = (val, s, t)
            stale = 0
        else:
            stale += 1
            if stale >= 5:
                break
    return best


def _indicator(n: int, idx, weights=None) -> np.ndarray:
    v = np.zeros(n)
    v[idx] = 1.0 if weights is None else weights
    return v / np.linalg.norm(v)


def _star_witnesses(a: SparsePattern, aw: np.ndarray, p: float, axis: int):
    """Witnesses concentrated on one row (axis 0) or column (axis 1)."""
    k = subset_size(p)
    own = a.row if axis == 0 else a.col
    other = a.col if axis == 0 else a.row
    n_own, n_other = (a.rows, a.cols) if axis == 0 else (a.cols, a.rows)
    order = np.lexsort((-aw, own))
    own_s, other_s, aw_s = own[order], other[order], aw[order]
    starts = np.searchsorted(own_s, np.arange(n_own))
    ends = np.searchsorted(own_s, np.arange(n_own), side="right")
    lengths = ends - starts
    sq = np.bincount(own, weights=aw**2, minlength=n_own)
    head = np.array([aw_s[s0 : s0 + min(k, ln)].sum() for s0, ln in zip(starts, lengths)])
    picks = np.unique(np.concatenate([np.argsort(-sq, kind="stable")[:3], np.argsort(-head, kind="stable")[:3]]))
    out = []
    for i in picks:
        if lengths[i] == 0:
            continue
        seg = slice(starts[i], ends[i])
        idx, w = other_s[seg], aw_s[seg]
        e = _indicator(n_own, [i])
        for name, vec in (
            ("uniform-head", _indicator(n_other, idx[:k])),
            ("weighted-head", _indicator(n_other, idx[:k], w[:k])),
            ("weighted-all", _indicator(n_other, idx, w)),
        ):
            s, t = (e, vec) if axis == 0 else (vec, e)
            out.append((f"{'row' if axis == 0 else 'col'}-star:{name}", s, t))
    return out


def _perron_pair(b: SparsePattern, seed: int):
    """Leading singular pair of a nonnegative pattern (vectors taken nonnegative)."""
    dense_ok = b.rows * b.cols <= 4_000_000 and min(b.rows, b.cols) <= 2000
    if dense_ok:
        u, _, vt = np.linalg.svd(b.to_dense(), full_matrices=False)
        s, t = np.abs(u[:, 0]), np.abs(vt[0])
    else:
        csr = b.to_csr()
        t = stream(seed, 0x5045).random(b.cols) + 0.5
        for _ in range(300):
            s = csr @ t
            s /= np.linalg.norm(s)
            t_new = csr.T @ s
            t_new /= np.linalg.norm(t_new)
            if np.linalg.norm(t_new - t) < 1e-12:
                t = t_new
                break
            t = t_new
        s = csr @ t
        s /= np.linalg.norm(s)
    return s / np.linalg.norm(s), t / np.linalg.norm(t)


def proof_witnesses(a: SparsePattern, p: float, config: RadNormConfig = RadNormConfig()):
    """Witnesses taken from the lower-bound arguments: max entry, row/column stars, M-subset."""
    aw = np.abs(a.val)
    out = []
    e = int(np.argmax(aw))
    out.append(("max-entry", _indicator(a.rows, [a.row[e]]), _indicator(a.cols, [a.col[e]])))
    stars = _star_witnesses(a, aw, p, 0) + _star_witnesses(a, aw, p, 1)
    stars.sort(key=lambda x: -hitczenko_lp(aw * x[1][a.row] * x[2][a.col], p))
    out.extend(stars[: config.certify_top])
    mode = config.m_mode
    if mode == "exact" and not (a.nnz <= EXACT_SMALL_NNZ or exact_M_budget(a.nnz, p) <= EXACT_SUBSET_BUDGET):
        mode = "local"
    msub = combinatorial_M(a, p, mode)
    s, t = _perron_pair(msub.pattern(a), config.seed)
    out.append(("M-subset", s, t))
    return out, msub


def estimate_rad_norm(a: SparsePattern, p: float, config: RadNormConfig | None = None) -> RadNormEstimate:
    """Certified feasible value of ``||A||_{eps,p}`` plus the surrogate optimum.

    Candidates: the proof-derived witnesses, the leading singular pair of
    ``|A|``, and projected ascent on the Hitczenko surrogate from seeded
    random starts (alternately unrestricted and with supports of size
    ``ceil(p)``).  Every proof witness and the best ascent results are
    evaluated exactly (at most ``exact_max`` nonzero coefficients) or by Monte
    Carlo; the largest value is reported as ``lower``.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    config = config or RadNormConfig()
    if a.nnz == 0:
        z = WitnessPair(np.zeros(a.rows), np.zeros(a.cols))
        return RadNormEstimate(p, 0.0, 0.0, "exact", 0.0, 0.0, 0.0, 0.0, z, "empty", 0)
    aw = np.abs(a.val)
    absa = a.abs()
    support = int(math.ceil(p))

    def surrogate(s, t):
        return hitczenko_lp(aw * s[a.row] * t[a.col], p)

    proofs, msub = proof_witnesses(a, p, config)
    s, t = _perron_pair(absa, config.seed)
    proofs.append(("top-singular", s, t))

    ascents = []
    for r in range(config.restarts):
        rng = stream(config.seed, _ASCENT_TAG, r)
        s0 = _unit(rng.random(a.rows) + 1e-3)
        t0 = _unit(rng.random(a.cols) + 1e-3)
        sup = support if r % 2 else None
        val, s, t = _ascent(a, aw, p, s0, t0, config.iterations, sup)
        ascents.append((f"ascent:{r}{'-sparse' if sup else ''}", s, t, val))
    # polish the proof witnesses too; ascent never lowers the surrogate
    for name, s, t in list(proofs):
        val, s2, t2 = _ascent(a, aw, p, s, t, config.iterations, None)
        ascents.append((f"polished:{name}", s2, t2, val))
    ascents.sort(key=lambda x: -x[3])

    surrogate_best = max([x[3] for x in ascents] + [surrogate(s, t) for _, s, t in proofs])

    def within_support(s, t):
        return np.count_nonzero(s) <= support and np.count_nonzero(t) <= support

    restricted = [surrogate(s, t) for _, s, t in proofs if within_support(s, t)]
    restricted += [x[3] for x in ascents if within_support(x[1], x[2])]
    restricted_best = max(restricted) if restricted else 0.0

    to_certify = [(n, s, t) for n, s, t in proofs] + [(n, s, t) for n, s, t, _ in ascents[:2]]
    results = {}
    best = None
    for counter, (name, s, t) in enumerate(to_certify):
        value, se, method, floor = lp_at_witness(a, s, t, p, config, counter)
        results[name] = value
        if best is None or value > best[0] * (1 + 1e-12):
            best = (value, se, method, floor, name, s, t)
    value, se, method, floor, name, s, t = best
    row_max = float(a.row_norms().max())
    col_max = float(a.col_norms().max())
    return RadNormEstimate(
        p=p,
        lower=value,
        stderr=se,
        method=method,
        certified_floor=floor,
        surrogate=surrogate_best,
        restricted_surrogate=restricted_best,
        surrogate_upper=restricted_best + row_max + col_max,
        witness=WitnessPair(s, t),
        source=name,
        support=int(np.count_nonzero(witness_coefficients(a, s, t))),
        candidates=results,
    )


def block_max_radnorm(blocks: list[SparsePattern], p: float, config: RadNormConfig | None = None) -> RadNormEstimate:
    """``||A||_{eps,p}`` of a block-diagonal matrix is the largest block value."""
    if not blocks:
        raise ValueError("need at least one block")
    ests = [estimate_rad_norm(b, p, config) for b in blocks]
    return max(ests, key=lambda e: e.lower)


def block_diagonal(blocks: list[SparsePattern]) -> SparsePattern:
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    r0 = c0 = 0
    rs, cs, vs = [], [], []
    for b in blocks:
        rs.append(b.row + r0)
        cs.append(b.col + c0)
        vs.append(b.val)
        r0 += b.rows
        c0 += b.cols
    return SparsePattern.from_arrays(rows, cols, np.concatenate(rs), np.concatenate(cs), np.concatenate(vs))


def spectral_norm(a: SparsePattern) -> float:
    return operator_norm(a).value
