"""Closed-form bound evaluators.

Every two-sided "~" estimate is evaluated as a shape function with all
universal constants set to 1.  Only a few terms are rigorous with explicit
constants (row/column floors, ``min(d, sqrt p)``, ``sqrt(p/8)``, the halved
rectangle value); those are the ones that enter ``lower``/``upper`` of
:class:`GraphNpBounds`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from radmat.linalg import SparsePattern
from radmat.patterns import CirculantSpec, DirectedGraph, circulant_matrix, hypercube, hypercube_level
from radmat.rademacher import RadNormConfig, estimate_rad_norm, subset_size

EXACT_REMOVAL_MAX_N = 12
EXACT_SUBGRAPH_MAX_V = 16


def order_for(k: float) -> float:
    """Moment order ``log(k+1)``, clamped to at least 1."""
    return max(1.0, math.log(k + 1))


def row_col_terms(a: SparsePattern) -> tuple[float, float]:
    if a.nnz == 0:
        return 0.0, 0.0
    return float(a.row_norms().max()), float(a.col_norms().max())


@dataclass
class BoundBreakdown:
    max_row_l2: float
    max_col_l2: float
    gamma: float = 0.0
    k_used: int = 0
    removed_set: tuple[int, ...] = ()
    formula: str = ""
    terms: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {
            "formula": self.formula,
            "max_row_l2": self.max_row_l2,
            "max_col_l2": self.max_col_l2,
            "gamma": self.gamma,
            "k_used": self.k_used,
            "removed_set": list(self.removed_set),
        }
        rec.update(self.terms)
        return rec


@dataclass(frozen=True)
class LowerRHSConfig:
    radnorm: RadNormConfig = RadNormConfig(restarts=4, iterations=40, mc_samples=2000)
    exact_max_n: int = EXACT_REMOVAL_MAX_N
    greedy_candidates: int = 16
    greedy_max_steps: int = 32


def dyadic_grid(n: int) -> list[int]:
    grid = [1 << j for j in range(n.bit_length()) if (1 << j) <= n]
    if grid[-1] != n:
        grid.append(n)
    return grid


def _complement(a: SparsePattern, removed) -> SparsePattern:
    if not len(removed):
        return a
    gone = np.zeros(a.rows, dtype=bool)
    gone[list(removed)] = True
    return a.select(~gone[a.row] & ~gone[a.col])


class _RemovalValues:
    """Cached ``||A restricted to i,j not in I||_{eps,q}`` estimates keyed by ``I``."""

    def __init__(self, a, q, config):
        self.a, self.q, self.config = a, q, config
        self.cache: dict[tuple[int, ...], object] = {}

    def estimate(self, removed: tuple[int, ...]):
        removed = tuple(sorted(removed))
        if removed not in self.cache:
            self.cache[removed] = estimate_rad_norm(_complement(self.a, removed), self.q, self.config)
        return self.cache[removed]

    def value(self, removed) -> float:
        return self.estimate(tuple(removed)).lower


def removal_profile(a: SparsePattern, q: float, max_budget: int, config: RadNormConfig | None = None):
    """Exact ``min_{|I| <= b}`` of the estimated sup for every budget ``b <= max_budget``.

    Enumerates all removal sets, so values are nonincreasing in ``b`` by
    construction.  Returns a list of ``(value, argmin set)``.
    """
    n = a.rows
    if n > EXACT_REMOVAL_MAX_N:
        raise ValueError(f"exact removal enumeration is limited to n <= {EXACT_REMOVAL_MAX_N}")
    vals = _RemovalValues(a, q, config or LowerRHSConfig().radnorm)
    best = (math.inf, ())
    profile = []
    for b in range(0, min(max_budget, n) + 1):
        for removed in itertools.combinations(range(n), b):
            v = vals.value(removed)
            if v < best[0]:
                best = (v, removed)
        profile.append(best)
    profile += [best] * (max_budget - min(max_budget, n))
    return profile


def _greedy_removal(a: SparsePattern, q: float, budget: int, config: LowerRHSConfig):
    vals = _RemovalValues(a, q, config.radnorm)
    removed: tuple[int, ...] = ()
    best = (vals.value(removed), removed)
    for _ in range(min(budget, config.greedy_max_steps)):
        est = vals.estimate(removed)
        weight = np.zeros(a.rows)
        weight += np.abs(est.witness.s) ** 2
        weight += np.abs(est.witness.t) ** 2
        weight[list(removed)] = 0.0
        cand = [int(i) for i in np.argsort(-weight, kind="stable")[: config.greedy_candidates] if weight[i] > 0]
        if not cand:
            break
        trials = [(vals.value(removed + (i,)), tuple(sorted(removed + (i,)))) for i in cand]
        v, removed = min(trials)
        if v < best[0]:
            best = (v, removed)
        if v == 0.0:
            break
    return best


def theorem_lower_rhs(a: SparsePattern, config: LowerRHSConfig | None = None) -> BoundBreakdown:
    """The three right-hand-side terms of the general lower bound.

    ``gamma = max_k min_{|I| <= k} sup_{s,t} ||sum_{i,j not in I} a_ij eps_ij s_i t_j||_{log(k+1)}``
    with ``k`` on a dyadic grid, the sup replaced by :func:`estimate_rad_norm`
    and the inner min found exactly (``n <= 12``) or greedily.
    """
    if a.rows != a.cols:
        raise ValueError("the lower bound is stated for square matrices")
    config = config or LowerRHSConfig()
    n = a.rows
    row, col = row_col_terms(a)
    per_k = {}
    best = (-1.0, 0, ())
    for k in dyadic_grid(n):
        q = order_for(k)
        if k >= n:
            v, removed = 0.0, tuple(range(n))
        elif n <= config.exact_max_n:
            v, removed = removal_profile(a, q, k, config.radnorm)[k]
        else:
            v, removed = _greedy_removal(a, q, k, config)
        per_k[k] = v
        if v > best[0]:
            best = (v, k, removed)
    gamma, k_used, removed = best
    terms = {f"gamma_k{k}": v for k, v in per_k.items()}
    terms["total"] = row + col + gamma
    return BoundBreakdown(row, col, gamma, k_used, tuple(removed), "general-lower-rhs", terms)


def seginer_bound(a: SparsePattern) -> float:
    """``log(n+1)^(1/4)`` times the sum of the largest row and column lengths."""
    n = max(a.shape)
    row, col = row_col_terms(a)
    return math.log(n + 1) ** 0.25 * (row + col)


def gaussian_hly_bound(a: SparsePattern) -> float:
    """Largest row length + largest column length + ``sqrt(log n)``; entries must satisfy ``|a| <= 1``."""
    if a.max_abs() > 1 + 1e-12:
        raise ValueError(f"entries must be bounded by 1 in absolute value (max |a| = {a.max_abs()}); rescale first")
    row, col = row_col_terms(a)
    return row + col + math.sqrt(math.log(max(a.shape)))


def band_offset_classes(spec: CirculantSpec) -> int:
    """Number of offset classes ``{delta, n - delta}`` carrying a nonzero band entry."""
    n = spec.n
    nz = [i for i, b in enumerate(spec.band) if b != 0]
    return len({min(i, n - i) for i in nz})


def circulant_bounds(spec: CirculantSpec, config: RadNormConfig | None = None):
    """Two-sided shape bounds for a randomized circulant matrix.

    Returns ``(lower, upper, breakdown)``; for 0-1 bands the breakdown also
    carries the log-log-free form ``sqrt(d) + R``.
    """
    a = circulant_matrix(spec)
    n = spec.n
    q = order_for(n)
    est = estimate_rad_norm(a, q, config)
    r = est.lower
    root = math.sqrt(spec.sq_norm())
    ll = math.log(math.log(n + 3))
    lower = root + r
    upper = math.sqrt(ll) * root + ll * r
    row, col = row_col_terms(a)
    terms = {
        "band_l2": root,
        "rad_norm": r,
        "rad_norm_stderr": est.stderr,
        "rad_norm_order": q,
        "loglog": ll,
        "lower": lower,
        "upper": upper,
    }
    if spec.is_zero_one():
        d = band_offset_classes(spec)
        terms["offsets"] = d
        terms["zero_one_upper"] = math.sqrt(d) + r
    return lower, upper, BoundBreakdown(row, col, formula="circulant-two-sided", terms=terms)


# --------------------------------------------------------------------------
# graph quantities


@dataclass
class GraphNpBounds:
    lower: float
    upper: float
    components: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, **self.components}


def _bitmasks(g: DirectedGraph):
    out_mask = np.zeros(g.n, dtype=np.int64)
    in_mask = np.zeros(g.n, dtype=np.int64)
    np.bitwise_or.at(out_mask, g.edges[:, 0], np.left_shift(1, g.edges[:, 1]))
    np.bitwise_or.at(in_mask, g.edges[:, 1], np.left_shift(1, g.edges[:, 0]))
    return out_mask, in_mask


def _popcount(x):
    return np.bitwise_count(x).astype(np.int64)


def induced_edges(g: DirectedGraph, subset) -> int:
    """``|E cap (I x I)|``."""
    inside = np.zeros(g.n, dtype=bool)
    inside[np.asarray(subset, dtype=np.int64)] = True
    return int(np.sum(inside[g.edges[:, 0]] & inside[g.edges[:, 1]]))


def rectangle_edges(g: DirectedGraph, rows_set, cols_set) -> int:
    a = np.zeros(g.n, dtype=bool)
    b = np.zeros(g.n, dtype=bool)
    a[np.asarray(rows_set, dtype=np.int64)] = True
    b[np.asarray(cols_set, dtype=np.int64)] = True
    return int(np.sum(a[g.edges[:, 0]] & b[g.edges[:, 1]]))


def rectangle_value(g: DirectedGraph, rows_set, cols_set, p: float) -> float:
    """``min(p, |E cap (I x J)|) / sqrt(|I||J|)``."""
    e = rectangle_edges(g, rows_set, cols_set)
    return min(p, e) / math.sqrt(len(rows_set) * len(cols_set))


def _exact_expansion(g: DirectedGraph, p: float) -> float:
    _, in_mask = _bitmasks(g)
    masks = np.arange(1, 1 << g.n, dtype=np.int64)
    w = _popcount(masks[:, None] & in_mask[None, :])
    w = -np.sort(-w, axis=1)
    prefix = np.cumsum(w, axis=1)
    sizes = _popcount(masks)[:, None]
    b = np.arange(1, g.n + 1)[None, :]
    return float(np.max(np.minimum(p, prefix) / np.sqrt(sizes * b)))


def _exact_sparsity(g: DirectedGraph, p: float) -> float:
    out_mask, _ = _bitmasks(g)
    masks = np.arange(1, 1 << g.n, dtype=np.int64)
    e = np.zeros(len(masks), dtype=np.int64)
    for i in range(g.n):
        e += ((masks >> i) & 1) * _popcount(masks & out_mask[i])
    return float(np.max(np.minimum(p, e) / _popcount(masks)))


def _adjacency_lists(g: DirectedGraph):
    order = np.argsort(g.edges[:, 0], kind="stable")
    src, dst = g.edges[order, 0], g.edges[order, 1]
    starts = np.searchsorted(src, np.arange(g.n + 1))
    return [dst[starts[i] : starts[i + 1]] for i in range(g.n)]


def peeling_sets(g: DirectedGraph):
    """Vertex sets along greedy min-degree peeling (densest-subgraph heuristic)."""
    adj = _adjacency_lists(g)
    alive = np.ones(g.n, dtype=bool)
    deg = np.array([len(x) for x in adj], dtype=np.int64)
    deg_sym = deg + g.in_degrees()
    sets = []
    for _ in range(g.n):
        sets.append(np.flatnonzero(alive))
        masked = np.where(alive, deg_sym, np.iinfo(np.int64).max)
        v = int(np.argmin(masked))
        alive[v] = False
        for u in adj[v]:
            deg_sym[u] -= 2
    return sets


def bfs_ball(g: DirectedGraph, center: int, radius: int) -> np.ndarray:
    adj = _adjacency_lists(g)
    seen = {center}
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for u in adj[v].tolist():
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return np.array(sorted(seen))


def _hypercube_dimension(g: DirectedGraph) -> int | None:
    d = g.n.bit_length() - 1
    if g.n != 1 << d or g.num_edges != d * g.n:
        return None
    x = g.edges[:, 0] ^ g.edges[:, 1]
    return d if np.all(_popcount(x) == 1) else None


def _subcube(k: int) -> np.ndarray:
    return np.arange(1 << k)


def harper_sparsity_upper(d: int, p: float) -> float:
    """Upper bound on ``sup_I min(p, |E cap I x I|)/|I|`` for the hypercube.

    Harper's inequality gives ``|E cap I x I| <= |I| log2 |I|``, so the ratio
    is at most ``min(p/x, log2 x)`` with ``x = |I|``; the sup over real
    ``x <= 2^d`` sits where ``x log2 x = p``.
    """
    if p >= d * (1 << d):
        return float(d)
    lo, hi = 1.0, float(1 << d)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid * math.log2(mid) < p:
            lo = mid
        else:
            hi = mid
    return min(float(d), math.log2(hi), p / hi if hi > 1 else p)


def _rectangle_candidates(g: DirectedGraph, p: float):
    k = subset_size(p)
    adj = _adjacency_lists(g)
    deg = np.array([len(x) for x in adj])
    v = int(np.argmax(deg))
    nbrs = adj[v]
    yield [v], nbrs
    yield [v], nbrs[:k]
    for s in peeling_sets(g)[:: max(1, g.n // 64)]:
        yield s, s
    for r in range(1, 6):
        ball = bfs_ball(g, v, r)
        yield ball, ball
        if len(ball) == g.n:
            break
    d = _hypercube_dimension(g)
    if d is not None:
        for lvl in range(1, d + 1):
            yield hypercube_level(d, lvl), hypercube_level(d, lvl - 1)
        for kk in range(1, d + 1):
            yield _subcube(kk), _subcube(kk)


def expansion_value(g: DirectedGraph, p: float, exact: bool | None = None) -> tuple[float, str]:
    """``sup_{I,J} min(p, |E cap I x J|)/sqrt(|I||J|)``, exact for small graphs."""
    if exact is None:
        exact = g.n <= EXACT_SUBGRAPH_MAX_V
    if exact:
        return _exact_expansion(g, p), "exact"
    return max(rectangle_value(g, a, b, p) for a, b in _rectangle_candidates(g, p)), "heuristic"


def sparsity_value(g: DirectedGraph, p: float, exact: bool | None = None) -> tuple[float, str]:
    """``sup_I min(p, |E cap I x I|)/|I|``, exact for small graphs, else a heuristic lower estimate."""
    if exact is None:
        exact = g.n <= EXACT_SUBGRAPH_MAX_V
    if exact:
        return _exact_sparsity(g, p), "exact"
    best = 0.0
    for s in peeling_sets(g):
        best = max(best, min(p, induced_edges(g, s)) / len(s))
    d = _hypercube_dimension(g)
    if d is not None:
        for kk in range(1, d + 1):
            best = max(best, min(p, kk * (1 << kk)) / (1 << kk))
    return best, "heuristic"


def graph_Np_bounds(g: DirectedGraph, p: float, exact: bool | None = None) -> GraphNpBounds:
    """Bounds on ``N_{eps,p}(G) = ||1_E||_{eps,p}``.

    ``upper = min(d, sqrt p)`` and ``lower = max(sqrt(p/8) [p <= d], half the
    rectangle value with floor(p))`` are rigorous.  The raw expansion value
    and ``sqrt(d * sparsity)`` are reported as shape components.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    d = g.max_degree()
    upper = min(d, math.sqrt(p))
    expansion, how = expansion_value(g, p, exact)
    exp_floor, _ = expansion_value(g, float(subset_size(p)), exact)
    comps = {
        "max_degree": d,
        "min_d_sqrt_p": upper,
        "expansion": expansion,
        "expansion_method": how,
        "expansion_certified": 0.5 * exp_floor,
    }
    lower = comps["expansion_certified"]
    if p <= d:
        comps["sqrt_p_over_8"] = math.sqrt(p / 8)
        lower = max(lower, comps["sqrt_p_over_8"])
    sparsity, how = sparsity_value(g, p, exact)
    comps["sparsity"] = sparsity
    comps["sparsity_method"] = how
    comps["sparsity_shape"] = math.sqrt(d * sparsity)
    hd = _hypercube_dimension(g)
    if hd is not None:
        comps["harper_sparsity_upper"] = harper_sparsity_upper(hd, p)
        comps["harper_shape"] = math.sqrt(d * comps["harper_sparsity_upper"])
    return GraphNpBounds(lower, upper, comps)


def hypercube_Np_bounds(d: int, p: float) -> GraphNpBounds:
    """Regime-dispatched shape bounds for ``N_{eps,p}`` of the hypercube ``{0,1}^d``."""
    if d < 1 or p < 1:
        raise ValueError("need d >= 1 and p >= 1")
    if p <= d:
        return GraphNpBounds(math.sqrt(p / 8), math.sqrt(p), {"regime": "small-p", "d": d, "p": p})
    if p >= d * 2**d:
        return GraphNpBounds(float(d), float(d), {"regime": "large-p", "d": d, "p": p})
    lp = math.log(p)
    lower = math.sqrt(d * lp / math.log(math.e * d / lp))
    return GraphNpBounds(lower, math.sqrt(d * lp), {"regime": "middle", "d": d, "p": p})


def torus_reduction_factor(m: int) -> int:
    if m < 2:
        raise ValueError("m must be at least 2")
    if m == 2:
        return 1
    return 2 if m % 2 == 0 else 3


def torus_expected_norm_bounds(m: int, d: int) -> tuple[float, float]:
    """Shape sandwich for the expected norm of the randomized torus ``Z_m^d``."""
    if m < 2 or d < 2:
        raise ValueError("need m, d >= 2")
    hb = hypercube_Np_bounds(d, d * math.log(m))
    root = math.sqrt(d)
    return root + hb.lower, root + torus_reduction_factor(m) * hb.upper


def harper_check(d: int, subsets) -> list[tuple[int, int, int]]:
    """Violations of ``|E cap I x I| <= k 2^k`` for ``|I| <= 2^k``; empty when the inequality holds."""
    bad = []
    g = hypercube(d)
    for s in subsets:
        s = np.unique(np.asarray(s, dtype=np.int64))
        if len(s) == 0:
            continue
        k = max(0, math.ceil(math.log2(len(s))))
        e = induced_edges(g, s)
        if e > k * (1 << k):
            bad.append((len(s), e, k))
    return bad
