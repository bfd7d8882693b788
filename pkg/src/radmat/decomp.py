"""Upper/lower cubes of circulant graphs and the block-diagonal cover built from them.

All vertex arithmetic is mod ``n``.  Each construction re-derives its
guarantees from scratch before returning and raises
:class:`CertificateError` if one fails; a failure means a bug here, since
the combinatorial lemmas guarantee success.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from radmat.bounds import order_for, row_col_terms
from radmat.linalg import SparsePattern, entrywise_dominates
from radmat.patterns import CirculantSpec, OffsetGraphSpec, circulant_graph, circulant_matrix
from radmat.rademacher import RadNormConfig, estimate_rad_norm

MAX_CUBE_DIM = 20
COVER_FRACTION = 1.0 / 32
EXPLICIT_COVER_MAX_N = 512


class CertificateError(RuntimeError):
    """A construction failed one of its recomputed guarantees."""


def subset_sums(spec: OffsetGraphSpec) -> np.ndarray:
    """Distinct values of ``sum_{i in I} p_i mod n`` over all ``I subset [d]``."""
    if spec.d > MAX_CUBE_DIM:
        raise ValueError(f"cube enumeration is limited to d <= {MAX_CUBE_DIM}, got {spec.d}")
    sums = np.zeros(1, dtype=np.int64)
    for p in spec.offsets:
        sums = np.unique(np.concatenate([sums, (sums + p) % spec.n]))
    return sums


def lower_cube(k: int, spec: OffsetGraphSpec, sums: np.ndarray | None = None) -> np.ndarray:
    """``D_k = {k - sum_{i in I} p_i mod n}``, sorted."""
    sums = subset_sums(spec) if sums is None else sums
    return np.unique((k - sums) % spec.n)


def upper_cube(k: int, spec: OffsetGraphSpec, sums: np.ndarray | None = None) -> np.ndarray:
    """``U_k = {k + sum_{i in I} p_i mod n}``, sorted."""
    sums = subset_sums(spec) if sums is None else sums
    return np.unique((k + sums) % spec.n)


@dataclass(frozen=True, eq=False)
class CubeFamily:
    spec: OffsetGraphSpec
    sums: np.ndarray

    @classmethod
    def of(cls, spec: OffsetGraphSpec) -> "CubeFamily":
        return cls(spec, subset_sums(spec))

    @property
    def m(self) -> int:
        return len(self.sums)

    @property
    def n(self) -> int:
        return self.spec.n

    def lower(self, k: int) -> np.ndarray:
        return lower_cube(k, self.spec, self.sums)

    def upper(self, k: int) -> np.ndarray:
        return upper_cube(k, self.spec, self.sums)

    def lower_membership(self) -> np.ndarray:
        """Boolean ``n x n`` table, row ``k`` is the indicator of ``D_k``."""
        n = self.n
        table = np.zeros((n, n), dtype=bool)
        ks = np.arange(n)[:, None]
        table[np.broadcast_to(ks, (n, self.m)), (ks - self.sums[None, :]) % n] = True
        return table


def cube_identities(spec: OffsetGraphSpec, family: CubeFamily | None = None) -> dict:
    """Recheck sizes, ``i in D_k <=> k in U_i``, column sums ``m`` and ``D_(k+1) = D_k + 1`` for every ``k``."""
    family = family or CubeFamily.of(spec)
    n, m = spec.n, family.m
    table = family.lower_membership()
    sizes_ok = bool(np.all(table.sum(axis=1) == m))
    upper = np.zeros((n, n), dtype=bool)
    for i in range(n):
        upper[i, family.upper(i)] = True
    upper_sizes_ok = bool(np.all(upper.sum(axis=1) == m))
    # table[k, i] is i in D_k; upper[i, k] is k in U_i
    duality_ok = bool(np.array_equal(table, upper.T))
    counts_ok = bool(np.all(table.sum(axis=0) == m))
    shift_ok = bool(np.array_equal(np.roll(np.roll(table, 1, axis=0), 1, axis=1), table))
    cert = {"n": n, "m": m, "lower_sizes": sizes_ok, "upper_sizes": upper_sizes_ok,
            "duality": duality_ok, "column_counts": counts_ok, "shift_covariance": shift_ok}
    cert["ok"] = sizes_ok and upper_sizes_ok and duality_ok and counts_ok and shift_ok
    return cert


def exclusion_pick(excluded, spec: OffsetGraphSpec, c: float, family: CubeFamily | None = None) -> int:
    """First ``k`` (ascending) with ``|D_k minus J| >= (1 - c) m``.

    Averaging over ``k`` guarantees one exists whenever ``|J| <= c n``.
    """
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    family = family or CubeFamily.of(spec)
    n, m = spec.n, family.m
    excluded = np.unique(np.asarray(excluded, dtype=np.int64))
    if len(excluded) > c * n:
        raise ValueError(f"|J| = {len(excluded)} exceeds c*n = {c * n}")
    in_j = np.zeros(n, dtype=bool)
    in_j[excluded] = True
    # |D_k cap J| for every k at once: D_k = k - sums
    hits = np.zeros(n, dtype=np.int64)
    for s in family.sums:
        hits += in_j[(np.arange(n) - s) % n]
    ok = np.flatnonzero(m - hits >= (1 - c) * m)
    if not len(ok):
        raise CertificateError("no admissible cube center found")
    k = int(ok[0])
    if len(np.setdiff1d(family.lower(k), excluded)) < (1 - c) * m:
        raise CertificateError(f"exclusion pick {k} fails its recheck")
    return k


def _induced_edge_count(nodes: np.ndarray, spec: OffsetGraphSpec) -> int:
    inside = np.zeros(spec.n, dtype=bool)
    inside[nodes] = True
    deltas = spec.signed_offsets()
    return int(sum(np.count_nonzero(inside[(nodes + dlt) % spec.n]) for dlt in deltas))


@dataclass(frozen=True, eq=False)
class GoodSequence:
    spec: OffsetGraphSpec
    m: int
    centers: tuple[int, ...]
    parts: tuple[np.ndarray, ...]
    part_edges: tuple[int, ...]
    certificates: dict = field(default_factory=dict)

    @property
    def s(self) -> int:
        return len(self.centers)

    @property
    def covered_edges(self) -> int:
        return sum(self.part_edges)


def certify_good_sequence(seq: GoodSequence, family: CubeFamily) -> dict:
    spec, m = seq.spec, family.m
    n, d = spec.n, spec.d
    seen = np.zeros(n, dtype=np.int64)
    subset_ok = True
    for k, part in zip(seq.centers, seq.parts):
        seen[part] += 1
        subset_ok &= bool(np.all(np.isin(part, family.lower(k))))
    edges = [_induced_edge_count(part, spec) for part in seq.parts]
    cert = {
        "s": seq.s,
        "m": m,
        "s_bound": n / (8 * m),
        "s_ok": seq.s >= n / (8 * m),
        "min_part": min(len(p) for p in seq.parts),
        "part_bound": 7 * m / 8,
        "parts_ok": all(len(p) >= 7 * m / 8 for p in seq.parts),
        "disjoint": bool(seen.max() <= 1),
        "inside_cubes": subset_ok,
        "edges": sum(edges),
        "edge_bound": d * n / 16,
        "edges_ok": sum(edges) >= d * n / 16,
        "edges_match": tuple(edges) == tuple(seq.part_edges),
    }
    cert["ok"] = all(cert[k] for k in ("s_ok", "parts_ok", "disjoint", "inside_cubes", "edges_ok", "edges_match"))
    return cert


def good_sequence(spec: OffsetGraphSpec, family: CubeFamily | None = None) -> GoodSequence:
    """Centers ``k_1..k_s`` (``s = ceil(n/8m)``) whose trimmed lower cubes are large and disjoint."""
    family = family or CubeFamily.of(spec)
    n, m = spec.n, family.m
    s = math.ceil(n / (8 * m))
    centers: list[int] = []
    parts: list[np.ndarray] = []
    used = np.zeros(0, dtype=np.int64)
    for _ in range(s):
        k = exclusion_pick(used, spec, 1 / 8, family)
        cube = family.lower(k)
        part = np.setdiff1d(cube, used)
        centers.append(k)
        parts.append(part)
        used = np.union1d(used, cube)
    seq = GoodSequence(spec, m, tuple(centers), tuple(parts), tuple(_induced_edge_count(p, spec) for p in parts))
    cert = certify_good_sequence(seq, family)
    if not cert["ok"]:
        raise CertificateError(f"good sequence certificate failed: {cert}")
    return GoodSequence(seq.spec, m, seq.centers, seq.parts, seq.part_edges, cert)


@dataclass(frozen=True, eq=False)
class BlockCover:
    """Cyclic shifts ``B_k`` (``k = 0..n-1``) of the good-sequence block pattern.

    ``B_k`` is the adjacency of ``union_l ((I_l + k) x (I_l + k)) cap E``.
    Matrices are built on demand by :meth:`matrix`.
    """

    spec: OffsetGraphSpec
    sequence: GoodSequence
    certificates: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.spec.n

    def blocks(self, k: int) -> list[np.ndarray]:
        return [np.sort((part + k) % self.spec.n) for part in self.sequence.parts]

    def matrix(self, k: int) -> SparsePattern:
        n = self.spec.n
        deltas = self.spec.signed_offsets()
        label = np.full(n, -1)
        for l, block in enumerate(self.blocks(k)):
            label[block] = l
        src = np.repeat(np.arange(n), len(deltas))
        dst = (src + np.tile(deltas, n)) % n
        keep = (label[src] >= 0) & (label[src] == label[dst])
        return SparsePattern.from_arrays(n, n, src[keep], dst[keep], 1.0)

    def matrices(self) -> list[SparsePattern]:
        return [self.matrix(k) for k in range(self.N)]

    def average(self) -> SparsePattern:
        """``(1/N) sum_k B_k`` built explicitly."""
        n = self.N
        mats = self.matrices()
        r = np.concatenate([b.row for b in mats])
        c = np.concatenate([b.col for b in mats])
        return SparsePattern.from_arrays(n, n, r, c, 1.0 / n, merge=True)

    def write(self, directory) -> list[str]:
        """One pattern file ``B_<k>.txt`` per cover matrix plus ``certificate.json``."""
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        width = len(str(self.N - 1))
        names = []
        for k in range(self.N):
            name = f"B_{k:0{width}d}.txt"
            (root / name).write_text(self.matrix(k).dumps())
            names.append(name)
        rec = {key: (v.item() if isinstance(v, np.generic) else v) for key, v in self.record().items()}
        (root / "certificate.json").write_text(json.dumps({**rec, "files": names}, indent=2) + "\n")
        return names

    def record(self) -> dict:
        return {
            "N": self.N,
            "m": self.sequence.m,
            "s": self.sequence.s,
            "block_sizes": [len(p) for p in self.sequence.parts],
            **self.certificates,
        }


def shift_counts(spec: OffsetGraphSpec, parts) -> dict[int, int]:
    """``#{k : (i, i + delta) in some (I_l + k) x (I_l + k)}`` per signed offset ``delta``.

    The count is the same for every ``i``: it equals ``sum_l |I_l cap (I_l - delta)|``.
    """
    n = spec.n
    out = {}
    for dlt in spec.signed_offsets().tolist():
        total = 0
        for part in parts:
            inside = np.zeros(n, dtype=bool)
            inside[part] = True
            total += int(np.count_nonzero(inside[(part + dlt) % n]))
        out[dlt] = total
    return out


def certify_cover(cover: BlockCover, explicit: bool | None = None) -> dict:
    spec = cover.spec
    n, d = spec.n, spec.d
    if explicit is None:
        explicit = n <= EXPLICIT_COVER_MAX_N
    sizes = [len(p) for p in cover.sequence.parts]
    counts = shift_counts(spec, cover.sequence.parts)
    min_ratio = min(counts.values()) / cover.N
    cert = {
        "max_block": max(sizes),
        "block_bound": 2**d,
        "blocks_ok": max(sizes) <= 2**d,
        "min_average": min_ratio,
        "average_bound": COVER_FRACTION,
        "average_ok": min_ratio >= COVER_FRACTION,
        "explicit": explicit,
    }
    if explicit:
        adj = circulant_graph(spec).adjacency()
        sub_ok = sym_ok = block_ok = True
        for k in range(cover.N):
            b = cover.matrix(k)
            sub_ok &= entrywise_dominates(b, adj)
            sym_ok &= b.positions() == b.transpose().positions()
            label = np.full(n, -1)
            for l, block in enumerate(cover.blocks(k)):
                label[block] = l
            block_ok &= bool(np.all((label[b.row] >= 0) & (label[b.row] == label[b.col])))
        avg = cover.average()
        cert["subgraph_ok"] = bool(sub_ok)
        cert["symmetric_ok"] = bool(sym_ok)
        cert["block_diagonal_ok"] = bool(block_ok)
        cert["entrywise_ok"] = entrywise_dominates(adj, avg, COVER_FRACTION, atol=1e-12)
    keys = [k for k in cert if k.endswith("_ok")]
    cert["ok"] = all(cert[k] for k in keys)
    return cert


def block_cover(spec: OffsetGraphSpec, explicit: bool | None = None) -> BlockCover:
    """Certified family ``B_1..B_n`` of block-diagonal subgraphs averaging above ``1_E / 32``."""
    seq = good_sequence(spec)
    cover = BlockCover(spec, seq)
    cert = certify_cover(cover, explicit)
    if not cert["ok"]:
        raise CertificateError(f"block cover certificate failed: {cert}")
    return BlockCover(spec, seq, cert)


# --------------------------------------------------------------------------
# magnitude splitting of a general band


@dataclass(frozen=True, eq=False)
class DyadicSplit:
    """Band normalized to ``max |b| = 1`` and partitioned by magnitude.

    ``levels[k]`` for ``k >= 1`` keeps entries with ``e^-k < |b| <= e^(1-k)``;
    ``levels[0]`` keeps ``|b| <= e^-k0``.
    """

    n: int
    k0: int
    scale: float
    normalized: np.ndarray
    levels: tuple[np.ndarray, ...]

    def thresholds(self) -> list[float]:
        return [math.exp(-k) for k in range(self.k0 + 1)]

    def level_spec(self, k: int) -> CirculantSpec:
        return CirculantSpec(tuple(self.levels[k]))

    def reconstruct(self) -> np.ndarray:
        return np.sum(self.levels, axis=0)


def loglog_levels(n: int) -> int:
    return int(math.floor(math.log(math.log(n + 3))))


def dyadic_split(spec: CirculantSpec) -> DyadicSplit:
    b = np.asarray(spec.band, dtype=np.float64)
    scale = float(np.abs(b).max())
    if scale == 0:
        raise ValueError("band is identically zero")
    nb = b / scale
    k0 = max(loglog_levels(spec.n), 0)
    mag = np.abs(nb)
    levels = [np.where((mag != 0) & (mag <= math.exp(-k0)), nb, 0.0)]
    for k in range(1, k0 + 1):
        levels.append(np.where((mag > math.exp(-k)) & (mag <= math.exp(1 - k)), nb, 0.0))
    return DyadicSplit(spec.n, k0, scale, nb, tuple(levels))


@dataclass(frozen=True)
class ComposedBound:
    total: float
    per_level: tuple[float, ...]
    closed_form: float
    scale: float


def composed_upper_bound(spec: CirculantSpec, config: RadNormConfig | None = None) -> ComposedBound:
    """Level-by-level upper shape assembled from the magnitude split.

    Level 0 gets the Gaussian shape (largest row + column length plus
    ``e^-k0 sqrt(log n)``); level ``k >= 1`` gets ``e * ||b^(k)||_2 + R^(k)``
    with ``R^(k)`` the estimated Rademacher norm at order ``log(n+1)``.  The
    total and the closed log-log form are rescaled to the original band.
    """
    split = dyadic_split(spec)
    n = spec.n
    q = order_for(n)
    terms = []
    lvl0 = circulant_matrix(split.level_spec(0))
    if lvl0.nnz:
        row, col = row_col_terms(lvl0)
        terms.append(row + col + math.exp(-split.k0) * math.sqrt(math.log(n)))
    else:
        terms.append(0.0)
    r_full = estimate_rad_norm(circulant_matrix(CirculantSpec(tuple(split.normalized))), q, config).lower
    for k in range(1, split.k0 + 1):
        lvl = split.levels[k]
        if not np.any(lvl):
            terms.append(0.0)
            continue
        r_k = estimate_rad_norm(circulant_matrix(CirculantSpec(tuple(lvl))), q, config).lower
        terms.append(math.e * float(np.linalg.norm(lvl)) + r_k)
    ll = math.log(math.log(n + 3))
    closed = math.sqrt(ll) * float(np.linalg.norm(split.normalized)) + ll * r_full
    return ComposedBound(split.scale * sum(terms), tuple(split.scale * t for t in terms), split.scale * closed, split.scale)
