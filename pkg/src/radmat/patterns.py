"""Circulant matrices and graphs, hypercubes, tori and the torus band embedding."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from radmat.linalg import SparsePattern


@dataclass(frozen=True)
class CirculantSpec:
    """Band ``b_0..b_{n-1}``; the induced matrix has ``a_ij = b_{(i-j) mod n}``."""

    band: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "band", tuple(float(x) for x in self.band))
        if not self.band:
            raise ValueError("band must be nonempty")

    @property
    def n(self) -> int:
        return len(self.band)

    @classmethod
    def from_offsets(cls, spec: "OffsetGraphSpec") -> "CirculantSpec":
        band = np.zeros(spec.n)
        for p in spec.offsets:
            band[p % spec.n] = 1.0
            band[-p % spec.n] = 1.0
        return cls(tuple(band))

    def sq_norm(self) -> float:
        return float(np.sum(np.square(self.band)))

    def is_zero_one(self) -> bool:
        return all(b in (0.0, 1.0) for b in self.band)


@dataclass(frozen=True)
class OffsetGraphSpec:
    """Circulant graph on ``Z_n`` with ``i ~ j`` iff ``i - j = +-p_k (mod n)``."""

    n: int
    offsets: tuple[int, ...]

    def __post_init__(self):
        offs = tuple(int(p) for p in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not offs:
            raise ValueError("need at least one offset")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError(f"offsets must be strictly increasing, got {offs}")
        if offs[0] < 1 or 2 * offs[-1] > self.n:
            raise ValueError(f"offsets must lie in [1, n/2], got {offs} for n={self.n}")

    @property
    def d(self) -> int:
        return len(self.offsets)

    @property
    def degree(self) -> int:
        return 2 * self.d - (1 if 2 * self.offsets[-1] == self.n else 0)

    def signed_offsets(self) -> np.ndarray:
        """Distinct residues ``+-p_k mod n``."""
        return np.unique(np.concatenate([np.mod(self.offsets, self.n), np.mod(np.negative(self.offsets), self.n)]))


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Vertex count plus a sorted array of directed edges ``(i, j)``."""

    n: int
    edges: np.ndarray = field(repr=False)

    @classmethod
    def from_pairs(cls, n: int, src, dst) -> "DirectedGraph":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        key = np.unique(src * n + dst)
        return cls(n, np.stack([key // n, key % n], axis=1))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def adjacency(self) -> SparsePattern:
        return SparsePattern.from_arrays(self.n, self.n, self.edges[:, 0], self.edges[:, 1], 1.0)

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.n)

    def max_degree(self) -> int:
        if self.num_edges == 0:
            return 0
        return int(max(self.out_degrees().max(), self.in_degrees().max()))

    def is_symmetric(self) -> bool:
        return self.edge_set() == {(j, i) for i, j in self.edge_set()}

    def has_self_loops(self) -> bool:
        return bool(np.any(self.edges[:, 0] == self.edges[:, 1]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)


def circulant_matrix(spec: CirculantSpec) -> SparsePattern:
    n = spec.n
    band = np.asarray(spec.band)
    deltas = np.flatnonzero(band)
    i = np.repeat(np.arange(n), len(deltas))
    delta = np.tile(deltas, n)
    return SparsePattern.from_arrays(n, n, i, (i - delta) % n, band[delta])


def circulant_graph(spec: OffsetGraphSpec) -> DirectedGraph:
    n = spec.n
    deltas = spec.signed_offsets()
    i = np.repeat(np.arange(n), len(deltas))
    j = (i + np.tile(deltas, n)) % n
    return DirectedGraph.from_pairs(n, i, j)


def hypercube(d: int) -> DirectedGraph:
    if d < 1:
        raise ValueError("dimension must be positive")
    v = np.arange(1 << d)
    src = np.repeat(v, d)
    dst = src ^ np.tile(1 << np.arange(d), len(v))
    return DirectedGraph.from_pairs(1 << d, src, dst)


def hypercube_level(d: int, level: int) -> np.ndarray:
    """Vertices of ``{0,1}^d`` (as bitmasks) with exactly ``level`` ones."""
    v = np.arange(1 << d)
    weight = np.array([bin(x).count("1") for x in v.tolist()])
    return v[weight == level]


def level_sizes(d: int) -> list[int]:
    return [comb(d, k) for k in range(d + 1)]


def torus_vertex_index(coords, m: int) -> np.ndarray:
    """Identification ``(i_1, ..., i_d) -> sum_k i_k m^(k-1)``."""
    coords = np.asarray(coords, dtype=np.int64)
    weights = m ** np.arange(coords.shape[-1], dtype=np.int64)
    return coords @ weights


def torus(m: int, d: int) -> DirectedGraph:
    """Discrete torus ``Z_m^d`` with ``+-1`` steps in one coordinate.

    Vertices are numbered by :func:`torus_vertex_index`.  For ``m = 2`` the
    two steps coincide and the graph equals :func:`hypercube`.
    """
    if m < 2 or d < 1:
        raise ValueError("need m >= 2 and d >= 1")
    coords = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.int64)[:, ::-1]
    src_idx = torus_vertex_index(coords, m)
    src, dst = [], []
    for k in range(d):
        for step in (1, -1):
            moved = coords.copy()
            moved[:, k] = (moved[:, k] + step) % m
            src.append(src_idx)
            dst.append(torus_vertex_index(moved, m))
    return DirectedGraph.from_pairs(m**d, np.concatenate(src), np.concatenate(dst))


@dataclass(frozen=True)
class TorusBands:
    """Banded circulant graph on ``n = m^d`` containing the torus ``Z_m^d``."""

    m: int
    d: int
    n: int
    signed_offsets: tuple[int, ...]

    def offset_spec(self) -> OffsetGraphSpec:
        half = sorted({min(x, self.n - x) for x in self.signed_offsets})
        return OffsetGraphSpec(self.n, tuple(half))

    def graph(self) -> DirectedGraph:
        return circulant_graph(self.offset_spec())

    def identify(self, coords) -> np.ndarray:
        return torus_vertex_index(coords, self.m)


def torus_as_circulant_bands(m: int, d: int) -> TorusBands:
    """Signed offsets ``+-m^(k-1)`` and ``+-(m-1) m^(k-1)`` reduced mod ``m^d``."""
    if m < 2 or d < 1:
        raise ValueError("need m >= 2 and d >= 1")
    n = m**d
    offs = set()
    for k in range(1, d + 1):
        for base in (m ** (k - 1), (m - 1) * m ** (k - 1)):
            offs.add(base % n)
            offs.add(-base % n)
    offs.discard(0)
    return TorusBands(m, d, n, tuple(sorted(offs)))


# pattern mini-language: "name:key=value,key=v1,v2,..."
PATTERN_NAMES = ("circulant", "hypercube", "torus", "band-graph", "file")


def parse_pattern_string(text: str) -> tuple[str, dict[str, list[str]]]:
    name, _, rest = text.partition(":")
    name = name.strip()
    params: dict[str, list[str]] = {}
    key = None
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in tok:
            key, _, val = tok.partition("=")
            key = key.strip()
            params[key] = [val.strip()] if val.strip() else []
        elif key is None:
            raise ValueError(f"value {tok!r} precedes any key in {text!r}")
        else:
            params[key].append(tok)
    return name, params


@dataclass(frozen=True, eq=False)
class BuiltPattern:
    """Result of :func:`build_pattern`: the matrix plus whatever structure produced it."""

    name: str
    matrix: SparsePattern
    graph: DirectedGraph | None = None
    circulant: CirculantSpec | None = None
    offsets: OffsetGraphSpec | None = None
    params: dict = field(default_factory=dict)


def _int(params, key, default=None):
    if key not in params:
        if default is None:
            raise ValueError(f"missing parameter {key!r}")
        return default
    (v,) = params[key]
    return int(v)


def build_pattern(text: str) -> BuiltPattern:
    name, params = parse_pattern_string(text)
    if name == "circulant":
        if "band" in params:
            spec = CirculantSpec(tuple(float(x) for x in params["band"]))
            return BuiltPattern(name, circulant_matrix(spec), circulant=spec, params=params)
        n = _int(params, "n")
        offsets = OffsetGraphSpec(n, tuple(int(x) for x in params.get("offsets", [])))
        g = circulant_graph(offsets)
        return BuiltPattern(name, g.adjacency(), graph=g, circulant=CirculantSpec.from_offsets(offsets),
                            offsets=offsets, params=params)
    if name == "hypercube":
        g = hypercube(_int(params, "d"))
        return BuiltPattern(name, g.adjacency(), graph=g, params=params)
    if name == "torus":
        g = torus(_int(params, "m"), _int(params, "d"))
        return BuiltPattern(name, g.adjacency(), graph=g, params=params)
    if name == "band-graph":
        bands = torus_as_circulant_bands(_int(params, "m"), _int(params, "d"))
        spec = bands.offset_spec()
        g = bands.graph()
        return BuiltPattern(name, g.adjacency(), graph=g, circulant=CirculantSpec.from_offsets(spec),
                            offsets=spec, params=params)
    if name == "file":
        (path,) = params["path"]
        with open(path) as fh:
            return BuiltPattern(name, SparsePattern.loads(fh.read()), params=params)
    raise ValueError(f"unknown pattern {name!r}; expected one of {', '.join(PATTERN_NAMES)}")
