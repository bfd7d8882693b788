"""Seeded instance families shared by calibration, acceptance and experiment scripts."""

from __future__ import annotations

import numpy as np

from radmat.linalg import SparsePattern
from radmat.patterns import CirculantSpec, OffsetGraphSpec
from radmat.rng import stream

_CIRC_TAG = 0x4352
_GEN_TAG = 0x4745
_BAND_TAG = 0x4244
_ZO_TAG = 0x5A4F


def offset_spec_corpus(count: int = 60, seed: int = 0, n_range=(8, 4096), d_range=(1, 6)) -> list[OffsetGraphSpec]:
    """Random circulant graphs with log-uniform ``n`` and ``d`` distinct offsets in ``[1, n/2]``."""
    rng = stream(seed, _CIRC_TAG)
    lo, hi = np.log2(n_range[0]), np.log2(n_range[1])
    out = []
    while len(out) < count:
        n = int(round(2 ** rng.uniform(lo, hi)))
        n = min(max(n, n_range[0]), n_range[1])
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        if d > n // 2:
            continue
        offs = np.sort(rng.choice(np.arange(1, n // 2 + 1), size=d, replace=False))
        out.append(OffsetGraphSpec(n, tuple(int(x) for x in offs)))
    return out


def sandwich_corpus(seed: int = 0) -> list[CirculantSpec]:
    """Circulant bands for the expected-norm sandwich: 0-1 graphs and weighted bands, ``n <= 512``."""
    specs = [CirculantSpec.from_offsets(s) for s in offset_spec_corpus(10, seed, (16, 512), (1, 5))]
    rng = stream(seed, _BAND_TAG)
    for _ in range(6):
        n = int(2 ** rng.integers(4, 10))
        width = int(rng.integers(1, 8))
        band = np.zeros(n)
        pos = rng.choice(np.arange(n), size=width, replace=False)
        band[pos] = rng.uniform(-1, 1, size=width) * np.exp(-rng.uniform(0, 4, size=width))
        if not band.any():
            band[1] = 1.0
        specs.append(CirculantSpec(tuple(band)))
    return specs


def general_corpus(count: int = 24, seed: int = 0) -> list[SparsePattern]:
    """Rectangular and square sparse matrices with Gaussian weights and varied density."""
    rng = stream(seed, _GEN_TAG)
    out = []
    for _ in range(count):
        rows = int(rng.integers(4, 129))
        cols = int(rng.integers(4, 129))
        density = float(rng.uniform(0.02, 0.5))
        mask = rng.random((rows, cols)) < density
        if not mask.any():
            mask[0, 0] = True
        dense = np.where(mask, rng.standard_normal((rows, cols)), 0.0)
        out.append(SparsePattern.from_dense(dense))
    return out


def zero_one_corpus(count: int = 240, seed: int = 0, max_entries: int = 20) -> list[SparsePattern]:
    """Small 0-1 patterns (``<= max_entries`` entries), mixing stars, blocks, diagonals and random sets."""
    rng = stream(seed, _ZO_TAG)
    out = []
    for j in range(count):
        rows = int(rng.integers(1, 9))
        cols = int(rng.integers(1, 9))
        kind = j % 4
        dense = np.zeros((rows, cols))
        if kind == 0:
            dense[int(rng.integers(rows)), :] = 1
        elif kind == 1:
            dense[: int(rng.integers(1, rows + 1)), : int(rng.integers(1, cols + 1))] = 1
        elif kind == 2:
            k = min(rows, cols)
            dense[np.arange(k), np.arange(k)] = 1
        else:
            dense = (rng.random((rows, cols)) < rng.uniform(0.1, 0.7)).astype(float)
        flat = np.flatnonzero(dense)
        if len(flat) > max_entries:
            dense.flat[rng.choice(flat, size=len(flat) - max_entries, replace=False)] = 0
        if not dense.any():
            dense[0, 0] = 1
        out.append(SparsePattern.from_dense(dense))
    return out
