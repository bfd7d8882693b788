import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radmat.decomp import (
    CubeFamily,
    block_cover,
    composed_upper_bound,
    cube_identities,
    dyadic_split,
    exclusion_pick,
    good_sequence,
    lower_cube,
    shift_counts,
    subset_sums,
    upper_cube,
)
from radmat.patterns import CirculantSpec, OffsetGraphSpec, circulant_graph


@st.composite
def offset_specs(draw, max_n=64, max_d=4):
    n = draw(st.integers(3, max_n))
    d = draw(st.integers(1, max_d))
    offs = draw(st.lists(st.integers(1, n // 2), min_size=1, max_size=d, unique=True))
    return OffsetGraphSpec(n, tuple(sorted(offs)))


def test_cube_example():
    spec = OffsetGraphSpec(8, (1, 2))
    assert sorted(lower_cube(5, spec)) == [2, 3, 4, 5]
    assert sorted(upper_cube(5, spec)) == [0, 5, 6, 7]


def test_distinct_subset_sums_give_full_cube():
    spec = OffsetGraphSpec(1000, (1, 3, 9, 27))
    assert len(subset_sums(spec)) == 16
    assert all(len(lower_cube(k, spec)) == 16 for k in range(0, 1000, 37))


def test_cube_dimension_limit():
    with pytest.raises(ValueError):
        subset_sums(OffsetGraphSpec(10**7, tuple(range(1, 22))))


@given(offset_specs())
def test_cube_identities_hold(spec):
    assert cube_identities(spec)["ok"]


def test_cube_identities_exhaustive_small():
    for n in range(3, 17):
        for a in range(1, n // 2 + 1):
            for b in range(a, n // 2 + 1):
                offs = (a,) if a == b else (a, b)
                cert = cube_identities(OffsetGraphSpec(n, offs))
                assert cert["ok"], (n, offs, cert)


def test_degree_inside_lower_cube():
    spec = OffsetGraphSpec(200, (1, 5, 17))
    assert len(subset_sums(spec)) == 8
    adj = circulant_graph(spec).adjacency().to_dense() != 0
    for k in (0, 7, 150):
        cube = lower_cube(k, spec)
        deg = adj[np.ix_(cube, cube)].sum(axis=1)
        assert deg.min() >= spec.d and deg.max() <= 2 * spec.d


def test_exclusion_examples():
    spec = OffsetGraphSpec(32, (1, 2))
    fam = CubeFamily.of(spec)
    assert len(fam.lower(exclusion_pick([], spec, 0.5, fam))) == fam.m
    k = exclusion_pick(fam.lower(1), spec, 1 / 8, fam)
    assert len(np.setdiff1d(fam.lower(k), fam.lower(1))) == 4


def test_exclusion_rejects_large_J():
    spec = OffsetGraphSpec(32, (1, 2))
    with pytest.raises(ValueError):
        exclusion_pick(range(5), spec, 1 / 8)
    with pytest.raises(ValueError):
        exclusion_pick([], spec, 1.0)


@given(offset_specs(max_n=128), st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.125, 0.5]))
def test_exclusion_adversarial(spec, seed, c):
    size = math.floor(c * spec.n)
    rng = np.random.default_rng(seed)
    # clustered J hurts most: a run of consecutive vertices
    start = int(rng.integers(spec.n))
    J = (start + np.arange(size)) % spec.n
    fam = CubeFamily.of(spec)
    k = exclusion_pick(J, spec, c, fam)
    assert len(np.setdiff1d(fam.lower(k), J)) >= (1 - c) * fam.m


def test_good_sequence_examples():
    seq = good_sequence(OffsetGraphSpec(32, (1, 2)))
    assert (seq.m, seq.s) == (4, 1)
    assert len(seq.parts[0]) == 4 and seq.covered_edges >= 4
    assert seq.certificates["ok"]
    seq = good_sequence(OffsetGraphSpec(8, (1,)))
    assert (seq.m, seq.s, len(seq.parts[0])) == (2, 1, 2)


@given(offset_specs(max_n=256, max_d=5))
def test_good_sequence_certificate(spec):
    seq = good_sequence(spec)
    cert = seq.certificates
    assert cert["ok"]
    assert cert["edges"] >= spec.d * spec.n / 16


def test_block_cover_examples():
    cover = block_cover(OffsetGraphSpec(32, (1, 2)))
    assert cover.N == 32 and len(cover.matrices()) == 32
    assert cover.certificates["max_block"] <= 4 and cover.certificates["entrywise_ok"]
    cover = block_cover(OffsetGraphSpec(8, (1,)))
    assert cover.certificates["ok"] and cover.certificates["max_block"] <= 2


@given(offset_specs(max_n=96, max_d=4))
def test_block_cover_certificate(spec):
    cover = block_cover(spec)
    cert = cover.certificates
    assert cert["ok"] and cert["explicit"]
    assert cert["subgraph_ok"] and cert["symmetric_ok"] and cert["block_diagonal_ok"]


def test_shift_counts_match_explicit_average():
    spec = OffsetGraphSpec(60, (2, 7, 11))
    cover = block_cover(spec)
    counts = shift_counts(spec, cover.sequence.parts)
    avg = cover.average().to_dense()
    for dlt, c in counts.items():
        for i in (0, 13, 59):
            assert avg[i, (i + dlt) % spec.n] == pytest.approx(c / spec.n)


def test_large_cover_uses_shift_counts():
    cover = block_cover(OffsetGraphSpec(4096, (1, 3, 64, 300, 1000, 2000)))
    assert cover.certificates["ok"] and not cover.certificates["explicit"]


def test_cover_write(tmp_path):
    cover = block_cover(OffsetGraphSpec(12, (1, 3)))
    names = cover.write(tmp_path)
    assert len(names) == 12
    rec = json.loads((tmp_path / "certificate.json").read_text())
    assert rec["N"] == 12 and rec["ok"] and rec["files"] == names
    from radmat.linalg import SparsePattern

    b0 = SparsePattern.loads((tmp_path / names[0]).read_text())
    assert b0.positions() == cover.matrix(0).positions()


def test_dyadic_example():
    split = dyadic_split(CirculantSpec((1.0, 0.5, 0.2) + (0.0,) * 97))
    assert split.k0 == 1
    assert list(split.levels[1][:3]) == [1.0, 0.5, 0.0]
    assert list(split.levels[0][:3]) == [0.0, 0.0, 0.2]


def test_dyadic_zero_one_band():
    split = dyadic_split(CirculantSpec.from_offsets(OffsetGraphSpec(40, (1, 5))))
    assert split.k0 == 1
    assert not np.any(split.levels[0]) and np.array_equal(split.levels[1], split.normalized)
    # small n degenerates to one level
    assert dyadic_split(CirculantSpec((0.0, 1.0, 0.0, 1.0))).k0 == 0


def test_dyadic_rejects_zero():
    with pytest.raises(ValueError):
        dyadic_split(CirculantSpec((0.0, 0.0, 0.0)))


@given(st.integers(3, 3000), st.integers(0, 2**32 - 1))
def test_dyadic_round_trip(n, seed):
    r = np.random.default_rng(seed)
    band = r.standard_normal(n) * np.exp(r.uniform(-6, 0, n)) * (r.random(n) < 0.3)
    band[int(r.integers(n))] = 1.5
    split = dyadic_split(CirculantSpec(tuple(band)))
    assert np.array_equal(split.reconstruct(), split.normalized)
    assert np.array_equal(split.normalized * split.scale, band) or np.allclose(split.normalized * split.scale, band, rtol=1e-15, atol=0)
    supports = np.array([lvl != 0 for lvl in split.levels])
    assert supports.sum(axis=0).max() <= 1
    for k in range(1, split.k0 + 1):
        mag = np.abs(split.levels[k][split.levels[k] != 0])
        assert np.all((mag > math.exp(-k)) & (mag <= math.exp(1 - k)))
    mag0 = np.abs(split.levels[0][split.levels[0] != 0])
    assert np.all(mag0 <= math.exp(-split.k0))


def test_composed_zero_one_is_one_level():
    cb = composed_upper_bound(CirculantSpec.from_offsets(OffsetGraphSpec(40, (1, 5))))
    assert cb.per_level[0] == 0.0 and cb.per_level[1] > 0


def test_composed_small_band_is_gaussian_only():
    band = (0.3, 0.1, 0.0, 0.2, 0.0, 0.0)
    cb = composed_upper_bound(CirculantSpec(band))
    assert len(cb.per_level) == 1 and cb.per_level[0] > 0


def test_composed_scales_linearly():
    band = (0.0, 1.0, 0.3, 0.05) + (0.0,) * 30
    a = composed_upper_bound(CirculantSpec(band))
    b = composed_upper_bound(CirculantSpec(tuple(3 * x for x in band)))
    assert b.total == pytest.approx(3 * a.total) and b.closed_form == pytest.approx(3 * a.closed_form)
