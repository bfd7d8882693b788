import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radmat.linalg import SparsePattern, operator_norm
from radmat.rademacher import (
    RadNormConfig,
    block_diagonal,
    block_max_radnorm,
    combinatorial_M,
    estimate_rad_norm,
    exact_lp_radsum,
    hitczenko_lp,
    khintchine_check,
    lp_at_witness,
    mc_lp_radsum,
    paley_zygmund_check,
    proof_witnesses,
)

coeffs = st.lists(st.floats(-10, 10, allow_nan=False, allow_infinity=False), min_size=1, max_size=12)


@pytest.mark.parametrize("c, p, expected", [([1], 4, 1.0), ([1, 1, 1, 1], 2, 4.0), ([2, 1], 1, 3.0)])
def test_hitczenko_examples(c, p, expected):
    assert hitczenko_lp(c, p) == pytest.approx(expected)


@given(coeffs, st.floats(1, 20), st.floats(-5, 5, allow_nan=False))
def test_hitczenko_homogeneous_and_symmetric(c, p, lam):
    c = np.array(c)
    base = hitczenko_lp(c, p)
    assert hitczenko_lp(lam * c, p) == pytest.approx(abs(lam) * base, rel=1e-9, abs=1e-12)
    assert hitczenko_lp(-c[::-1], p) == pytest.approx(base, rel=1e-12, abs=1e-12)


@given(coeffs)
def test_exact_lp_monotone_in_p(c):
    grid = [1, 1.5, 2, 3, 4.5, 6, 10]
    e = [exact_lp_radsum(c, p) for p in grid]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(e, e[1:]))


def test_hitczenko_functional_is_not_monotone():
    # the head/tail switch at integer p can lower the value
    assert hitczenko_lp([1, 1, 1], 2) == pytest.approx(2 + math.sqrt(2))
    assert hitczenko_lp([1, 1, 1], 3) == pytest.approx(3.0)


@given(coeffs)
def test_hitczenko_quasi_monotone_in_p(c):
    # h(q) >= h(p) / (1 + 1/sqrt 2) for q >= p
    grid = [1, 1.5, 1.99, 2, 3, 3.99, 4, 6, 10]
    h = [hitczenko_lp(c, p) for p in grid]
    for i, a in enumerate(h):
        for b in h[i + 1 :]:
            assert b >= a / (1 + 1 / math.sqrt(2)) * (1 - 1e-12)


@pytest.mark.parametrize("c, p, expected", [([1], 3, 1.0), ([3, 4], 2, 5.0), ([1, 1], 4, 2 ** 0.75)])
def test_exact_lp_examples(c, p, expected):
    assert exact_lp_radsum(c, p) == pytest.approx(expected, rel=1e-12)


def test_exact_lp_rejects_long_input():
    with pytest.raises(ValueError):
        exact_lp_radsum(np.ones(21), 2)


def test_mc_lp_examples():
    est, se = mc_lp_radsum([1.0], 2, 100, 5)
    assert est == 1.0 and se == 0.0
    est, se = mc_lp_radsum([3.0, 4.0], 2, 10**5, 1)
    assert abs(est - 5) <= 3 * se
    c = np.ones(18)
    est, se = mc_lp_radsum(c, 6, 20000, 2)
    assert abs(est - exact_lp_radsum(c, 6)) <= 3 * se
    assert mc_lp_radsum(c, 6, 500, 9) == mc_lp_radsum(c, 6, 500, 9)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=14), st.sampled_from([2, 3, 4, 6]))
def test_paley_zygmund_and_khintchine(c, p):
    if not any(c):
        c = [1.0]
    assert paley_zygmund_check(c, p)["pass"]
    assert khintchine_check(c, p)["pass"]


def test_combinatorial_M_examples():
    star = SparsePattern.from_dense(np.ones((1, 6)))
    for p in (1, 2, 3.5, 6):
        assert combinatorial_M(star, p).value == pytest.approx(math.sqrt(math.floor(p)))
    diag = SparsePattern.from_dense(np.eye(5))
    assert combinatorial_M(diag, 3, "exact").value == pytest.approx(1.0)
    ones = SparsePattern.from_dense(np.ones((2, 2)))
    assert combinatorial_M(ones, 4, "exact").value == pytest.approx(2.0)


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3, 4]))
def test_combinatorial_M_mode_ordering(seed, p):
    r = np.random.default_rng(seed)
    a = SparsePattern.from_dense(r.standard_normal((5, 5)) * (r.random((5, 5)) < 0.6) + np.eye(5) * 1e-3)
    ex = combinatorial_M(a, p, "exact")
    lo = combinatorial_M(a, p, "local")
    gr = combinatorial_M(a, p, "greedy")
    assert ex.value >= lo.value * (1 - 1e-12) and lo.value >= gr.value * (1 - 1e-12)
    for m in (ex, lo, gr):
        assert len(m.subset) <= max(1, math.floor(p))
        assert m.value == pytest.approx(operator_norm(m.pattern(a)).value, rel=1e-9)
        assert m.value <= math.sqrt(len(m.subset)) * np.abs(a.val).max() * (1 + 1e-12)


def test_exact_mode_budget():
    big = SparsePattern.from_dense(np.ones((8, 8)))
    with pytest.raises(ValueError, match="budget"):
        combinatorial_M(big, 8, "exact")


def test_single_entry_radnorm():
    a = SparsePattern.from_entries(3, 4, [(1, 2, -2.5)])
    for p in (1, 2, 7):
        est = estimate_rad_norm(a, p)
        assert est.lower == pytest.approx(2.5)
        s, t = est.witness.s, est.witness.t
        assert np.count_nonzero(s) == 1 and s[1] == pytest.approx(1.0)
        assert np.count_nonzero(t) == 1 and t[2] == pytest.approx(1.0)


@pytest.mark.parametrize("d, p", [(4, 1), (4, 2), (6, 3), (6, 5.5), (30, 6)])
def test_star_lower_bound(d, p):
    star = SparsePattern.from_dense(np.ones((1, d)))
    assert estimate_rad_norm(star, p).lower >= 0.5 * math.sqrt(math.floor(p))


def test_identity_p2_is_one():
    est = estimate_rad_norm(SparsePattern.from_dense(np.eye(6)), 2)
    assert est.lower == pytest.approx(1.0)
    assert est.method == "exact"


def test_radnorm_lower_is_value_at_witness():
    r = np.random.default_rng(4)
    a = SparsePattern.from_dense(r.standard_normal((6, 7)) * (r.random((6, 7)) < 0.5))
    est = estimate_rad_norm(a, 3)
    v, _, _, floor = lp_at_witness(a, est.witness.s, est.witness.t, 3)
    assert v == pytest.approx(est.lower, rel=1e-12)
    assert est.certified_floor <= est.lower * (1 + 1e-12)
    assert np.linalg.norm(est.witness.s) <= 1 + 1e-9 and np.linalg.norm(est.witness.t) <= 1 + 1e-9


def test_radnorm_is_deterministic():
    r = np.random.default_rng(8)
    a = SparsePattern.from_dense(r.standard_normal((10, 10)) * (r.random((10, 10)) < 0.4))
    e1 = estimate_rad_norm(a, 4, RadNormConfig(seed=3))
    e2 = estimate_rad_norm(a, 4, RadNormConfig(seed=3))
    assert e1.as_record() == e2.as_record()


def test_weighted_half_M_lower_constant():
    r = np.random.default_rng(21)
    for _ in range(30):
        a = SparsePattern.from_dense(r.standard_normal((4, 4)) * (r.random((4, 4)) < 0.6) + np.diag([1e-2] * 4))
        for p in (1, 2, 4):
            est = estimate_rad_norm(a, p)
            m = combinatorial_M(a, p, "exact").value
            assert 0.5 * m <= est.lower + 3 * est.stderr + 1e-12


def test_proof_witness_half_constant_small():
    a = SparsePattern.from_dense([[1, 1, 0], [1, 0, 1], [0, 1, 1]])
    for p in (1, 2, 4):
        (wits, msub) = proof_witnesses(a, p, RadNormConfig(m_mode="exact"))
        _, s, t = [w for w in wits if w[0] == "M-subset"][0]
        assert exact_lp_radsum(a.val * s[a.row] * t[a.col], p) >= 0.5 * msub.value


def test_block_max_radnorm_examples():
    b = SparsePattern.from_dense([[1.0, 2.0], [0.0, 1.0]])
    cfg = RadNormConfig(seed=1)
    assert block_max_radnorm([b], 2, cfg).lower == estimate_rad_norm(b, 2, cfg).lower
    assert block_max_radnorm([b, b], 2, cfg).lower == estimate_rad_norm(b, 2, cfg).lower
    two = SparsePattern.from_dense([[2.0]])
    three = SparsePattern.from_dense([[3.0]])
    assert block_max_radnorm([two, three], 5, cfg).lower == pytest.approx(3.0)


def test_block_max_tracks_assembled_pattern():
    r = np.random.default_rng(2)
    blocks = [SparsePattern.from_dense(r.standard_normal((3, 3))) for _ in range(3)]
    full = estimate_rad_norm(block_diagonal(blocks), 2)
    per = block_max_radnorm(blocks, 2)
    assert per.lower <= full.lower * 1.05 + 3 * full.stderr
    assert full.lower <= per.lower * 1.5
