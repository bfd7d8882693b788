"""Sparse coefficient patterns and spectral norms."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from radmat.rng import stream

ORACLE_MAX_DIM = 32


@dataclass(frozen=True, eq=False)
class SparsePattern:
    """Real ``rows x cols`` matrix stored as a canonical coordinate list.

    Entries are sorted row-major, positions are unique and explicit zeros
    are dropped.  Build instances with :meth:`from_entries` or
    :meth:`from_dense`; the raw constructor assumes canonical input.
    """

    rows: int
    cols: int
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[tuple[int, int, float]]) -> "SparsePattern":
        entries = list(entries)
        if entries:
            r, c, v = (np.asarray(x) for x in zip(*entries))
        else:
            r = c = v = np.zeros(0)
        return cls.from_arrays(rows, cols, r, c, v)

    @classmethod
    def from_arrays(cls, rows: int, cols: int, r, c, v, *, merge: bool = False) -> "SparsePattern":
        """Canonicalize coordinate arrays.

        Duplicate positions raise unless ``merge`` is set, in which case
        their weights are summed.
        """
        if rows < 1 or cols < 1:
            raise ValueError(f"shape must be positive, got {rows}x{cols}")
        r = np.asarray(r, dtype=np.int64).ravel()
        c = np.asarray(c, dtype=np.int64).ravel()
        v = np.broadcast_to(np.asarray(v, dtype=np.float64), r.shape).ravel()
        if not (len(r) == len(c) == len(v)):
            raise ValueError("coordinate arrays differ in length")
        if len(r) and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise ValueError("entry index out of range")
        key = r * cols + c
        order = np.argsort(key, kind="stable")
        key, v = key[order], v[order]
        if len(key) > 1 and np.any(key[1:] == key[:-1]):
            if not merge:
                raise ValueError("duplicate entry position")
            key, inv = np.unique(key, return_inverse=True)
            v = np.bincount(inv, weights=v, minlength=len(key))
        keep = v != 0
        key, v = key[keep], v[keep]
        return cls(rows, cols, key // cols, key % cols, v.copy())

    @classmethod
    def from_dense(cls, a) -> "SparsePattern":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        r, c = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], r.astype(np.int64), c.astype(np.int64), a[r, c].copy())

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparsePattern":
        return cls.from_arrays(rows, cols, [], [], [])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return len(self.val)

    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.row.tolist(), self.col.tolist(), self.val.tolist()))

    def to_dense(self) -> np.ndarray:
        a = np.zeros(self.shape)
        a[self.row, self.col] = self.val
        return a

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.val, (self.row, self.col)), shape=self.shape)

    def transpose(self) -> "SparsePattern":
        return SparsePattern.from_arrays(self.cols, self.rows, self.col, self.row, self.val)

    T = property(transpose)

    def abs(self) -> "SparsePattern":
        return SparsePattern(self.rows, self.cols, self.row, self.col, np.abs(self.val))

    def scale(self, factor: float) -> "SparsePattern":
        if factor == 0:
            return SparsePattern.zeros(self.rows, self.cols)
        return SparsePattern(self.rows, self.cols, self.row, self.col, self.val * factor)

    def with_values(self, val: np.ndarray) -> "SparsePattern":
        """Same positions, new weights (zeros are dropped)."""
        return SparsePattern.from_arrays(self.rows, self.cols, self.row, self.col, val)

    def select(self, mask) -> "SparsePattern":
        """Restriction to the stored entries where ``mask`` holds."""
        mask = np.asarray(mask, dtype=bool)
        return SparsePattern(self.rows, self.cols, self.row[mask], self.col[mask], self.val[mask])

    def indicator(self) -> "SparsePattern":
        return SparsePattern(self.rows, self.cols, self.row, self.col, np.ones(self.nnz))

    def max_abs(self) -> float:
        return float(np.abs(self.val).max()) if self.nnz else 0.0

    def row_norms(self) -> np.ndarray:
        return np.sqrt(np.bincount(self.row, weights=self.val**2, minlength=self.rows))

    def col_norms(self) -> np.ndarray:
        return np.sqrt(np.bincount(self.col, weights=self.val**2, minlength=self.cols))

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self.val**2)))

    def positions(self) -> set[tuple[int, int]]:
        return set(zip(self.row.tolist(), self.col.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePattern):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row, other.row)
            and np.array_equal(self.col, other.col)
            and np.array_equal(self.val, other.val)
        )

    def __repr__(self) -> str:
        return f"SparsePattern({self.rows}x{self.cols}, nnz={self.nnz})"

    # text format: header "rows cols nnz", then one "i j w" line per entry
    def dumps(self) -> str:
        out = io.StringIO()
        out.write(f"{self.rows} {self.cols} {self.nnz}\n")
        for i, j, w in self.entries():
            out.write(f"{i} {j} {w!r}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "SparsePattern":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError("empty pattern file")
        rows, cols, nnz = (int(x) for x in lines[0].split())
        body = lines[1:]
        if len(body) != nnz:
            raise ValueError(f"header announces {nnz} entries, found {len(body)}")
        entries = []
        for ln in body:
            i, j, w = ln.split()
            entries.append((int(i), int(j), float(w)))
        return cls.from_entries(rows, cols, entries)


@dataclass(frozen=True)
class NormResult:
    value: float
    iterations: int
    converged: bool
    residual: float


def as_pattern(a) -> SparsePattern:
    if isinstance(a, SparsePattern):
        return a
    if sp.issparse(a):
        coo = sp.coo_matrix(a)
        return SparsePattern.from_arrays(coo.shape[0], coo.shape[1], coo.row, coo.col, coo.data, merge=True)
    return SparsePattern.from_dense(a)


def _gram_operator(a: SparsePattern):
    csr = a.to_csr()
    csr_t = csr.T.tocsr()
    if a.cols <= a.rows:
        return a.cols, lambda x: csr_t @ (csr @ x)
    return a.rows, lambda x: csr @ (csr_t @ x)


KRYLOV_DIM = 40
DENSE_DIM = 6


def _unit_random(rng, dim: int) -> np.ndarray:
    x = rng.standard_normal(dim)
    return x / np.linalg.norm(x)


def _lanczos_cycle(gram, x, k):
    """One Lanczos cycle of length ``k`` from unit ``x`` with full reorthogonalization.

    Returns the leading Ritz pair and the number of Gram applications.
    """
    dim = len(x)
    basis = np.zeros((k + 1, dim))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    basis[0] = x
    m = k
    for j in range(k):
        w = gram(basis[j])
        alpha[j] = basis[j] @ w
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] <= 1e-14 * max(abs(alpha[j]), 1e-300):
            # invariant subspace reached
            m = j + 1
            break
        basis[j + 1] = w / beta[j]
    t = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    evals, evecs = np.linalg.eigh(t)
    ritz = evecs[:, -1] @ basis[:m]
    return float(evals[-1]), ritz / np.linalg.norm(ritz), m


def _restarted_lanczos(gram, dim, tol, max_iter, rng, stall_cycles=20):
    x = _unit_random(rng, dim)
    k = min(dim, KRYLOV_DIM)
    used = 0
    theta, res = 0.0, math.inf
    best_res, last_gain, cycle = math.inf, 0, 0
    while used < max_iter:
        cycle += 1
        theta, x, steps = _lanczos_cycle(gram, x, min(k, max_iter - used))
        used += steps + 1
        theta = max(theta, 0.0)
        if theta == 0.0:
            # start vector orthogonal to the range; rerandomize
            x = _unit_random(rng, dim)
            continue
        res = float(np.linalg.norm(gram(x) - theta * x) / theta)
        if res <= tol:
            return theta, used, True, res
        if res < 0.5 * best_res:
            best_res, last_gain = res, cycle
        elif cycle - last_gain > stall_cycles:
            # stagnation: perturb the current Ritz vector
            x = x + 1e-3 * _unit_random(rng, dim)
            x /= np.linalg.norm(x)
            last_gain = cycle
    return theta, used, False, res


def operator_norm(a, tol: float = 1e-10, max_iter: int = 5000, seed: int = 0, restarts: int = 3) -> NormResult:
    """Largest singular value by restarted Lanczos on the Gram operator ``G``.

    Each of the ``restarts`` runs starts from its own seeded random vector;
    the largest Ritz value is kept.  ``residual`` is ``|G v - theta v| / theta``
    for the kept Ritz pair.  Gram operators of dimension at most 6 are
    solved densely.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_pattern(a)
    if a.nnz == 0:
        return NormResult(0.0, 0, True, 0.0)
    if len(np.unique(a.row)) == a.nnz and len(np.unique(a.col)) == a.nnz:
        # at most one entry per row and column: the norm is the largest |entry|
        return NormResult(float(np.max(np.abs(a.val))), 0, True, 0.0)
    dim, gram = _gram_operator(a)
    if dim <= DENSE_DIM:
        # a dense eigensolve is exact and cheaper at this size
        g = gram(np.eye(dim))
        theta = max(float(np.linalg.eigvalsh((g + g.T) / 2)[-1]), 0.0)
        return NormResult(math.sqrt(theta), 1, True, 0.0)
    best = None
    total = 0
    for r in range(restarts):
        theta, its, conv, res = _restarted_lanczos(gram, dim, tol, max_iter, stream(seed, 0x6E6F726D, r))
        total += its
        if best is None or theta > best[0]:
            best = (theta, conv, res)
    theta, conv, res = best
    return NormResult(math.sqrt(theta), total, conv, res)


def jacobi_eigenvalues(g: np.ndarray, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by the cyclic Jacobi method."""
    a = np.array(g, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("expected a square matrix")
    if n > ORACLE_MAX_DIM:
        raise ValueError(f"oracle is limited to dimension {ORACLE_MAX_DIM}, got {n}")
    a = (a + a.T) / 2
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a**2) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= 1e-16 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1]


def operator_norm_oracle(a) -> float:
    """Exact largest singular value via Jacobi eigenvalues of the Gram matrix.

    Deliberately small scale: both dimensions must be at most 32.
    """
    if isinstance(a, SparsePattern):
        a = a.to_dense()
    a = np.asarray(a, dtype=np.float64)
    if max(a.shape) > ORACLE_MAX_DIM:
        raise ValueError(f"oracle is limited to dimension {ORACLE_MAX_DIM}, got {a.shape}")
    g = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    return math.sqrt(max(jacobi_eigenvalues(g)[0], 0.0))


def _check_same_shape(a: SparsePattern, b: SparsePattern) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def hadamard(a: SparsePattern, b: SparsePattern) -> SparsePattern:
    """Entrywise product."""
    _check_same_shape(a, b)
    ka = a.row * a.cols + a.col
    kb = b.row * b.cols + b.col
    common, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    return SparsePattern.from_arrays(a.rows, a.cols, common // a.cols, common % a.cols, a.val[ia] * b.val[ib])


def entrywise_dominates(a: SparsePattern, b: SparsePattern, scale: float = 1.0, atol: float = 0.0) -> bool:
    """True iff ``scale * a <= b`` at every position (implicit zeros included)."""
    _check_same_shape(a, b)
    ka = a.row * a.cols + a.col
    kb = b.row * b.cols + b.col
    keys = np.union1d(ka, kb)
    va = np.zeros(len(keys))
    vb = np.zeros(len(keys))
    va[np.searchsorted(keys, ka)] = a.val
    vb[np.searchsorted(keys, kb)] = b.val
    return bool(np.all(scale * va <= vb + atol))
