"""Pointwise linear algebra for indefinite (semi-Riemannian) inner products.

All rank and zero decisions are relative: a quantity counts as zero when it
is at most ``tol`` times the largest magnitude in play (largest pivot for
LDL^T, largest singular value for kernels).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-9

_ALPHA = (1.0 + np.sqrt(17.0)) / 8.0  # Bunch-Parlett pivot threshold


class LinalgError(ValueError):
    pass


class NotSymmetricError(LinalgError):
    pass


class DegenerateMetricError(LinalgError):
    """A metric (or its restriction to a subspace) is degenerate."""


@dataclass(frozen=True)
class Signature:
    n_pos: int
    n_neg: int
    n_zero: int

    @property
    def index(self) -> int:
        return self.n_neg

    @property
    def dim(self) -> int:
        return self.n_pos + self.n_neg + self.n_zero

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_pos, self.n_neg, self.n_zero)

    @property
    def is_riemannian(self) -> bool:
        return self.n_neg == 0 and self.n_zero == 0

    @property
    def is_lorentzian(self) -> bool:
        return self.n_neg == 1 and self.n_zero == 0


@dataclass(frozen=True)
class Frame:
    """Pseudo-orthonormal vectors (rows of ``vectors``) with g(e_i, e_j) = signs[i] delta_ij."""

    vectors: np.ndarray
    signs: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.signs)

    def __iter__(self):
        return iter(self.vectors)

    @property
    def signature(self) -> Signature:
        pos = sum(1 for s in self.signs if s > 0)
        return Signature(pos, len(self.signs) - pos, 0)

    def gram_residual(self, g: np.ndarray) -> float:
        if not len(self):
            return 0.0
        V = self.vectors
        return float(np.max(np.abs(V @ g @ V.T - np.diag(self.signs))))


def _check_symmetric(m: np.ndarray, tol: float) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > tol * scale:
        raise NotSymmetricError("matrix is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def ldl_pivots(m: np.ndarray, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Diagonal blocks (1x1 or 2x2) of a Bunch-Parlett LDL^T factorization.

    Full symmetric pivoting: at each step the largest diagonal entry is
    compared with the largest off-diagonal entry of the remaining Schur
    complement, and a 2x2 pivot is taken when the diagonal is too small.
    Blocks smaller than ``tol`` times the largest pivot seen are returned as
    exact zeros, so their count is the nullity.
    """
    A = _check_symmetric(m, tol).copy()
    blocks: list[np.ndarray] = []
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    while A.shape[0]:
        k = A.shape[0]
        absA = np.abs(A)
        mu0 = float(absA.max())
        if mu0 <= tol * scale or mu0 == 0.0:
            blocks.extend(np.zeros((1, 1)) for _ in range(k))
            break
        diag = np.abs(np.diag(A))
        i = int(np.argmax(diag))
        mu1 = float(diag[i])
        if k == 1 or mu1 >= _ALPHA * mu0:
            perm = [i] + [j for j in range(k) if j != i]
            A = A[np.ix_(perm, perm)]
            d = A[0, 0]
            blocks.append(np.array([[d]]))
            l = A[1:, 0] / d
            A = A[1:, 1:] - np.outer(l, A[0, 1:])
        else:
            off = absA - np.diag(np.diag(absA))
            r, s = np.unravel_index(int(np.argmax(off)), off.shape)
            perm = [r, s] + [j for j in range(k) if j not in (r, s)]
            A = A[np.ix_(perm, perm)]
            E = A[:2, :2]
            blocks.append(E.copy())
            C = A[2:, :2]
            A = A[2:, 2:] - C @ np.linalg.solve(E, C.T)
        A = 0.5 * (A + A.T)
        scale = max(scale, float(np.max(np.abs(blocks[-1]))))
    return blocks


def signature(m: np.ndarray, tol: float = DEFAULT_TOL) -> Signature:
    """Inertia of a symmetric matrix via LDL^T with full symmetric pivoting."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return Signature(0, 0, 0)
    blocks = ldl_pivots(m, tol)
    big = max((float(np.max(np.abs(b))) for b in blocks), default=0.0)
    pos = neg = zero = 0
    for b in blocks:
        if b.shape == (1, 1):
            d = float(b[0, 0])
            if abs(d) <= tol * big or d == 0.0:
                zero += 1
            elif d > 0:
                pos += 1
            else:
                neg += 1
        else:
            # 2x2 Bunch-Parlett pivots are always indefinite: one of each sign
            det = float(np.linalg.det(b))
            if abs(det) <= tol * big * big:
                ev = np.linalg.eigvalsh(b)
                for e in ev:
                    if abs(e) <= tol * big:
                        zero += 1
                    elif e > 0:
                        pos += 1
                    else:
                        neg += 1
            elif det < 0:
                pos += 1
                neg += 1
            else:
                tr = float(np.trace(b))
                if tr > 0:
                    pos += 2
                else:
                    neg += 2
    return Signature(pos, neg, zero)


def null_space(m: np.ndarray, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal (Euclidean) basis of ker m, from the SVD."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    rows, cols = m.shape
    if m.size == 0:
        return [e for e in np.eye(cols)]
    _, s, vt = np.linalg.svd(m)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return [vt[k].copy() for k in range(rank, cols)]


def rank(m: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return m.shape[1] - len(null_space(m, tol))


def _as_rows(basis: Sequence[np.ndarray] | np.ndarray, dim: int) -> np.ndarray:
    arr = np.asarray(basis, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    return np.atleast_2d(arr)


def check_nondegenerate(g: np.ndarray, tol: float = DEFAULT_TOL, what: str = "metric") -> Signature:
    sig = signature(g, tol)
    if sig.n_zero:
        raise DegenerateMetricError(f"{what} is degenerate (signature {sig.as_tuple()})")
    return sig


def g_orthogonal_complement(
    basis: Sequence[np.ndarray] | np.ndarray, g: np.ndarray, tol: float = DEFAULT_TOL
) -> list[np.ndarray]:
    """Vectors w with g(w, b) = 0 for every b in ``basis``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    check_nondegenerate(g, tol)
    B = _as_rows(basis, n)
    if B.shape[0] == 0:
        return [e for e in np.eye(n)]
    return null_space(B @ g, tol)


def pseudo_orthonormalize(
    basis: Sequence[np.ndarray] | np.ndarray, g: np.ndarray, tol: float = DEFAULT_TOL
) -> Frame:
    """Gram-Schmidt in an indefinite metric, pivoting on the largest |g(v, v)|.

    When every remaining vector is null but two of them pair non-trivially,
    their sum or difference is used as the pivot; that stays inside the span.
    A degenerate restriction raises :class:`DegenerateMetricError`.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    vecs = [np.asarray(v, dtype=float) for v in _as_rows(basis, n)]
    if not vecs:
        return Frame(np.zeros((0, n)), ())
    gram = np.array([[u @ g @ v for v in vecs] for u in vecs])
    scale = max(float(np.max(np.abs(gram))), 0.0)
    sig = signature(gram, tol)
    if sig.n_zero or scale == 0.0:
        raise DegenerateMetricError(
            f"metric restricted to the span is degenerate (signature {sig.as_tuple()}); "
            "the distribution is lightlike there"
        )

    out: list[np.ndarray] = []
    signs: list[int] = []
    work = list(vecs)
    while work:
        norms = [float(v @ g @ v) for v in work]
        k = int(np.argmax(np.abs(norms)))
        if abs(norms[k]) <= tol * scale:
            pair = _nonnull_combination(work, g, tol * scale)
            if pair is None:
                raise DegenerateMetricError("remaining vectors span a null subspace")
            i, j, sgn = pair
            # replacing one member of the pair keeps the span
            work[i] = work[i] + sgn * work[j]
            continue
        v = work.pop(k)
        nv = norms[k]
        e = v / np.sqrt(abs(nv))
        s = 1 if nv > 0 else -1
        out.append(e)
        signs.append(s)
        work = [w - s * (w @ g @ e) * e for w in work]
        work = [w for w in work if np.linalg.norm(w) > tol * max(1.0, np.linalg.norm(v))]
    return Frame(np.array(out), tuple(signs))


def _nonnull_combination(work: list[np.ndarray], g: np.ndarray, thresh: float):
    best = None
    for i in range(len(work)):
        for j in range(i + 1, len(work)):
            c = float(work[i] @ g @ work[j])
            if abs(c) > thresh and (best is None or abs(c) > best[0]):
                best = (abs(c), i, j, 1.0 if c > 0 else -1.0)
    if best is None:
        return None
    return best[1], best[2], best[3]


def projector(frame: Frame, g: np.ndarray) -> np.ndarray:
    """g-orthogonal projector onto span(frame): P v = sum_i s_i g(v, e_i) e_i."""
    n = g.shape[0]
    if not len(frame):
        return np.zeros((n, n))
    E = frame.vectors
    return E.T @ np.diag(frame.signs) @ E @ g
