"""Dilation detection, affine structure recovery and canonical operator families."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np
from scipy.spatial.distance import pdist

from .affine import AffineMap, orth_defect
from .errors import LipkitError
from .funcs import constant
from .lipest import global_pairs
from .metric import MetricSpace, interval, unit_cube
from .wco import WCOperator


@dataclass(frozen=True)
class DilationReport:
    alpha_hat: float
    residual_max: float
    pairs: int
    tol: float
    is_dilation: bool

    def to_json(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "residual_max": self.residual_max,
            "pairs": self.pairs,
            "tol": self.tol,
            "is_dilation": self.is_dilation,
        }


def dilation_check(
    phi: Callable, Y: MetricSpace, X: MetricSpace, n_pairs: int = 20000, seed: int = 0, tol: float = 1e-9
) -> DilationReport:
    """Median distance ratio ``alpha_hat`` and the worst relative misfit.

    ``residual_max = max |d_X(phi u, phi v) - alpha_hat d_Y(u, v)| / d_Y(u, v)``.
    """
    U, V = global_pairs(Y, n_pairs, seed)
    dY = Y.dist(U, V)
    keep = dY > 0
    if not keep.any():
        raise LipkitError("fewer than 2 distinct sample points")
    U, V, dY = U[keep], V[keep], dY[keep]
    dX = X.dist(phi(U), phi(V))
    ratios = dX / dY
    alpha = float(np.median(ratios))
    resid = float(np.max(np.abs(dX - alpha * dY) / dY))
    return DilationReport(alpha, resid, int(keep.sum()), tol, resid <= tol)


@dataclass(frozen=True)
class AffineRecovery:
    map: AffineMap
    fit_residual: float
    orth_defect: float

    @property
    def accepted(self) -> bool:
        return self.orth_defect <= 1e-6

    def to_json(self) -> dict:
        return {
            "map": self.map.to_json(),
            "fit_residual": self.fit_residual,
            "orth_defect": self.orth_defect,
            "det": float(np.linalg.det(self.map.A)),
        }


def procrustes(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Orthogonal ``A`` minimizing ``||Q - P A^T||_F`` over all of O(n).

    No determinant correction: reflections are admissible.
    """
    H = P.T @ Q
    U, _, Vt = np.linalg.svd(H)
    return (U @ Vt).T


def recover_affine(pairs, dim: int | None = None) -> AffineRecovery:
    """Fit ``x -> alpha A x + b`` to ``(input, output)`` pairs.

    ``alpha`` is the mean pairwise distance ratio, ``A`` the orthogonal
    Procrustes solution on centered data and
    ``b = mean(out) - alpha A mean(in)``.
    """
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        P, Q = (np.asarray(a, dtype=float) for a in pairs)
    else:
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim == 2:  # 1-D points given as (x, y) rows
            arr = arr[:, :, None]
        P, Q = arr[:, 0, :], arr[:, 1, :]
    n = dim or P.shape[1]
    if P.shape != Q.shape or P.shape[1] != n:
        raise LipkitError(f"pairs must be (m, 2, {n})")
    if len(P) < n + 1:
        raise LipkitError(f"need at least {n + 1} points, got {len(P)}")
    Pc = P - P.mean(axis=0)
    Qc = Q - Q.mean(axis=0)
    if np.linalg.matrix_rank(Pc) < n:
        raise LipkitError("input points are rank deficient (not in general position)")
    dp, dq = pdist(P), pdist(Q)
    keep = dp > 0
    alpha = float(np.mean(dq[keep] / dp[keep]))
    if not alpha > 0:
        raise LipkitError("recovered alpha is not positive (outputs coincide)")
    A = procrustes(Pc, Qc)
    b = Q.mean(axis=0) - alpha * A @ P.mean(axis=0)
    m = AffineMap(alpha, A, b)
    resid = float(np.max(np.linalg.norm(m(P) - Q, axis=1)))
    return AffineRecovery(m, resid, orth_defect(A))


# -- one-dimensional classification ------------------------------------------------


@dataclass(frozen=True)
class Classification:
    accepted: bool
    sign: Optional[int] = None
    c: Optional[float] = None
    residual: Optional[float] = None
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "sign": self.sign,
            "c": self.c,
            "residual": self.residual,
            "reason": self.reason,
        }


def _injectivity_violation(x: np.ndarray, y: np.ndarray, tol: float) -> Optional[str]:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    dx, dy = np.diff(xs), np.diff(ys)
    distinct = dx > tol
    if np.any(distinct & (np.abs(dy) <= tol)):
        i = int(np.argmax(distinct & (np.abs(dy) <= tol)))
        return f"duplicate outputs at x={xs[i]:.6g} and x={xs[i + 1]:.6g}"
    s = np.sign(dy[distinct])
    if s.size and np.any(s != s[0]):
        # a continuous map whose increments change sign takes some value twice
        i = int(np.flatnonzero(distinct)[np.argmax(s != s[0])])
        return f"not monotone: direction changes near x={xs[i]:.6g}"
    return None


def classify_1d(samples, alpha: float, tol: float = 1e-9) -> Classification:
    """Decide between ``phi(x) = alpha x + c`` and ``phi(x) = -alpha x + c``.

    Rejects non-injective data, data fitting both signs (degenerate), and
    data fitting neither.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise LipkitError("samples must be (x, phi(x)) pairs")
    if len(arr) < 2:
        raise LipkitError("need at least 2 samples")
    if not alpha > 0:
        raise LipkitError("alpha must be positive")
    x, y = arr[:, 0], arr[:, 1]
    fits = {}
    for sign in (1, -1):
        r = y - sign * alpha * x
        c = float(np.mean(r))
        fits[sign] = (c, float(np.max(np.abs(r - c))))
    ok = [s for s in (1, -1) if fits[s][1] <= tol]
    if len(ok) == 2:
        return Classification(False, reason="degenerate: both signs fit (near-constant data)")
    why = _injectivity_violation(x, y, tol)
    if why is not None:
        return Classification(False, reason=f"non-injective: {why}")
    if not ok:
        best = min((1, -1), key=lambda s: fits[s][1])
        return Classification(False, residual=fits[best][1], reason="no affine fit within tolerance")
    s = ok[0]
    return Classification(True, s, fits[s][0], fits[s][1], "accepted")


# -- cube symmetries ----------------------------------------------------------------


def _signed_permutation(perm, signs) -> np.ndarray:
    n = len(perm)
    P = np.zeros((n, n))
    P[np.arange(n), perm] = signs
    return P


def cube_corners(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=n)))


def iter_cube_symmetries(n: int) -> Iterator[AffineMap]:
    """Lazily yield the symmetries of ``[0, 1]^n`` as ``x -> P x + b``.

    Order: permutations lexicographically, then sign patterns (``+1`` before
    ``-1``), then ``b`` lexicographically. Admissible ``b`` are found by
    filtering ``{0, 1}^n`` with the corner-image test; the test factorizes
    over coordinates, so each coordinate of ``b`` is filtered separately and
    every yielded map is re-verified on all corners.
    """
    if not 1 <= n <= 8:
        raise LipkitError("cube dimension must be between 1 and 8")
    C = cube_corners(n)
    corner_set = {tuple(c) for c in C.astype(int)}
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            P = _signed_permutation(perm, signs)
            img = C @ P.T
            choices = []
            for i in range(n):
                col = img[:, i]
                choices.append([bi for bi in (0.0, 1.0) if np.all((col + bi == 0) | (col + bi == 1))])
            for b in itertools.product(*choices):
                b = np.array(b)
                out = C @ P.T + b
                if {tuple(r) for r in out.astype(int)} != corner_set or not np.all(np.isin(out, (0.0, 1.0))):
                    continue
                yield AffineMap(1.0, P, b)


def enumerate_cube_symmetries(n: int) -> list[AffineMap]:
    """All ``2^n n!`` symmetries of the unit cube (see :func:`iter_cube_symmetries`)."""
    return list(iter_cube_symmetries(n))


def cube_operator(m: AffineMap, sign: float = 1.0) -> WCOperator:
    Q = unit_cube(m.dim)
    return WCOperator(constant(sign, Q), m, Q, Q, f"cube[{m.A.astype(int).tolist()}, {m.b.astype(int).tolist()}]")


# -- intervals ----------------------------------------------------------------------


def interval_canonical(a: float, b: float, c: float, d: float, sign: float = 1.0) -> tuple[WCOperator, WCOperator]:
    """The two operators ``Lip([a, b]) -> Lip([c, d])`` with weight
    ``sign * (d - c) / (b - a)``:

    ``phi(x) = s (x - c) + a`` and ``phi(x) = s (d - x) + a``, ``s = (b - a) / (d - c)``.
    """
    if not (a < b and c < d):
        raise LipkitError("degenerate interval: need a < b and c < d")
    if sign not in (1, -1, 1.0, -1.0):
        raise LipkitError("sign must be +1 or -1")
    X, Y = interval(a, b), interval(c, d)
    s = (b - a) / (d - c)
    h = constant(sign * (d - c) / (b - a), Y)
    up = AffineMap(s, [[1.0]], [a - s * c])
    down = AffineMap(s, [[-1.0]], [s * d + a])
    return (
        WCOperator(h, up, X, Y, f"interval[{a:g},{b:g}<-{c:g},{d:g}; up]"),
        WCOperator(h, down, X, Y, f"interval[{a:g},{b:g}<-{c:g},{d:g}; down]"),
    )
