"""Affine dilations ``x -> alpha * A @ x + b`` with orthogonal ``A``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LipkitError

ORTH_TOL = 1e-9


def orth_defect(A) -> float:
    """``max |A^T A - I|``."""
    A = np.asarray(A, dtype=float)
    return float(np.max(np.abs(A.T @ A - np.eye(A.shape[1]))))


@dataclass(frozen=True, eq=False)
class AffineMap:
    alpha: float
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise LipkitError("AffineMap needs a square A and a matching b")
        if not self.alpha > 0:
            raise LipkitError("alpha must be positive")
        if orth_defect(A) > ORTH_TOL:
            raise LipkitError(f"A is not orthogonal (defect {orth_defect(A):.3g})")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def dim(self) -> int:
        return self.b.size

    @property
    def label(self) -> str:
        return f"affine(alpha={self.alpha:g})"

    def __call__(self, X):
        X = np.asarray(X)
        if X.dtype != np.longdouble:
            X = X.astype(float, copy=False)
        return self.alpha * (X @ self.A.T) + self.b

    def inverse(self) -> "AffineMap":
        # x = alpha A y + b  =>  y = (1/alpha) A^T x - (1/alpha) A^T b
        return AffineMap(1.0 / self.alpha, self.A.T, -(self.A.T @ self.b) / self.alpha)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """``self o other``."""
        return AffineMap(
            self.alpha * other.alpha, self.A @ other.A, self.alpha * (self.A @ other.b) + self.b
        )

    @property
    def orth_defect(self) -> float:
        return orth_defect(self.A)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_json(cls, obj) -> "AffineMap":
        if not isinstance(obj, dict) or set(obj) != {"alpha", "A", "b"}:
            raise LipkitError('affine descriptor needs exactly the fields "alpha", "A", "b"')
        return cls(obj["alpha"], np.array(obj["A"], dtype=float), np.array(obj["b"], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
        )

    def __hash__(self):
        return hash((self.alpha, self.A.tobytes(), self.b.tobytes()))

    def __repr__(self):
        return f"AffineMap(alpha={self.alpha!r}, A={self.A.tolist()}, b={self.b.tolist()})"


def rotation2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_orthogonal(n: int, rng: np.random.Generator, reflection: bool | None = None) -> np.ndarray:
    """Haar-random orthogonal matrix; force the determinant sign if asked."""
    from scipy.stats import ortho_group

    Q = ortho_group.rvs(n, random_state=rng) if n > 1 else np.array([[1.0]])
    if reflection is not None:
        want = -1.0 if reflection else 1.0
        if np.sign(np.linalg.det(Q)) != want:
            Q = Q.copy()
            Q[:, 0] *= -1
    return Q
