"""Point domains, their distance functions, and seeded samplers.

Every space is an immutable :class:`MetricSpace` value. Points are plain
float arrays of length ``dim``; batches of points are ``(m, dim)`` arrays.

Samplers draw rows of uniforms from a single ``numpy`` generator stream and
transform each row independently, so the first ``n`` points of a draw of
``N > n`` points are exactly the draw of ``n`` points (nested sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, IsolatedPointError, LipkitError, SamplingError

KINDS = (
    "interval",
    "box",
    "open_ball",
    "euclidean",
    "sphere_geodesic",
    "circle_quotient",
    "torus_quotient",
    "finite_set",
)

_PARAM_KEYS = {
    "interval": {"a", "b"},
    "box": {"lo", "hi"},
    "open_ball": {"center", "radius"},
    "euclidean": {"extent"},
    "sphere_geodesic": set(),
    "circle_quotient": set(),
    "torus_quotient": set(),
    "finite_set": {"points"},
}

_EUCLIDEAN_KINDS = ("interval", "box", "open_ball", "euclidean", "finite_set")
_BOUNDARY_SLACK = 1e-12
_SPHERE_TOL = 1e-9
_CHUNK = 4096
_ISOLATION_TRIALS = 10_000


def as_real(x) -> np.ndarray:
    """Array of ``x`` as float64, keeping extended precision if already present."""
    x = np.asarray(x)
    if x.dtype == np.longdouble:
        return x
    return x.astype(float, copy=False)


def make_rng(seed) -> np.random.Generator:
    """Generator for an int seed or a tuple of non-negative ints."""
    if isinstance(seed, (tuple, list)):
        seed = [int(s) for s in seed]
        if any(s < 0 for s in seed):
            raise LipkitError(f"seed components must be non-negative, got {seed}")
    elif int(seed) < 0:
        raise LipkitError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(seed)


def _freeze(value):
    if isinstance(value, np.ndarray):
        return _freeze(value.tolist())
    if isinstance(value, (list, tuple)):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, (int, float, np.floating, np.integer)):
        return float(value)
    raise LipkitError(f"unsupported parameter value {value!r}")


def _thaw(value):
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


@dataclass(frozen=True)
class MetricSpace:
    """A named point domain with its metric and sampler.

    Construct through the factory functions (:func:`interval`, :func:`box`,
    :func:`sphere`, ...) or :meth:`from_json`.
    """

    kind: str
    dim: int
    params: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LipkitError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise LipkitError("dimension must be at least 1")
        p = self.param_dict()
        if set(p) != _PARAM_KEYS[self.kind]:
            raise LipkitError(
                f"{self.kind} expects params {sorted(_PARAM_KEYS[self.kind])}, got {sorted(p)}"
            )
        k = self.kind
        if k == "interval":
            if self.dim != 1 or not p["a"] < p["b"]:
                raise LipkitError("interval needs dim 1 and a < b")
        elif k == "box":
            lo, hi = np.array(p["lo"]), np.array(p["hi"])
            if lo.shape != (self.dim,) or hi.shape != (self.dim,) or np.any(lo >= hi):
                raise LipkitError("box corners must have length dim and lo < hi")
        elif k == "open_ball":
            if len(p["center"]) != self.dim or not p["radius"] > 0:
                raise LipkitError("open_ball needs a center of length dim and radius > 0")
        elif k == "euclidean":
            if not p["extent"] > 0:
                raise LipkitError("euclidean sampling extent must be positive")
        elif k == "sphere_geodesic":
            if self.dim < 2:
                raise LipkitError("sphere_geodesic needs ambient dimension >= 2")
        elif k == "circle_quotient":
            if self.dim != 1:
                raise LipkitError("circle_quotient has dimension 1")
        elif k == "finite_set":
            pts = np.array(p["points"], dtype=float)
            if pts.ndim != 2 or pts.shape[1] != self.dim or len(pts) == 0:
                raise LipkitError("finite_set points must be a non-empty (m, dim) list")

    # -- parameters -------------------------------------------------------

    def param_dict(self) -> dict[str, Any]:
        return {k: _thaw(v) for k, v in self.params}

    def _p(self, key):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box of the domain (infinite for euclidean)."""
        k = self.kind
        if k == "interval":
            return np.array([self._p("a")]), np.array([self._p("b")])
        if k == "box":
            return np.array(self._p("lo")), np.array(self._p("hi"))
        if k == "open_ball":
            c, r = np.array(self._p("center")), self._p("radius")
            return c - r, c + r
        if k == "euclidean":
            return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        if k == "sphere_geodesic":
            return -np.ones(self.dim), np.ones(self.dim)
        if k in ("circle_quotient", "torus_quotient"):
            return np.zeros(self.dim), np.ones(self.dim)
        pts = np.array(self._p("points"))
        return pts.min(axis=0), pts.max(axis=0)

    def diameter_bound(self) -> float:
        """An upper bound on the diameter (``inf`` for unbounded spaces)."""
        if self.kind == "sphere_geodesic":
            return math.pi
        if self.kind in ("circle_quotient", "torus_quotient"):
            return 0.5 * math.sqrt(self.dim)
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    @property
    def is_euclidean(self) -> bool:
        """True when the metric is the restriction of the Euclidean norm."""
        return self.kind in _EUCLIDEAN_KINDS

    # -- membership -------------------------------------------------------

    def _as_batch(self, x) -> np.ndarray:
        x = as_real(x)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DomainError(
                f"expected points of dimension {self.dim} for {self.kind}, got shape {np.shape(x)}"
            )
        return x

    def contains(self, x) -> np.ndarray:
        """Boolean membership mask for a batch (or a single point)."""
        single = np.ndim(x) == 1
        X = self._as_batch(x)
        ok = np.all(np.isfinite(X), axis=1)
        k = self.kind
        if k in ("interval", "box"):
            lo, hi = self.bounds
            ok &= np.all((X >= lo - _BOUNDARY_SLACK) & (X <= hi + _BOUNDARY_SLACK), axis=1)
        elif k == "open_ball":
            c, r = np.array(self._p("center")), self._p("radius")
            ok &= np.linalg.norm(X - c, axis=1) < r
        elif k == "sphere_geodesic":
            ok &= np.abs(np.linalg.norm(X, axis=1) - 1.0) <= _SPHERE_TOL
        elif k == "finite_set":
            pts = np.array(self._p("points"))
            gaps = np.linalg.norm(X[:, None, :] - pts[None, :, :], axis=2)
            ok &= gaps.min(axis=1) <= _BOUNDARY_SLACK
        return bool(ok[0]) if single else ok

    def check_point(self, p) -> np.ndarray:
        """Validate a single point and return its canonical coordinates.

        Sphere points are renormalized; quotient points are reduced to the
        fundamental domain ``[0, 1)^n``.
        """
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape != (self.dim,):
            raise DomainError(f"dimension mismatch: {self.kind} has dim {self.dim}, point has {p.size}")
        if not np.all(np.isfinite(p)):
            raise DomainError("point coordinates must be finite")
        if not self.contains(p):
            raise DomainError(f"point {p.tolist()} is outside the {self.kind} domain")
        return self.canonical(p)

    def canonical(self, X) -> np.ndarray:
        X = as_real(X)
        if self.kind == "sphere_geodesic":
            return X / np.linalg.norm(X, axis=-1, keepdims=True)
        if self.kind in ("circle_quotient", "torus_quotient"):
            return np.mod(X, 1.0)
        return X

    # -- metric -----------------------------------------------------------

    def dist(self, P, Q) -> np.ndarray:
        """Vectorized distance between matching rows of two batches."""
        P, Q = self._as_batch(P), self._as_batch(Q)
        k = self.kind
        if k in _EUCLIDEAN_KINDS:
            D = P - Q
            if self.dim == 1:
                return np.abs(D[:, 0])
            return np.linalg.norm(D, axis=1)
        if k in ("circle_quotient", "torus_quotient"):
            D = np.abs(np.mod(P, 1.0) - np.mod(Q, 1.0))
            # deck translations k in {-1,0,1}^n; the norm is separable so the
            # minimum is attained coordinatewise
            D = np.minimum(D, 1.0 - D)
            if self.dim == 1:
                return D[:, 0]
            return np.linalg.norm(D, axis=1)
        # great circle: atan2(|q - (p.q) p|, p.q), stable near 0 and pi
        P = P / np.linalg.norm(P, axis=1, keepdims=True)
        Q = Q / np.linalg.norm(Q, axis=1, keepdims=True)
        dot = np.einsum("ij,ij->i", P, Q)
        if self.dim == 3:
            cross = np.linalg.norm(np.cross(P, Q), axis=1)
        else:
            cross = np.linalg.norm(Q - dot[:, None] * P, axis=1)
        return np.arctan2(cross, dot)

    def distance(self, p, q) -> float:
        return float(self.dist(self.check_point(p), self.check_point(q))[0])

    # -- sampling ---------------------------------------------------------

    def _uniform_width(self) -> int:
        if self.kind == "open_ball":
            return self.dim + 1
        if self.kind == "finite_set":
            return 1
        return self.dim

    def _transform(self, U: np.ndarray) -> np.ndarray:
        k = self.kind
        if k in ("interval", "box"):
            lo, hi = self.bounds
            return lo + (hi - lo) * U
        if k == "euclidean":
            e = self._p("extent")
            return -e + 2.0 * e * U
        if k in ("circle_quotient", "torus_quotient"):
            return U.copy()
        if k == "sphere_geodesic":
            G = ndtri(np.clip(U, 1e-300, None))
            return G / np.linalg.norm(G, axis=1, keepdims=True)
        if k == "open_ball":
            c, r = np.array(self._p("center")), self._p("radius")
            G = ndtri(np.clip(U[:, :-1], 1e-300, None))
            G /= np.linalg.norm(G, axis=1, keepdims=True)
            rad = r * U[:, -1:] ** (1.0 / self.dim)
            return c + rad * G
        pts = np.array(self._p("points"))
        idx = np.minimum((U[:, 0] * len(pts)).astype(int), len(pts) - 1)
        return pts[idx]

    def sample(self, n: int, seed=0) -> np.ndarray:
        """``n`` points of the space as an ``(n, dim)`` array."""
        if n < 0:
            raise LipkitError("sample count must be non-negative")
        U = make_rng(seed).random((n, self._uniform_width()))
        return self._transform(U)

    def _ball_proposal_width(self) -> int:
        if self.kind == "sphere_geodesic":
            return self.dim - 1
        if self.kind == "finite_set":
            return 1
        return self.dim

    def _ball_proposal(self, c: np.ndarray, r: float, U: np.ndarray) -> np.ndarray:
        """Local proposal around ``c`` reaching at least radius ``r``."""
        k = self.kind
        if k == "finite_set":
            return self._transform(U)
        if k in ("circle_quotient", "torus_quotient"):
            if r >= 0.5:
                return U.copy()
            return np.mod(c + r * (2.0 * U - 1.0), 1.0)
        if k == "sphere_geodesic":
            basis = _tangent_basis(c)
            V = (r * (2.0 * U - 1.0)) @ basis
            norm = np.linalg.norm(V, axis=1, keepdims=True)
            safe = np.where(norm > 0, norm, 1.0)
            X = np.cos(norm) * c + np.sin(norm) * V / safe
            return X / np.linalg.norm(X, axis=1, keepdims=True)
        lo, hi = self.bounds
        lo = np.maximum(lo, c - r)
        hi = np.minimum(hi, c + r)
        return lo + (hi - lo) * U

    def sample_ball(self, center, radius: float, n: int, seed=0) -> np.ndarray:
        """``n`` points ``p`` with ``0 < d(center, p) < radius`` by rejection.

        Proposals are drawn from the ambient sampler restricted to the box
        (or tangent square, or wrapped cube) around ``center`` that contains
        the ball. Raises :class:`IsolatedPointError` when no proposal is
        admissible within the first ``10_000`` trials.
        """
        if not radius > 0:
            raise LipkitError("radius must be positive")
        if n < 0:
            raise LipkitError("sample count must be non-negative")
        c = self.check_point(center)
        if n == 0:
            return np.empty((0, self.dim))
        rng = make_rng(seed)
        width = self._ball_proposal_width()
        budget = _ISOLATION_TRIALS + 1000 * n
        accepted: list[np.ndarray] = []
        count = trials = 0
        while count < n:
            if trials >= budget or (count == 0 and trials >= _ISOLATION_TRIALS):
                if count == 0:
                    raise IsolatedPointError(
                        f"no point of the {self.kind} space within {radius} of "
                        f"{c.tolist()} after {trials} trials (isolated point)"
                    )
                raise SamplingError(
                    f"only {count} of {n} ball points accepted after {trials} trials"
                )
            U = rng.random((_CHUNK, width))
            trials += _CHUNK
            X = self._ball_proposal(c, radius, U)
            d = self.dist(np.broadcast_to(c, X.shape), X)
            keep = (d > 0) & (d < radius) & self.contains(X)
            if keep.any():
                accepted.append(X[keep])
                count += int(keep.sum())
        return np.concatenate(accepted)[:n]

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "params": self.param_dict()}

    @classmethod
    def from_json(cls, obj: dict) -> "MetricSpace":
        if not isinstance(obj, dict):
            raise LipkitError("space descriptor must be a JSON object")
        extra = set(obj) - {"kind", "dim", "params"}
        if extra:
            raise LipkitError(f"unknown space descriptor fields {sorted(extra)}")
        if "kind" not in obj:
            raise LipkitError("space descriptor needs a 'kind'")
        kind = obj["kind"]
        params = obj.get("params", {})
        if not isinstance(params, dict):
            raise LipkitError("space params must be a JSON object")
        if kind not in KINDS:
            raise LipkitError(f"unknown space kind {kind!r}")
        dim = obj.get("dim")
        if dim is None:
            dim = _infer_dim(kind, params)
        return _build(kind, int(dim), params)

    def __repr__(self):
        return f"MetricSpace({self.kind!r}, dim={self.dim}, params={self.param_dict()})"


def _infer_dim(kind, params):
    if kind in ("interval", "circle_quotient"):
        return 1
    if kind == "box":
        return len(params.get("lo", []))
    if kind == "open_ball":
        return len(params.get("center", []))
    if kind == "finite_set":
        pts = params.get("points") or [[0.0]]
        return len(pts[0])
    if kind == "sphere_geodesic":
        return 3
    if kind == "torus_quotient":
        return 2
    raise LipkitError(f"{kind} descriptor needs an explicit 'dim'")


def _build(kind: str, dim: int, params: dict) -> MetricSpace:
    if kind == "euclidean":
        params = {"extent": 1.0, **params}
    frozen = tuple(sorted((k, _freeze(v)) for k, v in params.items()))
    return MetricSpace(kind, dim, frozen)


def _tangent_basis(c: np.ndarray) -> np.ndarray:
    """Rows form an orthonormal basis of the tangent space at ``c``."""
    # full QR of the column c; the trailing columns span c's complement
    Q, _ = np.linalg.qr(c.reshape(-1, 1), mode="complete")
    return Q[:, 1:].T


# -- factories -------------------------------------------------------------


def interval(a: float = 0.0, b: float = 1.0) -> MetricSpace:
    return _build("interval", 1, {"a": a, "b": b})


def box(lo, hi) -> MetricSpace:
    lo, hi = list(map(float, lo)), list(map(float, hi))
    return _build("box", len(lo), {"lo": lo, "hi": hi})


def unit_cube(n: int) -> MetricSpace:
    return box([0.0] * n, [1.0] * n)


def open_ball(center, radius: float) -> MetricSpace:
    center = list(map(float, center))
    return _build("open_ball", len(center), {"center": center, "radius": radius})


def euclidean(n: int, extent: float = 1.0) -> MetricSpace:
    """All of R^n; samples are drawn from ``[-extent, extent]^n``."""
    return _build("euclidean", n, {"extent": extent})


def sphere(n: int = 3) -> MetricSpace:
    """Unit sphere in R^n with the great-circle metric."""
    return _build("sphere_geodesic", n, {})


def circle() -> MetricSpace:
    """R / Z with the quotient (arc-length) metric."""
    return _build("circle_quotient", 1, {})


def torus(n: int = 2) -> MetricSpace:
    """R^n / Z^n with the flat quotient metric."""
    return _build("torus_quotient", n, {})


def finite_set(points) -> MetricSpace:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.ndim(points) == 1:
        pts = pts.T
    return _build("finite_set", pts.shape[1], {"points": pts.tolist()})


# -- operation-level aliases --------------------------------------------------


def distance(X: MetricSpace, p, q) -> float:
    return X.distance(p, q)


def sample_points(X: MetricSpace, n: int, seed=0) -> np.ndarray:
    return X.sample(n, seed)


def sample_ball(X: MetricSpace, center, radius: float, n: int, seed=0) -> np.ndarray:
    return X.sample_ball(center, radius, n, seed)
