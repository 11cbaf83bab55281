"""Flat manifolds as atlases of charts with orthogonal transition Jacobians.

Shipped atlases are the quotients ``R/Z`` (circle) and ``R^n/Z^n`` (torus):
the chart at ``p`` is ``u -> (p + Q u) mod 1`` on the open ball of radius
0.4 around 0, with ``Q`` orthogonal (identity by default). Transitions
between such charts are rigid motions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import LipkitError, SamplingError
from .funcs import ScalarFunc
from .lipest import EstimatorConfig, LipEstimate, pointwise_lip
from .metric import MetricSpace, circle, make_rng, open_ball, torus

CHART_RADIUS = 0.4
JAC_STEP = 1e-5


def _wrap(D):
    """Representative of ``D`` mod 1 in ``[-1/2, 1/2)``."""
    return np.mod(np.asarray(D, dtype=float) + 0.5, 1.0) - 0.5


@dataclass(frozen=True, eq=False)
class Chart:
    """``forward(u) = (base + M u) mod 1`` on the ball ``|u| < radius``.

    ``M`` is orthogonal for genuine flat charts; the adversarial fixture
    atlas uses a shear.
    """

    base_point: np.ndarray
    M: np.ndarray
    radius: float = CHART_RADIUS

    @property
    def dim(self) -> int:
        return self.base_point.size

    @property
    def domain(self) -> MetricSpace:
        return open_ball(np.zeros(self.dim), self.radius)

    def forward(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        return np.mod(self.base_point + U @ self.M.T, 1.0)

    def inverse(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return _wrap(X - self.base_point) @ np.linalg.inv(self.M).T

    def contains_image(self, X) -> np.ndarray:
        """Mask of manifold points inside the chart's image."""
        U = self.inverse(X)
        return np.linalg.norm(np.atleast_2d(U), axis=1) < self.radius

    def with_radius(self, r: float) -> "Chart":
        return Chart(self.base_point, self.M, r)


def _standard_factory(p, Q=None) -> Chart:
    p = np.mod(np.asarray(p, dtype=float).reshape(-1), 1.0)
    M = np.eye(p.size) if Q is None else np.asarray(Q, dtype=float)
    return Chart(p, M)


@dataclass(frozen=True, eq=False)
class Atlas:
    manifold_kind: str
    dim: int
    chart_factory: Callable = field(default=_standard_factory, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.manifold_kind not in ("circle_quotient", "torus_quotient"):
            raise LipkitError("only circle_quotient and torus_quotient atlases are supported")
        if self.manifold_kind == "circle_quotient" and self.dim != 1:
            raise LipkitError("circle atlas has dimension 1")

    @property
    def space(self) -> MetricSpace:
        return circle() if self.manifold_kind == "circle_quotient" else torus(self.dim)

    def chart_at(self, p, Q=None) -> Chart:
        """Chart centered at ``p``; ``Q`` post-composes an orthogonal change of chart coordinates."""
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.size != self.dim:
            raise LipkitError(f"point of dimension {p.size} on a {self.dim}-manifold")
        if Q is None:
            return self.chart_factory(p)
        ch = self.chart_factory(p)
        return Chart(ch.base_point, ch.M @ np.asarray(Q, dtype=float), ch.radius)

    def to_json(self) -> dict:
        return {"manifold_kind": self.manifold_kind, "dim": self.dim, "chart_radius": CHART_RADIUS, "label": self.label}


def circle_atlas() -> Atlas:
    return Atlas("circle_quotient", 1, label="circle")


def torus_atlas(n: int = 2) -> Atlas:
    return Atlas("torus_quotient", n, label="torus")


def sheared_atlas(shear: float = 0.2) -> Atlas:
    """Test fixture: charts at points with ``x0 >= 1/2`` are sheared by ``shear``.

    Transitions between a plain and a sheared chart have Jacobian ``S^{+-1}``,
    which is not orthogonal.
    """
    S = np.array([[1.0, shear], [0.0, 1.0]])

    def factory(p):
        p = np.mod(np.asarray(p, dtype=float).reshape(-1), 1.0)
        return Chart(p, S if p[0] >= 0.5 else np.eye(2))

    return Atlas("torus_quotient", 2, factory, label=f"sheared({shear:g})")


def chart_at(M: Atlas, p) -> Chart:
    return M.chart_at(p)


def jacobian(g: Callable, u: np.ndarray, step: float = JAC_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``g: R^n -> R^n`` at ``u``."""
    n = u.size
    E = step * np.eye(n)
    plus = g(u + E)
    minus = g(u - E)
    return (plus - minus).T / (2 * step)


@dataclass(frozen=True)
class TransitionReport:
    max_defect: float
    samples: int
    tol: float
    passed: bool
    worst_point: Optional[list] = None

    def to_json(self) -> dict:
        return {
            "max_defect": self.max_defect,
            "samples": self.samples,
            "tol": self.tol,
            "passed": self.passed,
            "worst_point": self.worst_point,
        }


def transition_orthogonality_check(M: Atlas, n_samples: int = 200, seed: int = 0, tol: float = 1e-6) -> TransitionReport:
    """Max ``|J^T J - I|`` of finite-difference transition Jacobians.

    Each sample picks a manifold point ``x`` and two chart centres within
    0.3 of it, so both charts contain ``x``.
    """
    rng = make_rng((seed, 401))
    space = M.space
    xs = space.sample(n_samples, (seed, 402))
    worst, worst_pt, used = 0.0, None, 0
    for x in xs:
        oa = rng.uniform(-0.3, 0.3, M.dim) / np.sqrt(M.dim)
        ob = rng.uniform(-0.3, 0.3, M.dim) / np.sqrt(M.dim)
        ca, cb = M.chart_at(x + oa), M.chart_at(x + ob)
        if not (ca.contains_image(x)[0] and cb.contains_image(x)[0]):
            continue
        u = cb.inverse(x[None, :])[0]
        g = lambda U: ca.inverse(cb.forward(U))
        J = jacobian(g, u)
        defect = float(np.max(np.abs(J.T @ J - np.eye(M.dim))))
        used += 1
        if defect > worst:
            worst, worst_pt = defect, x.tolist()
    if used == 0:
        raise SamplingError("no overlapping chart pair found at this budget")
    return TransitionReport(worst, used, tol, worst <= tol, worst_pt)


def pt_lip_on_manifold(
    f: ScalarFunc, p, M: Atlas, cfg: EstimatorConfig = EstimatorConfig(), chart: Chart | None = None
) -> LipEstimate:
    """Pointwise constant of ``f o chart`` at 0 in the chart's Euclidean domain."""
    ch = chart or M.chart_at(p)
    g = ScalarFunc(lambda U: f.values(ch.forward(U)), ch.domain, f"{f.label} o chart")
    est = pointwise_lip(g, np.zeros(M.dim), ch.domain, cfg)
    return LipEstimate(
        "pointwise", est.value, tuple(np.asarray(p, dtype=float).reshape(-1).tolist()), est.pairs_used,
        est.radii, est.trend, est.seed, f.label,
    )


def default_chart_change(dim: int) -> np.ndarray:
    """Reflection in 1-D, rotation by 30 degrees in 2-D, a fixed rotation otherwise."""
    if dim == 1:
        return np.array([[-1.0]])
    t = np.pi / 6
    Q = np.eye(dim)
    Q[:2, :2] = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
    return Q


@dataclass(frozen=True)
class ChartIndependence:
    first: LipEstimate
    second: LipEstimate
    gap: float
    tol: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "first": self.first.to_json(),
            "second": self.second.to_json(),
            "gap": self.gap,
            "tol": self.tol,
            "passed": self.passed,
        }


def chart_independence_check(
    f: ScalarFunc, p, M: Atlas, cfg: EstimatorConfig = EstimatorConfig(), tol: float = 0.05, Q=None
) -> ChartIndependence:
    """Pointwise constant at ``p`` through the chart at ``p`` and through
    that chart composed with the orthogonal change ``Q``."""
    Q = default_chart_change(M.dim) if Q is None else np.asarray(Q, dtype=float)
    a = pt_lip_on_manifold(f, p, M, cfg)
    b = pt_lip_on_manifold(f, p, M, cfg, chart=M.chart_at(p, Q))
    scale = max(a.value, b.value)
    gap = abs(a.value - b.value) / scale if scale > 0 else 0.0
    return ChartIndependence(a, b, gap, tol, gap <= tol)


# -- maps between manifolds ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ManifoldMap:
    sigma: Callable[[np.ndarray], np.ndarray]
    label: str

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return np.mod(self.sigma(X[None, :])[0], 1.0)
        return np.mod(self.sigma(X), 1.0)


def fixture_map(name: str, dim: int) -> ManifoldMap:
    """Named maps on the circle (dim 1) or the 2-torus: translate, rotate90, shear, reflect."""
    if dim == 1:
        maps = {
            "translate": lambda X: X + 0.3,
            "reflect": lambda X: -X,
        }
    elif dim == 2:
        maps = {
            "translate": lambda X: X + np.array([0.3, 0.7]),
            "rotate90": lambda X: np.stack([-X[:, 1], X[:, 0]], axis=1),
            "shear": lambda X: np.stack([X[:, 0] + X[:, 1], X[:, 1]], axis=1),
            "reflect": lambda X: np.stack([X[:, 1], X[:, 0]], axis=1),
        }
    else:
        raise LipkitError("fixture maps exist for dimensions 1 and 2")
    if name not in maps:
        raise LipkitError(f"no fixture map {name!r} in dimension {dim}; choose from {sorted(maps)}")
    return ManifoldMap(maps[name], name)


@dataclass(frozen=True)
class IsometryReport:
    max_deviation: float
    worst_base_point: Optional[list]
    points: int
    pairs: int
    tol: float
    passed: bool
    radii: tuple = ()

    def to_json(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "worst_base_point": self.worst_base_point,
            "points": self.points,
            "pairs": self.pairs,
            "tol": self.tol,
            "passed": self.passed,
            "source_radii": list(self.radii),
        }


def local_isometry_check(
    sigma: ManifoldMap,
    N: Atlas,
    M: Atlas,
    n_points: int = 20,
    pairs_per_point: int = 200,
    seed: int = 0,
    tol: float = 1e-9,
    max_shrink: int = 12,
) -> IsometryReport:
    """Check that ``g = phi^-1 o sigma o psi`` preserves distances near 0.

    ``psi`` is the chart of ``N`` at a sampled base point ``p`` and ``phi``
    the chart of ``M`` at ``sigma(p)``. The source radius is halved until
    ``sigma`` maps the sampled source patch into the target chart. Deviation
    is ``| |g(u) - g(v)| / |u - v| - 1 |``.
    """
    if N.dim != M.dim:
        raise LipkitError("manifolds must have equal dimension")
    base = N.space.sample(n_points, (seed, 501))
    worst, worst_p, radii, total = -1.0, None, [], 0
    for i, p in enumerate(base):
        psi = N.chart_at(p)
        phi = M.chart_at(sigma(p))
        rng_seed = (seed, 502, i)
        r = psi.radius
        for _ in range(max_shrink + 1):
            dom = open_ball(np.zeros(N.dim), r)
            S = dom.sample(2 * pairs_per_point, rng_seed)
            img = sigma(psi.forward(S))
            if np.all(phi.contains_image(img)):
                break
            r /= 2.0
        else:
            raise SamplingError(f"sigma image escapes every target chart around {p.tolist()}")
        radii.append(r)
        G = phi.inverse(img)
        U, V, GU, GV = S[0::2], S[1::2], G[0::2], G[1::2]
        du = np.linalg.norm(U - V, axis=1)
        keep = du > 0
        dev = np.abs(np.linalg.norm(GU - GV, axis=1)[keep] / du[keep] - 1.0)
        total += int(keep.sum())
        m = float(dev.max())
        if m > worst:
            worst, worst_p = m, p.tolist()
    return IsometryReport(worst, worst_p, n_points, total, tol, worst <= tol, tuple(radii))
