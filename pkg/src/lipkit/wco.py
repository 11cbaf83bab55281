"""Weighted composition operators ``Tf = h * (f o phi)`` and their checks.

``phi`` maps the target space ``Y`` into the source space ``X``; ``h`` is a
function on ``Y``. The preservation checks compare Lipschitz constants of
``Tf`` on ``Y`` with those of ``f`` on ``X``. With ``paired=True`` the pairs
sampled in ``Y`` are pushed through ``phi`` to build the ``X`` side, so an
operator that preserves constants exactly produces the same quotient set on
both sides up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .affine import AffineMap
from .errors import DomainError, EstimatorError, InapplicableError, LipkitError
from .funcs import ScalarFunc, constant, cone_function, probe_corpus, witness_function
from .lipest import (
    EstimatorConfig,
    LipEstimate,
    ball_pairs,
    estimate,
    global_pairs,
    sup_quotient,
)
from .metric import MetricSpace, as_real


@dataclass(frozen=True, eq=False)
class PointMap:
    """Black-box map between point batches ``(m, n_Y) -> (m, n_X)``."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "map"
    descriptor: object = None

    def __call__(self, X):
        X = as_real(X)
        if X.ndim == 1:
            return as_real(self.fn(X[None, :]))[0]
        return as_real(self.fn(X))

    def to_json(self):
        if self.descriptor is None:
            raise LipkitError(f"point map {self.label} has no serializable descriptor")
        return self.descriptor


def expr_point_map(exprs: list[str], in_dim: int) -> PointMap:
    """Point map whose output coordinates are parsed expressions."""
    from . import expr as ex

    nodes = [ex.parse_expr(e, in_dim) for e in exprs]

    def fn(X):
        return np.stack([ex.evaluate(n, X) for n in nodes], axis=1)

    return PointMap(fn, "[" + ", ".join(exprs) + "]", {"exprs": list(exprs)})


Symbol = Union[AffineMap, PointMap]


@dataclass(frozen=True, eq=False)
class WCOperator:
    weight: ScalarFunc
    symbol: Symbol
    source: MetricSpace
    target: MetricSpace
    label: str = "T"

    def __post_init__(self):
        if self.weight.space != self.target:
            raise LipkitError("the weight must live on the target space Y")

    def __call__(self, f: ScalarFunc) -> ScalarFunc:
        return apply(self, f)

    def check_symbol(self, n: int = 256, seed: int = 0) -> None:
        """Raise :class:`DomainError` if ``phi`` leaves ``X`` on a sample of ``Y``."""
        Y = self.target.sample(n, seed)
        if not np.all(self.source.contains(self.symbol(Y))):
            raise DomainError(f"symbol of {self.label} maps sampled points outside the source space")

    def to_json(self) -> dict:
        return {
            "weight": self.weight.to_json(),
            "symbol": {"affine": self.symbol.to_json()}
            if isinstance(self.symbol, AffineMap)
            else self.symbol.to_json(),
            "source": self.source.to_json(),
            "target": self.target.to_json(),
        }


def apply(T: WCOperator, f: ScalarFunc) -> ScalarFunc:
    """``(Tf)(y) = h(y) * f(phi(y))``."""
    if f.space != T.source:
        raise LipkitError(f"{f.label} is not defined on the source space of {T.label}")
    X, h, phi = T.source, T.weight, T.symbol

    def fn(Yb):
        Xb = phi(Yb)
        if not np.all(X.contains(Xb)):
            raise DomainError(f"symbol of {T.label} left the source space")
        return h.values(Yb) * f.values(Xb)

    grad = None
    if isinstance(phi, AffineMap) and h.has_grad and f.has_grad:
        J = phi.alpha * phi.A

        def grad(Yb):
            Xb = phi(Yb)
            return h.grad(Yb) * f.values(Xb)[:, None] + h.values(Yb)[:, None] * (f.grad(Xb) @ J)

    return ScalarFunc(fn, T.target, f"{T.label}[{f.label}]", grad)


@dataclass(frozen=True, eq=False)
class BlackBoxOperator:
    """A linear map on functions known only through its action."""

    action: Callable[[ScalarFunc], ScalarFunc]
    label: str
    source: MetricSpace
    target: MetricSpace

    def __call__(self, f: ScalarFunc) -> ScalarFunc:
        return self.action(f)


def as_blackbox(T: WCOperator) -> BlackBoxOperator:
    return BlackBoxOperator(lambda f: apply(T, f), T.label, T.source, T.target)


def shift_preserver(x0, X: MetricSpace) -> BlackBoxOperator:
    """``f -> f + f(x0)``: linear, bijective, preserves global constants,
    and is not a weighted composition operator."""
    x0 = X.check_point(x0)

    def action(f: ScalarFunc) -> ScalarFunc:
        c = f(x0)
        return ScalarFunc(
            lambda Xb: f.values(Xb) + c, X, f"{f.label} + f({x0.tolist()})", f.grad_fn
        )

    return BlackBoxOperator(action, f"shift[x0={x0.tolist()}]", X, X)


# -- constructors ------------------------------------------------------------


def wco(weight: float | ScalarFunc, symbol: Symbol, source: MetricSpace, target: MetricSpace, label="T"):
    if not isinstance(weight, ScalarFunc):
        weight = constant(weight, target)
    return WCOperator(weight, symbol, source, target, label)


def identity_operator(X: MetricSpace) -> WCOperator:
    return WCOperator(constant(1.0, X), AffineMap(1.0, np.eye(X.dim), np.zeros(X.dim)), X, X, "id")


def constant_weight_alpha(T: WCOperator, n: int = 256, seed: int = 0, rtol: float = 1e-12) -> tuple[float, float]:
    """Return ``(alpha, sign)`` when the weight is the constant ``sign / alpha``."""
    h = T.weight.values(T.target.sample(n, seed))
    h0 = h[0]
    if h0 == 0 or np.max(np.abs(h - h0)) > rtol * abs(h0):
        raise InapplicableError(f"weight of {T.label} is not a non-zero constant on samples")
    return 1.0 / abs(h0), float(np.sign(h0))


# -- preservation ------------------------------------------------------------


@dataclass(frozen=True)
class PreservationEntry:
    label: str
    lhs: LipEstimate
    rhs: LipEstimate
    deviation: float
    at: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "function": self.label,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "deviation": self.deviation,
            "at": None if self.at is None else list(self.at),
        }


@dataclass(frozen=True)
class PreservationReport:
    kind: str
    per_function: tuple
    max_deviation: float
    tol: float
    verdict: bool
    witness: Optional[dict] = None
    paired: bool = True

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "per_function": [e.to_json() for e in self.per_function],
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "verdict": "pass" if self.verdict else "fail",
            "witness": self.witness,
            "paired": self.paired,
        }


def relative_deviation(lhs: float, rhs: float) -> float:
    """``|lhs - rhs| / rhs``; absolute difference when ``rhs == 0``."""
    if rhs > 0:
        return abs(lhs - rhs) / rhs
    return abs(lhs)


def _symbol_of(T) -> Optional[Callable]:
    if isinstance(T, WCOperator):
        return T.symbol
    if T.source != T.target:
        raise InapplicableError("black-box operators are compared on a common space X = Y")
    return None


def _paired_stage(Tf, f, X, Y, phi, U, V, workers=1):
    # extended precision keeps rounding in f + c from reading as a deviation
    U, V = np.asarray(U, dtype=np.longdouble), np.asarray(V, dtype=np.longdouble)
    lhs, n_l = sup_quotient(Tf, Y, U, V, workers)
    if phi is None:
        rhs, n_r = sup_quotient(f, X, U, V, workers)
    else:
        rhs, n_r = sup_quotient(f, X, phi(U), phi(V), workers)
    return max(lhs, 0.0), max(rhs, 0.0), n_l, n_r


def _paired_estimates(kind, Tf, f, X, Y, phi, cfg, p):
    if kind == "global":
        U, V = global_pairs(Y, cfg.pairs_per_stage, cfg.seed)
        l, r, nl, nr = _paired_stage(Tf, f, X, Y, phi, U, V, cfg.workers)
        if nl == 0:
            raise EstimatorError(f"no distinct pairs sampled for {f.label}")
        return (
            LipEstimate("global", l, None, nl, (), (), cfg.seed, Tf.label),
            LipEstimate("global", r, None, nr, (), (), cfg.seed, f.label),
        )
    tl, tr, nl, nr = [], [], 0, 0
    for k, eps in enumerate(cfg.radii):
        if kind == "local":
            U, V = ball_pairs(Y, p, eps, cfg.pairs_per_stage, cfg.stage_seed(k))
        else:
            U = Y.sample_ball(p, eps, cfg.pairs_per_stage, cfg.stage_seed(k))
            V = np.broadcast_to(p, U.shape)
        l, r, a, b = _paired_stage(Tf, f, X, Y, phi, U, V, cfg.workers)
        tl.append(l)
        tr.append(r)
        nl += a
        nr += b
    q = p if phi is None else phi(p)
    return (
        LipEstimate(kind, tl[-1], tuple(p.tolist()), nl, cfg.radii, tuple(tl), cfg.seed, Tf.label),
        LipEstimate(kind, tr[-1], tuple(np.asarray(q).tolist()), nr, cfg.radii, tuple(tr), cfg.seed, f.label),
    )


def preservation_check(
    T: WCOperator | BlackBoxOperator,
    corpus: list[ScalarFunc] | None = None,
    kind: str = "global",
    cfg: EstimatorConfig = EstimatorConfig(),
    tol: float | None = None,
    panel=None,
    n_panel: int = 5,
    paired: bool = True,
) -> PreservationReport:
    """Compare ``L(Tf)`` with ``L(f)`` (or ``L_p(Tf)`` with ``L_phi(p)(f)``).

    Paired comparisons evaluate both sides in ``np.longdouble`` so that the
    rounding of sums such as ``f + c`` stays below the reported deviation.
    ``tol`` defaults to 1e-9 with pairing and 5e-2 without. For local and
    pointwise kinds the comparison runs at each panel point of ``Y``
    (``n_panel`` sampled points when ``panel`` is None) and the worst point
    is kept per function.
    """
    if kind not in ("global", "local", "pointwise"):
        raise LipkitError(f"unknown preservation kind {kind!r}")
    X, Y = T.source, T.target
    phi = _symbol_of(T)
    if corpus is None:
        corpus = probe_corpus(X, 20, cfg.seed)
    if not corpus:
        raise LipkitError("corpus must not be empty")
    if tol is None:
        tol = 1e-9 if paired else 5e-2
    if kind == "global":
        points = [None]
    elif panel is None:
        points = list(Y.sample(n_panel, (cfg.seed, 301)))
    else:
        points = [Y.check_point(p) for p in np.atleast_2d(np.asarray(panel, dtype=float))]

    entries = []
    for f in corpus:
        Tf = T(f)
        worst = None
        for p in points:
            try:
                if paired:
                    lhs, rhs = _paired_estimates(kind, Tf, f, X, Y, phi, cfg, p)
                else:
                    lhs = estimate(kind, Tf, Y, cfg, at=p)
                    q = p if (p is None or phi is None) else phi(p)
                    rhs = estimate(kind, f, X, cfg, at=q)
            except LipkitError as err:
                raise type(err)(f"[{f.label}] {err}") from err
            dev = relative_deviation(lhs.value, rhs.value)
            if worst is None or dev > worst.deviation:
                worst = PreservationEntry(f.label, lhs, rhs, dev, None if p is None else tuple(p.tolist()))
        entries.append(worst)
    max_dev = max(e.deviation for e in entries)
    verdict = bool(max_dev <= tol)
    witness = None
    if not verdict:
        w = max(entries, key=lambda e: e.deviation)
        witness = {"function": w.label, "point": None if w.at is None else list(w.at), "deviation": w.deviation}
    return PreservationReport(kind, tuple(entries), float(max_dev), tol, verdict, witness, paired)


# -- weighted-composition signature --------------------------------------------


class ConsistencyResult(NamedTuple):
    consistent: bool
    witness: Optional[dict]
    note: str = ""
    applicable: bool = True


def check_linearity(T, corpus, points, tol: float = 1e-9, scalar: float = 1.7) -> Optional[dict]:
    """First violation of ``T(f+g) = Tf + Tg`` or ``T(cf) = c Tf`` on ``points``."""
    for f, g in zip(corpus, corpus[1:] + corpus[:1]):
        Tf, Tg = T(f).values(points), T(g).values(points)
        lhs_sum = T(f + g).values(points)
        lhs_scale = T(scalar * f).values(points)
        scale = np.maximum(1.0, np.abs(Tf) + np.abs(Tg))
        bad_sum = np.abs(lhs_sum - (Tf + Tg)) > tol * scale
        bad_scale = np.abs(lhs_scale - scalar * Tf) > tol * scale
        for bad, what in ((bad_sum, "additivity"), (bad_scale, "homogeneity")):
            if bad.any():
                i = int(np.argmax(bad))
                return {"function": f.label, "point": points[i].tolist(), "law": what}
    return None


def _anchor_points(X: MetricSpace, seed: int) -> np.ndarray:
    if X.kind == "finite_set":
        return np.array(X.param_dict()["points"], dtype=float)
    return X.sample(X.dim + 3, (seed, 201))


def _locate(X: MetricSpace, anchors: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Point whose distances to ``anchors`` are ``r`` (least squares)."""
    if X.kind == "finite_set":
        pts = anchors
        D = np.linalg.norm(pts[:, None, :] - anchors[None, :, :], axis=2)
        return pts[int(np.argmin(np.sum((D - r) ** 2, axis=1)))]
    if X.kind == "sphere_geodesic":
        x, *_ = np.linalg.lstsq(anchors, np.cos(r), rcond=None)
        n = np.linalg.norm(x)
        return x / n if n > 0 else x
    if X.is_euclidean:
        # |x|^2 - 2 x.q_j + |q_j|^2 = r_j^2, minus the j = 0 equation
        q0, r0 = anchors[0], r[0]
        M = 2.0 * (anchors[1:] - q0)
        rhs = np.sum(anchors[1:] ** 2, axis=1) - q0 @ q0 - r[1:] ** 2 + r0**2
        x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        return x
    raise InapplicableError(f"preimage recovery is not available on {X.kind} spaces")


def wco_consistency_check(
    T: BlackBoxOperator | WCOperator,
    corpus: list[ScalarFunc] | None = None,
    X: MetricSpace | None = None,
    Y: MetricSpace | None = None,
    cfg: EstimatorConfig = EstimatorConfig(),
    tol: float = 1e-9,
    n_points: int = 16,
) -> ConsistencyResult:
    """Test whether ``T`` has the form ``Tf = h * (f o phi)``.

    With ``h = T(1)``, each sampled ``y`` gets a candidate preimage located
    from cone probes ``T(cone_q)(y) / h(y) = d(phi(y), q)``; every corpus
    function must then satisfy ``Tf(y) / h(y) = f(candidate)``. Returns
    ``consistent=False`` with a ``(function, y)`` witness on the first
    disagreement.
    """
    X = X or T.source
    Y = Y or T.target
    if corpus is None:
        corpus = probe_corpus(X, 20, cfg.seed)
    ys = Y.sample(n_points, (cfg.seed, 202))
    h = T(constant(1.0, X)).values(ys)
    if np.any(np.abs(h) <= 1e-9):
        i = int(np.argmin(np.abs(h)))
        return ConsistencyResult(
            False, {"function": "const(1.0)", "point": ys[i].tolist()}, "T(1) vanishes at a sampled point; signature test inapplicable", False
        )
    lin = check_linearity(T, list(corpus), ys, tol=max(tol, 1e-9))
    if lin is not None:
        return ConsistencyResult(False, lin, f"operator is not linear ({lin['law']})")

    anchors = _anchor_points(X, cfg.seed)
    cap = X.diameter_bound() * 2.0
    if not np.isfinite(cap):
        cap = np.inf
    probes = [cone_function(q, cap, X) for q in anchors]
    R = np.stack([T(g).values(ys) / h for g in probes], axis=1)
    tcorpus = [(f, T(f).values(ys) / h) for f in corpus]
    for i, y in enumerate(ys):
        cand = _locate(X, anchors, R[i])
        if not X.contains(cand):
            return ConsistencyResult(
                False, {"function": probes[0].label, "point": y.tolist()}, "located preimage falls outside X"
            )
        for g, r in zip(probes, R[i]):
            if abs(g(cand) - r) > tol * max(1.0, abs(r)):
                return ConsistencyResult(
                    False, {"function": g.label, "point": y.tolist()}, "cone probes admit no common preimage"
                )
        for f, vals in tcorpus:
            want = f(cand)
            if abs(vals[i] - want) > tol * max(1.0, abs(want)):
                return ConsistencyResult(
                    False, {"function": f.label, "point": y.tolist()}, "Tf/h disagrees with f at the located preimage"
                )
    return ConsistencyResult(True, None, "weighted-composition signature holds on all samples")


# -- converse witness ------------------------------------------------------------


@dataclass(frozen=True)
class ViolationWitness:
    p: np.ndarray
    q: np.ndarray
    func: ScalarFunc = field(repr=False)
    ratio: float
    quotient: float

    def to_json(self) -> dict:
        return {
            "p": self.p.tolist(),
            "q": self.q.tolist(),
            "function": self.func.to_json(),
            "ratio": self.ratio,
            "quotient": self.quotient,
        }


def dilation_violation_witness(
    T: WCOperator, cfg: EstimatorConfig = EstimatorConfig(), tol: float = 1e-9
) -> Optional[ViolationWitness]:
    """Pair ``p, q`` with ``d(phi p, phi q) > alpha d(p, q)`` and the witness
    function certifying ``L(T f~) > 1 = L(f~)``; None when none is found."""
    alpha, _ = constant_weight_alpha(T, seed=cfg.seed)
    X, Y, phi = T.source, T.target, T.symbol
    U, V = global_pairs(Y, cfg.pairs_per_stage, cfg.seed)
    dY = Y.dist(U, V)
    keep = dY > 0
    U, V, dY = U[keep], V[keep], dY[keep]
    PU, PV = phi(U), phi(V)
    ratio = X.dist(PU, PV) / (alpha * dY)
    i = int(np.argmax(ratio))
    if not ratio[i] > 1.0 + tol:
        return None
    ft = witness_function(PU[i], PV[i], X)
    Tft = apply(T, ft)
    quotient = abs(Tft(U[i]) - Tft(V[i])) / dY[i]
    return ViolationWitness(U[i], V[i], ft, float(ratio[i]), float(quotient))
