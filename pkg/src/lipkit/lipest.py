"""Sampled estimators for global, local and pointwise Lipschitz constants.

All estimators return the maximum difference quotient over the pairs they
actually evaluated, so every value is a lower bound on the true constant.
Local and pointwise estimates also carry the per-radius trend over the
schedule ``eps_k = eps0 * 2**-k``; the reported value is the entry at the
smallest radius.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EstimatorError, GradientUnavailable, LipkitError
from .funcs import ScalarFunc, gradient
from .metric import MetricSpace


@dataclass(frozen=True)
class EstimatorConfig:
    pairs_per_stage: int = 20000
    eps0: float = 0.5
    levels: int = 8
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.pairs_per_stage < 1:
            raise LipkitError("pairs_per_stage must be at least 1")
        if not self.eps0 > 0 or self.levels < 0:
            raise LipkitError("radius schedule needs eps0 > 0 and levels >= 0")
        if self.seed < 0:
            raise LipkitError("seed must be non-negative")
        if self.workers < 1:
            raise LipkitError("workers must be at least 1")

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(self.eps0 * 2.0**-k for k in range(self.levels + 1))

    def stage_seed(self, k: int):
        return (self.seed, k)


@dataclass(frozen=True)
class LipEstimate:
    kind: str
    value: float
    at: Optional[tuple] = None
    pairs_used: int = 0
    radii: tuple = ()
    trend: tuple = ()
    seed: int = 0
    label: str = field(default="", compare=False)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "at": None if self.at is None else list(self.at),
            "pairs_used": self.pairs_used,
            "radii": list(self.radii),
            "trend": list(self.trend),
            "seed": self.seed,
        }


def _chunks(m: int, workers: int):
    if workers <= 1 or m < 2 * workers:
        return [(0, m)]
    edges = np.linspace(0, m, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def quotients(f: ScalarFunc, X: MetricSpace, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Difference quotients ``|f(p) - f(q)| / d(p, q)`` for pairs with d > 0.

    Zero-distance pairs are dropped.
    """
    d = X.dist(P, Q)
    keep = d > 0
    if not keep.all():
        P, Q, d = P[keep], Q[keep], d[keep]
    fp, fq = f.values(P), f.values(Q)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fq))):
        raise EstimatorError(f"{f.label} is not finite at sampled points")
    return np.abs(fp - fq) / d


def sup_quotient(f: ScalarFunc, X: MetricSpace, P, Q, workers: int = 1) -> tuple[float, int]:
    """Max quotient and number of non-degenerate pairs; max is order-free."""
    parts = _chunks(len(P), workers)

    def run(span):
        a, b = span
        q = quotients(f, X, P[a:b], Q[a:b])
        return (float(q.max()) if q.size else -np.inf), int(q.size)

    if len(parts) == 1:
        results = [run(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(run, parts))
    best = max(r[0] for r in results)
    used = sum(r[1] for r in results)
    return best, used


def global_pairs(X: MetricSpace, n_pairs: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Consecutive disjoint pairs from the nested sample stream."""
    S = X.sample(2 * n_pairs, seed)
    return S[0::2], S[1::2]


def ball_pairs(X: MetricSpace, p, radius: float, n_pairs: int, seed):
    S = X.sample_ball(p, radius, 2 * n_pairs, seed)
    return S[0::2], S[1::2]


def global_lip(f: ScalarFunc, X: MetricSpace, cfg: EstimatorConfig = EstimatorConfig()) -> LipEstimate:
    """Max of ``|f(x) - f(y)| / d(x, y)`` over sampled distinct pairs."""
    P, Q = global_pairs(X, cfg.pairs_per_stage, cfg.seed)
    value, used = sup_quotient(f, X, P, Q, cfg.workers)
    if used == 0:
        raise EstimatorError(f"{X.kind} space produced no pair of distinct points")
    return LipEstimate("global", value, None, used, (), (), cfg.seed, f.label)


def local_lip(f: ScalarFunc, p, X: MetricSpace, cfg: EstimatorConfig = EstimatorConfig()) -> LipEstimate:
    """Pair-sup over ``B(p, eps_k)`` for each radius of the schedule."""
    p = X.check_point(p)
    trend, used = [], 0
    for k, eps in enumerate(cfg.radii):
        P, Q = ball_pairs(X, p, eps, cfg.pairs_per_stage, cfg.stage_seed(k))
        v, u = sup_quotient(f, X, P, Q, cfg.workers)
        trend.append(max(v, 0.0))
        used += u
    return LipEstimate("local", trend[-1], tuple(p.tolist()), used, cfg.radii, tuple(trend), cfg.seed, f.label)


def pointwise_lip(
    f: ScalarFunc, p, X: MetricSpace, cfg: EstimatorConfig = EstimatorConfig()
) -> LipEstimate:
    """Sup of ``|f(x) - f(p)| / d(x, p)`` over ``B(p, eps_k) minus {p}``."""
    p = X.check_point(p)
    trend, used = [], 0
    for k, eps in enumerate(cfg.radii):
        S = X.sample_ball(p, eps, cfg.pairs_per_stage, cfg.stage_seed(k))
        v, u = sup_quotient(f, X, S, np.broadcast_to(p, S.shape), cfg.workers)
        trend.append(max(v, 0.0))
        used += u
    return LipEstimate(
        "pointwise", trend[-1], tuple(p.tolist()), used, cfg.radii, tuple(trend), cfg.seed, f.label
    )


def local_lip_via_gradient(f: ScalarFunc, p) -> float:
    """Euclidean norm of the gradient; equals the local constant where f is C^1."""
    if not f.space.is_euclidean or f.space.kind == "finite_set":
        raise LipkitError("gradient route needs a Euclidean domain")
    try:
        g = gradient(f, p)
    except (GradientUnavailable, EstimatorError) as err:
        raise GradientUnavailable(f"gradient unavailable for {f.label}: {err}") from err
    return float(np.linalg.norm(g))


def estimate(kind: str, f: ScalarFunc, X: MetricSpace, cfg: EstimatorConfig, at=None) -> LipEstimate:
    if kind == "global":
        return global_lip(f, X, cfg)
    if at is None:
        raise LipkitError(f"{kind} estimate needs a base point")
    if kind == "local":
        return local_lip(f, at, X, cfg)
    if kind == "pointwise":
        return pointwise_lip(f, at, X, cfg)
    raise LipkitError(f"unknown estimate kind {kind!r}")
