"""Scalar functions on metric spaces.

A :class:`ScalarFunc` wraps a vectorized evaluator ``(m, dim) -> (m,)`` plus
an optional exact gradient. Builtins cover the probe functions used to test
operators: coordinates, constants, the product ``x0*x1``, the tent map, cone
functions ``min(d(x, q), cap)`` and the two-point witness
``min(d(x, s), d(s, t))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr as ex
from .errors import DomainError, EstimatorError, GradientUnavailable, LipkitError
from .metric import MetricSpace, as_real, make_rng

FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class ScalarFunc:
    """Real-valued function on ``space``.

    ``descriptor`` is the JSON form (see :func:`from_descriptor`) when the
    function can be rebuilt from one, otherwise None.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    space: MetricSpace
    label: str
    grad_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    descriptor: object = None
    ast: object = field(default=None, repr=False)

    def values(self, X) -> np.ndarray:
        X = as_real(X)
        if X.ndim == 1:
            X = X[None, :]
        return as_real(self.fn(X)).reshape(X.shape[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        v = self.values(x)
        return float(v[0]) if x.ndim == 1 else v

    @property
    def has_grad(self) -> bool:
        return self.grad_fn is not None

    def grad(self, x) -> np.ndarray:
        if self.grad_fn is None:
            raise GradientUnavailable(f"{self.label} has no exact gradient")
        x = np.asarray(x, dtype=float)
        G = np.asarray(self.grad_fn(np.atleast_2d(x)), dtype=float)
        return G[0] if x.ndim == 1 else G

    # linear structure, used by linearity checks on black-box operators

    def __add__(self, other):
        if isinstance(other, ScalarFunc):
            g = None
            if self.grad_fn and other.grad_fn:
                g = lambda X, a=self.grad_fn, b=other.grad_fn: a(X) + b(X)
            return ScalarFunc(
                lambda X, a=self, b=other: a.values(X) + b.values(X),
                self.space,
                f"({self.label} + {other.label})",
                g,
            )
        c = float(other)
        return ScalarFunc(
            lambda X, a=self: a.values(X) + c, self.space, f"({self.label} + {c!r})", self.grad_fn
        )

    __radd__ = __add__

    def __rmul__(self, c):
        c = float(c)
        g = None
        if self.grad_fn:
            g = lambda X, a=self.grad_fn: c * a(X)
        return ScalarFunc(lambda X, a=self: c * a.values(X), self.space, f"{c!r}*{self.label}", g)

    def __neg__(self):
        return (-1.0) * self

    def __sub__(self, other):
        return self + (-1.0) * other

    def to_json(self):
        if self.descriptor is None:
            raise LipkitError(f"{self.label} has no serializable descriptor")
        return self.descriptor


# -- builtins --------------------------------------------------------------


def constant(c: float, space: MetricSpace) -> ScalarFunc:
    c = float(c)
    return ScalarFunc(
        lambda X: np.full(X.shape[0], c, dtype=X.dtype),
        space,
        f"const({c!r})",
        lambda X: np.zeros_like(X),
        {"builtin": "const", "c": c},
    )


def coordinate(i: int, space: MetricSpace) -> ScalarFunc:
    if not 0 <= i < space.dim:
        raise LipkitError(f"coordinate {i} out of range for dimension {space.dim}")

    def grad(X):
        G = np.zeros_like(X)
        G[:, i] = 1.0
        return G

    return ScalarFunc(lambda X: X[:, i].copy(), space, f"x{i}", grad, f"coord:{i}")


def product01(space: MetricSpace) -> ScalarFunc:
    """``x0 * x1``; its local constant at (u, v) is sqrt(u^2 + v^2)."""
    if space.dim < 2:
        raise LipkitError("product01 needs dimension >= 2")

    def grad(X):
        G = np.zeros_like(X)
        G[:, 0] = X[:, 1]
        G[:, 1] = X[:, 0]
        return G

    return ScalarFunc(lambda X: X[:, 0] * X[:, 1], space, "x0*x1", grad, "product01")


def tent(space: MetricSpace) -> ScalarFunc:
    """``x`` on [1/2, 1] and ``1 - x`` on [0, 1/2]: non-injective, slope 1 a.e."""
    if space.dim != 1:
        raise LipkitError("tent is defined on one-dimensional spaces")
    return ScalarFunc(lambda X: np.maximum(X[:, 0], 1.0 - X[:, 0]), space, "tent", None, "tent")


def cone_function(q, cap: float, space: MetricSpace) -> ScalarFunc:
    """``x -> min(d(x, q), cap)``; zero exactly at ``q``, 1-Lipschitz."""
    q = space.check_point(q)
    if not cap > 0:
        raise LipkitError("cone cap must be positive")
    cap = float(cap)
    return ScalarFunc(
        lambda X: np.minimum(space.dist(X, np.broadcast_to(q, X.shape)), cap),
        space,
        f"cone({_fmt(q)}; {cap:g})",
        None,
        {"builtin": "cone", "q": q.tolist(), "cap": cap},
    )


def witness_function(s, t, space: MetricSpace) -> ScalarFunc:
    """``x -> min(d(x, s), d(s, t))``: 1-Lipschitz with f(t) - f(s) = d(s, t)."""
    s = space.check_point(s)
    t = space.check_point(t)
    dst = float(space.dist(s, t)[0])
    if dst == 0:
        raise LipkitError("witness function needs distinct points s != t")
    return ScalarFunc(
        lambda X: np.minimum(space.dist(X, np.broadcast_to(s, X.shape)), dst),
        space,
        f"witness({_fmt(s)} -> {_fmt(t)})",
        None,
        {"builtin": "witness", "s": s.tolist(), "t": t.tolist()},
    )


def from_expr(text: str, space: MetricSpace, label: str | None = None) -> ScalarFunc:
    node = ex.parse_expr(text, space.dim)
    return from_ast(node, space, label or text, descriptor=f"expr:{text}")


def from_ast(node, space: MetricSpace, label: str | None = None, descriptor=None) -> ScalarFunc:
    grad = None
    if ex.is_differentiable(node):
        grad = lambda X: ex.evaluate_with_grad(node, X)[1]
    if descriptor is None:
        descriptor = f"expr:{ex.to_text(node)}"
    return ScalarFunc(
        lambda X: ex.evaluate(node, X, space.dist),
        space,
        label or ex.to_text(node),
        grad,
        descriptor,
        node,
    )


def compose(f: ScalarFunc, sigma: Callable, space: MetricSpace, label: str | None = None) -> ScalarFunc:
    """``f o sigma`` where ``sigma`` maps batches of ``space`` into ``f.space``."""
    return ScalarFunc(
        lambda X: f.values(sigma(X)), space, label or f"{f.label} o {getattr(sigma, 'label', 'map')}"
    )


def _fmt(p) -> str:
    return "(" + ", ".join(f"{v:.4g}" for v in np.atleast_1d(p)) + ")"


# -- gradient ----------------------------------------------------------------


def gradient(f: ScalarFunc, p) -> np.ndarray:
    """Exact gradient when available, else central differences (step 1e-5).

    Raises :class:`EstimatorError` if a stencil point leaves the domain or
    the function is not finite there.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if f.has_grad:
        return f.grad(p)
    n = p.size
    E = FD_STEP * np.eye(n)
    stencil = np.concatenate([p + E, p - E])
    inside = f.space.contains(stencil)
    if not np.all(inside):
        raise EstimatorError(
            f"finite-difference stencil for {f.label} leaves the domain at {p.tolist()} "
            "(too close to the boundary)"
        )
    vals = f.values(stencil)
    if not np.all(np.isfinite(vals)):
        raise EstimatorError(f"{f.label} is not finite on the stencil around {p.tolist()}")
    return (vals[:n] - vals[n:]) / (2 * FD_STEP)


# -- descriptors ---------------------------------------------------------------


def from_descriptor(desc, space: MetricSpace, seed: int = 0) -> ScalarFunc:
    """Build a function from its descriptor.

    Strings: ``coord:i``, ``const:c``, ``product01``, ``tent``, ``cone``,
    ``witness``, ``expr:<text>``. Bare ``cone``/``witness`` use anchors drawn
    from the space with ``seed``. Objects: ``{"builtin": "cone", "q": [...],
    "cap": c}``, ``{"builtin": "witness", "s": [...], "t": [...]}``,
    ``{"builtin": "const", "c": c}``, ``{"expr": "<text>"}``.
    """
    if isinstance(desc, str):
        s = desc.strip()
        if s.startswith("{"):
            return from_descriptor(json.loads(s), space, seed)
        if s.startswith("expr:"):
            return from_expr(s[5:].strip().strip('"'), space)
        if s.startswith("coord:"):
            return coordinate(int(s[6:]), space)
        if s.startswith("const:"):
            return constant(float(s[6:]), space)
        if s == "product01":
            return product01(space)
        if s == "tent":
            return tent(space)
        if s == "cone":
            return cone_function(space.sample(1, seed)[0], 1.0, space)
        if s == "witness":
            s_, t_ = space.sample(2, seed)
            return witness_function(s_, t_, space)
        raise LipkitError(f"unknown function descriptor {desc!r}")
    if not isinstance(desc, dict):
        raise LipkitError("function descriptor must be a string or JSON object")
    if "expr" in desc:
        _strict(desc, {"expr"})
        return from_expr(desc["expr"], space)
    kind = desc.get("builtin")
    if kind == "cone":
        _strict(desc, {"builtin", "q", "cap"})
        return cone_function(desc["q"], desc.get("cap", 1.0), space)
    if kind == "witness":
        _strict(desc, {"builtin", "s", "t"})
        return witness_function(desc["s"], desc["t"], space)
    if kind == "const":
        _strict(desc, {"builtin", "c"})
        return constant(desc["c"], space)
    if kind in ("product01", "tent"):
        _strict(desc, {"builtin"})
        return from_descriptor(kind, space)
    if kind == "coord":
        _strict(desc, {"builtin", "i"})
        return coordinate(int(desc["i"]), space)
    raise LipkitError(f"unknown function descriptor {desc!r}")


def _strict(desc: dict, allowed: set):
    extra = set(desc) - allowed
    if extra:
        raise LipkitError(f"unknown descriptor fields {sorted(extra)}")


# -- probe corpus ----------------------------------------------------------------

_EXTRA_1D = ["x0^2", "sin(3*x0)", "abs(x0 - 0.3)", "cos(2*x0)", "max(x0, 0.5)", "x0^3 - x0"]
_EXTRA_ND = [
    "x0 + x{last}",
    "sin(3*x0) + x{last}^2",
    "abs(x0 - 0.3) - x{last}",
    "cos(2*x0)*x{last}",
    "max(x0, x{last})",
    "x0^2 - x{last}",
]


def random_expression(dim: int, rng: np.random.Generator) -> str:
    """A small smooth random expression over x0..x{dim-1}."""
    i, j = rng.integers(0, dim, size=2)
    a, b, c = np.round(rng.uniform(-2, 2, size=3), 3)
    templates = [
        f"{abs(a)}*sin({abs(b)}*x{i} + 0.5) + {abs(c)}*x{j}",
        f"{abs(a)}*cos({abs(b)}*x{i})*x{j} + {abs(c)}",
        f"({abs(a)}*x{i} - {abs(c)})^2 + {abs(b)}*x{j}",
    ]
    return templates[int(rng.integers(0, len(templates)))]


def probe_corpus(space: MetricSpace, size: int = 20, seed: int = 0) -> list[ScalarFunc]:
    """Deterministic probe functions for preservation checks.

    Order: constant 1, coordinates, ``x0*x1`` (dim >= 2) or the tent map
    (dim 1), cones at 5 sampled anchors, witnesses at 3 sampled pairs, two
    random expressions, then smooth fillers; truncated to ``size``.
    """
    out: list[ScalarFunc] = [constant(1.0, space)]
    out += [coordinate(i, space) for i in range(space.dim)]
    if space.dim >= 2:
        out.append(product01(space))
    elif space.kind in ("interval", "box"):
        out.append(tent(space))
    anchors = space.sample(11, (seed, 101))
    cap = min(1.0, space.diameter_bound()) if np.isfinite(space.diameter_bound()) else 1.0
    out += [cone_function(q, cap, space) for q in anchors[:5]]
    for k in range(3):
        s, t = anchors[5 + 2 * k], anchors[6 + 2 * k]
        if space.dist(s, t)[0] > 0:
            out.append(witness_function(s, t, space))
    rng = make_rng((seed, 102))
    out += [from_expr(random_expression(space.dim, rng), space) for _ in range(2)]
    fillers = _EXTRA_1D if space.dim == 1 else [e.format(last=space.dim - 1) for e in _EXTRA_ND]
    k = 0
    while len(out) < size:
        if k < len(fillers):
            out.append(from_expr(fillers[k], space))
        else:
            out.append(from_expr(random_expression(space.dim, rng), space))
        k += 1
    return out[:size]


def builtin_corpus(space: MetricSpace, seed: int = 0) -> list[ScalarFunc]:
    """The ten-function corpus used for order-law checks."""
    return probe_corpus(space, size=10, seed=seed)


def check_domain(f: ScalarFunc, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(f.space.contains(X)):
        raise DomainError(f"points outside the domain of {f.label}")
