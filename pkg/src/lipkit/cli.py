"""Command-line front end: one subcommand per operation, JSON reports.

Exit codes: 0 computed and passed (or no verdict applies), 1 computed and
failed, 2 usage or configuration error (diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .affine import AffineMap
from .dilation import (
    classify_1d,
    cube_operator,
    dilation_check,
    enumerate_cube_symmetries,
    interval_canonical,
    recover_affine,
)
from .errors import LipkitError
from .flatman import (
    chart_independence_check,
    circle_atlas,
    fixture_map,
    local_isometry_check,
    sheared_atlas,
    torus_atlas,
    transition_orthogonality_check,
)
from .funcs import constant, from_descriptor, probe_corpus
from .lipest import EstimatorConfig, estimate, local_lip_via_gradient
from .metric import MetricSpace, circle, euclidean, interval, sphere, torus, unit_cube
from .wco import (
    WCOperator,
    constant_weight_alpha,
    dilation_violation_witness,
    expr_point_map,
    preservation_check,
    shift_preserver,
    wco_consistency_check,
)

COMMANDS = (
    "estimate",
    "check-preserve",
    "consistency",
    "recover",
    "dilation",
    "classify1d",
    "cube-sym",
    "manifold-check",
    "chart-check",
)

# library operation -> command that reaches it
COVERAGE = {
    "metric.distance": "estimate",
    "metric.sample_points": "estimate",
    "metric.sample_ball": "estimate",
    "funcs.from_descriptor": "estimate",
    "funcs.probe_corpus": "check-preserve",
    "lipest.global_lip": "estimate",
    "lipest.local_lip": "estimate",
    "lipest.pointwise_lip": "estimate",
    "lipest.local_lip_via_gradient": "estimate",
    "wco.apply": "check-preserve",
    "wco.preservation_check": "check-preserve",
    "wco.shift_preserver": "consistency",
    "wco.wco_consistency_check": "consistency",
    "wco.dilation_violation_witness": "dilation",
    "dilation.dilation_check": "dilation",
    "dilation.recover_affine": "recover",
    "dilation.classify_1d": "classify1d",
    "dilation.enumerate_cube_symmetries": "cube-sym",
    "dilation.interval_canonical": "check-preserve",
    "flatman.local_isometry_check": "manifold-check",
    "flatman.transition_orthogonality_check": "chart-check",
    "flatman.chart_independence_check": "chart-check",
    "flatman.pt_lip_on_manifold": "chart-check",
}


class UsageError(Exception):
    pass


# -- deterministic JSON ----------------------------------------------------------


def _float_text(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""
    obj = _plain(obj)
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float_text(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# -- descriptor parsing -------------------------------------------------------------


def load_json_arg(text: str):
    """Inline JSON, or the path of a JSON file."""
    s = text.strip()
    if s[:1] in "{[":
        try:
            return json.loads(s)
        except json.JSONDecodeError as err:
            raise UsageError(f"malformed JSON: {err}") from err
    if os.path.isfile(s):
        with open(s, encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as err:
                raise UsageError(f"malformed JSON in {s}: {err}") from err
    raise UsageError(f"expected inline JSON or a file path, got {text!r}")


def _numbers(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as err:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from err


def parse_point(text: str) -> np.ndarray:
    s = text.strip()
    if s.startswith("["):
        return np.asarray(load_json_arg(s), dtype=float).reshape(-1)
    return np.array(_numbers(s))


def parse_space(text: str) -> MetricSpace:
    """Space descriptor: JSON object or file, or a shortcut
    ``interval:a,b``, ``cube:n``, ``euclidean:n``, ``sphere``, ``circle``, ``torus:n``."""
    s = text.strip()
    if s[:1] == "{" or os.path.isfile(s):
        return MetricSpace.from_json(load_json_arg(s))
    name, _, arg = s.partition(":")
    if name == "interval":
        a, b = _numbers(arg) if arg else (0.0, 1.0)
        return interval(a, b)
    if name in ("cube", "euclidean", "torus"):
        n = int(arg) if arg else 2
        return {"cube": unit_cube, "euclidean": euclidean, "torus": torus}[name](n)
    if name == "sphere":
        return sphere()
    if name == "circle":
        return circle()
    raise UsageError(f"unknown space {text!r}")


def _strict_keys(obj: dict, required: set, optional: set = frozenset(), what: str = "descriptor"):
    if not isinstance(obj, dict):
        raise UsageError(f"{what} must be a JSON object")
    missing = required - set(obj)
    extra = set(obj) - required - set(optional)
    if missing:
        raise UsageError(f"{what} is missing fields {sorted(missing)}")
    if extra:
        raise UsageError(f"{what} has unknown fields {sorted(extra)}")


def operator_from_json(obj) -> WCOperator:
    """``{"weight", "symbol": {"affine": {...}} | {"exprs": [...]}, "source", "target"}``."""
    _strict_keys(obj, {"weight", "symbol", "source", "target"}, {"label"}, "operator descriptor")
    X = MetricSpace.from_json(obj["source"])
    Y = MetricSpace.from_json(obj["target"])
    sym = obj["symbol"]
    if isinstance(sym, dict) and set(sym) == {"affine"}:
        phi = AffineMap.from_json(sym["affine"])
    elif isinstance(sym, dict) and set(sym) == {"exprs"}:
        phi = expr_point_map(list(sym["exprs"]), Y.dim)
    else:
        raise UsageError('symbol must be {"affine": {...}} or {"exprs": [...]}')
    w = obj["weight"]
    h = constant(w, Y) if isinstance(w, (int, float)) and not isinstance(w, bool) else from_descriptor(w, Y)
    return WCOperator(h, phi, X, Y, obj.get("label", "T"))


def parse_operator(text: str) -> WCOperator:
    """Operator descriptor: JSON (inline or file) or a named family
    ``interval:a,b,c,d[:up|:down][:-1]`` or ``cube:n:index[:-1]``."""
    s = text.strip()
    if s[:1] == "{" or os.path.isfile(s):
        return operator_from_json(load_json_arg(s))
    parts = s.split(":")
    sign = 1.0
    if parts[-1] in ("-1", "+1", "1") and len(parts) > 2:
        sign = float(parts.pop())
    if parts[0] == "interval" and len(parts) in (2, 3):
        vals = _numbers(parts[1])
        if len(vals) != 4:
            raise UsageError("interval operator needs a,b,c,d")
        which = parts[2] if len(parts) == 3 else "up"
        if which not in ("up", "down"):
            raise UsageError("interval operator variant must be up or down")
        up, down = interval_canonical(*vals, sign=sign)
        return up if which == "up" else down
    if parts[0] == "cube" and len(parts) == 3:
        maps = enumerate_cube_symmetries(int(parts[1]))
        i = int(parts[2])
        if not 0 <= i < len(maps):
            raise UsageError(f"cube symmetry index must be in [0, {len(maps)})")
        return cube_operator(maps[i], sign)
    raise UsageError(f"unknown operator {text!r}")


def _load_samples(text: str) -> np.ndarray:
    s = text.strip()
    if s[:1] in "{[":
        return np.asarray(load_json_arg(s), dtype=float)
    if not os.path.isfile(s):
        raise UsageError(f"no such file: {s}")
    with open(s, encoding="utf-8") as fh:
        head = fh.read(1).strip()
    if head in ("[", "{"):
        return np.asarray(load_json_arg(s), dtype=float)
    return np.loadtxt(s, dtype=float, ndmin=2)


def _pairs_input(text: str):
    """Pairs file: JSON ``(m, 2, n)`` array, ``{"inputs", "outputs"}``, or a
    text table whose first half of columns are inputs."""
    s = text.strip()
    raw = None
    if s[:1] in "{[" or (os.path.isfile(s) and open(s, encoding="utf-8").read(1) in "{["):
        raw = load_json_arg(s)
    if isinstance(raw, dict):
        _strict_keys(raw, {"inputs", "outputs"}, what="pairs file")
        return np.asarray(raw["inputs"], dtype=float), np.asarray(raw["outputs"], dtype=float)
    arr = np.asarray(raw, dtype=float) if raw is not None else _load_samples(s)
    if arr.ndim == 2 and raw is None:
        if arr.shape[1] % 2:
            raise UsageError("pairs table needs an even number of columns")
        n = arr.shape[1] // 2
        return arr[:, :n], arr[:, n:]
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[1] != 2:
        raise UsageError("pairs must be an (m, 2, n) array")
    return arr[:, 0, :], arr[:, 1, :]


# -- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise UsageError("seed must be a non-negative integer")
        allowed = set(_OPTIONS[self.command])
        extra = set(self.options) - allowed
        if extra:
            raise UsageError(f"{self.command} does not accept {sorted(extra)}")

    @classmethod
    def from_json(cls, obj) -> "RunConfig":
        _strict_keys(obj, {"command"}, {"options", "seed", "output"}, "run config")
        seed = obj.get("seed", default_seed())
        return cls(obj["command"], dict(obj.get("options", {})), seed, obj.get("output"))


def default_seed() -> int:
    env = os.environ.get("LIPKIT_SEED")
    if env is None or env == "":
        return 0
    try:
        seed = int(env)
    except ValueError as err:
        raise UsageError(f"LIPKIT_SEED must be an integer, got {env!r}") from err
    if seed < 0:
        raise UsageError("LIPKIT_SEED must be non-negative")
    return seed


def _opt(o: dict, key: str, default=None):
    v = o.get(key)
    return default if v is None else v


def _cfg(o: dict, seed: int) -> EstimatorConfig:
    return EstimatorConfig(
        pairs_per_stage=int(_opt(o, "pairs", 20000)),
        levels=int(_opt(o, "radii", 8)),
        seed=seed,
        workers=int(_opt(o, "workers", 1)),
    )


# -- commands -----------------------------------------------------------------------

Result = tuple[Optional[bool], dict]


def cmd_estimate(o: dict, seed: int) -> Result:
    X = parse_space(o["space"])
    f = from_descriptor(o["func"], X, seed)
    kind = _opt(o, "kind", "global")
    at = None if o.get("at") is None else X.check_point(parse_point(o["at"]))
    if kind in ("local", "pointwise", "gradient") and at is None:
        raise UsageError(f"--at is required for kind {kind}")
    if kind == "gradient":
        v = local_lip_via_gradient(f, at)
        return None, {"kind": "gradient", "value": v, "at": at.tolist(), "function": f.label}
    est = estimate(kind, f, X, _cfg(o, seed), at=at)
    return None, {**est.to_json(), "function": f.label}


def cmd_check_preserve(o: dict, seed: int) -> Result:
    T = parse_operator(o["op"])
    cfg = _cfg(o, seed)
    corpus = probe_corpus(T.source, int(_opt(o, "corpus_size", 20)), seed)
    panel = None if o.get("panel") is None else np.asarray(load_json_arg(o["panel"]), dtype=float)
    rep = preservation_check(
        T,
        corpus,
        _opt(o, "kind", "global"),
        cfg,
        tol=o.get("tol"),
        panel=panel,
        paired=not o.get("unpaired", False),
    )
    return rep.verdict, {"operator": T.label, **rep.to_json()}


def cmd_consistency(o: dict, seed: int) -> Result:
    bb = o["blackbox"].strip()
    cfg = _cfg(o, seed)
    if bb.startswith("shift:"):
        X = parse_space(_opt(o, "space", "interval:0,1"))
        T = shift_preserver(parse_point(bb[6:]), X)
    elif bb.startswith("wco:"):
        T = parse_operator(bb[4:])
    else:
        raise UsageError("--blackbox must be shift:<x0> or wco:<descriptor>")
    res = wco_consistency_check(T, cfg=cfg, tol=float(_opt(o, "tol", 1e-9)))
    out = {
        "operator": T.label,
        "consistent": res.consistent,
        "applicable": res.applicable,
        "witness": res.witness,
        "note": res.note,
    }
    return res.consistent, out


def cmd_recover(o: dict, seed: int) -> Result:
    P, Q = _pairs_input(o["pairs"])
    rec = recover_affine((P, Q))
    return rec.accepted, {**rec.to_json(), "accepted": rec.accepted, "points": int(len(P))}


def cmd_dilation(o: dict, seed: int) -> Result:
    T = parse_operator(o["op"])
    tol = float(_opt(o, "tol", 1e-9))
    cfg = _cfg(o, seed)
    rep = dilation_check(T.symbol, T.target, T.source, cfg.pairs_per_stage, seed, tol)
    out: dict[str, Any] = {"operator": T.label, "dilation": rep.to_json()}
    try:
        alpha, sign = constant_weight_alpha(T, seed=seed)
        out["weight"] = {"constant": True, "alpha_from_weight": alpha, "sign": sign}
        w = dilation_violation_witness(T, cfg, tol)
        out["violation"] = None if w is None else w.to_json()
        ok = rep.is_dilation and w is None and abs(rep.alpha_hat - alpha) <= tol * max(1.0, alpha)
    except LipkitError as err:
        out["weight"] = {"constant": False, "note": str(err)}
        out["violation"] = None
        ok = False
    out["verdict"] = "pass" if ok else "fail"
    return ok, out


def cmd_classify1d(o: dict, seed: int) -> Result:
    arr = _load_samples(o["samples"])
    c = classify_1d(arr, float(o["alpha"]), float(_opt(o, "tol", 1e-9)))
    return c.accepted, c.to_json()


def cmd_cube_sym(o: dict, seed: int) -> Result:
    maps = enumerate_cube_symmetries(int(o["n"]))
    return None, {"n": int(o["n"]), "count": len(maps), "maps": [m.to_json() for m in maps]}


_ATLASES: dict[str, Callable] = {
    "circle": circle_atlas,
    "torus": torus_atlas,
    "sheared": sheared_atlas,
}


def _atlas(name: str):
    if name not in _ATLASES:
        raise UsageError(f"unknown manifold {name!r}; choose from {sorted(_ATLASES)}")
    return _ATLASES[name]()


def cmd_manifold_check(o: dict, seed: int) -> Result:
    M = _atlas(o["manifold"])
    sigma = fixture_map(o["map"], M.dim)
    rep = local_isometry_check(
        sigma, M, M, int(_opt(o, "points", 20)), seed=seed, tol=float(_opt(o, "tol", 1e-9))
    )
    return rep.passed, {"atlas": M.to_json(), "map": sigma.label, **rep.to_json()}


def cmd_chart_check(o: dict, seed: int) -> Result:
    M = _atlas(o["manifold"])
    X = M.space
    cfg = _cfg(o, seed)
    trans = transition_orthogonality_check(M, seed=seed, tol=float(_opt(o, "transition_tol", 1e-6)))
    f = from_descriptor(_opt(o, "func", "cone"), X, seed)
    p = X.sample(1, (seed, 601))[0] if o.get("at") is None else X.check_point(parse_point(o["at"]))
    ind = chart_independence_check(f, p, M, cfg, tol=float(_opt(o, "tol", 0.05)))
    ok = trans.passed and ind.passed
    return ok, {
        "atlas": M.to_json(),
        "function": f.label,
        "at": p.tolist(),
        "transition": trans.to_json(),
        "independence": ind.to_json(),
        "verdict": "pass" if ok else "fail",
    }


_HANDLERS = {
    "estimate": cmd_estimate,
    "check-preserve": cmd_check_preserve,
    "consistency": cmd_consistency,
    "recover": cmd_recover,
    "dilation": cmd_dilation,
    "classify1d": cmd_classify1d,
    "cube-sym": cmd_cube_sym,
    "manifold-check": cmd_manifold_check,
    "chart-check": cmd_chart_check,
}

_EST = ("pairs", "radii", "workers")
_OPTIONS = {
    "estimate": ("kind", "space", "func", "at") + _EST,
    "check-preserve": ("op", "kind", "tol", "corpus_size", "panel", "unpaired") + _EST,
    "consistency": ("blackbox", "space", "tol") + _EST,
    "recover": ("pairs_file",),
    "dilation": ("op", "tol", "pairs"),
    "classify1d": ("samples", "alpha", "tol"),
    "cube-sym": ("n",),
    "manifold-check": ("manifold", "map", "points", "tol"),
    "chart-check": ("manifold", "func", "at", "tol", "transition_tol") + _EST,
}
_REQUIRED = {
    "estimate": ("space", "func"),
    "check-preserve": ("op",),
    "consistency": ("blackbox",),
    "recover": ("pairs_file",),
    "dilation": ("op",),
    "classify1d": ("samples", "alpha"),
    "cube-sym": ("n",),
    "manifold-check": ("manifold", "map"),
    "chart-check": ("manifold",),
}


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute ``config``; returns the exit code and the report."""
    o = {k: v for k, v in config.options.items() if v is not None}
    missing = [k for k in _REQUIRED[config.command] if k not in o]
    if missing:
        raise UsageError(f"{config.command} needs {', '.join('--' + m.replace('_', '-') for m in missing)}")
    if config.command == "recover":
        o["pairs"] = o.pop("pairs_file")
    verdict, result = _HANDLERS[config.command](o, config.seed)
    report = {
        "tool_version": __version__,
        "command": config.command,
        "seed": config.seed,
        "inputs": {k: config.options[k] for k in _OPTIONS[config.command] if config.options.get(k) is not None},
        "result": result,
    }
    return (1 if verdict is False else 0), report


# -- argument parsing -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lipkit", description="Lipschitz constants and the operators that preserve them.")
    ap.add_argument("--version", action="version", version=f"lipkit {__version__}")
    ap.add_argument("--config", help="run config JSON (inline or file) instead of a subcommand")
    sub = ap.add_subparsers(dest="command")

    def common(p, est=False):
        p.add_argument("--seed", type=int, help="RNG seed (default: $LIPKIT_SEED or 0)")
        p.add_argument("--out", help="write the report here instead of stdout")
        if est:
            p.add_argument("--pairs", type=int, help="pairs per stage (default 20000)")
            p.add_argument("--radii", type=int, help="number of radius halvings (default 8)")
            p.add_argument("--workers", type=int, help="worker threads (default 1)")

    p = sub.add_parser("estimate", help="estimate a Lipschitz constant")
    p.add_argument("--kind", choices=("global", "local", "pointwise", "gradient"), default="global")
    p.add_argument("--space", required=True)
    p.add_argument("--func", required=True)
    p.add_argument("--at")
    common(p, True)

    p = sub.add_parser("check-preserve", help="compare L(Tf) with L(f) on a probe corpus")
    p.add_argument("--op", required=True)
    p.add_argument("--kind", choices=("global", "local", "pointwise"), default="global")
    p.add_argument("--tol", type=float)
    p.add_argument("--corpus-size", type=int)
    p.add_argument("--panel")
    p.add_argument("--unpaired", action="store_true", default=None)
    common(p, True)

    p = sub.add_parser("consistency", help="test the weighted-composition signature of an operator")
    p.add_argument("--blackbox", required=True)
    p.add_argument("--space")
    p.add_argument("--tol", type=float)
    common(p, True)

    p = sub.add_parser("recover", help="fit an affine dilation to point pairs")
    p.add_argument("--pairs", dest="pairs_file", required=True)
    common(p)

    p = sub.add_parser("dilation", help="dilation check and violation witness for an operator")
    p.add_argument("--op", required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--pairs", type=int)
    common(p)

    p = sub.add_parser("classify1d", help="classify a 1-D symbol as x -> +-alpha x + c")
    p.add_argument("--samples", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float)
    common(p)

    p = sub.add_parser("cube-sym", help="enumerate symmetries of the unit cube")
    p.add_argument("--n", type=int, required=True)
    common(p)

    p = sub.add_parser("manifold-check", help="local isometry check of a fixture map")
    p.add_argument("--manifold", choices=sorted(_ATLASES), required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--points", type=int)
    p.add_argument("--tol", type=float)
    common(p)

    p = sub.add_parser("chart-check", help="transition orthogonality and chart independence")
    p.add_argument("--manifold", choices=sorted(_ATLASES), required=True)
    p.add_argument("--func")
    p.add_argument("--at")
    p.add_argument("--tol", type=float)
    p.add_argument("--transition-tol", type=float)
    common(p, True)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.config is not None:
        if ns.command is not None:
            raise UsageError("use either --config or a subcommand, not both")
        return RunConfig.from_json(load_json_arg(ns.config))
    if ns.command is None:
        raise UsageError("a subcommand is required")
    opts = {k: getattr(ns, k, None) for k in _OPTIONS[ns.command]}
    seed = ns.seed if ns.seed is not None else default_seed()
    return RunConfig(ns.command, opts, seed, ns.out)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        config = config_from_args(ns)
        code, report = run(config)
    except (UsageError, LipkitError, ValueError, TypeError, KeyError) as err:
        print(f"lipkit: error: {err}", file=sys.stderr)
        return 2
    text = dumps(report) + "\n"
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
