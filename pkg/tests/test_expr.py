import numpy as np
import pytest
from hypothesis import given, strategies as st

from lipkit.errors import ExprError, GradientUnavailable
from lipkit.expr import (
    BinOp,
    Call,
    Const,
    DistTo,
    Neg,
    Var,
    evaluate,
    evaluate_with_grad,
    is_differentiable,
    parse_expr,
    to_text,
)


def test_examples():
    assert parse_expr("x0*x1", 2) == BinOp("*", Var(0), Var(1))
    assert parse_expr("min(x0, 1-x0)", 1) == Call("min", (Var(0), BinOp("-", Const(1.0), Var(0))))
    with pytest.raises(ExprError, match="out of range"):
        parse_expr("x2", 2)


def test_precedence_and_associativity():
    assert parse_expr("1-2-3", 1) == BinOp("-", BinOp("-", Const(1.0), Const(2.0)), Const(3.0))
    assert parse_expr("2^3^2", 1) == BinOp("^", BinOp("^", Const(2.0), Const(3.0)), Const(2.0))
    assert parse_expr("-x0^2", 1) == BinOp("^", Neg(Var(0)), Const(2.0))
    assert parse_expr("1+2*x0", 1) == BinOp("+", Const(1.0), BinOp("*", Const(2.0), Var(0)))
    assert parse_expr("x0**2", 1) == parse_expr("pow(x0, 2)", 1)
    assert parse_expr("dist(0.5, -1)", 2) == DistTo((0.5, -1.0))


@pytest.mark.parametrize(
    "text, offset",
    [
        ("x0 +", 4),
        ("x0 $ 1", 3),
        ("foo(x0)", 0),
        ("(x0", 3),
        ("x0 x0", 3),
        ("min(x0)", 0),
        ("sin(x0, x0)", 0),
        ("dist(x0, 1)", 0),
        ("é + x9", 0),
    ],
)
def test_errors_carry_byte_offsets(text, offset):
    with pytest.raises(ExprError) as info:
        parse_expr(text, 2)
    assert info.value.offset == offset


def test_byte_offset_counts_utf8_bytes():
    with pytest.raises(ExprError) as info:
        parse_expr("1 + é", 1)
    assert info.value.offset == 4
    with pytest.raises(ExprError) as info:
        parse_expr("é", 1)
    assert info.value.offset == 0


def test_empty():
    with pytest.raises(ExprError):
        parse_expr("   ", 1)


def _ast(dim):
    leaves = st.one_of(
        st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Const),
        st.integers(0, dim - 1).map(Var),
    )

    def grow(children):
        return st.one_of(
            children.map(Neg),
            st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
            st.tuples(st.sampled_from(["min", "max"]), children, children).map(lambda t: Call(t[0], t[1:])),
            st.tuples(st.sampled_from(["abs", "sin", "cos"]), children).map(lambda t: Call(t[0], t[1:])),
        )

    return st.recursive(leaves, grow, max_leaves=12)


@given(_ast(3))
def test_round_trip(node):
    assert parse_expr(to_text(node), 3) == node


def test_evaluate_matches_numpy():
    X = np.random.default_rng(0).uniform(0.1, 2, size=(50, 2))
    f = parse_expr("sin(x0)*x1 - abs(x0 - 1) / max(x1, 0.5) + cos(pi*x0)^2", 2)
    want = np.sin(X[:, 0]) * X[:, 1] - np.abs(X[:, 0] - 1) / np.maximum(X[:, 1], 0.5) + np.cos(np.pi * X[:, 0]) ** 2
    np.testing.assert_allclose(evaluate(f, X), want, rtol=1e-14)


def test_gradient_is_forward_mode_exact():
    X = np.random.default_rng(1).uniform(0.5, 2, size=(30, 2))
    f = parse_expr("x0^x1 + sin(x0*x1) / x1", 2)
    v, G = evaluate_with_grad(f, X)
    x, y = X[:, 0], X[:, 1]
    gx = y * x ** (y - 1) + np.cos(x * y)
    gy = x**y * np.log(x) + (x * y * np.cos(x * y) - np.sin(x * y)) / y**2
    np.testing.assert_allclose(G, np.stack([gx, gy], axis=1), rtol=1e-12)
    np.testing.assert_allclose(v, evaluate(f, X), rtol=1e-15)


def test_min_max_dist_are_not_differentiated():
    for text in ("min(x0, 1)", "max(x0, 1)", "dist(0.5)"):
        node = parse_expr(text, 1)
        assert not is_differentiable(node)
        with pytest.raises(GradientUnavailable):
            evaluate_with_grad(node, np.zeros((1, 1)))
    assert is_differentiable(parse_expr("abs(x0)", 1))
