import numpy as np
import pytest
from hypothesis import given, strategies as st

import lipkit as L
from lipkit.errors import DomainError, EstimatorError, LipkitError
from lipkit.wco import as_blackbox, expr_point_map, relative_deviation

I01 = L.interval()
FLIP = L.AffineMap(1.0, [[-1.0]], [1.0])
FAST = L.EstimatorConfig(pairs_per_stage=4000)


def flip_op(sign=-1.0):
    return L.wco(sign, FLIP, I01, I01, "flip")


def test_apply_examples():
    x = L.coordinate(0, I01)
    ys = I01.sample(20, 0)
    np.testing.assert_array_equal(L.identity_operator(I01)(x).values(ys), ys[:, 0])
    np.testing.assert_allclose(flip_op()(x).values(ys), ys[:, 0] - 1.0, atol=1e-15)
    X2 = L.interval(0, 2)
    T = L.wco(0.5, L.AffineMap(2.0, [[1.0]], [0.0]), X2, I01)
    np.testing.assert_allclose(T(L.coordinate(0, X2)).values(ys), ys[:, 0], atol=1e-15)


def test_apply_rejects_symbol_leaving_source():
    T = L.wco(1.0, L.AffineMap(2.0, [[1.0]], [0.0]), I01, I01)
    with pytest.raises(DomainError):
        T.check_symbol()
    with pytest.raises(DomainError):
        T(L.coordinate(0, I01)).values([[0.9]])


@given(a=st.floats(-10, 10, allow_nan=False), sign=st.sampled_from([1.0, -1.0]), seed=st.integers(0, 1000))
def test_apply_is_linear(a, sign, seed):
    T = flip_op(sign)
    corpus = L.probe_corpus(I01, 20, 0)
    f, g = corpus[seed % 20], corpus[(seed + 7) % 20]
    ys = I01.sample(50, seed)
    lhs = T(a * f + g).values(ys)
    np.testing.assert_array_equal(lhs, a * T(f).values(ys) + T(g).values(ys))


def test_apply_is_linear_for_general_weights():
    B = L.box([0, 0], [1, 1])
    T = L.wco(L.from_expr("1 + x0*x1", B), L.AffineMap(1.0, [[0, 1], [1, 0]], [0, 0]), B, B)
    f, g = L.product01(B), L.from_expr("sin(x0) - x1", B)
    ys = B.sample(100, 0)
    np.testing.assert_allclose(T(1.5 * f + g).values(ys), 1.5 * T(f).values(ys) + T(g).values(ys), rtol=1e-14)


def test_preservation_examples():
    rep = L.preservation_check(L.identity_operator(I01))
    assert rep.max_deviation == 0.0 and rep.verdict
    rep = L.preservation_check(flip_op())
    assert rep.verdict and rep.max_deviation <= 1e-9 and rep.tol == 1e-9
    assert len(rep.per_function) == 20
    T = L.wco(2.0, L.AffineMap(1.0, [[1.0]], [0.0]), I01, I01, "double")
    rep = L.preservation_check(T, [L.coordinate(0, I01)])
    assert rep.max_deviation == pytest.approx(1.0)
    assert not rep.verdict and rep.witness["function"] == "x0"
    assert rep.max_deviation == max(e.deviation for e in rep.per_function)


def test_preservation_report_json_fields():
    js = L.preservation_check(flip_op(), kind="global", cfg=FAST).to_json()
    assert list(js) == ["kind", "per_function", "max_deviation", "tol", "verdict", "witness", "paired"]
    assert js["verdict"] == "pass"


@pytest.mark.parametrize("kind", ["local", "pointwise"])
def test_local_and_pointwise_preservation(kind):
    for T in L.interval_canonical(0, 2, 0, 1):
        rep = L.preservation_check(T, kind=kind, cfg=FAST)
        assert rep.verdict, rep.witness
        for e in rep.per_function:
            # base points are matched through the symbol
            assert e.rhs.at == pytest.approx(T.symbol(np.array(e.lhs.at)).tolist())


def test_unpaired_preservation_uses_loose_tolerance():
    rep = L.preservation_check(flip_op(), cfg=FAST, paired=False)
    assert rep.tol == 5e-2 and rep.verdict and not rep.paired


def test_non_dilation_fails_preservation():
    T = L.WCOperator(L.constant(1.0, I01), expr_point_map(["x0^2"], 1), I01, I01, "square")
    rep = L.preservation_check(T, cfg=FAST)
    assert not rep.verdict


def test_passing_operators_have_flat_weights():
    for T in list(L.interval_canonical(1, 3, 5, 9)) + [flip_op(1.0)]:
        rep = L.preservation_check(T, cfg=FAST)
        assert rep.verdict
        assert L.global_lip(T.weight, T.target, FAST).value <= rep.tol
    T = L.wco(L.from_expr("1 + x0", I01), L.AffineMap(1.0, [[1.0]], [0.0]), I01, I01)
    assert not L.preservation_check(T, cfg=FAST).verdict


def test_errors_are_labelled():
    T = flip_op()
    bad = L.from_expr("1/(x0 - x0)", I01)
    with pytest.raises(EstimatorError, match=r"\[1/\(x0 - x0\)\]"):
        L.preservation_check(T, [bad], cfg=FAST)
    with pytest.raises(LipkitError):
        L.preservation_check(T, [], cfg=FAST)


def test_shift_preserver_examples():
    x = L.coordinate(0, I01)
    S = L.shift_preserver([0.0], I01)
    ys = I01.sample(10, 0)
    np.testing.assert_array_equal(S(x).values(ys), ys[:, 0])
    np.testing.assert_allclose(S(x + 1.0).values(ys), ys[:, 0] + 2.0)
    # in plain double precision the added constant costs a few ulps per quotient
    assert L.global_lip(S(x + 1.0), I01).value == pytest.approx(L.global_lip(x, I01).value, rel=1e-10)


def test_shift_preserver_is_exact_in_preservation():
    for x0 in ([0.0], [0.37], [1.0]):
        rep = L.preservation_check(L.shift_preserver(x0, I01))
        assert rep.max_deviation <= 1e-12


def test_consistency_examples():
    assert L.wco_consistency_check(flip_op()).consistent
    X2 = L.interval(0, 2)
    scaled = L.wco(0.5, L.AffineMap(2.0, [[1.0]], [0.0]), X2, I01)
    assert L.wco_consistency_check(scaled).consistent
    assert L.wco_consistency_check(as_blackbox(scaled)).consistent
    res = L.wco_consistency_check(L.shift_preserver([0.0], I01))
    assert not res.consistent and res.applicable
    assert set(res.witness) >= {"function", "point"}


def test_consistency_in_higher_dimensions_and_on_the_sphere():
    B = L.box([0, 0, 0], [1, 1, 1])
    m = L.enumerate_cube_symmetries(3)[17]
    assert L.wco_consistency_check(L.cube_operator(m, -1.0)).consistent
    assert not L.wco_consistency_check(L.shift_preserver([0.5, 0.5, 0.5], B)).consistent
    S = L.sphere()
    R = L.affine.random_orthogonal(3, np.random.default_rng(3))
    rot = L.WCOperator(L.constant(1.0, S), L.PointMap(lambda Y: Y @ R.T, "rot"), S, S)
    assert L.wco_consistency_check(rot).consistent
    assert not L.wco_consistency_check(L.shift_preserver([0.0, 0.0, 1.0], S)).consistent


def test_consistency_detects_nonlinearity_and_vanishing_weight():
    square = L.BlackBoxOperator(
        lambda f: L.ScalarFunc(lambda X: f.values(X) ** 2, I01, f"({f.label})^2"), "square", I01, I01
    )
    res = L.wco_consistency_check(square)
    assert not res.consistent and "linear" in res.note
    zero = L.wco(0.0, FLIP, I01, I01)
    res = L.wco_consistency_check(zero)
    assert not res.applicable and not res.consistent


def test_dilation_violation_witness():
    assert L.dilation_violation_witness(flip_op()) is None
    T = L.WCOperator(L.constant(1.0, I01), expr_point_map(["x0^2"], 1), I01, I01, "square")
    w = L.dilation_violation_witness(T)
    assert w is not None and w.quotient > 1.5 and min(w.p[0], w.q[0]) > 0.7
    # the witness function itself is 1-Lipschitz
    assert L.global_lip(w.func, I01).value <= 1 + 1e-9
    B = L.euclidean(2)
    R = L.affine.rotation2d(0.3)
    mismatch = L.wco(1.0, L.AffineMap(1.1, R, [0.0, 0.0]), L.euclidean(2, 1.1), B)
    w = L.dilation_violation_witness(mismatch)
    assert w is not None and w.ratio == pytest.approx(1.1)


def test_relative_deviation():
    assert relative_deviation(2.0, 1.0) == 1.0
    assert relative_deviation(0.5, 0.0) == 0.5
