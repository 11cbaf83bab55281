import numpy as np
import pytest

import lipkit as L
from lipkit.errors import LipkitError

CFG = L.EstimatorConfig(pairs_per_stage=4000)
TWO_PI = 2 * np.pi


def test_chart_examples():
    T = L.torus_atlas()
    ch = L.chart_at(T, [0.5, 0.5])
    np.testing.assert_array_equal(ch.forward(np.zeros((1, 2)))[0], [0.5, 0.5])
    C = L.circle_atlas()
    assert L.chart_at(C, [0.9]).forward([[0.2]])[0, 0] == pytest.approx(0.1)
    assert ch.radius == 0.4 < 0.5


@pytest.mark.parametrize("atlas", [L.circle_atlas(), L.torus_atlas(), L.sheared_atlas()])
def test_chart_inverse_round_trip(atlas):
    for p in atlas.space.sample(10, 1):
        ch = atlas.chart_at(p)
        U = ch.domain.sample(200, 2)
        np.testing.assert_allclose(ch.inverse(ch.forward(U)), U, atol=1e-12)
        assert np.all(ch.contains_image(ch.forward(U)))


def test_transition_orthogonality():
    assert L.transition_orthogonality_check(L.torus_atlas()).max_defect <= 1e-6
    assert L.transition_orthogonality_check(L.circle_atlas()).passed
    rep = L.transition_orthogonality_check(L.sheared_atlas(0.2))
    assert not rep.passed and rep.max_defect == pytest.approx(0.2, abs=0.05)


def test_pointwise_on_circle():
    C = L.circle_atlas()
    f = L.from_expr("cos(2*pi*x0)", C.space)
    assert L.pt_lip_on_manifold(f, [0.0], C).value <= 0.05
    assert L.pt_lip_on_manifold(f, [0.25], C).value == pytest.approx(TWO_PI, rel=0.05)
    assert L.pt_lip_on_manifold(L.constant(1.0, C.space), [0.3], C, CFG).value == 0.0


def test_chart_independence_examples():
    C = L.circle_atlas()
    f = L.from_expr("cos(2*pi*x0)", C.space)
    assert L.chart_independence_check(f, [0.25], C).passed
    assert L.chart_independence_check(L.constant(2.0, C.space), [0.25], C, CFG).passed
    T = L.torus_atlas()
    g = L.from_expr("cos(2*pi*x0)*cos(2*pi*x1)", T.space)
    assert L.chart_independence_check(g, [0.25, 0.25], T).passed
    assert L.chart_independence_check(g, [0.1, 0.35], T).passed


def test_chart_estimate_agrees_with_quotient_metric():
    T = L.torus_atlas()
    X = T.space
    for f in (L.from_expr("sin(2*pi*x0) + cos(2*pi*x1)", X), L.cone_function([0.2, 0.9], 1.0, X)):
        for p in X.sample(5, 3):
            a = L.pt_lip_on_manifold(f, p, T, CFG).value
            b = L.pointwise_lip(f, p, X, CFG).value
            assert a == pytest.approx(b, rel=0.05)


@pytest.mark.parametrize("name", ["translate", "rotate90", "reflect"])
def test_torus_isometries_pass(name):
    T = L.torus_atlas()
    rep = L.local_isometry_check(L.fixture_map(name, 2), T, T)
    assert rep.passed and rep.max_deviation <= 1e-9


@pytest.mark.parametrize("name", ["translate", "reflect"])
def test_circle_isometries_pass(name):
    C = L.circle_atlas()
    assert L.local_isometry_check(L.fixture_map(name, 1), C, C).passed


def test_shear_fails_for_every_seed():
    T = L.torus_atlas()
    for seed in range(4):
        rep = L.local_isometry_check(L.fixture_map("shear", 2), T, T, seed=seed)
        assert not rep.passed and rep.max_deviation >= 0.1
        ok = L.local_isometry_check(L.fixture_map("rotate90", 2), T, T, seed=seed)
        assert ok.passed


@pytest.mark.parametrize("name", ["translate", "rotate90", "reflect"])
def test_composition_closure(name):
    T = L.torus_atlas()
    X = T.space
    sigma = L.fixture_map(name, 2)
    for f in (L.from_expr("sin(2*pi*x0)*cos(2*pi*x1)", X), L.cone_function([0.3, 0.6], 1.0, X)):
        fs = L.compose(f, sigma, X)
        for p in X.sample(4, 8):
            a = L.pt_lip_on_manifold(fs, p, T, CFG).value
            b = L.pt_lip_on_manifold(f, sigma(p), T, CFG).value
            assert np.isfinite(a)
            assert a == pytest.approx(b, rel=0.05, abs=1e-3)


def test_errors():
    with pytest.raises(LipkitError):
        L.fixture_map("rotate90", 1)
    with pytest.raises(LipkitError):
        L.fixture_map("twist", 2)
    with pytest.raises(LipkitError):
        L.Atlas("sphere_geodesic", 2)
    with pytest.raises(LipkitError):
        L.local_isometry_check(L.fixture_map("translate", 1), L.circle_atlas(), L.torus_atlas())
    assert L.torus_atlas().to_json()["chart_radius"] == 0.4
