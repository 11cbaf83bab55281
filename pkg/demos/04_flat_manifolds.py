"""
Flat manifolds and local isometries
===================================

The circle R/Z and the torus R^2/Z^2 carry atlases of translated charts
whose transition maps are rigid motions. Pointwise constants are computed
through a chart and do not depend on which chart is used. A map between
flat manifolds preserving these constants must be a local isometry.
"""

# %%
import numpy as np

import lipkit as L

T = L.torus_atlas()
C = L.circle_atlas()

# %%
# Transition Jacobians are orthogonal, up to finite-difference error.
print("torus transitions:", L.transition_orthogonality_check(T).to_json())
print("sheared fixture:  ", L.transition_orthogonality_check(L.sheared_atlas()).max_defect)

# %%
# cos(2 pi x) on the circle has pointwise constant 2 pi at x = 1/4.
f = L.from_expr("cos(2*pi*x0)", C.space)
est = L.pt_lip_on_manifold(f, [0.25], C)
print(f"pt constant at 1/4: {est.value:.4f} (2 pi = {2 * np.pi:.4f})")
print("chart independence gap:", L.chart_independence_check(f, [0.25], C).gap)

# %%
# Fixture maps on the torus.
for name in ("translate", "rotate90", "reflect", "shear"):
    rep = L.local_isometry_check(L.fixture_map(name, 2), T, T)
    print(f"{name:9s} deviation {rep.max_deviation:.2e}  passed {rep.passed}")

# %%
# The sphere is handled as a geodesic space: rotating a cone function
# leaves its pointwise constants where they were.
S = L.sphere()
R = L.affine.random_orthogonal(3, np.random.default_rng(1), reflection=False)
cone = L.cone_function([0.0, 0.0, 1.0], np.pi, S)
rotated = L.compose(cone, lambda Y: Y @ R.T, S)
p = S.sample(1, 3)[0]
a = L.pointwise_lip(rotated, p, S).value
b = L.pointwise_lip(cone, R @ p, S).value
print(f"sphere: {a:.4f} vs {b:.4f}")
