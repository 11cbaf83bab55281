"""
Recovering the affine structure of a dilation
=============================================

On Euclidean domains a dilation is affine: phi(y) = alpha * A y + b with A
orthogonal. Given input/output pairs the scale comes from distance
ratios, the orthogonal part from a Procrustes fit, and the shift from the
centroids. In one dimension the only options are x -> +-alpha x + c.
"""

# %%
import numpy as np

import lipkit as L
from lipkit.affine import random_orthogonal

rng = np.random.default_rng(7)

# %%
# A reflection-including map in R^3; the fit must allow det A = -1.
A = random_orthogonal(3, rng, reflection=True)
phi = L.AffineMap(0.5, A, [1.0, -2.0, 0.25])
P = rng.uniform(-1, 1, size=(200, 3))
rec = L.recover_affine((P, phi(P)))
print(f"alpha {rec.map.alpha:.12f}, det A {np.linalg.det(rec.map.A):+.6f}")
print(f"orthogonality defect {rec.orth_defect:.1e}, fit residual {rec.fit_residual:.1e}")

# %%
# The dilation check measures the scale without assuming affinity.
R2 = L.euclidean(2)
phi2 = L.AffineMap(2.0, L.affine.rotation2d(np.pi / 6), [0.0, 1.0])
print(L.dilation_check(phi2, R2, L.euclidean(2, 3.0)).to_json())

# %%
# One-dimensional classification.
x = np.linspace(0, 1, 25)
print(L.classify_1d(np.c_[x, 1 - x], alpha=1.0).to_json())
print(L.classify_1d(np.c_[x, np.maximum(x, 1 - x)], alpha=1.0).reason)
