"""
Estimating Lipschitz constants
==============================

Three notions of "how steep" a function is: the global constant over all
pairs, the local constant on shrinking balls, and the pointwise constant
measured against a fixed base point. Every estimate is a sampled supremum,
so it is a lower bound on the true value.
"""

# %%
import numpy as np

import lipkit as L

square = L.unit_cube(2)
f = L.product01(square)  # f(x, y) = x * y

# %%
# The global constant of x*y on the unit square is sqrt(2), attained only
# by short pairs near (1, 1); the sampled value approaches it from below.
est = L.global_lip(f, square)
print(f"global  L(xy)     = {est.value:.6f}   (sqrt 2 = {np.sqrt(2):.6f})")

# %%
# Locally the constant is the gradient norm. The trend shows the ball
# supremum settling as the radius halves.
p = [0.3, 0.4]
loc = L.local_lip(f, p, square)
print(f"local   L_p(xy)   = {loc.value:.6f}   (|grad| = {L.local_lip_via_gradient(f, p):.6f})")
for r, v in zip(loc.radii, loc.trend):
    print(f"    radius {r:.5f}: {v:.6f}")

# %%
# |x - 1/2|^{3/2} is flat at 1/2: the quotient against the base point is
# |x - 1/2|^{1/2}, so the estimate shrinks with the radius.
I = L.interval()
g = L.from_expr("abs(x0 - 0.5)^1.5", I)
pt = L.pointwise_lip(g, [0.5], I)
print(f"pointwise at 1/2  = {pt.value:.4f}  (shrinks like sqrt(radius))")

# %%
# The tent map is not injective, yet its local constant is 1 everywhere.
t = L.tent(I)
vals = [L.local_lip(t, q, I, L.EstimatorConfig(pairs_per_stage=5000)).value for q in I.sample(5, 1)]
print("tent local constants:", np.round(vals, 4))

# %%
# Estimates serialize to JSON with a fixed field order.
print(est.to_json())
