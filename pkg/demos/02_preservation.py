"""
Operators that preserve Lipschitz constants
===========================================

A weighted composition operator sends f to h * (f o phi). When h is the
constant +-1/alpha and phi stretches every distance by exactly alpha, the
Lipschitz constant of Tf equals that of f. Preservation is checked on a
probe corpus with paired sampling, so exact operators give identical
quotient sets.
"""

# %%
import lipkit as L
from lipkit.wco import expr_point_map

I = L.interval()

# %%
# Tf(x) = -f(1 - x) on [0, 1].
up, down = L.interval_canonical(0, 1, 0, 1, sign=-1)
rep = L.preservation_check(down)
print(f"{down.label}: max deviation {rep.max_deviation:.2e}, verdict {rep.verdict}")

# %%
# Doubling the weight doubles every constant.
double = L.wco(2.0, L.AffineMap(1.0, [[1.0]], [0.0]), I, I, "2f")
rep = L.preservation_check(double)
print(f"2f: max deviation {rep.max_deviation:.3f}, witness {rep.witness}")

# %%
# Symmetries of the square: eight signed permutations with a shift.
for m in L.enumerate_cube_symmetries(2):
    r = L.preservation_check(L.cube_operator(m), cfg=L.EstimatorConfig(pairs_per_stage=5000))
    print(f"A={m.A.astype(int).tolist()} b={m.b.astype(int).tolist()}  deviation {r.max_deviation:.1e}")

# %%
# The shift f -> f + f(x0) also preserves every global constant, but it
# is not a weighted composition operator. The signature test finds a
# probe function that no single preimage point can explain.
shift = L.shift_preserver([0.0], I)
print("shift preserves:", L.preservation_check(shift).verdict)
res = L.wco_consistency_check(shift)
print("shift is a WCO: ", res.consistent, res.witness, res.note)

# %%
# When phi is not a dilation, a witness function certifies the failure:
# phi(x) = x^2 stretches pairs near 1 by almost 2.
square = L.WCOperator(L.constant(1.0, I), expr_point_map(["x0^2"], 1), I, I, "x^2")
w = L.dilation_violation_witness(square)
print(f"witness pair ({w.p[0]:.4f}, {w.q[0]:.4f}) gives quotient {w.quotient:.4f} > 1")
