"""Closed-form verification battery.

Every structural identity of the continuous operators is checked in an
exact piecewise-power algebra: integration-by-parts formulas (including
the curvature-jump bracket at an interior strong degeneracy and the
one-sided variants when the degeneracy sits on the boundary), the nested
reciprocal integrals behind the strong-case derivative estimate, the best
linear fit with its two guaranteed sign changes, and the pointwise
square-root bounds.
"""
import math

from wentzell4 import (
    best_linear_fit,
    green_battery,
    green_residual,
    hardy_bound,
    pointwise_sqrt_bound,
    power_profile,
)

print("integration-by-parts battery:")
print(f"{'case':30s} {'scale':>10s} {'residual':>10s} {'jump':>8s}")
for name, form, coeff, u, v in green_battery():
    rep = green_residual(form, u, v, coeff)
    print(f"{name:30s} {rep.scale:10.3g} {rep.residual:10.2e} {rep.jump:8.3g}")

name, form, coeff, u, v = next(
    c for c in green_battery() if c[0] == "strong_nondiv_jump_K1"
)
rep = green_residual(form, u, v, coeff)
no_jump = abs(rep.lhs - (rep.boundary_first - rep.boundary_second + rep.rhs))
print(f"\ndropping the jump bracket leaves a residual of {no_jump:.3g}")
print(f"(the jump term itself is {rep.jump:.3g})")

print("\nnested reciprocal integrals for a = t^K on (0, 1), y0 = 0.4:")
for K in (1.0, 1.25, 1.5, 1.75):
    left, right = hardy_bound(power_profile(0.0, K), 0.4)
    print(f"  K = {K:4}: left = {left:.12f} = y0^(2-K)/(2-K), right = {right:.12f}")

print("\nbest linear fit of x^2 over (0, 1):")
fit = best_linear_fit([0.0, 0.0, 1.0])
print(f"  p1(x) = {fit.slope} x + {fit.intercept}   (exactly x - 1/6)")
print(f"  residual sign changes at {fit.zeros}")
print(f"  closed-form zeros      ({(1 - math.sqrt(1/3)) / 2}, {(1 + math.sqrt(1/3)) / 2})")

print("\npointwise square-root bounds |a u^(k)| <= ||(a u^(k))'|| sqrt(|x - x0|):")
battery = [
    ("u = 1,      k = 0, K = 1  ", [1.0], power_profile(0.5, 1.0), 0),
    ("u = x,      k = 1, K = 1  ", [0.0, 1.0], power_profile(0.5, 1.0), 1),
    ("u = 1+x+x^2, k = 2, K = 1 ", [1.0, 1.0, 1.0], power_profile(0.5, 1.0), 2),
    ("u = x^2,    k = 2, K = 1.5", [0.0, 0.0, 1.0], power_profile(0.5, 1.5), 2),
]
for label, coeffs, coeff, k in battery:
    ratio = pointwise_sqrt_bound(coeffs, coeff, k)
    print(f"  {label}: max ratio {ratio:.6f} <= 1")
