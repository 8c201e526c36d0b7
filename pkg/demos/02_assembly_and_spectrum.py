"""Assembly of the weighted Galerkin systems and their spectra.

Both operator forms discretize into a symmetric positive-definite mass
matrix M (the measure inner product with boundary point masses) and a
symmetric positive-semidefinite energy matrix K.  With neutral boundary
terms the kernel of K is the affine functions for the divergence form,
and the span of x - x0 for a constrained strong non-divergence form.
"""
import io

import numpy as np

from wentzell4 import (
    OperatorForm,
    WentzellParams,
    assemble,
    build_mesh,
    dense_decompose,
    export_matrix,
    hermite_basis,
    interpolate_poly,
    power_profile,
)

mesh = build_mesh(16, 0.5)
dofmap = hermite_basis(mesh)

for form, K in ((OperatorForm.DIVERGENCE, 0.5), (OperatorForm.NON_DIVERGENCE, 1.0)):
    coeff = power_profile(0.5, K)
    system = assemble(form, mesh, dofmap, coeff, WentzellParams(1.0, 1.0))
    print(f"\n{form.value}, a = |x - 1/2|^{K}")
    print(f"  dofs: {system.dofmap.total_dofs}, constrained: {system.constrained_dofs}")
    print(f"  max |M - M^T| = {np.max(np.abs(system.M - system.M.T))}")
    print(f"  max |K - K^T| = {np.max(np.abs(system.K - system.K.T))}")
    decomp = dense_decompose(system)
    w = decomp.eigenvalues
    print(f"  pencil eigenvalues: min {w[0]:.3e}, max {w[-1]:.3e}")
    print(f"  kernel dimension (neutral boundary): {decomp.near_zero_count()}")
    print(f"  lowest five: {np.array2string(w[:5], precision=4)}")

# the energy matrix annihilates the kernel candidates exactly
system = assemble(
    OperatorForm.DIVERGENCE, mesh, dofmap, power_profile(0.5, 0.5), WentzellParams(1, 1)
)
for coeffs, label in (([1.0], "1"), ([0.0, 1.0], "x")):
    u = interpolate_poly(system.dofmap, coeffs)
    print(f"\n||K @ interp({label})|| = {np.linalg.norm(system.K @ u):.3e}")

# matrix export: sorted lower-triangle triplets, 17 significant digits
buf = io.StringIO()
export_matrix(system.M, buf)
print("\nfirst lines of the mass-matrix export:")
print("\n".join(buf.getvalue().splitlines()[:6]))
