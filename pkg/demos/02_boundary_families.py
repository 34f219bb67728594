"""The eight boundary-condition families of the plate system.

Each family is a choice of essential traces for the rotation field and the
displacement.  The shifted pencil moves the kernel to the eigenvalue 1, so
kernel dimensions can be read off as unit-eigenvalue cluster sizes:

    free                 3   (two rigid rotations-of-the-plane + constant lift)
    hard/soft rigid      1   (constant lift only)
    weak Neumann         1
    clamped, supported   0

The trial-space nesting hard clamped < soft clamped < free also shows up as
eigenvalue monotonicity.
"""

import numpy as np

from rmplates import BcFamily, MaterialParams, assemble_rm_pencil, build_rect_mesh, kernel_count
from rmplates.eigensolve import EigOptions, solve_gep_smallest

params = MaterialParams(E=1.0, sigma=0.3, k=5.0 / 6.0, t=0.1)
mesh = build_rect_mesh(1.0, 1.0, 12, 12)

print(f"{'family':26s} {'kernel':>6s}   first four eigenvalues (shifted pencil)")
for bc in BcFamily:
    pencil = assemble_rm_pencil(mesh, params, bc)
    res = solve_gep_smallest(pencil.A, pencil.B, EigOptions(k=4))
    lam = "  ".join(f"{v:10.4f}" for v in res.eigenvalues)
    print(f"{bc.value:26s} {kernel_count(pencil):6d}   {lam}")

print("\nnesting check (eigenvalues can only drop as the space grows):")
eigs = {}
for bc in (BcFamily.HARD_CLAMPED, BcFamily.SOFT_CLAMPED, BcFamily.FREE):
    pencil = assemble_rm_pencil(mesh, params, bc)
    eigs[bc] = solve_gep_smallest(pencil.A, pencil.B, EigOptions(k=4)).eigenvalues
hc, sc, fr = eigs[BcFamily.HARD_CLAMPED], eigs[BcFamily.SOFT_CLAMPED], eigs[BcFamily.FREE]
print("hard clamped >= soft clamped:", bool(np.all(hc >= sc - 1e-10)))
print("soft clamped >= free        :", bool(np.all(sc >= fr - 1e-10)))
