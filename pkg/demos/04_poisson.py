"""Poisson structures, the bihamiltonian property and the restrictive test.

Checks Jacobi and compatibility at random points, then asks whether the
perturbation relations close up in dimensions 3, 4 and 5.  The last one
does not, and the script says so.
"""

from _common import banner, load

from hesslab import poisson as P

S4, B = P.so_standard(4), P.bitop_structure(1.3, 0.4)
pts = P.random_points(S4.dim, 100)
banner("so(4) x so(4) with the bitop structure")
print(f"  Jacobi defect   {max(P.jacobi_tensor_defect(B, x) for x in pts):.1e}")
print(f"  Schouten defect {max(P.schouten_defect(S4, B, x) for x in pts):.1e}")
print(f"  pencil at 2.5   {max(P.jacobi_tensor_defect(P.pencil(S4, B, 2.5), x) for x in pts):.1e}")

bitop = load("bitop")
err = P.bihamiltonian_check(S4, P.hamiltonian_field(bitop), B, P.hamiltonian_field(bitop, "H_second"), pts)
print(f"  bihamiltonian mismatch {err:.1e}")

banner("restrictive integrability")
for name in ("classical", "ha4", "ha5"):
    spec = load(name)
    S = P.standard_structure(spec)
    H0, b, f = P.relation_fields(spec)
    r = P.restrictive_check(S, H0, b, f, P.random_points(S.dim, 100), noncommutative=True)
    print(f"  {name:>9}: A1 {r['A1']:.1e}  A2 {r['A2']:.1e}  c-symmetry {r['c_symmetry']:.1e}")
