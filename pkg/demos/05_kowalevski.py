"""Balances and Kowalevski exponents of the Euler-Poisson equations.

Finds Laurent balances numerically, reads off the exponents and checks that
they are rational and that Casimir gradients sit where they should.
"""

import numpy as np
from _common import banner

from hesslab import kowalevski as K


def show(sol):
    ex = np.real_if_close(np.round(sol.exponents, 8), tol=1e6)
    return " ".join(f"{e:g}" for e in sorted(ex, key=lambda z: (np.real(z), np.imag(z))))


ex = K.example("3d", J13=1.0)
system = K.euler_poisson_system(ex.spec)
banner("three-dimensional body, J13 = 1")
print(f"  quasi-homogeneous: {K.check_qh(system).passed}")
for sol in K.solve_balances(system, ex.mask):
    print(f"  balance residual {sol.residual:.1e}, exponents {show(sol)}")

for name in ("ex2", "ex3", "ex4", "ex1"):
    ex = K.example(name)
    sol = K.refine_balance(K.euler_poisson_system(ex.spec), ex.guess, ex.mask)
    ok, gap = K.match_multiset(sol.exponents, ex.expected)
    banner(name)
    print(f"  exponents {show(sol)}")
    print(f"  match reference: {ok} ({gap:.1e})")
    if name == "ex1":
        ara = K.ara_check(sol, sys_kind="so4", p=ex.p)
        print(f"  eigenvectors tangent/transversal to Casimir level: "
              f"{ara['n_tangent']}/{ara['n_transversal']}")
