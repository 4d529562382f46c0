"""Screening perturbations H0 + J b M3 of the classical body.

Each linear candidate b yields a quasi-homogeneous system.  For each
balance branch the characteristic polynomial of the Kowalevski matrix must
have integer coefficients independent of J.  A quadratic b breaks
quasi-homogeneity and is rejected immediately.
"""

import numpy as np
from _common import banner

from hesslab import kowalevski as K

for b in ("z1 + 0.5*z3", "z1 + 2*z3", "-3*z1 + i*z2", "z3", "z1**2"):
    rep = K.theorem5_filter(b)
    banner(f"b = {b}: {'pass' if rep['pass'] else 'fail'}")
    for note in rep["notes"]:
        print(f"  note: {note}")
    for br, e in rep["branches"].items():
        if not e.get("present"):
            continue
        coeffs = " ".join(f"{c:g}" for c in np.real_if_close(np.round(e["charpoly"], 8), tol=1e6))
        print(f"  branch {br}: X = {e['X']:.4g}, Y = {e['Y']:.4g}")
        print(f"    charpoly [{coeffs}], root at -1: {e['checks']['root_at_minus_one']}")
