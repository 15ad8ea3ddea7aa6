"""Compare the closed-form D of the uniform Rice-Mele chain with the exact product value.

Prints, for each N, the relative error of D at a few fixed lambda and the ratio of
log D (closed form over exact) at lambda* where C = 1/e.
"""

import math

from adiabatic_overlaps.bounds import rm_closed_form
from adiabatic_overlaps.dynamics import evolve_factorized
from adiabatic_overlaps.errors import UndefinedComplementError
from adiabatic_overlaps.models import RiceMeleParams
from adiabatic_overlaps.overlaps import factorized_overlaps

LAMBDAS = (0.05, 0.1, 0.3, 1.0)


def main() -> None:
    print("N      " + "  ".join(f"relerr(lam={x})" for x in LAMBDAS) + "  logD ratio at lambda*")
    for n in (10, 50, 200, 1000):
        p = RiceMeleParams(n_cells=n)
        lam_star = p.goc_exponent ** -0.5
        grid = sorted({0.0, lam_star, *LAMBDAS})
        recs = {r.lam: r for r in factorized_overlaps(evolve_factorized(p, grid))}
        cells = []
        for lam in LAMBDAS:
            r = recs[lam]
            try:
                _, _, d = rm_closed_form(r.C, r.theta, n)
                cells.append(f"{abs(d - r.D) / r.D:>14.3%}")
            except UndefinedComplementError:
                cells.append(f"{'undefined':>14}")
        r = recs[lam_star]
        _, _, d = rm_closed_form(r.C, r.theta, n)
        print(f"{n:<6} " + "  ".join(cells) + f"  {math.log(d) / r.log_D:>10.4f}")


if __name__ == "__main__":
    main()
