"""Refined Bell maxima as the regulator approaches its singular values.

For each branch, maximises over J at s = s0 + eps for a ladder of eps and
prints the maximum, the maximising J and the gap to the limiting value.
"""
import argparse
import math

from cvepr.chsh_lab import b3_asymptotic_max, maximize_bell

SQRT2 = math.sqrt(2)

# (branch, singular s, J upper bound, limiting value)
CASES = [
    ("bipartite", 1.0, 1.0, None),
    ("real_pair", 1.0, 1.0, 1 + 2 * math.sqrt(2 / 3) - (2 / 3) ** 1.5),
    ("imaginary", SQRT2, 1.0, b3_asymptotic_max(9)),
]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
    p.add_argument("--real-sweep", action="store_true", help="also maximise the real branch over s in (1, 1.5]")
    args = p.parse_args()

    print(f"{'branch':<10} {'eps':>8} {'B max':>12} {'J*':>12} {'limit - B':>12}")
    for branch, s0, jmax, limit in CASES:
        for eps in args.eps:
            s = s0 + eps
            res = maximize_bell(branch, [(s, s), (0.0, jmax)])
            gap = f"{limit - res.max:12.3e}" if limit is not None else f"{'':>12}"
            print(f"{branch:<10} {eps:8.0e} {res.max:12.8f} {res.argmax[1]:12.4e} {gap}")

    if args.real_sweep:
        # the real branch peaks inside the s range, not at s -> 1+
        res = maximize_bell("real_pair", [(1.0 + 1e-4, 1.5), (0.0, 1.0)])
        print(f"real_pair over s in (1, 1.5]: B = {res.max:.8f} at s = {res.argmax[0]:.6f}, J = {res.argmax[1]:.4e}")


if __name__ == "__main__":
    main()
