"""Write the four Bell-surface grids as CSV and print their maxima.

    python scripts/reproduce_figures.py --outdir figures
"""
import argparse
import pathlib

from cvepr.chsh_lab import FIGURES, figure_surface


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--outdir", default="figures")
    p.add_argument("--figures", type=int, nargs="+", default=sorted(FIGURES))
    args = p.parse_args()

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for k in args.figures:
        surf = figure_surface(k)
        path = out / f"figure{k}_{surf.branch}.csv"
        with open(path, "w", newline="") as fh:
            surf.to_csv(fh)
        i, j = surf.argmax()
        print(f"figure {k} ({surf.branch}): max B = {surf.max():.6f} at s = {surf.s[i]:.6f}, J = {surf.J[j]:.3e} -> {path}")


if __name__ == "__main__":
    main()
