"""Strong-scattering coefficient of variation of the smoothed Wigner transform.

Writes ``fig2.csv`` over normalized smoothing widths ``r_s / rho_z`` and
``xi_s rho_z`` and, with ``--png``, a contour plot marking the Husimi
hyperbola ``2 xi_s r_s = 1`` where the CV equals one.

    python scripts/fig2_cv_map.py --out results --png
"""
import argparse
import csv
from pathlib import Path

from paraxial_moments.wigner_stats import fig2_axes, fig2_contours


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--out", default="results")
    p.add_argument("--rs-max", type=float, default=2.0)
    p.add_argument("--xis-max", type=float, default=3.0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--png", action="store_true", help="also plot (needs matplotlib)")
    args = p.parse_args()

    rs, xs = fig2_axes(args.rs_max, args.xis_max, args.n)
    cv = fig2_contours(rs, xs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fig2.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r_s_bar", "xi_s_bar", "cv"])
        w.writerows((float(a), float(b), float(cv[i, j]))
                    for i, a in enumerate(rs) for j, b in enumerate(xs))
    print(f"wrote {out / 'fig2.csv'} ({cv.size} rows)")

    if args.png:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        cs = ax.contour(xs, rs, cv, levels=[0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
        ax.clabel(cs, fontsize=8)
        hyper = xs[xs >= 1 / (2 * args.rs_max)]
        ax.plot(hyper, 1 / (2 * hyper), "k--", lw=0.8)
        ax.set_xlabel(r"$\xi_s \rho_z$")
        ax.set_ylabel(r"$r_s / \rho_z$")
        ax.set_ylim(0, args.rs_max)
        fig.tight_layout()
        fig.savefig(out / "fig2.png", dpi=150)
        print(f"wrote {out / 'fig2.png'}")


if __name__ == "__main__":
    main()
