"""Beam-center scintillation index against propagation distance.

Writes ``fig1.csv`` and, with ``--png``, a plot of one curve per ratio
``Z_c / Z_sca``.

    python scripts/fig1_scintillation.py --out results --png
"""
import argparse
import csv
from pathlib import Path

from paraxial_moments.covariance import CovarianceModel
from paraxial_moments.scintillation import fig1_curves


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--out", default="results")
    p.add_argument("--ztilde-max", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--ratios", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    p.add_argument("--profile", help="radius,value CSV for a tabulated covariance profile")
    p.add_argument("--png", action="store_true", help="also plot (needs matplotlib)")
    args = p.parse_args()

    c_tilde = CovarianceModel.from_csv(args.profile) if args.profile else None
    rows = fig1_curves(args.ztilde_max, args.steps, args.ratios, c_tilde)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fig1.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z_over_zsca", "zc_ratio", "S"])
        w.writerows(rows)
    print(f"wrote {out / 'fig1.csv'} ({len(rows)} rows)")

    if args.png:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        for ratio in args.ratios:
            pts = [(z, s) for z, r, s in rows if r == ratio]
            ax.plot(*zip(*pts), label=f"$Z_c/Z_{{sca}}$ = {ratio:g}")
        ax.set_xlabel("$z / Z_{sca}$")
        ax.set_ylabel("scintillation index")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "fig1.png", dpi=150)
        print(f"wrote {out / 'fig1.png'}")


if __name__ == "__main__":
    main()
