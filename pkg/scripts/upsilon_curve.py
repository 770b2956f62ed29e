"""Sample the extremal curve of a system over a log-spaced range of ray slopes.

    python3 scripts/upsilon_curve.py --system E --N 2 --out results/upsilon
"""
import argparse
from pathlib import Path

import numpy as np

from extremal import SystemSpec, default_grading, make_mesh, trace_upsilon
from extremal.records import UPSILON_COLUMNS, upsilon_rows, write_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--system", default="E", choices=["E", "G", "H"])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--N", type=float, default=2.0)
    ap.add_argument("--M", type=int, default=128)
    ap.add_argument("--n", type=int, default=17)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/upsilon")
    args = ap.parse_args()
    spec = (SystemSpec("E") if args.system == "E"
            else SystemSpec.power(args.system, args.p, args.q))
    mesh = make_mesh(args.M, args.N, default_grading(args.N))
    sigmas = np.logspace(-1, 1, args.n)
    curve = trace_upsilon(spec, mesh, sigmas, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_csv(out / f"upsilon_{args.system}_N{args.N:g}.csv", UPSILON_COLUMNS,
                     upsilon_rows(curve))
    for s in curve.samples:
        print(f"sigma={s.sigma:8.4f}  lambda*={s.lambda_star:10.6f}  gamma*={s.gamma_star:10.6f}"
              + (f"  [{s.error}]" if s.error else ""))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
