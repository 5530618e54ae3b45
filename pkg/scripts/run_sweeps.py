"""Run the frequency sweep for every preset and write CSVs plus trend reports.

    python scripts/run_sweeps.py [--out results] [--n 40000] [--seed 0] [--workers 1]
"""
import argparse
import os

from wbgbench import DeviceKind, preset, run_sweep, verify_trends


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--n", type=int, default=40_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    ok = True
    for kind in DeviceKind:
        table = run_sweep(preset(kind), n=args.n, seed=args.seed, workers=args.workers)
        csv_path = os.path.join(args.out, f"sweep_{kind.value}.csv")
        table.save(csv_path)
        report = verify_trends(table)
        with open(os.path.join(args.out, f"sweep_{kind.value}_trends.txt"), "w") as fh:
            fh.write(report.to_text())
        print(f"{kind.value}: {'PASS' if report.passed else 'FAIL'} -> {csv_path}")
        for f, rr, cr, dv in zip(table.f_s, table.rdson_ratio, table.ciss_ratio, table.column("delta_vth")):
            print(f"  {f:10.0f} Hz  rdson x{rr:.4f}  ciss x{cr:.4f}  dVth {dv:+.4f} V")
        ok &= report.passed
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
