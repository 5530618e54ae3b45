"""Coarse calibration of the preset trap constants.

For each device a small grid over the de-trapping time constant and the
sensitivities is scored against the centres of the trend bands using the
simulator's own effective parameters (no acquisition noise). The best
candidates are printed, then the committed presets are confirmed end to end
through an acquired sweep and the trend check.

    python scripts/calibrate_presets.py [--n 40000]
"""
import argparse
import itertools
from dataclasses import replace

import numpy as np

from wbgbench import DeviceKind, effective_params, preset, run_sweep, verify_trends

# band centres the calibration aims at
TARGETS = {
    DeviceKind.GAN_CASCODE: {"ciss": 2.0, "rdson": 1.275, "dvth": 0.0},
    DeviceKind.GAN_EMODE: {"ciss": 2.0, "rdson": 1.275, "dvth": 0.4},
    DeviceKind.SIC_MOSFET: {"rdson": 1.0, "dvth": 4.5},
}


def truth_trend(p, f_lo, f_hi):
    lo = effective_params(p.model, p.drive_at(f_lo))
    hi = effective_params(p.model, p.drive_at(f_hi))
    return {
        "ciss": hi.ciss_eff / lo.ciss_eff,
        "rdson": hi.r_dson_eff / lo.r_dson_eff,
        "dvth": hi.delta_vth,
    }


def score(trend, target):
    # relative miss for ratios, absolute volts for the threshold shift
    s = 0.0
    for key, goal in target.items():
        if key == "dvth":
            s += abs(trend[key] - goal)
        else:
            s += abs(trend[key] - goal) / goal
    return s


def search(kind):
    base = preset(kind)
    target = TARGETS[kind]
    if kind.is_gan:
        axes = {
            "tau_detrap": [5e-6, 10e-6, 20e-6, 50e-6],
            "alpha_c": np.arange(1.0, 4.01, 0.2),
            "alpha_r": np.arange(0.1, 0.81, 0.05),
            "beta_pos": [0.02] if kind is DeviceKind.GAN_CASCODE else np.arange(0.1, 0.81, 0.1),
        }
    else:
        axes = {
            "tau_detrap": [1e-6, 2e-6, 5e-6],
            "alpha_c": [0.5],
            "alpha_r": [0.1, 0.2, 0.3],
            "beta_pos": np.arange(3.5, 5.51, 0.5),
        }
    rows = []
    for tau_d, a_c, a_r, b_p in itertools.product(*axes.values()):
        trap = replace(base.model.trap, tau_detrap=tau_d)
        p = base.with_model(trap=trap, alpha_c=float(a_c), alpha_r=float(a_r), beta_pos=float(b_p))
        trend = truth_trend(p, p.f_min, p.f_max)
        rows.append((score(trend, target), tau_d, a_c, a_r, b_p, trend))
    rows.sort(key=lambda r: r[0])
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40_000, help="samples per period for the confirming sweep")
    ap.add_argument("--top", type=int, default=3)
    args = ap.parse_args(argv)

    ok = True
    for kind in DeviceKind:
        print(f"== {kind.value}")
        for s, tau_d, a_c, a_r, b_p, trend in search(kind)[: args.top]:
            print(f"  score={s:.4f} tau_detrap={tau_d:.0e} alpha_c={a_c:.2f} alpha_r={a_r:.2f} "
                  f"beta_pos={b_p:.2f} -> " + " ".join(f"{k}={v:.4f}" for k, v in trend.items()))
        m = preset(kind).model
        print(f"  committed: tau_trap={m.trap.tau_trap:g} tau_detrap={m.trap.tau_detrap:g} "
              f"alpha_r={m.alpha_r} alpha_c={m.alpha_c} beta_pos={m.beta_pos} beta_neg={m.beta_neg}")
        report = verify_trends(run_sweep(preset(kind), n=args.n))
        for line in report.to_text().splitlines():
            print("  " + line)
        ok &= report.passed
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
