"""Spread of the Var/CRLB efficiency ratio across master seeds, both likelihood variants."""

import argparse
import math

import numpy as np

from wva_fisher.mc import TrialConfig, run_experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--experiments", type=int, default=200)
    ap.add_argument("--shots", type=int, default=20000)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.1)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    ratios = {True: [], False: []}
    for seed in range(args.seeds):
        cfg = TrialConfig(args.lam, args.shots, seed=seed, theta_i=math.pi / 2, theta_f=1.5 * math.pi, phi0=math.pi)
        line = [f"seed {seed:3d}"]
        for include in (True, False):
            s = run_experiments(cfg, args.experiments, include_acceptance=include, threads=args.threads)
            ratios[include].append(s.ratio)
            line.append(f"{'with_acceptance' if include else 'meter_only'} {s.ratio:.4f}")
        print("  ".join(line))
    # the sample variance of n Gaussian estimates has relative sd sqrt(2 / (n - 1))
    expected = math.sqrt(2.0 / (args.experiments - 1))
    for include, vals in ratios.items():
        vals = np.array(vals)
        print(f"{'with_acceptance' if include else 'meter_only':16s} mean {vals.mean():.4f} sd {vals.std(ddof=1):.4f} (expected sd ~{expected:.4f})")


if __name__ == "__main__":
    main()
