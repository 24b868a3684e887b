"""Calibrate the stable sampler and the exit-time estimator against closed forms.

    python3 scripts/mc_calibration.py --alphas 0.5 1 1.5 --n 200000
"""

import argparse
import math

from stablegap import kernels, montecarlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--dt", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ball = kernels.BallSpec((0.0, 0.0), 1.0)
    print("alpha,check,setting,estimate,stderr,target")
    for alpha in args.alphas:
        for xi in ((1.0, 0.0), (0.0, 2.5)):
            c = montecarlo.empirical_cf(alpha, xi=xi, n=args.n, seed=args.seed)
            print(f"{alpha},cf,|xi|={math.hypot(*xi):g},{c.value:.6f},{c.stderr:.1e},{c.target:.6f}")
        exact = kernels.expected_exit_time(alpha, ball, (0.0, 0.0))
        for dt in args.dt:
            s = montecarlo.simulate_exits(ball, (0.0, 0.0), args.n,
                                          montecarlo.PathConfig(alpha, dt=dt, seed=args.seed))
            print(f"{alpha},exit_time,dt={dt:g},{s.mean:.6f},{s.stderr:.1e},{exact:.6f}")


if __name__ == "__main__":
    main()
