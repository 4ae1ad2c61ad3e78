"""Slot-wise detector SER sweeps with a known channel.

Two sweeps: SER versus receive antennas at K=25, SNR 0 dB, and SER versus
the number of active users at M=50, SNR 5 dB (crosses the determined /
under-determined boundary at K=M).
"""

import argparse
from pathlib import Path

from odma_ura.harness import ExperimentSpec, run_detector_bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    by_m = ExperimentSpec("ser", "antennas", (25, 50, 100, 200), args.trials, seed=args.seed,
                          detector_users=25, snr_db=0.0)
    for row in run_detector_bench(by_m, out / "ser_vs_antennas.csv"):
        print(f"M={row['M']:4d} {row['detector']:5s} SER={row['ser']:.4f}")

    by_k = ExperimentSpec("ser", "users", (10, 25, 40, 50, 60, 75, 100), args.trials, seed=args.seed,
                          snr_db=5.0)
    for row in run_detector_bench(by_k, out / "ser_vs_users.csv"):
        print(f"K={row['K']:4d} {row['detector']:5s} SER={row['ser']:.4f}")


if __name__ == "__main__":
    main()
