"""PUPE versus Eb/N0 for one or more user loads.

Example:
    python3 scripts/pupe_sweep.py --users 150 300 --ebn0 -8 -7 -6 -5 --trials 20
"""

import argparse
from pathlib import Path

from odma_ura.config import SystemConfig, load_config, pilot_length_for
from odma_ura.harness import ExperimentSpec, run_end_to_end


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config")
    parser.add_argument("--users", type=int, nargs="+", default=[150])
    parser.add_argument("--ebn0", type=float, nargs="+", default=[-8, -7, -6, -5])
    parser.add_argument("--list-size", type=int, default=8)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()
    base = load_config(args.config) if args.config else SystemConfig()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for ka in args.users:
        cfg = base.replace(active_users=ka, pilot_length=pilot_length_for(ka), list_size=args.list_size)
        spec = ExperimentSpec("pupe", "ebn0", tuple(args.ebn0), args.trials, base=cfg,
                              seed=args.seed, workers=args.workers)
        path = out / f"pupe_ka{ka}_l{args.list_size}.csv"
        for row in run_end_to_end(spec, path, rounds_out=out / f"rounds_ka{ka}_l{args.list_size}.csv"):
            print(f"Ka={ka} Eb/N0={row['sweep_value']:+.1f} dB  PUPE={row['pupe']:.4f}  "
                  f"(md {row['p_md']:.4f}, fa {row['p_fa']:.4f}, {row['avg_sic_rounds']:.2f} passes/chunk)")


if __name__ == "__main__":
    main()
