"""OP against IRS position, per user plus the mean and worst user.

    python scripts/irs_position.py [--mc-trials 20000] [--out results/irs_position.csv]
"""
import argparse
from pathlib import Path

from irsop import experiments as ex


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "irs_position.toml"))
    p.add_argument("--mc-trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/irs_position.csv")
    args = p.parse_args()

    cfg = ex.load_config(args.config)
    result = ex.run_sweep(ex.sweep_spec_from(cfg, mc_trials=args.mc_trials), args.workers)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        ex.write_csv(result, fh)

    print(f"{'x_R':>6} {'mean OP':>9} {'worst OP':>9}")
    for x, ops in result.analytic_table().items():
        print(f"{x:6g} {ex.aggregate_op(ops, 'mean'):9.4f} {ex.aggregate_op(ops, 'worst'):9.4f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
