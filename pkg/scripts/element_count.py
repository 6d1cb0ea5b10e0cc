"""OP against the number of IRS elements, and the N needed to undo a move.

    python scripts/element_count.py [--metric worst] [--out results/element_count.csv]
"""
import argparse
from pathlib import Path

from irsop import experiments as ex
from irsop.errors import SearchRangeError


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(Path(__file__).parents[1] / "configs" / "element_count.toml"))
    p.add_argument("--metric", default="worst", help="mean, worst or a user index")
    p.add_argument("--x-ref", type=float, default=0.0)
    p.add_argument("--n-ref", type=int, default=50)
    p.add_argument("--n-max", type=int, default=2000)
    p.add_argument("--out", default="results/element_count.csv")
    args = p.parse_args()

    cfg = ex.load_config(args.config)
    sc = cfg["scenario"]
    result = ex.run_sweep(ex.sweep_spec_from(cfg))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        ex.write_csv(result, fh)
    for n, ops in result.analytic_table().items():
        print(f"N={n:5g}  mean={ex.aggregate_op(ops, 'mean'):.4f}  worst={ex.aggregate_op(ops, 'worst'):.4f}")

    ref = sc.replace(irs=(args.x_ref, sc.irs[1]), N=args.n_ref)
    target = ex.analytic_op(ref, args.metric)
    print(f"reference x_R={args.x_ref:g}, N={args.n_ref}: {args.metric} OP = {target:.4f}")
    try:
        n, op = ex.find_compensating_N(sc, target, (1, args.n_max), args.metric)
        print(f"x_R={sc.irs[0]:g} needs N={n} (delta {n - args.n_ref}), OP = {op:.4f}")
    except SearchRangeError as e:
        print(f"x_R={sc.irs[0]:g}: {e}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
