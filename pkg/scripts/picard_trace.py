"""Print the Picard iterates of the three-peak scenario window by window."""

import argparse

from hsx2 import scenarios
from hsx2.evolution import PicardConfig, solve_picard


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=float, default=5.0)
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args(argv)
    g = scenarios.a3()
    _, trace = solve_picard(g.lagrangian, g.alpha, args.horizon, PicardConfig(tol=args.tol))
    print(f"window length {trace.window_length:.6f}")
    for w in trace.windows:
        print(f"window [{w.start:.6f}, {w.end:.6f}] distinct iterates: {w.distinct}")
        for it in w.iterates:
            weights = ", ".join(f"{v:.10g}" for v in it.alpha_at_break)
            print(f"  n={it.n:2d} alpha at break [{weights}] sup_delta={it.sup_delta:.3e}")


if __name__ == "__main__":
    main()
