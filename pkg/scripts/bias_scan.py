"""Weak-regime bias of the pointer estimate along a halving g ladder.

Prints sampled and quadrature estimates of Re<A>_w and the ratio of
successive exact biases, which approaches 4 when the bias is O(g^2).
"""

import argparse
import sys

from tsvf.pointer import GaussianPointer, bias_scan
from tsvf.scenarios import build, resolve_observable
from tsvf.twostate import weak_value


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="two-box")
    p.add_argument("--obs", default="LL")
    p.add_argument("--g", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    sc = build(args.scenario)
    a = resolve_observable(sc, args.obs)
    target = weak_value(sc.two_state, a).real
    pts = bias_scan(sc.two_state, a, GaussianPointer(args.g[0], args.sigma), args.g, args.trials, args.seed)
    print(f"{args.scenario} {args.obs}: Re<A>_w = {target:.12g}")
    print(f"{'g':>8} {'sampled':>14} {'std err':>10} {'exact':>16} {'bias':>12} {'ratio':>7}")
    prev = None
    for pt in pts:
        bias = abs(pt.exact - target)
        ratio = f"{prev / bias:7.3f}" if prev and bias > 0 else " " * 7
        print(f"{pt.g:8.4g} {pt.estimate:14.6f} {pt.std_error:10.4f} {pt.exact:16.12f} {bias:12.4e} {ratio}")
        prev = bias
    return 0


if __name__ == "__main__":
    sys.exit(main())
