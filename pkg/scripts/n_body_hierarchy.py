"""Emergence order of the n-body L-label hierarchy across N and C.

For each (N, C) prints the vanishing orders and the emergence value,
which should be N and 1/C.
"""

import argparse
import sys
import time

from tsvf.cli import parse_complex
from tsvf.hierarchy import detect_hierarchy, enumerate_correlations
from tsvf.scenarios import n_body


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=list(range(2, 11)))
    p.add_argument("--c", type=parse_complex, nargs="+", default=[1, -2, 0.1j, 1e-3])
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args(argv)
    for c in args.c:
        for n in args.n:
            t0 = time.perf_counter()
            s = n_body(n, c)
            table = enumerate_correlations(s.two_state, s.family, label_filter={"L"}, workers=args.workers)
            rep = detect_hierarchy(table)
            dt = time.perf_counter() - t0
            v = rep.emergence_value
            rel = abs(v * complex(c) - 1) if v is not None else float("nan")
            print(
                f"C={complex(c)!s:>10} N={n:2d} vanishing={list(rep.vanishing_orders)} "
                f"emergence={rep.emergence_order} value={v:.6g} |value*C-1|={rel:.1e} ({dt:.2f}s)"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
