"""Write the bottom-up impossibility witness as a JSON regression artifact.

Two n-body instances that differ only in C share every correlation below
order N and disagree at order N by |1/C1 - 1/C2|.
"""

import argparse
import json
import sys

from tsvf.cli import parse_complex
from tsvf.hierarchy import bottom_up_witness


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--c1", type=parse_complex, default=1.0)
    p.add_argument("--c2", type=parse_complex, default=2.0)
    p.add_argument("--out", help="output path (default: stdout)")
    args = p.parse_args(argv)
    w = bottom_up_witness(args.n, args.c1, args.c2)
    text = json.dumps(w.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
