#!/usr/bin/env python3
"""Run the canned experiments and write figures + acceptance table.

Equivalent to `rocket2d reproduce --out results/reproduce`.
"""

import sys

from rocket2d.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/reproduce"
    sys.exit(main(["reproduce", "--out", out]))
