#!/usr/bin/env python3
"""Print the critical-line table of an operator over a strip.

Usage: python scripts/spectrum_table.py operators/laplacian3d.json -3.5 6.5 8
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from oppencil.operator_ast import parse_operator
from oppencil.spectrum import strip_spectrum


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "operators/laplacian3d.json"
    b1 = float(sys.argv[2]) if len(sys.argv) > 2 else -0.5
    b2 = float(sys.argv[3]) if len(sys.argv) > 3 else 3.5
    degree = int(sys.argv[4]) if len(sys.argv) > 4 else 6

    op = parse_operator(json.load(open(path)))
    rep = strip_spectrum(op, b1, b2, degree)
    print(f"operator {path}  strip [{b1}, {b2}]  degree {degree}")
    print(f"{'line':>12} {'mult':>5} {'eigenvalues (Re, Im)'}")
    for line, mult in sorted(rep.res_lines.items()):
        pts = [e for e in rep.eigenpoints if abs(e.lambda0.imag - line) < 1e-6]
        lams = ", ".join(f"({e.lambda0.real:+.2e}, {e.lambda0.imag:.6f}) "
                         f"J={e.geometric} M={e.algebraic}" for e in pts)
        print(f"{line:12.6f} {mult:5d}  {lams}")
    print(f"total algebraic multiplicity: {rep.total_multiplicity()}")


if __name__ == "__main__":
    main()
