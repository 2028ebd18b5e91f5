#!/usr/bin/env python3
"""Tabulate the sqrt point-map gauge constants A_n, B_n.

With --check, each pair is compared against an order-by-order solve of the
gauge equations, which costs noticeably more beyond n = 6.
"""
import argparse
import sys

from qcanon import catalog
from qcanon.gauge import anbn_constants, exponent_sqrt_coefficients, series_log, solve_gauge


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=8)
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args(argv)
    A, B = anbn_constants(args.nmax)
    solved = None
    if args.check:
        K = 2 * args.nmax
        L = series_log(solve_gauge(catalog.sqrt_map(), K).gauge.S, K)
        solved = [exponent_sqrt_coefficients(L, n) for n in range(1, args.nmax + 1)]
    print(f"{'n':>3} {'A_n':>12} {'B_n':>12}" + ("  solver" if solved else ""))
    ok = True
    for n, (a, b) in enumerate(zip(A, B), 1):
        tail = ""
        if solved:
            agree = solved[n - 1] == (a, b)
            ok &= agree
            tail = "  ok" if agree else f"  {solved[n - 1]}"
        print(f"{n:>3} {str(a):>12} {str(b):>12}{tail}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
