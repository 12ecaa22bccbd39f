#!/usr/bin/env python3
"""Measure how the typing-context transition system of a protocol grows as
the per-channel buffer bound increases, under both message-reordering
congruences.  Useful for picking a bound before running `magpi verify`.

Usage: state_space.py [FILE] [--max-bound K] [--dot OUT.dot]
"""
from __future__ import annotations

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from magpi import Exceeded, ExploreLimits, explore, export_lts, parse
from magpi.cli import initial_context
from magpi.types import CongruenceMode


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("file", nargs="?",
                    default=str(pathlib.Path(__file__).resolve().parent.parent
                                / "fixtures" / "dns.magpi"))
    ap.add_argument("--max-bound", type=int, default=6)
    ap.add_argument("--max-states", type=int, default=200000)
    ap.add_argument("--dot", help="write the unbounded LTS in graphviz form")
    args = ap.parse_args()

    pf = parse(open(args.file, encoding="utf-8").read())
    ctx, sess = initial_context(pf)
    if ctx is None:
        print("no session restriction found in system", file=sys.stderr)
        return 1

    print(f"protocol {pf.name}")
    print(f"{'bound':>6} {'mode':>6} {'states':>8} {'edges':>8} {'stuck':>6}")
    for k in range(1, args.max_bound + 1):
        for mode in (CongruenceMode.TOTAL_REORDER, CongruenceMode.TCP_FIFO):
            lim = ExploreLimits(args.max_states, k, mode)
            g = explore(ctx, {sess}, pf.reliability, lim)
            if isinstance(g, Exceeded):
                print(f"{k:>6} {mode.value:>6} {'-':>8} {'-':>8}  exceeded {g.kind}")
            else:
                stuck = sum(1 for sid in range(len(g.states)) if g.stuck(sid))
                print(f"{k:>6} {mode.value:>6} {len(g.states):>8} "
                      f"{len(g.edges):>8} {stuck:>6}")

    lim = ExploreLimits(args.max_states)
    g = explore(ctx, {sess}, pf.reliability, lim)
    if isinstance(g, Exceeded):
        print(f"unbounded: exceeded {g.kind} at {g.limit}")
    else:
        print(f"unbounded: {len(g.states)} states, {len(g.edges)} edges")
        if args.dot:
            pathlib.Path(args.dot).write_text(export_lts(g, "dot"))
            print(f"wrote {args.dot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
