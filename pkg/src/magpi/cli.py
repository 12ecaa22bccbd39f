"""Command-line entry point: check (typechecking), verify (type-level
properties over the context LTS) and simulate (seeded fault-injection runs
with monitors).

Exit codes: 0 all checks hold, 1 violation or typecheck failure,
2 inconclusive within limits, 3 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import proc as P
from .context import TypeContext, render_context
from .diagnostics import MagpiError
from .lts import Exceeded, ExploreLimits, explore, export_lts
from .parser import ProtocolFile, parse
from .sim import (Config, FailureScenario, RELIABLE, UNRESTRICTED,
                  monitor_corollaries, run)
from .typecheck import typecheck_file
from .types import (Basic, CongruenceMode, Reliability, SessionBufferType,
                    BufEntry)
from . import verify as V

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3

DEFAULT_MAX_STATES = 100000
DEFAULT_BOUND_PROBE = 16
STATS_STATE_CAP = 10000


def _load(path: str) -> ProtocolFile:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse(fh.read())
    except OSError as exc:
        raise MagpiError.usage(f"cannot read {path}: {exc.strerror}")


def initial_context(pf: ProtocolFile):
    """(Γ, session) from the system's top-level restriction annotation plus
    any initial buffer content."""
    p = pf.system_with_defs()
    while isinstance(p, P.Def):
        p = p.cont
    if not isinstance(p, P.Restriction):
        return None, None
    eps = {(p.session, role): SessionBufferType((), ty) for role, ty in p.annotations}

    def find_buffer(q):
        if isinstance(q, P.Buffer) and q.session == p.session:
            return q
        for c in (q.left, q.right) if isinstance(q, P.Par) else ():
            b = find_buffer(c)
            if b is not None:
                return b
        return None

    buf = find_buffer(p.body)
    if buf is not None:
        for e in buf.entries:
            if isinstance(e.value, P.Lit):
                key = (p.session, e.frm)
                cur = eps.get(key, SessionBufferType((), None))
                eps[key] = SessionBufferType(
                    cur.buffer + (BufEntry(e.to, e.label, Basic(e.value.kind)),),
                    cur.session)
    return TypeContext.of({}, eps), p.session


def _gate_typecheck(pf: ProtocolFile, args, out) -> int | None:
    if getattr(args, "unsafe_skip_typecheck", False):
        return None
    report = typecheck_file(pf, ExploreLimits(max_states=args.max_states))
    if not report.accepted:
        for d in report.failures:
            print(d.render(), file=out)
        print("typecheck: rejected", file=out)
        return EXIT_VIOLATION
    return None


# ---------------------------------------------------------------------------
# commands


def cmd_check(args, out) -> int:
    pf = _load(args.file)
    report = typecheck_file(pf, ExploreLimits(max_states=args.max_states))
    if args.json:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True), file=out)
    else:
        for d in report.failures:
            print(d.render(), file=out)
        print(f"typecheck: {report.verdict}", file=out)
    return EXIT_OK if report.accepted else EXIT_VIOLATION


PROP_NAMES = ("safety", "comm-rf", "deadlock", "terminating", "live",
              "never", "tcp", "bounded")


def cmd_verify(args, out) -> int:
    pf = _load(args.file)
    gate = _gate_typecheck(pf, args, out)
    if gate is not None:
        return gate
    g0, session = initial_context(pf)
    if g0 is None:
        print("error: system has no top-level session restriction", file=out)
        return EXIT_USAGE
    sigma = {session}
    r = pf.reliability
    mode = (CongruenceMode.TCP_FIFO if args.mode == "tcp"
            else CongruenceMode.TOTAL_REORDER)
    limits = ExploreLimits(max_states=args.max_states, mode=mode)
    props = [p.strip() for p in args.props.split(",")] if args.props else \
        ["safety", "comm-rf", "deadlock", "terminating", "live"]
    results: dict = {}
    minimal_k = None
    for name in props:
        if name == "safety":
            results[name] = V.check_safety(g0, sigma, r, limits)
        elif name == "comm-rf":
            results[name] = V.check_comm_safe_RF(g0, sigma, limits)
        elif name == "deadlock":
            results[name] = V.check_deadlock_free(g0, sigma, r, limits)
        elif name == "terminating":
            results[name] = V.check_terminating(g0, sigma, r, limits)
        elif name == "live":
            results[name] = V.check_live(g0, sigma, r, limits)
        elif name == "never":
            results[name] = V.check_never_terminating(g0, sigma, r, limits)
        elif name == "tcp":
            results[name] = V.check_tcp_safety(g0, sigma, limits)
        elif name == "bounded":
            results[name], minimal_k = V.check_bounded(
                g0, sigma, r, args.bound or DEFAULT_BOUND_PROBE, mode)
        else:
            print(f"error: unknown property {name!r} "
                  f"(expected one of {', '.join(PROP_NAMES)})", file=out)
            return EXIT_USAGE
    if args.bound and "bounded" not in props:
        results[f"bound_{args.bound}"] = V.check_bound_k(
            g0, sigma, r, args.bound, mode)
    # State/edge counts are reported best-effort under a small cap so that
    # unbounded systems (whose checks may settle statically) stay fast.
    stats_limits = ExploreLimits(min(limits.max_states, STATS_STATE_CAP),
                                 limits.max_buffer_len, limits.mode,
                                 limits.relation)
    graph = explore(g0, sigma, r, stats_limits)
    stats = ({"states": len(graph.states), "edges": len(graph.edges)}
             if not isinstance(graph, Exceeded)
             else {"exceeded": graph.kind, "limit": graph.limit})
    if args.dot and not isinstance(graph, Exceeded):
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(export_lts(graph, "dot"))
    doc = {"properties": {k: v.to_json() for k, v in results.items()},
           "stats": stats}
    if minimal_k is not None:
        doc["properties"]["bounded"]["minimalK"] = minimal_k
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
    else:
        for k in sorted(results):
            v = results[k]
            extra = f" ({v.reason})" if v.reason else ""
            print(f"{k}: {v.status}{extra}", file=out)
        print(f"states: {stats.get('states', '>limit')} "
              f"edges: {stats.get('edges', '-')}", file=out)
    statuses = {v.status for v in results.values()}
    if V.VIOLATED in statuses:
        return EXIT_VIOLATION
    if V.INCONCLUSIVE in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    pf = _load(args.file)
    gate = _gate_typecheck(pf, args, out)
    if gate is not None:
        return gate
    scenario = FailureScenario()
    if args.scenario:
        try:
            with open(args.scenario, encoding="utf-8") as fh:
                scenario = FailureScenario.from_json(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            print(f"error: bad scenario file: {exc}", file=out)
            return EXIT_USAGE
    policy = RELIABLE if args.policy == "reliable" else UNRESTRICTED
    trace = run(Config(pf.system_with_defs()), pf.reliability, policy,
                scenario, args.seed, args.steps)
    lines = trace.to_json_lines()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(lines + ("\n" if lines else ""))
    violations = monitor_corollaries(trace, pf.reliability)
    doc = {
        "events": len(trace.events),
        "stuck": trace.stuck,
        "inactive": P.is_inactive(trace.terminal.process),
        "terminal": P.render_process(P.canonical_process(trace.terminal.process)),
        "monitors": [v.to_json() for v in violations],
    }
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
    else:
        if not args.trace and lines:
            print(lines, file=out)
        print(f"steps: {doc['events']} stuck: {doc['stuck']} "
              f"inactive: {doc['inactive']}", file=out)
        for v in violations:
            print(f"monitor violation: {v.kind} at step {v.step} "
                  f"({v.session}[{v.role}])", file=out)
    return EXIT_VIOLATION if violations else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magpi",
                                 description="protocol typechecker, verifier "
                                             "and fault-injection simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file")
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)

    c = sub.add_parser("check", help="typecheck a protocol file")
    common(c)

    v = sub.add_parser("verify", help="verify type-level properties")
    common(v)
    v.add_argument("--props", default="")
    v.add_argument("--bound", type=int, default=0)
    v.add_argument("--mode", choices=("total", "tcp"), default="total")
    v.add_argument("--dot", default="")
    v.add_argument("--unsafe-skip-typecheck", action="store_true")

    s = sub.add_parser("simulate", help="run a seeded fault-injection simulation")
    common(s)
    s.add_argument("--scenario", default="")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--policy", choices=("reliable", "unrestricted"),
                   default="reliable")
    s.add_argument("--trace", default="")
    s.add_argument("--unsafe-skip-typecheck", action="store_true")
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "check":
            return cmd_check(args, out)
        if args.command == "verify":
            return cmd_verify(args, out)
        return cmd_simulate(args, out)
    except MagpiError as exc:
        for d in exc.diagnostics:
            print(d.render(), file=out)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
