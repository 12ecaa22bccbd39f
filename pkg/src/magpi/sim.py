"""Seeded execution of the process-level operational semantics with
scripted fault injection and runtime branch monitors.

Asynchrony lives entirely in session buffers: a run is a sequential loop
that repeatedly samples one enabled reduction.  Failure scenarios weight the
failure rules (message drop, premature timeout) and can force them (crashed
roles, failed links, partitions); the Reliable policy restricts timeouts and
drops to unreliable pairs regardless of the scenario.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace

from . import proc as P
from .context import TypeContext
from .types import (Branch as TBranch, BufEntry, CongruenceMode, Reliability,
                    Select, SessionBufferType, resolve)

RELIABLE = "reliable"
UNRESTRICTED = "unrestricted"

RULE_SEND = "R-send"
RULE_RECV = "R-recv"
RULE_TIMEOUT = "R-timeout"
RULE_CHOICE = "R-choice"
RULE_CALL = "R-call"
RULE_DROP = "R-drop"


@dataclass(frozen=True)
class FailureScenario:
    drop: tuple = ()        # tuple[((frm, to), prob), ...]
    crash: tuple = ()       # tuple[(role, activation step), ...]
    links: tuple = ()       # tuple[(a, b, activation step), ...] unordered pairs
    partitions: tuple = ()  # tuple[((roles...), (roles...), activation step), ...]
    delay_bias: float = 0.0
    reorder: CongruenceMode = CongruenceMode.TOTAL_REORDER
    freeze_crashed: bool = True

    @staticmethod
    def from_json(doc: dict) -> "FailureScenario":
        drop = tuple(sorted((tuple(k.split("->")), float(v))
                            for k, v in doc.get("drop", {}).items()))
        crash = tuple(sorted((c["role"], int(c.get("at", 0)))
                             for c in doc.get("crash", [])))
        links = tuple(sorted((l["a"], l["b"], int(l.get("at", 0)))
                             for l in doc.get("links", [])))
        parts = tuple((tuple(sorted(p["a"])), tuple(sorted(p["b"])),
                       int(p.get("at", 0)))
                      for p in doc.get("partition", []))
        mode = (CongruenceMode.TCP_FIFO if doc.get("reorder") == "tcp"
                else CongruenceMode.TOTAL_REORDER)
        return FailureScenario(drop, crash, links, parts,
                               float(doc.get("delayBias", 0.0)), mode,
                               bool(doc.get("freezeCrashed", True)))

    def drop_prob(self, frm: str, to: str) -> float:
        for (f, t), p in self.drop:
            if f == frm and t == to:
                return p
        return 0.0

    def crashed(self, role: str, step: int) -> bool:
        return any(r == role and step >= at for r, at in self.crash)

    def link_failed(self, a: str, b: str, step: int) -> bool:
        for x, y, at in self.links:
            if step >= at and {x, y} == {a, b}:
                return True
        for left, right, at in self.partitions:
            if step >= at and ((a in left and b in right)
                               or (a in right and b in left)):
                return True
        return False


@dataclass(frozen=True)
class Config:
    process: P.Process
    step_count: int = 0


@dataclass(frozen=True)
class Step:
    rule: str
    detail: tuple  # sorted (key, value) pairs describing the redex
    process: P.Process
    weight: float

    def detail_dict(self) -> dict:
        return dict(self.detail)


@dataclass(frozen=True)
class TraceEvent:
    step: int
    rule: str
    detail: tuple
    buffers: str  # digest of all session buffers after the step

    def detail_dict(self) -> dict:
        return dict(self.detail)

    def to_json(self) -> dict:
        return {"step": self.step, "rule": self.rule,
                "detail": dict(self.detail), "buffers": self.buffers}


@dataclass
class Trace:
    events: list
    configs: list  # Config per step, index 0 = initial
    terminal: Config
    stuck: bool

    def to_json_lines(self) -> str:
        return "\n".join(json.dumps(e.to_json(), sort_keys=True)
                         for e in self.events)


# ---------------------------------------------------------------------------
# tree addressing


def _kids(p: P.Process) -> list:
    if isinstance(p, P.Send):
        return [p.cont]
    if isinstance(p, P.Branch):
        out = [a.cont for a in p.arms]
        if p.timeout is not None:
            out.append(p.timeout)
        return out
    if isinstance(p, (P.Choice, P.Par)):
        return [p.left, p.right]
    if isinstance(p, P.Restriction):
        return [p.body]
    if isinstance(p, P.Def):
        return [p.body, p.cont]
    return []


def _rebuild(p: P.Process, path: tuple, new: P.Process) -> P.Process:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(p, P.Send):
        return replace(p, cont=_rebuild(p.cont, rest, new))
    if isinstance(p, P.Branch):
        if i < len(p.arms):
            arms = list(p.arms)
            arms[i] = replace(arms[i], cont=_rebuild(arms[i].cont, rest, new))
            return replace(p, arms=tuple(arms))
        return replace(p, timeout=_rebuild(p.timeout, rest, new))
    if isinstance(p, (P.Choice, P.Par)):
        if i == 0:
            return replace(p, left=_rebuild(p.left, rest, new))
        return replace(p, right=_rebuild(p.right, rest, new))
    if isinstance(p, P.Restriction):
        return replace(p, body=_rebuild(p.body, rest, new))
    if isinstance(p, P.Def):
        if i == 0:
            return replace(p, body=_rebuild(p.body, rest, new))
        return replace(p, cont=_rebuild(p.cont, rest, new))
    raise ValueError("path into a leaf process")


def _get(p: P.Process, path: tuple) -> P.Process:
    for i in path:
        p = _kids(p)[i]
    return p


# ---------------------------------------------------------------------------
# enabled steps


def _collect(root: P.Process):
    """(redex sites, buffer paths per session, def environment per path)."""
    sites = []   # (path, node, env dict at that point)
    buffers = {}  # session -> path

    def walk(p, path, env):
        if isinstance(p, P.Buffer):
            buffers[p.session] = path
            sites.append((path, p, env))
            return
        if isinstance(p, P.Def):
            env2 = dict(env)
            env2[p.name] = (p.params, p.body)
            walk(p.cont, path + (1,), env2)
            return
        sites.append((path, p, env))
        if isinstance(p, (P.Par, P.Restriction)):
            for i, c in enumerate(_kids(p)):
                walk(c, path + (i,), env)

    walk(root, (), {})
    return sites, buffers


def _droppable(e: P.BufMsg, r: Reliability, policy: str,
               scenario: FailureScenario, step: int):
    """(allowed, weight) of dropping one in-transit message."""
    forced = (scenario.crashed(e.frm, step)
              or scenario.link_failed(e.frm, e.to, step))
    if policy == RELIABLE and e.to in r.get(e.frm) and not forced:
        return False, 0.0
    w = 1.0 if forced else scenario.drop_prob(e.frm, e.to)
    return True, w


def _head_indices(entries: tuple, mode: CongruenceMode) -> list:
    """Entry indices reachable at the queue head up to the reorder
    congruence: all under total reordering (one per equal message), only
    per-(sender, recipient)-channel heads under per-pair FIFO."""
    out, seen, heads = [], set(), set()
    for i, e in enumerate(entries):
        chan = (e.frm, e.to)
        if mode is CongruenceMode.TCP_FIFO:
            if chan in heads:
                continue
            heads.add(chan)
            out.append(i)
        else:
            key = (e.frm, e.to, e.label, P.render_value(e.value))
            if key not in seen:
                seen.add(key)
                out.append(i)
    return out


def enabled_steps(c: Config, r: Reliability, policy: str,
                  scenario: FailureScenario) -> list:
    """All enabled reductions with their scenario weights, deterministically
    ordered.  Weight 0 marks a step the sampler will never take."""
    root, step = c.process, c.step_count
    sites, buffers = _collect(root)
    out = []
    for path, node, env in sites:
        if isinstance(node, P.Send) and isinstance(node.ch, P.Endpoint):
            s, role = node.ch.session, node.ch.role
            if scenario.crashed(role, step) and scenario.freeze_crashed:
                continue
            if s not in buffers:
                continue
            new = _rebuild(root, path, node.cont)
            bpath = buffers[s]
            buf = _get(new, bpath)
            entry = P.BufMsg(role, node.to, node.label, node.value)
            new = _rebuild(new, bpath, replace(buf, entries=buf.entries + (entry,)))
            out.append(Step(RULE_SEND, (("from", role), ("label", node.label),
                                        ("session", s), ("to", node.to),
                                        ("value", P.render_value(node.value))),
                            new, 1.0))
        elif isinstance(node, P.Branch) and isinstance(node.ch, P.Endpoint):
            s, role = node.ch.session, node.ch.role
            if scenario.crashed(role, step) and scenario.freeze_crashed:
                continue
            buf = _get(root, buffers[s]) if s in buffers else None
            entries = buf.entries if buf is not None else ()
            matched = False
            for i in _head_indices(entries, scenario.reorder):
                e = entries[i]
                if e.to != role:
                    continue
                for ai, arm in enumerate(node.arms):
                    if arm.frm != e.frm or arm.label != e.label:
                        continue
                    matched = True
                    cont = P.subst(arm.cont, {arm.var: e.value})
                    new = _rebuild(root, path, cont)
                    nbuf = _get(new, buffers[s])
                    new = _rebuild(new, buffers[s], replace(
                        nbuf, entries=nbuf.entries[:i] + nbuf.entries[i + 1:]))
                    out.append(Step(RULE_RECV, (("from", e.frm), ("label", e.label),
                                                ("session", s), ("to", role),
                                                ("value", P.render_value(e.value))),
                                    new, 1.0))
            if node.timeout is not None:
                allowed = (policy == UNRESTRICTED
                           or any(a.frm not in r.get(role) for a in node.arms))
                if allowed:
                    w = scenario.delay_bias if matched else 1.0
                    out.append(Step(RULE_TIMEOUT, (("role", role), ("session", s)),
                                    _rebuild(root, path, node.timeout), w))
        elif isinstance(node, P.Choice):
            out.append(Step(RULE_CHOICE, (("side", "left"),),
                            _rebuild(root, path, node.left), 1.0))
            out.append(Step(RULE_CHOICE, (("side", "right"),),
                            _rebuild(root, path, node.right), 1.0))
        elif isinstance(node, P.Call):
            if node.name in env:
                params, body = env[node.name]
                sub = {v: a for (v, _), a in zip(params, node.args)}
                out.append(Step(RULE_CALL, (("name", node.name),),
                                _rebuild(root, path, P.subst(body, sub)), 1.0))
        elif isinstance(node, P.Buffer):
            for i in _head_indices(node.entries, scenario.reorder):
                e = node.entries[i]
                allowed, w = _droppable(e, r, policy, scenario, step)
                if not allowed:
                    continue
                new = _rebuild(root, path, replace(
                    node, entries=node.entries[:i] + node.entries[i + 1:]))
                out.append(Step(RULE_DROP, (("from", e.frm), ("label", e.label),
                                            ("session", node.session), ("to", e.to),
                                            ("value", P.render_value(e.value))),
                                new, w))
    out.sort(key=lambda s: (s.rule, s.detail))
    return out


# ---------------------------------------------------------------------------
# runs


def _buffer_digest(p: P.Process) -> str:
    parts = []

    def walk(q):
        if isinstance(q, P.Buffer):
            parts.append(P.render_process(q))
        for c in _kids(q):
            walk(c)

    walk(p)
    parts.sort()
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:12]


def run(c0: Config, r: Reliability, policy: str, scenario: FailureScenario,
        seed: int, max_steps: int) -> Trace:
    """Seeded scheduler: repeatedly samples one positive-weight enabled step
    until quiescence or the step budget; deterministic in (c0, scenario,
    seed)."""
    rng = random.Random(seed)
    cfg = c0
    events, configs = [], [c0]
    stuck = False
    for _ in range(max_steps):
        steps = enabled_steps(cfg, r, policy, scenario)
        live = [s for s in steps if s.weight > 0.0]
        if not live:
            # Zero-weight steps can only be drops of orphaned messages whose
            # receiver already finished; those do not make the run stuck.
            stuck = not P.is_inactive(cfg.process)
            break
        total = sum(s.weight for s in live)
        pick = rng.random() * total
        acc = 0.0
        chosen = live[-1]
        for s in live:
            acc += s.weight
            if pick < acc:
                chosen = s
                break
        cfg = Config(chosen.process, cfg.step_count + 1)
        events.append(TraceEvent(cfg.step_count, chosen.rule, chosen.detail,
                                 _buffer_digest(cfg.process)))
        configs.append(cfg)
    else:
        stuck = False
    return Trace(events, configs, cfg, stuck)


def exhaustive_small_step_oracle(c0: Config, r: Reliability, policy: str,
                                 scenario: FailureScenario, depth: int) -> set:
    """Full nondeterministic expansion of positive-weight steps to a bounded
    depth; returns the rendered canonical terminal processes."""
    from collections import deque
    seen = set()
    terminals = set()
    frontier = deque([(c0.process, 0)])
    while frontier:
        proc, d = frontier.popleft()  # breadth-first: first visit is shallowest
        key = P.render_process(P.canonical_process(proc, scenario.reorder))
        if key in seen:
            continue
        seen.add(key)
        steps = [s for s in enabled_steps(Config(proc, d), r, policy, scenario)
                 if s.weight > 0.0]
        if not steps:
            terminals.add(key)
            continue
        if d >= depth:
            continue
        for s in steps:
            frontier.append((s.process, d + 1))
    return terminals


# ---------------------------------------------------------------------------
# monitors


@dataclass(frozen=True)
class MonitorViolation:
    kind: str  # "Cor1" | "Cor2"
    session: str
    role: str
    step: int

    def to_json(self) -> dict:
        return {"kind": self.kind, "session": self.session,
                "role": self.role, "step": self.step}


def _branch_violations(p: P.Process, r: Reliability, step: int) -> list:
    out = []

    def walk(q):
        if isinstance(q, P.Branch) and isinstance(q.ch, P.Endpoint):
            role = q.ch.role
            rset = r.get(role)
            unreliable = [a.frm for a in q.arms if a.frm not in rset]
            if q.timeout is None and unreliable:
                out.append(MonitorViolation("Cor1", q.ch.session, role, step))
            if q.timeout is not None and not unreliable:
                out.append(MonitorViolation("Cor2", q.ch.session, role, step))
        for c in _kids(q):
            walk(c)

    walk(p)
    return out


def monitor_corollaries(t: Trace, r: Reliability) -> list:
    """Scan every intermediate process: a timeout-less branching must only
    await reliable sources, and a timeout-bearing branching must await at
    least one unreliable source."""
    out = []
    for i, cfg in enumerate(t.configs):
        out.extend(_branch_violations(cfg.process, r, i))
    return out


# ---------------------------------------------------------------------------
# mirroring process steps onto a typing context (subject-reduction harness)


def mirror_on_context(g: TypeContext, event: TraceEvent) -> TypeContext:
    """Apply the type-level image of one process reduction to a context."""
    d = event.detail_dict()
    rule = event.rule
    if rule == RULE_SEND:
        key = (d["session"], d["from"])
        sbt = g.endpoint(key)
        head = resolve(sbt.session)
        arm = next(a for a in head.arms
                   if a.to == d["to"] and a.label == d["label"])
        return g.with_endpoint(key, SessionBufferType(
            sbt.buffer + (BufEntry(arm.to, arm.label, arm.payload),), arm.cont))
    if rule == RULE_RECV:
        skey = (d["session"], d["from"])
        rkey = (d["session"], d["to"])
        ssbt, rsbt = g.endpoint(skey), g.endpoint(rkey)
        idx = next(i for i, e in enumerate(ssbt.buffer)
                   if e.to == d["to"] and e.label == d["label"])
        head = resolve(rsbt.session)
        arm = next(a for a in head.arms
                   if a.frm == d["from"] and a.label == d["label"])
        g = g.with_endpoint(skey, SessionBufferType(
            ssbt.buffer[:idx] + ssbt.buffer[idx + 1:], ssbt.session))
        return g.with_endpoint(rkey, SessionBufferType(rsbt.buffer, arm.cont))
    if rule == RULE_TIMEOUT:
        key = (d["session"], d["role"])
        sbt = g.endpoint(key)
        head = resolve(sbt.session)
        return g.with_endpoint(key, SessionBufferType(sbt.buffer, head.timeout))
    if rule == RULE_DROP:
        key = (d["session"], d["from"])
        sbt = g.endpoint(key)
        idx = next(i for i, e in enumerate(sbt.buffer)
                   if e.to == d["to"] and e.label == d["label"])
        return g.with_endpoint(key, SessionBufferType(
            sbt.buffer[:idx] + sbt.buffer[idx + 1:], sbt.session))
    return g  # choice and call leave the context unchanged
