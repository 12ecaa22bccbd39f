"""Context reduction and the reachable labelled transition system over
canonical typing contexts.

Transitions per endpoint: a selection enqueues one typed message onto the
sender's buffer (one Send per arm); a branching consumes a congruence-
head-reachable matching entry from the arm source's buffer (Com); a
branching with a timeout and at least one unreliable arm source may time
out.  Recursion nodes are unfolded transparently before matching.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .context import (TypeContext, canonical_context, context_key,
                      render_context)
from .types import (Branch, BufEntry, CongruenceMode, End, Reliability,
                    Select, SessionBufferType, Type, format_type, resolve,
                    type_equal)


# ---------------------------------------------------------------------------
# actions


@dataclass(frozen=True)
class SendAct:
    session: str
    frm: str
    to: str
    label: str
    payload: Type

    def render(self) -> str:
        return f"{self.session}:{self.frm}!{self.to}:{self.label}({format_type(self.payload)})"


@dataclass(frozen=True)
class ComAct:
    session: str
    frm: str
    to: str
    label: str

    def render(self) -> str:
        return f"{self.session}:{self.frm},{self.to}:{self.label}"


@dataclass(frozen=True)
class TimeoutAct:
    session: str
    role: str

    def render(self) -> str:
        return f"{self.session}:{self.role}:timeout"


Action = object

FULL = "full"
SEND_COM_ONLY = "sendcom"


@dataclass(frozen=True)
class ExploreLimits:
    max_states: int = 100000
    max_buffer_len: int | None = None
    mode: CongruenceMode = CongruenceMode.TOTAL_REORDER
    relation: str = FULL

    def __post_init__(self):
        if self.max_states < 1:
            raise ValueError("max_states must be >= 1")


@dataclass(frozen=True)
class Exceeded:
    """Limit outcome of exploration; a value, not an error."""

    kind: str  # "maxStates" | "bufferLen"
    limit: int
    witness: tuple = ()  # action path from the initial context
    state: TypeContext | None = None


# ---------------------------------------------------------------------------
# single-state transitions


def _head_reachable(entries: tuple, recipient: str, mode: CongruenceMode):
    """Indices of entries a receiver may consume next, up to the buffer
    congruence: any entry addressed to it under total reordering, only the
    per-channel head under per-pair FIFO.  One index per (label, payload)
    class to avoid duplicate successors."""
    out = []
    seen = set()
    for i, e in enumerate(entries):
        if e.to != recipient:
            continue
        key = (e.label, format_type(e.payload))
        if key not in seen:
            seen.add(key)
            out.append(i)
        if mode is CongruenceMode.TCP_FIFO:
            break  # only the (sender, recipient)-channel head is reachable
    return out


def context_transitions(g: TypeContext, sigma, r: Reliability,
                        limits: ExploreLimits) -> list:
    """The complete enabled set of (Action, successor) pairs, sorted by
    action rendering for deterministic exploration."""
    out = []
    sigma = set(sigma)
    for key, sbt in g.endpoints:
        session, role = key
        if session not in sigma or sbt.session is None:
            continue
        head = resolve(sbt.session)
        if isinstance(head, Select):
            for arm in head.arms:
                entry = BufEntry(arm.to, arm.label, arm.payload)
                nsbt = SessionBufferType(sbt.buffer + (entry,), arm.cont)
                out.append((SendAct(session, role, arm.to, arm.label, arm.payload),
                            g.with_endpoint(key, nsbt)))
        elif isinstance(head, Branch):
            for arm in head.arms:
                skey = (session, arm.frm)
                ssbt = g.endpoint(skey)
                if ssbt is None or not ssbt.buffer:
                    continue
                for i in _head_reachable(ssbt.buffer, role, limits.mode):
                    e = ssbt.buffer[i]
                    if e.label != arm.label or not type_equal(e.payload, arm.payload):
                        continue
                    ng = g.with_endpoint(skey, SessionBufferType(
                        ssbt.buffer[:i] + ssbt.buffer[i + 1:], ssbt.session))
                    ng = ng.with_endpoint(key, SessionBufferType(sbt.buffer, arm.cont))
                    out.append((ComAct(session, arm.frm, role, arm.label), ng))
            if (limits.relation == FULL and head.timeout is not None
                    and any(arm.frm not in r.get(role) for arm in head.arms)):
                out.append((TimeoutAct(session, role),
                            g.with_endpoint(key, SessionBufferType(sbt.buffer,
                                                                   head.timeout))))
    out.sort(key=lambda p: p[0].render())
    return out


# ---------------------------------------------------------------------------
# graph exploration


@dataclass
class LtsGraph:
    states: list            # state id -> TypeContext (canonical)
    edges: list             # (from id, Action, to id)
    initial: int = 0
    parents: dict = field(default_factory=dict)  # id -> (parent id, Action)

    def successors(self, sid: int) -> list:
        return [(a, t) for f, a, t in self.edges if f == sid]

    def stuck(self, sid: int) -> bool:
        return not any(f == sid for f, _, _ in self.edges)

    def path_to(self, sid: int) -> tuple:
        acts = []
        while sid in self.parents:
            sid, a = self.parents[sid]
            acts.append(a)
        return tuple(reversed(acts))


def _buffer_overflow(g: TypeContext, k: int) -> bool:
    """Whether any per-recipient channel of any sender buffer reaches k."""
    for _, sbt in g.endpoints:
        counts: dict = {}
        for e in sbt.buffer:
            counts[e.to] = counts.get(e.to, 0) + 1
            if counts[e.to] >= k:
                return True
    return False


def explore(g0: TypeContext, sigma, r: Reliability, limits: ExploreLimits,
            order: str = "bfs"):
    """Closure of context_transitions from g0 with canonical-state
    deduplication; returns LtsGraph or Exceeded.  BFS by default, so state
    ids and Exceeded witnesses are minimal-length; a DFS order is available
    for order-independence checks."""
    g0 = canonical_context(g0, limits.mode)
    graph = LtsGraph(states=[g0], edges=[])
    ids = {context_key(g0, limits.mode): 0}
    if limits.max_buffer_len is not None and _buffer_overflow(g0, limits.max_buffer_len):
        return Exceeded("bufferLen", limits.max_buffer_len, (), g0)
    frontier = [0]
    while frontier:
        sid = frontier.pop(0 if order == "bfs" else -1)
        for action, nxt in context_transitions(graph.states[sid], sigma, r, limits):
            nxt = canonical_context(nxt, limits.mode)
            key = context_key(nxt, limits.mode)
            if key in ids:
                graph.edges.append((sid, action, ids[key]))
                continue
            if len(graph.states) >= limits.max_states:
                return Exceeded("maxStates", limits.max_states,
                                graph.path_to(sid) + (action,), nxt)
            nid = len(graph.states)
            ids[key] = nid
            graph.states.append(nxt)
            graph.parents[nid] = (sid, action)
            graph.edges.append((sid, action, nid))
            if (limits.max_buffer_len is not None
                    and _buffer_overflow(nxt, limits.max_buffer_len)):
                return Exceeded("bufferLen", limits.max_buffer_len,
                                graph.path_to(nid), nxt)
            frontier.append(nid)
    return graph


# ---------------------------------------------------------------------------
# export


def action_to_json(a: Action) -> dict:
    if isinstance(a, SendAct):
        return {"kind": "send", "session": a.session, "from": a.frm, "to": a.to,
                "label": a.label, "payload": format_type(a.payload)}
    if isinstance(a, ComAct):
        return {"kind": "com", "session": a.session, "from": a.frm, "to": a.to,
                "label": a.label}
    return {"kind": "timeout", "session": a.session, "role": a.role}


def export_lts(g: LtsGraph, fmt: str = "json") -> str:
    if fmt == "json":
        doc = {
            "initial": g.initial,
            "states": [{"id": i, "ctx": render_context(s), "stuck": g.stuck(i)}
                       for i, s in enumerate(g.states)],
            "edges": [{"from": f, "action": action_to_json(a), "to": t}
                      for f, a, t in g.edges],
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    if fmt == "dot":
        lines = ["digraph lts {"]
        for i, s in enumerate(g.states):
            shape = "doublecircle" if g.stuck(i) else "circle"
            label = render_context(s).replace('"', '\\"')
            lines.append(f'  n{i} [shape={shape}, label="{i}: {label}"];')
        for f, a, t in g.edges:
            lines.append(f'  n{f} -> n{t} [label="{a.render()}"];')
        lines.append("}")
        return "\n".join(lines)
    raise ValueError(f"unknown export format {fmt!r}")
