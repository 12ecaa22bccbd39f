"""Decision procedures for type-level properties over the context LTS:
safety, per-pair-FIFO safety, deadlock-freedom, termination,
never-termination, liveness, communication-safety under full reliability,
and buffer boundedness."""
from __future__ import annotations

from dataclasses import dataclass, field

from .context import TypeContext, split_end_gc
from .lts import (Action, ComAct, Exceeded, ExploreLimits, FULL, LtsGraph,
                  SEND_COM_ONLY, action_to_json, explore)
from .types import (Branch, CongruenceMode, Reliability, Select,
                    session_nodes, type_equal)

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: str
    reason: str = ""
    witness: tuple = ()  # replayable action path from the initial context
    limit: int | None = None

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def to_json(self) -> dict:
        out = {"verdict": self.status}
        if self.reason:
            out["reason"] = self.reason
        if self.status == VIOLATED:
            out["witness"] = [action_to_json(a) for a in self.witness]
        if self.limit is not None:
            out["limit"] = self.limit
        return out


def _inconclusive(exc: Exceeded) -> Verdict:
    return Verdict(INCONCLUSIVE, reason=exc.kind, limit=exc.limit)


# ---------------------------------------------------------------------------
# safety


def _branch_endpoints(g: TypeContext):
    for key, sbt in g.endpoints:
        if sbt.session is None:
            continue
        from .types import resolve
        head = resolve(sbt.session)
        if isinstance(head, Branch):
            yield key, sbt, head


def _receivable(buffer, recipient, mode: CongruenceMode):
    """Entries a receiver could take next: under reordering every message
    addressed to it, under per-pair FIFO only the channel head."""
    mine = [e for e in buffer if e.to == recipient]
    if mode == CongruenceMode.TCP_FIFO:
        return mine[:1]
    return mine


def _state_safety_failure(g: TypeContext, r: Reliability,
                          mode: CongruenceMode) -> str | None:
    """SP1/SP2/SP-Com on a single context; None when satisfied.  SP-Com is
    relative to the congruence mode because it constrains exactly the
    messages a reception could observe next."""
    for (session, role), sbt, head in _branch_endpoints(g):
        rset = r.get(role)
        if head.timeout is None:
            if any(arm.frm not in rset for arm in head.arms):
                return "SP1"
        else:
            if all(arm.frm in rset for arm in head.arms):
                return "SP2"
        for arm in head.arms:
            sender = g.endpoint((session, arm.frm))
            if sender is None:
                continue
            for e in _receivable(sender.buffer, role, mode):
                if (e.label == arm.label
                        and not type_equal(e.payload, arm.payload)):
                    return "SP-Com"
    return None


def _static_safety_holds(g0: TypeContext, r: Reliability) -> bool:
    """Sound over-approximation used when exploration trips a limit: every
    branching node anywhere in any endpoint's type graph must satisfy
    SP1/SP2, and every (selection arm, matching branch arm) pair across
    endpoint graphs — plus initial buffer entries — must agree on payload
    types.  Passing certifies safety of all reachable contexts."""
    graphs = {key: sbt.session for key, sbt in g0.endpoints if sbt.session is not None}
    for (session, role), s in graphs.items():
        rset = r.get(role)
        for node in session_nodes(s):
            if not isinstance(node, Branch):
                continue
            if node.timeout is None and any(a.frm not in rset for a in node.arms):
                return False
            if node.timeout is not None and all(a.frm in rset for a in node.arms):
                return False
    # all message sources a receiver may observe, per (sender, recipient):
    # selection arms anywhere in the sender's type graph plus any initial
    # in-transit entries (the sender binding may be buffer-only).
    for (session, sender), sbt in g0.endpoints:
        emissions = ([a for n in session_nodes(sbt.session)
                      if isinstance(n, Select) for a in n.arms]
                     if sbt.session is not None else [])
        entries = list(sbt.buffer)
        for (s2, recv), t in graphs.items():
            if s2 != session or recv == sender:
                continue
            for node in session_nodes(t):
                if not isinstance(node, Branch):
                    continue
                for arm in node.arms:
                    if arm.frm != sender:
                        continue
                    for em in emissions:
                        if (em.to == recv and em.label == arm.label
                                and not type_equal(em.payload, arm.payload)):
                            return False
                    for e in entries:
                        if (e.to == recv and e.label == arm.label
                                and not type_equal(e.payload, arm.payload)):
                            return False
    return True


def check_safety(g0: TypeContext, sigma, r: Reliability,
                 limits: ExploreLimits) -> Verdict:
    # Cheap sound over-approximation first: if every branch node in every
    # endpoint's type graph satisfies the reliability side conditions and
    # all label-compatible send/receive pairs agree on payload types, the
    # property holds in every reachable state without exploring any.
    if _static_safety_holds(g0, r):
        return Verdict(HOLDS, reason="static")
    graph = explore(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    for sid, state in enumerate(graph.states):
        fail = _state_safety_failure(state, r, limits.mode)
        if fail is not None:
            return Verdict(VIOLATED, reason=fail, witness=graph.path_to(sid))
    return Verdict(HOLDS)


def check_tcp_safety(g0: TypeContext, sigma, limits: ExploreLimits) -> Verdict:
    """Per-pair FIFO safety over the send/com-only relation: whenever a
    receiver branches on messages from p, the (p, receiver)-channel head (if
    any) must match some arm from p on both label and payload type.  The
    base safety conditions are included, evaluated under the FIFO congruence,
    so this property is strictly stronger than the reordering one."""
    limits = ExploreLimits(limits.max_states, limits.max_buffer_len,
                           CongruenceMode.TCP_FIFO, SEND_COM_ONLY)
    r = Reliability.fully_reliable({k[1] for k, _ in g0.endpoints})
    graph = explore(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    for sid, state in enumerate(graph.states):
        fail = _state_safety_failure(state, r, limits.mode)
        if fail is not None:
            return Verdict(VIOLATED, reason=fail, witness=graph.path_to(sid))
        for (session, role), sbt, head in _branch_endpoints(state):
            for frm in sorted({a.frm for a in head.arms}):
                sender = state.endpoint((session, frm))
                if sender is None:
                    continue
                hd = next((e for e in sender.buffer if e.to == role), None)
                if hd is None:
                    continue
                if not any(a.frm == frm and a.label == hd.label
                           and type_equal(a.payload, hd.payload)
                           for a in head.arms):
                    return Verdict(VIOLATED, reason="TCP",
                                   witness=graph.path_to(sid))
    return Verdict(HOLDS)


# ---------------------------------------------------------------------------
# progress properties


def _explored(g0, sigma, r, limits):
    return explore(g0, sigma, r, limits)


def check_deadlock_free(g0: TypeContext, sigma, r: Reliability,
                        limits: ExploreLimits,
                        graph: LtsGraph | None = None) -> Verdict:
    graph = graph or _explored(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    outgoing = {f for f, _, _ in graph.edges}
    for sid, state in enumerate(graph.states):
        if sid in outgoing:
            continue
        ok, reason = split_end_gc(state)
        if not ok:
            return Verdict(VIOLATED, reason=f"Deadlock: {reason}",
                           witness=graph.path_to(sid))
    return Verdict(HOLDS)


def check_terminating(g0: TypeContext, sigma, r: Reliability,
                      limits: ExploreLimits) -> Verdict:
    graph = _explored(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    df = check_deadlock_free(g0, sigma, r, limits, graph=graph)
    if not df.holds:
        return df
    # cycle detection; a reachable cycle is a non-terminating lasso
    succ: dict = {}
    for f, a, t in graph.edges:
        succ.setdefault(f, []).append((a, t))
    color = {}

    def dfs(u):
        color[u] = 1
        for a, v in succ.get(u, []):
            if color.get(v, 0) == 1:
                return graph.path_to(u) + (a,)
            if color.get(v, 0) == 0:
                w = dfs(v)
                if w is not None:
                    return w
        color[u] = 2
        return None

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, len(graph.states) * 2 + 100))
    try:
        lasso = dfs(graph.initial)
    finally:
        sys.setrecursionlimit(old)
    if lasso is not None:
        return Verdict(VIOLATED, reason="Cycle", witness=lasso)
    return Verdict(HOLDS)


def check_never_terminating(g0: TypeContext, sigma, r: Reliability,
                            limits: ExploreLimits) -> Verdict:
    graph = _explored(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    outgoing = {f for f, _, _ in graph.edges}
    for sid in range(len(graph.states)):
        if sid not in outgoing:
            return Verdict(VIOLATED, reason="Terminal", witness=graph.path_to(sid))
    return Verdict(HOLDS)


def check_live(g0: TypeContext, sigma, r: Reliability,
               limits: ExploreLimits) -> Verdict:
    """A timeout-less branching endpoint must always be able to eventually
    take one of its arms: from every state where it waits, some state with
    an enabled communication for that endpoint is reachable.  Branches with
    timeouts are exempt (their timeout arm is always available)."""
    graph = _explored(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    preds: dict = {}
    for f, _, t in graph.edges:
        preds.setdefault(t, set()).add(f)
    # endpoints with at least one timeout-less waiting state
    obligations: dict = {}
    for sid, state in enumerate(graph.states):
        for key, _, head in _branch_endpoints(state):
            if head.timeout is None:
                obligations.setdefault(key, []).append(sid)
    for key in sorted(obligations):
        session, role = key
        good = {f for f, a, _ in graph.edges
                if isinstance(a, ComAct) and a.session == session and a.to == role}
        # backward closure: states that can reach a communication for key
        closed = set(good)
        work = list(good)
        while work:
            u = work.pop()
            for v in preds.get(u, ()):
                if v not in closed:
                    closed.add(v)
                    work.append(v)
        for sid in obligations[key]:
            if sid not in closed:
                return Verdict(VIOLATED,
                               reason=f"Live: {session}[{role}] can never receive",
                               witness=graph.path_to(sid))
    return Verdict(HOLDS)


def check_comm_safe_RF(g0: TypeContext, sigma, limits: ExploreLimits) -> Verdict:
    """Under the fully reliable map (no timeout is ever enabled), every
    stuck state must have all buffers drained."""
    r = Reliability.fully_reliable({k[1] for k, _ in g0.endpoints})
    graph = _explored(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return _inconclusive(graph)
    outgoing = {f for f, _, _ in graph.edges}
    for sid, state in enumerate(graph.states):
        if sid in outgoing:
            continue
        for (session, role), sbt in state.endpoints:
            if sbt.buffer:
                return Verdict(VIOLATED,
                               reason=f"CommRF: orphan message in {session}[{role}]",
                               witness=graph.path_to(sid))
    return Verdict(HOLDS)


# ---------------------------------------------------------------------------
# boundedness


def check_bound_k(g0: TypeContext, sigma, r: Reliability, k: int,
                  mode: CongruenceMode = CongruenceMode.TOTAL_REORDER) -> Verdict:
    """All reachable per-recipient channel buffers stay strictly below k.
    Total: bounded buffers over finitely many type positions make the
    reachable set finite, so exploration always completes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    limits = ExploreLimits(max_states=10**9, max_buffer_len=k, mode=mode)
    graph = explore(g0, sigma, r, limits)
    if isinstance(graph, Exceeded):
        return Verdict(VIOLATED, reason=f"bound_{k}", witness=graph.witness)
    return Verdict(HOLDS)


def check_bounded(g0: TypeContext, sigma, r: Reliability, k_max: int,
                  mode: CongruenceMode = CongruenceMode.TOTAL_REORDER):
    """Sweep k = 1..k_max; Holds with the minimal k, else Inconclusive."""
    for k in range(1, k_max + 1):
        v = check_bound_k(g0, sigma, r, k, mode)
        if v.holds:
            return Verdict(HOLDS), k
    return Verdict(INCONCLUSIVE, reason="unbounded up to probe", limit=k_max), None
