"""Context transition system: single-rule examples, exploration invariants,
export round-trips."""
import json

from magpi import parse, parse_session_text
from magpi.cli import initial_context
from magpi.context import TypeContext, context_key
from magpi.lts import (ComAct, ExploreLimits, Exceeded, FULL, SEND_COM_ONLY,
                       SendAct, TimeoutAct, context_transitions, explore,
                       export_lts)
from magpi.types import (BufEntry, CongruenceMode, Reliability,
                         SessionBufferType, UNIT)
from tests.conftest import fixture_text

ROLES = {"p", "q", "r"}


def S(text):
    return parse_session_text(text, roles=ROLES)


def ctx(eps):
    return TypeContext.of({}, eps)


def sbt(session=None, *entries):
    return SessionBufferType(tuple(entries), session)


R0 = Reliability.of({"p": set(), "q": set(), "r": set()})
RF = Reliability.fully_reliable(ROLES)


# -- single transitions -------------------------------------------------------


def test_send_appends_to_own_buffer():
    # [DERIVED] a selection step adds the typed message to the sender's
    # buffer component and advances the session.
    g = ctx({("s", "p"): sbt(S("q!a(int).end"))})
    steps = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    assert len(steps) == 1
    act, g2 = steps[0]
    assert isinstance(act, SendAct)
    got = g2.endpoint(("s", "p"))
    assert [e.label for e in got.buffer] == ["a"]


def test_com_consumes_matching_head():
    g = ctx({("s", "p"): sbt(None, BufEntry("q", "a", UNIT)),
             ("s", "q"): sbt(S("p?a().end"))})
    steps = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    assert len(steps) == 1
    act, g2 = steps[0]
    assert isinstance(act, ComAct)
    assert g2.endpoint(("s", "p")) is None or not g2.endpoint(("s", "p")).buffer


def test_com_requires_type_match():
    g = ctx({("s", "p"): sbt(None, BufEntry("q", "a", UNIT)),
             ("s", "q"): sbt(S("p?a(int).end"))})
    steps = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    assert steps == []


def test_com_requires_tracked_session():
    g = ctx({("s", "p"): sbt(None, BufEntry("q", "a", UNIT)),
             ("s", "q"): sbt(S("p?a().end"))})
    assert context_transitions(g, set(), RF, ExploreLimits()) == []


def test_timeout_needs_unreliable_source_and_full_relation():
    g = ctx({("s", "q"): sbt(S("&{ p?a().end, timeout. end }"))})
    # Unreliable source: the timeout fires.
    steps = context_transitions(g, {"s"}, R0, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    assert any(isinstance(a, TimeoutAct) for a, _ in steps)
    # Fully reliable: it must not.
    steps = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    assert steps == []
    # Send/receive-only relation: it must not either.
    steps = context_transitions(
        g, {"s"}, R0, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER,
                                    relation=SEND_COM_ONLY))
    assert steps == []


def test_total_reorder_reaches_deeper_entries():
    # [DERIVED] with reordering, a branch can consume a matching entry that
    # sits behind a message for another recipient; FIFO only exposes the
    # per-recipient head.
    g = ctx({("s", "p"): sbt(None, BufEntry("q", "b", UNIT),
                             BufEntry("q", "a", UNIT)),
             ("s", "q"): sbt(S("p?a().p?b().end"))})
    total = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TOTAL_REORDER, relation=FULL))
    fifo = context_transitions(g, {"s"}, RF, ExploreLimits(mode=CongruenceMode.TCP_FIFO, relation=FULL))
    assert any(isinstance(a, ComAct) and a.label == "a" for a, _ in total)
    assert not any(isinstance(a, ComAct) and a.label == "a" for a, _ in fifo)


# -- exploration --------------------------------------------------------------


def _recount(graph):
    """Oracle: recompute the reachable set by a fresh traversal of edges."""
    seen, todo = {graph.initial}, [graph.initial]
    succ = {}
    for f, _, t in graph.edges:
        succ.setdefault(f, []).append(t)
    while todo:
        n = todo.pop()
        for m in succ.get(n, ()):
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen


def _fixture_graph(name):
    pf = parse(fixture_text(name))
    g0, sess = initial_context(pf)
    return explore(g0, {sess}, pf.reliability, ExploreLimits())


def test_explored_states_are_reachable_and_deduplicated():
    for name in ("ping", "dns"):
        graph = _fixture_graph(name)
        assert _recount(graph) == set(range(len(graph.states)))
        keys = [context_key(s, CongruenceMode.TOTAL_REORDER)
                for s in graph.states]
        assert len(keys) == len(set(keys))


def test_bfs_and_dfs_agree_on_state_set():
    pf = parse(fixture_text("ping"))
    g0, sess = initial_context(pf)
    bfs = explore(g0, {sess}, pf.reliability, ExploreLimits(), order="bfs")
    dfs = explore(g0, {sess}, pf.reliability, ExploreLimits(), order="dfs")
    key = lambda s: context_key(s, CongruenceMode.TOTAL_REORDER)
    assert {key(s) for s in bfs.states} == {key(s) for s in dfs.states}


def test_max_states_limit_trips_with_witness_path():
    g = ctx({("s", "p"): sbt(S("rec t. q!a().t"))})
    out = explore(g, {"s"}, RF, ExploreLimits(max_states=5))
    assert isinstance(out, Exceeded) and out.kind == "maxStates"
    assert out.limit == 5


def test_buffer_limit_trips_with_witness():
    g = ctx({("s", "p"): sbt(S("rec t. q!a().t"))})
    out = explore(g, {"s"}, RF, ExploreLimits(max_buffer_len=3))
    assert isinstance(out, Exceeded) and out.kind == "bufferLen"
    assert len(out.witness) == 3  # three sends reach the bound


def test_fully_reliable_send_com_equals_full():
    # [DERIVED] under R_F the timeout rule never fires, so the full relation
    # and the send/receive-only relation generate the same graph.
    pf = parse(fixture_text("ping"))
    g0, sess = initial_context(pf)
    rf = Reliability.fully_reliable(set(pf.roles))
    full = explore(g0, {sess}, rf, ExploreLimits())
    sc = explore(g0, {sess}, rf,
                 ExploreLimits(relation=SEND_COM_ONLY))
    key = lambda s: context_key(s, CongruenceMode.TOTAL_REORDER)
    assert {key(s) for s in full.states} == {key(s) for s in sc.states}


# -- export -------------------------------------------------------------------


def test_export_json_round_trip():
    graph = _fixture_graph("ping")
    doc = json.loads(export_lts(graph, "json"))
    assert doc["initial"] == 0
    assert len(doc["states"]) == len(graph.states)
    assert len(doc["edges"]) == len(graph.edges)
    assert export_lts(graph, "json") == export_lts(graph, "json")


def test_export_dot_mentions_stuck_states():
    graph = _fixture_graph("ping")
    dot = export_lts(graph, "dot")
    assert dot.startswith("digraph")
    assert "doublecircle" in dot
