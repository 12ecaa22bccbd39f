"""Type-level domain: local session types (as graphs), buffer types,
session-buffer types, reliability maps and the congruences over them.

Recursive types are stored as graphs with explicit back-edges: a ``Rec``
node owns a body and every ``RecRef`` points at its binding ``Rec`` node.
Unfolding is therefore a pointer move and repeated unfolding only ever
visits finitely many nodes.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Span

BASIC_KINDS = ("unit", "int", "bool", "real", "string")


class CongruenceMode(str, enum.Enum):
    TOTAL_REORDER = "total"
    TCP_FIFO = "tcp"


# ---------------------------------------------------------------------------
# session types


class SessionType:
    """Base class for session type graph nodes (identity semantics)."""

    __slots__ = ()


@dataclass(eq=False)
class End(SessionType):
    pass


END = End()


@dataclass(frozen=True)
class Basic:
    kind: str

    def __post_init__(self):
        if self.kind not in BASIC_KINDS:
            raise ValueError(f"unknown basic kind {self.kind!r}")


# A payload / variable type is either a Basic or a SessionType node.
Type = object

UNIT = Basic("unit")


@dataclass(frozen=True)
class SelectArm:
    to: str
    label: str
    payload: Type
    cont: SessionType


@dataclass(frozen=True)
class BranchArm:
    frm: str
    label: str
    payload: Type
    cont: SessionType


@dataclass(eq=False)
class Select(SessionType):
    arms: tuple[SelectArm, ...]


@dataclass(eq=False)
class Branch(SessionType):
    arms: tuple[BranchArm, ...]
    timeout: SessionType | None = None


@dataclass(eq=False)
class Rec(SessionType):
    var: str
    body: SessionType | None = None  # assigned once after construction


@dataclass(eq=False)
class RecRef(SessionType):
    var: str
    target: Rec | None = None  # back-edge, assigned at resolution


def is_basic(t: Type) -> bool:
    return isinstance(t, Basic)


def norm(s: SessionType) -> SessionType:
    """Collapse back-edges: a RecRef stands for its binding Rec node."""
    while isinstance(s, RecRef):
        s = s.target
    return s


def resolve(s: SessionType) -> SessionType:
    """Structural head of a type: unfold Rec nodes and back-edges until a
    Branch, Select or End node is reached (terminates by guardedness)."""
    while True:
        if isinstance(s, RecRef):
            s = s.target
        elif isinstance(s, Rec):
            s = s.body
        else:
            return s


def unfold_once(s: SessionType) -> SessionType:
    """One unfolding step of a recursive type; a constant-size pointer move."""
    if not isinstance(s, Rec):
        raise ValueError("unfold_once requires a recursive type node")
    return s.body


def session_nodes(root: SessionType) -> list[SessionType]:
    """All graph nodes reachable from root, in deterministic DFS order."""
    seen: dict[int, SessionType] = {}
    stack = [root]
    order = []
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen[id(n)] = n
        order.append(n)
        if isinstance(n, Rec):
            stack.append(n.body)
        elif isinstance(n, RecRef):
            stack.append(n.target)
        elif isinstance(n, Select):
            stack.extend(a.cont for a in reversed(n.arms))
        elif isinstance(n, Branch):
            if n.timeout is not None:
                stack.append(n.timeout)
            stack.extend(a.cont for a in reversed(n.arms))
    return order


def validate_session(root: SessionType, span: Span = Span()) -> list[Diagnostic]:
    """Construction-time checks: nonempty and pairwise-distinct arms,
    unguarded recursion, unresolved back-edges."""
    diags: list[Diagnostic] = []
    for node in session_nodes(root):
        if isinstance(node, (Select, Branch)):
            arms = node.arms
            if not arms:
                diags.append(Diagnostic("error", "EmptyArms",
                                        "branching/selection requires at least one arm", span))
            keys = [(a.to if isinstance(a, SelectArm) else a.frm, a.label) for a in arms]
            for k in sorted(set(k for k in keys if keys.count(k) > 1)):
                diags.append(Diagnostic("error", "DuplicateArm",
                                        f"duplicate (role, label) arm {k[0]}!{k[1]}", span))
        elif isinstance(node, RecRef) and node.target is None:
            diags.append(Diagnostic("error", "UnboundRecVar",
                                    f"unbound recursion variable {node.var!r}", span))
        elif isinstance(node, Rec):
            if node.body is None:
                diags.append(Diagnostic("error", "UnboundRecVar",
                                        f"recursion {node.var!r} has no body", span))
            elif _unguarded_ref(node):
                diags.append(Diagnostic("error", "UnguardedRecursion",
                                        f"recursion variable {node.var!r} is not guarded "
                                        "by a branching or selection", span))
    return diags


def _unguarded_ref(rec: Rec) -> bool:
    # A back-edge to `rec` reachable from its body without crossing a
    # Branch/Select node makes the recursion unguarded.
    stack = [rec.body]
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if n is None or id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, RecRef):
            if n.target is rec:
                return True
            stack.append(n.target)
        elif isinstance(n, Rec):
            stack.append(n.body)
        # Branch / Select guard their continuations; End terminates.
    return False


# ---------------------------------------------------------------------------
# equality

def session_equal(a: SessionType, b: SessionType) -> bool:
    """Bisimilarity on type graphs (syntactic congruence generalised to the
    graph representation): equal up to unfolding of recursion."""
    memo: set[tuple[int, int]] = set()

    def go(x, y) -> bool:
        x, y = resolve(x), resolve(y)
        if x is y:
            return True
        key = (id(x), id(y))
        if key in memo:
            return True
        memo.add(key)
        if isinstance(x, End) and isinstance(y, End):
            return True
        if isinstance(x, Select) and isinstance(y, Select):
            xa = sorted(x.arms, key=lambda a: (a.to, a.label))
            ya = sorted(y.arms, key=lambda a: (a.to, a.label))
            return len(xa) == len(ya) and all(
                p.to == q.to and p.label == q.label
                and type_equal(p.payload, q.payload) and go(p.cont, q.cont)
                for p, q in zip(xa, ya))
        if isinstance(x, Branch) and isinstance(y, Branch):
            if (x.timeout is None) != (y.timeout is None):
                return False
            if x.timeout is not None and not go(x.timeout, y.timeout):
                return False
            xa = sorted(x.arms, key=lambda a: (a.frm, a.label))
            ya = sorted(y.arms, key=lambda a: (a.frm, a.label))
            return len(xa) == len(ya) and all(
                p.frm == q.frm and p.label == q.label
                and type_equal(p.payload, q.payload) and go(p.cont, q.cont)
                for p, q in zip(xa, ya))
        return False

    return go(a, b)


def session_iso(a: SessionType, b: SessionType) -> bool:
    """Exact graph-shape equality: same constructors, same arm order, the
    same back-edge structure, ignoring recursion variable names.  Stricter
    than bisimilarity; this is the round-trip notion of equality."""
    pairs: dict[int, int] = {}

    def go(x, y) -> bool:
        if isinstance(x, RecRef) or isinstance(y, RecRef):
            if not (isinstance(x, RecRef) and isinstance(y, RecRef)):
                return False
            # a matched back-edge must point to already-paired binders
            return pairs.get(id(x.target)) == id(y.target)
        if isinstance(x, Rec) and isinstance(y, Rec):
            pairs[id(x)] = id(y)
            return go(x.body, y.body)
        if isinstance(x, End) and isinstance(y, End):
            return True
        if isinstance(x, Select) and isinstance(y, Select):
            return len(x.arms) == len(y.arms) and all(
                p.to == q.to and p.label == q.label
                and type_iso(p.payload, q.payload) and go(p.cont, q.cont)
                for p, q in zip(x.arms, y.arms))
        if isinstance(x, Branch) and isinstance(y, Branch):
            if (x.timeout is None) != (y.timeout is None):
                return False
            if x.timeout is not None and not go(x.timeout, y.timeout):
                return False
            return len(x.arms) == len(y.arms) and all(
                p.frm == q.frm and p.label == q.label
                and type_iso(p.payload, q.payload) and go(p.cont, q.cont)
                for p, q in zip(x.arms, y.arms))
        return False

    return go(a, b)


def type_iso(a: Type, b: Type) -> bool:
    if isinstance(a, Basic) or isinstance(b, Basic):
        return a == b
    return session_iso(a, b)


def type_equal(a: Type, b: Type) -> bool:
    if isinstance(a, Basic) or isinstance(b, Basic):
        return a == b
    return session_equal(a, b)


def format_session(s: SessionType) -> str:
    """Deterministic rendering; recursion variables are renamed by binding
    depth so the text is independent of source naming."""
    names: dict[int, str] = {}

    def go(n: SessionType, depth: int) -> str:
        if isinstance(n, RecRef):
            return names.get(id(n.target), n.var)
        if isinstance(n, Rec):
            name = f"t{depth}"
            names[id(n)] = name
            body = go(n.body, depth + 1)
            return f"rec {name}. {body}"
        if isinstance(n, End):
            return "end"
        if isinstance(n, Select):
            parts = [f"{a.to}!{a.label}({format_type_in(a.payload, depth)}). {go(a.cont, depth)}"
                     for a in n.arms]
            if len(parts) == 1:
                return parts[0]
            return "+{ " + ", ".join(parts) + " }"
        if isinstance(n, Branch):
            parts = [f"{a.frm}?{a.label}({format_type_in(a.payload, depth)}). {go(a.cont, depth)}"
                     for a in n.arms]
            if n.timeout is not None:
                parts.append(f"timeout. {go(n.timeout, depth)}")
            return "&{ " + ", ".join(parts) + " }"
        raise TypeError(f"unexpected node {n!r}")

    def format_type_in(t: Type, depth: int) -> str:
        if isinstance(t, Basic):
            return t.kind
        return go(t, depth)

    return go(s, 0)


def format_type(t: Type) -> str:
    if isinstance(t, Basic):
        return t.kind
    return format_session(t)


def type_digest(t: Type) -> str:
    """Fixed total order key for payload types: (kind tag, rendered form)."""
    if isinstance(t, Basic):
        return "B:" + t.kind
    return "S:" + format_session(t)


# ---------------------------------------------------------------------------
# buffer types


@dataclass(frozen=True)
class BufEntry:
    """One type-level in-transit message of a sender endpoint buffer."""

    to: str
    label: str
    payload: Type


BufferType = tuple  # tuple[BufEntry, ...]


def _entry_key(e: BufEntry) -> tuple:
    return (e.to, e.label, type_digest(e.payload))


def canonical_buffer_type(entries: tuple, mode: CongruenceMode) -> tuple:
    """Canonical representative of a buffer type under the mode's congruence.

    TotalReorder sorts by a fixed total order; TcpFifo stably partitions by
    recipient (the per-recipient order is observable) with recipients sorted.
    """
    if mode is CongruenceMode.TOTAL_REORDER:
        return tuple(sorted(entries, key=_entry_key))
    groups: dict[str, list[BufEntry]] = {}
    for e in entries:
        groups.setdefault(e.to, []).append(e)
    return tuple(itertools.chain.from_iterable(groups[k] for k in sorted(groups)))


def buffer_type_congruent(a: tuple, b: tuple, mode: CongruenceMode) -> bool:
    if len(a) != len(b):
        return False
    ca = canonical_buffer_type(a, mode)
    cb = canonical_buffer_type(b, mode)
    return all(x.to == y.to and x.label == y.label and type_equal(x.payload, y.payload)
               for x, y in zip(ca, cb))


# ---------------------------------------------------------------------------
# session-buffer types


@dataclass(frozen=True)
class SessionBufferType:
    """tau ::= M | S | <M; S>.  An empty buffer component is identified with
    an absent one; at least one component must be meaningful."""

    buffer: tuple = ()
    session: SessionType | None = None

    def __post_init__(self):
        if self.session is None and self.buffer is None:
            raise ValueError("session-buffer type needs a component")

    @property
    def has_session(self) -> bool:
        return self.session is not None


def sbt_congruent(a: SessionBufferType, b: SessionBufferType,
                  mode: CongruenceMode) -> bool:
    """Type congruence on session-buffer types: buffer components congruent
    per mode, session components bisimilar."""
    if (a.session is None) != (b.session is None):
        return False
    if a.session is not None and not session_equal(a.session, b.session):
        return False
    return buffer_type_congruent(a.buffer, b.buffer, mode)


# ---------------------------------------------------------------------------
# reliability


@dataclass(frozen=True)
class Reliability:
    """Total map from each role to the set of roles it trusts not to fail."""

    sets: tuple  # tuple[(role, frozenset[str]), ...] sorted by role

    @staticmethod
    def of(mapping: dict) -> "Reliability":
        items = tuple(sorted((r, frozenset(v)) for r, v in mapping.items()))
        for role, rs in items:
            if role in rs:
                raise ValueError(f"role {role} cannot be in its own reliability set")
        return Reliability(items)

    @staticmethod
    def fully_reliable(roles) -> "Reliability":
        roles = sorted(roles)
        return Reliability.of({r: frozenset(x for x in roles if x != r) for r in roles})

    @staticmethod
    def fully_unreliable(roles) -> "Reliability":
        return Reliability.of({r: frozenset() for r in roles})

    def reliable(self, viewpoint: str, other: str) -> bool:
        return other in self.get(viewpoint)

    def get(self, role: str) -> frozenset:
        for r, s in self.sets:
            if r == role:
                return s
        return frozenset()

    @property
    def roles(self) -> tuple:
        return tuple(r for r, _ in self.sets)
