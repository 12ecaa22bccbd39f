"""Process syntax: values, processes, well-formedness and structural
congruence.

Processes are immutable and hashable so explored states can be deduplicated.
Source spans ride along as non-comparing fields; two processes that differ
only in where they were written are equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import Diagnostic, Span
from .types import (BASIC_KINDS, CongruenceMode, SessionType, Type,
                    format_type, type_digest)

# ---------------------------------------------------------------------------
# values


class Value:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Value):
    """Basic literal; ``value`` is None for unit."""

    kind: str
    value: object = None

    def __post_init__(self):
        if self.kind not in BASIC_KINDS:
            raise ValueError(f"unknown literal kind {self.kind!r}")


UNIT_VAL = Lit("unit")


@dataclass(frozen=True)
class Endpoint(Value):
    session: str
    role: str


@dataclass(frozen=True)
class Var(Value):
    name: str


def render_value(v: Value) -> str:
    if isinstance(v, Lit):
        if v.kind == "unit":
            return "()"
        if v.kind == "bool":
            return "true" if v.value else "false"
        if v.kind == "string":
            return '"' + str(v.value).replace("\\", "\\\\").replace('"', '\\"') + '"'
        return repr(v.value)
    if isinstance(v, Endpoint):
        return f"{v.session}[{v.role}]"
    return v.name


# ---------------------------------------------------------------------------
# processes


class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Inaction(Process):
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Send(Process):
    """Single selection prefix ch!to:label(value).cont."""

    ch: Value
    to: str
    label: str
    value: Value
    cont: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class RecvArm:
    frm: str
    label: str
    var: str
    var_type: Type
    cont: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Branch(Process):
    """External branching ch&{p?l(x:T).P, ..., timeout.Q}."""

    ch: Value
    arms: tuple  # tuple[RecvArm, ...]
    timeout: Process | None = None
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Choice(Process):
    left: Process
    right: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Restriction(Process):
    """new s:{p: S_p, ...} in body  (annotations sorted by role)."""

    session: str
    annotations: tuple  # tuple[(role, SessionType), ...]
    body: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Def(Process):
    name: str
    params: tuple  # tuple[(var, Type), ...]
    body: Process
    cont: Process
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class Call(Process):
    name: str
    args: tuple  # tuple[Value, ...]
    span: Span = field(default=Span(), compare=False)


@dataclass(frozen=True)
class BufMsg:
    frm: str
    to: str
    label: str
    value: Value


@dataclass(frozen=True)
class Buffer(Process):
    """Runtime session buffer s:[(p,q)!l(v), ...] (oldest first)."""

    session: str
    entries: tuple  # tuple[BufMsg, ...]
    span: Span = field(default=Span(), compare=False)


# ---------------------------------------------------------------------------
# traversal helpers


def children(p: Process) -> tuple:
    if isinstance(p, Send):
        return (p.cont,)
    if isinstance(p, Branch):
        kids = tuple(a.cont for a in p.arms)
        return kids + ((p.timeout,) if p.timeout is not None else ())
    if isinstance(p, (Choice, Par)):
        return (p.left, p.right)
    if isinstance(p, Restriction):
        return (p.body,)
    if isinstance(p, Def):
        return (p.body, p.cont)
    return ()


def free_vars(p: Process) -> frozenset:
    """Free value variables of a process."""

    def vv(v: Value) -> frozenset:
        return frozenset([v.name]) if isinstance(v, Var) else frozenset()

    if isinstance(p, Send):
        return vv(p.ch) | vv(p.value) | free_vars(p.cont)
    if isinstance(p, Branch):
        out = vv(p.ch)
        for a in p.arms:
            out |= free_vars(a.cont) - {a.var}
        if p.timeout is not None:
            out |= free_vars(p.timeout)
        return out
    if isinstance(p, (Choice, Par)):
        return free_vars(p.left) | free_vars(p.right)
    if isinstance(p, Restriction):
        return free_vars(p.body)
    if isinstance(p, Def):
        bound = {v for v, _ in p.params}
        return (free_vars(p.body) - bound) | free_vars(p.cont)
    if isinstance(p, Call):
        out = frozenset()
        for a in p.args:
            out |= vv(a)
        return out
    if isinstance(p, Buffer):
        out = frozenset()
        for e in p.entries:
            out |= vv(e.value)
        return out
    return frozenset()


def free_sessions(p: Process) -> frozenset:
    """Session names occurring free (as endpoints or buffers)."""

    def vs(v: Value) -> frozenset:
        return frozenset([v.session]) if isinstance(v, Endpoint) else frozenset()

    if isinstance(p, Send):
        return vs(p.ch) | vs(p.value) | free_sessions(p.cont)
    if isinstance(p, Branch):
        out = vs(p.ch)
        for a in p.arms:
            out |= free_sessions(a.cont)
        if p.timeout is not None:
            out |= free_sessions(p.timeout)
        return out
    if isinstance(p, (Choice, Par)):
        return free_sessions(p.left) | free_sessions(p.right)
    if isinstance(p, Restriction):
        return free_sessions(p.body) - {p.session}
    if isinstance(p, Def):
        return free_sessions(p.body) | free_sessions(p.cont)
    if isinstance(p, Call):
        out = frozenset()
        for a in p.args:
            out |= vs(a)
        return out
    if isinstance(p, Buffer):
        out = frozenset([p.session])
        for e in p.entries:
            out |= vs(e.value)
        return out
    return frozenset()


def subst(p: Process, sub: dict) -> Process:
    """Capture-avoiding substitution of values for free variables."""
    if not sub:
        return p

    def sv(v: Value) -> Value:
        if isinstance(v, Var) and v.name in sub:
            return sub[v.name]
        return v

    if isinstance(p, Inaction):
        return p
    if isinstance(p, Send):
        return replace(p, ch=sv(p.ch), value=sv(p.value), cont=subst(p.cont, sub))
    if isinstance(p, Branch):
        arms = tuple(
            replace(a, cont=subst(a.cont, {k: v for k, v in sub.items() if k != a.var}))
            for a in p.arms)
        to = subst(p.timeout, sub) if p.timeout is not None else None
        return replace(p, ch=sv(p.ch), arms=arms, timeout=to)
    if isinstance(p, (Choice, Par)):
        return replace(p, left=subst(p.left, sub), right=subst(p.right, sub))
    if isinstance(p, Restriction):
        return replace(p, body=subst(p.body, sub))
    if isinstance(p, Def):
        inner = {k: v for k, v in sub.items() if k not in {v0 for v0, _ in p.params}}
        return replace(p, body=subst(p.body, inner), cont=subst(p.cont, sub))
    if isinstance(p, Call):
        return replace(p, args=tuple(sv(a) for a in p.args))
    if isinstance(p, Buffer):
        return replace(p, entries=tuple(replace(e, value=sv(e.value)) for e in p.entries))
    raise TypeError(f"unexpected process {p!r}")


# ---------------------------------------------------------------------------
# well-formedness


def well_formed(p: Process, defs: dict | None = None) -> list[Diagnostic]:
    """Static sanity of a closed system: buffers appear exactly once per
    restricted session, endpoint roles are annotated, branch arms are
    pairwise distinct, calls are in scope with matching arity.  ``defs``
    pre-seeds visible process definitions (name -> arity) so top-level
    declarations may be mutually recursive."""
    diags: list[Diagnostic] = []

    def buffer_sessions(q: Process) -> list[str]:
        if isinstance(q, Buffer):
            return [q.session]
        if isinstance(q, Restriction):
            return [s for s in buffer_sessions(q.body) if s != q.session]
        out = []
        for c in children(q):
            out.extend(buffer_sessions(c))
        return out

    def endpoints(q: Process) -> list[Endpoint]:
        out = []

        def visit_value(v):
            if isinstance(v, Endpoint):
                out.append(v)

        def walk(r):
            if isinstance(r, Send):
                visit_value(r.ch)
                visit_value(r.value)
            elif isinstance(r, Branch):
                visit_value(r.ch)
            elif isinstance(r, Call):
                for a in r.args:
                    visit_value(a)
            elif isinstance(r, Buffer):
                for e in r.entries:
                    visit_value(e.value)
            for c in children(r):
                walk(c)

        walk(q)
        return out

    def walk(q: Process, defs: dict):
        if isinstance(q, Restriction):
            roles = [r for r, _ in q.annotations]
            for r in sorted({r for r in roles if roles.count(r) > 1}):
                diags.append(Diagnostic("error", "DuplicateRole",
                                        f"role {r} annotated twice on session {q.session}",
                                        q.span))
            bufs = buffer_sessions(q.body)
            n = sum(1 for s in bufs if s == q.session)
            if n == 0:
                diags.append(Diagnostic("error", "MissingBuffer",
                                        f"session {q.session} has no buffer process",
                                        q.span))
            elif n > 1:
                diags.append(Diagnostic("error", "DuplicateBuffer",
                                        f"session {q.session} has {n} buffer processes",
                                        q.span))
            annotated = set(roles)
            for ep in endpoints(q.body):
                if ep.session == q.session and ep.role not in annotated:
                    diags.append(Diagnostic("error", "UnknownRole",
                                            f"endpoint {ep.session}[{ep.role}] uses a role "
                                            "missing from the session annotation", q.span))
            walk(q.body, defs)
        elif isinstance(q, Branch):
            keys = [(a.frm, a.label) for a in q.arms]
            for k in sorted({k for k in keys if keys.count(k) > 1}):
                diags.append(Diagnostic("error", "DuplicateArm",
                                        f"duplicate receive arm {k[0]}?{k[1]}", q.span))
            if not q.arms:
                diags.append(Diagnostic("error", "EmptyArms",
                                        "branching requires at least one receive arm",
                                        q.span))
            for c in children(q):
                walk(c, defs)
        elif isinstance(q, Def):
            inner = dict(defs)
            inner[q.name] = len(q.params)
            walk(q.body, inner)
            walk(q.cont, inner)
        elif isinstance(q, Call):
            if q.name not in defs:
                diags.append(Diagnostic("error", "UnknownDef",
                                        f"call to undefined process {q.name}", q.span))
            elif defs[q.name] != len(q.args):
                diags.append(Diagnostic("error", "ArityMismatch",
                                        f"{q.name} expects {defs[q.name]} argument(s), "
                                        f"got {len(q.args)}", q.span))
        else:
            for c in children(q):
                walk(c, defs)

    walk(p, dict(defs) if defs else {})
    for v in sorted(free_vars(p)):
        diags.append(Diagnostic("error", "UnboundVar",
                                f"unbound variable {v} in system"))
    return diags


# ---------------------------------------------------------------------------
# structural congruence


def canonical_process(p: Process, mode: CongruenceMode = CongruenceMode.TOTAL_REORDER) -> Process:
    """Normal form under structural congruence: parallel and choice are
    flattened, sorted and stripped of inaction units; buffer entries are put
    in the mode's canonical order (per sender, since entries of one buffer
    share a session but not a sender channel)."""
    if isinstance(p, Send):
        return replace(p, cont=canonical_process(p.cont, mode))
    if isinstance(p, Branch):
        arms = tuple(sorted(
            (replace(a, cont=canonical_process(a.cont, mode)) for a in p.arms),
            key=lambda a: (a.frm, a.label)))
        to = canonical_process(p.timeout, mode) if p.timeout is not None else None
        return replace(p, arms=arms, timeout=to)
    if isinstance(p, Par):
        parts = []

        def flat(q):
            if isinstance(q, Par):
                flat(q.left)
                flat(q.right)
            elif not isinstance(q, Inaction):
                parts.append(canonical_process(q, mode))

        flat(p)
        if not parts:
            return Inaction()
        parts.sort(key=render_process)
        out = parts[0]
        for q in parts[1:]:
            out = Par(out, q)
        return out
    if isinstance(p, Choice):
        parts = []

        def flatc(q):
            if isinstance(q, Choice):
                flatc(q.left)
                flatc(q.right)
            else:
                parts.append(canonical_process(q, mode))

        flatc(p)
        parts.sort(key=render_process)
        out = parts[0]
        for q in parts[1:]:
            out = Choice(out, q)
        return out
    if isinstance(p, Restriction):
        return replace(p, annotations=tuple(sorted(p.annotations, key=lambda a: a[0])),
                       body=canonical_process(p.body, mode))
    if isinstance(p, Def):
        return replace(p, body=canonical_process(p.body, mode),
                       cont=canonical_process(p.cont, mode))
    if isinstance(p, Buffer):
        return replace(p, entries=canonical_buffer_entries(p.entries, mode))
    return p


def canonical_buffer_entries(entries: tuple, mode: CongruenceMode) -> tuple:
    """Canonical order of runtime buffer entries.  TotalReorder sorts fully;
    TcpFifo keeps each (sender, recipient) channel in order, adjacent entries
    of distinct channels may swap, so a stable partition by channel (channels
    sorted) is canonical."""
    if mode is CongruenceMode.TOTAL_REORDER:
        return tuple(sorted(entries, key=lambda e: (e.frm, e.to, e.label,
                                                    render_value(e.value))))
    groups: dict = {}
    for e in entries:
        groups.setdefault((e.frm, e.to), []).append(e)
    out = []
    for k in sorted(groups):
        out.extend(groups[k])
    return tuple(out)


def structural_congruent(a: Process, b: Process,
                         mode: CongruenceMode = CongruenceMode.TOTAL_REORDER) -> bool:
    return canonical_process(a, mode) == canonical_process(b, mode)


def is_inactive(p: Process) -> bool:
    """Whether a process is structurally congruent to inaction.  Terminated
    sessions may leave a restriction over a buffer behind; that residue still
    counts as inactive."""
    q = canonical_process(p)
    if isinstance(q, Inaction):
        return True
    if isinstance(q, Restriction):
        return is_inactive(q.body)
    if isinstance(q, Buffer):
        return True
    if isinstance(q, Par):
        return is_inactive(q.left) and is_inactive(q.right)
    return False


# ---------------------------------------------------------------------------
# rendering (used for canonical sorting and digests; the surface printer in
# pretty.py round-trips through the parser)


def render_process(p: Process) -> str:
    if isinstance(p, Inaction):
        return "0"
    if isinstance(p, Send):
        return (f"{render_value(p.ch)}!{p.to}:{p.label}({render_value(p.value)})."
                f"{render_process(p.cont)}")
    if isinstance(p, Branch):
        parts = [f"{a.frm}?{a.label}({a.var}:{format_type(a.var_type)})."
                 f"{render_process(a.cont)}" for a in p.arms]
        if p.timeout is not None:
            parts.append(f"timeout.{render_process(p.timeout)}")
        return f"{render_value(p.ch)}&{{{', '.join(parts)}}}"
    if isinstance(p, Choice):
        return f"({render_process(p.left)} + {render_process(p.right)})"
    if isinstance(p, Par):
        return f"({render_process(p.left)} | {render_process(p.right)})"
    if isinstance(p, Restriction):
        anns = ", ".join(f"{r}: {format_type(t)}" for r, t in p.annotations)
        return f"new {p.session}:{{{anns}}} in ({render_process(p.body)})"
    if isinstance(p, Def):
        ps = ", ".join(f"{v}: {format_type(t)}" for v, t in p.params)
        return (f"def {p.name}({ps}) = {render_process(p.body)} in "
                f"({render_process(p.cont)})")
    if isinstance(p, Call):
        return f"{p.name}({', '.join(render_value(a) for a in p.args)})"
    if isinstance(p, Buffer):
        es = ", ".join(f"({e.frm},{e.to})!{e.label}({render_value(e.value)})"
                       for e in p.entries)
        return f"{p.session}:[{es}]"
    raise TypeError(f"unexpected process {p!r}")
