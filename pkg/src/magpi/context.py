"""Typing contexts: variable and endpoint bindings, composition, the end
and gc predicates, and type-level message insertion."""
from __future__ import annotations

from dataclasses import dataclass

from .types import (Basic, BufEntry, CongruenceMode, End, Rec, RecRef,
                    SessionBufferType, SessionType, Type, canonical_buffer_type,
                    format_type, is_basic, resolve, session_equal, type_digest)


@dataclass(frozen=True)
class TypeContext:
    """Γ: sorted, immutable bindings.  Endpoint keys are (session, role)."""

    vars: tuple = ()       # tuple[(name, Type), ...] sorted by name
    endpoints: tuple = ()  # tuple[((session, role), SessionBufferType), ...] sorted

    @staticmethod
    def of(var_bindings: dict | None = None,
           endpoint_bindings: dict | None = None) -> "TypeContext":
        vs = tuple(sorted((var_bindings or {}).items(), key=lambda kv: kv[0]))
        es = tuple(sorted((endpoint_bindings or {}).items(), key=lambda kv: kv[0]))
        return TypeContext(vs, es)

    def var(self, name: str):
        for n, t in self.vars:
            if n == name:
                return t
        return None

    def endpoint(self, key: tuple):
        for k, sbt in self.endpoints:
            if k == key:
                return sbt
        return None

    def with_endpoint(self, key: tuple, sbt: SessionBufferType) -> "TypeContext":
        es = {k: v for k, v in self.endpoints}
        es[key] = sbt
        return TypeContext(self.vars, tuple(sorted(es.items(), key=lambda kv: kv[0])))

    def without_endpoint(self, key: tuple) -> "TypeContext":
        return TypeContext(self.vars,
                           tuple((k, v) for k, v in self.endpoints if k != key))

    def with_var(self, name: str, t: Type) -> "TypeContext":
        vs = {k: v for k, v in self.vars}
        vs[name] = t
        return TypeContext(tuple(sorted(vs.items(), key=lambda kv: kv[0])),
                           self.endpoints)

    def without_var(self, name: str) -> "TypeContext":
        return TypeContext(tuple((k, v) for k, v in self.vars if k != name),
                           self.endpoints)

    @property
    def sessions(self) -> tuple:
        return tuple(sorted({k[0] for k, _ in self.endpoints}))


def compose(a: TypeContext, b: TypeContext):
    """Γ1 ∘ Γ2: disjoint union, except a shared endpoint may split as a pure
    buffer on one side and a pure session on the other, merging to <M; S>.
    Returns None when undefined."""
    vs = dict(a.vars)
    for n, t in b.vars:
        if n in vs:
            return None
        vs[n] = t
    es = dict(a.endpoints)
    for k, sbt in b.endpoints:
        if k not in es:
            es[k] = sbt
            continue
        cur = es[k]
        if cur.session is None and sbt.session is not None and sbt.buffer == ():
            es[k] = SessionBufferType(cur.buffer, sbt.session)
        elif sbt.session is None and cur.session is not None and cur.buffer == ():
            es[k] = SessionBufferType(sbt.buffer, cur.session)
        else:
            return None
    return TypeContext.of(vs, es)


def end_predicate(g: TypeContext) -> bool:
    """Every variable binding basic or end-typed; every endpoint binding an
    end session with no buffered messages."""
    for _, t in g.vars:
        if not is_basic(t) and not isinstance(resolve(t), End):
            return False
    for _, sbt in g.endpoints:
        if sbt.buffer != ():
            return False
        if sbt.session is None or not isinstance(resolve(sbt.session), End):
            return False
    return True


def gc_predicate(g: TypeContext) -> bool:
    """Collectable residue: buffer-only bindings whose entries carry basic
    payloads, or session payloads whose delegated endpoint is typed in g."""
    if g.vars:
        return False
    for _, sbt in g.endpoints:
        if sbt.session is not None:
            return False
        if not _gc_entries(sbt.buffer, g):
            return False
    return True


def _gc_entries(entries: tuple, g: TypeContext) -> bool:
    for e in entries:
        if is_basic(e.payload):
            continue
        if not any(o.session is not None and session_equal(o.session, e.payload)
                   for _, o in g.endpoints):
            return False
    return True


def insert_message(key: tuple, entry: BufEntry, into: TypeContext):
    """Append one in-transit message type to an endpoint's buffer binding,
    creating a fresh singleton binding when absent.  Undefined (None) when
    the endpoint is bound to a non-buffer."""
    cur = into.endpoint(key)
    if cur is None:
        return into.with_endpoint(key, SessionBufferType((entry,), None))
    if cur.session is not None:
        # any binding with a session component is not a pure buffer
        return None
    return into.with_endpoint(key, SessionBufferType(cur.buffer + (entry,), None))


def split_end_gc(g: TypeContext):
    """Greedy Γ = Γ0, Γ'' decomposition with end(Γ0) and gc(Γ''):
    session components must be end-typed, buffer components must be
    collectable.  Returns (ok, reason)."""
    buffers = {}
    for _, t in g.vars:
        if not is_basic(t) and not isinstance(resolve(t), End):
            return False, "variable binding is not basic or end-typed"
    for k, sbt in g.endpoints:
        if sbt.session is not None and not isinstance(resolve(sbt.session), End):
            return False, f"{k[0]}[{k[1]}] stuck at a non-end session type"
        if sbt.buffer:
            buffers[k] = sbt.buffer
    for k, entries in buffers.items():
        if not _gc_entries(entries, g):
            return False, f"{k[0]}[{k[1]}] holds an uncollectable buffer entry"
    return True, ""


# ---------------------------------------------------------------------------
# canonicalization and rendering


def canonical_context(g: TypeContext, mode: CongruenceMode) -> TypeContext:
    es = {k: SessionBufferType(canonical_buffer_type(sbt.buffer, mode), sbt.session)
          for k, sbt in g.endpoints}
    return TypeContext(g.vars, tuple(sorted(es.items(), key=lambda kv: kv[0])))


def render_sbt(sbt: SessionBufferType) -> str:
    buf = "·".join(f"{e.to}!{e.label}({format_type(e.payload)})" for e in sbt.buffer)
    buf = buf or "ε" if sbt.session is None else buf
    if sbt.session is None:
        return buf
    from .types import format_session
    s = format_session(sbt.session)
    return f"<{buf or 'ε'}; {s}>" if sbt.buffer else s


def render_context(g: TypeContext) -> str:
    parts = [f"{n}: {format_type(t)}" for n, t in g.vars]
    parts += [f"{k[0]}[{k[1]}]: {render_sbt(sbt)}" for k, sbt in g.endpoints]
    return "{" + ", ".join(parts) + "}"


def context_key(g: TypeContext, mode: CongruenceMode) -> tuple:
    """Deterministic state identity: endpoints sorted, buffers canonical per
    mode, session components at their resolved structural head rendered to
    text (structurally identical positions coincide)."""
    from .types import format_session
    parts = []
    for k, sbt in canonical_context(g, mode).endpoints:
        buf = tuple((e.to, e.label, type_digest(e.payload)) for e in sbt.buffer)
        s = format_session(resolve(sbt.session)) if sbt.session is not None else None
        parts.append((k, buf, s))
    return (tuple(parts), tuple((n, type_digest(t)) for n, t in g.vars))
