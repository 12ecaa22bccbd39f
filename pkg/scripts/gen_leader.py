#!/usr/bin/env python3
"""Generate fixtures/leader.magpi: a quasi-symmetric leader election over an
unreliable full mesh of three roles.

Every role starts as a follower answering heartbeats (hb) and request-votes
(rv).  A follower that hears nothing times out, becomes a candidate, asks its
two peers for votes, and either wins (receives yes -> leader, starts sending
heartbeats) or yields (grants yes -> back to follower).  No role is reliable
to anyone, so every wait carries a timeout and the protocol never terminates.

The five session types per role describe the same cyclic behaviour rooted at
different states (follower, candidate, candidate-wait, leader, leader-wait);
re-rooting duplicates text but keeps every type closed, and the checker
identifies them up to unfolding.
"""
from __future__ import annotations

import pathlib

ROLES = ("p", "q", "r")


def pair_arm(peer: str, ask: str, grant: str, deny: str, f: str, stay: str) -> str:
    return f"{peer}?{ask}(). +{{ {peer}!{grant}().{f}, {peer}!{deny}().{stay} }}"


def bare_arms(a: str, b: str, conts: dict) -> list[str]:
    out = []
    for lbl in ("yes", "no", "ok", "ko"):
        for peer in (a, b):
            out.append(f"{peer}?{lbl}().{conts[lbl]}")
    return out


def wait_arms(a: str, b: str, f: str, stay: str, yes_cont: str) -> list[str]:
    arms = [pair_arm(a, "hb", "ok", "ko", f, stay),
            pair_arm(b, "hb", "ok", "ko", f, stay),
            pair_arm(a, "rv", "yes", "no", f, stay),
            pair_arm(b, "rv", "yes", "no", f, stay)]
    arms += bare_arms(a, b, {"yes": yes_cont, "no": stay, "ok": stay, "ko": stay})
    return arms


def lead_term(a: str, b: str, f: str) -> str:
    arms = wait_arms(a, b, f, "Lw", yes_cont="Lw")
    body = ", ".join(arms)
    return (f"rec L. {a}!hb(). {b}!hb(). rec Lw. "
            f"&{{ {body}, timeout. L }}")


def cand_wait_arms(a: str, b: str, f: str, lead: str) -> str:
    return ", ".join(wait_arms(a, b, f, "Cw", yes_cont=lead))


def follower_type(role: str, a: str, b: str) -> str:
    f_arms = [pair_arm(a, "hb", "ok", "ko", "F", "F"),
              pair_arm(b, "hb", "ok", "ko", "F", "F"),
              pair_arm(a, "rv", "yes", "no", "F", "F"),
              pair_arm(b, "rv", "yes", "no", "F", "F")]
    f_arms += bare_arms(a, b, {"yes": "F", "no": "F", "ok": "F", "ko": "F"})
    cand = (f"rec C. {a}!rv(). {b}!rv(). rec Cw. "
            f"&{{ {cand_wait_arms(a, b, 'F', lead_term(a, b, 'F'))}, timeout. C }}")
    return f"rec F. &{{ {', '.join(f_arms)}, timeout. {cand} }}"


def typedefs(role: str, a: str, b: str) -> str:
    sf = f"SF_{role}"
    sl = f"SL_{role}"
    out = [f"type {sf} @ {role} =\n  {follower_type(role, a, b)}"]
    out.append(f"type {sl} @ {role} =\n  {lead_term(a, b, sf)}")
    lw_arms = ", ".join(wait_arms(a, b, sf, "Lw", yes_cont="Lw"))
    out.append(f"type SLw_{role} @ {role} =\n  rec Lw. &{{ {lw_arms}, timeout. {sl} }}")
    cw = cand_wait_arms(a, b, sf, sl)
    out.append(f"type SC_{role} @ {role} =\n  rec C. {a}!rv(). {b}!rv(). "
               f"rec Cw. &{{ {cw}, timeout. C }}")
    out.append(f"type SCw_{role} @ {role} =\n  rec Cw. &{{ {cw}, timeout. SC_{role} }}")
    return "\n\n".join(out)


def proc_pair_arm(peer: str, ask: str, grant: str, deny: str,
                  fcall: str, staycall: str) -> str:
    return (f"{peer}?{ask}(). ( c!{peer}:{grant}().{fcall} "
            f"+ c!{peer}:{deny}().{staycall} )")


def proc_arms(a: str, b: str, fcall: str, staycall: str, yescall: str) -> str:
    arms = [proc_pair_arm(a, "hb", "ok", "ko", fcall, staycall),
            proc_pair_arm(b, "hb", "ok", "ko", fcall, staycall),
            proc_pair_arm(a, "rv", "yes", "no", fcall, staycall),
            proc_pair_arm(b, "rv", "yes", "no", fcall, staycall)]
    for lbl, cont in (("yes", yescall), ("no", staycall),
                      ("ok", staycall), ("ko", staycall)):
        for peer in (a, b):
            arms.append(f"{peer}?{lbl}().{cont}")
    return ",\n       ".join(arms)


def procdefs(role: str, a: str, b: str) -> str:
    flw, cand, candw = f"Flw_{role}", f"Cand_{role}", f"CandW_{role}"
    lead, leadw = f"Lead_{role}", f"LeadW_{role}"
    out = []
    out.append(
        f"def {flw}(c: SF_{role}) =\n"
        f"  c&{{ {proc_arms(a, b, f'{flw}(c)', f'{flw}(c)', f'{flw}(c)')},\n"
        f"       timeout. {cand}(c) }}")
    out.append(
        f"def {cand}(c: SC_{role}) =\n"
        f"  c!{a}:rv(). c!{b}:rv(). {candw}(c)")
    out.append(
        f"def {candw}(c: SCw_{role}) =\n"
        f"  c&{{ {proc_arms(a, b, f'{flw}(c)', f'{candw}(c)', f'{lead}(c)')},\n"
        f"       timeout. {cand}(c) }}")
    out.append(
        f"def {lead}(c: SL_{role}) =\n"
        f"  c!{a}:hb(). c!{b}:hb(). {leadw}(c)")
    out.append(
        f"def {leadw}(c: SLw_{role}) =\n"
        f"  c&{{ {proc_arms(a, b, f'{flw}(c)', f'{leadw}(c)', f'{leadw}(c)')},\n"
        f"       timeout. {lead}(c) }}")
    return "\n\n".join(out)


def generate() -> str:
    parts = ["// Leader election on an unreliable full mesh (generated by",
             "// scripts/gen_leader.py -- edit that script, not this file).",
             "",
             "protocol leader",
             "",
             f"roles {', '.join(ROLES)}",
             ""]
    for role in ROLES:
        a, b = [x for x in ROLES if x != role]
        parts.append(typedefs(role, a, b))
        parts.append("")
    for role in ROLES:
        a, b = [x for x in ROLES if x != role]
        parts.append(procdefs(role, a, b))
        parts.append("")
    eps = " | ".join(f"Flw_{x}(s[{x}])" for x in ROLES)
    anns = ", ".join(f"{x}: SF_{x}" for x in ROLES)
    parts.append("system =\n"
                 f"  new s:{{ {anns} }} in\n"
                 f"  ( {eps} | s:[] )")
    return "\n".join(parts) + "\n"


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "leader.magpi"
    out.write_text(generate())
    print(f"wrote {out}")
