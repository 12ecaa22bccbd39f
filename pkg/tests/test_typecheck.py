"""Typechecker: fixture acceptance, targeted rejections, linearity."""
import pytest

from magpi import parse, typecheck, typecheck_file
from magpi.context import TypeContext
from magpi.types import Reliability
from tests.conftest import fixture_text


def check_text(source: str):
    return typecheck_file(parse(source))


def codes(report):
    return {d.code for d in report.failures}


HEADER = "protocol t\nroles p, q, r\nreliability { p: {q}, q: {p} }\n"

SIMPLE = HEADER + """
type Sp @ p = q!a(int).end
type Sq @ q = p?a(int).end
system =
  new s:{ p: Sp, q: Sq } in
  ( s[p]!q:a(7).0 | s[q]&{ p?a(x:int).0 } | s:[] )
"""


@pytest.mark.parametrize("name", ["ping", "dns", "leader"])
def test_fixtures_accepted(name):
    # [PAPER] the worked examples are well-typed.
    report = typecheck_file(parse(fixture_text(name)))
    assert report.verdict == "accepted", [d.render() for d in report.failures]


def test_simple_exchange_accepted():
    assert check_text(SIMPLE).verdict == "accepted"


def test_payload_mismatch_rejected():
    bad = SIMPLE.replace("s[p]!q:a(7).0", "s[p]!q:a(true).0")
    report = check_text(bad)
    assert report.verdict == "rejected"
    assert "PayloadMismatch" in codes(report)


def test_wrong_label_rejected():
    bad = SIMPLE.replace("s[p]!q:a(7).0", "s[p]!q:b(7).0")
    report = check_text(bad)
    assert report.verdict == "rejected"
    assert "MissingSelectArm" in codes(report)


def test_arm_set_must_match_exactly():
    bad = SIMPLE.replace("s[q]&{ p?a(x:int).0 }",
                         "s[q]&{ p?a(x:int).0, p?b(y:int).0 }")
    report = check_text(bad)
    assert report.verdict == "rejected"
    assert "ArmMismatch" in codes(report)


def test_missing_timeout_arm_rejected():
    # The type requires a timeout continuation on an unreliable wait.
    src = HEADER + """
type Sp @ p = r!a().end
type Sr @ r = &{ p?a().end, timeout. end }
system =
  new s:{ p: Sp, r: Sr } in
  ( s[p]!r:a().0 | s[r]&{ p?a().0 } | s:[] )
"""
    report = check_text(src)
    assert report.verdict == "rejected"
    assert "MissingTimeoutArm" in codes(report)


def test_unexpected_timeout_arm_rejected():
    src = SIMPLE.replace("s[q]&{ p?a(x:int).0 }",
                         "s[q]&{ p?a(x:int).0, timeout. 0 }")
    report = check_text(src)
    assert report.verdict == "rejected"
    assert "UnexpectedTimeoutArm" in codes(report)


def test_unfinished_endpoint_rejected():
    bad = SIMPLE.replace("s[p]!q:a(7).0 | s[q]&{ p?a(x:int).0 }",
                         "0 | s[q]&{ p?a(x:int).0 }")
    report = check_text(bad)
    assert report.verdict == "rejected"


def test_endpoint_used_twice_rejected():
    bad = SIMPLE.replace("s[q]&{ p?a(x:int).0 }",
                         "s[q]&{ p?a(x:int).0 } | s[p]!q:a(8).0")
    report = check_text(bad)
    assert report.verdict == "rejected"
    assert "LinearityViolation" in codes(report)


def test_safety_gate_on_restriction():
    # [DERIVED] deleting the timeout arm from an unreliable wait makes the
    # restriction's context unsafe (a wait that a drop can strand), which
    # the restriction rule must surface as a safety failure.
    src = HEADER + """
type Sp @ p = r!a().end
type Sr @ r = &{ p?a().end }
system =
  new s:{ p: Sp, r: Sr } in
  ( s[p]!r:a().0 | s[r]&{ p?a().0 } | s:[] )
"""
    report = check_text(src)
    assert report.verdict == "rejected"
    assert any(c.startswith("SafetyUndetermined") for c in codes(report))


def test_initial_buffer_typed():
    src = HEADER + """
type Sq @ q = p?a(int).end
system =
  new s:{ q: Sq } in
  ( s[q]&{ p?a(x:int).0 } | s:[ (p,q)!a(3) ] )
"""
    assert check_text(src).verdict == "accepted"


def test_initial_buffer_payload_mismatch():
    src = HEADER + """
type Sq @ q = p?a(int).end
system =
  new s:{ q: Sq } in
  ( s[q]&{ p?a(x:int).0 } | s:[ (p,q)!a(true) ] )
"""
    report = check_text(src)
    assert report.verdict == "rejected"


def test_delegation_accepted():
    # Sending an endpoint as a payload transfers the linear binding.
    # r waits without a timeout, so r must treat p as reliable.
    src = "protocol t\nroles p, q, r\nreliability { p: {q}, q: {p}, r: {p} }\n" + """
type Sp @ p = q!deleg(r!go().end).end
type Sq @ q = p?deleg(r!go().end).end
type Tr @ r = p?go().end
system =
  new t:{ p: r!go().end, r: Tr } in
  new s:{ p: Sp, q: Sq } in
  ( s[p]!q:deleg(t[p]).0
  | s[q]&{ p?deleg(c: r!go().end). c!r:go().0 }
  | t[r]&{ p?go().0 }
  | s:[] | t:[] )
"""
    report = check_text(src)
    assert report.verdict == "accepted", [d.render() for d in report.failures]


def test_report_json_shape():
    report = check_text(SIMPLE)
    doc = report.to_json()
    assert doc["verdict"] == "accepted"
    assert doc["failures"] == []
    assert all({"rule", "span"} <= set(e) for e in doc["trace"])
