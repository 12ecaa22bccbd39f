"""Diagnostics shared by the parser, typechecker and verifier."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """Half-open source region, 1-based lines and columns."""

    line: int = 0
    col: int = 0
    end_line: int = 0
    end_col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Span = Span()

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": {
                "line": self.span.line,
                "col": self.span.col,
                "end_line": self.span.end_line,
                "end_col": self.span.end_col,
            },
        }

    def render(self) -> str:
        return f"{self.severity} [{self.code}] at {self.span}: {self.message}"


class MagpiError(Exception):
    """Raised for unrecoverable input errors; carries diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))

    @classmethod
    def usage(cls, message: str) -> "MagpiError":
        return cls([Diagnostic("error", "Usage", message)])
