"""Machine-readable validation results shared by all document kinds."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    """One failed check: a dotted field path plus a human-readable reason."""

    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


def require(cond: bool, field: str, reason: str, out: list[Violation]) -> bool:
    """Append a violation when cond is false; returns cond for chaining."""
    if not cond:
        out.append(Violation(field, reason))
    return cond
