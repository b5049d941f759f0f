"""Verification reports: ordered entries with a four-valued status."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .expr import ZeroStatus, ZeroTest


class Status(enum.Enum):
    PASS_EXACT = "PASS-EXACT"
    PASS_NUMERIC = "PASS-NUMERIC"
    FAIL = "FAIL"
    UNDECIDED = "UNDECIDED"

    @property
    def passed(self) -> bool:
        return self in (Status.PASS_EXACT, Status.PASS_NUMERIC)


def format_point(point: Mapping | None) -> str:
    if not point:
        return ""
    parts = []
    for k, v in point.items():
        if isinstance(v, Fraction):
            v = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        elif isinstance(v, float):
            v = repr(v)
        parts.append(f"{k}={v}")
    return ",".join(parts)


@dataclass
class Entry:
    name: str
    status: Status | None = None  # None marks a pure form emission
    detail: str = ""
    witness: dict | None = None
    form: str | None = None

    @property
    def is_form(self) -> bool:
        return self.status is None


@dataclass
class Report:
    entries: list[Entry] = field(default_factory=list)

    def check(self, name: str, status: Status, detail: str = "", witness: dict | None = None) -> Entry:
        e = Entry(name, status, detail, witness)
        self.entries.append(e)
        return e

    def emit_form(self, name: str, serialized: str) -> Entry:
        e = Entry(name, None, form=serialized)
        self.entries.append(e)
        return e

    def extend(self, other: "Report", prefix: str = "") -> "Report":
        for e in other.entries:
            self.entries.append(Entry(prefix + e.name, e.status, e.detail, e.witness, e.form))
        return self

    @property
    def checks(self) -> list[Entry]:
        return [e for e in self.entries if not e.is_form]

    @property
    def ok(self) -> bool:
        return all(e.status is not Status.FAIL for e in self.checks)

    @property
    def all_passed(self) -> bool:
        return all(e.status.passed for e in self.checks)

    @property
    def all_exact(self) -> bool:
        return all(e.status is Status.PASS_EXACT for e in self.checks)

    def get(self, name: str) -> Entry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def statuses(self) -> dict[str, Status]:
        return {e.name: e.status for e in self.checks}

    def failures(self) -> list[Entry]:
        return [e for e in self.checks if e.status is Status.FAIL]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def status_from_zero(z: ZeroTest) -> Status:
    """Map a zero test of a residual to a check status."""
    if z.status is ZeroStatus.PROVEN_ZERO:
        return Status.PASS_EXACT
    if z.status is ZeroStatus.PROVEN_NONZERO:
        return Status.FAIL
    return Status.PASS_NUMERIC if z.numerically_zero else Status.UNDECIDED


def zero_detail(z: ZeroTest) -> str:
    if z.status is ZeroStatus.PROVEN_ZERO:
        return f"residual zero ({z.method})"
    if z.status is ZeroStatus.PROVEN_NONZERO:
        return f"residual nonzero, |value|={z.max_abs:.6g}"
    return f"residual numerically {'zero' if z.numerically_zero else 'undetermined'} (max |value|={z.max_abs:.3g})"


def combine(statuses: Iterable[Status]) -> Status:
    """Weakest status wins: FAIL < UNDECIDED < PASS-NUMERIC < PASS-EXACT."""
    statuses = list(statuses)
    for s in (Status.FAIL, Status.UNDECIDED, Status.PASS_NUMERIC):
        if s in statuses:
            return s
    return Status.PASS_EXACT
