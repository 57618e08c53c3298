"""Periodic SLA types and their satisfaction semantics.

Time is discrete: a schedule is a 0/1 sequence over unit slots, and a finite
window stands for its own periodic extension.  Satisfaction intervals are
aligned at slot 0 and never overlap.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union


class InvalidSla(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SlaType:
    """``C`` slots of resource in every period of ``T`` slots, tolerating at
    most ``D`` unsatisfied periods in each window of ``W`` periods."""

    C: int
    T: int
    D: int = 0
    W: int = 1

    @property
    def util(self) -> Fraction:
        return Fraction(self.C, self.T)

    @property
    def hard(self) -> bool:
        return self.D == 0

    def csv(self) -> str:
        return f"{self.C},{self.T},{self.D},{self.W}"


@dataclass(frozen=True, order=True)
class FluidSla:
    """An SLA whose period may be renegotiated anywhere in ``[Tl, Tu]``."""

    C: int
    T: int
    Tl: int
    Tu: int
    D: int = 0
    W: int = 1

    @property
    def util(self) -> Fraction:
        return Fraction(self.C, self.T)

    @property
    def fluid(self) -> bool:
        return self.Tl < self.Tu

    @property
    def nominal(self) -> SlaType:
        return SlaType(self.C, self.T, self.D, self.W)

    @classmethod
    def rigid(cls, sla: SlaType) -> "FluidSla":
        return cls(sla.C, sla.T, sla.T, sla.T, sla.D, sla.W)


AnySla = Union[SlaType, FluidSla]
ScheduleWindow = Sequence[int]


def validate(sla: AnySla) -> list[str]:
    """Names of the violated constraints; an empty list means valid."""
    bad = []
    for name in ("C", "T", "D", "W"):
        if not isinstance(getattr(sla, name), int):
            bad.append(f"{name} integer")
    if bad:
        return bad
    if sla.C <= 0:
        bad.append("0 < C")
    if sla.C > sla.T:
        bad.append("C <= T")
    if sla.D < 0:
        bad.append("0 <= D")
    if sla.D > sla.W:
        bad.append("D <= W")
    if sla.W < 1:
        bad.append("W >= 1")
    if isinstance(sla, FluidSla):
        if sla.Tl < 1:
            bad.append("Tl >= 1")
        if sla.Tl > sla.T:
            bad.append("Tl <= T")
        if sla.T > sla.Tu:
            bad.append("T <= Tu")
    return bad


def require_valid(sla: AnySla) -> None:
    bad = validate(sla)
    if bad:
        raise InvalidSla(f"invalid SLA {sla}: violates {', '.join(bad)}")


def utilization(sla: AnySla) -> Fraction:
    return Fraction(sla.C, sla.T)


def window(text: str) -> tuple[int, ...]:
    """Parse ``"1010 00"`` style literals; whitespace is ignored."""
    slots = tuple(int(ch) for ch in text if not ch.isspace())
    if any(s not in (0, 1) for s in slots):
        raise ValueError(f"schedule window must be binary: {text!r}")
    return slots


def _check_length(win: ScheduleWindow, unit: int) -> None:
    if len(win) == 0 or len(win) % unit:
        raise ValueError(f"window length {len(win)} is not a positive multiple of {unit}")


def interval_flags(win: ScheduleWindow, C: int, T: int) -> list[int]:
    """1 for every aligned interval of length ``T`` holding at least ``C`` slots."""
    _check_length(win, T)
    return [int(sum(win[q:q + T]) >= C) for q in range(0, len(win), T)]


def satisfies_ct(win: ScheduleWindow, C: int, T: int) -> bool:
    return all(interval_flags(win, C, T))


def satisfies_ctdw(win: ScheduleWindow, sla: SlaType) -> bool:
    _check_length(win, sla.W * sla.T)
    flags = interval_flags(win, sla.C, sla.T)
    need = sla.W - sla.D
    return all(sum(flags[i:i + sla.W]) >= need for i in range(0, len(flags), sla.W))
