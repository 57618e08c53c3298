"""Rate-monotonic admission tests for a unit-capacity host."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Optional, Sequence

from .sla import SlaType

BOUND_TOL = 1e-9
DEFAULT_HORIZON_CAP = 10**6


class HyperperiodOverflow(ValueError):
    pass


class AdmissionTest(str, enum.Enum):
    LL = "ll"
    HARMONIC = "harmonic"
    EXACT = "exact"
    # harmonic bound first, exact simulation when a miss-tolerant task is involved
    HYBRID = "hybrid"


@lru_cache(maxsize=None)
def ll_bound(n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * (2.0 ** (1.0 / n) - 1.0)


@dataclass(frozen=True)
class HarmonicClustering:
    clusters: tuple[tuple[SlaType, ...], ...]

    @property
    def k(self) -> int:
        return len(self.clusters)


@lru_cache(maxsize=65536)
def cluster_count(periods: tuple[int, ...]) -> int:
    """Greedy chain count over distinct periods given in ascending order."""
    tops: list[int] = []
    for p in periods:
        for i, top in enumerate(tops):
            if p % top == 0:
                tops[i] = p
                break
        else:
            tops.append(p)
    return len(tops)


def harmonic_clusters(tasks: Sequence[SlaType]) -> HarmonicClustering:
    """Sort distinct periods ascending and extend the first chain whose
    largest period divides the new one, else open a new chain."""
    tops: list[int] = []
    chain_of: dict[int, int] = {}
    for p in sorted({t.T for t in tasks}):
        for i, top in enumerate(tops):
            if p % top == 0:
                tops[i] = p
                chain_of[p] = i
                break
        else:
            chain_of[p] = len(tops)
            tops.append(p)
    groups: list[list[SlaType]] = [[] for _ in tops]
    for t in tasks:
        groups[chain_of[t.T]].append(t)
    return HarmonicClustering(tuple(tuple(g) for g in groups))


def total_util(tasks: Sequence[SlaType]) -> Fraction:
    return sum((t.util for t in tasks), Fraction(0))


def harmonic_ok(U: Fraction, periods: tuple[int, ...]) -> bool:
    """``U <= k(2^(1/k) - 1)`` for the greedy chain count of ``periods``."""
    if U > 1:
        return False
    k = cluster_count(periods)
    if k <= 1:
        return True
    return float(U) <= ll_bound(k) + BOUND_TOL


def hyperperiod(tasks: Sequence[SlaType]) -> int:
    return lcm(*(t.T for t in tasks)) if tasks else 1


def _rm_order(tasks: Sequence[SlaType]) -> list[int]:
    return sorted(range(len(tasks)), key=lambda i: (tasks[i].T, -tasks[i].C, i))


def rm_flags(tasks: Sequence[SlaType], horizon: int) -> list[list[int]]:
    """Per task, 1/0 for each complete aligned interval inside ``horizon``.

    Fixed priorities by period (ties: larger C, then input order); each task
    needs ``C`` slots per aligned interval and unfinished work is dropped at
    the interval end.
    """
    n = len(tasks)
    order = _rm_order(tasks)
    remaining = [t.C for t in tasks]
    flags: list[list[int]] = [[] for _ in tasks]
    next_end = [t.T for t in tasks]
    now = 0
    while now < horizon:
        boundary = min(min(next_end), horizon)
        while now < boundary:
            runner = next((i for i in order if remaining[i] > 0), None)
            if runner is None:
                now = boundary
                break
            step = min(remaining[runner], boundary - now)
            remaining[runner] -= step
            now += step
        for i in range(n):
            if next_end[i] == now:
                flags[i].append(int(remaining[i] == 0))
                remaining[i] = tasks[i].C
                next_end[i] += tasks[i].T
    return flags


def rm_simulate(tasks: Sequence[SlaType], horizon: Optional[int] = None,
                cap: int = DEFAULT_HORIZON_CAP) -> list[int]:
    """Unsatisfied interval count per task over ``horizon`` (default: one hyperperiod)."""
    if horizon is None:
        horizon = hyperperiod(tasks)
    if horizon > cap:
        raise HyperperiodOverflow(f"horizon {horizon} exceeds cap {cap}")
    for t in tasks:
        if horizon % t.T:
            raise ValueError(f"horizon {horizon} is not a multiple of T={t.T}")
    return [len(f) - sum(f) for f in rm_flags(tasks, horizon)]


def _window_ok(flags: list[int], D: int, W: int) -> bool:
    """Aligned W-windows over the periodic extension of ``flags`` each miss <= D."""
    n = len(flags)
    span = lcm(n, W)
    misses = 0
    for i in range(span):
        misses += 1 - flags[i % n]
        if (i + 1) % W == 0:
            if misses > D:
                return False
            misses = 0
    return True


def exact_ok(tasks: Sequence[SlaType], cap: int = DEFAULT_HORIZON_CAP) -> bool:
    if not tasks:
        return True
    # synchronous release is the critical instant: the first job of every task is its worst,
    # so a clean first round means no interval is ever missed
    clean = all(f[0] for f in rm_flags(tasks, max(t.T for t in tasks)))
    if clean or all(t.D == 0 for t in tasks):
        return clean
    H = hyperperiod(tasks)
    if H > cap:
        raise HyperperiodOverflow(f"hyperperiod {H} exceeds cap {cap}")
    for t, f in zip(tasks, rm_flags(tasks, H)):
        if t.D == 0:
            if not all(f):
                return False
        elif not _window_ok(f, t.D, t.W):
            return False
    return True


def admissible(tasks: Sequence[SlaType], test: AdmissionTest = AdmissionTest.HARMONIC,
               cap: int = DEFAULT_HORIZON_CAP) -> bool:
    test = AdmissionTest(test)
    if not tasks:
        return True
    U = total_util(tasks)
    if test is AdmissionTest.LL:
        return U <= 1 and float(U) <= ll_bound(len(tasks)) + BOUND_TOL
    if test is AdmissionTest.HARMONIC:
        return harmonic_ok(U, tuple(sorted({t.T for t in tasks})))
    if test is AdmissionTest.EXACT:
        return exact_ok(tasks, cap)
    if harmonic_ok(U, tuple(sorted({t.T for t in tasks}))):
        return True
    if U > 1 or all(t.D == 0 for t in tasks):
        return False
    try:
        return exact_ok(tasks, cap)
    except HyperperiodOverflow:
        return False
