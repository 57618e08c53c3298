"""Host bookkeeping shared by the assignment and repacking services."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import log
from typing import Iterator, Optional

from .schedulability import (AdmissionTest, BOUND_TOL, DEFAULT_HORIZON_CAP, admissible,
                             cluster_count, ll_bound)
from .sla import FluidSla, SlaType
from .transform import BoundedTransform

# every harmonic-chain bound k(2^(1/k) - 1) stays above ln 2
_ALWAYS_OK = log(2) - 1e-6


class Load:
    """Active SLAs sharing one unit-capacity host.

    A float running sum screens admissions; the exact rational sum is only
    consulted within rounding distance of full capacity.
    """

    __slots__ = ("tasks", "Uf", "periods", "_distinct", "soft", "_U")

    def __init__(self, tasks=()):
        self.tasks: list[SlaType] = []
        self.Uf = 0.0
        self.periods: Counter = Counter()
        self._distinct: Optional[tuple[int, ...]] = ()
        self._U: Optional[Fraction] = Fraction(0)
        self.soft = 0
        for t in tasks:
            self.add(t)

    def copy(self) -> "Load":
        new = Load.__new__(Load)
        new.tasks = list(self.tasks)
        new.Uf, new._U = self.Uf, self._U
        new.periods = Counter(self.periods)
        new._distinct = self._distinct
        new.soft = self.soft
        return new

    @property
    def U(self) -> Fraction:
        if self._U is None:
            self._U = sum((Fraction(t.C, t.T) for t in self.tasks), Fraction(0))
        return self._U

    def distinct(self) -> tuple[int, ...]:
        if self._distinct is None:
            self._distinct = tuple(sorted(self.periods))
        return self._distinct

    def add(self, sla: SlaType) -> None:
        self.tasks.append(sla)
        self.Uf += sla.C / sla.T
        self._U = None
        if sla.T not in self.periods:
            self._distinct = None
        self.periods[sla.T] += 1
        self.soft += sla.D > 0

    def remove(self, sla: SlaType) -> None:
        self.tasks.remove(sla)
        self.Uf = self.Uf - sla.C / sla.T if self.tasks else 0.0
        self._U = None
        self.periods[sla.T] -= 1
        if not self.periods[sla.T]:
            del self.periods[sla.T]
            self._distinct = None
        self.soft -= sla.D > 0

    def admits(self, sla: SlaType, test: AdmissionTest = AdmissionTest.HARMONIC,
               cap: int = DEFAULT_HORIZON_CAP) -> bool:
        """Whether ``sla`` can join; a host never sells more than its capacity."""
        s = self.Uf + sla.C / sla.T
        if s > 1 + 1e-9:
            return False
        if s > 1 - 1e-9 and self.U + Fraction(sla.C, sla.T) > 1:
            return False
        if test is AdmissionTest.HARMONIC or (test is AdmissionTest.HYBRID and not self.soft
                                              and sla.D == 0):
            if s <= _ALWAYS_OK:
                return True
            periods = self.distinct()
            if sla.T not in self.periods:
                periods = tuple(sorted(periods + (sla.T,)))
            k = cluster_count(periods)
            return k <= 1 or s <= ll_bound(k) + BOUND_TOL
        if test is AdmissionTest.LL:
            return s <= ll_bound(len(self.tasks) + 1) + BOUND_TOL
        if test is AdmissionTest.HYBRID and s <= _ALWAYS_OK:
            return True
        return admissible(self.tasks + [sla], test, cap)


@dataclass
class Resident:
    task_id: int
    original: FluidSla
    transform: BoundedTransform
    min_util: Fraction = Fraction(0)

    @property
    def active(self) -> SlaType:
        return self.transform.result


@dataclass
class HostState:
    id: int
    load: Load = field(default_factory=Load)
    residents: dict[int, Resident] = field(default_factory=dict)
    original_util: Fraction = Fraction(0)
    min_util: Fraction = Fraction(0)

    @property
    def allocated_util(self) -> Fraction:
        return self.load.U

    def place(self, r: Resident) -> None:
        self.residents[r.task_id] = r
        self.load.add(r.active)
        self.original_util += r.original.util
        self.min_util += r.min_util

    def evict(self, task_id: int) -> Resident:
        r = self.residents.pop(task_id)
        self.load.remove(r.active)
        self.original_util -= r.original.util
        self.min_util -= r.min_util
        return r

    def check(self) -> bool:
        """Recomputed utilization matches the running sums."""
        return (self.load.U == sum((r.active.util for r in self.residents.values()), Fraction(0))
                and self.original_util == sum((r.original.util for r in self.residents.values()),
                                              Fraction(0)))


class Cluster:
    """Powered hosts in ascending id order; an emptied host powers down."""

    def __init__(self, host_cap: Optional[int] = None):
        self.hosts: dict[int, HostState] = {}
        self.where: dict[int, int] = {}
        self.host_cap = host_cap
        self._next_id = 0
        self._periods: Counter = Counter()

    def __len__(self) -> int:
        return len(self.hosts)

    def __iter__(self) -> Iterator[HostState]:
        return iter(self.hosts.values())

    def context(self) -> tuple[int, ...]:
        return tuple(sorted(self._periods))

    def can_grow(self) -> bool:
        return self.host_cap is None or len(self.hosts) < self.host_cap

    def new_host(self) -> HostState:
        h = HostState(self._next_id)
        self._next_id += 1
        self.hosts[h.id] = h
        return h

    def place(self, host: HostState, r: Resident) -> None:
        host.place(r)
        self.where[r.task_id] = host.id
        self._periods[r.active.T] += 1

    def release(self, task_id: int) -> Optional[Resident]:
        hid = self.where.pop(task_id, None)
        if hid is None:
            return None
        host = self.hosts[hid]
        r = host.evict(task_id)
        self._forget(r.active.T)
        if not host.residents:
            del self.hosts[hid]
        return r

    def _forget(self, period: int) -> None:
        self._periods[period] -= 1
        if not self._periods[period]:
            del self._periods[period]

    def reassign(self, plan: dict[int, list[Resident]]) -> int:
        """Install a new packing for the hosts in ``plan``; returns migrations."""
        moved = 0
        for hid, residents in plan.items():
            host = self.hosts[hid]
            for tid in list(host.residents):
                self._forget(host.evict(tid).active.T)
        for hid, residents in plan.items():
            host = self.hosts[hid]
            for r in residents:
                if self.where.get(r.task_id, hid) != hid:
                    moved += 1
                self.place(host, r)
        for hid in plan:
            if not self.hosts[hid].residents:
                del self.hosts[hid]
        return moved

    def utilization(self) -> tuple[float, float, int]:
        """Sums of allocated and original utilization, and the host count."""
        alloc = sum(h.load.Uf for h in self.hosts.values())
        orig = sum(float(h.original_util) for h in self.hosts.values())
        return alloc, orig, len(self.hosts)
