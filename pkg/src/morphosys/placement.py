"""Online workload assignment: FF/BF host search over transformed SLAs."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .hosts import Cluster, HostState, Load, Resident
from .schedulability import AdmissionTest, DEFAULT_HORIZON_CAP
from .sla import FluidSla, SlaType, require_valid
from .transform import BoundedTransform, GenLimits, gen_transforms

FITS = ("FF", "BF")

PLACED = "placed"
PLACED_AFTER_REPACK = "placed-after-repack"
NEW_HOST = "new-host"
REJECTED = "rejected"


@dataclass
class WasPolicy:
    fit: str = "FF"
    transforms: str = "all"
    test: AdmissionTest = AdmissionTest.HARMONIC
    limits: GenLimits = field(default_factory=GenLimits)
    exact_horizon_cap: int = DEFAULT_HORIZON_CAP

    def __post_init__(self):
        if self.fit not in FITS:
            raise ValueError(f"fit must be one of {FITS}, got {self.fit!r}")
        self.test = AdmissionTest(self.test)


@dataclass
class PlacementDecision:
    outcome: str
    host_id: Optional[int] = None
    transform: Optional[BoundedTransform] = None
    attempts: int = 0

    @property
    def admitted(self) -> bool:
        return self.outcome != REJECTED


@dataclass(frozen=True)
class PlacementEvent:
    time: float
    task_id: int
    outcome: str
    host_id: Optional[int]
    transform_source: str

    def row(self) -> str:
        hid = "" if self.host_id is None else self.host_id
        return f"{self.time},{self.task_id},{self.outcome},{hid},{self.transform_source}"


def assign(request: FluidSla, hosts: Iterable[HostState], fit: str, sla: SlaType,
           test: AdmissionTest = AdmissionTest.HARMONIC,
           cap: int = DEFAULT_HORIZON_CAP) -> Optional[int]:
    """Host id that can take ``sla`` (a rewrite of ``request``); no state changes."""
    u = sla.C / sla.T
    best: Optional[HostState] = None
    for h in hosts:
        if h.load.Uf + u > 1 + 1e-9:
            continue
        if best is not None and h.load.Uf <= best.load.Uf:
            continue
        if not h.load.admits(sla, test, cap):
            continue
        if fit == "FF":
            return h.id
        best = h
    return None if best is None else best.id


def candidates_for(request: FluidSla, cluster: Cluster, policy: WasPolicy) -> list[BoundedTransform]:
    return gen_transforms(request, cluster.context(), policy.limits, policy.transforms)


def min_util(cands: Sequence[BoundedTransform]) -> Fraction:
    return min(bt.result.util for bt in cands)


def try_existing(request: FluidSla, task_id: int, cluster: Cluster, policy: WasPolicy,
                 cands: Sequence[BoundedTransform]) -> tuple[Optional[HostState], Optional[BoundedTransform], int]:
    attempts = 0
    for bt in cands:
        attempts += 1
        hid = assign(request, cluster, policy.fit, bt.result, policy.test, policy.exact_horizon_cap)
        if hid is not None:
            host = cluster.hosts[hid]
            cluster.place(host, Resident(task_id, request, bt, min_util(cands)))
            return host, bt, attempts
    return None, None, attempts


def was_admit(request: FluidSla, task_id: int, cluster: Cluster, policy: WasPolicy,
              repacker=None) -> PlacementDecision:
    """Place ``request`` on an existing host, possibly rewritten, else grow.

    ``repacker`` is a callable ``(request, task_id) -> host id | None`` invoked
    once when every existing host refuses every candidate.
    """
    require_valid(request)
    cands = candidates_for(request, cluster, policy)
    host, bt, attempts = try_existing(request, task_id, cluster, policy, cands)
    if host is not None:
        return PlacementDecision(PLACED, host.id, bt, attempts)
    if repacker is not None and len(cluster):
        hid = repacker(request, task_id)
        if hid is not None:
            r = cluster.hosts[hid].residents[task_id]
            return PlacementDecision(PLACED_AFTER_REPACK, hid, r.transform, attempts)
        cands = candidates_for(request, cluster, policy)
        host, bt, more = try_existing(request, task_id, cluster, policy, cands)
        attempts += more
        if host is not None:
            return PlacementDecision(PLACED_AFTER_REPACK, host.id, bt, attempts)
    if not cluster.can_grow():
        return PlacementDecision(REJECTED, attempts=attempts)
    empty = Load()
    for bt in cands:
        attempts += 1
        if empty.admits(bt.result, policy.test, policy.exact_horizon_cap):
            host = cluster.new_host()
            cluster.place(host, Resident(task_id, request, bt, min_util(cands)))
            return PlacementDecision(NEW_HOST, host.id, bt, attempts)
    return PlacementDecision(REJECTED, attempts=attempts)
