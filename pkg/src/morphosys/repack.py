"""Workload repacking: host selection, a pruned packing search, and the
policies deciding when it runs."""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, inf
from typing import Callable, Optional, Sequence

from .hosts import Cluster, HostState, Load, Resident
from .schedulability import AdmissionTest, DEFAULT_HORIZON_CAP, cluster_count
from .sla import FluidSla
from .transform import BoundedTransform, GenLimits, gen_transforms

REPACK_POLICIES = ("NR", "PR", "FR")
_EPS = 1e-9
MIGRATIONS = ("NM", "CM", "UM")
SEARCH_ORDERS = ("DFS", "BFS")


@dataclass
class RepackConfig:
    policy: str = "NR"
    epoch: float = 3600.0
    migration: str = "NM"
    epsilon: float = 0.1
    time_budget: float = 300.0
    budget_nodes: Optional[int] = None
    search_order: str = "DFS"
    # under NM a failed admission retries repacking on at most this many hosts
    nm_max_hosts: int = 8

    def __post_init__(self):
        if self.policy not in REPACK_POLICIES:
            raise ValueError(f"repack policy must be one of {REPACK_POLICIES}")
        if self.migration not in MIGRATIONS:
            raise ValueError(f"migration must be one of {MIGRATIONS}")
        if self.search_order not in SEARCH_ORDERS:
            raise ValueError(f"search order must be one of {SEARCH_ORDERS}")
        if self.migration == "CM" and not 0 <= self.epsilon <= 1:
            raise ValueError("CM needs 0 < epsilon <= 1")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.policy == "PR" and self.epoch <= 0:
            raise ValueError("PR needs a positive epoch")


@dataclass(frozen=True)
class RepackEvent:
    time: float
    group: tuple[int, ...]
    hosts_before: int
    hosts_after: int
    nodes_expanded: int
    migrations: int
    adopted: bool = False

    def row(self) -> str:
        ids = " ".join(map(str, self.group))
        return (f"{self.time},{ids},{self.hosts_before},{self.hosts_after},"
                f"{self.nodes_expanded},{self.migrations}")


# -- host selection ----------------------------------------------------------

def candidacy_mean(hosts: Sequence[HostState]) -> Fraction:
    """Mean allocated utilization over non-idle hosts."""
    busy = [h.load.U for h in hosts if h.load.U > 0]
    return sum(busy, Fraction(0)) / len(busy) if busy else Fraction(0)


def select_hosts(hosts: Sequence[HostState], config: RepackConfig) -> list[list[int]]:
    hosts = sorted(hosts, key=lambda h: h.id)
    if config.migration == "NM":
        return [[h.id] for h in hosts]
    nonempty = [h.id for h in hosts if h.residents]
    if config.migration == "UM" or config.epsilon == 0:
        return [nonempty] if nonempty else []
    phi = candidacy_mean(hosts)
    eps = Fraction(config.epsilon)
    chosen = [h.id for h in hosts if h.residents and phi - h.original_util >= eps]
    return [chosen] if chosen else []


# -- packing search ----------------------------------------------------------

@dataclass
class SearchResult:
    hosts: float
    overhead: Fraction
    # per item: (bin index, candidate index); None when nothing beat the incumbent
    assignment: Optional[list[tuple[int, int]]]
    nodes_expanded: int
    exhausted: bool


def _first_fit(bins: list[Load], sla, test, cap) -> int:
    u = sla.C / sla.T
    for i, b in enumerate(bins):
        if b.Uf + u <= 1 + 1e-9 and b.admits(sla, test, cap):
            return i
    return len(bins)


def _added_chains(load: Load, period: int) -> int:
    if period in load.periods:
        return 0
    periods = load.distinct()
    return cluster_count(tuple(sorted(periods + (period,)))) - cluster_count(periods)


def tree_search(items: Sequence[Sequence[BoundedTransform]],
                incumbent: tuple[float, Fraction] = (inf, Fraction(0)), *,
                test: AdmissionTest = AdmissionTest.HARMONIC, cap: int = DEFAULT_HORIZON_CAP,
                budget_nodes: Optional[int] = None, deadline: Optional[float] = None,
                order: str = "DFS") -> SearchResult:
    """Choose one candidate per item and first-fit them, in item order, into
    as few unit bins as possible (ties: least total overhead).

    Branches whose bins-so-far or utilization lower bound cannot beat the
    best packing found are cut.  Only packings strictly better than
    ``incumbent`` are reported.
    """
    n = len(items)
    util = [[bt.result.C / bt.result.T for bt in c] for c in items]
    over = [[float(bt.overhead) for bt in c] for c in items]
    suf_u = [0.0] * (n + 1)
    suf_o = [0.0] * (n + 1)
    for d in range(n - 1, -1, -1):
        suf_u[d] = suf_u[d + 1] + min(util[d])
        suf_o[d] = suf_o[d + 1] + min(over[d])
    state = {"best": (incumbent[0], float(incumbent[1])), "assign": None, "nodes": 0,
             "stopped": False}

    def out_of_budget() -> bool:
        if budget_nodes is not None and state["nodes"] >= budget_nodes:
            return True
        return deadline is not None and _time.monotonic() >= deadline

    def better(value) -> bool:
        h, o = state["best"]
        return value[0] < h or (value[0] == h and value[1] < o - _EPS)

    def hopeless(d: int, nbins: int, used: float, spent: float) -> bool:
        return not better((max(nbins, ceil(used + suf_u[d] - _EPS)), spent + suf_o[d]))

    def children(d: int, bins: list[Load]):
        """Best first: stay within existing bins, keep each bin's periods
        harmonic, fill early bins, pay little overhead."""
        kids = []
        for ci, bt in enumerate(items[d]):
            slot = _first_fit(bins, bt.result, test, cap)
            fresh = slot == len(bins)
            chains = 0 if fresh else _added_chains(bins[slot], bt.result.T)
            kids.append((fresh, chains, slot, over[d][ci], ci))
        kids.sort()
        return kids

    def put(bins: list[Load], slot: int, bt: BoundedTransform) -> list[Load]:
        if slot == len(bins):
            bins.append(Load())
        bins[slot].add(bt.result)
        return bins

    def record(value, chosen):
        if better(value):
            state["best"] = value
            state["assign"] = list(chosen)

    if order == "DFS":
        bins: list[Load] = []
        chosen: list[tuple[int, int]] = []
        acc = {"used": 0.0, "over": 0.0}

        def dfs(d: int) -> None:
            if d == n:
                record((len(bins), acc["over"]), chosen)
                return
            if state["stopped"] or out_of_budget():
                state["stopped"] = True
                return
            if hopeless(d, len(bins), acc["used"], acc["over"]):
                return
            state["nodes"] += 1
            for fresh, _, slot, ov, ci in children(d, bins):
                bt = items[d][ci]
                put(bins, slot, bt)
                acc["used"] += util[d][ci]
                acc["over"] += ov
                chosen.append((slot, ci))
                dfs(d + 1)
                chosen.pop()
                acc["used"] -= util[d][ci]
                acc["over"] -= ov
                bins[slot].remove(bt.result)
                if fresh:
                    bins.pop()
                if state["stopped"]:
                    return

        dfs(0)
    else:
        level = [([], [], 0.0, 0.0)]
        for d in range(n):
            nxt = []
            for bins, chosen, used, spent in level:
                if state["stopped"] or out_of_budget():
                    state["stopped"] = True
                    break
                if hopeless(d, len(bins), used, spent):
                    continue
                state["nodes"] += 1
                for fresh, _, slot, ov, ci in children(d, bins):
                    bt = items[d][ci]
                    nb = put([b.copy() for b in bins], slot, bt)
                    nxt.append((nb, chosen + [(slot, ci)], used + util[d][ci], spent + ov))
            if state["stopped"]:
                break
            level = nxt
        else:
            for bins, chosen, used, spent in level:
                record((len(bins), spent), chosen)

    best = state["assign"]
    if best is None:
        return SearchResult(incumbent[0], incumbent[1], None, state["nodes"], not state["stopped"])
    spent = sum((items[d][ci].overhead for d, (_, ci) in enumerate(best)), Fraction(0))
    nbins = max((slot for slot, _ in best), default=-1) + 1
    return SearchResult(nbins, spent, best, state["nodes"], not state["stopped"])


# -- repacking a host group ---------------------------------------------------

@dataclass
class RepackOutcome:
    changed: bool
    event: RepackEvent
    request_host: Optional[int] = None


def _item_candidates(original: FluidSla, current: Optional[BoundedTransform], context,
                     limits: GenLimits, mode: str) -> list[BoundedTransform]:
    cands = gen_transforms(original, context, limits, mode)
    if current is not None and current not in cands:
        cands = cands + [current]
    return cands


def repack(cluster: Cluster, group: Sequence[int], config: RepackConfig, *,
           clock: float = 0.0, extra: Optional[tuple[int, FluidSla]] = None,
           test: AdmissionTest = AdmissionTest.HARMONIC, cap: int = DEFAULT_HORIZON_CAP,
           limits: GenLimits = GenLimits(), mode: str = "all") -> RepackOutcome:
    """Re-pack the residents of ``group`` (plus an optional waiting request)
    and install the result when it beats the current packing."""
    group = sorted(group)
    if not group:
        raise ValueError("empty host group")
    hosts = [cluster.hosts[h] for h in group]
    context = cluster.context()
    entries: list[tuple[int, FluidSla, list[BoundedTransform]]] = []
    for h in hosts:
        for tid, r in sorted(h.residents.items()):
            entries.append((tid, r.original, _item_candidates(r.original, r.transform, context,
                                                              limits, mode)))
    if extra is not None:
        entries.append((extra[0], extra[1], _item_candidates(extra[1], None, context, limits, mode)))
    entries.sort(key=lambda e: (len(e[2]), -e[1].util, e[0]))

    if extra is None:
        current = sum((r.transform.overhead for h in hosts for r in h.residents.values()), Fraction(0))
        incumbent = (len(hosts), current)
    else:
        incumbent = (len(hosts) + 1, Fraction(-10**9))
    deadline = None
    if config.budget_nodes is None:
        deadline = _time.monotonic() + config.time_budget
    res = tree_search([e[2] for e in entries], incumbent, test=test, cap=cap,
                      budget_nodes=config.budget_nodes, deadline=deadline,
                      order=config.search_order)
    before = len(hosts)
    if res.assignment is None:
        return RepackOutcome(False, RepackEvent(clock, tuple(group), before, before,
                                                res.nodes_expanded, 0))

    old = {tid: h.id for h in hosts for tid in h.residents}
    nbins = max(slot for slot, _ in res.assignment) + 1
    bins: list[list[Resident]] = [[] for _ in range(nbins)]
    for (tid, original, cands), (slot, ci) in zip(entries, res.assignment):
        floor = min(bt.result.util for bt in cands)
        bins[slot].append(Resident(tid, original, cands[ci], floor))
    # keep tasks where they are when possible: bins grab the host holding most of them
    free = list(group)
    plan: dict[int, list[Resident]] = {hid: [] for hid in group}
    for b in sorted(range(nbins), key=lambda i: -len(bins[i])):
        counts = {hid: sum(old.get(r.task_id) == hid for r in bins[b]) for hid in free}
        hid = max(free, key=lambda h: (counts[h], -h))
        free.remove(hid)
        plan[hid] = sorted(bins[b], key=lambda r: r.task_id)
    moved = cluster.reassign(plan)
    request_host = cluster.where.get(extra[0]) if extra is not None else None
    event = RepackEvent(clock, tuple(group), before, len([h for h in group if h in cluster.hosts]),
                        res.nodes_expanded, moved, True)
    return RepackOutcome(True, event, request_host)


# -- policies ----------------------------------------------------------------

def on_epoch(clock: float, epoch: float) -> bool:
    k = round(clock / epoch)
    return k > 0 and abs(k * epoch - clock) <= 1e-9 * max(1.0, abs(clock))


@dataclass
class RepackReport:
    events: list[RepackEvent] = field(default_factory=list)
    request_host: Optional[int] = None

    @property
    def acted(self) -> bool:
        return bool(self.events)


def maybe_repack(cluster: Cluster, clock: float, config: RepackConfig, trigger: str, *,
                 request: Optional[tuple[int, FluidSla]] = None,
                 test: AdmissionTest = AdmissionTest.HARMONIC, cap: int = DEFAULT_HORIZON_CAP,
                 limits: GenLimits = GenLimits(), mode: str = "all") -> RepackReport:
    """``trigger`` is ``"tick"`` (periodic clock) or ``"was-failure"``."""
    if trigger not in ("tick", "was-failure"):
        raise ValueError(f"unknown trigger {trigger!r}")
    report = RepackReport()
    kw = dict(clock=clock, test=test, cap=cap, limits=limits, mode=mode)
    if config.policy == "PR" and trigger == "tick" and on_epoch(clock, config.epoch):
        for group in select_hosts(list(cluster), config):
            if all(h in cluster.hosts for h in group):
                report.events.append(repack(cluster, group, config, **kw).event)
    elif config.policy == "FR" and trigger == "was-failure":
        if request is None:
            for group in select_hosts(list(cluster), config):
                report.events.append(repack(cluster, group, config, **kw).event)
            return report
        # rewriting residents of one host moves nothing, so it goes first
        report.request_host = _nm_attempts(cluster, config, request, report, kw)
        if report.request_host is None and config.migration != "NM":
            for group in select_hosts(list(cluster), config):
                out = repack(cluster, group, config, extra=request, **kw)
                report.events.append(out.event)
                if out.request_host is not None:
                    report.request_host = out.request_host
                    break
    return report


def _nm_attempts(cluster: Cluster, config: RepackConfig, request: tuple[int, FluidSla],
                 report: RepackReport, kw) -> Optional[int]:
    """Try folding the request into single hosts, most slack first."""
    floor = min(bt.result.util for bt in gen_transforms(request[1], cluster.context(),
                                                        kw["limits"], kw["mode"]))
    fits = [h for h in cluster if h.min_util + floor <= 1]
    fits.sort(key=lambda h: (h.min_util, h.id))
    for h in fits[: config.nm_max_hosts]:
        out = repack(cluster, [h.id], config, extra=request, **kw)
        report.events.append(out.event)
        if out.request_host is not None:
            return out.request_host
    return None


def make_repacker(cluster: Cluster, config: RepackConfig, clock: Callable[[], float],
                  events: list, **kw) -> Optional[Callable]:
    """Callback for :func:`morphosys.placement.was_admit` under forced repacking."""
    if config.policy != "FR":
        return None

    def run(request: FluidSla, task_id: int) -> Optional[int]:
        rep = maybe_repack(cluster, clock(), config, "was-failure", request=(task_id, request), **kw)
        events.extend(rep.events)
        return rep.request_host

    return run
