"""Discrete-event colocation simulation and colocation-efficiency reports."""
from __future__ import annotations

import csv
import heapq
import io
import statistics
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

from .hosts import Cluster
from .placement import PlacementEvent, WasPolicy, was_admit
from .repack import RepackConfig, RepackEvent, make_repacker, maybe_repack
from .schedulability import AdmissionTest
from .transform import GenLimits
from .workload import WorkloadSpec, gen_arrivals, load_manifest, synthetic_catalog

DEPARTURE, ARRIVAL, EPOCH = 0, 1, 2

RUN_FIELDS = ("strategy", "seed", "wasted", "wasted_orig", "host_time", "placements",
              "rejections", "repacks", "migrations")
SUMMARY_FIELDS = ("strategy", "mean_ce", "ci_low", "ci_high")
BASELINE = "FF"
SIM_HORIZON_CAP = 50_000
Z95 = 1.959963984540054


class BaselineError(ValueError):
    pass


@dataclass
class SimConfig:
    fit: str = "FF"
    transforms: str = "all"
    test: AdmissionTest = AdmissionTest.HARMONIC
    repack: RepackConfig = field(default_factory=lambda: RepackConfig(budget_nodes=400))
    gen: WorkloadSpec = field(default_factory=WorkloadSpec)
    limits: GenLimits = field(default_factory=GenLimits)
    horizon: float = 4 * 3600.0
    warmup: float = 0.0
    epoch: float = 60.0
    # exact analysis past this many slots refuses the set; keeps hybrid runs fast
    exact_horizon_cap: int = SIM_HORIZON_CAP
    host_cap: Optional[int] = None
    n_streams: int = 30
    stream_duration: float = 3600.0
    catalog_seed: int = 0
    # trace manifest to use instead of the synthetic catalog
    manifest: Optional[str] = None
    audit: bool = False

    def __post_init__(self):
        self.test = AdmissionTest(self.test)
        if self.horizon <= 0 or self.epoch <= 0:
            raise ValueError("horizon and epoch must be positive")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must lie in [0, horizon)")


@dataclass
class SimMetrics:
    wasted: float = 0.0
    wasted_orig: float = 0.0
    host_time: float = 0.0
    placements: int = 0
    rejections: int = 0
    repacks: int = 0
    migrations: int = 0
    peak_hosts: int = 0
    placement_log: list[PlacementEvent] = field(default_factory=list, repr=False)
    repack_log: list[RepackEvent] = field(default_factory=list, repr=False)

    def row(self, strategy: str, seed: int) -> list:
        return [strategy, seed, repr(self.wasted), repr(self.wasted_orig), repr(self.host_time),
                self.placements, self.rejections, self.repacks, self.migrations]


# -- strategies ----------------------------------------------------------------

def parse_strategy(name: str, base: SimConfig) -> SimConfig:
    """``FF``/``BF`` are plain fits (no rewriting, harmonic admission);
    ``FIT-NR`` adds rewriting; ``FIT-NM|CM|UM`` adds repacking, forced on
    admission failure unless ``@PR`` or ``@FR`` says otherwise."""
    head, _, when = name.partition("@")
    fit, _, mode = head.partition("-")
    if fit not in ("FF", "BF"):
        raise ValueError(f"unknown strategy {name!r}")
    if not mode:
        if when:
            raise ValueError(f"unknown strategy {name!r}")
        return replace(base, fit=fit, transforms="none", test=AdmissionTest.HARMONIC,
                       repack=replace(base.repack, policy="NR"))
    if mode == "NR":
        if when:
            raise ValueError(f"unknown strategy {name!r}")
        return replace(base, fit=fit, repack=replace(base.repack, policy="NR"))
    if mode not in ("NM", "CM", "UM"):
        raise ValueError(f"unknown strategy {name!r}")
    policy = when or (base.repack.policy if base.repack.policy != "NR" else "FR")
    if policy not in ("PR", "FR"):
        raise ValueError(f"unknown repack trigger in {name!r}")
    return replace(base, fit=fit, repack=replace(base.repack, policy=policy, migration=mode))


# -- the event loop ----------------------------------------------------------------

@lru_cache(maxsize=8)
def _catalog(n: int, duration: float, seed: int):
    return tuple(synthetic_catalog(n, duration, seed))


@lru_cache(maxsize=8)
def _manifest(path: str):
    return tuple(load_manifest(path))


def catalog_for(config: SimConfig):
    if config.manifest is not None:
        return _manifest(str(config.manifest))
    return _catalog(config.n_streams, config.stream_duration, config.catalog_seed)


def run(config: SimConfig, arrivals=None) -> SimMetrics:
    """Simulate ``[0, horizon)``; waste is integrated exactly between events
    and counted from ``warmup`` on."""
    if arrivals is None:
        arrivals = gen_arrivals(config.gen, catalog_for(config), config.horizon)
    cluster = Cluster(config.host_cap)
    policy = WasPolicy(config.fit, config.transforms, config.test, config.limits,
                       config.exact_horizon_cap)
    rcfg = config.repack
    kw = dict(test=config.test, cap=config.exact_horizon_cap, limits=config.limits,
              mode=config.transforms)
    m = SimMetrics()
    now = [0.0]
    repacker = make_repacker(cluster, rcfg, lambda: now[0], m.repack_log, **kw)

    heap: list[tuple] = []
    seq = 0
    for a in arrivals:
        heapq.heappush(heap, (a.time, ARRIVAL, seq, a))
        seq += 1
    if rcfg.policy == "PR":
        k = 1
        while k * rcfg.epoch < config.horizon:
            heapq.heappush(heap, (k * rcfg.epoch, EPOCH, seq, None))
            seq += 1
            k += 1

    last = 0.0
    alloc, orig, nhosts = 0.0, 0.0, 0
    while heap and heap[0][0] < config.horizon:
        t, kind, _, payload = heapq.heappop(heap)
        _accrue(m, config.warmup, last, t, alloc, orig, nhosts)
        last = now[0] = t
        if kind == DEPARTURE:
            cluster.release(payload)
        elif kind == ARRIVAL:
            d = was_admit(payload.sla, payload.task_id, cluster, policy, repacker)
            src = d.transform.source if d.transform is not None else ""
            m.placement_log.append(PlacementEvent(t, payload.task_id, d.outcome, d.host_id, src))
            if d.admitted:
                m.placements += 1
                heapq.heappush(heap, (payload.departure, DEPARTURE, seq, payload.task_id))
                seq += 1
            else:
                m.rejections += 1
        else:
            rep = maybe_repack(cluster, t, rcfg, "tick", **kw)
            m.repack_log.extend(rep.events)
        if config.audit:
            audit(cluster, config)
        alloc, orig, nhosts = cluster.utilization()
        m.peak_hosts = max(m.peak_hosts, nhosts)
    _accrue(m, config.warmup, last, config.horizon, alloc, orig, nhosts)
    m.repacks = sum(e.adopted for e in m.repack_log)
    m.migrations = sum(e.migrations for e in m.repack_log)
    return m


def _accrue(m: SimMetrics, warmup: float, t0: float, t1: float, alloc: float, orig: float,
            nhosts: int) -> None:
    span = t1 - max(t0, warmup)
    if span <= 0:
        return
    m.wasted += span * (nhosts - alloc)
    m.wasted_orig += span * (nhosts - orig)
    m.host_time += span * nhosts


def audit(cluster: Cluster, config: SimConfig) -> None:
    """Raise if any host oversells capacity or fails its admission test."""
    from .schedulability import admissible
    for h in cluster:
        if not h.check() or h.load.U > 1:
            raise AssertionError(f"host {h.id} bookkeeping broken")
        if not admissible(h.load.tasks, config.test, config.exact_horizon_cap):
            raise AssertionError(f"host {h.id} not admissible")


# -- reports -----------------------------------------------------------------------

def colocation_efficiency(wx: float, wff: float) -> float:
    if wff <= 0:
        raise BaselineError("baseline waste must be positive")
    return 1.0 - wx / wff


@dataclass(frozen=True)
class CeSummary:
    strategy: str
    mean_ce: float
    ci_low: float
    ci_high: float

    def row(self) -> list:
        return [self.strategy, repr(self.mean_ce), repr(self.ci_low), repr(self.ci_high)]


def mean_ci(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean with a normal-approximation 95% interval."""
    mu = statistics.fmean(values)
    if len(values) < 2:
        return mu, mu, mu
    half = Z95 * statistics.stdev(values) / len(values) ** 0.5
    return mu, mu - half, mu + half


@dataclass
class MatrixResult:
    runs: dict[tuple[str, int], SimMetrics]
    ce: dict[str, list[float]]
    summary: list[CeSummary]


def run_matrix(base: SimConfig, strategies: Sequence[str], seeds: Sequence[int]) -> MatrixResult:
    if BASELINE not in strategies:
        raise BaselineError(f"strategies must include the {BASELINE} baseline")
    runs: dict[tuple[str, int], SimMetrics] = {}
    ce: dict[str, list[float]] = {s: [] for s in strategies}
    for seed in seeds:
        seeded = replace(base, gen=replace(base.gen, seed=seed))
        arrivals = gen_arrivals(seeded.gen, catalog_for(seeded), seeded.horizon)
        for s in strategies:
            runs[s, seed] = run(parse_strategy(s, seeded), arrivals)
        wff = runs[BASELINE, seed].wasted
        for s in strategies:
            ce[s].append(colocation_efficiency(runs[s, seed].wasted, wff))
    summary = [CeSummary(s, *mean_ci(ce[s])) for s in strategies]
    return MatrixResult(runs, ce, summary)


def runs_csv(result: MatrixResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_FIELDS)
    for (s, seed), m in result.runs.items():
        w.writerow(m.row(s, seed))
    return buf.getvalue()


def summary_csv(result: MatrixResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for row in result.summary:
        w.writerow(row.row())
    return buf.getvalue()
