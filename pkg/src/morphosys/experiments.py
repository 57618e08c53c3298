"""Canned CE sweeps shared by the scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from .schedulability import AdmissionTest
from .sim import BASELINE, MatrixResult, SimConfig, colocation_efficiency, mean_ci, parse_strategy, run, run_matrix
from .workload import gen_arrivals
from .sim import catalog_for

# three hours with the first (one stream length) discarded as warm-up
SWEEP_BASE = SimConfig(horizon=3 * 3600.0, warmup=3600.0)
RATES = (0.5, 1.0, 2.0)
RATE_STRATEGIES = ("FF", "BF", "FF-NR", "BF-NR", "FF-NM", "BF-NM", "FF-CM", "FF-UM")


@dataclass(frozen=True)
class Interval:
    mean: float
    low: float
    high: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Interval":
        return cls(*mean_ci(values))

    def __str__(self) -> str:
        return f"{self.mean:.3f} [{self.low:.3f}, {self.high:.3f}]"


def paired(xs: Sequence[float], ys: Sequence[float]) -> Interval:
    """CI of the per-seed difference ``x - y``."""
    return Interval.of([x - y for x, y in zip(xs, ys)])


def ce_by_rate(seeds: Sequence[int], rates: Sequence[float] = RATES,
               strategies: Sequence[str] = RATE_STRATEGIES,
               base: SimConfig = SWEEP_BASE) -> dict[float, MatrixResult]:
    return {lam: run_matrix(replace(base, gen=replace(base.gen, lam=lam)), strategies, seeds)
            for lam in rates}


def sweep(variants: Mapping[object, SimConfig], strategy: str, seeds: Sequence[int],
          progress: Callable[[str], None] = lambda _: None) -> dict[object, list[float]]:
    """Per-seed CE of ``strategy`` against FF under each workload variant."""
    out: dict[object, list[float]] = {k: [] for k in variants}
    for key, cfg in variants.items():
        for seed in seeds:
            seeded = replace(cfg, gen=replace(cfg.gen, seed=seed))
            arrivals = gen_arrivals(seeded.gen, catalog_for(seeded), seeded.horizon)
            wff = run(parse_strategy(BASELINE, seeded), arrivals).wasted
            wx = run(parse_strategy(strategy, seeded), arrivals).wasted
            out[key].append(colocation_efficiency(wx, wff))
        progress(f"{key}: {Interval.of(out[key])}")
    return out


def fluid_mix_variants(fractions: Sequence[float], sigma: int = 1, lam: float = 1.0,
                       base: SimConfig = SWEEP_BASE) -> dict[float, SimConfig]:
    """Only fluid rewrites are allowed, so non-fluid tasks are placed as-is."""
    return {f: replace(base, transforms="fluid",
                       gen=replace(base.gen, lam=lam, sigma=sigma, fluid_fraction=f))
            for f in fractions}


def fluid_level_variants(sigmas: Sequence[int], fraction: float = 1.0, lam: float = 1.0,
                         base: SimConfig = SWEEP_BASE) -> dict[int, SimConfig]:
    return {s: replace(base, transforms="fluid",
                       gen=replace(base.gen, lam=lam, sigma=s, fluid_fraction=fraction))
            for s in sigmas}


def uptime_variants(settings: Sequence[tuple[float, float]], lam: float = 1.0,
                    base: SimConfig = SWEEP_BASE) -> dict[tuple[float, float], SimConfig]:
    """Keys are ``(up_fraction, delta)``; miss-tolerant sets get exact analysis."""
    return {(up, d): replace(base, test=AdmissionTest.HYBRID,
                             gen=replace(base.gen, lam=lam, up_fraction=up, delta=d))
            for up, d in settings}


@dataclass(frozen=True)
class Trend:
    steps: tuple[Interval, ...]
    overall: Interval

    @property
    def nondecreasing(self) -> bool:
        """No step drops significantly and the ends rise significantly."""
        return all(s.high >= 0 for s in self.steps) and self.overall.low > 0


def trend(series: Sequence[Sequence[float]]) -> Trend:
    steps = tuple(paired(b, a) for a, b in zip(series, series[1:]))
    return Trend(steps, paired(series[-1], series[0]))


# -- scale smoke test ------------------------------------------------------------

@dataclass(frozen=True)
class ScaleReport:
    hosts: int
    requests: int
    mean_ms: float
    max_ms: float
    outcomes: dict


def scale_smoke(n_hosts: int = 4000, n_requests: int = 600, seed: int = 0,
                base: SimConfig = SWEEP_BASE) -> ScaleReport:
    """Fill ``n_hosts`` hosts directly with workload tasks, then time online
    admissions (forced NM repacking on failure) interleaved with departures."""
    import random
    import time

    from .hosts import Cluster, Resident
    from .placement import WasPolicy, was_admit
    from .repack import RepackConfig, make_repacker
    from .transform import BoundedTransform

    rng = random.Random(seed)
    spec = replace(base.gen, lam=60.0, fluid_fraction=0.5, seed=seed)
    catalog = catalog_for(base)
    pool = [a.sla for a in gen_arrivals(spec, catalog, 600.0)]
    cluster = Cluster()
    tid = 0
    for _ in range(n_hosts):
        host = cluster.new_host()
        misses = 0
        while misses < 20:
            sla = pool[rng.randrange(len(pool))]
            if not host.load.admits(sla.nominal, base.test):
                misses += 1
                continue
            bt = BoundedTransform(sla.nominal, sla.nominal)
            cluster.place(host, Resident(tid, sla, bt, sla.util))
            tid += 1
    policy = WasPolicy("FF", "all", base.test, base.limits, base.exact_horizon_cap)
    rcfg = RepackConfig(policy="FR", migration="NM", budget_nodes=400)
    repacker = make_repacker(cluster, rcfg, lambda: 0.0, [], test=base.test,
                             cap=base.exact_horizon_cap, limits=base.limits, mode="all")
    times, outcomes = [], {}
    live = list(cluster.where)
    for i in range(n_requests):
        # arrivals outpace departures so the cluster keeps filling up
        if i % 2:
            cluster.release(live.pop(rng.randrange(len(live))))
        sla = pool[rng.randrange(len(pool))]
        t0 = time.perf_counter()
        d = was_admit(sla, tid, cluster, policy, repacker)
        times.append(time.perf_counter() - t0)
        outcomes[d.outcome] = outcomes.get(d.outcome, 0) + 1
        live.append(tid)
        tid += 1
    return ScaleReport(n_hosts, n_requests, 1000 * sum(times) / len(times), 1000 * max(times), outcomes)
