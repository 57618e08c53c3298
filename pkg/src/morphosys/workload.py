"""Video-stream workloads: trace ingestion, SLA derivation, and Poisson churn."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .sla import FluidSla, require_valid

FRAME_TYPES = ("I", "P", "B")


class TraceError(ValueError):
    pass


class UndeliverableStream(ValueError):
    pass


@dataclass(frozen=True)
class StreamProfile:
    stream_id: str
    base_period: Fraction  # seconds between I-frames
    gop_bytes: tuple[int, ...]
    frame_rate: Fraction = Fraction(25)

    def __post_init__(self):
        if any(b < 0 for b in self.gop_bytes):
            raise ValueError("GoP byte volumes must be non-negative")
        if self.base_period <= 0:
            raise ValueError("base period must be positive")

    @property
    def duration(self) -> Fraction:
        return len(self.gop_bytes) * self.base_period


@dataclass
class WorkloadSpec:
    fluid_fraction: float = 0.0
    sigma: int = 1
    beta: int = 1
    gamma: int = 10
    lam: float = 1.0
    # seconds per unit of ``lam``: the default reads lam as arrivals per minute
    rate_unit: float = 60.0
    up_fraction: float = 0.0
    delta: float = 0.999
    interval: float = 300.0
    slot_rate: int = 50
    disk_unit: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.beta <= self.gamma:
            raise ValueError("need 1 <= beta <= gamma")
        if not 0 <= self.fluid_fraction <= 1 or not 0 <= self.up_fraction <= 1:
            raise ValueError("fractions must lie in [0, 1]")
        if self.sigma < 0 or self.lam < 0:
            raise ValueError("sigma and lam must be non-negative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


# -- traces ------------------------------------------------------------------

def read_frames(path: Union[str, Path]) -> list[tuple[int, str, int]]:
    frames = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != 3:
                raise TraceError(f"{path}:{lineno}: expected index,type,size_bytes")
            try:
                idx, size = int(parts[0]), int(parts[2])
            except ValueError:
                raise TraceError(f"{path}:{lineno}: non-integer field") from None
            kind = parts[1].upper()
            if kind not in FRAME_TYPES:
                raise TraceError(f"{path}:{lineno}: unknown frame type {parts[1]!r}")
            if size < 0:
                raise TraceError(f"{path}:{lineno}: negative frame size")
            if idx != len(frames):
                raise TraceError(f"{path}:{lineno}: frame index {idx}, expected {len(frames)}")
            frames.append((idx, kind, size))
    if not frames:
        raise TraceError(f"{path}: empty trace")
    return frames


def gops(frames: Sequence[tuple[int, str, int]]) -> list[list[int]]:
    if frames[0][1] != "I":
        raise TraceError("trace must start with an I-frame")
    groups: list[list[int]] = []
    for _, kind, size in frames:
        if kind == "I":
            groups.append([])
        groups[-1].append(size)
    lengths = {len(g) for g in groups}
    if len(lengths) > 1:
        raise TraceError(f"inconsistent GoP length: {sorted(lengths)}")
    return groups


def ingest_trace(path: Union[str, Path], frame_rate: Union[int, Fraction] = 25,
                 stream_id: Optional[str] = None) -> StreamProfile:
    groups = gops(read_frames(path))
    rate = Fraction(frame_rate)
    return StreamProfile(stream_id or Path(path).stem, len(groups[0]) / rate,
                         tuple(sum(g) for g in groups), rate)


def write_trace(path: Union[str, Path], frames: Sequence[tuple[str, int]]) -> None:
    with open(path, "w") as fh:
        for i, (kind, size) in enumerate(frames):
            fh.write(f"{i},{kind},{size}\n")


# -- SLA derivation ----------------------------------------------------------

def period_slots(profile: StreamProfile, slot_rate: int) -> int:
    slots = profile.base_period * slot_rate
    if slots.denominator != 1:
        raise ValueError(f"GoP period {profile.base_period}s is not a whole number of slots")
    return int(slots)


@lru_cache(maxsize=1024)
def peak_window(gop_bytes: tuple[int, ...], theta: int) -> int:
    """Largest byte volume over aligned runs of ``theta`` GoPs."""
    b = gop_bytes
    return max(sum(b[j:j + theta]) for j in range(0, len(b), theta))


def derive_sla(profile: StreamProfile, theta: int, sigma: int, slot_rate: int,
               disk_unit: int) -> FluidSla:
    """Reserve the peak ``theta``-GoP byte volume once per ``theta`` GoPs."""
    if theta < 1 or sigma < 0:
        raise ValueError("need theta >= 1 and sigma >= 0")
    if disk_unit <= 0:
        raise ValueError("disk_unit must be positive")
    base = period_slots(profile, slot_rate)
    T = theta * base
    peak = peak_window(profile.gop_bytes, theta)
    C = max(1, ceil(Fraction(peak, disk_unit)))
    if C > T:
        raise UndeliverableStream(f"{profile.stream_id}: C={C} exceeds T={T} at theta={theta}")
    Tl = max(1, (theta - sigma) * base)
    sla = FluidSla(C, T, Tl, (theta + sigma) * base)
    require_valid(sla)
    return sla


def apply_uptime_policy(sla: FluidSla, delta: Union[float, Fraction], interval: float = 300,
                        slot_rate: int = 1) -> FluidSla:
    """Tolerate ``(1 - delta)`` of the periods in each ``interval``-second window."""
    d = Fraction(str(delta)) if isinstance(delta, float) else Fraction(delta)
    if not 0 < d < 1:
        raise ValueError("delta must lie in (0, 1)")
    W = ceil(Fraction(str(interval)) * slot_rate / sla.T)
    D = floor((1 - d) * W)
    return replace(sla, D=D, W=W)


# -- synthetic catalog -------------------------------------------------------

GOP_LENGTH = 12
FRAME_RATES = (Fraction(24), Fraction(25), Fraction(30))


def synth_gops(rng: np.random.Generator, n_gops: int, mean_rate: float,
               frame_rate: Fraction) -> np.ndarray:
    """Per-GoP byte volumes averaging ``mean_rate`` bytes/s: a mean-reverting
    scene complexity plus per-GoP noise."""
    gop_mean = mean_rate * GOP_LENGTH / float(frame_rate)
    shocks = rng.normal(0, 0.04, n_gops)
    level = np.empty(n_gops)
    x = 0.0
    for i, e in enumerate(shocks):
        x = 0.98 * x + e
        level[i] = x
    gop = gop_mean * np.exp(level) * rng.lognormal(-0.02, 0.2, n_gops)
    return gop.astype(np.int64)


def split_gop(rng: np.random.Generator, volume: int) -> list[tuple[str, int]]:
    """Frames of one GoP summing exactly to ``volume``; the I-frame takes a third."""
    i_size = volume // 3
    weights = rng.dirichlet(np.full(GOP_LENGTH - 1, 8.0))
    rest = [int(w * (volume - i_size)) for w in weights]
    rest[-1] += volume - i_size - sum(rest)
    return [("I", i_size)] + [("P" if k % 3 == 2 else "B", s) for k, s in enumerate(rest)]


def synthetic_catalog(n_streams: int = 30, duration: float = 3600, seed: int = 0,
                      rate_range: tuple[float, float] = (250_000, 1_000_000),
                      with_frames: bool = False):
    """``n_streams`` profiles over three base periods (12-frame GoPs at 24,
    25 and 30 fps).  With ``with_frames`` also returns per-stream frame lists."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    profiles, traces = [], []
    for i in range(n_streams):
        fps = FRAME_RATES[i % len(FRAME_RATES)]
        base = GOP_LENGTH / fps
        n_gops = int(Fraction(str(duration)) / base)
        volumes = synth_gops(rng, n_gops, rng.uniform(*rate_range), fps)
        profiles.append(StreamProfile(f"s{i:02d}", base, tuple(int(v) for v in volumes), fps))
        if with_frames:
            traces.append([f for v in volumes for f in split_gop(rng, int(v))])
    return (profiles, traces) if with_frames else profiles


def write_manifest(path: Union[str, Path], rows: Sequence[tuple[str, str, Fraction]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stream_id", "path", "frame_rate"])
        for sid, trace, fps in rows:
            w.writerow([sid, trace, fps])


def load_manifest(path: Union[str, Path]) -> list[StreamProfile]:
    base = Path(path).parent
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise TraceError(f"{path}: empty manifest")
    return [ingest_trace(base / r["path"], Fraction(r["frame_rate"]), r["stream_id"]) for r in rows]


# -- arrivals ----------------------------------------------------------------

@dataclass(frozen=True)
class Arrival:
    time: float
    task_id: int
    stream: int
    theta: int
    fluid: bool
    uptime: bool
    sla: FluidSla
    departure: float


def gen_arrivals(spec: WorkloadSpec, catalog: Sequence[StreamProfile], horizon: float) -> list[Arrival]:
    """Poisson arrivals over ``[0, horizon)`` seconds.

    Each attribute draws from its own seeded substream, so two specs that
    differ only in a fraction or level produce the same streams, thetas and
    times, and differ only in which tasks are fluid or carry an uptime policy.
    """
    if not catalog:
        raise ValueError("empty catalog")
    times_ss, stream_ss, theta_ss, fluid_ss, up_ss = np.random.SeedSequence(spec.seed).spawn(5)
    out: list[Arrival] = []
    if spec.lam == 0:
        return out
    mean_gap = spec.rate_unit / spec.lam
    t_rng = np.random.default_rng(times_ss)
    s_rng, th_rng = np.random.default_rng(stream_ss), np.random.default_rng(theta_ss)
    f_rng, u_rng = np.random.default_rng(fluid_ss), np.random.default_rng(up_ss)
    t = 0.0
    while True:
        t += float(t_rng.exponential(mean_gap))
        if t >= horizon:
            break
        stream = int(s_rng.integers(len(catalog)))
        theta = int(th_rng.integers(spec.beta, spec.gamma + 1))
        fluid = bool(f_rng.random() < spec.fluid_fraction)
        uptime = bool(u_rng.random() < spec.up_fraction)
        prof = catalog[stream]
        sla = derive_sla(prof, theta, spec.sigma if fluid else 0, spec.slot_rate, spec.disk_unit)
        if uptime:
            sla = apply_uptime_policy(sla, spec.delta, spec.interval, spec.slot_rate)
        out.append(Arrival(t, len(out), stream, theta, fluid, uptime, sla,
                           t + float(prof.duration)))
    return out
