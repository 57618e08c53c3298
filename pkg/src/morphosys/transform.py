"""Safe SLA rewriting: subtyping checks, bounded-miss transforms and the
candidate generator used by placement and repacking.

Naming follows the subtype direction ``new <| orig``: a resource supplied
according to ``new`` is guaranteed to honour ``orig``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, gcd, lcm
from typing import Iterable, Optional

from .sla import FluidSla, SlaType, require_valid


@dataclass(frozen=True)
class TransferBound:
    m: int
    n: int
    s: int
    l: int

    @property
    def a(self) -> int:
        return self.m - max(self.s, self.l)


@dataclass(frozen=True)
class BoundedTransform:
    """``result`` is scheduled in place of ``original``; at most ``a`` of every
    ``b`` aligned original intervals may go unsatisfied."""

    result: SlaType
    original: SlaType
    a: int = 0
    b: int = 1
    source: str = "identity"
    detail: Optional[TransferBound] = None

    @property
    def safe(self) -> bool:
        return self.a == 0

    @property
    def overhead(self) -> Fraction:
        return self.result.util - self.original.util

    def csv(self) -> str:
        return f"{self.result.csv()},{self.a},{self.b},{self.source}"


@dataclass(frozen=True)
class GenLimits:
    max_k: int = 8
    max_candidates: int = 32


TRANSFORM_MODES = ("all", "fluid", "nonfluid", "none")


# -- miss-free subtyping -----------------------------------------------------

def ct_condition(new: SlaType, orig: SlaType) -> Optional[int]:
    """Which of the three closed-form sufficient conditions certifies
    ``(C,T) <| (C',T')``, if any."""
    C, T, Cp, Tp = new.C, new.T, orig.C, orig.T
    if 2 * T <= Tp:
        K = Tp // T
        return 1 if C * (K - 1) >= Cp else None
    if T > Tp:
        return 2 if 2 * C >= 2 * T - (Tp - Cp) else None
    return 3 if 3 * C >= 3 * T - (Tp - Cp) else None


def min_guaranteed(C: int, T: int, lo: int, hi: int) -> int:
    """Fewest allocated slots in ``[lo, hi)`` over every schedule giving ``C``
    slots to each aligned ``T``-interval: the adversary pushes each interval's
    allocation outside the range as far as it fits."""
    total = 0
    for q in range(lo // T, (hi - 1) // T + 1):
        start = q * T
        inside = min(hi, start + T) - max(lo, start)
        total += max(0, C - (T - inside))
    return total


@lru_cache(maxsize=65536)
def _contains(C: int, T: int, Cp: int, Tp: int) -> bool:
    for start in range(0, lcm(T, Tp), Tp):
        if min_guaranteed(C, T, start, start + Tp) < Cp:
            return False
    return True


def subtype_ct(new: SlaType, orig: SlaType) -> bool:
    """Exact decision of ``(C,T) <| (C',T')`` for phase-aligned intervals."""
    if ct_condition(new, orig) is not None:
        return True
    return _contains(new.C, new.T, orig.C, orig.T)


def subtype_ct_reason(new: SlaType, orig: SlaType) -> Optional[str]:
    cond = ct_condition(new, orig)
    if cond is not None:
        return f"condition {cond}"
    return "exact" if _contains(new.C, new.T, orig.C, orig.T) else None


@lru_cache(maxsize=65536)
def min_supply(C: int, T: int, T_new: int) -> int:
    """Smallest ``C'`` with ``(C', T_new) <| (C, T)``; full supply always works."""
    lo, hi = 1, T_new
    while lo < hi:
        mid = (lo + hi) // 2
        if _contains(mid, T_new, C, T):
            hi = mid
        else:
            lo = mid + 1
    return lo


# -- miss-tolerant subtyping -------------------------------------------------

def ctdw_condition(new: SlaType, orig: SlaType) -> Optional[int]:
    """Closed-form sufficient conditions for ``(C,T,D,W) <| (C',T',D',W')``.

    Requires ``D' > 0``.  The second condition uses the tighter miss bound
    ``D <= D'/(2(K+1))``.
    """
    C, T, D, W = new.C, new.T, new.D, new.W
    Cp, Tp, Dp, Wp = orig.C, orig.T, orig.D, orig.W
    if Dp == 0:
        raise ValueError("closed-form conditions need D' > 0")
    K = Tp // T
    spread = Fraction(D * Wp, Dp)
    if 2 * T <= Tp:
        ok = (C * (K - 1) >= Cp and 2 * D <= Dp and W >= spread * (K + 1))
        return 1 if ok else None
    if T > Tp:
        ok = (2 * C >= 2 * T - (Tp - Cp) and 2 * (K + 1) * D <= Dp and W >= spread * (K + 1))
        return 2 if ok else None
    ok = 3 * C >= 3 * T - (Tp - Cp) and 2 * D <= Dp and W >= 2 * spread
    return 3 if ok else None


def subtype_ctdw(new: SlaType, orig: SlaType, verify: bool = True) -> bool:
    """Sufficient check for the D/W forms; ``False`` means "not established".

    A miss-free ``new`` is decided exactly through :func:`subtype_ct`.  The
    closed-form conditions alone admit counterexamples when ``T > T'`` (e.g.
    ``(2,2,1,2)`` against ``(1,1,2,3)``), so by default a positive verdict is
    confirmed by slot-level search over one hyperperiod of both windows.
    """
    require_valid(new)
    require_valid(orig)
    if new.D == 0:
        return subtype_ct(new, orig)
    if orig.D == 0:
        return False
    if Fraction(new.D, new.W) > Fraction(orig.D, orig.W):
        return False
    if ctdw_condition(new, orig) is None:
        return False
    if verify:
        from .oracles import violates_ctdw
        return not violates_ctdw(new, orig)
    return True


# -- rewriting rules ---------------------------------------------------------

def harmonic_scale(host: SlaType, K: int) -> SlaType:
    """Demand ``(KC, KT)`` that a host supplying ``(C, T)`` always honours."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return SlaType(K * host.C, K * host.T)


def stretch_band(C: int, T: int, K: int, C_prime: int) -> Optional[int]:
    """Guaranteed satisfied intervals out of ``K`` when ``(C_prime, K*T)``
    replaces ``(C, T)``; ``None`` when no interval is guaranteed."""
    base = K * (C - 1)
    if C_prime < base + 1:
        return None
    return min(K, ceil(Fraction(C_prime - base, T - (C - 1))))


def bounded_stretch(orig: SlaType, K: int, C_prime: int) -> Optional[BoundedTransform]:
    """Serve ``(C, T)`` with ``(C', K*T)``; ``None`` when misses are certain."""
    if K <= 1:
        raise ValueError("K must be > 1")
    T_prime = K * orig.T
    if not 0 <= C_prime <= T_prime:
        raise ValueError(f"C'={C_prime} outside [0, {T_prime}]")
    J = stretch_band(orig.C, orig.T, K, C_prime)
    if J is None:
        return None
    base = SlaType(orig.C, orig.T, orig.D, orig.W)
    if J == K:
        return BoundedTransform(SlaType(C_prime, T_prime), base, 0, 1, f"stretch:K={K};J={K}")
    return BoundedTransform(SlaType(C_prime, T_prime), base, K - J, K, f"stretch:K={K};J={J}")


def transfer_bound(C: int, T: int, T_new: int) -> TransferBound:
    L = lcm(T, T_new)
    m, n = L // T, L // T_new
    return TransferBound(m, n, n - m + 1, ceil(Fraction(m, C + 1)))


def bounded_shrink(orig: SlaType, T_new: int) -> BoundedTransform:
    """Keep ``C`` but shorten the period to ``T_new``."""
    C, T = orig.C, orig.T
    if not (2 * T_new > T + C and T_new < T and C <= T_new):
        raise ValueError(f"T'={T_new} outside the band ((T+C)/2, T) with C <= T' for {orig}")
    tb = transfer_bound(C, T, T_new)
    return BoundedTransform(SlaType(C, T_new), SlaType(C, T, orig.D, orig.W), tb.a, tb.m,
                            f"shrink:T={T_new};m={tb.m};n={tb.n};s={tb.s};l={tb.l}", tb)


def compose_bounds(first: tuple[int, int], second: tuple[int, int]) -> tuple[int, int]:
    a, b = first
    x, y = second
    if not (0 <= a <= b and 0 <= x <= y and b >= 1 and y >= 1):
        raise ValueError(f"malformed miss bounds {first}, {second}")
    return b * x + (y - x) * a, b * y


def fluid_retime(fluid: FluidSla, T_new: int) -> SlaType:
    if not fluid.Tl <= T_new <= fluid.Tu:
        raise ValueError(f"T'={T_new} outside [{fluid.Tl}, {fluid.Tu}]")
    return SlaType(ceil(Fraction(fluid.C * T_new, fluid.T)), T_new, fluid.D, fluid.W)


def window_misses(a: int, b: int, W: int) -> int:
    """Most misses an aligned W-interval window can collect when every aligned
    b-interval block misses at most ``a``."""
    worst = 0
    g = gcd(W, b)
    for offset in range(0, b, g):
        left, pos, got = W, offset, 0
        while left > 0:
            seg = min(b - pos, left)
            got += min(a, seg)
            left -= seg
            pos = 0
        worst = max(worst, got)
    return worst


def fits_budget(a: int, b: int, D: int, W: int) -> bool:
    if a == 0:
        return True
    if Fraction(a, b) > Fraction(D, W):
        return False
    return window_misses(a, b, W) <= D


# -- candidate generation ----------------------------------------------------

def candidate_periods(T: int, context: Iterable[int], max_k: int) -> list[int]:
    seeds = set(context)
    seeds.add(T)
    out = set()
    for p in seeds:
        for j in range(1, max_k + 1):
            out.add(p * j)
            if p % j == 0:
                out.add(p // j)
    return sorted(p for p in out if p != T and p <= max_k * T)


def _order_key(bt: BoundedTransform):
    # floats order these small-denominator rationals exactly and sort far faster
    r, o = bt.result, bt.original
    return (r.C / r.T - o.C / o.T, r.T, bt.a / bt.b, r.C, bt.source)


def gen_transforms(task: FluidSla, context: Iterable[int] = (), limits: GenLimits = GenLimits(),
                   mode: str = "all") -> list[BoundedTransform]:
    """Identity first, then safe or budget-respecting rewrites of ``task``
    ordered by ascending utilization overhead."""
    if mode not in TRANSFORM_MODES:
        raise ValueError(f"unknown transform mode {mode!r}")
    return list(_gen(task, tuple(sorted(set(context))), limits, mode))


@lru_cache(maxsize=8192)
def _gen(task: FluidSla, context: tuple[int, ...], limits: GenLimits, mode: str):
    base = task.nominal
    identity = BoundedTransform(base, base)
    if mode == "none":
        return (identity,)
    found: dict[tuple, tuple] = {}
    for Tn in candidate_periods(base.T, context, limits.max_k):
        for bt in _rewrites_at(task, Tn, mode):
            key = (bt.result, bt.a, bt.b)
            order = _order_key(bt)
            if key not in found or order < found[key][0]:
                found[key] = (order, bt)
    ranked = sorted(found.values(), key=lambda e: e[0])
    return (identity, *(bt for _, bt in ranked[: max(0, limits.max_candidates - 1)]))


@lru_cache(maxsize=65536)
def _rewrites_at(task: FluidSla, Tn: int, mode: str) -> tuple[BoundedTransform, ...]:
    """Every rewrite of ``task`` onto period ``Tn`` allowed by ``mode``."""
    base = task.nominal
    C, T, D, W = base.C, base.T, base.D, base.W
    out: list[BoundedTransform] = []

    def emit(bt: BoundedTransform) -> None:
        if bt.result.C <= bt.result.T and not (bt.result == base and bt.safe):
            out.append(bt)

    if mode in ("all", "fluid") and task.fluid and task.Tl <= Tn <= task.Tu:
        emit(BoundedTransform(fluid_retime(task, Tn), base, source=f"fluid:T={Tn}"))
    if mode not in ("all", "nonfluid"):
        return tuple(out)
    if Tn < T and T % Tn == 0:
        K = T // Tn
        emit(BoundedTransform(SlaType(ceil(Fraction(C, K)), Tn), base, source=f"scale:K={K}"))
    elif Tn % T == 0:
        K = Tn // T
        emit(BoundedTransform(SlaType((K - 1) * T + C, Tn), base, source=f"stretch:K={K};J={K}"))
    else:
        Cn = min_supply(C, T, Tn)
        reason = ct_condition(SlaType(Cn, Tn), base)
        tag = f"cond={reason}" if reason else "exact"
        emit(BoundedTransform(SlaType(Cn, Tn), base, source=f"subtype:T={Tn};{tag}"))
    if D == 0:
        return tuple(out)
    if Tn % T == 0 and Tn > T:
        K = Tn // T
        for J in range(1, K):
            if fits_budget(K - J, K, D, W):
                Cp = K * (C - 1) + (J - 1) * (T - (C - 1)) + 1
                emit(BoundedTransform(SlaType(Cp, Tn), base, K - J, K, f"stretch:K={K};J={J}"))
                break
    if 2 * Tn > T + C and Tn < T and C <= Tn:
        bt = bounded_shrink(base, Tn)
        if fits_budget(bt.a, bt.b, D, W):
            emit(bt)
    return tuple(out)
