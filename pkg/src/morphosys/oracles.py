"""Exhaustive reference procedures used to cross-check the fast paths.

None of these share code with :mod:`morphosys.transform`; they enumerate
schedules (or search over them slot by slot) instead of reasoning about
interval overlaps in closed form.  They are exponential or pseudo-polynomial
and only meant for small instances.
"""
from __future__ import annotations

import itertools
from math import lcm

import numpy as np

from .sla import SlaType, satisfies_ct, satisfies_ctdw

BRUTE_FORCE_MAX_LEN = 22


def brute_force_contains(new: SlaType, orig: SlaType) -> bool:
    """Every window of length lcm(T, T') satisfying ``new`` satisfies ``orig``.

    Literal enumeration of all ``2**L`` binary windows.
    """
    L = lcm(new.T, orig.T)
    if L > BRUTE_FORCE_MAX_LEN:
        raise ValueError(f"window length {L} too large for literal enumeration")
    for bits in itertools.product((0, 1), repeat=L):
        if satisfies_ct(bits, new.C, new.T) and not satisfies_ct(bits, orig.C, orig.T):
            return False
    return True


def _placements(length: int, ones: int) -> list[tuple[int, ...]]:
    return [tuple(1 if i in chosen else 0 for i in range(length))
            for chosen in map(set, itertools.combinations(range(length), ones))]


def enumerated_contains(new: SlaType, orig: SlaType) -> bool:
    """Containment by enumerating, for every original interval, each way of
    placing exactly ``new.C`` slots in every supply interval overlapping it.

    Supply intervals are filled independently, and extra slots can only help,
    so these placements cover every worst case.
    """
    L = lcm(new.T, orig.T)
    patterns = _placements(new.T, new.C)
    for start in range(0, L, orig.T):
        end = start + orig.T
        first, last = start // new.T, (end - 1) // new.T
        for combo in itertools.product(patterns, repeat=last - first + 1):
            got = 0
            for q, pat in zip(range(first, last + 1), combo):
                base = q * new.T
                got += sum(pat[i] for i in range(max(start, base) - base, min(end, base + new.T) - base))
            if got < orig.C:
                return False
    return True


def worst_window_misses(supply: SlaType, demand_C: int, demand_T: int, b: int) -> int:
    """Largest number of unsatisfied demand intervals inside any aligned
    window of ``b`` demand intervals, over every schedule meeting the
    (miss-free) ``supply`` SLA.  Forward search over slots.
    """
    span = b * demand_T
    L = lcm(supply.T, span)
    # state: (supply ones, demand ones, misses in current window) -> worst completed window
    states = {(0, 0, 0): 0}
    for t in range(L):
        end_s = (t + 1) % supply.T == 0
        end_d = (t + 1) % demand_T == 0
        end_w = (t + 1) % span == 0
        nxt: dict[tuple[int, int, int], int] = {}
        for (os_, od, wm), worst in states.items():
            for bit in (0, 1):
                a, c, m, w = os_ + bit, od + bit, wm, worst
                if end_s:
                    if a < supply.C:
                        continue
                    a = 0
                if end_d:
                    m += c < demand_C
                    c = 0
                if end_w:
                    w = max(w, m)
                    m = 0
                key = (min(a, supply.C), min(c, demand_C), m)
                if nxt.get(key, -1) < w:
                    nxt[key] = w
        states = nxt
    return max(states.values())


def violates_ctdw(new: SlaType, orig: SlaType) -> bool:
    """True if some schedule satisfying ``new`` (with its own D/W slack)
    breaks ``orig``'s D/W guarantee.  Forward reachability over slots."""
    L = lcm(new.W * new.T, orig.W * orig.T)
    states = {(0, 0, 0, 0, False)}
    for t in range(L):
        end_s = (t + 1) % new.T == 0
        end_sw = (t + 1) % (new.W * new.T) == 0
        end_d = (t + 1) % orig.T == 0
        end_dw = (t + 1) % (orig.W * orig.T) == 0
        nxt = set()
        for o1, m1, o2, m2, bad in states:
            for bit in (0, 1):
                a, b, c, d, v = o1 + bit, m1, o2 + bit, m2, bad
                if end_s:
                    b += a < new.C
                    a = 0
                    if b > new.D:
                        continue
                if end_sw:
                    b = 0
                if end_d:
                    d += c < orig.C
                    c = 0
                    v = v or d > orig.D
                if end_dw:
                    d = 0
                nxt.add((min(a, new.C), b, min(c, orig.C), min(d, orig.D + 1), v))
        states = nxt
    return any(s[4] for s in states)


def brute_force_ctdw_contains(new: SlaType, orig: SlaType) -> bool:
    """Literal enumeration for the D/W forms (small horizons only)."""
    L = lcm(new.W * new.T, orig.W * orig.T)
    if L > BRUTE_FORCE_MAX_LEN:
        raise ValueError(f"window length {L} too large for literal enumeration")
    for bits in itertools.product((0, 1), repeat=L):
        if satisfies_ctdw(bits, new) and not satisfies_ctdw(bits, orig):
            return False
    return True


def exhaustive_packing(items, test="harmonic") -> tuple[int, object]:
    """Fewest bins, then least overhead, over every candidate choice, each
    choice vector first-fit in item order.  ``items`` holds candidate lists
    of :class:`~morphosys.transform.BoundedTransform`."""
    from .schedulability import admissible

    best = None
    for combo in itertools.product(*items):
        bins: list[list[SlaType]] = []
        for bt in combo:
            for b in bins:
                if admissible(b + [bt.result], test):
                    b.append(bt.result)
                    break
            else:
                bins.append([bt.result])
        value = (len(bins), sum(bt.result.util - bt.original.util for bt in combo))
        if best is None or value < best:
            best = value
    return best


FULL_WINDOW_MAX = 16


def _bit_rows(width: int) -> np.ndarray:
    codes = np.arange(1 << width, dtype=np.int64)
    return ((codes[:, None] >> np.arange(width)) & 1).astype(np.int8)


def window_contains(new: SlaType, orig: SlaType) -> bool:
    """Literal enumeration of binary windows, vectorized.

    Up to :data:`FULL_WINDOW_MAX` slots every window of length lcm(T, T') is
    tried.  Beyond that each original interval is checked against every bit
    pattern over the supply intervals that overlap it; slots outside those
    intervals cannot affect it, and each supply interval is constrained on
    its own, so the verdict is the same as the full enumeration's.
    """
    L = lcm(new.T, orig.T)
    if L <= FULL_WINDOW_MAX:
        rows = _bit_rows(L)
        ok_new = (rows.reshape(len(rows), -1, new.T).sum(axis=2) >= new.C).all(axis=1)
        ok_orig = (rows.reshape(len(rows), -1, orig.T).sum(axis=2) >= orig.C).all(axis=1)
        return not bool((ok_new & ~ok_orig).any())
    for start in range(0, L, orig.T):
        first, last = start // new.T, (start + orig.T - 1) // new.T
        base = first * new.T
        span = (last - first + 1) * new.T
        rows = _bit_rows(span)
        ok_new = (rows.reshape(len(rows), -1, new.T).sum(axis=2) >= new.C).all(axis=1)
        got = rows[:, start - base:start - base + orig.T].sum(axis=1)
        if bool((ok_new & (got < orig.C)).any()):
            return False
    return True
