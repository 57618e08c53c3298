from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chi2

from morphosys.sla import validate
from morphosys.transform import fluid_retime
from morphosys.workload import (Arrival, StreamProfile, TraceError, UndeliverableStream, WorkloadSpec,
                                apply_uptime_policy, derive_sla, gen_arrivals, ingest_trace,
                                load_manifest, synthetic_catalog, write_manifest, write_trace)
from morphosys.sla import FluidSla


def write(path, text):
    path.write_text(text)
    return path


def test_toy_trace(tmp_path):
    p = tmp_path / "toy.trace"
    write_trace(p, [("I", 5000), ("P", 1000), ("P", 1000)] * 3)
    prof = ingest_trace(p, frame_rate=3)
    assert prof.gop_bytes == (7000, 7000, 7000)
    assert prof.base_period == 1 and prof.stream_id == "toy"


def test_comments_and_blank_lines(tmp_path):
    p = write(tmp_path / "c.trace", "# header\n0,I,10\n\n1,P,5\n")
    assert ingest_trace(p, 2).gop_bytes == (15,)


@pytest.mark.parametrize("body, msg", [
    ("", "empty"),
    ("0,I,10\n1,X,4\n", ":2:"),
    ("0,I,10\n1,P\n", ":2:"),
    ("0,I,10\n2,P,4\n", ":2:"),
    ("0,P,10\n", "I-frame"),
    ("0,I,1\n1,P,1\n2,I,1\n3,P,1\n4,P,1\n", "inconsistent"),
])
def test_trace_errors(tmp_path, body, msg):
    p = write(tmp_path / "bad.trace", body)
    with pytest.raises(TraceError, match=msg):
        ingest_trace(p)


def profile(gops, period=1):
    return StreamProfile("x", Fraction(period), tuple(gops))


def test_derive_sla_cap_violation():
    with pytest.raises(UndeliverableStream):
        derive_sla(profile([8000, 12000, 10000]), 1, 0, 10, 200)


def test_derive_sla_arithmetic():
    sla = derive_sla(profile([8000, 12000, 10000]), 1, 0, 10, 2000)
    assert (sla.C, sla.T) == (6, 10) and sla.util == Fraction(3, 5)
    assert sla.Tl == sla.Tu == sla.T and not sla.fluid


def test_derive_sla_fluid_bounds():
    sla = derive_sla(profile([8000, 12000, 10000, 9000]), 2, 1, 10, 2000)
    assert (sla.C, sla.T, sla.Tl, sla.Tu) == (10, 20, 10, 30)
    clamped = derive_sla(profile([100] * 4), 1, 3, 10, 2000)
    assert clamped.Tl == 1


def test_derive_sla_monotone():
    prof = synthetic_catalog(3, 120, seed=4)[1]
    for theta in range(1, 6):
        small = derive_sla(prof, theta, 0, 50, 100_000)
        big = derive_sla(prof, theta, 0, 50, 200_000)
        assert big.C <= small.C
        if theta > 1:
            assert small.T >= derive_sla(prof, theta - 1, 0, 50, 100_000).T


@pytest.mark.parametrize("T, rate, delta, W, D", [(30, 1, 0.995, 10, 0), (3, 1, 0.995, 100, 0),
                                                  (3, 1, 0.99, 100, 1), (3, 1, 0.999999, 100, 0)])
def test_uptime_policy(T, rate, delta, W, D):
    out = apply_uptime_policy(FluidSla(1, T, T, T), delta, 300, rate)
    assert (out.W, out.D) == (W, D)


def test_uptime_policy_rejects_bad_delta():
    with pytest.raises(ValueError):
        apply_uptime_policy(FluidSla(1, 3, 3, 3), 1.0)


def test_catalog_shape():
    cat = synthetic_catalog()
    assert len(cat) == 30
    assert {p.base_period for p in cat} == {Fraction(1, 2), Fraction(12, 25), Fraction(2, 5)}
    assert all(abs(float(p.duration) - 3600) < 1 for p in cat)
    assert synthetic_catalog(4, 60, seed=3) == synthetic_catalog(4, 60, seed=3)


def test_catalog_frames_roundtrip(tmp_path):
    profs, traces = synthetic_catalog(2, 30, seed=1, with_frames=True)
    rows = []
    for prof, frames in zip(profs, traces):
        write_trace(tmp_path / f"{prof.stream_id}.trace", frames)
        rows.append((prof.stream_id, f"{prof.stream_id}.trace", prof.frame_rate))
    write_manifest(tmp_path / "manifest.csv", rows)
    assert load_manifest(tmp_path / "manifest.csv") == profs


def test_no_arrivals_at_zero_rate():
    assert gen_arrivals(WorkloadSpec(lam=0), synthetic_catalog(3, 60), 1e6) == []


def test_arrivals_deterministic():
    cat = synthetic_catalog(5, 600)
    spec = WorkloadSpec(lam=2, fluid_fraction=0.5, up_fraction=0.5, seed=11)
    assert gen_arrivals(spec, cat, 3600) == gen_arrivals(spec, cat, 3600)


def test_mean_interarrival():
    cat = synthetic_catalog(3, 60)
    arr = gen_arrivals(WorkloadSpec(lam=1, rate_unit=1, seed=5), cat, 1e4)
    gaps = np.diff([0.0] + [a.time for a in arr])
    se = gaps.std(ddof=1) / np.sqrt(len(gaps))
    assert abs(gaps.mean() - 1.0) <= 3 * se


def test_arrival_attributes():
    cat = synthetic_catalog(6, 600)
    spec = WorkloadSpec(lam=5, fluid_fraction=0.5, sigma=2, up_fraction=0.5, delta=0.99, seed=2)
    arr = gen_arrivals(spec, cat, 3600)
    assert arr and all(isinstance(a, Arrival) for a in arr)
    for a in arr:
        assert validate(a.sla) == []
        assert a.sla.Tl <= a.sla.T <= a.sla.Tu
        assert 1 <= a.theta <= 10
        assert a.departure == pytest.approx(a.time + float(cat[a.stream].duration))
        assert a.fluid == a.sla.fluid
        assert a.uptime == (a.sla.W > 1)
        if a.fluid:
            for T in {a.sla.Tl, a.sla.Tu}:
                r = fluid_retime(a.sla, T)
                assert r.util >= a.sla.util


def test_coupled_substreams():
    cat = synthetic_catalog(6, 600)
    a = gen_arrivals(WorkloadSpec(lam=3, fluid_fraction=0.0, seed=9), cat, 3600)
    b = gen_arrivals(WorkloadSpec(lam=3, fluid_fraction=1.0, seed=9), cat, 3600)
    assert [(x.time, x.stream, x.theta) for x in a] == [(x.time, x.stream, x.theta) for x in b]


def test_poisson_counts_chi_square():
    cat = synthetic_catalog(3, 60)
    lam_h = 20.0
    counts = [len(gen_arrivals(WorkloadSpec(lam=1, rate_unit=1, seed=s), cat, lam_h)) for s in range(100)]
    # pool into bins with adequate expected counts
    edges = [0, 14, 17, 19, 21, 23, 26, 10**6]
    from math import exp, factorial
    pmf = lambda k: exp(-lam_h) * lam_h ** k / factorial(k)
    stat = 0.0
    for lo, hi in zip(edges, edges[1:]):
        expected = 100 * sum(pmf(k) for k in range(lo, min(hi, 120)))
        observed = sum(lo <= c < hi for c in counts)
        stat += (observed - expected) ** 2 / expected
    assert chi2.sf(stat, len(edges) - 2) > 0.01


def test_spec_validation():
    for bad in (dict(beta=0), dict(beta=5, gamma=4), dict(fluid_fraction=2), dict(lam=-1), dict(delta=1)):
        with pytest.raises(ValueError):
            WorkloadSpec(**bad)
