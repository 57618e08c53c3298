import pytest

from morphosys import config as cfgmod
from morphosys.schedulability import AdmissionTest
from morphosys.sim import SimConfig, run, parse_strategy
from morphosys.workload import WorkloadSpec


def test_roundtrip_defaults():
    text = cfgmod.dumps(SimConfig())
    assert cfgmod.loads(text) == SimConfig()
    assert "gen.lambda = 1.0" in text


def test_overrides_and_comments():
    cfg = cfgmod.loads("""
        # a comment
        sim.fit = BF
        sim.test = hybrid
        sim.host_cap = 12
        sim.manifest = traces/manifest.csv
        gen.lambda = 2.5   # per minute
        repack.budget_nodes = none
        repack.migration = UM
        limits.max_k = 4
    """)
    assert cfg.fit == "BF" and cfg.test is AdmissionTest.HYBRID and cfg.host_cap == 12
    assert cfg.manifest == "traces/manifest.csv"
    assert cfg.gen.lam == 2.5 and cfg.repack.budget_nodes is None
    assert cfg.repack.migration == "UM" and cfg.limits.max_k == 4
    assert cfgmod.loads(cfgmod.dumps(cfg)) == cfg


@pytest.mark.parametrize("text", ["gen.lambda", "bogus.key = 1", "gen.nope = 1", "sim.audit = maybe",
                                  "gen.lambda = fast", "sim.test = psychic", "gen.beta = 0",
                                  "repack.migration = XM"])
def test_errors(text):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.loads(text)


def test_dumped_config_reproduces_results(tmp_path):
    cfg = SimConfig(horizon=1800.0, n_streams=4, stream_duration=600.0,
                    gen=WorkloadSpec(lam=3.0, fluid_fraction=0.5, seed=8))
    path = tmp_path / "run.cfg"
    cfgmod.dump(cfg, path)
    again = cfgmod.load(path)
    a = run(parse_strategy("FF-NM", cfg)).row("FF-NM", 8)
    b = run(parse_strategy("FF-NM", again)).row("FF-NM", 8)
    assert a == b
