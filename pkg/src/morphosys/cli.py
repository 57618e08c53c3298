"""Command-line front end.  Data goes to stdout, diagnostics to stderr.

Exit codes: 0 success, 1 domain error (invalid SLA, infeasible stream),
2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import config as cfgmod
from .hosts import Cluster, Resident
from .repack import RepackConfig, repack, select_hosts
from .sim import BaselineError, parse_strategy, run_matrix, runs_csv, summary_csv
from .sla import FluidSla, InvalidSla, SlaType, require_valid
from .transform import (BoundedTransform, GenLimits, TRANSFORM_MODES, gen_transforms,
                        subtype_ct_reason, subtype_ctdw, ctdw_condition)
from .workload import (TraceError, UndeliverableStream, derive_sla, ingest_trace,
                       synthetic_catalog, write_manifest, write_trace)

SEED_ENV = "MORPHOSYS_SEED"


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated integers, got {text!r}") from None


def parse_sla(text: str) -> SlaType:
    vals = _ints(text, "SLA")
    if len(vals) not in (2, 4):
        raise UsageError(f"SLA must be C,T or C,T,D,W, got {text!r}")
    sla = SlaType(*vals)
    try:
        require_valid(sla)
    except InvalidSla as exc:
        raise DomainError(str(exc)) from None
    return sla


def parse_fluid(text: str) -> FluidSla:
    vals = _ints(text, "task")
    if len(vals) == 2:
        vals = [vals[0], vals[1], vals[1], vals[1]]
    if len(vals) not in (4, 6):
        raise UsageError(f"task must be C,T[,Tl,Tu[,D,W]], got {text!r}")
    sla = FluidSla(*vals)
    try:
        require_valid(sla)
    except InvalidSla as exc:
        raise DomainError(str(exc)) from None
    return sla


def parse_seeds(text: str) -> list[int]:
    """``0-19`` or ``1,4,9``."""
    if "-" in text.strip("-") and "," not in text:
        lo, hi = text.split("-", 1)
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise UsageError(f"bad seed range {text!r}") from None
    return _ints(text, "seeds")


# -- subcommands -------------------------------------------------------------

def cmd_check_subtype(args, out) -> int:
    new, orig = parse_sla(args.new), parse_sla(args.orig)
    if new.D == 0 and orig.D == 0:
        reason = subtype_ct_reason(new, orig)
    else:
        ok = subtype_ctdw(new, orig, verify=not args.closed_form)
        reason = None
        if ok:
            reason = "exact" if new.D == 0 else f"condition {ctdw_condition(new, orig)}"
    if reason is None:
        out.write("subtype: false\n")
    else:
        out.write(f"subtype: true ({reason})\n")
    return 0


def cmd_transform(args, out) -> int:
    task = parse_fluid(args.task)
    context = _ints(args.context, "context") if args.context else []
    limits = GenLimits(args.max_k, args.max_candidates)
    for bt in gen_transforms(task, context, limits, args.mode):
        out.write(bt.csv() + "\n")
    return 0


def _seeds(args, config) -> list[int]:
    if args.seeds:
        return parse_seeds(args.seeds)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return [int(env)]
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    return [config.gen.seed]


def load_config(args):
    config = cfgmod.load(args.config) if getattr(args, "config", None) else cfgmod.loads("")
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            config = replace(config, gen=replace(config.gen, seed=int(env)))
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    if getattr(args, "budget_nodes", None) is not None:
        config = replace(config, repack=replace(config.repack, budget_nodes=args.budget_nodes))
    return config


def cmd_simulate(args, out) -> int:
    config = load_config(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        try:
            parse_strategy(s, config)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.dump_config:
        cfgmod.dump(config, args.dump_config)
    result = run_matrix(config, strategies, _seeds(args, config))
    runs = runs_csv(result)
    if args.runs:
        Path(args.runs).write_text(runs)
    if args.summary:
        Path(args.summary).write_text(summary_csv(result))
    if not args.runs:
        out.write(runs)
    return 0


def _load_snapshot(path: str) -> Cluster:
    """``{"hosts": [{"id": 0, "tasks": [{"id": 7, "sla": [C,T,Tl,Tu,D,W],
    "active": [C,T,D,W]}]}]}``; ``active`` defaults to the nominal SLA."""
    try:
        data = json.loads(Path(path).read_text())
        hosts = data["hosts"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read snapshot {path}: {exc}") from None
    cluster = Cluster()
    for h in sorted(hosts, key=lambda h: h["id"]):
        while cluster._next_id < h["id"]:
            cluster._next_id += 1
        host = cluster.new_host()
        for t in h["tasks"]:
            vals = list(t["sla"])
            if len(vals) == 2:
                vals = [vals[0], vals[1], vals[1], vals[1]]
            original = FluidSla(*vals)
            try:
                require_valid(original)
            except InvalidSla as exc:
                raise DomainError(str(exc)) from None
            active = SlaType(*t["active"]) if "active" in t else original.nominal
            bt = BoundedTransform(active, original.nominal,
                                  source="identity" if active == original.nominal else "snapshot")
            if active != original.nominal and not _certified(original, active):
                raise DomainError(f"task {t['id']}: active SLA {active} does not honour {original}")
            cluster.place(host, Resident(int(t["id"]), original, bt, active.util))
    return cluster


def _certified(original: FluidSla, active: SlaType) -> bool:
    if original.Tl <= active.T <= original.Tu and active.util >= original.util \
            and (active.D, active.W) == (original.D, original.W):
        return True
    return subtype_ctdw(active, original.nominal)


def cmd_repack(args, out) -> int:
    config = load_config(args)
    rc = config.repack
    if args.migration:
        rc = replace(rc, migration=args.migration)
    cluster = _load_snapshot(args.snapshot)
    events = []
    for group in select_hosts(list(cluster), rc):
        if all(h in cluster.hosts for h in group):
            events.append(repack(cluster, group, rc, test=config.test, cap=config.exact_horizon_cap,
                                 limits=config.limits, mode=config.transforms).event)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["task_id", "host_id", "C", "T", "D", "W", "a", "b", "source"])
    for h in cluster:
        for tid, r in sorted(h.residents.items()):
            s, bt = r.active, r.transform
            w.writerow([tid, h.id, s.C, s.T, s.D, s.W, bt.a, bt.b, bt.source])
    if args.events:
        with open(args.events, "w") as fh:
            fh.write("time,group,hosts_before,hosts_after,nodes_expanded,migrations\n")
            for e in events:
                fh.write(e.row() + "\n")
    return 0


def cmd_ingest(args, out) -> int:
    try:
        prof = ingest_trace(args.trace, Fraction(args.frame_rate))
    except OSError as exc:
        raise UsageError(str(exc)) from None
    w = csv.writer(out, lineterminator="\n")
    head = ["stream_id", "base_period", "gops", "duration", "peak_gop_bytes"]
    row = [prof.stream_id, prof.base_period, len(prof.gop_bytes), prof.duration,
           max(prof.gop_bytes)]
    if args.theta is not None:
        try:
            sla = derive_sla(prof, args.theta, args.sigma, args.slot_rate, args.disk_unit)
        except ValueError as exc:
            raise DomainError(str(exc)) from None
        head += ["C", "T", "Tl", "Tu", "D", "W"]
        row += [sla.C, sla.T, sla.Tl, sla.Tu, sla.D, sla.W]
    w.writerow(head)
    w.writerow(row)
    return 0


def cmd_gen_catalog(args, out) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    profiles, traces = synthetic_catalog(args.streams, args.duration, args.seed, with_frames=True)
    rows = []
    for prof, frames in zip(profiles, traces):
        name = f"{prof.stream_id}.trace"
        write_trace(outdir / name, frames)
        rows.append((prof.stream_id, name, prof.frame_rate))
    write_manifest(outdir / "manifest.csv", rows)
    out.write(f"{outdir / 'manifest.csv'}\n")
    return 0


# -- dispatch ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="morphosys", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run strategies over seeds and print per-run CSV")
    s.add_argument("--config", help="flat key = value config file")
    s.add_argument("--strategies", default="FF", help="comma list, must include FF")
    s.add_argument("--seeds", help="e.g. 0-19 or 1,2,3 (default: config or $MORPHOSYS_SEED)")
    s.add_argument("--runs", help="write per-run CSV here instead of stdout")
    s.add_argument("--summary", help="write the CE summary CSV here")
    s.add_argument("--dump-config", help="write the effective config here")
    s.add_argument("--budget-nodes", type=int, help="repack node budget (replaces wall clock)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-subtype", help="is NEW a safe substitute for ORIG?")
    s.add_argument("--new", required=True, help="C,T or C,T,D,W")
    s.add_argument("--orig", required=True, help="C,T or C,T,D,W")
    s.add_argument("--closed-form", action="store_true",
                   help="skip the slot-level confirmation of D/W verdicts")
    s.set_defaults(func=cmd_check_subtype)

    s = sub.add_parser("transform", help="list rewrite candidates as C,T,D,W,a,b,source")
    s.add_argument("--task", required=True, help="C,T,Tl,Tu,D,W")
    s.add_argument("--context", default="", help="comma list of host periods")
    s.add_argument("--max-k", type=int, default=GenLimits.max_k)
    s.add_argument("--max-candidates", type=int, default=GenLimits.max_candidates)
    s.add_argument("--mode", choices=TRANSFORM_MODES, default="all")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("repack", help="repack a JSON cluster snapshot")
    s.add_argument("--snapshot", required=True)
    s.add_argument("--config")
    s.add_argument("--migration", choices=("NM", "CM", "UM"))
    s.add_argument("--budget-nodes", type=int)
    s.add_argument("--events", help="write repack events CSV here")
    s.set_defaults(func=cmd_repack)

    s = sub.add_parser("ingest", help="summarize a frame trace, optionally derive its SLA")
    s.add_argument("--trace", required=True)
    s.add_argument("--frame-rate", default="25")
    s.add_argument("--theta", type=int)
    s.add_argument("--sigma", type=int, default=0)
    s.add_argument("--slot-rate", type=int, default=50)
    s.add_argument("--disk-unit", type=int, default=100_000)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("gen-catalog", help="write a synthetic trace catalog and manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--streams", type=int, default=30)
    s.add_argument("--duration", type=float, default=3600)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gen_catalog)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        print(f"morphosys: error: {exc}", file=sys.stderr)
        return 2
    except (cfgmod.ConfigError, TraceError, BaselineError, OSError) as exc:
        print(f"morphosys: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, InvalidSla, UndeliverableStream) as exc:
        print(f"morphosys: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
