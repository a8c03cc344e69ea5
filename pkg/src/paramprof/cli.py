"""paramprof command line.

Every subcommand reads a JSON campaign config (``--config``) and reads and
writes artifacts in the output directory (``--out``, default from the
config). Artifacts, in pipeline order:

    sites.jsonl            scan
    filter_decisions.jsonl filter  (also kept_sites.jsonl, filter_summary.json)
    plans.jsonl            plan
    journal.jsonl          run
    decisions.jsonl        analyze
    ts_calibration.json    calibrate-ts
    td_calibration.json    calibrate-td  (rerun journal: journal_rerun.jsonl)
    simulated_runs.csv     simulate
    candidates.csv/.json, summary.csv/.json, series.json   report
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from paramprof.filters import dump_decisions, parse_annotations, parse_coverage, pipeline
from paramprof.measurement import DriftNoiseModel, Variant, simulate_run
from paramprof.mutation import MutationPlan, MutationPolicy, dump_plans, plan_all
from paramprof.orchestrator import (
    Builder,
    CommandDevice,
    ExperimentBlock,
    ExperimentConfig,
    Journal,
    TreeBuilder,
    estimate_makespan,
    schedule,
    simulated_devices,
)
from paramprof.report import load_results, write_report
from paramprof.source_model import AdapterConfig, corpus_enum_domain, dump_sites, load_sites, scan_corpus
from paramprof.stats import NOT_SIGNIFICANT, NoKneeError, calibrate_t_d, decide, empirical_cdf, knee_point

log = logging.getLogger("paramprof")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: Path
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    coverage: Path | None = None
    annotations: Path | None = None
    policy: MutationPolicy = field(default_factory=MutationPolicy)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    measurer: dict[str, Any] = field(default_factory=lambda: {"kind": "command"})
    out: Path = Path("out")

    KEYS = ("corpus", "adapter", "coverage", "annotations", "policy", "experiment", "measurer", "out")

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_json(obj, path.parent)

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], base: Path) -> RunConfig:
        unknown = set(obj) - set(cls.KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "corpus" not in obj:
            raise ConfigError("missing config key: corpus")

        def existing(key: str) -> Path | None:
            return None if obj.get(key) is None else existing_path(base, obj[key], key)

        measurer = dict(obj.get("measurer") or {"kind": "command"})
        kind = measurer.get("kind")
        if kind == "simulator":
            if "model" not in measurer:
                raise ConfigError("simulator measurer needs a model path")
            measurer["model"] = existing_path(base, measurer["model"], "measurer.model")
        elif kind != "command":
            raise ConfigError(f"measurer kind must be 'simulator' or 'command', got {kind!r}")
        try:
            return cls(
                corpus=existing("corpus"),  # type: ignore[arg-type]
                adapter=AdapterConfig.from_json(obj.get("adapter")),
                coverage=existing("coverage"),
                annotations=existing("annotations"),
                policy=MutationPolicy.from_json(obj.get("policy")),
                experiment=ExperimentConfig.from_json(obj.get("experiment")),
                measurer=measurer,
                out=(base / obj.get("out", "out")).resolve(),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def model(self, seed: int | None = None) -> DriftNoiseModel:
        if self.measurer.get("kind") != "simulator":
            raise ConfigError("this command needs a simulator measurer")
        obj = json.loads(Path(self.measurer["model"]).read_text())
        if seed is not None:
            obj["seed"] = seed
        return DriftNoiseModel.from_json(obj)


def existing_path(base: Path, rel: str, key: str) -> Path:
    p = (base / rel).resolve()
    if not p.exists():
        raise ConfigError(f"{key} path does not exist: {p}")
    return p


# ---- helpers ------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _read_required(path: Path, produced_by: str) -> str:
    if not path.exists():
        raise ConfigError(f"{path.name} not found in {path.parent}; run `{produced_by}` first")
    return path.read_text(encoding="utf-8")


def _experiment(cfg: RunConfig, args: argparse.Namespace) -> ExperimentConfig:
    exp = cfg.experiment
    changes: dict[str, Any] = {}
    if args.device:
        changes["devices"] = list(args.device)
    if args.seed is not None:
        changes["seed"] = args.seed
    return exp.replace(**changes) if changes else exp


def _work(out: Path):
    sites = {s.id: s for s in load_sites(_read_required(out / "kept_sites.jsonl", "filter"))}
    plans = [MutationPlan.from_json(json.loads(l)) for l in _read_required(out / "plans.jsonl", "plan").splitlines()
             if l.strip()]
    missing = [p.site_id for p in plans if p.site_id not in sites]
    if missing:
        raise ConfigError(f"plans reference unknown sites: {missing[:5]}")
    return [(sites[p.site_id], p) for p in plans]


def _devices_and_builder(cfg: RunConfig, exp: ExperimentConfig, out: Path, seed: int | None):
    if cfg.measurer["kind"] == "simulator":
        model = cfg.model(seed)
        devices = simulated_devices(model, exp.devices, float(cfg.measurer.get("pace", 0.0)))
        builder: Builder = Builder(cfg.corpus)
        if exp.build_cmd:
            builder = TreeBuilder(cfg.corpus, out / "work", exp.build_cmd, env=exp.env, timeout=exp.timeout)
        return devices, builder
    devices = [CommandDevice(name, exp, out / "work") for name in exp.devices]
    return devices, TreeBuilder(cfg.corpus, out / "work", exp.build_cmd, env=exp.env, timeout=exp.timeout)


# ---- subcommands --------------------------------------------------------


def cmd_scan(cfg: RunConfig, args, out: Path) -> int:
    result = scan_corpus(cfg.corpus, cfg.adapter, workers=args.workers)
    _write(out / "sites.jsonl", dump_sites(result.sites))
    _write(out / "scan_errors.jsonl", "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in result.errors))
    print(f"scanned {len(result.files)} files: {len(result.sites)} sites, {len(result.errors)} errors")
    return 0


def cmd_filter(cfg: RunConfig, args, out: Path) -> int:
    sites = load_sites(_read_required(out / "sites.jsonl", "scan"))
    cov = parse_coverage(cfg.coverage.read_bytes()) if cfg.coverage else None
    anns = parse_annotations(cfg.annotations.read_text()) if cfg.annotations else []
    res = pipeline(sites, cov, anns, force=args.force)
    _write(out / "filter_decisions.jsonl", dump_decisions(res.decisions))
    _write(out / "kept_sites.jsonl", dump_sites(res.candidates))
    _write(out / "filter_summary.json", json.dumps(res.summary(), indent=2, sort_keys=True) + "\n")
    print(f"{len(res.candidates)} candidates of {len(sites)} sites "
          f"(dropped: {', '.join(f'{k} {v}' for k, v in res.stage_drops.items())})")
    return 0


def cmd_plan(cfg: RunConfig, args, out: Path) -> int:
    sites = load_sites(_read_required(out / "kept_sites.jsonl", "filter"))
    domain = corpus_enum_domain(cfg.corpus, cfg.adapter)
    policy = cfg.policy
    if args.seed is not None:
        policy = MutationPolicy.from_json({**policy.to_json(), "rng_seed": args.seed})
    plans, errors = plan_all(sites, domain, policy)
    _write(out / "plans.jsonl", dump_plans(plans))
    _write(out / "plan_errors.json", json.dumps(errors, indent=2, sort_keys=True) + "\n")
    print(f"{len(plans)} plans, {len(errors)} sites without usable values")
    return 0


def cmd_run(cfg: RunConfig, args, out: Path) -> int:
    exp = _experiment(cfg, args)
    work = _work(out)
    if args.dry_run:
        counts = [len(p.new_values) for _, p in work]
        block = exp.n * args.run_seconds
        serial = estimate_makespan(counts, args.build_seconds, block, devices=len(exp.devices),
                                   builders=exp.builders, pipelined=False)
        piped = estimate_makespan(counts, args.build_seconds, block, devices=len(exp.devices),
                                  builders=exp.builders, pipelined=True)
        print(json.dumps({"parameters": len(work), "values": sum(counts), "devices": list(exp.devices),
                          "serial_makespan_s": serial, "pipelined_makespan_s": piped,
                          "per_parameter_s": piped / len(work) if work else 0.0}, indent=2, sort_keys=True))
        return 0
    devices, builder = _devices_and_builder(cfg, exp, out, args.seed)
    journal = Journal(out / args.journal)
    outcome = schedule(work, exp, devices, builder, journal, resume=not args.fresh)
    flagged = sum(bool(r.flagged) for r in outcome.results)
    print(f"measured {len(outcome.measured)}, resumed {len(outcome.resumed)}, pending {len(outcome.pending)}; "
          f"{flagged} parameters flagged")
    return 0 if outcome.complete else 3


def cmd_analyze(cfg: RunConfig, args, out: Path) -> int:
    results, skipped = load_results(out / args.journal)
    lines = []
    for r in results:
        for d in r.decisions:
            lines.append(json.dumps(d.to_json(), sort_keys=True) + "\n")
    _write(out / "decisions.jsonl", "".join(lines))
    flagged = sum(len(r.flagged) for r in results)
    print(f"{len(lines)} decisions over {len(results)} parameters, {flagged} flagged; {skipped} bad records")
    return 0


def _simulated_block_nsd(model: DriftNoiseModel, n: int, blocks: int) -> list[float]:
    base = Variant()
    out = []
    for b in range(blocks):
        runs = [simulate_run(model, base, b * n + i) for i in range(n)]
        out.append(ExperimentBlock.of(base, runs).norm_sd)
    return out


def cmd_calibrate_ts(cfg: RunConfig, args, out: Path) -> int:
    journal = out / args.journal
    if journal.exists():
        results, _ = load_results(journal)
        values = [b.norm_sd for r in results for b in r.all_blocks()]
        source = journal.name
    else:
        model = cfg.model(args.seed)
        values = _simulated_block_nsd(model, cfg.experiment.n, args.blocks)
        source = f"simulator ({args.blocks} baseline blocks)"
    ecdf = empirical_cdf(values)
    try:
        knee = knee_point(ecdf)
    except NoKneeError as exc:
        print(f"error: {exc}; set t_s in the config by hand", file=sys.stderr)
        return 1
    _write(out / "ts_calibration.json", json.dumps(
        {"source": source, "blocks": len(values), "suggested_t_s": knee, "ecdf": ecdf.pairs()},
        sort_keys=True) + "\n")
    print(f"suggested t_s = {knee:.4f} from {len(values)} blocks ({source})")
    return 0


def cmd_calibrate_td(cfg: RunConfig, args, out: Path) -> int:
    exp = _experiment(cfg, args).replace(t_d=0.0)
    results, _ = load_results(out / args.journal)
    first = []
    for r in results:
        base = r.baseline_block
        for v in r.values:
            if base is not None and v.block is not None:
                first.append(decide(v.block.energies, base.energies, 0.0, exp.alpha,
                                    site_id=r.site_id, value_index=v.value_index))
    positives = {d.site_id for d in first if d.flagged}
    work = [(s, p) for s, p in _work(out) if s.id in positives]
    rerun_decisions = []
    if work:
        devices, builder = _devices_and_builder(cfg, exp, out, args.seed)
        for d in devices:
            # continue past the first pass so the rerun sees fresh noise
            d.run_index = max((r.next_run_index for r in results if r.device == d.name), default=0)
        outcome = schedule(work, exp, devices, builder, Journal(out / "journal_rerun.jsonl"), resume=False)
        rerun_decisions = [d for r in outcome.results for d in r.decisions]
    rerun = {(d.site_id, d.value_index): d for d in rerun_decisions}
    for d in first:
        if d.flagged and (d.site_id, d.value_index) not in rerun:
            # value could not be re-measured; treat as not confirmed
            rerun[(d.site_id, d.value_index)] = dataclasses.replace(d, verdict=NOT_SIGNIFICANT)
    cal = calibrate_t_d(first, rerun, exp.alpha)
    _write(out / "td_calibration.json", json.dumps(cal.to_json(), indent=2, sort_keys=True) + "\n")
    print(f"t_d = {cal.t_d:.3f} ({len(cal.artifacts)} artifacts, {len(cal.persistent)} persistent"
          f"{', conflict' if cal.conflict else ''})")
    return 0


def cmd_simulate(cfg: RunConfig, args, out: Path) -> int:
    model = cfg.model(args.seed)
    path = out / "simulated_runs.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    base = Variant()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_index", "energy", "drift", "spiked"])
        for i in range(args.runs):
            m = simulate_run(model, base, i)
            w.writerow([i, format(m.energy, ".9g"), format(model.drift(i), ".9g"), int(m.spiked)])
    print(f"wrote {args.runs} simulated baseline runs to {path}")
    return 0


def cmd_report(cfg: RunConfig, args, out: Path) -> int:
    info = write_report(out / args.journal, out, previous=args.validations)
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


COMMANDS = {
    "scan": cmd_scan,
    "filter": cmd_filter,
    "plan": cmd_plan,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "calibrate-ts": cmd_calibrate_ts,
    "calibrate-td": cmd_calibrate_td,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="campaign config (JSON)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="override experiment, simulator and enum sampling seeds")
    common.add_argument("--device", action="append", help="device channel; repeat for several")
    common.add_argument("--dry-run", action="store_true", help="run: print the timing estimate only")
    common.add_argument("--journal", default="journal.jsonl", help="journal file name inside --out")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="paramprof", description="Find energy-relevant constants by measurement.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("scan", parents=[common]).add_argument("--workers", type=int, default=1)
    sub.add_parser("filter", parents=[common]).add_argument(
        "--force", action="store_true", help="let annotations re-admit automatically dropped sites")
    sub.add_parser("plan", parents=[common])
    run = sub.add_parser("run", parents=[common])
    run.add_argument("--fresh", action="store_true", help="discard an existing journal instead of resuming")
    run.add_argument("--build-seconds", type=float, default=60.0, help="dry-run build time per value")
    run.add_argument("--run-seconds", type=float, default=45.0, help="dry-run time per measured run")
    sub.add_parser("analyze", parents=[common])
    sub.add_parser("calibrate-ts", parents=[common]).add_argument("--blocks", type=int, default=1000)
    sub.add_parser("calibrate-td", parents=[common])
    sub.add_parser("simulate", parents=[common]).add_argument("--runs", type=int, default=1000)
    sub.add_parser("report", parents=[common]).add_argument(
        "--validations", help="candidates CSV with human verdicts (default: the one in --out)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        out = Path(args.out).resolve() if args.out else cfg.out
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"paramprof {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
