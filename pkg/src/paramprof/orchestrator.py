"""Back-to-back measurement campaigns.

For every candidate parameter a device first re-measures the unmodified app,
then measures each replacement value, and each value block is compared with
that adjacent baseline only. Blocks whose normalized standard deviation is
above ``t_s`` are thrown away and re-measured. Builds run in a thread pool
ahead of the devices, and every finished parameter is appended to a journal
so an interrupted campaign can pick up where it stopped.
"""

from __future__ import annotations

import collections
import hashlib
import heapq
import json
import logging
import math
import os
import shlex
import shutil
import subprocess
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from paramprof.measurement import (
    DriftNoiseModel,
    MeasurementError,
    RunClock,
    RunFailure,
    RunMeasurement,
    Variant,
    measure_run,
    simulate_run,
)
from paramprof.mutation import MutationPlan, PlanError, StaleSpanError, apply_mutation, materialize_variant
from paramprof.source_model import ConstantSite
from paramprof.stats import SampleStats, TestDecision, decide

log = logging.getLogger(__name__)

COMPLETED = "completed"
BUILD_FAILED = "build-failed"
RUN_FAILED = "run-failed"
DISCARDED_UNSTABLE = "discarded-unstable"
DECIDED = "decided"

ACCEPT = "accept"
DISCARD = "discard"


class BuildFailure(RuntimeError):
    pass


class DeviceLost(RuntimeError):
    """The device channel went away; its in-flight parameter goes back in the queue."""


class JournalMismatch(RuntimeError):
    pass


# ---- configuration ------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 5
    alpha: float = 0.05
    t_s: float = 0.03
    t_d: float = 0.0
    max_block_retries: int = 3
    build_cmd: str | None = None
    install_cmd: str | None = None
    test_cmd: str | None = None
    devices: tuple[str, ...] = ("dev0",)
    seed: int = 0
    builders: int = 1
    timeout: float | None = None
    env: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        for name in ("t_s", "t_d"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.max_block_retries < 0:
            raise ValueError("max_block_retries must be non-negative")
        if not self.devices:
            raise ValueError("at least one device is required")
        if len(set(self.devices)) != len(self.devices):
            raise ValueError("device names must be unique")
        if self.builders < 1:
            raise ValueError("builders must be at least 1")

    _FIELDS = (
        "n", "alpha", "t_s", "t_d", "max_block_retries", "build_cmd", "install_cmd",
        "test_cmd", "devices", "seed", "builders", "timeout", "env",
    )

    @classmethod
    def from_json(cls, obj: Mapping[str, Any] | None) -> ExperimentConfig:
        obj = dict(obj or {})
        unknown = set(obj) - set(cls._FIELDS)
        if unknown:
            raise ValueError(f"unknown experiment settings: {sorted(unknown)}")
        if "devices" in obj:
            obj["devices"] = tuple(obj["devices"])
        if "env" in obj:
            obj["env"] = dict(obj["env"])
        return cls(**obj)

    def to_json(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self._FIELDS}
        out["devices"] = list(self.devices)
        out["env"] = dict(sorted(self.env.items()))
        return out

    def replace(self, **changes: Any) -> ExperimentConfig:
        obj = self.to_json()
        obj.update(changes)
        return ExperimentConfig.from_json(obj)


# ---- blocks -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentBlock:
    variant: Variant
    runs: tuple[RunMeasurement, ...]
    mean: float
    sample_sd: float
    norm_sd: float
    accepted: bool = False

    @classmethod
    def of(cls, variant: Variant, runs: Sequence[RunMeasurement], accepted: bool = False) -> ExperimentBlock:
        st = SampleStats.of([r.energy for r in runs])
        nsd = st.sample_sd / st.mean if st.mean > 0 else math.inf
        return cls(variant, tuple(runs), st.mean, st.sample_sd, nsd, accepted)

    @property
    def energies(self) -> list[float]:
        return [r.energy for r in self.runs]

    @property
    def spiked(self) -> bool:
        return any(r.spiked for r in self.runs)

    def with_acceptance(self, accepted: bool) -> ExperimentBlock:
        return ExperimentBlock(self.variant, self.runs, self.mean, self.sample_sd, self.norm_sd, accepted)

    def to_json(self) -> dict[str, Any]:
        return {
            "variant": self.variant.to_json(),
            "runs": [r.to_json() for r in self.runs],
            "mean": self.mean,
            "sample_sd": self.sample_sd,
            "norm_sd": self.norm_sd if math.isfinite(self.norm_sd) else None,
            "accepted": self.accepted,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ExperimentBlock:
        runs = [RunMeasurement.from_json(r) for r in obj["runs"]]
        block = cls.of(Variant.from_json(obj["variant"]), runs, bool(obj["accepted"]))
        if not math.isclose(block.mean, obj["mean"], rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("stored block mean does not match its runs")
        return block


def stability_gate(block: ExperimentBlock, t_s: float) -> str:
    # boundary counts as stable
    return ACCEPT if block.norm_sd <= t_s else DISCARD


# ---- builds -------------------------------------------------------------


@dataclass(frozen=True)
class BuildArtifact:
    variant: Variant
    tree: Path | None = None
    literal: str | None = None


def expand(template: str, **values: str) -> list[str]:
    """Split ``template`` like a shell would, then fill in ``{tree}``-style placeholders."""
    out = []
    for arg in shlex.split(template):
        for k, v in values.items():
            arg = arg.replace("{" + k + "}", v)
        out.append(arg)
    return out


def _run_cmd(argv: list[str], env: Mapping[str, str], timeout: float | None, cwd: Path | None = None):
    return subprocess.run(argv, env={**os.environ, **env}, cwd=cwd, timeout=timeout, capture_output=True)


class Builder:
    """Produces installable variants. The default only checks that the splice applies."""

    def __init__(self, corpus_root: str | os.PathLike):
        self.corpus_root = Path(corpus_root)

    def baseline(self) -> BuildArtifact:
        return BuildArtifact(Variant())

    def build(self, site: ConstantSite, literal: str, value_index: int) -> BuildArtifact:
        try:
            apply_mutation((self.corpus_root / site.file).read_bytes(), site, literal)
        except (OSError, StaleSpanError, PlanError) as exc:
            raise BuildFailure(str(exc)) from exc
        return BuildArtifact(Variant(site.id, value_index), None, literal)

    def release(self, artifact: BuildArtifact) -> None:
        pass


class TreeBuilder(Builder):
    """Copies the corpus, splices the literal, runs ``build_cmd`` in the copy."""

    def __init__(self, corpus_root, workdir, build_cmd: str | None, *, env=None, timeout=None, keep=False):
        super().__init__(corpus_root)
        self.workdir = Path(workdir)
        self.build_cmd = build_cmd
        self.env = dict(env or {})
        self.timeout = timeout
        self.keep = keep

    def _compile(self, tree: Path) -> None:
        if not self.build_cmd:
            return
        try:
            proc = _run_cmd(expand(self.build_cmd, tree=str(tree)), self.env, self.timeout, tree)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BuildFailure(f"build command failed: {exc}") from exc
        if proc.returncode != 0:
            raise BuildFailure(
                f"build exited {proc.returncode}: {proc.stderr.decode(errors='replace').strip()[:500]}"
            )

    def baseline(self) -> BuildArtifact:
        tree = self.workdir / "trees" / "baseline"
        if tree.exists():
            shutil.rmtree(tree)
        shutil.copytree(self.corpus_root, tree)
        self._compile(tree)
        return BuildArtifact(Variant(), tree)

    def build(self, site: ConstantSite, literal: str, value_index: int) -> BuildArtifact:
        tree = self.workdir / "trees" / f"{site.id}-{value_index}"
        try:
            materialize_variant(self.corpus_root, tree, site, literal)
        except (OSError, StaleSpanError, PlanError) as exc:
            raise BuildFailure(str(exc)) from exc
        self._compile(tree)
        return BuildArtifact(Variant(site.id, value_index), tree, literal)

    def release(self, artifact: BuildArtifact) -> None:
        if not self.keep and artifact.tree is not None and not artifact.variant.is_baseline:
            shutil.rmtree(artifact.tree, ignore_errors=True)


# ---- devices ------------------------------------------------------------


class Device:
    """One measurement channel. Runs on a device are strictly serial."""

    name: str = "dev"
    run_index: int = 0

    def install(self, artifact: BuildArtifact) -> None:
        raise NotImplementedError

    def measure(self, variant: Variant) -> RunMeasurement:
        raise NotImplementedError


class SimulatedDevice(Device):
    def __init__(self, model: DriftNoiseModel, channel: int = 0, name: str | None = None, pace: float = 0.0):
        self.model = model
        self.channel = channel
        self.name = name or f"sim{channel}"
        self.pace = pace
        self.run_index = 0
        self._installed: Variant | None = None

    def install(self, artifact: BuildArtifact) -> None:
        self._installed = artifact.variant

    def measure(self, variant: Variant) -> RunMeasurement:
        if self._installed != variant:
            raise RunFailure(f"{variant} is not installed on {self.name}")
        if self.pace:
            time.sleep(self.pace)
        m = simulate_run(self.model, variant, self.run_index, self.channel)
        self.run_index += 1
        return m


class CommandDevice(Device):
    """Installs and measures through templated shell commands."""

    def __init__(self, name: str, cfg: ExperimentConfig, workdir: str | os.PathLike):
        if not cfg.test_cmd:
            raise ValueError("test_cmd is required to measure on a real device")
        self.name = name
        self.cfg = cfg
        self.reading_path = Path(workdir) / f"reading-{name}.txt"
        self.reading_path.parent.mkdir(parents=True, exist_ok=True)
        self.clock = RunClock()
        self.run_index = 0
        self._tree = ""

    def _values(self) -> dict[str, str]:
        return {"tree": self._tree, "device": self.name, "reading_path": str(self.reading_path)}

    def install(self, artifact: BuildArtifact) -> None:
        self._tree = str(artifact.tree or "")
        if not self.cfg.install_cmd:
            return
        try:
            proc = _run_cmd(expand(self.cfg.install_cmd, **self._values()), self.cfg.env, self.cfg.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise RunFailure(f"install failed: {exc}") from exc
        if proc.returncode != 0:
            raise RunFailure(f"install exited {proc.returncode}", proc.returncode)

    def measure(self, variant: Variant) -> RunMeasurement:
        m = measure_run(
            expand(self.cfg.test_cmd or "", **self._values()),
            self.reading_path,
            variant=variant,
            run_id=f"{self.name}-{self.run_index}",
            clock=self.clock,
            timeout=self.cfg.timeout,
            env=self.cfg.env,
        )
        self.run_index += 1
        return m


# ---- results ------------------------------------------------------------


def site_snapshot(site: ConstantSite) -> dict[str, Any]:
    return {
        "file": site.file,
        "line": site.line,
        "kind": site.kind.value,
        "raw": site.raw_text,
        "type": site.param_type,
    }


@dataclass
class ValueOutcome:
    value_index: int
    literal: str
    status: str
    attempts: list[ExperimentBlock] = field(default_factory=list)
    decision: TestDecision | None = None
    error: str = ""

    @property
    def block(self) -> ExperimentBlock | None:
        return next((b for b in self.attempts if b.accepted), None)

    def to_json(self) -> dict[str, Any]:
        return {
            "value_index": self.value_index,
            "literal": self.literal,
            "status": self.status,
            "attempts": [b.to_json() for b in self.attempts],
            "decision": self.decision.to_json() if self.decision else None,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ValueOutcome:
        return cls(
            obj["value_index"],
            obj["literal"],
            obj["status"],
            [ExperimentBlock.from_json(b) for b in obj["attempts"]],
            TestDecision.from_json(obj["decision"]) if obj.get("decision") else None,
            obj.get("error", ""),
        )


@dataclass
class ParameterResult:
    site_id: str
    site: dict[str, Any]
    original: str
    device: str
    status: str
    baseline_attempts: list[ExperimentBlock] = field(default_factory=list)
    values: list[ValueOutcome] = field(default_factory=list)
    start_run_index: int = 0
    next_run_index: int = 0
    error: str = ""

    @property
    def baseline_block(self) -> ExperimentBlock | None:
        return next((b for b in self.baseline_attempts if b.accepted), None)

    @property
    def decisions(self) -> list[TestDecision]:
        return [v.decision for v in self.values if v.decision is not None]

    @property
    def flagged(self) -> list[TestDecision]:
        return [d for d in self.decisions if d.flagged]

    def all_blocks(self) -> list[ExperimentBlock]:
        return self.baseline_attempts + [b for v in self.values for b in v.attempts]

    def to_json(self) -> dict[str, Any]:
        return {
            "type": "parameter",
            "site_id": self.site_id,
            "site": self.site,
            "original": self.original,
            "device": self.device,
            "status": self.status,
            "baseline_attempts": [b.to_json() for b in self.baseline_attempts],
            "values": [v.to_json() for v in self.values],
            "start_run_index": self.start_run_index,
            "next_run_index": self.next_run_index,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ParameterResult:
        return cls(
            obj["site_id"],
            dict(obj["site"]),
            obj["original"],
            obj["device"],
            obj["status"],
            [ExperimentBlock.from_json(b) for b in obj["baseline_attempts"]],
            [ValueOutcome.from_json(v) for v in obj["values"]],
            obj.get("start_run_index", 0),
            obj.get("next_run_index", 0),
            obj.get("error", ""),
        )


# ---- protocol -----------------------------------------------------------


def run_block(device: Device, variant: Variant, cfg: ExperimentConfig) -> ExperimentBlock:
    """``cfg.n`` consecutive runs of the installed variant. A failing run aborts the block."""
    runs = [device.measure(variant) for _ in range(cfg.n)]
    return ExperimentBlock.of(variant, runs)


def gated_block(device: Device, variant: Variant, cfg: ExperimentConfig) -> tuple[list[ExperimentBlock], str]:
    """Measure until a block passes the stability gate or the retries run out.

    Returns every attempt (the accepted one last, flagged ``accepted``) and a
    status: DECIDED when a block was accepted, otherwise the failure.
    """
    attempts: list[ExperimentBlock] = []
    for _ in range(cfg.max_block_retries + 1):
        block = run_block(device, variant, cfg)
        if stability_gate(block, cfg.t_s) == ACCEPT:
            attempts.append(block.with_acceptance(True))
            return attempts, DECIDED
        attempts.append(block)
    return attempts, DISCARDED_UNSTABLE


BuildSource = Callable[[int], BuildArtifact]


def test_parameter(
    device: Device,
    site: ConstantSite,
    plan: MutationPlan,
    cfg: ExperimentConfig,
    baseline: BuildArtifact,
    build: BuildSource,
) -> ParameterResult:
    """Adjacent baseline block, then one block per replacement value, each decided against it.

    ``build(i)`` returns the artifact for value ``i`` or raises BuildFailure.
    DeviceLost propagates so the caller can re-queue the parameter.
    """
    result = ParameterResult(
        site.id, site_snapshot(site), site.raw_text, device.name, COMPLETED, start_run_index=device.run_index
    )
    try:
        device.install(baseline)
        attempts, status = gated_block(device, Variant(), cfg)
    except (RunFailure, MeasurementError) as exc:
        result.status, result.error = RUN_FAILED, f"baseline: {exc}"
        result.next_run_index = device.run_index
        return result
    result.baseline_attempts = attempts
    if status != DECIDED:
        result.status = DISCARDED_UNSTABLE
        result.error = "baseline never passed the stability gate"
        result.next_run_index = device.run_index
        return result
    base = result.baseline_block
    assert base is not None

    for i, literal in enumerate(plan.new_values):
        outcome = ValueOutcome(i, literal, DECIDED)
        result.values.append(outcome)
        try:
            artifact = build(i)
        except BuildFailure as exc:
            outcome.status, outcome.error = BUILD_FAILED, str(exc)
            continue
        variant = Variant(site.id, i)
        try:
            device.install(artifact)
            outcome.attempts, outcome.status = gated_block(device, variant, cfg)
        except (RunFailure, MeasurementError) as exc:
            outcome.status, outcome.error = RUN_FAILED, str(exc)
            continue
        if outcome.status == DECIDED:
            block = outcome.block
            assert block is not None
            outcome.decision = decide(
                block.energies, base.energies, cfg.t_d, cfg.alpha, site_id=site.id, value_index=i
            )

    result.next_run_index = device.run_index
    if not result.decisions and result.values:
        # nothing could be compared; surface the first failure
        result.status = result.values[0].status
    return result


test_parameter.__test__ = False  # type: ignore[attr-defined]


# ---- journal ------------------------------------------------------------


def campaign_fingerprint(cfg: ExperimentConfig, work: Sequence[tuple[ConstantSite, MutationPlan]]) -> str:
    # only settings that change what gets measured or decided
    material = {
        "n": cfg.n,
        "alpha": cfg.alpha,
        "t_s": cfg.t_s,
        "t_d": cfg.t_d,
        "retries": cfg.max_block_retries,
        "devices": list(cfg.devices),
        "seed": cfg.seed,
        "work": [[s.id, list(p.new_values)] for s, p in work],
    }
    return hashlib.sha256(json.dumps(material, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class JournalContents:
    header: dict[str, Any] | None
    results: dict[str, ParameterResult]
    skipped: int = 0


class Journal:
    """Append-only JSON-lines log of finished parameters; the only shared mutable state."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()

    @staticmethod
    def read(path: str | os.PathLike) -> JournalContents:
        header, results, skipped = None, {}, 0
        p = Path(path)
        if not p.exists():
            return JournalContents(None, {}, 0)
        lines = p.read_bytes().split(b"\n")
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if obj.get("type") == "header":
                    header = obj
                elif obj.get("type") == "parameter":
                    r = ParameterResult.from_json(obj)
                    results[r.site_id] = r
                else:
                    skipped += 1
            except (ValueError, KeyError, TypeError) as exc:
                if i == len(lines) - 1:
                    log.info("ignoring truncated final journal record")
                else:
                    log.warning("skipping corrupt journal record %d: %s", i + 1, exc)
                skipped += 1
        return JournalContents(header, results, skipped)

    def _repair_tail(self) -> None:
        # a kill mid-write leaves a partial last line; cut it off before appending
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            cut = data.rfind(b"\n") + 1
            with open(self.path, "r+b") as fh:
                fh.truncate(cut)

    def start(self, fingerprint: str, resume: bool = True) -> dict[str, ParameterResult]:
        """Open for appending and return results already recorded."""
        if self.path.exists() and resume:
            self._repair_tail()
            contents = self.read(self.path)
            if contents.header is None:
                if contents.results:
                    raise JournalMismatch(f"{self.path} has records but no header")
            elif contents.header.get("fingerprint") != fingerprint:
                raise JournalMismatch(
                    f"{self.path} belongs to a different campaign "
                    f"({contents.header.get('fingerprint')} != {fingerprint})"
                )
            if contents.header is not None:
                return contents.results
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("")
        self._write({"type": "header", "fingerprint": fingerprint})
        return {}

    def _write(self, obj: Mapping[str, Any]) -> None:
        line = json.dumps(obj, sort_keys=True) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def append(self, result: ParameterResult) -> None:
        self._write(result.to_json())


# ---- scheduling ---------------------------------------------------------


@dataclass
class CampaignOutcome:
    results: list[ParameterResult]
    measured: list[str]
    resumed: list[str]
    pending: list[str]

    @property
    def complete(self) -> bool:
        return not self.pending


def partition(items: Sequence[Any], k: int) -> list[list[Any]]:
    """Static round-robin split; item i goes to part i % k."""
    return [list(items[d::k]) for d in range(k)]


def schedule(
    work: Sequence[tuple[ConstantSite, MutationPlan]],
    cfg: ExperimentConfig,
    devices: Sequence[Device],
    builder: Builder,
    journal: Journal | None = None,
    *,
    resume: bool = True,
    stop: threading.Event | None = None,
    on_result: Callable[[ParameterResult], None] | None = None,
) -> CampaignOutcome:
    """Run the campaign: builds in a pool, measurement serial per device.

    Parameter i is assigned to device i % len(devices). While a device
    measures parameter k, the pool is already building parameter k+1. With
    ``resume``, parameters found in the journal are skipped and each device
    continues from the run index its last recorded parameter ended on.
    """
    if not devices:
        raise ValueError("at least one device is required")
    ids = [s.id for s, _ in work]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate sites in campaign")
    done: dict[str, ParameterResult] = {}
    if journal is not None:
        done = journal.start(campaign_fingerprint(cfg, work), resume)
    resumed = [i for i in ids if i in done]
    measured: list[str] = []
    lock = threading.Lock()
    overflow: collections.deque[int] = collections.deque()
    errors: list[BaseException] = []
    stop = stop or threading.Event()

    baseline = builder.baseline()
    parts = partition(list(range(len(work))), len(devices))

    for dev, part in zip(devices, parts):
        ends = [done[ids[i]].next_run_index for i in part if ids[i] in done and done[ids[i]].device == dev.name]
        if ends:
            dev.run_index = max(ends)

    pool = ThreadPoolExecutor(max_workers=cfg.builders, thread_name_prefix="build")
    futures: dict[tuple[int, int], Future] = {}

    def submit(idx: int) -> None:
        site, plan = work[idx]
        for v in range(len(plan.new_values)):
            key = (idx, v)
            if key not in futures:
                futures[key] = pool.submit(builder.build, site, plan.new_values[v], v)

    def finish(idx: int, dev: Device) -> None:
        site, plan = work[idx]

        def build(v: int) -> BuildArtifact:
            return futures[(idx, v)].result()

        result = test_parameter(dev, site, plan, cfg, baseline, build)
        for v in range(len(plan.new_values)):
            fut = futures.pop((idx, v), None)
            if fut is not None and fut.exception() is None:
                builder.release(fut.result())
        with lock:
            measured.append(site.id)
            if journal is not None:
                journal.append(result)
            done[site.id] = result
        if on_result is not None:
            on_result(result)

    def device_loop(dev: Device, queue: list[int]) -> None:
        queue = [i for i in queue if ids[i] not in done]
        pos = 0
        try:
            while not stop.is_set():
                if pos >= len(queue):
                    with lock:
                        if not overflow:
                            return
                        queue.append(overflow.popleft())
                idx = queue[pos]
                with lock:
                    submit(idx)
                    if pos + 1 < len(queue):
                        submit(queue[pos + 1])
                try:
                    finish(idx, dev)
                except DeviceLost as exc:
                    log.warning("device %s lost (%s); re-queueing %d parameters", dev.name, exc, len(queue) - pos)
                    with lock:
                        overflow.extend(queue[pos:])
                    return
                pos += 1
        except BaseException as exc:  # surfaced after join
            errors.append(exc)
            stop.set()

    threads = [
        threading.Thread(target=device_loop, args=(d, part), name=f"device-{d.name}", daemon=True)
        for d, part in zip(devices, parts)
    ]
    try:
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
    if errors:
        raise errors[0]

    results = [done[i] for i in ids if i in done]
    pending = [i for i in ids if i not in done]
    return CampaignOutcome(results, measured, resumed, pending)


# ---- dry-run timing model ----------------------------------------------


def estimate_makespan(
    values_per_param: Sequence[int],
    build_seconds: float,
    block_seconds: float,
    *,
    devices: int = 1,
    builders: int = 1,
    pipelined: bool = True,
) -> float:
    """Wall-clock estimate of a campaign with no retries.

    Serial: each parameter builds all its values, then measures the baseline
    and value blocks. Pipelined: mirrors :func:`schedule`, where builds for the
    next parameter are submitted when a device starts the current one and
    builders are shared between devices.
    """
    parts = partition(list(values_per_param), devices)
    if not pipelined:
        return max((sum(k * build_seconds + (1 + k) * block_seconds for k in p) for p in parts), default=0.0)

    free = [0.0] * builders
    heapq.heapify(free)

    def build_all(k: int, at: float) -> list[float]:
        out = []
        for _ in range(k):
            start = max(heapq.heappop(free), at)
            heapq.heappush(free, start + build_seconds)
            out.append(start + build_seconds)
        return out

    # step the devices in time order so builder assignment is first come first served
    state = []
    for d, p in enumerate(parts):
        if p:
            state.append([0.0, d, 0, build_all(p[0], 0.0)])
    heapq.heapify(state)
    makespan = 0.0
    while state:
        t, d, j, ready = heapq.heappop(state)
        p = parts[d]
        nxt = build_all(p[j + 1], t) if j + 1 < len(p) else []
        t += block_seconds
        for r in ready:
            t = max(t, r) + block_seconds
        makespan = max(makespan, t)
        if j + 1 < len(p):
            heapq.heappush(state, [t, d, j + 1, nxt])
    return makespan


def simulated_devices(model: DriftNoiseModel, names: Iterable[str], pace: float = 0.0) -> list[SimulatedDevice]:
    return [SimulatedDevice(model, i, name, pace) for i, name in enumerate(names)]
