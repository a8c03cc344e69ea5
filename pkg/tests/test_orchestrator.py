import json
import stat
import sys
import threading

import pytest

from conftest import APP, FIXTURES, app_work
from paramprof.measurement import DriftNoiseModel, MeasurementError, RunFailure, RunMeasurement, Variant
from paramprof.orchestrator import (
    ACCEPT,
    BUILD_FAILED,
    COMPLETED,
    DECIDED,
    DISCARD,
    DISCARDED_UNSTABLE,
    RUN_FAILED,
    BuildArtifact,
    BuildFailure,
    Builder,
    CommandDevice,
    Device,
    DeviceLost,
    ExperimentBlock,
    ExperimentConfig,
    Journal,
    JournalMismatch,
    ParameterResult,
    TreeBuilder,
    estimate_makespan,
    expand,
    partition,
    schedule,
    simulated_devices,
    stability_gate,
    test_parameter as run_parameter,
)


class ScriptedDevice(Device):
    """Energy comes from ``energy(variant, run_index)``; timestamps are run indices."""

    def __init__(self, energy, name="fake"):
        self.energy = energy
        self.name = name
        self.run_index = 0
        self.installed = None
        self.log = []

    def install(self, artifact):
        self.installed = artifact.variant

    def measure(self, variant):
        assert variant == self.installed
        e = self.energy(variant, self.run_index)
        m = RunMeasurement(f"{self.name}-{self.run_index}", variant, e, 1.0, float(self.run_index))
        self.log.append((self.run_index, variant))
        self.run_index += 1
        return m


def wiggle(i):
    return (0.0, 0.2, -0.2, 0.1, -0.1)[i % 5]


@pytest.fixture(scope="module")
def work():
    return app_work()


def one(work, raw):
    return next((s, p) for s, p in work if s.raw_text == raw)


# ---- blocks and the gate ------------------------------------------------------


def block_of(energies):
    runs = [RunMeasurement(str(i), Variant(), e, 1.0, float(i)) for i, e in enumerate(energies)]
    return ExperimentBlock.of(Variant(), runs)


def test_block_statistics():
    b = block_of([10.0, 10.2, 9.8, 10.1, 9.9])
    assert b.mean == pytest.approx(10.0)
    assert b.sample_sd == pytest.approx(0.158114, abs=1e-6)
    assert b.norm_sd == pytest.approx(0.0158114, abs=1e-7)
    assert stability_gate(b, 0.03) == ACCEPT


def test_gate_boundary_counts_as_stable():
    b = block_of([10.0, 10.2, 9.8, 10.1, 9.9])
    assert stability_gate(b, b.norm_sd) == ACCEPT
    assert stability_gate(b, b.norm_sd * (1 - 1e-9)) == DISCARD
    assert stability_gate(block_of([0.0, 0.0, 0.0]), 0.5) == DISCARD


def test_block_round_trip_checks_mean():
    b = block_of([1.0, 2.0, 3.0]).with_acceptance(True)
    assert ExperimentBlock.from_json(b.to_json()) == b
    bad = b.to_json()
    bad["mean"] = 2.5
    with pytest.raises(ValueError):
        ExperimentBlock.from_json(bad)


# ---- config ---------------------------------------------------------------------


@pytest.mark.parametrize("bad", [{"n": 1}, {"alpha": 0}, {"t_s": 1.0}, {"t_d": -0.1}, {"devices": []},
                                 {"devices": ["a", "a"]}, {"builders": 0}, {"max_block_retries": -1}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(bad)


def test_config_round_trip_and_unknown_keys():
    cfg = ExperimentConfig(t_s=0.04, devices=("a", "b"), env={"X": "1"})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    assert cfg.replace(t_d=0.02).t_d == 0.02
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"tS": 0.03})


def test_expand_quotes_before_substitution():
    assert expand("adb -s {device} install '{tree}/app x.apk'", device="d1", tree="/t w") == [
        "adb", "-s", "d1", "install", "/t w/app x.apk"]


# ---- one parameter --------------------------------------------------------------


def effect_device(factor=0.85):
    return ScriptedDevice(lambda v, i: 100.0 * (1 + wiggle(i) / 10) * (1.0 if v.value_index else
                                                                       (factor if not v.is_baseline else 1.0)))


def test_parameter_flow_and_adjacency(work):
    site, plan = one(work, "30000")
    dev = effect_device()
    cfg = ExperimentConfig()
    r = run_parameter(dev, site, plan, cfg, BuildArtifact(Variant()), lambda i: BuildArtifact(Variant(site.id, i)))
    assert r.status == COMPLETED
    assert [d.value_index for d in r.flagged] == [0]
    assert len(r.decisions) == len(plan.new_values)
    # baseline block first, then value blocks, all back to back on this device
    order = [v for _, v in dev.log]
    assert order[:5] == [Variant()] * 5
    assert [i for i, _ in dev.log] == list(range(5 * (1 + len(plan.new_values))))
    assert r.start_run_index == 0 and r.next_run_index == dev.run_index
    base_stamps = [m.timestamp for m in r.baseline_block.runs]
    val_stamps = [m.timestamp for m in r.values[0].block.runs]
    assert max(base_stamps) < min(val_stamps)
    assert ParameterResult.from_json(json.loads(json.dumps(r.to_json()))).to_json() == r.to_json()


def test_unstable_baseline_discards_parameter(work):
    site, plan = one(work, "30000")
    dev = ScriptedDevice(lambda v, i: 100.0 * (1 + 3 * wiggle(i)))
    cfg = ExperimentConfig(max_block_retries=3)
    r = run_parameter(dev, site, plan, cfg, BuildArtifact(Variant()), lambda i: BuildArtifact(Variant(site.id, i)))
    assert r.status == DISCARDED_UNSTABLE
    assert len(r.baseline_attempts) == 4 and not r.values
    assert dev.run_index == 20


def test_retry_then_accept(work):
    site, plan = one(work, "30000")
    dev = ScriptedDevice(lambda v, i: 100.0 * (1 + (3 if i < 5 else 0.1) * wiggle(i)))
    r = run_parameter(dev, site, plan, ExperimentConfig(), BuildArtifact(Variant()),
                      lambda i: BuildArtifact(Variant(site.id, i)))
    assert [b.accepted for b in r.baseline_attempts] == [False, True]
    assert r.baseline_block.runs[0].timestamp == 5.0


def test_build_failure_is_per_value(work):
    site, plan = one(work, "30000")

    def build(i):
        if i == 0:
            raise BuildFailure("does not compile")
        return BuildArtifact(Variant(site.id, i))

    r = run_parameter(effect_device(), site, plan, ExperimentConfig(), BuildArtifact(Variant()), build)
    assert r.values[0].status == BUILD_FAILED and r.values[0].decision is None
    assert all(v.status == DECIDED for v in r.values[1:])
    assert r.status == COMPLETED


def test_run_failure(work):
    site, plan = one(work, "30000")

    class Crashing(ScriptedDevice):
        def measure(self, variant):
            if not variant.is_baseline and variant.value_index == 0:
                raise RunFailure("app crashed", 1)
            return super().measure(variant)

    r = run_parameter(Crashing(lambda v, i: 100 + wiggle(i)), site, plan, ExperimentConfig(),
                      BuildArtifact(Variant()), lambda i: BuildArtifact(Variant(site.id, i)))
    assert r.values[0].status == RUN_FAILED and "crashed" in r.values[0].error

    class NoBaseline(ScriptedDevice):
        def measure(self, variant):
            raise MeasurementError("no reading")

    r = run_parameter(NoBaseline(None), site, plan, ExperimentConfig(), BuildArtifact(Variant()),
                      lambda i: BuildArtifact(Variant(site.id, i)))
    assert r.status == RUN_FAILED and r.error.startswith("baseline")


# ---- scheduling -----------------------------------------------------------------


def model():
    return DriftNoiseModel.load(FIXTURES / "app.model.json")


def test_partition_round_robin():
    assert partition(list(range(7)), 3) == [[0, 3, 6], [1, 4], [2, 5]]
    parts = partition(list(range(35)), 4)
    assert sorted(sum(parts, [])) == list(range(35))


def test_two_devices_disjoint(work):
    cfg = ExperimentConfig(t_s=0.036, devices=("sim0", "sim1"), builders=2)
    devs = simulated_devices(model(), cfg.devices)
    out = schedule(work, cfg, devs, Builder(APP))
    assert out.complete and len(out.results) == len(work)
    by_dev = {}
    for i, r in enumerate(out.results):
        assert r.device == cfg.devices[i % 2]
        by_dev.setdefault(r.device, []).append(r)
    for dev, rs in by_dev.items():
        spans = sorted((r.start_run_index, r.next_run_index) for r in rs)
        assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
        for r in rs:
            prefix = f"sim{cfg.devices.index(dev)}-"
            assert all(m.run_id.startswith(prefix) for b in r.all_blocks() for m in b.runs)


def test_schedule_is_deterministic(work):
    cfg = ExperimentConfig(t_s=0.036, devices=("sim0",), builders=3)
    a = schedule(work, cfg, simulated_devices(model(), cfg.devices), Builder(APP))
    b = schedule(work, cfg, simulated_devices(model(), cfg.devices), Builder(APP))
    assert [r.to_json() for r in a.results] == [r.to_json() for r in b.results]


def test_device_loss_requeues(work):
    class Lost(Device):
        name = "gone"

        def install(self, artifact):
            pass

        def measure(self, variant):
            raise DeviceLost("usb disconnected")

    cfg = ExperimentConfig(t_s=0.036, devices=("sim0", "gone"))
    alive = simulated_devices(model(), ["sim0"], pace=0.002)[0]
    out = schedule(work, cfg, [alive, Lost()], Builder(APP))
    assert out.complete
    assert {r.device for r in out.results} == {"sim0"}
    assert sorted(out.measured) == sorted(s.id for s, _ in work)


def test_build_failures_in_pool_are_recorded(work):
    class Broken(Builder):
        def build(self, site, literal, value_index):
            raise BuildFailure("toolchain missing")

    out = schedule(work[:3], ExperimentConfig(t_s=0.036), simulated_devices(model(), ["dev0"]), Broken(APP))
    assert [r.status for r in out.results] == [BUILD_FAILED] * 3


def test_duplicate_work_rejected(work):
    with pytest.raises(ValueError):
        schedule([work[0], work[0]], ExperimentConfig(), simulated_devices(model(), ["dev0"]), Builder(APP))


# ---- journal --------------------------------------------------------------------


def test_journal_resume_after_stop(work, tmp_path):
    cfg = ExperimentConfig(t_s=0.036, devices=("sim0",))
    full = schedule(work, cfg, simulated_devices(model(), cfg.devices), Builder(APP))

    path = tmp_path / "j.jsonl"
    stop = threading.Event()
    seen = []

    def on_result(r):
        seen.append(r.site_id)
        if len(seen) == 7:
            stop.set()

    first = schedule(work, cfg, simulated_devices(model(), cfg.devices), Builder(APP), Journal(path),
                     stop=stop, on_result=on_result)
    assert not first.complete and len(first.results) == 7
    # simulate a kill mid-write
    with open(path, "a") as fh:
        fh.write('{"type": "parameter", "site_id": "half')
    second = schedule(work, cfg, simulated_devices(model(), cfg.devices), Builder(APP), Journal(path))
    assert second.complete
    assert set(second.resumed) == set(seen) and not set(second.resumed) & set(second.measured)
    assert sorted(second.resumed + second.measured) == sorted(s.id for s, _ in work)
    assert [r.to_json() for r in second.results] == [r.to_json() for r in full.results]

    lines = [json.loads(x) for x in path.read_text().splitlines()]
    ids = [x["site_id"] for x in lines if x["type"] == "parameter"]
    assert len(ids) == len(set(ids)) == len(work)
    assert Journal.read(path).skipped == 0


def test_journal_fingerprint_mismatch(work, tmp_path):
    path = tmp_path / "j.jsonl"
    cfg = ExperimentConfig(t_s=0.036)
    schedule(work[:2], cfg, simulated_devices(model(), cfg.devices), Builder(APP), Journal(path))
    with pytest.raises(JournalMismatch):
        schedule(work[:2], cfg.replace(t_d=0.02), simulated_devices(model(), cfg.devices), Builder(APP),
                 Journal(path))
    fresh = schedule(work[:2], cfg.replace(t_d=0.02), simulated_devices(model(), cfg.devices), Builder(APP),
                     Journal(path), resume=False)
    assert fresh.complete and not fresh.resumed


def test_journal_skips_corrupt_middle_line(work, tmp_path):
    path = tmp_path / "j.jsonl"
    cfg = ExperimentConfig(t_s=0.036)
    schedule(work[:3], cfg, simulated_devices(model(), cfg.devices), Builder(APP), Journal(path))
    lines = path.read_text().splitlines()
    lines.insert(2, "{not json")
    path.write_text("\n".join(lines) + "\n")
    contents = Journal.read(path)
    assert contents.skipped == 1 and len(contents.results) == 3


# ---- timing model ---------------------------------------------------------------


def test_dry_run_pipelining_helps():
    k = [2] * 35
    serial = estimate_makespan(k, 60, 110, pipelined=False)
    piped = estimate_makespan(k, 60, 110, pipelined=True)
    assert serial == 35 * (2 * 60 + 3 * 110)
    assert piped < serial
    # builds faster than blocks hide behind the baseline block entirely
    assert piped == 35 * 3 * 110
    assert estimate_makespan(k, 60, 110, devices=2, builders=2) < piped


def test_dry_run_build_bound():
    # builds dominate: one builder cannot keep up, a second helps
    assert estimate_makespan([3] * 10, 300, 50, builders=2) < estimate_makespan([3] * 10, 300, 50, builders=1)


# ---- real commands --------------------------------------------------------------


def exe(path, body):
    path.write_text(f"#!{sys.executable}\nimport sys, os\n{body}\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return path


def test_command_device_and_tree_builder(work, tmp_path):
    site, plan = one(work, "30000")
    build = exe(tmp_path / "build.py", "open('BUILT', 'w').write('ok')")
    install = exe(tmp_path / "install.py", "open(sys.argv[2], 'w').write(sys.argv[1])")
    # reads the spliced literal back out of the installed tree
    probe = exe(tmp_path / "probe.py", f"""
tree = open({str(tmp_path / 'installed')!r}).read()
assert os.path.exists(os.path.join(tree, 'BUILT'))
src = open(os.path.join(tree, {site.file!r})).read()
e = 80.0 if '{plan.new_values[0]}' in src else 100.0
counter = {str(tmp_path / 'count')!r}
k = int(open(counter).read()) if os.path.exists(counter) else 0
open(counter, 'w').write(str(k + 1))
open(sys.argv[1], 'w').write(str(e + int(sys.argv[2]) / 100 + (-0.2, 0.1, 0.0, -0.1, 0.2)[k % 5]))
""")
    cfg = ExperimentConfig(
        build_cmd=str(build),
        install_cmd=f"{install} {{tree}} {tmp_path / 'installed'}",
        test_cmd=f"{probe} {{reading_path}} {{device}}".replace("{device}", "7"),
        devices=("phone",),
    )
    dev = CommandDevice("phone", cfg, tmp_path / "work")
    builder = TreeBuilder(APP, tmp_path / "work", cfg.build_cmd)
    out = schedule([(site, plan)], cfg, [dev], builder, Journal(tmp_path / "j.jsonl"))
    r = out.results[0]
    assert r.status == COMPLETED
    assert r.baseline_block.mean == pytest.approx(100.07)
    assert r.values[0].block.mean == pytest.approx(80.07)
    assert [d.value_index for d in r.flagged] == [0]
    assert not (tmp_path / "work" / "trees" / f"{site.id}-0").exists()


def test_command_device_failures(tmp_path):
    fail = exe(tmp_path / "fail.py", "sys.exit(2)")
    cfg = ExperimentConfig(test_cmd=str(fail), install_cmd=str(fail))
    dev = CommandDevice("d", cfg, tmp_path)
    with pytest.raises(RunFailure):
        dev.install(BuildArtifact(Variant(), tmp_path))
    with pytest.raises(RunFailure):
        dev.measure(Variant())
    with pytest.raises(ValueError):
        CommandDevice("d", ExperimentConfig(), tmp_path)


def test_tree_builder_compile_failure(work, tmp_path):
    site, plan = one(work, "30000")
    fail = exe(tmp_path / "cc.py", "sys.stderr.write('syntax error'); sys.exit(1)")
    with pytest.raises(BuildFailure, match="syntax error"):
        TreeBuilder(APP, tmp_path, str(fail)).build(site, plan.new_values[0], 0)
