"""Per-run energy measurement: an external-command measurer and a simulator.

The contract is one joule figure per scripted run. Real campaigns run a test
command that writes its reading to a file; desk-scale campaigns use
:class:`DriftNoiseModel`, which reproduces two behaviours of networked apps:
slow drift across hours (adjacent runs agree, distant runs can differ by
``drift_bounds``) and intermittent episodes of much higher run-to-run noise.
"""

from __future__ import annotations

import json
import math
import os
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np


class MeasurementError(RuntimeError):
    """The run finished but produced no usable reading."""


class RunFailure(RuntimeError):
    """The test command itself failed (nonzero exit or timeout)."""

    def __init__(self, message: str, returncode: int | None = None):
        super().__init__(message)
        self.returncode = returncode


BASELINE = "baseline"


@dataclass(frozen=True)
class Variant:
    """Either the unmodified build (``site_id is None``) or one planned value."""

    site_id: str | None = None
    value_index: int | None = None

    @property
    def is_baseline(self) -> bool:
        return self.site_id is None

    def key(self) -> tuple[str, int] | None:
        return None if self.site_id is None else (self.site_id, int(self.value_index or 0))

    def to_json(self) -> Any:
        if self.is_baseline:
            return BASELINE
        return {"site_id": self.site_id, "value_index": self.value_index}

    @classmethod
    def from_json(cls, obj: Any) -> Variant:
        if obj == BASELINE:
            return cls()
        return cls(obj["site_id"], obj["value_index"])

    def __str__(self) -> str:
        return BASELINE if self.is_baseline else f"{self.site_id}[{self.value_index}]"


@dataclass(frozen=True)
class RunMeasurement:
    run_id: str
    variant: Variant
    energy: float
    wall_time: float
    timestamp: float
    spiked: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.energy) and self.energy >= 0):
            raise MeasurementError(f"invalid energy reading {self.energy!r}")

    def to_json(self) -> dict[str, Any]:
        out = {
            "run_id": self.run_id,
            "variant": self.variant.to_json(),
            "energy": self.energy,
            "wall_time": self.wall_time,
            "timestamp": self.timestamp,
        }
        if self.spiked:
            out["spiked"] = True
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> RunMeasurement:
        return cls(
            obj["run_id"],
            Variant.from_json(obj["variant"]),
            obj["energy"],
            obj["wall_time"],
            obj["timestamp"],
            bool(obj.get("spiked", False)),
        )


class RunClock:
    """Strictly increasing timestamps for one device's run sequence."""

    def __init__(self):
        self._last = -math.inf
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            t = max(time.time(), self._last + 1e-6)
            self._last = t
            return t


def parse_reading(text: str) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise MeasurementError(f"reading is not a decimal number: {text.strip()!r}") from None
    if not math.isfinite(value) or value < 0:
        raise MeasurementError(f"reading must be a finite non-negative number, got {text.strip()!r}")
    return value


Command = Union[str, Sequence[str]]


def measure_run(
    command: Command,
    reading_path: str | os.PathLike,
    *,
    variant: Variant = Variant(),
    run_id: str = "",
    clock: RunClock | None = None,
    timeout: float | None = None,
    env: Mapping[str, str] | None = None,
    cwd: str | os.PathLike | None = None,
) -> RunMeasurement:
    """Run ``command`` once and consume the joule figure it writes to ``reading_path``.

    Any reading left over from an earlier run is removed before the command
    starts, so a command that writes nothing can never reuse a stale value.
    """
    path = Path(reading_path)
    path.unlink(missing_ok=True)
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    full_env = {**os.environ, **(env or {})}
    started = time.monotonic()
    try:
        proc = subprocess.run(argv, env=full_env, cwd=cwd, timeout=timeout, capture_output=True)
    except subprocess.TimeoutExpired:
        raise RunFailure(f"test command timed out after {timeout}s") from None
    except OSError as exc:
        raise RunFailure(f"cannot run test command: {exc}") from None
    elapsed = time.monotonic() - started
    if proc.returncode != 0:
        raise RunFailure(
            f"test command exited {proc.returncode}: {proc.stderr.decode(errors='replace').strip()[:500]}",
            proc.returncode,
        )
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise MeasurementError(f"no reading written to {path}") from None
    finally:
        path.unlink(missing_ok=True)
    energy = parse_reading(text)
    stamp = (clock or RunClock()).now()
    return RunMeasurement(run_id, variant, energy, elapsed, stamp)


# ---- simulator ----------------------------------------------------------

_DRIFT, _NOISE, _SPIKE = 1, 2, 3
_CHUNK = 4096


@dataclass
class DriftNoiseModel:
    """Synthetic energy readings with bounded drift and intermittent noise bursts.

    Drift is a reflected random walk in log space confined so that any two
    runs differ by at most a factor ``1 + drift_bounds``. Noise is
    multiplicative Gaussian with ``noise_sigma``; runs inside a spike
    episode (``spike_span`` consecutive runs, each episode spiked with
    probability ``spike_prob``) use ``spike_sigma`` instead.
    """

    base_energy: float = 100.0
    drift_step_sigma: float = 0.002
    drift_bounds: float = 0.14
    noise_sigma: float = 0.02
    spike_prob: float = 0.05
    spike_sigma: float = 0.16
    spike_span: int = 5
    effects: dict[tuple[str, int], float] = field(default_factory=dict)
    seed: int = 0
    run_seconds: float = 45.0

    def __post_init__(self):
        for name in ("drift_step_sigma", "drift_bounds", "noise_sigma", "spike_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise ValueError("spike_prob must lie in [0, 1]")
        if self.spike_span < 1:
            raise ValueError("spike_span must be at least 1")
        if not self.base_energy > 0:
            raise ValueError("base_energy must be positive")
        self.effects = {(str(k[0]), int(k[1])): float(v) for k, v in self.effects.items()}
        if any(not f > 0 for f in self.effects.values()):
            raise ValueError("effect factors must be positive")
        self._drift: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> DriftNoiseModel:
        obj = {k: v for k, v in obj.items() if k != "comment"}
        unknown = set(obj) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        effects = {}
        for e in obj.pop("effects", []):
            effects[(e["site_id"], int(e.get("value_index", 0)))] = float(e["factor"])
        return cls(effects=effects, **obj)

    def to_json(self) -> dict[str, Any]:
        return {
            "base_energy": self.base_energy,
            "drift_step_sigma": self.drift_step_sigma,
            "drift_bounds": self.drift_bounds,
            "noise_sigma": self.noise_sigma,
            "spike_prob": self.spike_prob,
            "spike_sigma": self.spike_sigma,
            "spike_span": self.spike_span,
            "effects": [
                {"site_id": k[0], "value_index": k[1], "factor": v} for k, v in sorted(self.effects.items())
            ],
            "seed": self.seed,
            "run_seconds": self.run_seconds,
        }

    @classmethod
    def load(cls, path: str | os.PathLike) -> DriftNoiseModel:
        return cls.from_json(json.loads(Path(path).read_text()))

    # log-drift lives in [-half, half] so that exp(2 * half) == 1 + drift_bounds
    @property
    def _half_width(self) -> float:
        return 0.5 * math.log1p(self.drift_bounds)

    def _drift_path(self, channel: int, upto: int) -> np.ndarray:
        with self._lock:
            path = self._drift.get(channel)
            if path is None:
                path = np.zeros(0)
            while len(path) <= upto:
                chunk = len(path) // _CHUNK
                rng = np.random.default_rng([self.seed, channel, _DRIFT, chunk])
                steps = rng.normal(0.0, self.drift_step_sigma, _CHUNK)
                start = float(path[-1]) if len(path) else 0.0
                path = np.concatenate([path, start + np.cumsum(steps)])
            self._drift[channel] = path
        return path

    def drift(self, run_index: int, channel: int = 0) -> float:
        """Multiplicative drift factor at ``run_index``; 1.0 at the start."""
        h = self._half_width
        if h == 0.0 or self.drift_step_sigma == 0.0:
            return 1.0
        raw = float(self._drift_path(channel, run_index)[run_index])
        # reflect the free walk into [-h, h]
        period = 4.0 * h
        y = (raw + h) % period
        folded = (y if y <= 2.0 * h else period - y) - h
        return math.exp(folded)

    def spiked(self, run_index: int, channel: int = 0) -> bool:
        if self.spike_prob == 0.0:
            return False
        episode = run_index // self.spike_span
        rng = np.random.default_rng([self.seed, channel, _SPIKE, episode])
        return bool(rng.random() < self.spike_prob)

    def effect(self, variant: Variant) -> float:
        key = variant.key()
        return 1.0 if key is None else self.effects.get(key, 1.0)


def simulate_run(model: DriftNoiseModel, variant: Variant, run_index: int, channel: int = 0) -> RunMeasurement:
    """One deterministic synthetic run; the same inputs always give the same reading."""
    spiked = model.spiked(run_index, channel)
    sigma = model.spike_sigma if spiked else model.noise_sigma
    eps = 0.0
    if sigma > 0:
        eps = float(np.random.default_rng([model.seed, channel, _NOISE, run_index]).normal(0.0, sigma))
    energy = model.base_energy * model.drift(run_index, channel) * model.effect(variant) * (1.0 + eps)
    return RunMeasurement(
        run_id=f"sim{channel}-{run_index}",
        variant=variant,
        energy=max(energy, 0.0),
        wall_time=model.run_seconds,
        timestamp=run_index * model.run_seconds,
        spiked=spiked,
    )
