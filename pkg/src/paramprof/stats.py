"""Decision statistics for baseline-versus-variant energy blocks.

All p-values are one-sided for the alternative "variant mean is lower than
baseline mean" and come from a continued-fraction evaluation of the
regularized incomplete beta function, so results do not depend on a
statistics package being present.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Mapping, Sequence

REDUCING = "energy-reducing-candidate"
NOT_SIGNIFICANT = "not-significant"
UNDECIDABLE = "undecidable"

TD_GRID_STEP = 0.005


class DegenerateSamplesError(ValueError):
    pass


# ---- special functions --------------------------------------------------

_EPS = 1e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with real ``df`` > 0."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    x = df / (df + t * t)
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, x)
    return tail if t < 0 else 1.0 - tail


# ---- descriptive --------------------------------------------------------


@dataclass(frozen=True)
class SampleStats:
    n: int
    mean: float
    sample_variance: float

    @property
    def sample_sd(self) -> float:
        return math.sqrt(self.sample_variance)

    @property
    def norm_sd(self) -> float:
        if not self.mean > 0:
            raise ValueError("normalized standard deviation needs a positive mean")
        return self.sample_sd / self.mean

    @classmethod
    def of(cls, values: Sequence[float]) -> SampleStats:
        n = len(values)
        if n < 2:
            raise ValueError("need at least two samples")
        mean = math.fsum(values) / n
        var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(n, mean, var)


def norm_sd(values: Sequence[float]) -> float:
    return SampleStats.of(values).norm_sd


# ---- t-tests ------------------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    alpha: float
    test: str

    @property
    def significant(self) -> bool:
        # one-sided: a non-negative t never supports "variant is lower"
        return self.t_statistic < 0 and self.p_value < self.alpha

    def to_json(self) -> dict[str, Any]:
        return {
            "test": self.test,
            "t": self.t_statistic,
            "df": self.degrees_of_freedom,
            "p": self.p_value,
            "alpha": self.alpha,
            "significant": self.significant,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> TTestResult:
        return cls(obj["t"], obj["df"], obj["p"], obj["alpha"], obj["test"])


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def student_t_test(variant: Sequence[float], baseline: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Pooled-variance test of mean(variant) < mean(baseline)."""
    _check_alpha(alpha)
    p, b = SampleStats.of(variant), SampleStats.of(baseline)
    df = p.n + b.n - 2
    pooled = ((p.n - 1) * p.sample_variance + (b.n - 1) * b.sample_variance) / df
    if pooled <= 0:
        raise DegenerateSamplesError("pooled variance is zero")
    t = (p.mean - b.mean) / math.sqrt(pooled * (1.0 / p.n + 1.0 / b.n))
    return TTestResult(t, float(df), t_cdf(t, df), alpha, "student")


def welch_df(var_p: float, n_p: int, var_b: float, n_b: int) -> float:
    a, c = var_p / n_p, var_b / n_b
    return (a + c) ** 2 / (a * a / (n_p - 1) + c * c / (n_b - 1))


def welch_t_test(variant: Sequence[float], baseline: Sequence[float], alpha: float = 0.05) -> TTestResult:
    """Unequal-variance test of mean(variant) < mean(baseline), Satterthwaite df."""
    _check_alpha(alpha)
    p, b = SampleStats.of(variant), SampleStats.of(baseline)
    se2 = p.sample_variance / p.n + b.sample_variance / b.n
    if se2 <= 0:
        raise DegenerateSamplesError("both samples have zero variance")
    t = (p.mean - b.mean) / math.sqrt(se2)
    df = welch_df(p.sample_variance, p.n, b.sample_variance, b.n)
    return TTestResult(t, df, t_cdf(t, df), alpha, "welch")


def apply_threshold(baseline: Sequence[float], t_d: float) -> list[float]:
    """Scale the baseline down by ``t_d`` so smaller drops cannot count."""
    if not 0.0 <= t_d < 1.0:
        raise ValueError("t_d must lie in [0, 1)")
    return [(1.0 - t_d) * v for v in baseline]


# ---- decisions ----------------------------------------------------------


@dataclass(frozen=True)
class TestDecision:
    site_id: str
    value_index: int
    baseline_mean: float
    variant_mean: float
    relative_delta: float
    t_d: float
    result: TTestResult | None
    verdict: str
    variant_samples: tuple[float, ...] = ()
    baseline_samples: tuple[float, ...] = ()
    note: str = ""

    __test__ = False  # not a pytest class

    @property
    def flagged(self) -> bool:
        return self.verdict == REDUCING

    def to_json(self) -> dict[str, Any]:
        return {
            "site_id": self.site_id,
            "value_index": self.value_index,
            "baseline_mean": self.baseline_mean,
            "variant_mean": self.variant_mean,
            "relative_delta": self.relative_delta,
            "t_d": self.t_d,
            "ttest": self.result.to_json() if self.result else None,
            "verdict": self.verdict,
            "variant_samples": list(self.variant_samples),
            "baseline_samples": list(self.baseline_samples),
            "note": self.note,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> TestDecision:
        return cls(
            site_id=obj["site_id"],
            value_index=obj["value_index"],
            baseline_mean=obj["baseline_mean"],
            variant_mean=obj["variant_mean"],
            relative_delta=obj["relative_delta"],
            t_d=obj["t_d"],
            result=TTestResult.from_json(obj["ttest"]) if obj.get("ttest") else None,
            verdict=obj["verdict"],
            variant_samples=tuple(obj.get("variant_samples", ())),
            baseline_samples=tuple(obj.get("baseline_samples", ())),
            note=obj.get("note", ""),
        )


def decide(
    variant: Sequence[float],
    baseline: Sequence[float],
    t_d: float = 0.0,
    alpha: float = 0.05,
    *,
    site_id: str = "",
    value_index: int = 0,
) -> TestDecision:
    """Flag the variant if it is significantly below the t_d-scaled baseline.

    ``t_d == 0`` uses Student's test on the raw blocks; otherwise the baseline
    is scaled and compared with Welch's test, since scaling changes its
    variance.
    """
    bm = math.fsum(baseline) / len(baseline)
    vm = math.fsum(variant) / len(variant)
    delta = (vm - bm) / bm if bm else math.nan
    try:
        if t_d == 0.0:
            res = student_t_test(variant, baseline, alpha)
        else:
            res = welch_t_test(variant, apply_threshold(baseline, t_d), alpha)
    except DegenerateSamplesError as exc:
        return TestDecision(site_id, value_index, bm, vm, delta, t_d, None, UNDECIDABLE,
                            tuple(variant), tuple(baseline), str(exc))
    verdict = REDUCING if res.significant else NOT_SIGNIFICANT
    return TestDecision(site_id, value_index, bm, vm, delta, t_d, res, verdict, tuple(variant), tuple(baseline))


# ---- thresholds ---------------------------------------------------------


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical CDF over the distinct observed values."""

    xs: tuple[float, ...]
    fs: tuple[float, ...]
    n: int

    def __call__(self, x: float) -> float:
        i = bisect.bisect_right(self.xs, x)
        return self.fs[i - 1] if i else 0.0

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.fs))


def empirical_cdf(values: Sequence[float]) -> ECDF:
    if not values:
        raise ValueError("empirical CDF needs at least one value")
    ordered = sorted(values)
    n = len(ordered)
    xs: list[float] = []
    fs: list[float] = []
    for i, v in enumerate(ordered, 1):
        if xs and xs[-1] == v:
            fs[-1] = i / n
        else:
            xs.append(v)
            fs.append(i / n)
    return ECDF(tuple(xs), tuple(fs), n)


class NoKneeError(ValueError):
    pass


def knee_point(ecdf: ECDF) -> float:
    """x of the ECDF point farthest from the chord joining its first and last points.

    Ties, including a perfectly straight CDF, resolve to the smallest x.
    """
    if len(ecdf.xs) < 3:
        raise NoKneeError("need at least three distinct values to locate a knee")
    x0, y0 = ecdf.xs[0], ecdf.fs[0]
    x1, y1 = ecdf.xs[-1], ecdf.fs[-1]
    dx, dy = x1 - x0, y1 - y0
    norm = math.hypot(dx, dy)
    best_x, best_d = x0, -1.0
    for x, y in zip(ecdf.xs, ecdf.fs):
        d = abs(dy * (x - x0) - dx * (y - y0)) / norm
        if d > best_d * (1 + 1e-12) + 1e-15:
            best_x, best_d = x, d
    return best_x


@dataclass
class TdCalibration:
    t_d: float
    artifacts: list[Hashable] = field(default_factory=list)
    persistent: list[Hashable] = field(default_factory=list)
    conflict: bool = False
    note: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "t_d": self.t_d,
            "artifacts": [_key_text(a) for a in self.artifacts],
            "persistent": [_key_text(p) for p in self.persistent],
            "conflict": self.conflict,
            "note": self.note,
        }


def _key_text(key: Hashable) -> str:
    if isinstance(key, tuple) and len(key) == 2:
        return f"{key[0]}[{key[1]}]"
    return str(key)


def decision_key(d: TestDecision) -> tuple[str, int]:
    return (d.site_id, d.value_index)


def calibrate_t_d(
    first_pass: Sequence[TestDecision],
    rerun: Mapping[Hashable, TestDecision] | Sequence[TestDecision],
    alpha: float = 0.05,
    *,
    step: float = TD_GRID_STEP,
    max_t_d: float = 0.5,
) -> TdCalibration:
    """Smallest grid t_d that rejects first-pass positives a rerun did not confirm.

    First-pass positives whose rerun is also significant are persistent and
    must survive; the rest are treated as fluctuation artifacts. Both groups
    are re-decided on their first-pass blocks at each candidate t_d.
    """
    if not isinstance(rerun, Mapping):
        rerun = {decision_key(d): d for d in rerun}
    positives = [d for d in first_pass if d.flagged]
    if not positives:
        return TdCalibration(0.0, note="no first-pass positives")
    missing = [decision_key(d) for d in positives if decision_key(d) not in rerun]
    if missing:
        raise ValueError(f"rerun is missing first-pass positives: {missing}")
    artifacts = [d for d in positives if not rerun[decision_key(d)].flagged]
    persistent = [d for d in positives if rerun[decision_key(d)].flagged]
    result = TdCalibration(
        0.0,
        artifacts=[decision_key(d) for d in artifacts],
        persistent=[decision_key(d) for d in persistent],
    )
    if not artifacts:
        result.note = "no fluctuation artifacts"
        return result

    best: tuple[int, float] | None = None
    steps = int(round(max_t_d / step))
    for i in range(steps + 1):
        t_d = round(i * step, 10)
        if t_d >= 1.0:
            break
        rejected = sum(not decide(d.variant_samples, d.baseline_samples, t_d, alpha).flagged for d in artifacts)
        lost = sum(not decide(d.variant_samples, d.baseline_samples, t_d, alpha).flagged for d in persistent)
        if rejected == len(artifacts) and lost == 0:
            result.t_d = t_d
            return result
        score = rejected - lost
        if best is None or score > best[0]:
            best = (score, t_d)
    assert best is not None
    result.t_d = best[1]
    result.conflict = True
    result.note = "no t_d separates artifacts from persistent positives"
    return result
