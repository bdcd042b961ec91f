"""Trace statistics: correlation, steady-state detection, constraint classes.

Everything here is pure over immutable traces. Sweeps re-run the simulator
per parameter point with the same noise seed, so cross-point differences are
model-driven, not noise-driven.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .model import ConstraintClass, DevicePreset
from .simulator import DEFAULT_DT_S, NoiseModel, Trace, run
from .workload import Workload


class AnalysisError(ValueError):
    pass


class UndefinedCorrelationError(AnalysisError):
    """Correlation of a zero-variance series is undefined."""


class NotConvergedError(AnalysisError):
    """No window of the trace satisfied the steady-state tolerance."""


@dataclass(frozen=True)
class SteadyStateWindow:
    start_s: float
    end_s: float
    mean_freq_hz: float
    mean_power_w: float
    mean_temp_c: float


@dataclass(frozen=True)
class SweepResult:
    """Per-point steady means plus Pearson coefficients against the parameter.

    A coefficient is None when that channel never varied across the sweep
    (e.g. frequency on a frequency-constrained device), which is itself a
    finding: the channel carries no signal.
    """

    sweep_param: tuple[float, ...]
    mean_freq_hz: tuple[float, ...]
    mean_power_w: tuple[float, ...]
    mean_temp_c: tuple[float, ...]
    corr_freq: float | None
    corr_power: float | None
    corr_temp: float | None

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        lines = ["param,mean_freq_hz,mean_power_w,mean_temp_c"]
        for i in range(len(self.sweep_param)):
            lines.append(
                f"{self.sweep_param[i]:g},{self.mean_freq_hz[i]:.1f},"
                f"{self.mean_power_w[i]:.6f},{self.mean_temp_c[i]:.5f}"
            )
        lines.append("# summary")
        for name, corr in (
            ("corr_freq", self.corr_freq),
            ("corr_power", self.corr_power),
            ("corr_temp", self.corr_temp),
        ):
            value = "no-correlation" if corr is None else f"{corr:.6f}"
            lines.append(f"# {name} = {value}")
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        tmp.replace(path)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient, clipped into [-1, 1].

    Raises UndefinedCorrelationError when either series has zero variance.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise AnalysisError("series must have equal length")
    if len(x) < 2:
        raise AnalysisError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    r = float(np.dot(dx, dy) / (sx * sy))
    return max(-1.0, min(1.0, r))


def _window_ok(values: np.ndarray, tol: float) -> bool:
    mean = float(values.mean())
    span = float(values.max() - values.min())
    if mean == 0.0:
        return span == 0.0
    return span / abs(mean) <= tol


def detect_steady_state(trace: Trace, window_s: float = 20.0, tol: float = 0.02) -> SteadyStateWindow:
    """Earliest window where frequency, power, and temperature are all flat.

    Flat means (max - min)/|mean| <= tol per channel over the window. Raises
    NotConvergedError if no window qualifies (e.g. a deliberately dithering
    device, or a trace shorter than the window).
    """
    n = len(trace)
    win = int(round(window_s / trace.dt_s))
    if win < 2 or win > n:
        raise NotConvergedError(
            f"trace of {n * trace.dt_s:.1f} s cannot hold a {window_s:.1f} s window"
        )
    stride = max(1, win // 20)
    for start in range(0, n - win + 1, stride):
        end = start + win
        if (
            _window_ok(trace.frequency_hz[start:end], tol)
            and _window_ok(trace.power_w[start:end], tol)
            and _window_ok(trace.temp_c[start:end], tol)
        ):
            return SteadyStateWindow(
                start_s=float(trace.t_s[start]),
                end_s=float(trace.t_s[end - 1]) + trace.dt_s,
                mean_freq_hz=float(trace.frequency_hz[start:end].mean()),
                mean_power_w=float(trace.power_w[start:end].mean()),
                mean_temp_c=float(trace.temp_c[start:end].mean()),
            )
    raise NotConvergedError(
        f"no {window_s:.1f} s window within {tol:.1%} tolerance in trace "
        f"{trace.preset_name}/{trace.workload_desc}"
    )


def time_to_throttle(trace: Trace) -> float | None:
    """Time of the first P-state drop below the running maximum, or None.

    The running maximum makes this robust to runs that ramp up first: a drop
    only counts once a higher state has been reached and lost.
    """
    ps = trace.pstate
    running_max = np.maximum.accumulate(ps)
    below = np.nonzero(ps < running_max)[0]
    if len(below) == 0:
        return None
    return float(trace.t_s[below[0]])


def classify_constraint(
    trace: Trace,
    preset: DevicePreset,
    tol: float = 0.05,
    window_s: float = 20.0,
    steady_tol: float = 0.02,
) -> ConstraintClass | None:
    """Which limit binds at steady state; None when nothing binds.

    Thermal takes precedence over power over frequency when several bind.
    `tol` is relative distance to the preset limit.
    """
    w = detect_steady_state(trace, window_s=window_s, tol=steady_tol)
    start = int(round(w.start_s / trace.dt_s))
    end = int(round(w.end_s / trace.dt_s))
    if preset.limits.t_max_c - w.mean_temp_c <= tol * preset.limits.t_max_c:
        return ConstraintClass.THERMALLY_CONSTRAINED
    if preset.limits.p_max_w - w.mean_power_w <= tol * preset.limits.p_max_w:
        return ConstraintClass.POWER_CONSTRAINED
    if int(trace.pstate[start:end].min()) == preset.curve.top_index:
        return ConstraintClass.FREQUENCY_CONSTRAINED
    return None


def sweep(
    preset: DevicePreset,
    workload_builder: Callable[[float], Workload],
    params: Sequence[float],
    duration_s: float,
    noise: NoiseModel,
    dt_s: float = DEFAULT_DT_S,
    window_s: float = 20.0,
    steady_tol: float = 0.02,
) -> SweepResult:
    """Run one simulation per parameter and correlate steady means against it."""
    if len(params) < 3:
        raise AnalysisError("need at least 3 sweep points")
    freqs: list[float] = []
    powers: list[float] = []
    temps: list[float] = []
    for p in params:
        trace = run(preset, workload_builder(p), duration_s, noise, dt_s=dt_s)
        w = detect_steady_state(trace, window_s=window_s, tol=steady_tol)
        freqs.append(w.mean_freq_hz)
        powers.append(w.mean_power_w)
        temps.append(w.mean_temp_c)

    def corr(values: list[float]) -> float | None:
        try:
            return pearson(list(params), values)
        except UndefinedCorrelationError:
            return None

    return SweepResult(
        sweep_param=tuple(float(p) for p in params),
        mean_freq_hz=tuple(freqs),
        mean_power_w=tuple(powers),
        mean_temp_c=tuple(temps),
        corr_freq=corr(freqs),
        corr_power=corr(powers),
        corr_temp=corr(temps),
    )


@dataclass(frozen=True)
class ChannelSeparation:
    mean_a: float
    mean_b: float
    separation: float
    flagged: bool


@dataclass(frozen=True)
class SeparationReport:
    frequency: ChannelSeparation
    power: ChannelSeparation
    temperature: ChannelSeparation

    def flagged_channels(self) -> list[str]:
        return [
            name
            for name, ch in (
                ("frequency", self.frequency),
                ("power", self.power),
                ("temperature", self.temperature),
            )
            if ch.flagged
        ]


def _separation(a: np.ndarray, b: np.ndarray, threshold: float) -> ChannelSeparation:
    mean_a = float(a.mean())
    mean_b = float(b.mean())
    pooled = float(np.sqrt((a.var() + b.var()) / 2.0))
    diff = abs(mean_a - mean_b)
    if pooled == 0.0:
        sep = 0.0 if diff == 0.0 else float("inf")
    else:
        sep = diff / pooled
    return ChannelSeparation(mean_a, mean_b, sep, sep > threshold)


def distinguish(
    trace_a: Trace,
    trace_b: Trace,
    threshold: float = 2.0,
    window_s: float = 20.0,
    steady_tol: float = 0.02,
) -> SeparationReport:
    """Standardized per-channel separation between two steady traces.

    A channel is flagged when |mean difference| exceeds `threshold` pooled
    standard deviations: the two workloads are distinguishable on it.
    """
    spans = []
    for trace in (trace_a, trace_b):
        w = detect_steady_state(trace, window_s=window_s, tol=steady_tol)
        start = int(round(w.start_s / trace.dt_s))
        end = start + int(round(window_s / trace.dt_s))
        spans.append((trace, start, end))
    (ta, sa, ea), (tb, sb, eb) = spans
    return SeparationReport(
        frequency=_separation(ta.frequency_hz[sa:ea], tb.frequency_hz[sb:eb], threshold),
        power=_separation(ta.power_w[sa:ea], tb.power_w[sb:eb], threshold),
        temperature=_separation(ta.temp_c[sa:ea], tb.temp_c[sb:eb], threshold),
    )
