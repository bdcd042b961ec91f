"""Discrete-time device simulation: power, thermal integration, DVFS governor.

The engine advances one 10 ms tick at a time. Each tick it evaluates static
and dynamic power at the current P-state, pushes the hotspot-weighted heat
flux through the lumped RC node, and every `governor_interval_ticks` lets the
governor move the P-state one step. Sensor samples record frequency exactly,
temperature as the (noise-perturbed) node state, and power as the electrical
model value plus sensor noise, so pre-noise power always equals
static_power + dynamic_power at the sampled state.

Noise has two seeded components: a bounded process perturbation on the
thermal state (the governor sees it, which is what spreads time-to-throttle
across seeds) and white sensor noise on the recorded power column. Frame
timing adds jitter on top. Identical inputs and seed give bit-identical
output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import DevicePreset, dynamic_power, heat_power, static_power
from .workload import ActivityFactor, Workload, decompose_components

DEFAULT_DT_S = 0.01  # sensor sampling cadence
ACTIVITY_TICKS = 4096  # operand-stream window used to summarize a workload
DEFAULT_TIMER_RESOLUTION_S = 100e-6  # coarse browser timer
HIGH_RES_TIMER_S = 1e-6


class SimulationError(ValueError):
    """Invalid simulation inputs (clamp out of range, bad duration, ...)."""


@dataclass(frozen=True)
class NoiseModel:
    """Reproducible noise: thermal process sigma, power sensor sigma, timing jitter."""

    power_sigma_w: float = 0.01
    temp_sigma_c: float = 0.05
    timing_jitter_sigma_s: float = 50e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("power_sigma_w", "temp_sigma_c", "timing_jitter_sigma_s"):
            if getattr(self, name) < 0:
                raise SimulationError(f"NoiseModel.{name} must be >= 0")


ZERO_NOISE = NoiseModel(0.0, 0.0, 0.0, seed=0)


@dataclass
class SimState:
    """Live simulator state."""

    temp_c: float
    pstate_index: int
    elapsed_s: float
    rng_seed: int


@dataclass(frozen=True)
class SensorSample:
    t_s: float
    frequency_hz: float
    power_w: float
    temp_c: float
    pstate_index: int


TRACE_HEADER = "t_s,frequency_hz,power_w,temp_c,pstate"


class Trace:
    """Time series of sensor samples with fixed spacing dt."""

    def __init__(
        self,
        t_s: np.ndarray,
        frequency_hz: np.ndarray,
        power_w: np.ndarray,
        temp_c: np.ndarray,
        pstate: np.ndarray,
        dt_s: float,
        preset_name: str,
        workload_desc: str,
    ):
        n = len(t_s)
        if not (len(frequency_hz) == len(power_w) == len(temp_c) == len(pstate) == n):
            raise SimulationError("trace columns must have equal length")
        self.t_s = t_s
        self.frequency_hz = frequency_hz
        self.power_w = power_w
        self.temp_c = temp_c
        self.pstate = pstate
        self.dt_s = dt_s
        self.preset_name = preset_name
        self.workload_desc = workload_desc

    def __len__(self) -> int:
        return len(self.t_s)

    def __getitem__(self, i: int) -> SensorSample:
        return SensorSample(
            float(self.t_s[i]),
            float(self.frequency_hz[i]),
            float(self.power_w[i]),
            float(self.temp_c[i]),
            int(self.pstate[i]),
        )

    def duration_s(self) -> float:
        return len(self) * self.dt_s

    def to_csv(self, path: str | Path) -> None:
        """Write `t_s,frequency_hz,power_w,temp_c,pstate` rows, atomically."""
        path = Path(path)
        lines = [TRACE_HEADER]
        for i in range(len(self)):
            lines.append(
                f"{self.t_s[i]:.4f},{self.frequency_hz[i]:.1f},"
                f"{self.power_w[i]:.6f},{self.temp_c[i]:.5f},{int(self.pstate[i])}"
            )
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        tmp.replace(path)

    @classmethod
    def from_csv(cls, path: str | Path, preset_name: str = "", workload_desc: str = "") -> "Trace":
        path = Path(path)
        with open(path) as fh:
            header = fh.readline().strip()
            if header != TRACE_HEADER:
                raise SimulationError(f"{path}: unexpected trace header {header!r}")
            rows = [line.strip().split(",") for line in fh if line.strip()]
        if not rows:
            raise SimulationError(f"{path}: empty trace")
        cols = list(zip(*rows))
        t = np.array([float(x) for x in cols[0]])
        dt = float(t[1] - t[0]) if len(t) > 1 else DEFAULT_DT_S
        return cls(
            t_s=t,
            frequency_hz=np.array([float(x) for x in cols[1]]),
            power_w=np.array([float(x) for x in cols[2]]),
            temp_c=np.array([float(x) for x in cols[3]]),
            pstate=np.array([int(x) for x in cols[4]]),
            dt_s=dt,
            preset_name=preset_name or path.stem,
            workload_desc=workload_desc,
        )


def effective_activity(preset: DevicePreset, w: Workload, ticks: int = ACTIVITY_TICKS) -> ActivityFactor:
    """Fold per-instruction energy and lane count into the workload's activity."""
    act = decompose_components(w, ticks)
    base = min(1.0, act.base * preset.energy_of(w.kind) * w.parallelism)
    return ActivityFactor(base=base, hd_a=act.hd_a, hd_b=act.hd_b, hd_c=act.hd_c, hw=act.hw)


def governor_step(
    state: SimState,
    power_w: float,
    preset: DevicePreset,
    projected_up_power_w: float | None = None,
) -> int:
    """One governor decision; returns the new P-state index.

    Order of rules: thermal backoff, power backoff, then a single upscale
    step gated on both the thermal hysteresis band and the projected power
    of the next P-state. `projected_up_power_w` defaults to the current
    power, which is conservative but lets the rule set stand alone.
    """
    idx = state.pstate_index
    top = preset.curve.top_index
    hyst = preset.governor_hysteresis_c
    if state.temp_c >= preset.limits.t_max_c - hyst:
        return max(0, idx - 1)
    if power_w >= preset.limits.p_max_w:
        return max(0, idx - 1)
    projected = power_w if projected_up_power_w is None else projected_up_power_w
    if state.temp_c < preset.limits.t_max_c - 2.0 * hyst and projected < preset.limits.p_max_w:
        return min(top, idx + 1)
    return idx


class _NoiseStreams:
    """Independently seeded normal streams for the three noise channels."""

    def __init__(self, noise: NoiseModel):
        self._gens = [np.random.default_rng([noise.seed, k]) for k in range(3)]

    def block(self, channel: int, n: int) -> np.ndarray:
        return self._gens[channel].standard_normal(n)

    def jitter(self) -> float:
        return float(self._gens[2].standard_normal())


class Simulation:
    """Owns one device's evolving state; single-threaded by contract."""

    def __init__(
        self,
        preset: DevicePreset,
        workload: Workload,
        noise: NoiseModel = ZERO_NOISE,
        clamp: int | None = None,
        dt_s: float = DEFAULT_DT_S,
        start_idle: bool = False,
    ):
        if clamp is not None and not 0 <= clamp <= preset.curve.top_index:
            raise SimulationError(
                f"clamp index {clamp} outside curve bounds 0..{preset.curve.top_index}"
            )
        self.preset = preset
        self.noise = noise
        self.dt_s = dt_s
        self.clamp = clamp
        self._streams = _NoiseStreams(noise)
        # stationary OU std equals temp_sigma under the node's time constant
        tau = preset.thermal.time_constant_s
        self._temp_kick = noise.temp_sigma_c * math.sqrt(2.0 * dt_s / tau)
        self.tick_count = 0
        self.temp_c = preset.thermal.ambient_c
        self.set_workload(workload)
        if clamp is not None:
            self.pstate_index = clamp
        elif start_idle:
            self.pstate_index = 0
        else:
            self.pstate_index = self._load_start_index()

    def set_workload(self, workload: Workload) -> None:
        """Swap the running workload; device state (heat, P-state) persists."""
        self.workload = workload
        act = effective_activity(self.preset, workload)
        self.activity = act
        base_heat = self.preset.heat_factor_of(workload.kind)
        curve = self.preset.curve
        pw = self.preset.power
        self._elec = np.array([dynamic_power(ps, act, pw) for ps in curve.pstates])
        self._heat = np.array([heat_power(ps, act, pw, base_heat) for ps in curve.pstates])
        self._freq = np.array([ps.frequency_hz for ps in curve.pstates])

    def _load_start_index(self) -> int:
        """Highest P-state whose cold-start power stays under the power limit."""
        preset = self.preset
        pw = preset.power
        amb = preset.thermal.ambient_c
        ref_t = preset.power_guard_temp_c if preset.power_guard_temp_c is not None else amb
        stat = static_power(ref_t, pw, amb)
        ok = np.nonzero(stat + self._elec < preset.limits.p_max_w)[0]
        return int(ok[-1]) if len(ok) else 0

    @property
    def state(self) -> SimState:
        return SimState(
            temp_c=self.temp_c,
            pstate_index=self.pstate_index,
            elapsed_s=self.tick_count * self.dt_s,
            rng_seed=self.noise.seed,
        )

    def power_w(self) -> float:
        """Electrical power at the current state (what the sensor reports, pre-noise)."""
        pw = self.preset.power
        amb = self.preset.thermal.ambient_c
        return static_power(self.temp_c, pw, amb) + float(self._elec[self.pstate_index])

    def advance(self, ticks: int, intensity: float | None = None) -> None:
        """Advance `ticks` sensor periods without recording samples."""
        self._run(ticks, record=None, intensity=intensity)

    def _run(self, ticks: int, record, intensity: float | None = None) -> None:
        """Tick loop. Inlines governor_step's rules; tests keep them in sync."""
        preset = self.preset
        th = preset.thermal
        pw = preset.power
        dt = self.dt_s
        amb = th.ambient_c
        r_th = th.r_th_c_per_w
        inv_c = dt / th.c_th_j_per_c
        if dt >= th.time_constant_s / 10.0:
            raise SimulationError("dt too coarse for this preset's thermal time constant")
        interval = preset.governor_interval_ticks
        idle_w = pw.idle_power_w
        leak = pw.leakage_w_per_c
        kick = self._temp_kick
        temp_noise = (self._streams.block(0, ticks) * kick).tolist() if kick > 0 else None
        power_noise = (
            (self._streams.block(1, ticks) * self.noise.power_sigma_w).tolist()
            if record is not None and self.noise.power_sigma_w > 0
            else None
        )
        scale = 1.0 if intensity is None else intensity
        temp = self.temp_c
        idx = self.pstate_index
        elec = self._elec.tolist()
        heat = self._heat.tolist()
        freq = self._freq.tolist()
        top = len(elec) - 1
        tick0 = self.tick_count
        governed = self.clamp is None
        demand_idle = intensity is not None and intensity <= 0.0
        t_down = preset.limits.t_max_c - preset.governor_hysteresis_c
        t_up = preset.limits.t_max_c - 2.0 * preset.governor_hysteresis_c
        p_max = preset.limits.p_max_w
        guard_t = preset.power_guard_temp_c
        stat_rule = None if guard_t is None else idle_w + leak * max(0.0, guard_t - amb)
        for i in range(ticks):
            stat = idle_w + leak * (temp - amb) if temp > amb else idle_w
            if record is not None:
                noisy = stat + scale * elec[idx]
                if power_noise is not None:
                    noisy += power_noise[i]
                record((tick0 + i) * dt, freq[idx], noisy, temp, idx)
            temp += inv_c * (stat + scale * heat[idx] - (temp - amb) / r_th)
            if temp_noise is not None:
                temp += temp_noise[i]
            if governed and (tick0 + i + 1) % interval == 0:
                if demand_idle:
                    if idx > 0:
                        idx -= 1
                elif temp >= t_down:
                    if idx > 0:
                        idx -= 1
                else:
                    if stat_rule is not None:
                        stat_now = stat_rule
                    else:
                        stat_now = idle_w + leak * (temp - amb) if temp > amb else idle_w
                    power_now = stat_now + scale * elec[idx]
                    if power_now >= p_max:
                        if idx > 0:
                            idx -= 1
                    elif (
                        temp < t_up
                        and idx < top
                        and stat_now + scale * elec[idx + 1] < p_max
                    ):
                        idx += 1
        self.temp_c = temp
        self.pstate_index = idx
        self.tick_count = tick0 + ticks


def run(
    preset: DevicePreset,
    workload: Workload,
    duration_s: float,
    noise: NoiseModel = ZERO_NOISE,
    clamp: int | None = None,
    dt_s: float = DEFAULT_DT_S,
) -> Trace:
    """Simulate a sustained workload from an idle device at room temperature.

    With `clamp` set the P-state is pinned and the governor bypassed.
    Identical inputs and noise seed produce bit-identical traces.
    """
    if duration_s <= 0:
        raise SimulationError("duration must be > 0")
    sim = Simulation(preset, workload, noise, clamp=clamp, dt_s=dt_s)
    n = int(round(duration_s / dt_s))
    t = np.empty(n)
    f = np.empty(n)
    p = np.empty(n)
    tc = np.empty(n)
    ps = np.empty(n, dtype=np.int64)
    cursor = 0

    def record(ts, freq, power, temp, idx):
        nonlocal cursor
        t[cursor] = ts
        f[cursor] = freq
        p[cursor] = power
        tc[cursor] = temp
        ps[cursor] = idx
        cursor += 1

    sim._run(n, record)
    return Trace(t, f, p, tc, ps, dt_s, preset.name, workload.description)


def render_loop(
    preset: DevicePreset,
    workload: Workload,
    frames: int,
    noise: NoiseModel = ZERO_NOISE,
    clamp: int | None = None,
    timer_resolution_s: float = DEFAULT_TIMER_RESOLUTION_S,
    sim: Simulation | None = None,
) -> list[float]:
    """Render `frames` filter applications and return measured frame times.

    Each frame costs workload.ops_per_frame cycles at the frequency in force
    when the frame starts; device state (heat, throttling) advances across
    frames. Measured times add timing jitter and are quantized to the timer
    resolution. Pass `sim` to continue an existing device state, e.g. for
    sequential attack batches.
    """
    if frames < 1:
        raise SimulationError("need at least one frame")
    if workload.ops_per_frame is None:
        raise SimulationError("workload has no ops_per_frame; build it as a filter workload")
    if sim is None:
        sim = Simulation(preset, workload, noise, clamp=clamp)
    elif sim.workload is not workload:
        sim.set_workload(workload)
    dt = sim.dt_s
    times: list[float] = []
    carry = 0.0
    for _ in range(frames):
        freq = float(sim._freq[sim.pstate_index])
        frame_s = workload.ops_per_frame / freq
        carry += frame_s
        ticks = int(carry / dt)
        if ticks:
            sim.advance(ticks)
            carry -= ticks * dt
        measured = frame_s
        if noise.timing_jitter_sigma_s > 0:
            measured += sim._streams.jitter() * noise.timing_jitter_sigma_s
        if timer_resolution_s > 0:
            measured = round(measured / timer_resolution_s) * timer_resolution_s
        times.append(max(timer_resolution_s, measured))
    return times


def run_burst_profile(
    preset: DevicePreset,
    profile,
    duration_s: float,
    noise: NoiseModel = ZERO_NOISE,
    dt_s: float = DEFAULT_DT_S,
) -> Trace:
    """Simulate a website-style burst profile on an otherwise idle device.

    `profile` needs a `label` and `bursts` of (onset_s, duration_s,
    intensity) entries; overlapping bursts sum and saturate at 1.0. Between
    bursts the governor walks the P-state down to the bottom, so an empty
    profile yields an idle trace at idle power.
    """
    if duration_s <= 0:
        raise SimulationError("duration must be > 0")
    n = int(round(duration_s / dt_s))
    intensity = np.zeros(n)
    for onset, dur, level in profile.bursts:
        if onset < 0 or onset + dur > duration_s + 1e-9:
            raise SimulationError(
                f"burst ({onset}, {dur}) falls outside the trace window 0..{duration_s}"
            )
        a = int(round(onset / dt_s))
        b = min(n, int(round((onset + dur) / dt_s)))
        intensity[a:b] += level
    np.clip(intensity, 0.0, 1.0, out=intensity)

    from .workload import instruction_workload

    w = instruction_workload("fmul")
    sim = Simulation(preset, w, noise, dt_s=dt_s, start_idle=True)
    t = np.empty(n)
    f = np.empty(n)
    p = np.empty(n)
    tc = np.empty(n)
    ps = np.empty(n, dtype=np.int64)
    cursor = 0

    def record(ts, freq, power, temp, idx):
        nonlocal cursor
        t[cursor] = ts
        f[cursor] = freq
        p[cursor] = power
        tc[cursor] = temp
        ps[cursor] = idx
        cursor += 1

    # run in spans of constant intensity so precomputed mixes stay valid
    i = 0
    while i < n:
        j = i + 1
        while j < n and intensity[j] == intensity[i]:
            j += 1
        sim._run(j - i, record, intensity=float(intensity[i]))
        i = j
    return Trace(t, f, p, tc, ps, dt_s, preset.name, f"profile:{profile.label}")
