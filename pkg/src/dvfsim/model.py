"""Physical model core: P-state tables, power equations, lumped thermal node.

Every other module consumes these types. All operations here are pure
functions of their inputs and safe to call concurrently.

Power model. Dynamic (electrical, what the power sensor reports):

    P_dyn = dyn_energy_scale * V^2 * f * (base + wb*HD_B + wc*HD_C + ww*HW)

where `base` is the energy-weighted instruction activity and the HD/HW terms
are normalized operand-switching components. Static power is idle power plus
a linear temperature-dependent leakage term.

Heat model. The thermal node represents the die hotspot the sensor and the
governor respond to. Switching activity concentrates in a small area, so its
contribution to the hotspot flux is weighted up relative to the baseline
instruction stream:

    Q = static + dyn_energy_scale * V^2 * f
            * (base_heat*base + data_heat_gain*(wb*HD_B + wc*HD_C + ww*HW))

`base_heat` carries the per-instruction heat density (see
DevicePreset.instruction_heat) and `data_heat_gain` the operand-switching
density. With both at 1.0 the heat flux equals electrical power. Weighting
them above 1.0 is what lets a thermally pinned device show workload-dependent
steady power: the hotter-per-watt workload settles at lower total power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class ModelError(ValueError):
    """Invalid physical-model inputs or inconsistent preset values."""


class ConstraintClass(Enum):
    """Which operating limit binds at steady state."""

    FREQUENCY_CONSTRAINED = "frequency"
    POWER_CONSTRAINED = "power"
    THERMALLY_CONSTRAINED = "thermal"


@dataclass(frozen=True)
class PState:
    """One voltage/frequency operating point."""

    index: int
    frequency_hz: float
    voltage: float  # relative units

    def __post_init__(self):
        if self.frequency_hz <= 0:
            raise ModelError(f"P-state {self.index}: frequency must be > 0")
        if self.voltage <= 0:
            raise ModelError(f"P-state {self.index}: voltage must be > 0")


@dataclass(frozen=True)
class DvfsCurve:
    """Ordered P-state table; index 0 is the lowest frequency."""

    pstates: tuple[PState, ...]

    def __post_init__(self):
        if not self.pstates:
            raise ModelError("DVFS curve must contain at least one P-state")
        for i, ps in enumerate(self.pstates):
            if ps.index != i:
                raise ModelError(f"P-state index {ps.index} out of order at position {i}")
        for a, b in zip(self.pstates, self.pstates[1:]):
            if not (b.frequency_hz > a.frequency_hz and b.voltage > a.voltage):
                raise ModelError(
                    f"frequency and voltage must be strictly increasing "
                    f"(indices {a.index} -> {b.index})"
                )

    def __len__(self) -> int:
        return len(self.pstates)

    def __getitem__(self, index: int) -> PState:
        return self.pstates[index]

    @property
    def top_index(self) -> int:
        return len(self.pstates) - 1

    @property
    def max_frequency_hz(self) -> float:
        return self.pstates[-1].frequency_hz

    @classmethod
    def from_range(
        cls,
        freq_min_hz: float,
        freq_max_hz: float,
        freq_step_hz: float,
        voltage_min: float,
        voltage_max: float,
    ) -> "DvfsCurve":
        """Build a table over [freq_min, freq_max] with voltage affine in frequency.

        Vendors publish frequency ranges but rarely voltages; an affine map is
        the standard stand-in.
        """
        if freq_step_hz <= 0 or freq_max_hz <= freq_min_hz:
            raise ModelError("need freq_max > freq_min and a positive step")
        if voltage_max <= voltage_min:
            raise ModelError("need voltage_max > voltage_min")
        n = int(round((freq_max_hz - freq_min_hz) / freq_step_hz)) + 1
        span = freq_max_hz - freq_min_hz
        states = []
        for i in range(n):
            f = min(freq_min_hz + i * freq_step_hz, freq_max_hz)
            v = voltage_min + (voltage_max - voltage_min) * (f - freq_min_hz) / span
            states.append(PState(i, f, v))
        return cls(tuple(states))


@dataclass(frozen=True)
class PowerParams:
    """Electrical and heat-flux coefficients of one device."""

    idle_power_w: float
    leakage_w_per_c: float
    dyn_energy_scale: float  # J per (activity-unit * volt^2), i.e. W/(V^2*Hz)
    hd_b_weight: float
    hd_c_weight: float
    hw_weight: float
    data_heat_gain: float = 1.0  # hotspot weighting of switching activity

    def __post_init__(self):
        for name in (
            "idle_power_w",
            "leakage_w_per_c",
            "dyn_energy_scale",
            "hd_b_weight",
            "hd_c_weight",
            "hw_weight",
        ):
            if getattr(self, name) < 0:
                raise ModelError(f"PowerParams.{name} must be >= 0")
        if self.data_heat_gain < 1.0:
            raise ModelError("data_heat_gain must be >= 1")


@dataclass(frozen=True)
class ThermalParams:
    """Single-node lumped RC thermal circuit."""

    ambient_c: float
    r_th_c_per_w: float
    c_th_j_per_c: float

    def __post_init__(self):
        if self.r_th_c_per_w <= 0:
            raise ModelError("r_th must be > 0")
        if self.c_th_j_per_c <= 0:
            raise ModelError("c_th must be > 0")
        if not 0.0 <= self.ambient_c <= 50.0:
            raise ModelError("ambient must lie in [0, 50] degC")

    @property
    def time_constant_s(self) -> float:
        return self.r_th_c_per_w * self.c_th_j_per_c


@dataclass(frozen=True)
class ConstraintLimits:
    """Operating ceilings the DVFS governor enforces."""

    t_max_c: float
    p_max_w: float
    f_max_hz: float


@dataclass(frozen=True)
class DevicePreset:
    """Full physical description of one simulated device.

    `instruction_energy` maps instruction kind -> electrical energy per op in
    activity units (a saturating single-lane stream of the reference op
    contributes 1.0). `instruction_heat` maps kind -> hotspot heat density
    relative to that op's electrical power; 1.0 means heat equals power.
    """

    name: str
    device_class: str  # "cpu" or "gpu"
    curve: DvfsCurve
    power: PowerParams
    thermal: ThermalParams
    limits: ConstraintLimits
    instruction_energy: dict[str, float] = field(default_factory=dict)
    instruction_heat: dict[str, float] = field(default_factory=dict)
    governor_hysteresis_c: float = 2.0
    governor_interval_ticks: int = 5
    # When set, the governor budgets power against leakage at this reference
    # temperature instead of the live one (a worst-case power-delivery guard).
    # Measured power then sits below p_max by a margin that shrinks as the
    # device heats, which is how power-capped dGPUs behave.
    power_guard_temp_c: float | None = None

    def __post_init__(self):
        if self.device_class not in ("cpu", "gpu"):
            raise ModelError(f"{self.name}: device_class must be 'cpu' or 'gpu'")
        if self.limits.t_max_c <= self.thermal.ambient_c:
            raise ModelError(f"{self.name}: t_max must exceed ambient")
        if self.limits.p_max_w <= self.power.idle_power_w:
            raise ModelError(f"{self.name}: p_max must exceed idle power")
        if not math.isclose(self.limits.f_max_hz, self.curve.max_frequency_hz):
            raise ModelError(f"{self.name}: f_max must equal the top P-state frequency")
        if self.device_class == "cpu" and self.power.hw_weight != 0.0:
            raise ModelError(f"{self.name}: CPU presets must have hw_weight = 0")
        if self.device_class == "gpu" and self.power.hw_weight <= 0.0:
            raise ModelError(f"{self.name}: GPU presets must have hw_weight > 0")
        for kind, value in self.instruction_energy.items():
            if value < 0:
                raise ModelError(f"{self.name}: instruction_energy[{kind}] must be >= 0")
        for kind, value in self.instruction_heat.items():
            if value <= 0:
                raise ModelError(f"{self.name}: instruction_heat[{kind}] must be > 0")
        if self.governor_hysteresis_c < 0:
            raise ModelError(f"{self.name}: governor hysteresis must be >= 0")
        if self.governor_interval_ticks < 1:
            raise ModelError(f"{self.name}: governor interval must be >= 1 tick")

    def energy_of(self, kind: str) -> float:
        try:
            return self.instruction_energy[kind]
        except KeyError:
            raise ModelError(f"{self.name}: no instruction_energy entry for {kind!r}") from None

    def heat_factor_of(self, kind: str) -> float:
        return self.instruction_heat.get(kind, 1.0)


def switched_power_per_unit(pstate: PState, params: PowerParams) -> float:
    """W of dynamic power per unit of activity at this P-state (scale*V^2*f)."""
    return params.dyn_energy_scale * pstate.voltage**2 * pstate.frequency_hz


def dynamic_power(pstate: PState, activity, params: PowerParams) -> float:
    """Electrical dynamic power for an activity mix at one P-state.

    Strictly increasing in frequency and in every activity component that
    carries a positive weight. HD component A (input<->output) does not enter:
    only switching visible on the shared operand buses draws measurable power.
    """
    mix = (
        activity.base
        + params.hd_b_weight * activity.hd_b
        + params.hd_c_weight * activity.hd_c
        + params.hw_weight * activity.hw
    )
    return switched_power_per_unit(pstate, params) * mix


def heat_power(pstate: PState, activity, params: PowerParams, base_heat: float = 1.0) -> float:
    """Hotspot heat flux for an activity mix at one P-state.

    `base_heat` is the instruction stream's heat density (DevicePreset
    .instruction_heat); operand-switching terms are weighted by
    params.data_heat_gain. See the module docstring for why this differs
    from dynamic_power.
    """
    mix = base_heat * activity.base + params.data_heat_gain * (
        params.hd_b_weight * activity.hd_b
        + params.hd_c_weight * activity.hd_c
        + params.hw_weight * activity.hw
    )
    return switched_power_per_unit(pstate, params) * mix


def static_power(temp_c: float, params: PowerParams, ambient_c: float) -> float:
    """Idle power plus linear temperature-dependent leakage.

    Equals idle_power at ambient and is non-decreasing in temperature.
    """
    if temp_c < ambient_c - 5.0:
        raise ModelError(f"temperature {temp_c:.2f} implausibly below ambient {ambient_c:.2f}")
    return params.idle_power_w + params.leakage_w_per_c * max(0.0, temp_c - ambient_c)


def thermal_step(temp_c: float, total_power_w: float, dt_s: float, params: ThermalParams) -> float:
    """Advance the lumped RC node one step: T' = T + dt/C * (Q - (T - amb)/R).

    Fixed point at ambient + Q*R. dt must stay well under the RC time
    constant or the explicit update is rejected as unstable.
    """
    if dt_s <= 0:
        raise ModelError("dt must be > 0")
    if dt_s >= params.time_constant_s / 10.0:
        raise ModelError(
            f"dt {dt_s} too coarse for thermal time constant "
            f"{params.time_constant_s:.3f} s (need dt < RC/10)"
        )
    flow_out = (temp_c - params.ambient_c) / params.r_th_c_per_w
    return temp_c + dt_s / params.c_th_j_per_c * (total_power_w - flow_out)
