"""Device preset catalog: load DevicePreset values from .preset config files.

The package ships a calibrated catalog under data/presets/. Set the
DVFSIM_PRESETS environment variable to point resolution at a different
directory. Preset files are ordinary flat key-value configs; frequencies in
Hz, powers in W, temperatures in degC.
"""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

from .config import ConfigError, Section, require_section, sections_of
from .model import (
    ConstraintLimits,
    DevicePreset,
    DvfsCurve,
    PState,
    PowerParams,
    ThermalParams,
)
from .workload import InstructionKind

PRESET_DIR_ENV = "DVFSIM_PRESETS"
PRESET_SUFFIX = ".preset"


def _parse_curve(sec: Section) -> DvfsCurve:
    if sec.has("pstates"):
        states = []
        for i, token in enumerate(sec.get_str("pstates").split()):
            try:
                freq, volt = token.split("@")
                states.append(PState(i, float(freq), float(volt)))
            except ValueError:
                raise ConfigError(
                    f"{sec.origin}: [curve] pstates entry {token!r} must look like FREQ@VOLT"
                ) from None
        return DvfsCurve(tuple(states))
    return DvfsCurve.from_range(
        freq_min_hz=sec.get_float("freq_min_hz"),
        freq_max_hz=sec.get_float("freq_max_hz"),
        freq_step_hz=sec.get_float("freq_step_hz"),
        voltage_min=sec.get_float("voltage_min"),
        voltage_max=sec.get_float("voltage_max"),
    )


def _parse_kind_table(sec: Section, what: str) -> dict[str, float]:
    table = {}
    for kind, raw in sec.items():
        if kind not in InstructionKind.ALL:
            raise ConfigError(f"{sec.origin}: [{sec.name}] unknown instruction kind {kind!r}")
        try:
            table[kind] = float(raw)
        except ValueError:
            raise ConfigError(
                f"{sec.origin}: [{sec.name}] {kind}: expected a number, got {raw!r}"
            ) from None
    if what == "energy":
        missing = [k for k in InstructionKind.ALL if k not in table]
        if missing:
            raise ConfigError(
                f"{sec.origin}: [instruction_energy] missing kinds: {', '.join(missing)}"
            )
    return table


def load_preset(path: str | Path) -> DevicePreset:
    """Parse one .preset file into a validated DevicePreset."""
    path = Path(path)
    sections = sections_of(path)
    origin = str(path)
    device = require_section(sections, "device", origin)
    curve = _parse_curve(require_section(sections, "curve", origin))
    psec = require_section(sections, "power", origin)
    power = PowerParams(
        idle_power_w=psec.get_float("idle_power_w"),
        leakage_w_per_c=psec.get_float("leakage_w_per_c"),
        dyn_energy_scale=psec.get_float("dyn_energy_scale"),
        hd_b_weight=psec.get_float("hd_b_weight"),
        hd_c_weight=psec.get_float("hd_c_weight"),
        hw_weight=psec.get_float("hw_weight"),
        data_heat_gain=psec.get_float("data_heat_gain", 1.0),
    )
    tsec = require_section(sections, "thermal", origin)
    thermal = ThermalParams(
        ambient_c=tsec.get_float("ambient_c"),
        r_th_c_per_w=tsec.get_float("r_th_c_per_w"),
        c_th_j_per_c=tsec.get_float("c_th_j_per_c"),
    )
    lsec = require_section(sections, "limits", origin)
    limits = ConstraintLimits(
        t_max_c=lsec.get_float("t_max_c"),
        p_max_w=lsec.get_float("p_max_w"),
        f_max_hz=lsec.get_float("f_max_hz", curve.max_frequency_hz),
    )
    gsec = sections.get("governor")
    hysteresis = gsec.get_float("hysteresis_c", 2.0) if gsec else 2.0
    interval = gsec.get_int("interval_ticks", 5) if gsec else 5
    guard_temp = None
    if gsec and gsec.has("power_guard_temp_c"):
        guard_temp = gsec.get_float("power_guard_temp_c")
    energy = _parse_kind_table(require_section(sections, "instruction_energy", origin), "energy")
    heat_sec = sections.get("instruction_heat")
    heat = _parse_kind_table(heat_sec, "heat") if heat_sec else {}
    return DevicePreset(
        name=device.get_str("name", path.stem),
        device_class=device.get_str("class"),
        curve=curve,
        power=power,
        thermal=thermal,
        limits=limits,
        instruction_energy=energy,
        instruction_heat=heat,
        governor_hysteresis_c=hysteresis,
        governor_interval_ticks=interval,
        power_guard_temp_c=guard_temp,
    )


def catalog_dir() -> Path:
    """Preset directory: $DVFSIM_PRESETS if set, else the packaged catalog."""
    override = os.environ.get(PRESET_DIR_ENV)
    if override:
        path = Path(override)
        if not path.is_dir():
            raise ConfigError(f"{PRESET_DIR_ENV}={override}: not a directory")
        return path
    return Path(str(resources.files("dvfsim") / "data" / "presets"))


def preset_names(directory: str | Path | None = None) -> list[str]:
    base = Path(directory) if directory else catalog_dir()
    return sorted(p.stem for p in base.glob(f"*{PRESET_SUFFIX}"))


def load_catalog(directory: str | Path | None = None) -> dict[str, DevicePreset]:
    base = Path(directory) if directory else catalog_dir()
    catalog = {}
    for path in sorted(base.glob(f"*{PRESET_SUFFIX}")):
        preset = load_preset(path)
        catalog[preset.name] = preset
    if not catalog:
        raise ConfigError(f"no {PRESET_SUFFIX} files found in {base}")
    return catalog


def get_preset(name: str, directory: str | Path | None = None) -> DevicePreset:
    base = Path(directory) if directory else catalog_dir()
    path = base / f"{name}{PRESET_SUFFIX}"
    if not path.is_file():
        known = ", ".join(preset_names(base)) or "none"
        raise ConfigError(f"unknown preset {name!r} (known: {known})")
    return load_preset(path)
