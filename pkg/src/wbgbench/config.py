"""Run configuration: an INI-style file with dotted sections plus overrides.

Example::

    [run]
    preset = gan-emode
    fs = 100e3
    n = 1000
    seed = 7

    [device]
    alpha_r = 0.45

    [device.trap]
    tau_detrap = 20e-6

    [drive]
    duty = 0.9

    [adc]
    bits = 16

    [adc.drain_i]
    noise_sigma = 200e-6

All quantities are SI base units. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace

from .sampler import AdcChannel, AdcModel, default_adc
from .waveform import DeviceKind, DeviceModel, DriveConfig, Preset, StressPhase, TrapModel, preset


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


_RUN_KEYS = {"preset": str, "fs": float, "n": int, "seed": int, "output": str,
             "grid": "grid", "workers": int}
_DEVICE_KEYS = {f.name: float for f in fields(DeviceModel) if f.name not in ("kind", "trap")}
_TRAP_KEYS = {"tau_trap": float, "tau_detrap": float, "stress_phase": StressPhase}
# f_s is owned by [run] fs; gate_tau_fraction belongs to the bench, not the drive
_DRIVE_KEYS = {f.name: float for f in fields(DriveConfig) if f.name != "f_s"} | {"gate_tau_fraction": float}
_ADC_KEYS = {"bits": int}
_CHANNEL_KEYS = {f.name: float for f in fields(AdcChannel)}

SCHEMA = {
    "run": _RUN_KEYS,
    "device": _DEVICE_KEYS,
    "device.trap": _TRAP_KEYS,
    "drive": _DRIVE_KEYS,
    "adc": _ADC_KEYS,
    "adc.gate_v": _CHANNEL_KEYS,
    "adc.drain_v": _CHANNEL_KEYS,
    "adc.drain_i": _CHANNEL_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    preset: Preset
    adc: AdcModel
    f_s: float | None = None
    n: int = 1000
    seed: int = 0
    output: str | None = None
    workers: int = 1

    @property
    def kind(self) -> DeviceKind:
        return self.preset.kind


def _convert(key, kind, raw):
    try:
        if kind == "grid":
            grid = tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
            if not grid:
                raise ValueError("empty grid")
            return grid
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if isinstance(kind, type) and issubclass(kind, StressPhase):
            return StressPhase(raw.strip().lower())
        return kind(raw.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(key, f"invalid value {raw!r} ({exc})") from None


def read_config(text: str = "", overrides: dict[str, str] | None = None) -> dict[str, dict]:
    """Parse ``text`` and dotted ``section.key`` overrides into typed sections."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None

    raw: dict[str, dict[str, str]] = {s: dict(parser[s]) for s in parser.sections()}
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.rpartition(".")
        if not section:
            section = "run"
        raw.setdefault(section, {})[key] = value

    typed: dict[str, dict] = {}
    for section, items in raw.items():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        schema = SCHEMA[section]
        for key, value in items.items():
            full = f"{section}.{key}"
            if key not in schema:
                raise ConfigError(full, "unknown key")
            typed.setdefault(section, {})[key] = _convert(full, schema[key], value)
    return typed


def _build(key, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def resolve(sections: dict[str, dict]) -> RunConfig:
    """Turn parsed sections into a validated (device, drive, adc) triple."""
    run = sections.get("run", {})
    if "preset" not in run:
        raise ConfigError("run.preset", "a device preset is required")
    try:
        base = preset(run["preset"])
    except ValueError as exc:
        raise ConfigError("run.preset", str(exc)) from None

    trap = _build("device.trap", replace, base.model.trap, **sections.get("device.trap", {})) \
        if sections.get("device.trap") else base.model.trap
    model = _build("device", replace, base.model, trap=trap, **sections.get("device", {}))

    drive_items = dict(sections.get("drive", {}))
    tau_fraction = drive_items.pop("gate_tau_fraction", base.gate_tau_fraction)
    fixed_r_g = drive_items.pop("r_g", None)
    p = replace(base, model=model, gate_tau_fraction=tau_fraction, fixed_r_g=fixed_r_g)
    if "grid" in run:
        grid = tuple(sorted(run["grid"]))
        p = replace(p, grid=grid)
    drive = _build("drive", replace, p.drive, **drive_items)
    p = replace(p, drive=drive)

    f_s = run.get("fs")
    if f_s is not None:
        # validate the full drive at the requested frequency up front
        _build("run.fs", p.drive_at, f_s=f_s)
        if not (p.f_min * (1 - 1e-9) <= f_s <= p.f_max * (1 + 1e-9)):
            raise ConfigError("run.fs", f"{f_s:g} Hz outside [{p.f_min:g}, {p.f_max:g}] Hz for {p.kind.value}")
    _build("drive", p.drive_at, f_s=p.f_min)

    adc = default_adc(p.kind)
    chans = dict(adc.channels)
    for name in list(chans):
        items = sections.get(f"adc.{name}")
        if items:
            chans[name] = _build(f"adc.{name}", replace, chans[name], **items)
    bits = sections.get("adc", {}).get("bits", adc.bits)
    adc = _build("adc", AdcModel, channels=chans, bits=bits)

    n = run.get("n", 1000)
    if n < 2:
        raise ConfigError("run.n", f"need at least 2 samples, got {n}")
    workers = run.get("workers", 1)
    if workers < 1:
        raise ConfigError("run.workers", "must be >= 1")
    return RunConfig(preset=p, adc=adc, f_s=f_s, n=n, seed=run.get("seed", 0),
                     output=run.get("output"), workers=workers)


def load(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return resolve(read_config(text, overrides))
