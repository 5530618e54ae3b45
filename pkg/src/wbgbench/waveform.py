"""Steady-state switching waveforms of a power transistor with trap kinetics.

The device is driven by a rectangular gate command that is high on
``[0, t_on)`` and low on ``[t_on, T_sw)``; time zero is the rising edge of the
command. Charge trapping follows first-order kinetics in two phases and its
periodic fixed point modulates R_DSon, C_iss and the threshold voltage.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

# the turn-on current ramp ends at vth + OVERDRIVE_FRACTION * (v_high - vth); the
# turn-off ramp mirrors it and ends at vth - OVERDRIVE_FRACTION * (vth - v_low)
OVERDRIVE_FRACTION = 0.2
# GaN traps fill orders of magnitude faster than they empty
GAN_MIN_DETRAP_RATIO = 100.0

CHANNELS = ("gate_v", "drain_v", "drain_i")


class DeviceKind(str, enum.Enum):
    GAN_CASCODE = "gan-cascode"
    GAN_EMODE = "gan-emode"
    SIC_MOSFET = "sic"

    @property
    def is_gan(self) -> bool:
        return self is not DeviceKind.SIC_MOSFET


class StressPhase(str, enum.Enum):
    OFF_STATE = "off"
    ON_STATE = "on"


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")


def _non_negative(name, value):
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class TrapModel:
    tau_trap: float
    tau_detrap: float
    stress_phase: StressPhase = StressPhase.OFF_STATE

    def __post_init__(self):
        _positive("tau_trap", self.tau_trap)
        _positive("tau_detrap", self.tau_detrap)
        object.__setattr__(self, "stress_phase", StressPhase(self.stress_phase))


@dataclass(frozen=True)
class DeviceModel:
    """Static parameters of one transistor plus its trap sensitivities.

    ``beta_pos`` is the threshold shift seen during conduction at full
    occupancy of the trapping population; ``beta_neg`` is the (negative)
    shift seen while blocking, scaled by the emptied fraction ``1 - x``.
    """

    kind: DeviceKind
    r_dson_0: float
    vth_0: float
    ciss_0: float
    i_leak: float
    trap: TrapModel
    alpha_r: float = 0.0
    alpha_c: float = 0.0
    beta_pos: float = 0.0
    beta_neg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DeviceKind(self.kind))
        _positive("r_dson_0", self.r_dson_0)
        _positive("ciss_0", self.ciss_0)
        if not math.isfinite(self.vth_0):
            raise ValueError("vth_0 must be finite")
        for name in ("i_leak", "alpha_r", "alpha_c", "beta_pos", "beta_neg"):
            _non_negative(name, getattr(self, name))
        if self.kind.is_gan and self.beta_neg != 0:
            raise ValueError("GaN devices have a single trapping population: beta_neg must be 0")
        if self.kind.is_gan and self.trap.tau_detrap < GAN_MIN_DETRAP_RATIO * self.trap.tau_trap:
            raise ValueError(f"GaN de-trapping must be at least {GAN_MIN_DETRAP_RATIO:g}x slower than trapping")


@dataclass(frozen=True)
class DriveConfig:
    f_s: float
    duty: float
    v_gate_high: float
    v_gate_low: float
    r_g: float
    v_bus: float
    i_0: float

    def __post_init__(self):
        _positive("f_s", self.f_s)
        if not 0 < self.duty < 1:
            raise ValueError(f"duty must lie in (0, 1), got {self.duty!r}")
        if not self.v_gate_high > self.v_gate_low:
            raise ValueError("v_gate_high must exceed v_gate_low")
        _positive("r_g", self.r_g)
        _positive("v_bus", self.v_bus)
        _positive("i_0", self.i_0)

    @property
    def t_sw(self) -> float:
        return 1.0 / self.f_s

    @property
    def t_on(self) -> float:
        return self.duty / self.f_s

    @property
    def t_off(self) -> float:
        return self.t_sw - self.t_on


@dataclass(frozen=True)
class WaveformPoint:
    t: float
    v_g: float
    v_d: float
    i_d: float


# ---------------------------------------------------------------------------
# trap kinetics


def steady_state_occupancy(trap: TrapModel, t_stress: float, t_recover: float) -> tuple[float, float]:
    """Periodic fixed point ``(x0, x1)`` of the two-phase trap kinetics.

    ``x1`` is the occupancy right after the stress phase and ``x0`` right
    after the recovery phase::

        x1 = 1 + (x0 - 1) * exp(-t_stress / tau_trap)
        x0 = x1 * exp(-t_recover / tau_detrap)
    """
    if not (t_stress > 0 and t_recover > 0):
        raise ValueError("stress and recovery durations must be positive")
    a = math.exp(-t_stress / trap.tau_trap)
    b = math.exp(-t_recover / trap.tau_detrap)
    # 1 - a*b written with expm1 keeps precision when both phases are short
    one_minus_ab = -math.expm1(-t_stress / trap.tau_trap - t_recover / trap.tau_detrap)
    x1 = -math.expm1(-t_stress / trap.tau_trap) / one_minus_ab
    x1 = min(x1, 1.0)
    return b * x1, x1


@dataclass(frozen=True)
class OccupancyTrace:
    """Trap occupancy over one period, with the period origin at gate turn-on."""

    trap: TrapModel
    t_on: float
    t_sw: float
    x0: float
    x1: float
    mean: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        on = t < self.t_on
        dt = np.where(on, t, t - self.t_on)
        if self.trap.stress_phase is StressPhase.OFF_STATE:
            # on-phase recovers from x1, off-phase stresses from x0
            rec = self.x1 * np.exp(-dt / self.trap.tau_detrap)
            stress = 1.0 + (self.x0 - 1.0) * np.exp(-dt / self.trap.tau_trap)
            return np.where(on, rec, stress)
        stress = 1.0 + (self.x0 - 1.0) * np.exp(-dt / self.trap.tau_trap)
        rec = self.x1 * np.exp(-dt / self.trap.tau_detrap)
        return np.where(on, stress, rec)


def occupancy_trace(trap: TrapModel, drive: DriveConfig) -> OccupancyTrace:
    if trap.stress_phase is StressPhase.OFF_STATE:
        t_stress, t_recover = drive.t_off, drive.t_on
    else:
        t_stress, t_recover = drive.t_on, drive.t_off
    x0, x1 = steady_state_occupancy(trap, t_stress, t_recover)
    # closed-form phase averages of the two exponentials
    stress_mean = 1.0 - (1.0 - x0) * trap.tau_trap / t_stress * -math.expm1(-t_stress / trap.tau_trap)
    rec_mean = x1 * trap.tau_detrap / t_recover * -math.expm1(-t_recover / trap.tau_detrap)
    mean = (t_stress * stress_mean + t_recover * rec_mean) / drive.t_sw
    return OccupancyTrace(trap, drive.t_on, drive.t_sw, x0, x1, min(max(mean, 0.0), 1.0))


@dataclass(frozen=True)
class EffectiveParams:
    """Trap-modulated parameters at one operating point.

    ``vth_eff_on_phase`` holds while the device conducts, so it governs the
    turn-off edge; ``vth_eff_off_phase`` holds while blocking and governs the
    next turn-on edge.
    """

    r_dson_eff: float
    vth_eff_on_phase: float
    vth_eff_off_phase: float
    ciss_eff: float
    occupancy: OccupancyTrace

    @property
    def delta_vth(self) -> float:
        return self.vth_eff_on_phase - self.vth_eff_off_phase


def effective_params(model: DeviceModel, drive: DriveConfig) -> EffectiveParams:
    occ = occupancy_trace(model.trap, drive)
    x = occ.mean
    return EffectiveParams(
        r_dson_eff=model.r_dson_0 * (1.0 + model.alpha_r * x),
        vth_eff_on_phase=model.vth_0 + model.beta_pos * x,
        vth_eff_off_phase=model.vth_0 - model.beta_neg * (1.0 - x),
        ciss_eff=model.ciss_0 * (1.0 + model.alpha_c * x),
        occupancy=occ,
    )


# ---------------------------------------------------------------------------
# waveform synthesis


@dataclass(frozen=True)
class EdgeTimes:
    """Event times within one period (seconds from gate turn-on)."""

    i_rise_start: float
    i_rise_end: float
    v_fall_end: float
    v_rise_start: float
    i_fall_start: float
    i_fall_end: float


class Waveform:
    """Periodic gate/drain waveform of one device at one drive point.

    Calling the instance with an array of times (any real values) returns a
    dict of channel arrays; the waveform is periodic in ``period``.
    """

    def __init__(self, model: DeviceModel, drive: DriveConfig):
        self.model = model
        self.drive = drive
        self.params = effective_params(model, drive)
        self.tau = drive.r_g * self.params.ciss_eff
        self.period = drive.t_sw
        self.f_s = drive.f_s

        vh, vl = drive.v_gate_high, drive.v_gate_low
        a = math.exp(-drive.t_on / self.tau)
        b = math.exp(-drive.t_off / self.tau)
        # periodic steady state of the RC gate: g0 at turn-on, g1 at turn-off
        self.g0 = (vl * (1 - b) + b * vh * (1 - a)) / (1 - a * b)
        self.g1 = vh + (self.g0 - vh) * a
        self.edges = self._edge_times()

    @property
    def v_overdrive_on(self) -> float:
        vth = self.params.vth_eff_off_phase
        return vth + OVERDRIVE_FRACTION * (self.drive.v_gate_high - vth)

    @property
    def v_underdrive_off(self) -> float:
        vth = self.params.vth_eff_on_phase
        return vth - OVERDRIVE_FRACTION * (vth - self.drive.v_gate_low)

    def _rise_crossing(self, level):
        vh = self.drive.v_gate_high
        if not self.g0 < level < vh:
            raise ValueError(f"gate rise never crosses {level:.4g} V (starts at {self.g0:.4g} V)")
        return self.tau * math.log((vh - self.g0) / (vh - level))

    def _fall_crossing(self, level):
        vl = self.drive.v_gate_low
        if not vl < level < self.g1:
            raise ValueError(f"gate fall never crosses {level:.4g} V (starts at {self.g1:.4g} V)")
        return self.drive.t_on + self.tau * math.log((self.g1 - vl) / (level - vl))

    def _edge_times(self) -> EdgeTimes:
        t_a = self._rise_crossing(self.params.vth_eff_off_phase)
        t_b = self._rise_crossing(self.v_overdrive_on)
        t_c = t_b + (t_b - t_a)
        t_e = self._fall_crossing(self.params.vth_eff_on_phase)
        t_f = self._fall_crossing(self.v_underdrive_off)
        t_d = max(t_e - (t_f - t_e), self.drive.t_on)
        if not (t_c < self.drive.t_on and t_c < t_d and t_f < self.period):
            raise ValueError("switching edges do not fit inside the period; lower r_g or f_s")
        return EdgeTimes(t_a, t_b, t_c, t_d, t_e, t_f)

    def gate(self, t):
        d = self.drive
        on = t < d.t_on
        rise = d.v_gate_high + (self.g0 - d.v_gate_high) * np.exp(-t / self.tau)
        fall = d.v_gate_low + (self.g1 - d.v_gate_low) * np.exp(-(t - d.t_on) / self.tau)
        return np.where(on, rise, fall)

    def __call__(self, t) -> dict[str, np.ndarray]:
        t = np.mod(np.asarray(t, dtype=float), self.period)
        return self._eval(t)

    def _eval(self, t):
        d, e = self.drive, self.edges
        v_on = self.params.r_dson_eff * d.i_0

        i_rise = d.i_0 * (t - e.i_rise_start) / (e.i_rise_end - e.i_rise_start)
        v_fall = d.v_bus + (v_on - d.v_bus) * (t - e.i_rise_end) / (e.v_fall_end - e.i_rise_end)
        rise_span = e.i_fall_start - e.v_rise_start
        v_rise = v_on + (d.v_bus - v_on) * (t - e.v_rise_start) / rise_span if rise_span > 0 else d.v_bus
        i_fall = d.i_0 * (e.i_fall_end - t) / (e.i_fall_end - e.i_fall_start)

        conds = [
            t < e.i_rise_start,
            t < e.i_rise_end,
            t < e.v_fall_end,
            t < e.v_rise_start,
            t < e.i_fall_start,
            t < e.i_fall_end,
        ]
        i_d = np.select(conds, [0.0, i_rise, d.i_0, d.i_0, d.i_0, i_fall], 0.0)
        v_d = np.select(conds, [d.v_bus, d.v_bus, v_fall, v_on, v_rise, d.v_bus], d.v_bus)
        return {"gate_v": self.gate(t), "drain_v": v_d, "drain_i": i_d}

    def eval(self, t: float) -> WaveformPoint:
        if not 0 <= t < self.period:
            raise ValueError(f"t={t!r} outside [0, {self.period!r})")
        out = self._eval(np.asarray([t], dtype=float))
        return WaveformPoint(t, float(out["gate_v"][0]), float(out["drain_v"][0]), float(out["drain_i"][0]))


def eval(model: DeviceModel, drive: DriveConfig, t: float) -> WaveformPoint:
    return Waveform(model, drive).eval(t)


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    """A calibrated device with its bench drive and frequency grid.

    The bench keeps the untrapped gate time constant at a fixed fraction of
    the switching period by choosing the gate resistor per frequency, so the
    gate transient stays resolvable with a fixed sample count.
    """

    model: DeviceModel
    drive: DriveConfig
    grid: tuple[float, ...]
    gate_tau_fraction: float = 1.0 / 150.0
    fixed_r_g: float | None = None

    @property
    def kind(self) -> DeviceKind:
        return self.model.kind

    @property
    def f_min(self) -> float:
        return self.grid[0]

    @property
    def f_max(self) -> float:
        return self.grid[-1]

    def gate_resistor(self, f_s: float) -> float:
        if self.fixed_r_g is not None:
            return self.fixed_r_g
        return self.gate_tau_fraction / (f_s * self.model.ciss_0)

    def drive_at(self, f_s: float) -> DriveConfig:
        _positive("f_s", f_s)
        return replace(self.drive, f_s=f_s, r_g=self.gate_resistor(f_s))

    def with_model(self, **changes) -> "Preset":
        return replace(self, model=replace(self.model, **changes))


def _grid(f_lo, f_hi, points):
    g = np.geomspace(f_lo, f_hi, points)
    return tuple(float(f) for f in g)


GAN_GRID = _grid(10e3, 1e6, 10)
SIC_GRID = _grid(10e3, 200e3, 6)

# trap and sensitivity constants come from scripts/calibrate_presets.py
_PRESET_MODELS = {
    DeviceKind.GAN_CASCODE: DeviceModel(
        kind=DeviceKind.GAN_CASCODE,
        r_dson_0=0.170,
        vth_0=2.1,
        ciss_0=780e-12,
        i_leak=1e-6,
        trap=TrapModel(tau_trap=20e-9, tau_detrap=20e-6, stress_phase=StressPhase.OFF_STATE),
        alpha_r=0.45,
        alpha_c=2.6,
        beta_pos=0.02,
    ),
    DeviceKind.GAN_EMODE: DeviceModel(
        kind=DeviceKind.GAN_EMODE,
        r_dson_0=0.100,
        vth_0=1.7,
        ciss_0=130e-12,
        i_leak=1e-6,
        trap=TrapModel(tau_trap=20e-9, tau_detrap=20e-6, stress_phase=StressPhase.OFF_STATE),
        alpha_r=0.45,
        alpha_c=2.6,
        beta_pos=0.4,
    ),
    DeviceKind.SIC_MOSFET: DeviceModel(
        kind=DeviceKind.SIC_MOSFET,
        r_dson_0=0.280,
        vth_0=2.1,
        ciss_0=150e-12,
        i_leak=1e-6,
        trap=TrapModel(tau_trap=100e-9, tau_detrap=2e-6, stress_phase=StressPhase.ON_STATE),
        alpha_r=0.2,
        alpha_c=0.5,
        beta_pos=4.5,
        beta_neg=0.3,
    ),
}

_GAN_DRIVE = dict(duty=0.9, v_gate_high=5.0, v_gate_low=-5.0, v_bus=60.0, i_0=0.4)
_SIC_DRIVE = dict(duty=0.9, v_gate_high=15.0, v_gate_low=0.0, v_bus=50.0, i_0=2.0)


def preset(kind) -> Preset:
    """Calibrated configuration for ``kind`` (a DeviceKind or its string value)."""
    try:
        kind = DeviceKind(kind)
    except ValueError:
        raise ValueError(f"unknown device kind {kind!r}; expected one of "
                         f"{[k.value for k in DeviceKind]}") from None
    model = _PRESET_MODELS[kind]
    grid = GAN_GRID if kind.is_gan else SIC_GRID
    levels = _GAN_DRIVE if kind.is_gan else _SIC_DRIVE
    p = Preset(model=model, drive=DriveConfig(f_s=grid[0], r_g=1.0, **levels), grid=grid)
    return replace(p, drive=p.drive_at(grid[0]))
