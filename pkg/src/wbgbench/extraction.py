"""Figure-of-merit extraction from equivalent-time records.

All extractors are pure functions of the record plus scalar parameters.
Crossings are located between neighbouring samples and resolved by linear
interpolation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sampler import EquivalentTimeRecord

RDSON_TRIM = 0.10
RDSON_MIN_SAMPLES = 10
TAU_WINDOW = (0.10, 0.90)
TAU_MIN_SAMPLES = 10
TAU_MIN_R2 = 0.9
SWITCHING_LEVEL = 0.10


class ExtractionError(ValueError):
    """An extractor could not produce its figure of merit."""

    def __init__(self, fom: str, message: str):
        self.fom = fom
        super().__init__(f"{fom}: {message}")


class SaturationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ThresholdResult:
    vth_on: float
    vth_off: float
    i_c: float
    delta_vth: float


@dataclass(frozen=True)
class RdsonResult:
    r_dson: float
    v_d_mean: float
    i_d_mean: float
    window: tuple[float, float]
    sample_count: int


@dataclass(frozen=True)
class TauFit:
    tau: float
    fit_r2: float
    v_low: float
    v_high: float
    window: slice


@dataclass(frozen=True)
class CissResult:
    tau: float
    ciss: float
    fit_r2: float


@dataclass(frozen=True)
class SwitchingTimes:
    tc_on: float
    tc_off: float


def _require(record, fom, *names):
    missing = [n for n in names if not record.has(n)]
    if missing:
        raise ExtractionError(fom, f"record lacks channel(s) {', '.join(missing)}")
    if record.saturated:
        warnings.warn(f"{fom}: record is saturated; clipped samples sit at the rails",
                      SaturationWarning, stacklevel=3)


def _first_crossing(y, level, rising, start=0):
    """Index k >= start of the first sample pair straddling ``level``.

    Rising: ``y[k] < level <= y[k+1]``; falling: ``y[k] >= level > y[k+1]``.
    Returns None when there is none.
    """
    a, b = y[start:-1], y[start + 1:]
    hits = np.flatnonzero((a < level) & (b >= level) if rising else (a >= level) & (b < level))
    return None if hits.size == 0 else int(hits[0]) + start


def _interp(k, y, x, level):
    frac = (level - y[k]) / (y[k + 1] - y[k])
    return x[k] + frac * (x[k + 1] - x[k])


def select_ic(u_id: float) -> float:
    """Constant drain current for threshold extraction: 100 times u_id."""
    if not (math.isfinite(u_id) and u_id > 0):
        raise ValueError(f"drain-current uncertainty must be positive, got {u_id!r}")
    return 100 * u_id


def extract_vth_on(record: EquivalentTimeRecord, i_c: float) -> float:
    _require(record, "vth_on", "gate_v", "drain_i")
    i_d, v_g = record["drain_i"], record["gate_v"]
    k = _first_crossing(i_d, i_c, rising=True)
    if k is None:
        raise ExtractionError("vth_on", f"threshold not observable: drain current never rises through {i_c:.4g} A")
    return float(_interp(k, i_d, v_g, i_c))


def extract_vth_off(record: EquivalentTimeRecord, i_0: float, i_c: float) -> float:
    _require(record, "vth_off", "gate_v", "drain_i")
    i_d, v_g = record["drain_i"], record["gate_v"]
    level = i_0 - i_c
    k_on = _first_crossing(i_d, level, rising=True)
    k = None if k_on is None else _first_crossing(i_d, level, rising=False, start=k_on + 1)
    if k is None:
        raise ExtractionError("vth_off", f"threshold not observable: drain current never falls through {level:.4g} A")
    return float(_interp(k, i_d, v_g, level))


def delta_vth(record: EquivalentTimeRecord, i_0: float, i_c: float) -> ThresholdResult:
    if not 0 < i_c < i_0:
        raise ExtractionError("delta_vth", f"constant current {i_c!r} A must lie in (0, i_0={i_0!r})")
    von = extract_vth_on(record, i_c)
    voff = extract_vth_off(record, i_0, i_c)
    return ThresholdResult(vth_on=von, vth_off=voff, i_c=i_c, delta_vth=voff - von)


def on_interval(record: EquivalentTimeRecord) -> tuple[int, int]:
    """Sample indices where the drain current first rises and then falls through half its peak."""
    i_d = record["drain_i"]
    half = 0.5 * float(np.max(i_d))
    k_on = _first_crossing(i_d, half, rising=True) if half > 0 else None
    k_off = None if k_on is None else _first_crossing(i_d, half, rising=False, start=k_on + 1)
    if k_off is None:
        raise ExtractionError("r_dson", "no complete conduction interval in the record")
    return k_on + 1, k_off + 1


def extract_rdson(record: EquivalentTimeRecord) -> RdsonResult:
    _require(record, "r_dson", "drain_v", "drain_i")
    k_on, k_off = on_interval(record)
    trim = int(math.ceil(RDSON_TRIM * (k_off - k_on)))
    lo, hi = k_on + trim, k_off - trim
    count = hi - lo
    if count < RDSON_MIN_SAMPLES:
        raise ExtractionError("r_dson", f"insufficient plateau samples ({max(count, 0)} < {RDSON_MIN_SAMPLES})")
    v_mean = float(np.mean(record["drain_v"][lo:hi]))
    i_mean = float(np.mean(record["drain_i"][lo:hi]))
    if i_mean <= 0:
        raise ExtractionError("r_dson", "mean on-state current is not positive")
    t = record.t
    return RdsonResult(
        r_dson=v_mean / i_mean, v_d_mean=v_mean, i_d_mean=i_mean,
        window=(float(t[lo]), float(t[hi - 1])), sample_count=count,
    )


def _high_level(v, k_mid):
    """Settled top of the gate swing: median of the late half of the high run."""
    mid = v[k_mid]
    below = np.flatnonzero(v[k_mid:] < mid)
    end = k_mid + (int(below[0]) if below.size else len(v) - k_mid)
    run = v[k_mid:end]
    return float(np.median(run[len(run) // 2:]))


def extract_tau(record: EquivalentTimeRecord) -> TauFit:
    """Gate time constant from a log-linear fit of the first rising transient.

    Fits ``ln(1 - (v_g - v_low)/(v_high - v_low))`` against time over the
    10-90 % part of the swing; ``tau = -1/slope``.
    """
    _require(record, "tau", "gate_v")
    v = record["gate_v"]
    v_low = float(np.min(v))
    k_mid = _first_crossing(v, 0.5 * (v_low + float(np.max(v))), rising=True)
    if k_mid is None:
        raise ExtractionError("tau", "transient under-resolved: no rising gate edge")
    v_high = _high_level(v, k_mid + 1)
    swing = v_high - v_low
    if swing <= 0:
        raise ExtractionError("tau", "gate swing is not positive")
    y = (v - v_low) / swing
    lo_frac, hi_frac = TAU_WINDOW
    start = k_mid + 1
    while start > 0 and lo_frac <= y[start - 1] <= hi_frac:
        start -= 1
    stop = k_mid + 1
    while stop < len(v) and lo_frac <= y[stop] <= hi_frac:
        stop += 1
    # the midpoint sample pair itself may straddle the window edges
    idx = np.arange(start, stop)
    idx = idx[(y[idx] >= lo_frac) & (y[idx] <= hi_frac)]
    if idx.size < TAU_MIN_SAMPLES:
        raise ExtractionError("tau", f"transient under-resolved: {idx.size} samples in the "
                                     f"10-90% window, need {TAU_MIN_SAMPLES}")
    t = record.t[idx]
    z = np.log1p(-y[idx])
    slope, intercept = np.polyfit(t, z, 1)
    resid = z - (slope * t + intercept)
    ss_tot = float(np.sum((z - z.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    if slope >= 0 or r2 < TAU_MIN_R2:
        raise ExtractionError("tau", f"gate transient is not exponential (fit r2={r2:.3f})")
    return TauFit(tau=-1.0 / slope, fit_r2=r2, v_low=v_low, v_high=v_high,
                  window=slice(int(idx[0]), int(idx[-1]) + 1))


def tau_uncertainty(record: EquivalentTimeRecord, fit: TauFit, u_gate: float) -> float:
    """Standard uncertainty of tau propagated from the gate reading uncertainty."""
    t = record.t[fit.window]
    v = record["gate_v"][fit.window]
    w = ((fit.v_high - v) / u_gate) ** 2  # 1/sigma_z^2 with sigma_z = u_gate/(v_high - v)
    t_bar = np.sum(w * t) / np.sum(w)
    var_slope = 1.0 / float(np.sum(w * (t - t_bar) ** 2))
    return fit.tau**2 * math.sqrt(var_slope)


def extract_ciss(tau: float, r_g: float) -> float:
    """Input capacitance from the gate time constant: tau / r_g."""
    if not (tau > 0 and r_g > 0):
        raise ValueError("tau and r_g must be positive")
    return tau / r_g


def extract_ciss_result(record: EquivalentTimeRecord, r_g: float) -> CissResult:
    fit = extract_tau(record)
    return CissResult(tau=fit.tau, ciss=extract_ciss(fit.tau, r_g), fit_r2=fit.fit_r2)


def extract_switching_times(record: EquivalentTimeRecord, i_0: float, v_bus: float) -> SwitchingTimes:
    """Crossover intervals at turn-on and turn-off.

    Turn-on runs from the drain current rising through 10 % of ``i_0`` to the
    drain voltage falling through 10 % of ``v_bus``; turn-off is its time
    mirror, from the voltage rising through 10 % of ``v_bus`` to the current
    falling through 10 % of ``i_0``.
    """
    _require(record, "switching_times", "drain_v", "drain_i")
    t, i_d, v_d = record.t, record["drain_i"], record["drain_v"]
    i_lvl, v_lvl = SWITCHING_LEVEL * i_0, SWITCHING_LEVEL * v_bus

    def cross(y, level, rising, start, edge):
        k = _first_crossing(y, level, rising, start)
        if k is None:
            raise ExtractionError("switching_times", f"missing {edge} crossing")
        return k, float(_interp(k, y, t, level))

    k1, t_i_on = cross(i_d, i_lvl, True, 0, "turn-on drain-current")
    k2, t_v_on = cross(v_d, v_lvl, False, k1, "turn-on drain-voltage")
    k3, t_v_off = cross(v_d, v_lvl, True, k2 + 1, "turn-off drain-voltage")
    _, t_i_off = cross(i_d, i_lvl, False, k3, "turn-off drain-current")
    tc_on, tc_off = t_v_on - t_i_on, t_i_off - t_v_off
    for name, tc in (("tc_on", tc_on), ("tc_off", tc_off)):
        if not tc >= record.t_et:
            raise ExtractionError("switching_times", f"{name}={tc:.3g} s is under-resolved "
                                                     f"(sample spacing {record.t_et:.3g} s)")
    if tc_on + tc_off >= record.period:
        raise ExtractionError("switching_times", "crossover intervals exceed the period")
    return SwitchingTimes(tc_on=tc_on, tc_off=tc_off)
