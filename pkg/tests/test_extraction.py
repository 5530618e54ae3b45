import math
from dataclasses import replace

import numpy as np
import pytest

from wbgbench.extraction import (
    ExtractionError, SaturationWarning, delta_vth, extract_ciss, extract_ciss_result, extract_rdson,
    extract_switching_times, extract_tau, extract_vth_off, extract_vth_on, select_ic,
)
from wbgbench.harness import simulate_point
from wbgbench.sampler import AdcChannel, AdcModel, EquivalentTimeRecord, default_adc
from wbgbench.waveform import Waveform, preset

N = 1000
T = 1e-5
T_ET = T / N


def record(**channels):
    return EquivalentTimeRecord(t_et=T_ET, channels=channels, f_s=1 / T)


def ramp(k, k0, k1, y0, y1):
    """Piecewise-linear 0..1 ramp between sample indices k0 and k1, mapped to [y0, y1]."""
    return y0 + (y1 - y0) * np.clip((k - k0) / (k1 - k0), 0.0, 1.0)


def linear_edges(i_0=0.4, vth=1.7):
    k = np.arange(N, dtype=float)
    rise = ramp(k, 100.3, 300.7, 0.0, 1.0)
    fall = ramp(k, 800.2, 900.9, 0.0, 1.0)
    i_d = i_0 * (rise - fall)
    v_g = np.where(k < 500, vth + rise, vth + 1.0 - fall)
    return k, i_d, v_g


def noiseless(adc, bits=24):
    chans = {k: AdcChannel(c.full_scale_low, c.full_scale_high, c.gain) for k, c in adc.channels.items()}
    return AdcModel(chans, bits)


# --- constant current -----------------------------------------------------------

@pytest.mark.parametrize("u_id,i_c", [(1e-3, 0.1), (40e-6, 4e-3)])
def test_select_ic_is_one_hundred_times(u_id, i_c):
    assert select_ic(u_id) == pytest.approx(i_c, rel=1e-15)
    assert select_ic(u_id) == 100 * u_id


@pytest.mark.parametrize("u_id", [0.0, -1e-6, math.nan])
def test_select_ic_rejects_degenerate(u_id):
    with pytest.raises(ValueError):
        select_ic(u_id)


# --- thresholds ------------------------------------------------------------------

@pytest.mark.parametrize("i_c", [1e-3, 0.01, 0.1234, 0.3])
def test_vth_on_linear_ramp(i_c):
    _, i_d, v_g = linear_edges()
    got = extract_vth_on(record(gate_v=v_g, drain_i=i_d), i_c)
    assert got == pytest.approx(1.7 + i_c / 0.4, abs=1e-9)


@pytest.mark.parametrize("i_c", [1e-3, 0.01, 0.1234])
def test_vth_off_mirrored_ramp(i_c):
    _, i_d, v_g = linear_edges()
    got = extract_vth_off(record(gate_v=v_g, drain_i=i_d), 0.4, i_c)
    # current falls linearly from i_0 while the gate falls linearly by 1 V
    assert got == pytest.approx(1.7 + 1.0 - i_c / 0.4, abs=1e-9)


def test_interpolated_crossing_current_is_exact():
    k, i_d, v_g = linear_edges()
    rec = record(gate_v=k * T_ET, drain_i=i_d)
    i_c = 0.0123
    t_cross = extract_vth_on(rec, i_c)
    assert 0.4 * (t_cross / T_ET - 100.3) / (300.7 - 100.3) == pytest.approx(i_c, rel=1e-12)


def test_threshold_not_observable():
    _, i_d, v_g = linear_edges()
    with pytest.raises(ExtractionError, match="not observable"):
        extract_vth_on(record(gate_v=v_g, drain_i=i_d), 0.5)


def test_no_off_edge():
    k, i_d, v_g = linear_edges()
    i_d = 0.4 * ramp(k, 100.3, 300.7, 0.0, 1.0)
    with pytest.raises(ExtractionError) as exc:
        extract_vth_off(record(gate_v=v_g, drain_i=i_d), 0.4, 0.01)
    assert exc.value.fom == "vth_off"


def test_threshold_needs_current_channel():
    _, _, v_g = linear_edges()
    with pytest.raises(ExtractionError, match="drain_i"):
        extract_vth_on(record(gate_v=v_g, drain_v=v_g), 0.01)


def test_emode_vth_on_tracks_simulator_threshold():
    p = preset("gan-emode")
    f_s, n = 1e4, 1000
    rec = simulate_point(p, f_s, n, None, noiseless(default_adc("gan-emode")))
    w = Waveform(p.model, p.drive_at(f_s))
    i_c = select_ic(40e-6)
    got = extract_vth_on(rec, i_c)
    # the turn-on edge sees the threshold set while blocking
    truth = w.params.vth_eff_off_phase
    t_cross = w.edges.i_rise_start
    slew = (p.drive.v_gate_high - truth) / w.tau * (f_s ** -1 / n)
    assert abs(got - truth) <= 2 * slew
    assert w.gate(np.array([t_cross]))[0] == pytest.approx(truth, rel=1e-12)


def test_zero_trapping_gives_zero_shift_within_slew():
    p = preset("gan-emode").with_model(alpha_r=0.0, alpha_c=0.0, beta_pos=0.0)
    f_s, n = 1e5, 2000
    rec = simulate_point(p, f_s, n, None, noiseless(default_adc("gan-emode")))
    w = Waveform(p.model, p.drive_at(f_s))
    res = delta_vth(rec, p.drive.i_0, select_ic(33e-6))
    vth = p.model.vth_0
    slew = max(p.drive.v_gate_high - vth, vth - p.drive.v_gate_low) / w.tau * rec.t_et
    assert abs(res.delta_vth) <= 2 * slew


def test_sic_threshold_shift_positive_and_large():
    p = preset("sic")
    rec = simulate_point(p, p.f_max, 20_000, 0)
    u_id = 167e-6
    res = delta_vth(rec, p.drive.i_0, select_ic(u_id))
    assert res.vth_off - res.vth_on > 4.0
    assert res.delta_vth == res.vth_off - res.vth_on


def test_delta_vth_rejects_constant_current_outside_bias():
    _, i_d, v_g = linear_edges()
    with pytest.raises(ExtractionError):
        delta_vth(record(gate_v=v_g, drain_i=i_d), 0.4, 0.4)


# --- on-resistance -----------------------------------------------------------------

def plateau(v_on, i_on, n=N):
    k = np.arange(n)
    on = (k >= n // 10) & (k < 9 * n // 10)
    return np.where(on, i_on, 0.0), np.where(on, v_on, 50.0)


def test_rdson_constant_plateau():
    i_d, v_d = plateau(0.1, 2.0)
    res = extract_rdson(record(drain_v=v_d, drain_i=i_d))
    assert res.r_dson == pytest.approx(0.05, rel=1e-15)
    # 10 % trimmed off each side of the 800-sample interval
    assert res.sample_count == 640


def test_rdson_monte_carlo_unbiased():
    rng = np.random.default_rng(2024)
    i_d, v_d = plateau(0.1, 2.0, n=200)
    m = 10_000
    est = np.empty(m)
    for j in range(m):
        rec = EquivalentTimeRecord(
            t_et=T_ET, f_s=1 / (200 * T_ET),
            channels={"drain_v": v_d + rng.normal(0, 1e-3, 200), "drain_i": i_d + rng.normal(0, 1e-3, 200)},
        )
        est[j] = extract_rdson(rec).r_dson
    assert abs(est.mean() - 0.05) < 3 * est.std(ddof=1) / math.sqrt(m)


def test_rdson_insufficient_plateau():
    k = np.arange(N)
    on = (k >= 100) & (k < 110)
    with pytest.raises(ExtractionError, match="insufficient plateau"):
        extract_rdson(record(drain_v=np.where(on, 0.1, 50.0), drain_i=np.where(on, 2.0, 0.0)))


def test_rdson_converges_to_simulator_value():
    p = preset("gan-emode")
    f_s = 2e5
    adc = noiseless(default_adc("gan-emode")).with_channel("drain_v", full_scale_low=0.0, full_scale_high=1.0)
    with pytest.warns(SaturationWarning):
        rec = simulate_point(p, f_s, 5000, None, adc)
        res = extract_rdson(rec)
    truth = Waveform(p.model, p.drive_at(f_s)).params.r_dson_eff
    assert res.r_dson == pytest.approx(truth, rel=1e-6)


# --- tau and input capacitance -----------------------------------------------------

def exponential_gate(tau, t_et, n, t_start, t_stop, vl=-5.0, vh=5.0):
    t = np.arange(n) * t_et
    rise = vh + (vl - vh) * np.exp(-np.clip(t - t_start, 0, None) / tau)
    g1 = vh + (vl - vh) * math.exp(-(t_stop - t_start) / tau)
    fall = vl + (g1 - vl) * np.exp(-(t - t_stop) / tau)
    return np.where(t < t_stop, rise, fall)


def test_tau_exact_exponential():
    tau, t_et, n = 10e-9, 0.1e-9, 10_000
    v = exponential_gate(tau, t_et, n, 100e-9, 600e-9)
    rec = EquivalentTimeRecord(t_et=t_et, channels={"gate_v": v}, f_s=1 / (n * t_et))
    fit = extract_tau(rec)
    assert fit.window.stop - fit.window.start >= 100
    assert abs(fit.tau / tau - 1) < 1e-3
    assert fit.fit_r2 > 0.999


def test_tau_pure_step_is_under_resolved():
    k = np.arange(N)
    v = np.where((k >= 100) & (k < 900), 5.0, -5.0)
    with pytest.raises(ExtractionError, match="under-resolved"):
        extract_tau(record(gate_v=v))


def test_tau_monte_carlo_bias():
    p = preset("gan-emode")
    f_s, n = 1e5, 1000
    truth = Waveform(p.model, p.drive_at(f_s)).tau
    est = [extract_tau(simulate_point(p, f_s, n, seed)).tau for seed in range(200)]
    assert abs(np.mean(est) / truth - 1) < 0.01


@pytest.mark.parametrize("tau,r_g,ciss", [(2e-9, 10.0, 200e-12), (1e-6, 1e3, 1e-9)])
def test_ciss_quotient(tau, r_g, ciss):
    assert extract_ciss(tau, r_g) == pytest.approx(ciss, rel=1e-15)
    assert extract_ciss(tau, r_g) == tau / r_g


@pytest.mark.parametrize("kind,f_s", [("gan-cascode", 1e4), ("gan-emode", 1e6), ("sic", 2e5)])
def test_ciss_chain_recovers_simulator_value(kind, f_s):
    p = preset(kind)
    rec = simulate_point(p, f_s, 10_000, None, noiseless(default_adc(kind)))
    drive = p.drive_at(f_s)
    res = extract_ciss_result(rec, drive.r_g)
    truth = Waveform(p.model, drive).params.ciss_eff
    assert res.ciss == pytest.approx(truth, rel=0.01)


# --- switching times ----------------------------------------------------------------

def test_switching_times_linear_edges():
    k = np.arange(N, dtype=float)
    i_0, v_bus = 2.0, 50.0
    # turn-on: current 100->200, voltage 200->300; turn-off mirrored
    i_d = i_0 * (ramp(k, 100, 200, 0, 1) - ramp(k, 800, 900, 0, 1))
    v_d = v_bus * (1 - ramp(k, 200, 300, 0, 1) + ramp(k, 700, 800, 0, 1))
    st = extract_switching_times(record(drain_v=v_d, drain_i=i_d), i_0, v_bus)
    # 10 % current at k=110, 10 % voltage at k=290 (falling) / k=710 (rising), 10 % current at k=890
    assert abs(st.tc_on - 180 * T_ET) <= T_ET
    assert abs(st.tc_off - 180 * T_ET) <= T_ET


def test_switching_times_instantaneous_edges():
    k = np.arange(N)
    on = (k >= 100) & (k < 900)
    with pytest.raises(ExtractionError, match="under-resolved"):
        extract_switching_times(record(drain_v=np.where(on, 0.1, 50.0), drain_i=np.where(on, 2.0, 0.0)), 2.0, 50.0)


def test_switching_times_missing_edge():
    k = np.arange(N)
    with pytest.raises(ExtractionError, match="missing"):
        extract_switching_times(record(drain_v=np.full(N, 50.0), drain_i=np.where(k > 100, 2.0, 0.0)), 2.0, 50.0)


def test_turn_on_crossover_shrinks_with_input_capacitance():
    base = preset("sic")
    f_s = 5e4
    fixed = replace(base, fixed_r_g=base.gate_resistor(f_s))
    half = replace(fixed.with_model(ciss_0=base.model.ciss_0 / 2))
    adc = noiseless(default_adc("sic"))
    tc = [extract_switching_times(simulate_point(p, f_s, 20_000, None, adc), p.drive.i_0, p.drive.v_bus).tc_on
          for p in (fixed, half)]
    assert tc[1] < tc[0]


# --- purity and trends ------------------------------------------------------------------

def test_extractors_are_pure():
    p = preset("gan-emode")
    rec = simulate_point(p, 1e5, 2000, 5)
    a = (extract_rdson(rec), extract_tau(rec).tau, delta_vth(rec, 0.4, 3.3e-3))
    b = (extract_rdson(rec), extract_tau(rec).tau, delta_vth(rec, 0.4, 3.3e-3))
    assert a == b


@pytest.mark.parametrize("kind", ["gan-cascode", "gan-emode"])
def test_gan_trends_monotone_when_noiseless(kind):
    p = preset(kind)
    adc = noiseless(default_adc(kind))
    dv, r = [], []
    for f in p.grid:
        rec = simulate_point(p, f, 40_000, None, adc)
        dv.append(delta_vth(rec, p.drive.i_0, 3.3e-3).delta_vth)
        r.append(extract_rdson(rec).r_dson)
    assert np.all(np.diff(dv) >= 0)
    assert np.all(np.diff(r) >= 0)
