import numpy as np
import pytest

from wbgbench.extraction import ExtractionError
from wbgbench.harness import (
    Band, SweepTable, default_expectations, point_seed, run_point, run_sweep, verify_trends,
)
from wbgbench.waveform import DeviceKind, preset

FAST_N = 5000


@pytest.fixture(scope="module")
def emode_table():
    return run_sweep(preset("gan-emode"), n=FAST_N, seed=3)


def test_run_point_complete_and_repeatable():
    a = run_point("gan-emode", 1e4, n=1000, seed=42)
    b = run_point("gan-emode", 1e4, n=1000, seed=42)
    assert a.complete
    assert a == b
    assert a.to_text() == b.to_text()


def test_run_point_rejects_frequency_above_grid():
    with pytest.raises(ValueError, match="outside"):
        run_point("sic", 1e6, n=1000)


def test_run_point_under_resolved_gate():
    with pytest.raises(ExtractionError) as exc:
        run_point("gan-emode", 1e4, n=10)
    assert exc.value.fom == "tau"


def test_point_seeds_are_order_free():
    seeds = [point_seed(7, i) for i in range(20)]
    assert len(set(seeds)) == 20
    assert seeds == [point_seed(7, i) for i in range(20)]


def test_sweep_is_byte_identical(emode_table):
    again = run_sweep(preset("gan-emode"), n=FAST_N, seed=3)
    assert again.to_csv() == emode_table.to_csv()


def test_parallel_matches_serial():
    p = preset("sic")
    serial = run_sweep(p, n=FAST_N, seed=9, workers=1)
    parallel = run_sweep(p, n=FAST_N, seed=9, workers=2)
    assert serial.to_csv().encode() == parallel.to_csv().encode()


def test_anchor_row_is_exactly_one(emode_table):
    assert emode_table.rdson_ratio[emode_table.anchor_index] == 1.0
    assert emode_table.ciss_ratio[emode_table.anchor_index] == 1.0


def test_grid_order_preserved(emode_table):
    f = emode_table.f_s
    assert np.all(np.diff(f) > 0)
    assert tuple(f) == preset("gan-emode").grid


def test_missing_anchor_is_rejected():
    with pytest.raises(ValueError, match="anchor"):
        run_sweep(preset("gan-emode"), grid=[2e4, 1e5], n=1000)
    with pytest.raises(ValueError):
        SweepTable(rows=(), kind=DeviceKind.GAN_EMODE)


def test_calibrated_preset_passes(emode_table):
    report = verify_trends(emode_table)
    assert report.passed, report.to_text()
    assert "overall  PASS" in report.to_text()


def test_removing_resistance_sensitivity_fails_with_margin():
    p = preset("gan-cascode").with_model(alpha_r=0.0)
    report = verify_trends(run_sweep(p, n=FAST_N))
    assert not report.passed
    failed = [r for r in report.results if not r.passed]
    assert [r.band.name for r in failed] == ["gan-cascode.rdson_ratio_at_max"]
    assert failed[0].margin == pytest.approx(failed[0].value - 1.20)
    assert failed[0].margin < -0.15


def test_empty_expectations_pass_vacuously(emode_table):
    report = verify_trends(emode_table, expectations=[])
    assert report.passed and report.results == ()


def test_band_margins_and_strictness(emode_table):
    exact = Band("one", lambda t: t.rdson_ratio[t.anchor_index], 1.0, 1.0)
    assert verify_trends(emode_table, [exact]).results[0].margin == 0.0
    assert verify_trends(emode_table, [exact]).passed
    strict = Band("strict", lambda t: t.rdson_ratio[t.anchor_index], hi=1.0, strict=True)
    assert not verify_trends(emode_table, [strict]).passed


@pytest.mark.parametrize("kind", list(DeviceKind), ids=lambda k: k.value)
def test_every_kind_has_anchor_band(kind):
    names = [b.name for b in default_expectations(kind)]
    assert names[0].endswith("rdson_anchor")
