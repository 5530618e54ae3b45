"""Frequency sweeps over device presets and trend-band verification."""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import extraction as ex
from .losses import LossReport, loss_report
from .sampler import AdcModel, EquivalentTimeRecord, acquire, channel_uncertainty, default_adc, make_schedule
from .waveform import DeviceKind, Preset, Waveform, preset as get_preset

DEFAULT_SWEEP_N = 40_000
ANCHOR_HZ = 10e3
# tolerance of the external gate resistor, rectangular distribution
R_G_TOLERANCE = 0.01

SWEEP_COLUMNS = (
    "device", "fs_hz", "ciss_f", "ciss_ratio", "rdson_ohm", "rdson_ratio", "vth_on_v",
    "vth_off_v", "delta_vth_v", "tc_on_s", "tc_off_s", "p_on_w", "p_s_w", "p_off_w",
    "p_l_w", "u_id_a",
)


@dataclass(frozen=True)
class Uncertainties:
    u_id: float
    u_vd: float
    u_ciss: float | None = None
    u_rdson: float | None = None


@dataclass(frozen=True)
class FomReport:
    f_s: float
    kind: DeviceKind | None
    threshold: ex.ThresholdResult | None
    rdson: ex.RdsonResult | None
    ciss: ex.CissResult | None
    switching: ex.SwitchingTimes | None
    losses: LossReport | None
    uncertainties: Uncertainties
    seed: int | None = None
    saturated: bool = False

    @property
    def complete(self) -> bool:
        return None not in (self.threshold, self.rdson, self.ciss, self.switching, self.losses)

    def to_text(self) -> str:
        lines = [f"f_s_hz = {self.f_s:.17g}",
                 f"device = {self.kind.value if self.kind else 'unknown'}",
                 f"seed = {'' if self.seed is None else self.seed}",
                 f"saturated = {int(self.saturated)}"]

        def section(name, obj, attrs):
            if obj is None:
                lines.append(f"{name} = absent")
                return
            for a in attrs:
                lines.append(f"{name}.{a} = {getattr(obj, a):.17g}")

        section("threshold", self.threshold, ("vth_on", "vth_off", "i_c", "delta_vth"))
        section("rdson", self.rdson, ("r_dson", "v_d_mean", "i_d_mean", "sample_count"))
        section("ciss", self.ciss, ("tau", "ciss", "fit_r2"))
        section("switching", self.switching, ("tc_on", "tc_off"))
        section("losses", self.losses, ("p_on", "p_s", "p_off", "p_l", "approx_ratio"))
        u = self.uncertainties
        for a in ("u_id", "u_vd", "u_ciss", "u_rdson"):
            v = getattr(u, a)
            lines.append(f"uncertainty.{a} = " + ("absent" if v is None else f"{v:.17g}"))
        return "\n".join(lines) + "\n"


def evaluate_record(record: EquivalentTimeRecord, *, r_g: float, i_0: float, v_bus: float,
                    duty: float, i_leak: float, adc: AdcModel, kind=None) -> FomReport:
    """Run every extractor whose channels are present in ``record``.

    Extraction failures on present channels propagate as ExtractionError.
    """
    u_id = channel_uncertainty(adc, "drain_i")
    u_vd = channel_uncertainty(adc, "drain_v")
    u_gate = channel_uncertainty(adc, "gate_v")

    ciss = u_ciss = None
    if record.has("gate_v"):
        fit = ex.extract_tau(record)
        ciss = ex.CissResult(tau=fit.tau, ciss=ex.extract_ciss(fit.tau, r_g), fit_r2=fit.fit_r2)
        rel_tau = ex.tau_uncertainty(record, fit, u_gate) / fit.tau
        u_ciss = ciss.ciss * math.hypot(rel_tau, R_G_TOLERANCE / math.sqrt(3))

    threshold = None
    if record.has("gate_v", "drain_i"):
        threshold = ex.delta_vth(record, i_0, ex.select_ic(u_id))

    rdson = switching = u_rdson = None
    if record.has("drain_v", "drain_i"):
        rdson = ex.extract_rdson(record)
        root_n = math.sqrt(rdson.sample_count)
        u_rdson = rdson.r_dson * math.hypot(u_vd / (rdson.v_d_mean * root_n),
                                            u_id / (rdson.i_d_mean * root_n))
        switching = ex.extract_switching_times(record, i_0, v_bus)

    losses = None
    if rdson is not None and switching is not None:
        losses = loss_report(rdson.r_dson, i_0, v_bus, record.f_s, duty,
                             switching.tc_on, switching.tc_off, i_leak)

    return FomReport(
        f_s=record.f_s, kind=None if kind is None else DeviceKind(kind), threshold=threshold,
        rdson=rdson, ciss=ciss, switching=switching, losses=losses,
        uncertainties=Uncertainties(u_id=u_id, u_vd=u_vd, u_ciss=u_ciss, u_rdson=u_rdson),
        seed=record.seed, saturated=record.saturated,
    )


def _resolve(p) -> Preset:
    return p if isinstance(p, Preset) else get_preset(p)


def simulate_point(p, f_s: float, n: int, seed: int | None, adc: AdcModel | None = None) -> EquivalentTimeRecord:
    p = _resolve(p)
    if not (p.f_min * (1 - 1e-9) <= f_s <= p.f_max * (1 + 1e-9)):
        raise ValueError(f"f_s={f_s:g} Hz outside the {p.kind.value} range "
                         f"[{p.f_min:g}, {p.f_max:g}] Hz")
    wave = Waveform(p.model, p.drive_at(f_s))
    adc = adc or default_adc(p.kind)
    return acquire(wave, make_schedule(wave.period, n), adc, seed=seed)


def run_point(p, f_s: float, n: int = DEFAULT_SWEEP_N, seed: int | None = 0,
              adc: AdcModel | None = None) -> FomReport:
    """Simulate, acquire and extract every figure of merit at one frequency."""
    p = _resolve(p)
    adc = adc or default_adc(p.kind)
    record = simulate_point(p, f_s, n, seed, adc)
    drive = p.drive_at(f_s)
    return evaluate_record(record, r_g=drive.r_g, i_0=drive.i_0, v_bus=drive.v_bus,
                           duty=drive.duty, i_leak=p.model.i_leak, adc=adc, kind=p.kind)


def point_seed(root_seed: int, index: int) -> int:
    """Per-grid-point seed, independent of evaluation order."""
    return int(np.random.SeedSequence([root_seed, index]).generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[FomReport, ...]
    kind: DeviceKind

    def __post_init__(self):
        fs = [r.f_s for r in self.rows]
        if any(b <= a for a, b in zip(fs, fs[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.anchor_index is None:
            raise ValueError(f"sweep grid must contain the {ANCHOR_HZ:g} Hz anchor point")

    @property
    def anchor_index(self) -> int | None:
        for i, r in enumerate(self.rows):
            if math.isclose(r.f_s, ANCHOR_HZ, rel_tol=1e-12):
                return i
        return None

    @property
    def f_s(self) -> np.ndarray:
        return np.array([r.f_s for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        getters = {
            "ciss": lambda r: r.ciss.ciss,
            "rdson": lambda r: r.rdson.r_dson,
            "vth_on": lambda r: r.threshold.vth_on,
            "vth_off": lambda r: r.threshold.vth_off,
            "delta_vth": lambda r: r.threshold.delta_vth,
            "tc_on": lambda r: r.switching.tc_on,
            "tc_off": lambda r: r.switching.tc_off,
            "p_on": lambda r: r.losses.p_on,
            "p_s": lambda r: r.losses.p_s,
            "p_off": lambda r: r.losses.p_off,
            "p_l": lambda r: r.losses.p_l,
            "approx_ratio": lambda r: r.losses.approx_ratio,
            "u_id": lambda r: r.uncertainties.u_id,
            "u_ciss": lambda r: r.uncertainties.u_ciss,
            "u_rdson": lambda r: r.uncertainties.u_rdson,
        }
        return np.array([getters[name](r) for r in self.rows])

    @property
    def rdson_ratio(self) -> np.ndarray:
        r = self.column("rdson")
        return r / r[self.anchor_index]

    @property
    def ciss_ratio(self) -> np.ndarray:
        c = self.column("ciss")
        return c / c[self.anchor_index]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(SWEEP_COLUMNS) + "\n")
        cols = {name: self.column(name) for name in
                ("ciss", "rdson", "vth_on", "vth_off", "delta_vth", "tc_on", "tc_off",
                 "p_on", "p_s", "p_off", "p_l", "u_id")}
        cratio, rratio = self.ciss_ratio, self.rdson_ratio
        for i, row in enumerate(self.rows):
            values = [row.f_s, cols["ciss"][i], cratio[i], cols["rdson"][i], rratio[i],
                      cols["vth_on"][i], cols["vth_off"][i], cols["delta_vth"][i],
                      cols["tc_on"][i], cols["tc_off"][i], cols["p_on"][i], cols["p_s"][i],
                      cols["p_off"][i], cols["p_l"][i], cols["u_id"][i]]
            buf.write(",".join([self.kind.value] + [f"{v:.17g}" for v in values]) + "\n")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _point_job(args):
    p, f_s, n, seed, adc = args
    return run_point(p, f_s, n, seed, adc)


def run_sweep(p, grid: Sequence[float] | None = None, n: int = DEFAULT_SWEEP_N, seed: int = 0,
              adc: AdcModel | None = None, workers: int = 1) -> SweepTable:
    """One FomReport per grid point; ``workers > 1`` evaluates points in parallel processes."""
    p = _resolve(p)
    grid = tuple(float(f) for f in (p.grid if grid is None else grid))
    if not any(math.isclose(f, ANCHOR_HZ, rel_tol=1e-12) for f in grid):
        raise ValueError(f"sweep grid must contain the {ANCHOR_HZ:g} Hz anchor point")
    jobs = [(p, f, n, point_seed(seed, i), adc) for i, f in enumerate(grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_point_job, jobs))
    else:
        rows = [_point_job(j) for j in jobs]
    return SweepTable(rows=tuple(rows), kind=p.kind)


# ---------------------------------------------------------------------------
# trend bands


@dataclass(frozen=True)
class Band:
    """Acceptance band on one statistic of a sweep.

    ``values`` maps a table to one or more numbers; every number must lie in
    the band. Open bounds are excluded when ``strict`` is set.
    """

    name: str
    values: Callable[[SweepTable], np.ndarray]
    lo: float | None = None
    hi: float | None = None
    strict: bool = False

    def bound_text(self) -> str:
        lt = "<" if self.strict else "<="
        if self.lo is not None and self.hi is not None:
            return f"[{self.lo:g}, {self.hi:g}]" if not self.strict else f"({self.lo:g}, {self.hi:g})"
        if self.lo is not None:
            return f"{'>' if self.strict else '>='} {self.lo:g}"
        return f"{lt} {self.hi:g}"


@dataclass(frozen=True)
class BandResult:
    band: Band
    value: float
    margin: float
    passed: bool

    def line(self) -> str:
        return (f"{self.band.name}  bound={self.band.bound_text()}  value={self.value:.6g}  "
                f"margin={self.margin:.6g}  {'PASS' if self.passed else 'FAIL'}")


@dataclass(frozen=True)
class TrendReport:
    results: tuple[BandResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_text(self) -> str:
        lines = [r.line() for r in self.results]
        lines.append(f"overall  {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _evaluate_band(band: Band, table: SweepTable) -> BandResult:
    vals = np.atleast_1d(np.asarray(band.values(table), dtype=float))
    lo = -np.inf if band.lo is None else band.lo
    hi = np.inf if band.hi is None else band.hi
    margins = np.minimum(vals - lo, hi - vals)
    worst = int(np.argmin(margins))
    m = float(margins[worst])
    passed = m > 0 if band.strict else m >= 0
    return BandResult(band, float(vals[worst]), m, bool(passed))


def verify_trends(table: SweepTable, expectations: Sequence[Band] | None = None) -> TrendReport:
    """Evaluate each band against ``table``; failures are reported, not raised."""
    if expectations is None:
        expectations = default_expectations(table.kind)
    return TrendReport(tuple(_evaluate_band(b, table) for b in expectations))


def default_expectations(kind) -> list[Band]:
    kind = DeviceKind(kind)
    tag = kind.value
    bands = [Band(f"{tag}.rdson_anchor", lambda t: t.rdson_ratio[t.anchor_index], 1.0, 1.0)]
    if kind.is_gan:
        bands += [
            Band(f"{tag}.ciss_ratio_at_max", lambda t: t.ciss_ratio[-1], 1.8, 2.2),
            Band(f"{tag}.rdson_ratio_at_max", lambda t: t.rdson_ratio[-1], 1.20, 1.35),
        ]
    if kind is DeviceKind.GAN_CASCODE:
        bands.append(Band(f"{tag}.abs_delta_vth_all", lambda t: np.abs(t.column("delta_vth")),
                          hi=0.05, strict=True))
    elif kind is DeviceKind.GAN_EMODE:
        bands.append(Band(f"{tag}.delta_vth_at_max", lambda t: t.column("delta_vth")[-1], 0.1, 1.0))
    else:
        bands += [
            Band(f"{tag}.rdson_ratio_all", lambda t: t.rdson_ratio, 0.98, 1.05),
            Band(f"{tag}.delta_vth_at_max", lambda t: t.column("delta_vth")[-1], lo=4.0, strict=True),
        ]
    return bands
