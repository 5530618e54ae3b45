"""Equivalent-time acquisition through a quantizing, noisy ADC model.

Sample ``k`` is taken at real time ``k * t_sample`` with
``t_sample = T + T/n``, so successive samples walk through the phase of a
periodic input by ``T/n`` each and ``n`` samples rebuild one period.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol

import numpy as np

CSV_COLUMNS = {"gate_v": "v_gate_v", "drain_v": "v_drain_v", "drain_i": "i_drain_a"}
_COLUMN_CHANNELS = {v: k for k, v in CSV_COLUMNS.items()}


class PeriodicSource(Protocol):
    period: float

    def __call__(self, t: np.ndarray) -> Mapping[str, np.ndarray]: ...


@dataclass(frozen=True)
class EtSchedule:
    t_signal: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.t_signal) and self.t_signal > 0):
            raise ValueError(f"signal period must be positive, got {self.t_signal!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def t_et(self) -> float:
        return self.t_signal / self.n

    @property
    def t_sample(self) -> float:
        return self.t_signal + self.t_et

    def real_times(self) -> np.ndarray:
        return np.arange(self.n) * self.t_sample

    def equivalent_times(self) -> np.ndarray:
        return np.arange(self.n) * self.t_et


def make_schedule(t_signal: float, n: int) -> EtSchedule:
    return EtSchedule(t_signal, n)


@dataclass(frozen=True)
class AdcChannel:
    """One converter input behind a linear transducer.

    ``gain`` converts volts at the ADC pin into physical units; the full-scale
    range is given in physical units.
    """

    full_scale_low: float
    full_scale_high: float
    gain: float
    noise_sigma: float = 0.0
    jitter_sigma: float = 0.0

    def __post_init__(self):
        if not self.full_scale_high > self.full_scale_low:
            raise ValueError("full_scale_high must exceed full_scale_low")
        if self.gain == 0 or not math.isfinite(self.gain):
            raise ValueError("gain must be finite and non-zero")
        if self.noise_sigma < 0 or self.jitter_sigma < 0:
            raise ValueError("noise_sigma and jitter_sigma must be >= 0")

    @property
    def span(self) -> float:
        return self.full_scale_high - self.full_scale_low


@dataclass(frozen=True)
class AdcModel:
    channels: Mapping[str, AdcChannel]
    bits: int = 16

    def __post_init__(self):
        if int(self.bits) != self.bits or not 8 <= self.bits <= 24:
            raise ValueError(f"bits must be an integer in [8, 24], got {self.bits!r}")
        object.__setattr__(self, "channels", dict(self.channels))

    def lsb(self, channel: str) -> float:
        return self.channels[channel].span / 2**self.bits

    def with_bits(self, bits: int) -> "AdcModel":
        return AdcModel(self.channels, bits)

    def with_channel(self, name: str, **changes) -> "AdcModel":
        from dataclasses import replace

        chans = dict(self.channels)
        chans[name] = replace(chans[name], **changes)
        return AdcModel(chans, self.bits)


def _quantize(lo, hi, bits, value):
    value = np.asarray(value, dtype=float)
    lsb = (hi - lo) / 2**bits
    code = np.clip(np.floor((value - lo) / lsb), 0, 2**bits - 1)
    q = lo + (code + 0.5) * lsb
    # at or beyond the range edges the reading sits on the rail
    return np.where(value <= lo, lo, np.where(value >= hi, hi, q))


def quantize(adc: AdcModel, channel: str, value):
    """Uniform mid-rise quantization over the channel's full-scale range."""
    ch = adc.channels[channel]
    out = _quantize(ch.full_scale_low, ch.full_scale_high, adc.bits, value)
    return float(out) if np.ndim(out) == 0 else out


def channel_uncertainty(adc: AdcModel, channel: str) -> float:
    """Standard uncertainty of one reading, in physical units.

    Quantization (uniform, LSB/sqrt(12)) and pin noise are combined in
    quadrature after referring the noise through the transducer gain.
    """
    ch = adc.channels[channel]
    q = adc.lsb(channel) / math.sqrt(12.0)
    return math.hypot(q, ch.noise_sigma * abs(ch.gain))


@dataclass(frozen=True)
class EquivalentTimeRecord:
    """One reconstructed period: ``n`` samples per channel at ``k * t_et``."""

    t_et: float
    channels: Mapping[str, np.ndarray]
    f_s: float
    seed: int | None = None
    saturated: bool = False
    schedule: EtSchedule | None = None
    adc: AdcModel | None = field(default=None, compare=False)

    def __post_init__(self):
        chans = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        unknown = set(chans) - set(CSV_COLUMNS)
        if unknown:
            raise ValueError(f"unknown channels {sorted(unknown)}")
        if not chans:
            raise ValueError("record has no channels")
        lengths = {len(v) for v in chans.values()}
        if len(lengths) != 1:
            raise ValueError("channels differ in length")
        for v in chans.values():
            v.setflags(write=False)
        object.__setattr__(self, "channels", chans)

    @property
    def n(self) -> int:
        return len(next(iter(self.channels.values())))

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n) * self.t_et

    @property
    def period(self) -> float:
        return 1.0 / self.f_s

    def has(self, *names: str) -> bool:
        return all(name in self.channels for name in names)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(f"record has no {name!r} channel") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# fs_hz={self.f_s!r}\n")
        buf.write(f"# n={self.n}\n")
        buf.write(f"# seed={'' if self.seed is None else self.seed}\n")
        buf.write(f"# saturated={int(self.saturated)}\n")
        names = [c for c in CSV_COLUMNS if c in self.channels]
        buf.write(",".join(["t_eq_s"] + [CSV_COLUMNS[c] for c in names]) + "\n")
        cols = [self.t] + [self.channels[c] for c in names]
        for row in zip(*cols):
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


class RecordFormatError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_record(text: str) -> EquivalentTimeRecord:
    meta = {}
    header = None
    rows = []
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if not sep:
                raise RecordFormatError(f"malformed metadata {line!r}", lineno)
            meta[key.strip()] = value.strip()
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            if header[0] != "t_eq_s" or any(h not in _COLUMN_CHANNELS for h in header[1:]):
                raise RecordFormatError(f"unexpected columns {header}", lineno)
            continue
        fields = line.split(",")
        if len(fields) != len(header):
            raise RecordFormatError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        try:
            rows.append([float(x) for x in fields])
        except ValueError:
            raise RecordFormatError(f"non-numeric field in {line!r}", lineno) from None
    if header is None:
        raise RecordFormatError("missing column header")
    for key in ("fs_hz", "n"):
        if key not in meta:
            raise RecordFormatError(f"missing '# {key}=' header")
    try:
        f_s = float(meta["fs_hz"])
        n = int(meta["n"])
        seed = int(meta["seed"]) if meta.get("seed") else None
        saturated = bool(int(meta.get("saturated", "0")))
    except ValueError as exc:
        raise RecordFormatError(f"bad metadata value: {exc}") from None
    if len(rows) != n:
        raise RecordFormatError(f"header announces n={n} rows but file has {len(rows)}",
                                len(lines) + 1 if len(rows) < n else len(lines))
    if n < 2:
        raise RecordFormatError("record needs at least two samples")
    data = np.array(rows)
    t = data[:, 0]
    t_et = 1.0 / f_s / n
    if not np.allclose(t, np.arange(n) * t_et, rtol=1e-9, atol=t_et * 1e-6):
        raise RecordFormatError("timestamps are not k * T/n")
    chans = {_COLUMN_CHANNELS[h]: data[:, i] for i, h in enumerate(header) if i > 0}
    return EquivalentTimeRecord(
        t_et=t_et, channels=chans, f_s=f_s, seed=seed, saturated=saturated,
        schedule=EtSchedule(1.0 / f_s, n),
    )


def load_record(path) -> EquivalentTimeRecord:
    with open(path) as fh:
        return parse_record(fh.read())


def acquire(source: PeriodicSource, schedule: EtSchedule, adc: AdcModel,
            channels=("gate_v", "drain_v", "drain_i"), seed: int | None = 0) -> EquivalentTimeRecord:
    """Sample ``source`` on the equivalent-time schedule through ``adc``."""
    channels = tuple(channels)
    if len(set(channels)) < 2:
        raise ValueError("at least two distinct channels must be acquired simultaneously")
    missing = [c for c in channels if c not in adc.channels]
    if missing:
        raise ValueError(f"ADC has no configuration for channels {missing}")
    if not math.isclose(source.period, schedule.t_signal, rel_tol=1e-12):
        raise ValueError(f"source period {source.period!r} != schedule period {schedule.t_signal!r}")

    rng = np.random.default_rng(seed)
    t_real = schedule.real_times()
    out = {}
    saturated = False
    for name in channels:
        ch = adc.channels[name]
        t = t_real
        if ch.jitter_sigma > 0:
            t = t + rng.normal(0.0, ch.jitter_sigma, size=t.shape)
        value = np.asarray(source(np.mod(t, schedule.t_signal))[name], dtype=float)
        if ch.noise_sigma > 0:
            pin = value / ch.gain + rng.normal(0.0, ch.noise_sigma, size=value.shape)
            value = pin * ch.gain
        if np.any((value < ch.full_scale_low) | (value > ch.full_scale_high)):
            saturated = True
        out[name] = _quantize(ch.full_scale_low, ch.full_scale_high, adc.bits, value)

    f_s = getattr(source, "f_s", None) or 1.0 / schedule.t_signal
    return EquivalentTimeRecord(
        t_et=schedule.t_et, channels=out, f_s=f_s, seed=seed,
        saturated=saturated, schedule=schedule, adc=adc,
    )


def _channel(lo, hi, noise_sigma, pin_span=3.3):
    return AdcChannel(lo, hi, gain=(hi - lo) / pin_span, noise_sigma=noise_sigma)


# pin-referred noise of a 16-bit SAR converter on a 3.3 V reference
DEFAULT_NOISE_SIGMA = 200e-6


def default_adc(kind, bits: int = 16, noise_sigma: float = DEFAULT_NOISE_SIGMA) -> AdcModel:
    """ADC front end sized for the bias levels of a device preset."""
    from .waveform import DeviceKind

    kind = DeviceKind(kind)
    if kind.is_gan:
        chans = {
            "gate_v": _channel(-6.0, 6.0, noise_sigma),
            "drain_v": _channel(-2.0, 70.0, noise_sigma),
            "drain_i": _channel(-0.05, 0.5, noise_sigma),
        }
    else:
        chans = {
            "gate_v": _channel(-1.0, 16.0, noise_sigma),
            "drain_v": _channel(-2.0, 60.0, noise_sigma),
            "drain_i": _channel(-0.25, 2.5, noise_sigma),
        }
    return AdcModel(chans, bits)
