"""Power-loss decomposition of a hard-switched transistor.

``p_l = p_on + p_s + p_off``; the off-state term is carried explicitly so the
usual ``p_l ~ p_on + p_s`` approximation can be checked instead of assumed.
"""
from __future__ import annotations

from dataclasses import dataclass


def _check_non_negative(**values):
    for name, v in values.items():
        if not v >= 0:
            raise ValueError(f"{name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class LossReport:
    p_on: float
    p_s: float
    p_off: float
    p_l: float
    approx_ratio: float


def conduction_loss(r_dson: float, i_0: float, t_on: float, t_sw: float) -> float:
    _check_non_negative(r_dson=r_dson, i_0=i_0)
    if not (t_on > 0 and t_sw > 0):
        raise ValueError("t_on and t_sw must be positive")
    if t_on >= t_sw:
        raise ValueError(f"t_on ({t_on!r}) must be shorter than t_sw ({t_sw!r})")
    return r_dson * i_0**2 * t_on / t_sw


def switching_loss(v_d: float, i_0: float, f_s: float, tc_on: float, tc_off: float) -> float:
    _check_non_negative(v_d=v_d, i_0=i_0, tc_on=tc_on, tc_off=tc_off)
    if not f_s > 0:
        raise ValueError(f"f_s must be positive, got {f_s!r}")
    return 0.5 * v_d * i_0 * f_s * (tc_on + tc_off)


def leakage_loss(i_leak: float, v_bus: float, t_off: float, t_sw: float) -> float:
    _check_non_negative(i_leak=i_leak, v_bus=v_bus, t_off=t_off)
    if not t_sw > 0:
        raise ValueError("t_sw must be positive")
    return v_bus * i_leak * t_off / t_sw


def total_loss(p_on: float, p_s: float, p_off: float) -> LossReport:
    _check_non_negative(p_on=p_on, p_s=p_s, p_off=p_off)
    p_l = p_on + p_s + p_off
    # an all-zero report is trivially exact under the two-term approximation
    ratio = (p_on + p_s) / p_l if p_l > 0 else 1.0
    return LossReport(p_on=p_on, p_s=p_s, p_off=p_off, p_l=p_l, approx_ratio=ratio)


def loss_report(r_dson, i_0, v_bus, f_s, duty, tc_on, tc_off, i_leak) -> LossReport:
    """All loss terms for one operating point."""
    t_sw = 1.0 / f_s
    t_on = duty * t_sw
    return total_loss(
        conduction_loss(r_dson, i_0, t_on, t_sw),
        switching_loss(v_bus, i_0, f_s, tc_on, tc_off),
        leakage_loss(i_leak, v_bus, t_sw - t_on, t_sw),
    )
