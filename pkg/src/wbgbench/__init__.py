"""Software twin of an equivalent-time measurement bench for GaN and SiC power transistors."""
from .extraction import (
    CissResult, ExtractionError, RdsonResult, SwitchingTimes, ThresholdResult, delta_vth,
    extract_ciss, extract_rdson, extract_switching_times, extract_tau, extract_vth_off,
    extract_vth_on, select_ic,
)
from .harness import FomReport, SweepTable, run_point, run_sweep, verify_trends
from .losses import LossReport, conduction_loss, leakage_loss, switching_loss, total_loss
from .sampler import (
    AdcChannel, AdcModel, EquivalentTimeRecord, EtSchedule, acquire, channel_uncertainty,
    default_adc, load_record, make_schedule, quantize,
)
from .waveform import (
    DeviceKind, DeviceModel, DriveConfig, Preset, StressPhase, TrapModel, Waveform,
    effective_params, preset, steady_state_occupancy,
)

__version__ = "0.1.0"
