//! The dichotomy engine: summability exponents, infinity slices, inequality
//! probes and the exponent schedules of the Moser iterations.

pub mod bump;
pub mod norms;
pub mod probes;
pub mod schedule;
pub mod slices;
pub mod summability;

pub use bump::{make_bump, Bump};
pub use norms::{sup_slice_norm, SliceNormReport};
pub use probes::{
    caccioppoli_probe, harnack_probe, lebesgue_blowup_check, rn_scaling_probe, sobolev_probe, CaccioppoliMode, HarnackOptions,
    HarnackProbe, InequalityProbe, LebesgueReport, ProbeGrid, RnScalingReport,
};
pub use schedule::{alpha_schedule, gap_schedule, ExponentSchedule, ScheduleKind};
pub use slices::{detect_infinity_slice, dichotomy_check, DichotomyCheck, InfinitySlice, SliceMode, SliceOptions, EPS_ZERO};
pub use summability::{
    classify, default_region, estimate_critical_exponent, gradient_exponent_check, Censoring, ScanOptions, SummabilityReport,
    Verdict, TOL_GAP,
};
