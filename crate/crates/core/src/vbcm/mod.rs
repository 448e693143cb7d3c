//! Virtual-bin calibration.
//!
//! Calibration runs in two code-density passes. The first pass fixes, for each
//! raw bin, up to three virtual-bin addresses ([`compute_compensation`]). The
//! second pass routes fresh hits through those addresses at unit weight
//! ([`accumulate_compensated`]) and derives one weight per address slot
//! ([`compute_width_calibration`]), stored both exactly and as fixed-point
//! integers. Measurements then add the weights into a histogram over the
//! virtual bins ([`apply_measurement`]).

mod calibration;
mod compensation;
mod measurement;
mod pipeline;
mod table_io;

pub use calibration::{
    accumulate_compensated, accumulate_compensated_histogram, compute_width_calibration, CalibrationTable,
    CompensatedHistogram, Rounding, Weight,
};
pub use compensation::{compute_compensation, CompensationTable, CoverageWarning};
pub use measurement::{apply_measurement, apply_measurement_exact, CalibratedHistogram, ExactHistogram};
pub use pipeline::{calibrate_channel, calibrate_from_histograms, CalibrationPlan, ChannelCalibration};
pub use table_io::{CcRow, CcTable};
