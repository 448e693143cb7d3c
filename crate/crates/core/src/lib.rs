//! Behavioral simulation and virtual-bin calibration of gray-code-oscillator
//! time-to-digital converters.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: bin profiles, gray-code states, the sampling matrix and
//!   timestamp capture for a single TDC channel.
//! - [`density`]: code-density tests, raw histograms, cumulative timestamps
//!   and the virtual-bin grid.
//! - [`vbcm`]: compensation addresses, width-calibration weights (exact and
//!   fixed-point) and the calibrated measurement histogram.
//! - [`metrics`]: DNL/INL, equivalent bin width, RMS resolution and the
//!   sampling-matrix efficiency figure.
//! - [`experiment`]: seeded multichannel sweeps and report files.
//!
//! See `examples/` for one runnable program per capability.

pub mod channel;
pub mod density;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod vbcm;

pub use error::{Error, Result};
