//! Behavioral model of one gray-code-oscillator TDC channel.
//!
//! A channel is described by a [`ChannelConfig`]; its physical fine bins are a
//! [`BinProfile`] that tiles one clock period. Events are captured into
//! [`TimestampRecord`]s (coarse counter plus fine bin), and the fine bin can be
//! resolved either directly from the profile or through the sampling matrix
//! ([`encode_sample_matrix`] / [`decode_sample_matrix`]).

mod config;
mod gray;
mod profile;
mod sampling;
mod timestamp;

pub use config::{nominal_lsb, nominal_lsb_from_plain, ChannelConfig, SUPPORTED_MATRIX_ORDERS};
pub use gray::{gray_decode, gray_encode, GrayWord, GRAY_BITS, GRAY_STATES};
pub use profile::{synthesize_bin_profile, BinProfile};
pub use sampling::{decode_sample_matrix, encode_sample_matrix, FineSample};
pub use timestamp::{capture_timestamp, reconstruct_interval, TimestampRecord};
