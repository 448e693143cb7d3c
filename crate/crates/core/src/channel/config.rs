use serde::{Deserialize, Serialize};

use super::gray::GRAY_STATES;
use crate::error::{Error, Result};

/// Sampling-matrix orders the model accepts.
pub const SUPPORTED_MATRIX_ORDERS: [u32; 5] = [1, 2, 4, 8, 16];

/// Static description of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Sampling clock period `T`.
    pub clock_period_ps: f64,
    /// Oscillator states traversed per clock period (plain GCO bins).
    pub plain_bin_count: u32,
    /// Number of DFF groups in the sampling matrix (`M`).
    pub matrix_order: u32,
    /// Total fine bins per period. Defaults to `plain_bin_count * matrix_order`;
    /// a smaller value truncates the last oscillator state, which happens when
    /// the clock edge arrives part-way through it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_bin_count: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Coefficient of variation of the synthesized widths.
    #[serde(default)]
    pub width_dispersion: f64,
    #[serde(default)]
    pub wide_bin_fraction: f64,
    #[serde(default = "unit_scale")]
    pub wide_bin_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl ChannelConfig {
    pub fn new(clock_period_ps: f64, plain_bin_count: u32, matrix_order: u32) -> Self {
        Self {
            clock_period_ps,
            plain_bin_count,
            matrix_order,
            fine_bin_count: None,
            seed: 0,
            width_dispersion: 0.0,
            wide_bin_fraction: 0.0,
            wide_bin_scale: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dispersion(mut self, dispersion: f64) -> Self {
        self.width_dispersion = dispersion;
        self
    }

    pub fn with_wide_bins(mut self, fraction: f64, scale: f64) -> Self {
        self.wide_bin_fraction = fraction;
        self.wide_bin_scale = scale;
        self
    }

    pub fn with_fine_bin_count(mut self, n: u32) -> Self {
        self.fine_bin_count = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.clock_period_ps.is_finite() && self.clock_period_ps > 0.0) {
            return bad(format!("clock period {} ps must be finite and positive", self.clock_period_ps));
        }
        if self.plain_bin_count < 2 {
            return bad(format!("plain_bin_count {} must be at least 2", self.plain_bin_count));
        }
        // The successor of the last state must still be distinguishable from
        // state 0 in the 32-state cycle.
        if self.plain_bin_count > GRAY_STATES {
            return bad(format!(
                "plain_bin_count {} exceeds the {GRAY_STATES}-state gray cycle",
                self.plain_bin_count
            ));
        }
        if !SUPPORTED_MATRIX_ORDERS.contains(&self.matrix_order) {
            return bad(format!("matrix_order {} not in {:?}", self.matrix_order, SUPPORTED_MATRIX_ORDERS));
        }
        if let Some(n) = self.fine_bin_count {
            let full = self.plain_bin_count * self.matrix_order;
            let floor = (self.plain_bin_count - 1) * self.matrix_order;
            if n <= floor || n > full {
                return bad(format!("fine_bin_count {n} must lie in ({floor}, {full}]"));
            }
        }
        if !(self.width_dispersion.is_finite() && self.width_dispersion >= 0.0) {
            return bad(format!("width_dispersion {} must be finite and >= 0", self.width_dispersion));
        }
        if !(0.0..1.0).contains(&self.wide_bin_fraction) {
            return bad(format!("wide_bin_fraction {} must lie in [0, 1)", self.wide_bin_fraction));
        }
        if !(self.wide_bin_scale.is_finite() && self.wide_bin_scale >= 1.0) {
            return bad(format!("wide_bin_scale {} must be finite and >= 1", self.wide_bin_scale));
        }
        Ok(())
    }

    /// Total fine bins per clock period (`n`).
    pub fn fine_bins(&self) -> usize {
        self.fine_bin_count
            .unwrap_or(self.plain_bin_count * self.matrix_order) as usize
    }

    /// Ideal fine-bin width `Q = T / n`.
    pub fn ideal_bin_width_ps(&self) -> f64 {
        self.clock_period_ps / self.fine_bins() as f64
    }

    pub fn plain_bin_width_ps(&self) -> f64 {
        self.clock_period_ps / self.plain_bin_count as f64
    }
}

/// Resolution of a sampling-matrix channel: the plain bin width divided by `M`.
pub fn nominal_lsb(cfg: &ChannelConfig) -> f64 {
    nominal_lsb_from_plain(cfg.plain_bin_width_ps(), cfg.matrix_order)
}

pub fn nominal_lsb_from_plain(plain_lsb_ps: f64, matrix_order: u32) -> f64 {
    plain_lsb_ps / matrix_order as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_lsb_table_values() {
        // UltraScale+ plain 158.03 ps, M = 2.
        assert!((nominal_lsb_from_plain(158.03, 2) - 79.015).abs() < 1e-9);
        assert!((nominal_lsb_from_plain(158.03, 2) - 79.01).abs() <= 0.01);
        // Virtex-7 plain 256.41 ps, M = 4.
        assert!((nominal_lsb_from_plain(256.41, 4) - 64.10).abs() <= 0.01);
        assert_eq!(nominal_lsb_from_plain(123.25, 1), 123.25);

        let cfg = ChannelConfig::new(158.03 * 28.0, 28, 2);
        assert!((nominal_lsb(&cfg) - 79.015).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_configs() {
        let ok = ChannelConfig::new(1000.0, 4, 2);
        assert!(ok.validate().is_ok());
        assert!(ChannelConfig { clock_period_ps: 0.0, ..ok }.validate().is_err());
        assert!(ChannelConfig { clock_period_ps: f64::NAN, ..ok }.validate().is_err());
        assert!(ChannelConfig { plain_bin_count: 1, ..ok }.validate().is_err());
        assert!(ChannelConfig { plain_bin_count: 33, ..ok }.validate().is_err());
        assert!(ChannelConfig { matrix_order: 3, ..ok }.validate().is_err());
        assert!(ChannelConfig { matrix_order: 32, ..ok }.validate().is_err());
        assert!(ok.with_dispersion(-0.1).validate().is_err());
        assert!(ok.with_wide_bins(1.0, 2.0).validate().is_err());
        assert!(ok.with_wide_bins(0.1, 0.5).validate().is_err());
        assert!(ok.with_fine_bin_count(6).validate().is_err());
        assert!(ok.with_fine_bin_count(7).validate().is_ok());
        assert!(ok.with_fine_bin_count(9).validate().is_err());
    }
}
