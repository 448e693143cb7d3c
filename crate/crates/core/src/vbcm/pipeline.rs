use serde::{Deserialize, Serialize};

use super::calibration::{accumulate_compensated_histogram, compute_width_calibration, CalibrationTable, Rounding};
use super::compensation::{compute_compensation, CompensationTable};
use super::measurement::{
    apply_measurement, apply_measurement_exact, scatter_exact, scatter_fixed, CalibratedHistogram, ExactHistogram,
};
use crate::channel::{BinProfile, ChannelConfig};
use crate::density::{
    build_virtual_grid, cumulative_timestamps, generate_uniform_histogram, CumulativeTimestamps, RawHistogram, VirtualBinGrid,
};
use crate::error::{Error, Result};

/// Parameters of one two-pass calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPlan {
    pub n_vir: usize,
    pub hits_pass1: u64,
    pub hits_pass2: u64,
    pub fraction_bits: u32,
    #[serde(default)]
    pub rounding: Rounding,
    pub seed_pass1: u64,
    pub seed_pass2: u64,
}

/// Both tables for one channel at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCalibration {
    /// Grid scaled to the first-pass hit count.
    pub grid: VirtualBinGrid,
    pub compensation: CompensationTable,
    pub calibration: CalibrationTable,
    /// First-pass cumulative timestamps, kept for per-code time estimates.
    pub t_raw: CumulativeTimestamps,
}

impl ChannelCalibration {
    pub fn n_vir(&self) -> usize {
        self.grid.n_vir
    }

    pub fn measure<I>(&self, hits: I) -> Result<CalibratedHistogram>
    where
        I: IntoIterator,
        I::Item: Into<usize>,
    {
        apply_measurement(hits, &self.compensation, &self.calibration)
    }

    pub fn measure_exact<I>(&self, hits: I) -> Result<ExactHistogram>
    where
        I: IntoIterator,
        I::Item: Into<usize>,
    {
        apply_measurement_exact(hits, &self.compensation, &self.calibration)
    }

    /// Fixed-point measurement of hits already counted per raw bin.
    pub fn measure_histogram(&self, raw: &RawHistogram) -> Result<CalibratedHistogram> {
        if raw.n() != self.compensation.n {
            return Err(Error::InvalidConfig(format!(
                "histogram has {} bins, tables expect {}",
                raw.n(),
                self.compensation.n
            )));
        }
        let rows = (1..=self.compensation.n).map(|k| (self.compensation.addresses(k), self.calibration.fixed(k)));
        let accumulators = scatter_fixed(&raw.counts, rows, self.n_vir())?;
        Ok(CalibratedHistogram { accumulators, fraction_bits: self.calibration.fraction_bits })
    }

    /// Exact-weight measurement of hits already counted per raw bin.
    pub fn measure_histogram_exact(&self, raw: &RawHistogram) -> Result<ExactHistogram> {
        if raw.n() != self.compensation.n {
            return Err(Error::InvalidConfig(format!(
                "histogram has {} bins, tables expect {}",
                raw.n(),
                self.compensation.n
            )));
        }
        Ok(ExactHistogram { bins: scatter_exact(&raw.counts, &self.compensation, &self.calibration) })
    }

    /// Virtual bin reported for a single hit with raw code `k`: the one
    /// containing the midpoint of raw bin `k` on the cumulative-hit axis.
    pub fn virtual_code(&self, k: usize) -> usize {
        let lo = self.t_raw.at(k - 1);
        let twice_mid = u128::from(lo) + u128::from(self.t_raw.at(k));
        let n_vir = self.n_vir() as u128;
        let denom = 2 * u128::from(self.grid.hit_count);
        (twice_mid * n_vir).div_ceil(denom).clamp(1, n_vir) as usize
    }

    /// Calibrated fine-time estimate for raw code `k`: the centre of its
    /// virtual bin.
    pub fn fine_time_estimate_ps(&self, k: usize) -> f64 {
        self.grid.bin_center_ps(self.virtual_code(k))
    }
}

/// Builds both tables from two density-test histograms.
///
/// Passing the same histogram twice is the replay mode used to check exact
/// conservation.
pub fn calibrate_from_histograms(
    pass1: &RawHistogram,
    pass2: &RawHistogram,
    n_vir: usize,
    clock_period_ps: f64,
    fraction_bits: u32,
    rounding: Rounding,
) -> Result<ChannelCalibration> {
    let n = pass1.n();
    if pass2.n() != n {
        return Err(Error::InvalidConfig(format!("pass histograms have {n} and {} bins", pass2.n())));
    }
    let grid = build_virtual_grid(pass1.total(), n, n_vir, clock_period_ps)?;
    let t_raw = cumulative_timestamps(pass1);
    let compensation = compute_compensation(&t_raw, &grid)?;
    let hit_com = accumulate_compensated_histogram(pass2, &compensation)?;
    let grid2 = grid.with_hit_count(pass2.total())?;
    let calibration = compute_width_calibration(&hit_com, &compensation, &grid2, fraction_bits, rounding)?;
    Ok(ChannelCalibration { grid, compensation, calibration, t_raw })
}

/// Full two-pass calibration of a simulated channel.
pub fn calibrate_channel(profile: &BinProfile, cfg: &ChannelConfig, plan: &CalibrationPlan) -> Result<ChannelCalibration> {
    let n = profile.len();
    if plan.n_vir == 0 {
        return Err(Error::InvalidConfig("n_vir must be at least 1".into()));
    }
    if plan.n_vir > n {
        return Err(Error::ResolutionTooFine { n_vir: plan.n_vir, n });
    }
    let pass1 = generate_uniform_histogram(profile, cfg, plan.hits_pass1, plan.seed_pass1)?;
    let pass2 = generate_uniform_histogram(profile, cfg, plan.hits_pass2, plan.seed_pass2)?;
    calibrate_from_histograms(&pass1, &pass2, plan.n_vir, cfg.clock_period_ps, plan.fraction_bits, plan.rounding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn replay_worked_example() {
        let h = RawHistogram { counts: vec![30, 10, 40, 40] };
        let cal = calibrate_from_histograms(&h, &h, 4, 1000.0, 5, Rounding::Floor).unwrap();
        let exact = cal.measure_histogram_exact(&h).unwrap();
        assert!(exact.bins.iter().all(|b| *b == Ratio::from_integer(30)));
        let fixed = cal.measure_histogram(&h).unwrap();
        assert_eq!(fixed.accumulators, vec![900, 960, 960, 960]);
    }

    #[test]
    fn virtual_codes_of_worked_example() {
        let h = RawHistogram { counts: vec![30, 10, 40, 40] };
        let cal = calibrate_from_histograms(&h, &h, 4, 1000.0, 5, Rounding::Floor).unwrap();
        // Midpoints 15, 35, 60, 100 against a 30-hit grid.
        let codes: Vec<usize> = (1..=4).map(|k| cal.virtual_code(k)).collect();
        assert_eq!(codes, vec![1, 2, 2, 4]);
        assert_eq!(cal.fine_time_estimate_ps(1), 125.0);
    }

    #[test]
    fn rejects_too_fine_before_testing() {
        let cfg = ChannelConfig::new(1000.0, 4, 1);
        let p = BinProfile::uniform(4, 1000.0).unwrap();
        let plan = CalibrationPlan {
            n_vir: 5,
            hits_pass1: 100,
            hits_pass2: 100,
            fraction_bits: 5,
            rounding: Rounding::Floor,
            seed_pass1: 1,
            seed_pass2: 2,
        };
        assert!(matches!(calibrate_channel(&p, &cfg, &plan), Err(Error::ResolutionTooFine { n_vir: 5, n: 4 })));
    }
}
