use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::{derive_seed, PASS_CALIBRATION_1, PASS_CALIBRATION_2, PASS_EVALUATION, PASS_INTERVAL_BASE};
use crate::channel::{capture_timestamp, synthesize_bin_profile, BinProfile, ChannelConfig};
use crate::density::{generate_uniform_histogram, RawHistogram};
use crate::error::{Error, Result};
use crate::metrics::{linearity_from_histogram, linearity_from_widths, LinearityReport, LinearitySummary, RmsReport};
use crate::vbcm::{calibrate_from_histograms, CcTable, ChannelCalibration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSeeds {
    pub profile: u64,
    pub pass1: u64,
    pub pass2: u64,
    pub eval: u64,
}

/// A synthesized channel with its three density tests already run.
#[derive(Debug, Clone)]
pub struct ChannelData {
    pub index: usize,
    pub config: ChannelConfig,
    pub profile: BinProfile,
    pub seeds: ChannelSeeds,
    pub pass1: RawHistogram,
    pub pass2: RawHistogram,
    pub eval: RawHistogram,
}

impl ChannelData {
    pub fn period_ps(&self) -> f64 {
        self.config.clock_period_ps
    }

    pub fn n(&self) -> usize {
        self.profile.len()
    }

    pub fn calibrate(&self, n_vir: usize, mbar: u32, cfg: &ExperimentConfig) -> Result<ChannelCalibration> {
        calibrate_from_histograms(&self.pass1, &self.pass2, n_vir, self.period_ps(), mbar, cfg.rounding)
    }

    /// Linearity of the fresh evaluation hits after calibration.
    pub fn evaluate(&self, cal: &ChannelCalibration, exact: bool) -> Result<LinearityReport> {
        let counts = if exact {
            cal.measure_histogram_exact(&self.eval)?.counts()
        } else {
            cal.measure_histogram(&self.eval)?.counts()
        };
        linearity_from_histogram(&counts, self.period_ps())
    }

    pub fn raw_linearity(&self) -> Result<LinearityReport> {
        let counts: Vec<f64> = self.eval.counts.iter().map(|&c| c as f64).collect();
        linearity_from_histogram(&counts, self.period_ps())
    }
}

/// Synthesizes channel `index` (1-based) and runs its density tests.
pub fn prepare_channel(cfg: &ExperimentConfig, index: usize) -> Result<ChannelData> {
    let config = cfg.channel_config(index);
    let seeds = ChannelSeeds {
        profile: config.seed,
        pass1: derive_seed(cfg.master_seed, index, PASS_CALIBRATION_1),
        pass2: derive_seed(cfg.master_seed, index, PASS_CALIBRATION_2),
        eval: derive_seed(cfg.master_seed, index, PASS_EVALUATION),
    };
    let profile = synthesize_bin_profile(&config)?;
    let pass1 = generate_uniform_histogram(&profile, &config, cfg.hits_pass1, seeds.pass1)?;
    let pass2 = generate_uniform_histogram(&profile, &config, cfg.hits_pass2, seeds.pass2)?;
    let eval = generate_uniform_histogram(&profile, &config, cfg.hits_eval, seeds.eval)?;
    Ok(ChannelData { index, config, profile, seeds, pass1, pass2, eval })
}

fn channel_indices(cfg: &ExperimentConfig) -> Vec<usize> {
    (1..=cfg.channel_count).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileOutcome {
    pub channel: usize,
    pub seed: u64,
    pub n: usize,
    pub widths: LinearitySummary,
    #[serde(skip)]
    pub profile: BinProfile,
}

/// Synthesizes every channel's bin profile.
pub fn run_profiles(cfg: &ExperimentConfig) -> Result<Vec<ProfileOutcome>> {
    cfg.validate()?;
    channel_indices(cfg)
        .into_par_iter()
        .map(|c| {
            let config = cfg.channel_config(c);
            let profile = synthesize_bin_profile(&config)?;
            Ok(ProfileOutcome {
                channel: c,
                seed: config.seed,
                n: profile.len(),
                widths: linearity_from_widths(profile.widths_ps())?.summary(),
                profile,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrateOutcome {
    pub channel: usize,
    pub n_vir: usize,
    pub mbar: u32,
    pub coverage_warnings: Vec<usize>,
    pub seeds: ChannelSeeds,
    #[serde(skip)]
    pub table: CcTable,
}

/// Builds the run-time table for every channel and target. Stops at the first
/// failure in configuration order.
pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<Vec<CalibrateOutcome>> {
    cfg.validate()?;
    let targets = cfg.resolution_targets()?;
    let per_channel: Vec<Result<Vec<CalibrateOutcome>>> = channel_indices(cfg)
        .into_par_iter()
        .map(|c| {
            let config = cfg.channel_config(c);
            let profile = synthesize_bin_profile(&config)?;
            let seeds = ChannelSeeds {
                profile: config.seed,
                pass1: derive_seed(cfg.master_seed, c, PASS_CALIBRATION_1),
                pass2: derive_seed(cfg.master_seed, c, PASS_CALIBRATION_2),
                eval: derive_seed(cfg.master_seed, c, PASS_EVALUATION),
            };
            if let Some(&(n_vir, _)) = targets.iter().find(|t| t.0 > profile.len()) {
                return Err(Error::ResolutionTooFine { n_vir, n: profile.len() });
            }
            let pass1 = generate_uniform_histogram(&profile, &config, cfg.hits_pass1, seeds.pass1)?;
            let pass2 = generate_uniform_histogram(&profile, &config, cfg.hits_pass2, seeds.pass2)?;
            targets
                .iter()
                .map(|&(n_vir, _)| {
                    let cal = calibrate_from_histograms(&pass1, &pass2, n_vir, config.clock_period_ps, cfg.mbar, cfg.rounding)?;
                    Ok(CalibrateOutcome {
                        channel: c,
                        n_vir,
                        mbar: cfg.mbar,
                        coverage_warnings: cal.compensation.warnings.iter().map(|w| w.raw_bin).collect(),
                        seeds,
                        table: CcTable::new(&cal.compensation, &cal.calibration)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_channel {
        out.extend(r?);
    }
    Ok(out)
}

/// One line of the M̄ study. `mbar` is empty for the exact-weight row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbarRow {
    pub mbar: Option<u32>,
    pub dnl_pk_pk: Option<f64>,
    pub inl_pk_pk: Option<f64>,
    pub seed_pass1: u64,
    pub seed_pass2: u64,
    pub seed_eval: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MbarSweep {
    pub channel: usize,
    pub n: usize,
    pub raw: LinearitySummary,
    pub rows: Vec<MbarRow>,
}

/// Fraction-bit study on channel 1 with `n_vir = n`. Calibration and
/// evaluation hits are shared by all rows.
pub fn run_mbar_sweep(cfg: &ExperimentConfig) -> Result<MbarSweep> {
    cfg.validate()?;
    let ch = prepare_channel(cfg, 1)?;
    let mut modes: Vec<Option<u32>> = cfg.mbar_values.iter().map(|&m| Some(m)).collect();
    if cfg.exact {
        modes.push(None);
    }
    let rows = modes
        .into_par_iter()
        .map(|mode| {
            let result = ch
                .calibrate(ch.n(), mode.unwrap_or(cfg.mbar), cfg)
                .and_then(|cal| ch.evaluate(&cal, mode.is_none()));
            let (dnl, inl, error) = match result {
                Ok(r) => (Some(r.dnl_pk_pk), Some(r.inl_pk_pk), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            MbarRow {
                mbar: mode,
                dnl_pk_pk: dnl,
                inl_pk_pk: inl,
                seed_pass1: ch.seeds.pass1,
                seed_pass2: ch.seeds.pass2,
                seed_eval: ch.seeds.eval,
                error,
            }
        })
        .collect();
    Ok(MbarSweep { channel: 1, n: ch.n(), raw: ch.raw_linearity()?.summary(), rows })
}

/// One line of the resolution study; the first row of a sweep is the raw TDC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub label: String,
    pub n_vir: usize,
    pub requested_ps: Option<f64>,
    pub lsb_ps: Option<f64>,
    pub dnl_pk_pk: Option<f64>,
    pub sigma_dnl: Option<f64>,
    pub inl_pk_pk: Option<f64>,
    pub sigma_inl: Option<f64>,
    pub omega_eq_ps: Option<f64>,
    pub sigma_eq_lsb: Option<f64>,
    pub coverage_warnings: usize,
    pub seed_pass1: u64,
    pub seed_pass2: u64,
    pub seed_eval: u64,
    pub error: Option<String>,
}

impl ResolutionRow {
    fn new(label: String, n_vir: usize, requested_ps: Option<f64>, seeds: ChannelSeeds) -> Self {
        Self {
            label,
            n_vir,
            requested_ps,
            lsb_ps: None,
            dnl_pk_pk: None,
            sigma_dnl: None,
            inl_pk_pk: None,
            sigma_inl: None,
            omega_eq_ps: None,
            sigma_eq_lsb: None,
            coverage_warnings: 0,
            seed_pass1: seeds.pass1,
            seed_pass2: seeds.pass2,
            seed_eval: seeds.eval,
            error: None,
        }
    }

    fn fill(&mut self, r: &LinearityReport) {
        self.lsb_ps = Some(r.lsb_ps);
        self.dnl_pk_pk = Some(r.dnl_pk_pk);
        self.sigma_dnl = Some(r.sigma_dnl);
        self.inl_pk_pk = Some(r.inl_pk_pk);
        self.sigma_inl = Some(r.sigma_inl);
        self.omega_eq_ps = Some(r.omega_eq_ps);
        self.sigma_eq_lsb = Some(r.sigma_eq_lsb);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionSweep {
    pub channel: usize,
    pub mbar: u32,
    pub exact: bool,
    pub rows: Vec<ResolutionRow>,
    /// Full reports keyed by row label, for rows that succeeded.
    #[serde(skip)]
    pub reports: Vec<(String, LinearityReport)>,
}

fn resolution_label(n_vir: usize) -> String {
    format!("nvir{n_vir}")
}

/// Raw and calibrated linearity of channel 1 at every configured resolution.
pub fn run_resolution_sweep(cfg: &ExperimentConfig) -> Result<ResolutionSweep> {
    cfg.validate()?;
    let targets = cfg.resolution_targets()?;
    let ch = prepare_channel(cfg, 1)?;
    let raw = ch.raw_linearity()?;
    let mut raw_row = ResolutionRow::new("raw".into(), ch.n(), None, ch.seeds);
    raw_row.fill(&raw);

    let calibrated: Vec<(ResolutionRow, Option<LinearityReport>)> = targets
        .into_par_iter()
        .map(|(n_vir, requested)| {
            let mut row = ResolutionRow::new(resolution_label(n_vir), n_vir, requested, ch.seeds);
            let result = ch.calibrate(n_vir, cfg.mbar, cfg).and_then(|cal| {
                row.coverage_warnings = cal.compensation.warnings.len();
                ch.evaluate(&cal, cfg.exact)
            });
            match result {
                Ok(r) => {
                    row.fill(&r);
                    (row, Some(r))
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect();

    let mut rows = vec![raw_row];
    let mut reports = vec![("raw".to_string(), raw)];
    for (row, report) in calibrated {
        if let Some(r) = report {
            reports.push((row.label.clone(), r));
        }
        rows.push(row);
    }
    Ok(ResolutionSweep { channel: 1, mbar: cfg.mbar, exact: cfg.exact, rows, reports })
}

/// Summary line of the interval tests at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub n_vir: usize,
    pub lsb_ps: f64,
    pub sigma_valid_ps: Option<f64>,
    pub sigma_valid_lsb: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalTestResult {
    pub channel: usize,
    pub jitter_ps: f64,
    pub delays_ps: Vec<f64>,
    pub rows: Vec<IntervalRow>,
    /// Per-interval statistics in ps, parallel to `rows`.
    pub reports: Vec<Option<RmsReport>>,
}

/// Repeated measurements of `H` fixed delays on channel 1 at each resolution.
///
/// Each shot starts at a random phase, taken as exact, and ends at the
/// delayed (and optionally jittered) stop event, which the channel captures.
/// The fine part of the stop timestamp is the centre of the calibrated
/// virtual bin.
pub fn run_interval_tests(cfg: &ExperimentConfig) -> Result<IntervalTestResult> {
    cfg.validate()?;
    let targets = cfg.resolution_targets()?;
    let it = cfg.interval_test;
    let ch = prepare_channel(cfg, 1)?;
    let period = ch.period_ps();
    let delays_ps: Vec<f64> = (1..=it.intervals).map(|i| i as f64 * period / (it.intervals + 1) as f64).collect();

    let results: Vec<(IntervalRow, Option<RmsReport>)> = targets
        .into_par_iter()
        .enumerate()
        .map(|(i, (n_vir, _))| {
            let seed = derive_seed(cfg.master_seed, 1, PASS_INTERVAL_BASE + i as u64);
            let lsb_ps = period / n_vir as f64;
            let result = ch.calibrate(n_vir, cfg.mbar, cfg).and_then(|cal| {
                let groups = interval_shots(&ch, &cal, &delays_ps, it.shots, it.jitter_ps, seed)?;
                RmsReport::from_groups(&groups)
            });
            let mut row = IntervalRow { n_vir, lsb_ps, sigma_valid_ps: None, sigma_valid_lsb: None, seed, error: None };
            match result {
                Ok(r) => {
                    row.sigma_valid_ps = Some(r.sigma_valid);
                    row.sigma_valid_lsb = Some(r.sigma_valid / lsb_ps);
                    (row, Some(r))
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect();
    let (rows, reports) = results.into_iter().unzip();
    Ok(IntervalTestResult { channel: 1, jitter_ps: it.jitter_ps, delays_ps, rows, reports })
}

fn interval_shots(
    ch: &ChannelData,
    cal: &ChannelCalibration,
    delays_ps: &[f64],
    shots: usize,
    jitter_ps: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let period = ch.period_ps();
    let jitter = Normal::new(0.0, jitter_ps).map_err(|e| Error::InvalidConfig(format!("jitter: {e}")))?;
    let fine_estimate: Vec<f64> = (1..=ch.n()).map(|k| cal.fine_time_estimate_ps(k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    delays_ps
        .iter()
        .map(|&d| {
            (0..shots)
                .map(|_| {
                    // Start one period in so jitter cannot push the stop below zero.
                    let start = period * (1.0 + rng.random::<f64>());
                    let stop = start + d + jitter.sample(&mut rng);
                    let rec = capture_timestamp(&ch.profile, &ch.config, stop)?;
                    let stop_est = (rec.coarse_code + 1) as f64 * period - fine_estimate[rec.fine_bin - 1];
                    Ok(stop_est - start)
                })
                .collect()
        })
        .collect()
}

/// One channel at one resolution in the multichannel run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultichannelCell {
    pub channel: usize,
    pub n_vir: usize,
    pub dnl_pk_pk: Option<f64>,
    pub inl_pk_pk: Option<f64>,
    pub seed_profile: u64,
    pub seed_pass1: u64,
    pub seed_pass2: u64,
    pub seed_eval: u64,
    pub error: Option<String>,
}

/// Calibrated DNL of every channel at one resolution, with their average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultichannelRow {
    pub n_vir: usize,
    pub requested_ps: Option<f64>,
    pub dnl_pk_pk: Vec<Option<f64>>,
    pub average: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultichannelResult {
    pub channel_count: usize,
    pub mbar: u32,
    pub rows: Vec<MultichannelRow>,
    pub cells: Vec<MultichannelCell>,
}

/// Independent channels, each calibrated and evaluated at every resolution.
/// A failing channel is reported in place.
pub fn run_multichannel(cfg: &ExperimentConfig) -> Result<MultichannelResult> {
    cfg.validate()?;
    let targets = cfg.resolution_targets()?;
    let per_channel: Vec<Vec<MultichannelCell>> = channel_indices(cfg)
        .into_par_iter()
        .map(|c| {
            let blank = |n_vir: usize, error: Option<String>| MultichannelCell {
                channel: c,
                n_vir,
                dnl_pk_pk: None,
                inl_pk_pk: None,
                seed_profile: derive_seed(cfg.master_seed, c, super::PASS_PROFILE),
                seed_pass1: derive_seed(cfg.master_seed, c, PASS_CALIBRATION_1),
                seed_pass2: derive_seed(cfg.master_seed, c, PASS_CALIBRATION_2),
                seed_eval: derive_seed(cfg.master_seed, c, PASS_EVALUATION),
                error,
            };
            let ch = match prepare_channel(cfg, c) {
                Ok(ch) => ch,
                Err(e) => return targets.iter().map(|t| blank(t.0, Some(e.to_string()))).collect(),
            };
            targets
                .iter()
                .map(|&(n_vir, _)| {
                    let mut cell = blank(n_vir, None);
                    match ch.calibrate(n_vir, cfg.mbar, cfg).and_then(|cal| ch.evaluate(&cal, cfg.exact)) {
                        Ok(r) => {
                            cell.dnl_pk_pk = Some(r.dnl_pk_pk);
                            cell.inl_pk_pk = Some(r.inl_pk_pk);
                        }
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                    cell
                })
                .collect()
        })
        .collect();

    let rows = targets
        .iter()
        .enumerate()
        .map(|(i, &(n_vir, requested_ps))| {
            let dnl: Vec<Option<f64>> = per_channel.iter().map(|cells| cells[i].dnl_pk_pk).collect();
            let ok: Vec<f64> = dnl.iter().flatten().copied().collect();
            let average = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            MultichannelRow { n_vir, requested_ps, dnl_pk_pk: dnl, average }
        })
        .collect();
    Ok(MultichannelResult {
        channel_count: cfg.channel_count,
        mbar: cfg.mbar,
        rows,
        cells: per_channel.into_iter().flatten().collect(),
    })
}
