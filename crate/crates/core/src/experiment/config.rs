use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::density::n_vir_for_resolution;
use crate::error::{Error, Result};
use crate::vbcm::Rounding;

/// Clock period of the 226 MHz devices.
pub const PERIOD_226MHZ_PS: f64 = 4424.78;
/// Clock period of the 156 MHz devices.
pub const PERIOD_156MHZ_PS: f64 = 6410.26;

const DEFAULT_HITS: u64 = 10_000_000;

/// Settings for the time-interval tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalTestConfig {
    /// Number of programmed delays `H`, spread evenly inside one period.
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    /// Shots per delay `N_T`.
    #[serde(default = "default_shots")]
    pub shots: usize,
    /// Standard deviation of the Gaussian jitter on the stop event.
    #[serde(default)]
    pub jitter_ps: f64,
}

fn default_intervals() -> usize {
    20
}

fn default_shots() -> usize {
    10_000
}

impl Default for IntervalTestConfig {
    fn default() -> Self {
        Self { intervals: default_intervals(), shots: default_shots(), jitter_ps: 0.0 }
    }
}

/// One JSON document describing a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Template for every channel. Its `seed` is replaced by a per-channel
    /// seed derived from `master_seed`.
    pub channel: ChannelConfig,
    #[serde(default = "one")]
    pub channel_count: usize,
    /// Requested resolutions; each becomes `n_vir = round(T / R)`.
    #[serde(default)]
    pub resolutions_ps: Vec<f64>,
    /// Virtual bin counts given directly, after the resolution-derived ones.
    #[serde(default)]
    pub n_vir: Vec<usize>,
    #[serde(default = "default_mbar_values")]
    pub mbar_values: Vec<u32>,
    /// Fraction bits used outside the M̄ sweep.
    #[serde(default = "default_mbar")]
    pub mbar: u32,
    #[serde(default = "default_hits")]
    pub hits_pass1: u64,
    #[serde(default = "default_hits")]
    pub hits_pass2: u64,
    #[serde(default = "default_hits")]
    pub hits_eval: u64,
    #[serde(default)]
    pub interval_test: IntervalTestConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Measure with exact rational weights instead of fixed point.
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub rounding: Rounding,
}

fn one() -> usize {
    1
}

fn default_mbar_values() -> Vec<u32> {
    (1..=6).collect()
}

fn default_mbar() -> u32 {
    5
}

fn default_hits() -> u64 {
    DEFAULT_HITS
}

impl ExperimentConfig {
    pub fn new(channel: ChannelConfig) -> Self {
        Self {
            channel,
            channel_count: 1,
            resolutions_ps: Vec::new(),
            n_vir: Vec::new(),
            mbar_values: default_mbar_values(),
            mbar: default_mbar(),
            hits_pass1: DEFAULT_HITS,
            hits_pass2: DEFAULT_HITS,
            hits_eval: DEFAULT_HITS,
            interval_test: IntervalTestConfig::default(),
            master_seed: 0,
            output_dir: None,
            exact: false,
            rounding: Rounding::Floor,
        }
    }

    /// Plain 226 MHz preset: 29 oscillator states, order-8 matrix, 228 bins.
    pub fn preset_226mhz() -> Self {
        let ch = ChannelConfig::new(PERIOD_226MHZ_PS, 29, 8).with_fine_bin_count(228).with_dispersion(0.3);
        Self { resolutions_ps: vec![20.0, 30.0, 40.0, 50.0], ..Self::new(ch) }
    }

    /// Plain 156 MHz preset: 23 oscillator states, order-8 matrix, 181 bins.
    pub fn preset_156mhz() -> Self {
        let ch = ChannelConfig::new(PERIOD_156MHZ_PS, 23, 8).with_fine_bin_count(181).with_dispersion(0.3);
        Self { resolutions_ps: vec![36.0, 40.0, 50.0, 60.0], ..Self::new(ch) }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialization, the input to the provenance hash.
    pub fn canonical_json(&self) -> String {
        // Struct fields serialize in declaration order, so this is stable.
        serde_json::to_string(self).expect("config serializes")
    }

    /// Configuration of channel `index` (1-based): the template with its
    /// derived seed.
    pub fn channel_config(&self, index: usize) -> ChannelConfig {
        self.channel.with_seed(super::derive_seed(self.master_seed, index, super::PASS_PROFILE))
    }

    /// Virtual bin counts requested, with the resolution they came from.
    pub fn resolution_targets(&self) -> Result<Vec<(usize, Option<f64>)>> {
        let mut out = Vec::new();
        for &r in &self.resolutions_ps {
            out.push((n_vir_for_resolution(self.channel.clock_period_ps, r)?, Some(r)));
        }
        for &m in &self.n_vir {
            if m == 0 {
                return Err(Error::InvalidConfig("n_vir entries must be at least 1".into()));
            }
            out.push((m, None));
        }
        if out.is_empty() {
            out.push((self.channel.fine_bins(), None));
        }
        Ok(out)
    }

    /// Checks the configuration; returns warnings that do not stop a run.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.channel.validate()?;
        if self.channel_count == 0 {
            return Err(Error::InvalidConfig("channel_count must be at least 1".into()));
        }
        if self.mbar_values.is_empty() {
            return Err(Error::InvalidConfig("mbar_values is empty".into()));
        }
        for &m in self.mbar_values.iter().chain([&self.mbar]) {
            if !(1..=12).contains(&m) {
                return Err(Error::InvalidConfig(format!("mbar {m} outside [1, 12]")));
            }
        }
        let it = &self.interval_test;
        if it.intervals == 0 {
            return Err(Error::InvalidConfig("interval_test.intervals must be at least 1".into()));
        }
        if it.shots < 2 {
            return Err(Error::InvalidConfig(format!("interval_test.shots = {} leaves sigma undefined", it.shots)));
        }
        if !(it.jitter_ps.is_finite() && it.jitter_ps >= 0.0) {
            return Err(Error::InvalidConfig(format!("jitter_ps = {}", it.jitter_ps)));
        }
        self.resolution_targets()?;

        // The raw TDC has the most bins any valid configuration can ask for.
        let n = self.channel.fine_bins() as u64;
        let mut warnings = Vec::new();
        for (name, hits) in [("hits_pass1", self.hits_pass1), ("hits_pass2", self.hits_pass2), ("hits_eval", self.hits_eval)] {
            if hits < 10 * n {
                return Err(Error::InvalidConfig(format!("{name} = {hits} is below 10 hits per bin ({n} bins)")));
            }
            if hits < 100 * n {
                warnings.push(format!("{name} = {hits} gives fewer than 100 hits per bin; expect noisy results"));
            }
        }
        Ok(warnings)
    }
}
