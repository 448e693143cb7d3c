use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::config::ChannelConfig;
use crate::error::{Error, Result};

/// Physical widths of a channel's fine bins across one clock period.
///
/// Bin `k` (1-based) covers fine times in `(edge[k-1], edge[k]]`, with
/// `edge[0] = 0` and `edge[n] = total_ps`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinProfile {
    widths_ps: Vec<f64>,
    edges_ps: Vec<f64>,
    total_ps: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    bin_index: usize,
    width_ps: f64,
}

impl BinProfile {
    pub fn from_widths(widths_ps: Vec<f64>) -> Result<Self> {
        if widths_ps.is_empty() {
            return Err(Error::InvalidConfig("bin profile needs at least one bin".into()));
        }
        if let Some((k, w)) = widths_ps
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidConfig(format!("bin {} has nonpositive width {w}", k + 1)));
        }
        let mut edges_ps = Vec::with_capacity(widths_ps.len());
        let mut acc = 0.0;
        for w in &widths_ps {
            acc += w;
            edges_ps.push(acc);
        }
        Ok(Self { widths_ps, edges_ps, total_ps: acc })
    }

    /// Equal-width profile of `n` bins tiling `period_ps`.
    pub fn uniform(n: usize, period_ps: f64) -> Result<Self> {
        Self::from_widths(vec![period_ps / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.widths_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths_ps.is_empty()
    }

    pub fn widths_ps(&self) -> &[f64] {
        &self.widths_ps
    }

    pub fn total_ps(&self) -> f64 {
        self.total_ps
    }

    /// Mean width, `Q = W_total / n`.
    pub fn mean_width_ps(&self) -> f64 {
        self.total_ps / self.len() as f64
    }

    /// Width of 1-based bin `k`.
    pub fn width(&self, k: usize) -> f64 {
        self.widths_ps[k - 1]
    }

    /// Cumulative width through 1-based bin `k`; `edge(0) == 0`.
    pub fn edge(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.edges_ps[k - 1]
        }
    }

    pub fn bin_center_ps(&self, k: usize) -> f64 {
        0.5 * (self.edge(k - 1) + self.edge(k))
    }

    /// Bin containing fine time `tau_ps`: the `k` with
    /// `edge(k-1) < tau <= edge(k)`. Times at or below zero fall in bin 1 and
    /// times past the last edge in bin `n`.
    pub fn fine_bin_of(&self, tau_ps: f64) -> usize {
        let below = self.edges_ps.partition_point(|&e| e < tau_ps);
        (below + 1).min(self.len())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, &width_ps) in self.widths_ps.iter().enumerate() {
            w.serialize(ProfileRow { bin_index: i + 1, width_ps })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut widths = Vec::new();
        for (i, row) in r.deserialize::<ProfileRow>().enumerate() {
            let row = row?;
            if row.bin_index != i + 1 {
                return Err(Error::Parse {
                    line: i as u64 + 2,
                    message: format!("expected bin_index {}, found {}", i + 1, row.bin_index),
                });
            }
            widths.push(row.width_ps);
        }
        Self::from_widths(widths)
    }
}

/// Draws a nonuniform bin profile for `cfg`.
///
/// Widths are gamma distributed with mean `T/n` and coefficient of variation
/// `width_dispersion`; each bin is independently promoted to a wide bin with
/// probability `wide_bin_fraction` and scaled by `wide_bin_scale`. The result
/// is renormalized so the widths tile the clock period.
pub fn synthesize_bin_profile(cfg: &ChannelConfig) -> Result<BinProfile> {
    cfg.validate()?;
    let n = cfg.fine_bins();
    let q = cfg.ideal_bin_width_ps();
    let cv = cfg.width_dispersion;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let gamma = if cv > 0.0 {
        let shape = 1.0 / (cv * cv);
        Some(
            Gamma::new(shape, q / shape)
                .map_err(|e| Error::InvalidConfig(format!("width_dispersion {cv}: {e}")))?,
        )
    } else {
        None
    };

    let mut widths: Vec<f64> = (0..n)
        .map(|_| {
            let mut w = gamma.as_ref().map_or(q, |g| g.sample(&mut rng));
            if cfg.wide_bin_fraction > 0.0 && rng.random::<f64>() < cfg.wide_bin_fraction {
                w *= cfg.wide_bin_scale;
            }
            w
        })
        .collect();

    let sum: f64 = widths.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "dispersion {cv} / scale {} produced a degenerate profile",
            cfg.wide_bin_scale
        )));
    }
    let norm = cfg.clock_period_ps / sum;
    for w in &mut widths {
        *w *= norm;
    }
    BinProfile::from_widths(widths).map_err(|_| {
        Error::InvalidConfig(format!(
            "dispersion {cv} / scale {} forces a nonpositive width",
            cfg.wide_bin_scale
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dispersion_is_uniform() {
        let p = synthesize_bin_profile(&ChannelConfig::new(1000.0, 4, 1)).unwrap();
        assert_eq!(p.widths_ps(), &[250.0, 250.0, 250.0, 250.0]);
        assert_eq!(p.total_ps(), 1000.0);
    }

    #[test]
    fn ultrascale_plus_mean_width() {
        // 228 fine bins at 226 MHz: the last of 29 oscillator states is cut short.
        let cfg = ChannelConfig::new(4424.78, 29, 8)
            .with_fine_bin_count(228)
            .with_dispersion(0.3)
            .with_seed(7);
        let p = synthesize_bin_profile(&cfg).unwrap();
        assert_eq!(p.len(), 228);
        assert!((p.mean_width_ps() - 19.41).abs() < 0.005, "{}", p.mean_width_ps());
    }

    #[test]
    fn seeded_profile_is_reproducible() {
        let cfg = ChannelConfig::new(1000.0, 4, 2).with_dispersion(0.3).with_seed(1);
        let a = synthesize_bin_profile(&cfg).unwrap();
        let b = synthesize_bin_profile(&cfg).unwrap();
        assert_eq!(a.len(), 8);
        assert!(a.widths_ps().iter().all(|&w| w > 0.0));
        assert!((a.total_ps() - 1000.0).abs() < 1e-9 * 1000.0);
        let bits = |p: &BinProfile| p.widths_ps().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = synthesize_bin_profile(&cfg.with_seed(2)).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn wide_bins_raise_the_spread() {
        let base = ChannelConfig::new(4424.78, 28, 8).with_dispersion(0.2).with_seed(3);
        let narrow = synthesize_bin_profile(&base).unwrap();
        let wide = synthesize_bin_profile(&base.with_wide_bins(0.1, 4.0)).unwrap();
        let max = |p: &BinProfile| p.widths_ps().iter().cloned().fold(0.0, f64::max) / p.mean_width_ps();
        assert!(max(&wide) > max(&narrow));
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let cfg = ChannelConfig::new(1000.0, 4, 2);
        assert!(synthesize_bin_profile(&cfg.with_dispersion(f64::INFINITY)).is_err());
        assert!(synthesize_bin_profile(&cfg.with_wide_bins(0.5, 0.0)).is_err());
        // Shape 1/cv^2 this small underflows most samples to zero.
        assert!(synthesize_bin_profile(&cfg.with_dispersion(1e6).with_seed(9)).is_err());
        assert!(BinProfile::from_widths(vec![1.0, 0.0]).is_err());
        assert!(BinProfile::from_widths(vec![]).is_err());
    }

    #[test]
    fn bracketing_is_closed_above() {
        let p = BinProfile::uniform(4, 1000.0).unwrap();
        assert_eq!(p.fine_bin_of(260.0), 2);
        assert_eq!(p.fine_bin_of(250.0), 1);
        assert_eq!(p.fine_bin_of(250.000001), 2);
        assert_eq!(p.fine_bin_of(1000.0), 4);
        assert_eq!(p.fine_bin_of(1e-9), 1);
        assert_eq!(p.fine_bin_of(2000.0), 4);
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let cfg = ChannelConfig::new(6410.26, 25, 8).with_dispersion(0.4).with_seed(11);
        let p = synthesize_bin_profile(&cfg).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("bin_index,width_ps\n1,"));
        let back = BinProfile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "bin_index,width_ps\n1,2.0\n3,4.0\n";
        assert!(matches!(BinProfile::read_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}
