//! Code-density tests: uniform hits, raw histograms, cumulative timestamps and
//! the virtual-bin grid they are compared against.

use std::io::{Read, Write};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{capture_timestamp, BinProfile, ChannelConfig};
use crate::error::{Error, Result};

const DATASET_MAGIC: &[u8; 4] = b"GCOD";
const DATASET_VERSION: u16 = 1;

/// Fine codes of `hit_count` random hits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityDataset {
    pub hit_count: u64,
    pub fine_bins: Vec<u16>,
    pub seed: u64,
    /// Number of fine bins of the channel that produced the codes.
    pub bin_count: u16,
}

impl DensityDataset {
    /// Writes the little-endian binary stream: `"GCOD"`, `u16` version,
    /// `u16` bin count, then one `u16` per hit.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&self.bin_count.to_le_bytes())?;
        for code in &self.fine_bins {
            w.write_all(&code.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a binary stream written by [`write_binary`](Self::write_binary).
    /// The seed is not part of the format and is returned as zero.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let bad = |message: String| Error::Parse { line: 0, message };
        if &header[..4] != DATASET_MAGIC {
            return Err(bad("missing GCOD magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != DATASET_VERSION {
            return Err(bad(format!("unsupported dataset version {version}")));
        }
        let bin_count = u16::from_le_bytes([header[6], header[7]]);
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() % 2 != 0 {
            return Err(bad("truncated fine code".into()));
        }
        let fine_bins: Vec<u16> = body.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        if let Some(&code) = fine_bins.iter().find(|&&c| c == 0 || c > bin_count) {
            return Err(Error::CodeOutOfRange { code: code as usize, n: bin_count as usize });
        }
        Ok(Self { hit_count: fine_bins.len() as u64, fine_bins, seed: 0, bin_count })
    }
}

/// Fine codes of events uniformly distributed over one clock period.
pub struct UniformHits<'a> {
    profile: &'a BinProfile,
    cfg: &'a ChannelConfig,
    rng: ChaCha8Rng,
    remaining: u64,
}

impl<'a> UniformHits<'a> {
    pub fn new(profile: &'a BinProfile, cfg: &'a ChannelConfig, n_hits: u64, seed: u64) -> Self {
        Self { profile, cfg, rng: ChaCha8Rng::seed_from_u64(seed), remaining: n_hits }
    }
}

impl Iterator for UniformHits<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let t = self.rng.random::<f64>() * self.cfg.clock_period_ps;
        // t is finite and nonnegative, so capture cannot fail.
        let rec = capture_timestamp(self.profile, self.cfg, t).ok()?;
        Some(rec.fine_bin)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

/// Runs a code-density test of `n_hits` uniform events.
pub fn generate_uniform_hits(
    profile: &BinProfile,
    cfg: &ChannelConfig,
    n_hits: u64,
    seed: u64,
) -> Result<DensityDataset> {
    if n_hits == 0 {
        return Err(Error::InvalidConfig("a density test needs at least one hit".into()));
    }
    let bin_count = u16::try_from(profile.len())
        .map_err(|_| Error::InvalidConfig(format!("{} bins exceed the 16-bit code space", profile.len())))?;
    let fine_bins = UniformHits::new(profile, cfg, n_hits, seed).map(|k| k as u16).collect();
    Ok(DensityDataset { hit_count: n_hits, fine_bins, seed, bin_count })
}

/// Same hits as [`generate_uniform_hits`] with the same seed, counted without
/// materialising the code list.
pub fn generate_uniform_histogram(
    profile: &BinProfile,
    cfg: &ChannelConfig,
    n_hits: u64,
    seed: u64,
) -> Result<RawHistogram> {
    if n_hits == 0 {
        return Err(Error::InvalidConfig("a density test needs at least one hit".into()));
    }
    let mut counts = vec![0u64; profile.len()];
    for k in UniformHits::new(profile, cfg, n_hits, seed) {
        counts[k - 1] += 1;
    }
    Ok(RawHistogram { counts })
}

/// Hits per raw fine bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHistogram {
    pub counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct HistogramRow {
    bin_index: usize,
    count: u64,
}

impl RawHistogram {
    pub fn zeros(n: usize) -> Self {
        Self { counts: vec![0; n] }
    }

    /// Histogram of a list of 1-based fine codes.
    pub fn from_codes<I>(codes: I, n: usize) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<usize>,
    {
        let mut counts = vec![0u64; n];
        for code in codes {
            let code = code.into();
            if code == 0 || code > n {
                return Err(Error::CodeOutOfRange { code, n });
            }
            counts[code - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds another shard's counts.
    pub fn merge(&mut self, other: &RawHistogram) -> Result<()> {
        if other.n() != self.n() {
            return Err(Error::InvalidConfig(format!("cannot merge {} bins into {}", other.n(), self.n())));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, &count) in self.counts.iter().enumerate() {
            w.serialize(HistogramRow { bin_index: i + 1, count })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut counts = Vec::new();
        for (i, row) in r.deserialize::<HistogramRow>().enumerate() {
            let row = row?;
            if row.bin_index != i + 1 {
                return Err(Error::Parse { line: i as u64 + 2, message: format!("expected bin_index {}", i + 1) });
            }
            counts.push(row.count);
        }
        Ok(Self { counts })
    }
}

pub fn accumulate_raw_histogram(ds: &DensityDataset, n: usize) -> Result<RawHistogram> {
    RawHistogram::from_codes(ds.fine_bins.iter().map(|&c| c as usize), n)
}

/// `T_raw[k]`: hits collected through raw bin `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulativeTimestamps {
    pub t_raw: Vec<u64>,
}

impl CumulativeTimestamps {
    pub fn total(&self) -> u64 {
        self.t_raw.last().copied().unwrap_or(0)
    }

    /// `T_raw[k]` for 1-based `k`, with `T_raw[0] = 0`.
    pub fn at(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.t_raw[k - 1]
        }
    }
}

pub fn cumulative_timestamps(h: &RawHistogram) -> CumulativeTimestamps {
    let t_raw = h
        .counts
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    CumulativeTimestamps { t_raw }
}

/// Uniform target bins that the raw bins are remapped onto.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualBinGrid {
    /// Realized resolution `T / n_vir`.
    pub target_resolution_ps: f64,
    pub n_vir: usize,
    /// Hits of the density test the grid is scaled to (`Ñ`).
    pub hit_count: u64,
    /// `Ñ / n_vir`, kept exact.
    pub hit_vir: Ratio<u64>,
    /// `T_vir[0..=n_vir]`, with the sentinel `T_vir[0] = 0`.
    pub t_vir: Vec<Ratio<u64>>,
}

impl VirtualBinGrid {
    pub fn clock_period_ps(&self) -> f64 {
        self.target_resolution_ps * self.n_vir as f64
    }

    /// True when `t_raw <= T_vir[m]`, compared exactly. `m` may exceed
    /// `n_vir`; the grid is extended linearly.
    pub fn raw_at_or_below(&self, t_raw: u64, m: usize) -> bool {
        u128::from(t_raw) * self.n_vir as u128 <= u128::from(self.hit_count) * m as u128
    }

    /// Virtual bin `m`'s centre on the fine-time axis.
    pub fn bin_center_ps(&self, m: usize) -> f64 {
        (m as f64 - 0.5) * self.target_resolution_ps
    }

    /// The same grid rescaled to a density test of `hit_count` hits.
    pub fn with_hit_count(&self, hit_count: u64) -> Result<Self> {
        build_virtual_grid(hit_count, self.n_vir, self.n_vir, self.clock_period_ps())
    }
}

/// Virtual bins for a requested resolution: `n_vir = round(T / R)`.
pub fn n_vir_for_resolution(clock_period_ps: f64, resolution_ps: f64) -> Result<usize> {
    if !(resolution_ps.is_finite() && resolution_ps > 0.0) {
        return Err(Error::InvalidConfig(format!("resolution {resolution_ps} ps must be positive")));
    }
    Ok(((clock_period_ps / resolution_ps).round() as usize).max(1))
}

pub fn build_virtual_grid(n_hits: u64, n: usize, n_vir: usize, clock_period_ps: f64) -> Result<VirtualBinGrid> {
    if n_vir == 0 {
        return Err(Error::InvalidConfig("n_vir must be at least 1".into()));
    }
    if n_vir > n {
        return Err(Error::ResolutionTooFine { n_vir, n });
    }
    if n_hits == 0 {
        return Err(Error::InvalidConfig("virtual grid needs a nonzero hit count".into()));
    }
    let hit_vir = Ratio::new(n_hits, n_vir as u64);
    let t_vir = (0..=n_vir as u64).map(|m| hit_vir * m).collect();
    Ok(VirtualBinGrid {
        target_resolution_ps: clock_period_ps / n_vir as f64,
        n_vir,
        hit_count: n_hits,
        hit_vir,
        t_vir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_examples() {
        let h = RawHistogram::from_codes([1usize, 1, 2], 2).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(RawHistogram::from_codes(Vec::<usize>::new(), 3).unwrap().counts, vec![0, 0, 0]);
        assert!(matches!(
            RawHistogram::from_codes([1usize, 3], 2),
            Err(Error::CodeOutOfRange { code: 3, n: 2 })
        ));
        assert!(RawHistogram::from_codes([0usize], 2).is_err());
    }

    #[test]
    fn prefix_sums() {
        let t = cumulative_timestamps(&RawHistogram { counts: vec![30, 10, 40, 40] });
        assert_eq!(t.t_raw, vec![30, 40, 80, 120]);
        assert_eq!(cumulative_timestamps(&RawHistogram::zeros(3)).t_raw, vec![0, 0, 0]);
        assert_eq!(cumulative_timestamps(&RawHistogram { counts: vec![77] }).t_raw, vec![77]);
        assert_eq!(t.at(0), 0);
        assert_eq!(t.at(4), 120);
    }

    #[test]
    fn grid_examples() {
        let g = build_virtual_grid(120, 4, 4, 1000.0).unwrap();
        assert_eq!(g.hit_vir, Ratio::from_integer(30));
        let ints: Vec<u64> = g.t_vir.iter().map(|r| r.to_integer()).collect();
        assert_eq!(ints, vec![0, 30, 60, 90, 120]);

        let g = build_virtual_grid(1000, 200, 128, 6410.26).unwrap();
        assert!((g.target_resolution_ps - 50.08).abs() < 0.005);
        let g = build_virtual_grid(1000, 228, 211, 4424.78).unwrap();
        assert!((g.target_resolution_ps - 20.97).abs() < 0.005);

        assert!(matches!(build_virtual_grid(10, 4, 5, 1.0), Err(Error::ResolutionTooFine { n_vir: 5, n: 4 })));
        assert!(build_virtual_grid(10, 4, 0, 1.0).is_err());
    }

    #[test]
    fn inexact_hit_vir_still_ends_at_total() {
        let g = build_virtual_grid(100, 7, 7, 1.0).unwrap();
        assert_eq!(g.hit_vir, Ratio::new(100, 7));
        assert_eq!(g.t_vir[7], Ratio::from_integer(100));
        assert!(g.raw_at_or_below(100, 7));
        assert!(!g.raw_at_or_below(15, 1));
        assert!(g.raw_at_or_below(14, 1));
    }

    #[test]
    fn resolution_to_nvir() {
        assert_eq!(n_vir_for_resolution(6410.26, 50.0).unwrap(), 128);
        assert_eq!(n_vir_for_resolution(4424.78, 21.0).unwrap(), 211);
        assert!(n_vir_for_resolution(1.0, 0.0).is_err());
    }

    #[test]
    fn single_bin_takes_everything() {
        let cfg = ChannelConfig::new(1000.0, 2, 1);
        let p = BinProfile::uniform(1, 1000.0).unwrap();
        let ds = generate_uniform_hits(&p, &cfg, 500, 3).unwrap();
        assert!(ds.fine_bins.iter().all(|&c| c == 1));
        assert!(generate_uniform_hits(&p, &cfg, 0, 3).is_err());
    }

    #[test]
    fn histogram_generator_matches_dataset() {
        let cfg = ChannelConfig::new(1000.0, 4, 2).with_dispersion(0.3).with_seed(4);
        let p = crate::channel::synthesize_bin_profile(&cfg).unwrap();
        let ds = generate_uniform_hits(&p, &cfg, 10_000, 9).unwrap();
        let h = generate_uniform_histogram(&p, &cfg, 10_000, 9).unwrap();
        assert_eq!(accumulate_raw_histogram(&ds, 8).unwrap(), h);
        assert_eq!(generate_uniform_hits(&p, &cfg, 10_000, 9).unwrap(), ds);
    }

    #[test]
    fn binary_roundtrip_and_header() {
        let ds = DensityDataset { hit_count: 3, fine_bins: vec![1, 7, 2], seed: 0, bin_count: 8 };
        let mut buf = Vec::new();
        ds.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"GCOD\x01\x00\x08\x00");
        assert_eq!(&buf[8..], &[1, 0, 7, 0, 2, 0]);
        assert_eq!(DensityDataset::read_binary(buf.as_slice()).unwrap(), ds);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(DensityDataset::read_binary(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[10] = 9;
        assert!(DensityDataset::read_binary(bad.as_slice()).is_err());
    }

    #[test]
    fn histogram_csv_roundtrip() {
        let h = RawHistogram { counts: vec![3, 0, 9] };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "bin_index,count\n1,3\n2,0\n3,9\n");
        assert_eq!(RawHistogram::read_csv(buf.as_slice()).unwrap(), h);
    }

    #[test]
    fn shards_merge_by_addition() {
        let mut a = RawHistogram { counts: vec![1, 2] };
        a.merge(&RawHistogram { counts: vec![3, 4] }).unwrap();
        assert_eq!(a.counts, vec![4, 6]);
        assert!(a.merge(&RawHistogram::zeros(3)).is_err());
    }
}
