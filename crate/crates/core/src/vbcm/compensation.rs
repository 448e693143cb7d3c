use serde::Serialize;

use crate::density::{CumulativeTimestamps, VirtualBinGrid};
use crate::error::{Error, Result};

/// A raw bin that ends more than three virtual bins past its start point, so
/// some virtual bins it covers get no address of their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverageWarning {
    pub raw_bin: usize,
}

/// Per-raw-bin virtual addresses `(Addr_l, Addr_m, Addr_r)`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompensationTable {
    pub addr_l: Vec<u32>,
    pub addr_m: Vec<u32>,
    pub addr_r: Vec<u32>,
    pub n: usize,
    pub n_vir: usize,
    pub warnings: Vec<CoverageWarning>,
}

impl CompensationTable {
    /// Addresses of 1-based raw bin `k`.
    pub fn addresses(&self, k: usize) -> [usize; 3] {
        let i = k - 1;
        [self.addr_l[i] as usize, self.addr_m[i] as usize, self.addr_r[i] as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (1..=self.n).map(|k| self.addresses(k))
    }

    /// True when no raw bin overran the three-address window.
    pub fn is_missing_bin_free(&self) -> bool {
        self.warnings.is_empty()
    }

    /// Virtual bins (1-based) that no raw bin addresses.
    pub fn unaddressed(&self) -> Vec<usize> {
        let mut hit = vec![false; self.n_vir];
        for a in self.iter().flatten() {
            hit[a - 1] = true;
        }
        (1..=self.n_vir).filter(|&m| !hit[m - 1]).collect()
    }
}

/// Assigns virtual addresses to each raw bin.
///
/// For raw bin `k`, `start` is the largest address of bin `k-1` (0 for the
/// first bin, where `T_vir[0] = 0`). Depending on how far `T_raw[k]` reaches
/// past `T_vir[start]` the addresses are `(s, s, s)`, `(s, s+1, s+1)`,
/// `(s, s+1, s+2)` or `(s+1, s+2, s+3)`, then clamped to `[1, n_vir]`. The
/// last case raises a [`CoverageWarning`] when the bin also runs past
/// `T_vir[s+3]`.
pub fn compute_compensation(t_raw: &CumulativeTimestamps, grid: &VirtualBinGrid) -> Result<CompensationTable> {
    if t_raw.total() != grid.hit_count {
        return Err(Error::HitCountMismatch { raw: t_raw.total(), grid: grid.hit_count });
    }
    let n = t_raw.t_raw.len();
    let n_vir = grid.n_vir;
    let clamp = |a: usize| a.clamp(1, n_vir) as u32;

    let mut addr_l = Vec::with_capacity(n);
    let mut addr_m = Vec::with_capacity(n);
    let mut addr_r = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    let mut start = 0usize;

    for (i, &t) in t_raw.t_raw.iter().enumerate() {
        let (l, m, r) = if grid.raw_at_or_below(t, start) {
            (start, start, start)
        } else if grid.raw_at_or_below(t, start + 1) {
            (start, start + 1, start + 1)
        } else if grid.raw_at_or_below(t, start + 2) {
            (start, start + 1, start + 2)
        } else {
            if !grid.raw_at_or_below(t, start + 3) {
                warnings.push(CoverageWarning { raw_bin: i + 1 });
            }
            (start + 1, start + 2, start + 3)
        };
        let (l, m, r) = (clamp(l), clamp(m), clamp(r));
        addr_l.push(l);
        addr_m.push(m);
        addr_r.push(r);
        start = l.max(m).max(r) as usize;
    }

    Ok(CompensationTable { addr_l, addr_m, addr_r, n, n_vir, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{build_virtual_grid, cumulative_timestamps, RawHistogram};

    fn table(counts: &[u64], n_vir: usize) -> CompensationTable {
        let h = RawHistogram { counts: counts.to_vec() };
        let grid = build_virtual_grid(h.total(), h.n(), n_vir, 1000.0).unwrap();
        compute_compensation(&cumulative_timestamps(&h), &grid).unwrap()
    }

    #[test]
    fn worked_example() {
        let t = table(&[30, 10, 40, 40], 4);
        let rows: Vec<_> = t.iter().collect();
        assert_eq!(rows, vec![[1, 1, 1], [1, 2, 2], [2, 3, 3], [3, 4, 4]]);
        assert!(t.is_missing_bin_free());
        assert!(t.unaddressed().is_empty());
    }

    #[test]
    fn ultra_wide_first_bin() {
        let t = table(&[100, 10, 5, 5], 4);
        let rows: Vec<_> = t.iter().collect();
        assert_eq!(rows, vec![[1, 2, 3], [3, 4, 4], [4, 4, 4], [4, 4, 4]]);
        // Bin 1 reaches virtual bin 4 from the sentinel start point.
        assert_eq!(t.warnings, vec![CoverageWarning { raw_bin: 1 }]);
        assert!(t.unaddressed().is_empty());
    }

    #[test]
    fn exact_uniform_counts() {
        let t = table(&[30, 30, 30, 30], 4);
        let rows: Vec<_> = t.iter().collect();
        assert_eq!(rows, vec![[1, 1, 1], [1, 2, 2], [2, 3, 3], [3, 4, 4]]);
    }

    #[test]
    fn empty_leading_bins_clamp_to_one() {
        let t = table(&[0, 0, 40, 20], 2);
        let rows: Vec<_> = t.iter().collect();
        assert_eq!(rows, vec![[1, 1, 1], [1, 1, 1], [1, 2, 2], [2, 2, 2]]);
    }

    #[test]
    fn total_mismatch() {
        let h = RawHistogram { counts: vec![1, 2] };
        let grid = build_virtual_grid(4, 2, 2, 1.0).unwrap();
        assert!(matches!(
            compute_compensation(&cumulative_timestamps(&h), &grid),
            Err(Error::HitCountMismatch { raw: 3, grid: 4 })
        ));
    }
}
