use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::compensation::CompensationTable;
use crate::density::{DensityDataset, RawHistogram, VirtualBinGrid};
use crate::error::{Error, Result};

/// Occurrences per virtual bin of the compensated TDC (`hit_com`): every hit
/// adds one occurrence at each of its three address slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompensatedHistogram {
    pub occurrences: Vec<u64>,
}

impl CompensatedHistogram {
    pub fn total(&self) -> u64 {
        self.occurrences.iter().sum()
    }
}

pub fn accumulate_compensated(ds: &DensityDataset, table: &CompensationTable) -> Result<CompensatedHistogram> {
    let raw = RawHistogram::from_codes(ds.fine_bins.iter().map(|&c| c as usize), table.n)?;
    accumulate_compensated_histogram(&raw, table)
}

/// [`accumulate_compensated`] for hits already counted per raw bin.
pub fn accumulate_compensated_histogram(
    raw: &RawHistogram,
    table: &CompensationTable,
) -> Result<CompensatedHistogram> {
    if raw.n() != table.n {
        return Err(Error::InvalidConfig(format!(
            "histogram has {} bins, compensation table {}",
            raw.n(),
            table.n
        )));
    }
    let mut occurrences = vec![0u64; table.n_vir];
    for (addrs, &count) in table.iter().zip(&raw.counts) {
        for a in addrs {
            occurrences[a - 1] += count;
        }
    }
    Ok(CompensatedHistogram { occurrences })
}

/// How the exact weight is cut to `fraction_bits` fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Floor,
    Nearest,
}

/// One width-calibration factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weight {
    pub exact: Ratio<u64>,
    /// `exact * 2^fraction_bits`, rounded per the table's [`Rounding`].
    pub fixed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibrationTable {
    pub coe_l: Vec<Weight>,
    pub coe_m: Vec<Weight>,
    pub coe_r: Vec<Weight>,
    pub fraction_bits: u32,
    pub rounding: Rounding,
}

impl CalibrationTable {
    pub fn weights(&self, k: usize) -> [Weight; 3] {
        let i = k - 1;
        [self.coe_l[i], self.coe_m[i], self.coe_r[i]]
    }

    pub fn fixed(&self, k: usize) -> [u64; 3] {
        self.weights(k).map(|w| w.fixed)
    }

    pub fn n(&self) -> usize {
        self.coe_l.len()
    }
}

/// Largest fraction width accepted for fixed-point weights.
pub const MAX_FRACTION_BITS: u32 = 32;

fn to_fixed(num: u64, den: u64, bits: u32, rounding: Rounding) -> u64 {
    let scaled = u128::from(num) << bits;
    let den = u128::from(den);
    let q = match rounding {
        Rounding::Floor => scaled / den,
        Rounding::Nearest => (2 * scaled + den) / (2 * den),
    };
    q as u64
}

/// Weight per address slot: `Coe = (Ñ / n_vir) / hit_com[address]`.
///
/// `grid` must describe the second-pass density test, so that `Ñ` matches the
/// hits behind `hit_com`.
pub fn compute_width_calibration(
    hit_com: &CompensatedHistogram,
    table: &CompensationTable,
    grid: &VirtualBinGrid,
    fraction_bits: u32,
    rounding: Rounding,
) -> Result<CalibrationTable> {
    if fraction_bits > MAX_FRACTION_BITS {
        return Err(Error::InvalidConfig(format!(
            "fraction_bits {fraction_bits} exceeds {MAX_FRACTION_BITS}"
        )));
    }
    if hit_com.occurrences.len() != table.n_vir || grid.n_vir != table.n_vir {
        return Err(Error::InvalidConfig("compensated histogram, table and grid disagree on n_vir".into()));
    }
    let hits = grid.hit_count;
    let n_vir = grid.n_vir as u64;
    let weight = |k: usize, a: usize| -> Result<Weight> {
        let occ = hit_com.occurrences[a - 1];
        if occ == 0 {
            return Err(Error::DeadAddress { raw_bin: k, address: a });
        }
        let den = n_vir * occ;
        Ok(Weight { exact: Ratio::new(hits, den), fixed: to_fixed(hits, den, fraction_bits, rounding) })
    };

    let mut coe_l = Vec::with_capacity(table.n);
    let mut coe_m = Vec::with_capacity(table.n);
    let mut coe_r = Vec::with_capacity(table.n);
    for k in 1..=table.n {
        let [l, m, r] = table.addresses(k);
        coe_l.push(weight(k, l)?);
        coe_m.push(weight(k, m)?);
        coe_r.push(weight(k, r)?);
    }
    Ok(CalibrationTable { coe_l, coe_m, coe_r, fraction_bits, rounding })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{build_virtual_grid, cumulative_timestamps};
    use crate::vbcm::compute_compensation;

    fn worked() -> (RawHistogram, CompensationTable, VirtualBinGrid) {
        let h = RawHistogram { counts: vec![30, 10, 40, 40] };
        let grid = build_virtual_grid(120, 4, 4, 1000.0).unwrap();
        let t = compute_compensation(&cumulative_timestamps(&h), &grid).unwrap();
        (h, t, grid)
    }

    #[test]
    fn worked_example_occurrences() {
        let (h, t, _) = worked();
        let com = accumulate_compensated_histogram(&h, &t).unwrap();
        assert_eq!(com.occurrences, vec![100, 60, 120, 80]);
        assert_eq!(com.total(), 3 * 120);

        let codes: Vec<u16> = h
            .counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i as u16 + 1, c as usize))
            .collect();
        let ds = DensityDataset { hit_count: 120, fine_bins: codes, seed: 0, bin_count: 4 };
        assert_eq!(accumulate_compensated(&ds, &t).unwrap(), com);
    }

    #[test]
    fn worked_example_weights() {
        let (h, t, grid) = worked();
        let com = accumulate_compensated_histogram(&h, &t).unwrap();
        let cal = compute_width_calibration(&com, &t, &grid, 5, Rounding::Floor).unwrap();
        let r = |n, d| Ratio::new(n, d);
        let expect = [
            [r(3, 10), r(3, 10), r(3, 10)],
            [r(3, 10), r(1, 2), r(1, 2)],
            [r(1, 2), r(1, 4), r(1, 4)],
            [r(1, 4), r(3, 8), r(3, 8)],
        ];
        let fixed = [[9, 9, 9], [9, 16, 16], [16, 8, 8], [8, 12, 12]];
        for k in 1..=4 {
            assert_eq!(cal.weights(k).map(|w| w.exact), expect[k - 1]);
            assert_eq!(cal.fixed(k), fixed[k - 1]);
        }
    }

    #[test]
    fn identity_weight() {
        let com = CompensatedHistogram { occurrences: vec![30, 30] };
        let t = CompensationTable {
            addr_l: vec![1, 2],
            addr_m: vec![1, 2],
            addr_r: vec![1, 2],
            n: 2,
            n_vir: 2,
            warnings: vec![],
        };
        let grid = build_virtual_grid(60, 2, 2, 1.0).unwrap();
        let cal = compute_width_calibration(&com, &t, &grid, 7, Rounding::Floor).unwrap();
        assert_eq!(cal.weights(1)[0].exact, Ratio::from_integer(1));
        assert_eq!(cal.fixed(2), [128, 128, 128]);
    }

    #[test]
    fn nearest_rounding() {
        assert_eq!(to_fixed(3, 10, 5, Rounding::Floor), 9);
        assert_eq!(to_fixed(3, 10, 5, Rounding::Nearest), 10);
        assert_eq!(to_fixed(1, 3, 1, Rounding::Nearest), 1);
        assert_eq!(to_fixed(1, 3, 1, Rounding::Floor), 0);
    }

    #[test]
    fn dead_address() {
        let (h, t, grid) = worked();
        let mut com = accumulate_compensated_histogram(&h, &t).unwrap();
        com.occurrences[1] = 0;
        assert!(matches!(
            compute_width_calibration(&com, &t, &grid, 5, Rounding::Floor),
            Err(Error::DeadAddress { raw_bin: 2, address: 2 })
        ));
        assert!(compute_width_calibration(&com, &t, &grid, 40, Rounding::Floor).is_err());
    }
}
