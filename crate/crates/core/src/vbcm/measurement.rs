use std::io::Write;

use num_rational::Ratio;
use num_traits::Zero;
use serde::Serialize;

use super::calibration::CalibrationTable;
use super::compensation::CompensationTable;
use crate::density::RawHistogram;
use crate::error::{Error, Result};

/// Histogram over virtual bins in units of `2^-fraction_bits` counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibratedHistogram {
    pub accumulators: Vec<u64>,
    pub fraction_bits: u32,
}

#[derive(Serialize)]
struct CountsRow {
    virtual_bin: usize,
    counts: f64,
}

impl CalibratedHistogram {
    pub fn counts(&self) -> Vec<f64> {
        let scale = (-(self.fraction_bits as f64)).exp2();
        self.accumulators.iter().map(|&a| a as f64 * scale).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_counts_csv(writer, &self.counts())
    }
}

/// Histogram accumulated with the exact rational weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactHistogram {
    pub bins: Vec<Ratio<u128>>,
}

impl ExactHistogram {
    pub fn counts(&self) -> Vec<f64> {
        self.bins.iter().map(ratio_to_f64).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_counts_csv(writer, &self.counts())
    }
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    let (n, d) = (*r.numer(), *r.denom());
    (n / d) as f64 + (n % d) as f64 / d as f64
}

pub(crate) fn write_counts_csv<W: Write>(writer: W, counts: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, &counts) in counts.iter().enumerate() {
        w.serialize(CountsRow { virtual_bin: i + 1, counts })?;
    }
    w.flush()?;
    Ok(())
}

/// Adds `count * weight` for every address slot of every raw bin, with
/// overflow reported rather than wrapped.
pub(crate) fn scatter_fixed<I>(counts: &[u64], rows: I, n_vir: usize) -> Result<Vec<u64>>
where
    I: IntoIterator<Item = ([usize; 3], [u64; 3])>,
{
    let mut acc = vec![0u64; n_vir];
    for (&count, (addrs, weights)) in counts.iter().zip(rows) {
        if count == 0 {
            continue;
        }
        for (a, w) in addrs.into_iter().zip(weights) {
            let cell = &mut acc[a - 1];
            *cell = count
                .checked_mul(w)
                .and_then(|add| cell.checked_add(add))
                .ok_or(Error::AccumulatorOverflow(a))?;
        }
    }
    Ok(acc)
}

fn check_tables(comp: &CompensationTable, cal: &CalibrationTable) -> Result<()> {
    if comp.n != cal.n() {
        return Err(Error::InvalidConfig(format!(
            "compensation table has {} raw bins, calibration table {}",
            comp.n,
            cal.n()
        )));
    }
    Ok(())
}

/// Runs a stream of fine codes through the calibrated histogram pipeline.
///
/// Each hit with fine code `k` adds `Coe_l[k]`, `Coe_m[k]` and `Coe_r[k]`
/// (fixed-point) to the bins at `Addr_l[k]`, `Addr_m[k]` and `Addr_r[k]`.
/// Hits are counted per raw bin first, so the result does not depend on
/// their order.
pub fn apply_measurement<I>(hits: I, comp: &CompensationTable, cal: &CalibrationTable) -> Result<CalibratedHistogram>
where
    I: IntoIterator,
    I::Item: Into<usize>,
{
    check_tables(comp, cal)?;
    let raw = RawHistogram::from_codes(hits, comp.n)?;
    let rows = (1..=comp.n).map(|k| (comp.addresses(k), cal.fixed(k)));
    let accumulators = scatter_fixed(&raw.counts, rows, comp.n_vir)?;
    Ok(CalibratedHistogram { accumulators, fraction_bits: cal.fraction_bits })
}

/// [`apply_measurement`] with the exact rational weights.
pub fn apply_measurement_exact<I>(hits: I, comp: &CompensationTable, cal: &CalibrationTable) -> Result<ExactHistogram>
where
    I: IntoIterator,
    I::Item: Into<usize>,
{
    check_tables(comp, cal)?;
    let raw = RawHistogram::from_codes(hits, comp.n)?;
    Ok(ExactHistogram { bins: scatter_exact(&raw.counts, comp, cal) })
}

pub(crate) fn scatter_exact(counts: &[u64], comp: &CompensationTable, cal: &CalibrationTable) -> Vec<Ratio<u128>> {
    let mut bins = vec![Ratio::<u128>::zero(); comp.n_vir];
    for (k, &count) in (1..=comp.n).zip(counts) {
        if count == 0 {
            continue;
        }
        for (a, w) in comp.addresses(k).into_iter().zip(cal.weights(k)) {
            let w = Ratio::new_raw(u128::from(*w.exact.numer()), u128::from(*w.exact.denom()));
            bins[a - 1] += w * u128::from(count);
        }
    }
    bins
}
