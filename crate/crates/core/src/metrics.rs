//! Linearity and resolution statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// DNL/INL profile of one histogram, plus its scalar summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub lsb_ps: f64,
    pub dnl: Vec<f64>,
    pub inl: Vec<f64>,
    pub dnl_pk_pk: f64,
    pub sigma_dnl: f64,
    pub inl_pk_pk: f64,
    pub sigma_inl: f64,
    pub omega_eq_ps: f64,
    pub sigma_eq_lsb: f64,
}

/// The JSON summary block: everything except the per-bin vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearitySummary {
    pub lsb_ps: f64,
    pub dnl_pk_pk: f64,
    pub sigma_dnl: f64,
    pub inl_pk_pk: f64,
    pub sigma_inl: f64,
    pub omega_eq_ps: f64,
    pub sigma_eq_lsb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityRow {
    pub bin: usize,
    pub dnl: f64,
    pub inl: f64,
}

impl LinearityReport {
    pub fn n(&self) -> usize {
        self.dnl.len()
    }

    pub fn summary(&self) -> LinearitySummary {
        LinearitySummary {
            lsb_ps: self.lsb_ps,
            dnl_pk_pk: self.dnl_pk_pk,
            sigma_dnl: self.sigma_dnl,
            inl_pk_pk: self.inl_pk_pk,
            sigma_inl: self.sigma_inl,
            omega_eq_ps: self.omega_eq_ps,
            sigma_eq_lsb: self.sigma_eq_lsb,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = LinearityRow> + '_ {
        self.dnl.iter().zip(&self.inl).enumerate().map(|(i, (&dnl, &inl))| LinearityRow { bin: i + 1, dnl, inl })
    }

    /// `bin,dnl,inl`, one line per bin.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv_rows<R: std::io::Read>(reader: R) -> Result<Vec<LinearityRow>> {
        let mut r = csv::Reader::from_reader(reader);
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn write_summary_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.summary())?;
        Ok(())
    }
}

/// Code-density linearity: bin `k` is taken to be `counts[k] / sum * T` wide.
pub fn linearity_from_histogram(counts: &[f64], period_ps: f64) -> Result<LinearityReport> {
    if !(period_ps.is_finite() && period_ps > 0.0) {
        return Err(Error::InvalidConfig(format!("period {period_ps} ps")));
    }
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidConfig("counts must be finite and nonnegative".into()));
    }
    let total: f64 = counts.iter().sum();
    if counts.is_empty() || total <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let n = counts.len() as f64;
    let lsb_ps = period_ps / n;
    // Widths in LSB; a uniform histogram gives exactly 1.0 everywhere.
    let rel: Vec<f64> = counts.iter().map(|c| c * n / total).collect();
    let dnl: Vec<f64> = rel.iter().map(|r| r - 1.0).collect();
    let inl: Vec<f64> = dnl
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    let cube_mean = rel.iter().map(|r| r * r * r).sum::<f64>() / n;
    let omega_eq_ps = lsb_ps * cube_mean.sqrt();
    Ok(LinearityReport {
        lsb_ps,
        dnl_pk_pk: pk_pk(&dnl),
        sigma_dnl: population_std(&dnl),
        inl_pk_pk: pk_pk(&inl),
        sigma_inl: population_std(&inl),
        omega_eq_ps,
        sigma_eq_lsb: cube_mean.sqrt() / 12f64.sqrt(),
        dnl,
        inl,
    })
}

/// Linearity of a known width profile; the period is the sum of widths.
pub fn linearity_from_widths(widths_ps: &[f64]) -> Result<LinearityReport> {
    linearity_from_histogram(widths_ps, widths_ps.iter().sum())
}

fn pk_pk(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Sample mean and Bessel-corrected standard deviation of repeated
/// measurements of one interval.
pub fn rms_resolution(outputs: &[f64]) -> Result<(f64, f64)> {
    if outputs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: outputs.len() });
    }
    let n = outputs.len() as f64;
    let mean = outputs.iter().sum::<f64>() / n;
    let ss = outputs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Root mean square of per-interval sigmas.
pub fn valid_rms(sigmas: &[f64]) -> Result<f64> {
    if sigmas.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok((sigmas.iter().map(|s| s * s).sum::<f64>() / sigmas.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsReport {
    pub interval_count: usize,
    pub shots_per_interval: usize,
    pub mean_outputs: Vec<f64>,
    pub per_interval_sigma: Vec<f64>,
    pub sigma_valid: f64,
}

impl RmsReport {
    /// Builds the report from `H` groups of repeated measurements.
    pub fn from_groups(groups: &[Vec<f64>]) -> Result<Self> {
        let stats = groups.iter().map(|g| rms_resolution(g)).collect::<Result<Vec<_>>>()?;
        let per_interval_sigma: Vec<f64> = stats.iter().map(|s| s.1).collect();
        Ok(Self {
            interval_count: groups.len(),
            shots_per_interval: groups.first().map_or(0, Vec::len),
            mean_outputs: stats.iter().map(|s| s.0).collect(),
            sigma_valid: valid_rms(&per_interval_sigma)?,
            per_interval_sigma,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub m: u32,
    pub lsb_ps: f64,
    pub lut_count: f64,
    /// `None` for the plain row and for rows whose LUT count did not change.
    pub e_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub device_label: String,
    pub rows: Vec<EfficiencyRow>,
}

/// Resolution gained per unit of added logic, each step normalized to the
/// plain TDC: `((LSB[i-1] - LSB[i]) / LSB[1]) / ((LUT[i] - LUT[i-1]) / LUT[1])`.
pub fn efficiency_series(device_label: &str, rows: &[(u32, f64, f64)]) -> Result<EfficiencyRecord> {
    let Some(&(m0, lsb_plain, lut_plain)) = rows.first() else {
        return Err(Error::InvalidConfig(format!("{device_label}: no rows")));
    };
    if m0 != 1 {
        return Err(Error::InvalidConfig(format!("{device_label}: first row must be M = 1, got {m0}")));
    }
    for w in rows.windows(2) {
        if !w[1].0.is_power_of_two() || w[1].0 <= w[0].0 {
            return Err(Error::InvalidConfig(format!(
                "{device_label}: M must be increasing powers of two ({} after {})",
                w[1].0, w[0].0
            )));
        }
    }
    if rows.iter().any(|r| !(r.1 > 0.0) || !(r.2 > 0.0)) {
        return Err(Error::InvalidConfig(format!("{device_label}: LSB and LUT values must be positive")));
    }
    let mut out = vec![EfficiencyRow { m: 1, lsb_ps: lsb_plain, lut_count: lut_plain, e_m: None, error: None }];
    for w in rows.windows(2) {
        let ((_, lsb_prev, lut_prev), (m, lsb, lut)) = (w[0], w[1]);
        let d_lut = (lut - lut_prev) / lut_plain;
        let (e_m, error) = if d_lut == 0.0 {
            (None, Some(format!("M = {m}: LUT count unchanged, E_M undefined")))
        } else {
            (Some(((lsb_prev - lsb) / lsb_plain) / d_lut), None)
        };
        out.push(EfficiencyRow { m, lsb_ps: lsb, lut_count: lut, e_m, error });
    }
    Ok(EfficiencyRecord { device_label: device_label.to_string(), rows: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn uniform_is_ideal() {
        let r = linearity_from_histogram(&[50.0; 8], 800.0).unwrap();
        assert!(r.dnl.iter().chain(&r.inl).all(|&v| v == 0.0));
        assert_eq!(r.omega_eq_ps, 100.0);
        assert!(close(r.sigma_eq_lsb, 1.0 / 12f64.sqrt()));
    }

    #[test]
    fn three_bin_example() {
        let r = linearity_from_widths(&[1000.0, 1000.0, 2000.0]).unwrap();
        for (a, b) in r.dnl.iter().zip([-0.25, -0.25, 0.5]) {
            assert!(close(*a, b));
        }
        for (a, b) in r.inl.iter().zip([-0.25, -0.5, 0.0]) {
            assert!(close(*a, b));
        }
        assert!((r.omega_eq_ps - 2.5f64.sqrt() * 1000.0).abs() < 1e-9);
        assert!(close(r.dnl_pk_pk, 0.75));
        assert!(close(r.sigma_eq_lsb * 12f64.sqrt() * r.lsb_ps, r.omega_eq_ps));
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(matches!(linearity_from_histogram(&[0.0, 0.0], 10.0), Err(Error::ZeroCounts)));
        assert!(linearity_from_histogram(&[], 10.0).is_err());
    }

    #[test]
    fn csv_and_summary() {
        let r = linearity_from_histogram(&[1.0, 3.0], 2.0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "bin,dnl,inl\n1,-0.5,-0.5\n2,0.5,0.0\n");
        let rows = LinearityReport::read_csv_rows(buf.as_slice()).unwrap();
        assert_eq!(rows, r.rows().collect::<Vec<_>>());
        let mut js = Vec::new();
        r.write_summary_json(&mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        for key in ["lsb_ps", "dnl_pk_pk", "sigma_dnl", "inl_pk_pk", "sigma_inl", "omega_eq_ps", "sigma_eq_lsb"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn rms() {
        assert_eq!(rms_resolution(&[5.0; 4]).unwrap(), (5.0, 0.0));
        let (mu, s) = rms_resolution(&[0.0, 2.0]).unwrap();
        assert_eq!(mu, 1.0);
        assert!(close(s, 2f64.sqrt()));
        assert!(matches!(rms_resolution(&[1.0]), Err(Error::TooFewSamples { .. })));
        assert!(close(valid_rms(&[3.0, 4.0]).unwrap(), 12.5f64.sqrt()));
        assert!(close(valid_rms(&[0.7; 3]).unwrap(), 0.7));
        assert!(valid_rms(&[]).is_err());
    }

    #[test]
    fn efficiency_halving() {
        let rec = efficiency_series("x", &[(1, 100.0, 50.0), (2, 50.0, 100.0)]).unwrap();
        assert_eq!(rec.rows[0].e_m, None);
        assert_eq!(rec.rows[1].e_m, Some(0.5));
    }

    #[test]
    fn efficiency_flat_lut_is_row_error() {
        let rec = efficiency_series("x", &[(1, 100.0, 50.0), (2, 50.0, 50.0), (4, 25.0, 60.0)]).unwrap();
        assert!(rec.rows[1].error.is_some());
        assert!(rec.rows[2].e_m.is_some());
        assert!(efficiency_series("x", &[(2, 1.0, 1.0)]).is_err());
        assert!(efficiency_series("x", &[(1, 1.0, 1.0), (3, 1.0, 2.0)]).is_err());
    }
}
