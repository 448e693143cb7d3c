use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{efficiency_series, EfficiencyRecord};

/// One input line: `device,m,lsb_ps,lut_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCsvRow {
    pub device: String,
    pub m: u32,
    pub lsb_ps: f64,
    pub lut_count: f64,
}

/// Parses a table of devices; rows of one device must be contiguous.
pub fn read_efficiency_table<R: Read>(reader: R) -> Result<Vec<EfficiencyRecord>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut blocks: Vec<(String, Vec<(u32, f64, f64)>)> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = r.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: EfficiencyCsvRow = record
            .deserialize(Some(r.headers()?))
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        match blocks.last_mut() {
            Some((device, rows)) if *device == row.device => rows.push((row.m, row.lsb_ps, row.lut_count)),
            _ => {
                if blocks.iter().any(|b| b.0 == row.device) {
                    return Err(Error::Parse { line, message: format!("rows of device {} are not contiguous", row.device) });
                }
                blocks.push((row.device, vec![(row.m, row.lsb_ps, row.lut_count)]));
            }
        }
    }
    if blocks.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    blocks.iter().map(|(device, rows)| efficiency_series(device, rows)).collect()
}

pub fn compute_efficiency(path: &Path) -> Result<Vec<EfficiencyRecord>> {
    read_efficiency_table(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_devices() {
        let text = "device,m,lsb_ps,lut_count\na,1,100,50\na,2,50,100\nb,1,10,10\nb,2,5,20\n";
        let recs = read_efficiency_table(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].rows[1].e_m, Some(0.5));
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "device,m,lsb_ps,lut_count\na,1,100,50\na,two,50,100\n";
        match read_efficiency_table(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "device,m,lsb_ps,lut_count\na,1,100,50\na,2,50\n";
        assert!(matches!(read_efficiency_table(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn split_device_rejected() {
        let text = "device,m,lsb_ps,lut_count\na,1,100,50\nb,1,1,1\na,2,50,100\n";
        assert!(matches!(read_efficiency_table(text.as_bytes()), Err(Error::Parse { line: 4, .. })));
    }
}
