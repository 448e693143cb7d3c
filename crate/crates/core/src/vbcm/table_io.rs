//! File images of the combined compensation and calibration table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::calibration::CalibrationTable;
use super::compensation::CompensationTable;
use super::measurement::{scatter_fixed, CalibratedHistogram};
use crate::density::RawHistogram;
use crate::error::{Error, Result};

const TABLE_MAGIC: &[u8; 4] = b"GCCT";
const TABLE_VERSION: u16 = 1;

/// One merged entry: three addresses and their fixed-point weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcRow {
    pub k: usize,
    pub addr_l: u32,
    pub addr_m: u32,
    pub addr_r: u32,
    pub coe_l_fx: u64,
    pub coe_m_fx: u64,
    pub coe_r_fx: u64,
    pub mbar: u32,
}

/// What the measurement path needs at run time: addresses plus fixed-point
/// weights, one row per raw bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcTable {
    pub fraction_bits: u32,
    pub n_vir: usize,
    pub rows: Vec<CcRow>,
}

impl CcTable {
    pub fn new(comp: &CompensationTable, cal: &CalibrationTable) -> Result<Self> {
        if comp.n != cal.n() {
            return Err(Error::InvalidConfig("tables disagree on the raw bin count".into()));
        }
        let mbar = cal.fraction_bits;
        let rows = (1..=comp.n)
            .map(|k| {
                let [l, m, r] = comp.addresses(k);
                let [cl, cm, cr] = cal.fixed(k);
                CcRow {
                    k,
                    addr_l: l as u32,
                    addr_m: m as u32,
                    addr_r: r as u32,
                    coe_l_fx: cl,
                    coe_m_fx: cm,
                    coe_r_fx: cr,
                    mbar,
                }
            })
            .collect();
        Ok(Self { fraction_bits: mbar, n_vir: comp.n_vir, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Fixed-point measurement of a stream of fine codes.
    pub fn apply<I>(&self, hits: I) -> Result<CalibratedHistogram>
    where
        I: IntoIterator,
        I::Item: Into<usize>,
    {
        let raw = RawHistogram::from_codes(hits, self.n())?;
        let rows = self.rows.iter().map(|r| {
            (
                [r.addr_l as usize, r.addr_m as usize, r.addr_r as usize],
                [r.coe_l_fx, r.coe_m_fx, r.coe_r_fx],
            )
        });
        let accumulators = scatter_fixed(&raw.counts, rows, self.n_vir)?;
        Ok(CalibratedHistogram { accumulators, fraction_bits: self.fraction_bits })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV image. `n_vir` is not stored in the file and is taken
    /// from the largest address.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, row) in r.deserialize::<CcRow>().enumerate() {
            let row = row?;
            let line = i as u64 + 2;
            if row.k != i + 1 {
                return Err(Error::Parse { line, message: format!("expected k = {}", i + 1) });
            }
            if [row.addr_l, row.addr_m, row.addr_r].contains(&0) {
                return Err(Error::Parse { line, message: "addresses are 1-based".into() });
            }
            if let Some(first) = rows.first().map(|r: &CcRow| r.mbar) {
                if row.mbar != first {
                    return Err(Error::Parse { line, message: format!("mbar {} differs from {first}", row.mbar) });
                }
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<CcRow>) -> Result<Self> {
        let fraction_bits = rows.first().map(|r| r.mbar).ok_or(Error::Parse { line: 1, message: "empty table".into() })?;
        let n_vir = rows.iter().map(|r| r.addr_l.max(r.addr_m).max(r.addr_r)).max().unwrap_or(1) as usize;
        Ok(Self { fraction_bits, n_vir, rows })
    }

    /// Binary image: `"GCCT"`, `u16` version, `u16` mbar, `u32` n, `u32`
    /// n_vir, then per raw bin three `u16` addresses followed by three `u64`
    /// weights, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mbar = u16::try_from(self.fraction_bits).map_err(|_| Error::InvalidConfig("mbar too wide".into()))?;
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&TABLE_VERSION.to_le_bytes())?;
        w.write_all(&mbar.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u32).to_le_bytes())?;
        w.write_all(&(self.n_vir as u32).to_le_bytes())?;
        for r in &self.rows {
            for a in [r.addr_l, r.addr_m, r.addr_r] {
                let a = u16::try_from(a).map_err(|_| Error::InvalidConfig(format!("address {a} exceeds 16 bits")))?;
                w.write_all(&a.to_le_bytes())?;
            }
            for c in [r.coe_l_fx, r.coe_m_fx, r.coe_r_fx] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let bad = |message: &str| Error::Parse { line: 0, message: message.into() };
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != TABLE_MAGIC {
            return Err(bad("missing GCCT magic"));
        }
        if u16::from_le_bytes([header[4], header[5]]) != TABLE_VERSION {
            return Err(bad("unsupported table version"));
        }
        let mbar = u32::from(u16::from_le_bytes([header[6], header[7]]));
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let n_vir = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let mut rows = Vec::with_capacity(n);
        let mut rec = [0u8; 30];
        for k in 1..=n {
            r.read_exact(&mut rec)?;
            let addr = |i: usize| u32::from(u16::from_le_bytes([rec[2 * i], rec[2 * i + 1]]));
            let coe = |i: usize| u64::from_le_bytes(rec[6 + 8 * i..14 + 8 * i].try_into().unwrap());
            let row = CcRow {
                k,
                addr_l: addr(0),
                addr_m: addr(1),
                addr_r: addr(2),
                coe_l_fx: coe(0),
                coe_m_fx: coe(1),
                coe_r_fx: coe(2),
                mbar,
            };
            if [row.addr_l, row.addr_m, row.addr_r].iter().any(|&a| a == 0 || a as usize > n_vir) {
                return Err(bad("address outside [1, n_vir]"));
            }
            rows.push(row);
        }
        Ok(Self { fraction_bits: mbar, n_vir, rows })
    }
}
