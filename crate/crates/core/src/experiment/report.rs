use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::efficiency::read_efficiency_table;
use super::runs::{
    run_calibrate, run_interval_tests, run_mbar_sweep, run_multichannel, run_profiles, run_resolution_sweep,
};
use crate::error::Result;

/// What produced a bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical configuration JSON (or of the input table).
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
}

impl Provenance {
    fn new(command: &str, input: &[u8], master_seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            input_sha256: hex::encode(Sha256::digest(input)),
            master_seed,
        }
    }
}

/// All files of one run, held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub warnings: Vec<String>,
    pub sections: BTreeMap<String, serde_json::Value>,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl ReportBundle {
    fn new(provenance: Provenance, warnings: Vec<String>) -> Self {
        Self { provenance, warnings, sections: BTreeMap::new(), files: BTreeMap::new() }
    }

    fn section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.sections.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: String, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        self.files.insert(name, w.into_inner().map_err(|e| e.into_error())?);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: String, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.insert(name, bytes);
        Ok(())
    }

    /// Contents of `summary.json`.
    pub fn summary_json(&self) -> Result<Vec<u8>> {
        #[derive(Serialize)]
        struct Summary<'a> {
            provenance: &'a Provenance,
            warnings: &'a [String],
            #[serde(flatten)]
            sections: &'a BTreeMap<String, serde_json::Value>,
        }
        let mut bytes = serde_json::to_vec_pretty(&Summary {
            provenance: &self.provenance,
            warnings: &self.warnings,
            sections: &self.sections,
        })?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Every file including the summary, sorted by name.
    pub fn all_files(&self) -> Result<BTreeMap<String, Vec<u8>>> {
        let mut files = self.files.clone();
        files.insert("summary.json".into(), self.summary_json()?);
        Ok(files)
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in self.all_files()? {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Calibrate,
    SweepMbar,
    SweepResolution,
    IntervalTest,
    Multichannel,
    /// Everything above in one bundle.
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Calibrate => "calibrate",
            Command::SweepMbar => "sweep-mbar",
            Command::SweepResolution => "sweep-resolution",
            Command::IntervalTest => "interval-test",
            Command::Multichannel => "multichannel",
            Command::All => "all",
        }
    }
}

/// Runs one command and renders its files. The result depends only on `cfg`.
pub fn run_command(cfg: &ExperimentConfig, command: Command) -> Result<ReportBundle> {
    let warnings = cfg.validate()?;
    let provenance = Provenance::new(command.name(), cfg.canonical_json().as_bytes(), Some(cfg.master_seed));
    let mut b = ReportBundle::new(provenance, warnings);
    let all = command == Command::All;

    if all || command == Command::Profile {
        let profiles = run_profiles(cfg)?;
        for p in &profiles {
            let mut bytes = Vec::new();
            p.profile.write_csv(&mut bytes)?;
            b.files.insert(format!("profile_ch{}.csv", p.channel), bytes);
        }
        b.section("profiles", &profiles)?;
    }
    if all || command == Command::Calibrate {
        let tables = run_calibrate(cfg)?;
        for t in &tables {
            let mut bytes = Vec::new();
            t.table.write_csv(&mut bytes)?;
            b.files.insert(format!("cctable_ch{}_nvir{}.csv", t.channel, t.n_vir), bytes);
        }
        b.section("calibrate", &tables)?;
    }
    if all || command == Command::SweepMbar {
        let sweep = run_mbar_sweep(cfg)?;
        b.csv("mbar_sweep.csv".into(), &sweep.rows)?;
        b.section("mbar_sweep", &sweep)?;
    }
    if all || command == Command::SweepResolution {
        let sweep = run_resolution_sweep(cfg)?;
        b.csv("resolution_sweep.csv".into(), &sweep.rows)?;
        for (label, report) in &sweep.reports {
            b.csv(format!("linearity_ch{}_{label}.csv", sweep.channel), report.rows())?;
            b.json(format!("linearity_ch{}_{label}.json", sweep.channel), &report.summary())?;
        }
        b.section("resolution_sweep", &sweep)?;
    }
    if all || command == Command::IntervalTest {
        let result = run_interval_tests(cfg)?;
        b.csv("interval_test.csv".into(), &result.rows)?;
        for (row, report) in result.rows.iter().zip(&result.reports) {
            let Some(report) = report else { continue };
            #[derive(Serialize)]
            struct Line {
                interval: usize,
                delay_ps: f64,
                mean_ps: f64,
                sigma_ps: f64,
            }
            let lines = (0..report.interval_count).map(|i| Line {
                interval: i + 1,
                delay_ps: result.delays_ps[i],
                mean_ps: report.mean_outputs[i],
                sigma_ps: report.per_interval_sigma[i],
            });
            b.csv(format!("interval_test_nvir{}.csv", row.n_vir), lines)?;
        }
        b.section("interval_test", &result)?;
    }
    if all || command == Command::Multichannel {
        let result = run_multichannel(cfg)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["n_vir".to_string(), "requested_ps".to_string()];
        header.extend((1..=result.channel_count).map(|c| format!("ch{c}")));
        header.push("average".into());
        w.write_record(&header)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for row in &result.rows {
            let mut rec = vec![row.n_vir.to_string(), cell(row.requested_ps)];
            rec.extend(row.dnl_pk_pk.iter().map(|&v| cell(v)));
            rec.push(cell(row.average));
            w.write_record(&rec)?;
        }
        b.files.insert("multichannel.csv".into(), w.into_inner().map_err(|e| e.into_error())?);
        b.csv("multichannel_cells.csv".into(), &result.cells)?;
        b.section("multichannel", &result)?;
    }
    Ok(b)
}

/// Efficiency figures for a `device,m,lsb_ps,lut_count` table.
pub fn run_efficiency_report(table: &Path) -> Result<ReportBundle> {
    let input = std::fs::read(table)?;
    let records = read_efficiency_table(input.as_slice())?;
    let mut b = ReportBundle::new(Provenance::new("efficiency", &input, None), Vec::new());
    #[derive(Serialize)]
    struct Line<'a> {
        device: &'a str,
        m: u32,
        lsb_ps: f64,
        lut_count: f64,
        e_m: Option<f64>,
        error: Option<&'a str>,
    }
    let lines = records.iter().flat_map(|rec| {
        rec.rows.iter().map(move |r| Line {
            device: &rec.device_label,
            m: r.m,
            lsb_ps: r.lsb_ps,
            lut_count: r.lut_count,
            e_m: r.e_m,
            error: r.error.as_deref(),
        })
    });
    b.csv("efficiency.csv".into(), lines)?;
    b.section("efficiency", &records)?;
    Ok(b)
}
