//! Calibrate several independently seeded channels and write the report
//! bundle to a directory.
//!
//! `cargo run --release --example multichannel [out_dir]`

use gco_tdc::experiment::{run_command, Command, ExperimentConfig};

fn main() -> gco_tdc::Result<()> {
    let mut cfg = ExperimentConfig::preset_156mhz();
    cfg.channel_count = 8;
    cfg.resolutions_ps = vec![40.0, 60.0];
    cfg.hits_pass1 = 1_000_000;
    cfg.hits_pass2 = 1_000_000;
    cfg.hits_eval = 1_000_000;
    let bundle = run_command(&cfg, Command::Multichannel)?;
    let rows = &bundle.sections["multichannel"]["rows"];
    for row in rows.as_array().unwrap() {
        println!("n_vir {}  DNL pk-pk per channel {}  average {}", row["n_vir"], row["dnl_pk_pk"], row["average"]);
    }
    if let Some(dir) = std::env::args().nth(1) {
        for p in bundle.write_to(dir.as_ref())? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
