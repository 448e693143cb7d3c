//! Calibrated DNL/INL against the number of fraction bits.
//!
//! `cargo run --release --example mbar_sweep [hits]`

use gco_tdc::channel::ChannelConfig;
use gco_tdc::experiment::{run_mbar_sweep, ExperimentConfig};

fn main() -> gco_tdc::Result<()> {
    let hits = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1_000_000);
    let mut cfg = ExperimentConfig::new(ChannelConfig::new(4424.78, 25, 8).with_dispersion(0.3));
    cfg.hits_pass1 = hits;
    cfg.hits_pass2 = hits;
    cfg.hits_eval = hits;
    cfg.exact = true;
    for row in run_mbar_sweep(&cfg)?.rows {
        let label = row.mbar.map_or("exact".to_string(), |m| m.to_string());
        println!("M {label:>5}  DNL pk-pk {:.3}  INL pk-pk {:.3}", row.dnl_pk_pk.unwrap(), row.inl_pk_pk.unwrap());
    }
    Ok(())
}
