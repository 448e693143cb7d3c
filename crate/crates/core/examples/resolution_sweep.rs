//! Raw vs calibrated linearity at several virtual-bin resolutions.

use gco_tdc::experiment::{run_resolution_sweep, ExperimentConfig};

fn main() -> gco_tdc::Result<()> {
    let mut cfg = ExperimentConfig::preset_226mhz();
    cfg.hits_pass1 = 2_000_000;
    cfg.hits_pass2 = 2_000_000;
    cfg.hits_eval = 2_000_000;
    let sweep = run_resolution_sweep(&cfg)?;
    println!("{:>8} {:>6} {:>8} {:>8} {:>8} {:>9}", "label", "n_vir", "LSB", "DNL", "INL", "omega_eq");
    for r in &sweep.rows {
        match &r.error {
            Some(e) => println!("{:>8} {:>6} {e}", r.label, r.n_vir),
            None => println!(
                "{:>8} {:>6} {:>8.2} {:>8.3} {:>8.3} {:>9.2}",
                r.label,
                r.n_vir,
                r.lsb_ps.unwrap(),
                r.dnl_pk_pk.unwrap(),
                r.inl_pk_pk.unwrap(),
                r.omega_eq_ps.unwrap()
            ),
        }
    }
    Ok(())
}
