//! Capture START/STOP pairs on a raw channel and compare the reconstructed
//! interval with the true one.

use gco_tdc::channel::{capture_timestamp, synthesize_bin_profile, ChannelConfig};
use rand::{Rng, SeedableRng};

fn main() -> gco_tdc::Result<()> {
    let cfg = ChannelConfig::new(4424.78, 25, 8).with_dispersion(0.3);
    let profile = synthesize_bin_profile(&cfg)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for interval in [150.0, 1234.5, 4000.0, 9000.0] {
        let start = cfg.clock_period_ps * (1.0 + rng.random::<f64>());
        let rec = capture_timestamp(&profile, &cfg, start + interval)?;
        let measured = rec.quantized_interval(&profile, &cfg) - start;
        println!(
            "true {interval:7.1} ps  N_c {:2}  bin {:3}  measured {measured:8.2} ps  error {:+6.2} ps",
            rec.coarse_code,
            rec.fine_bin,
            measured - interval
        );
    }
    Ok(())
}
