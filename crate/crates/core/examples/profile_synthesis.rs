//! Synthesize a nonuniform fine-bin profile and print its width statistics.

use gco_tdc::channel::{nominal_lsb, synthesize_bin_profile, ChannelConfig};

fn main() -> gco_tdc::Result<()> {
    let cfg = ChannelConfig::new(4424.78, 29, 8)
        .with_fine_bin_count(228)
        .with_dispersion(0.3)
        .with_wide_bins(0.05, 3.0)
        .with_seed(7);
    let profile = synthesize_bin_profile(&cfg)?;
    let w = profile.widths_ps();
    let min = w.iter().copied().fold(f64::MAX, f64::min);
    let max = w.iter().copied().fold(0.0, f64::max);
    println!("bins        {}", profile.len());
    println!("period      {:.2} ps", profile.total_ps());
    println!("nominal LSB {:.2} ps", nominal_lsb(&cfg));
    println!("widths      {min:.2} .. {max:.2} ps");

    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    Ok(())
}
