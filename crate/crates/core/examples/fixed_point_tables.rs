//! Export calibration tables as CSV and packed binary, read them back and
//! apply them to raw codes.

use gco_tdc::channel::{synthesize_bin_profile, ChannelConfig};
use gco_tdc::density::generate_uniform_hits;
use gco_tdc::vbcm::{calibrate_channel, CalibrationPlan, CcTable, Rounding};

fn main() -> gco_tdc::Result<()> {
    let cfg = ChannelConfig::new(4424.78, 8, 4).with_dispersion(0.3);
    let profile = synthesize_bin_profile(&cfg)?;
    let plan = CalibrationPlan {
        n_vir: 24,
        hits_pass1: 200_000,
        hits_pass2: 200_000,
        fraction_bits: 8,
        rounding: Rounding::Nearest,
        seed_pass1: 1,
        seed_pass2: 2,
    };
    let cal = calibrate_channel(&profile, &cfg, &plan)?;
    let table = CcTable::new(&cal.compensation, &cal.calibration)?;

    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let mut bin = Vec::new();
    table.write_binary(&mut bin)?;
    println!("{} rows: {} bytes CSV, {} bytes binary", table.n(), csv.len(), bin.len());
    print!("{}", String::from_utf8_lossy(&csv).lines().take(5).map(|l| format!("{l}\n")).collect::<String>());

    let back = CcTable::read_binary(bin.as_slice())?;
    assert_eq!(back, CcTable::read_csv(csv.as_slice())?);
    let hits = generate_uniform_hits(&profile, &cfg, 100_000, 3)?;
    let hist = back.apply(hits.fine_bins.iter().map(|&k| k as usize))?;
    let counts = hist.counts();
    let expected = 100_000.0 / 24.0;
    let worst = counts.iter().map(|c| (c / expected - 1.0).abs()).fold(0.0, f64::max);
    println!("calibrated bins within {:.1}% of {expected:.0}", 100.0 * worst);
    Ok(())
}
