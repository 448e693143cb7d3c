//! Code-density test: histogram uniform hits and report raw DNL/INL.

use gco_tdc::channel::{synthesize_bin_profile, ChannelConfig};
use gco_tdc::density::{accumulate_raw_histogram, cumulative_timestamps, generate_uniform_hits};
use gco_tdc::metrics::{linearity_from_histogram, linearity_from_widths};

fn main() -> gco_tdc::Result<()> {
    let cfg = ChannelConfig::new(4424.78, 25, 8).with_dispersion(0.3).with_wide_bins(0.05, 3.0);
    let profile = synthesize_bin_profile(&cfg)?;
    let ds = generate_uniform_hits(&profile, &cfg, 1_000_000, 42)?;
    let hist = accumulate_raw_histogram(&ds, profile.len())?;
    let t = cumulative_timestamps(&hist);
    println!("hits {}  T_raw[n] {}", hist.total(), t.total());

    let measured = linearity_from_histogram(&hist.counts.iter().map(|&c| c as f64).collect::<Vec<_>>(), cfg.clock_period_ps)?;
    let truth = linearity_from_widths(profile.widths_ps())?;
    println!("measured  {}", serde_json::to_string(&measured.summary()).unwrap());
    println!("true      {}", serde_json::to_string(&truth.summary()).unwrap());
    Ok(())
}
