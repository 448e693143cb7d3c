//! Four raw bins with hits [30, 10, 40, 40] mapped onto four virtual bins.

use gco_tdc::density::RawHistogram;
use gco_tdc::vbcm::{calibrate_from_histograms, Rounding};

fn main() -> gco_tdc::Result<()> {
    let h = RawHistogram { counts: vec![30, 10, 40, 40] };
    let cal = calibrate_from_histograms(&h, &h, 4, 1000.0, 5, Rounding::Floor)?;
    println!("k  addresses   Coe (exact)     Coe (x32)");
    for k in 1..=4 {
        let w = cal.calibration.weights(k);
        let exact: Vec<String> = w.iter().map(|w| w.exact.to_string()).collect();
        println!("{k}  {:?}  {:<14}  {:?}", cal.compensation.addresses(k), exact.join(" "), cal.calibration.fixed(k));
    }
    let replay = cal.measure_histogram_exact(&h)?;
    println!("replayed histogram: {:?}", replay.counts());
    Ok(())
}
