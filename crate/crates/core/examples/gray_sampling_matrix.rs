//! Walk one oscillator period through the sampling matrix and check that the
//! decoded bin matches the bin containing the fine time.

use gco_tdc::channel::{
    decode_sample_matrix, encode_sample_matrix, gray_decode, gray_encode, synthesize_bin_profile, ChannelConfig,
    GRAY_STATES,
};

fn main() -> gco_tdc::Result<()> {
    for i in 0..GRAY_STATES {
        let w = gray_encode(i)?;
        print!("{:05b}{}", w.bits(), if i + 1 == GRAY_STATES { "\n" } else { " " });
        assert_eq!(gray_decode(w), i);
    }

    let cfg = ChannelConfig::new(1000.0, 4, 4).with_dispersion(0.2).with_seed(3);
    let profile = synthesize_bin_profile(&cfg)?;
    let steps = 40;
    for s in 1..=steps {
        let tau = s as f64 * profile.total_ps() / steps as f64;
        let sample = encode_sample_matrix(&profile, &cfg, tau)?;
        let k = decode_sample_matrix(&sample, &cfg)?;
        let words: Vec<String> = sample.gray_samples.iter().map(|w| format!("{:05b}", w.bits())).collect();
        println!("tau {tau:7.1} ps  groups [{}]  bin {k:2}", words.join(" "));
        assert_eq!(k, profile.fine_bin_of(tau));
    }
    Ok(())
}
