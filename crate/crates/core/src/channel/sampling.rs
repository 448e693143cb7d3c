use super::config::ChannelConfig;
use super::gray::{gray_decode, gray_encode, GrayWord, GRAY_STATES};
use super::profile::BinProfile;
use crate::error::{Error, Result};

/// Words latched by the `M` DFF groups of the sampling matrix for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct FineSample {
    pub gray_samples: Vec<GrayWord>,
    /// Per-group offset within the current oscillator state at which that
    /// group starts reporting the successor state. The last group's offset is
    /// the full state duration, so it always reports the true state.
    pub group_phase_offsets_ps: Vec<f64>,
}

/// Oscillator state occupied at fine time `tau`, 0-based.
fn plain_state(profile: &BinProfile, m: usize, plain: usize, tau: f64) -> usize {
    let n = profile.len();
    (0..plain)
        .find(|&p| tau <= profile.edge(((p + 1) * m).min(n)))
        .unwrap_or(plain - 1)
}

/// Simulates the sampling matrix for an event at fine time `fine_time_ps`.
///
/// Group `g` reports the successor of the current state once the fine time
/// passes the `g+1`-th sub-bin boundary of that state, so the number of
/// groups already showing the successor equals the sub-bin index.
pub fn encode_sample_matrix(profile: &BinProfile, cfg: &ChannelConfig, fine_time_ps: f64) -> Result<FineSample> {
    let m = cfg.matrix_order as usize;
    let plain = cfg.plain_bin_count as usize;
    let n = profile.len();
    let tau = fine_time_ps.min(profile.total_ps());
    let p = plain_state(profile, m, plain, tau);
    let start = profile.edge(p * m);

    let mut gray_samples = Vec::with_capacity(m);
    let mut group_phase_offsets_ps = Vec::with_capacity(m);
    for g in 0..m {
        let boundary = profile.edge((p * m + g + 1).min(n));
        group_phase_offsets_ps.push(boundary - start);
        let state = if g + 1 < m && tau > boundary { p + 1 } else { p };
        gray_samples.push(gray_encode(state as u32 % GRAY_STATES)?);
    }
    Ok(FineSample { gray_samples, group_phase_offsets_ps })
}

/// Resolves a [`FineSample`] to a 1-based fine bin:
/// `state * M + (groups reporting the successor) + 1`.
///
/// The rows must hold one state, or two cyclically adjacent states with the
/// successor on the leading groups. Anything else is a bubble and is reported
/// as [`Error::InvalidCode`].
pub fn decode_sample_matrix(sample: &FineSample, cfg: &ChannelConfig) -> Result<usize> {
    let m = cfg.matrix_order as usize;
    if sample.gray_samples.len() != m {
        return Err(Error::InvalidCode(format!(
            "{} rows for a sampling matrix of order {m}",
            sample.gray_samples.len()
        )));
    }
    let states: Vec<u32> = sample.gray_samples.iter().map(|&w| gray_decode(w)).collect();
    let reference = states[m - 1];
    let successor = (reference + 1) % GRAY_STATES;

    let transitions = states.windows(2).filter(|w| w[0] != w[1]).count();
    let advanced = match transitions {
        0 => 0,
        1 if states[0] == successor => states.iter().take_while(|&&s| s == successor).count(),
        _ => {
            return Err(Error::InvalidCode(format!("bubble in sampled states {states:?}")));
        }
    };

    if reference >= cfg.plain_bin_count {
        return Err(Error::InvalidCode(format!(
            "state {reference} beyond the {} states of one period",
            cfg.plain_bin_count
        )));
    }
    let fine = reference as usize * m + advanced + 1;
    let n = cfg.fine_bins();
    if fine > n {
        return Err(Error::InvalidCode(format!("decoded bin {fine} beyond n = {n}")));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synthesize_bin_profile;

    fn words(states: &[u32]) -> Vec<GrayWord> {
        states.iter().map(|&s| gray_encode(s).unwrap()).collect()
    }

    #[test]
    fn uniform_rows_start_the_state() {
        let cfg = ChannelConfig::new(1000.0, 4, 8);
        for s in 0..4 {
            let sample = FineSample { gray_samples: words(&[s; 8]), group_phase_offsets_ps: vec![0.0; 8] };
            assert_eq!(decode_sample_matrix(&sample, &cfg).unwrap(), s as usize * 8 + 1);
        }
    }

    #[test]
    fn transition_after_second_group() {
        let cfg = ChannelConfig::new(1000.0, 4, 8);
        let sample = FineSample {
            gray_samples: words(&[3, 3, 2, 2, 2, 2, 2, 2]),
            group_phase_offsets_ps: vec![0.0; 8],
        };
        // Sub-bin offset 2 within state 2.
        assert_eq!(decode_sample_matrix(&sample, &cfg).unwrap(), 2 * 8 + 2 + 1);
    }

    #[test]
    fn bubbles_are_rejected() {
        let cfg = ChannelConfig::new(1000.0, 4, 8);
        let bad = [
            vec![3, 2, 3, 2, 2, 2, 2, 2],
            vec![2, 2, 3, 3, 3, 3, 3, 3],
            vec![1, 1, 3, 3, 3, 3, 3, 3],
            vec![5, 5, 5, 5, 5, 5, 5, 5],
        ];
        for rows in bad {
            let sample = FineSample { gray_samples: words(&rows), group_phase_offsets_ps: vec![0.0; 8] };
            assert!(matches!(decode_sample_matrix(&sample, &cfg), Err(Error::InvalidCode(_))), "{rows:?}");
        }
        let short = FineSample { gray_samples: words(&[0, 0]), group_phase_offsets_ps: vec![] };
        assert!(decode_sample_matrix(&short, &cfg).is_err());
    }

    #[test]
    fn wraps_through_the_cycle_end() {
        let cfg = ChannelConfig::new(3200.0, 32, 2);
        let sample = FineSample { gray_samples: words(&[0, 31]), group_phase_offsets_ps: vec![0.0; 2] };
        assert_eq!(decode_sample_matrix(&sample, &cfg).unwrap(), 31 * 2 + 2);
    }

    #[test]
    fn offsets_follow_the_profile() {
        let cfg = ChannelConfig::new(1000.0, 4, 2).with_dispersion(0.3).with_seed(1);
        let p = synthesize_bin_profile(&cfg).unwrap();
        let s = encode_sample_matrix(&p, &cfg, p.edge(2) + 1e-6).unwrap();
        assert_eq!(s.group_phase_offsets_ps.len(), 2);
        assert!((s.group_phase_offsets_ps[0] - p.width(3)).abs() < 1e-9);
        assert!((s.group_phase_offsets_ps[1] - (p.width(3) + p.width(4))).abs() < 1e-9);
    }

    #[test]
    fn truncated_last_state_decodes_in_range() {
        let cfg = ChannelConfig::new(1000.0, 4, 4).with_fine_bin_count(14).with_dispersion(0.2).with_seed(5);
        let p = synthesize_bin_profile(&cfg).unwrap();
        for i in 1..=1400 {
            let tau = 1000.0 * i as f64 / 1400.0;
            let s = encode_sample_matrix(&p, &cfg, tau).unwrap();
            assert_eq!(decode_sample_matrix(&s, &cfg).unwrap(), p.fine_bin_of(tau), "tau {tau}");
        }
    }
}
