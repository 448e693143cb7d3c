use super::config::ChannelConfig;
use super::profile::BinProfile;
use crate::error::{Error, Result};

/// Coarse and fine codes latched for one STOP event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimestampRecord {
    /// Full clock periods elapsed before the sampling edge (`N_c`).
    pub coarse_code: u64,
    /// 1-based fine bin containing `fine_time_ps`.
    pub fine_bin: usize,
    /// Time from the event to the sampling edge, in `(0, T]`.
    pub fine_time_ps: f64,
}

impl TimestampRecord {
    /// Interval reconstructed from the codes alone, taking the fine time as
    /// the centre of the recorded bin.
    pub fn quantized_interval(&self, profile: &BinProfile, cfg: &ChannelConfig) -> f64 {
        (self.coarse_code + 1) as f64 * cfg.clock_period_ps - profile.bin_center_ps(self.fine_bin)
    }
}

/// Captures an event at `event_time_ps` after the synchronous START edge.
pub fn capture_timestamp(profile: &BinProfile, cfg: &ChannelConfig, event_time_ps: f64) -> Result<TimestampRecord> {
    if !(event_time_ps.is_finite() && event_time_ps >= 0.0) {
        return Err(Error::NegativeEventTime(event_time_ps));
    }
    let period = cfg.clock_period_ps;
    let mut coarse = (event_time_ps / period).floor() as u64;
    let mut tau = (coarse + 1) as f64 * period - event_time_ps;
    if tau <= 0.0 {
        coarse += 1;
        tau += period;
    } else if tau > period && coarse > 0 {
        coarse -= 1;
        tau -= period;
    }
    let tau = tau.min(period);
    Ok(TimestampRecord { coarse_code: coarse, fine_bin: profile.fine_bin_of(tau), fine_time_ps: tau })
}

/// `TI = (N_c + 1) * T - tau_fine`.
pub fn reconstruct_interval(rec: &TimestampRecord, cfg: &ChannelConfig) -> f64 {
    (rec.coarse_code + 1) as f64 * cfg.clock_period_ps - rec.fine_time_ps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_ns() -> (BinProfile, ChannelConfig) {
        let cfg = ChannelConfig::new(10_000.0, 4, 1);
        (BinProfile::uniform(4, 10_000.0).unwrap(), cfg)
    }

    #[test]
    fn capture_trace() {
        let (p, cfg) = ten_ns();
        let r = capture_timestamp(&p, &cfg, 3_000.0).unwrap();
        assert_eq!(r.coarse_code, 0);
        assert_eq!(r.fine_time_ps, 7_000.0);
        let r = capture_timestamp(&p, &cfg, 23_000.0).unwrap();
        assert_eq!(r.coarse_code, 2);
        assert_eq!(r.fine_time_ps, 7_000.0);
        assert_eq!(r.fine_bin, 3);
    }

    #[test]
    fn event_on_edge_gets_full_period() {
        let (p, cfg) = ten_ns();
        let r = capture_timestamp(&p, &cfg, 0.0).unwrap();
        assert_eq!((r.coarse_code, r.fine_time_ps, r.fine_bin), (0, 10_000.0, 4));
        let r = capture_timestamp(&p, &cfg, 20_000.0).unwrap();
        assert_eq!((r.coarse_code, r.fine_time_ps), (2, 10_000.0));
        assert_eq!(reconstruct_interval(&r, &cfg), 20_000.0);
    }

    #[test]
    fn reconstruct_examples() {
        let cfg = ChannelConfig::new(10_000.0, 4, 1);
        let rec = |coarse_code, fine_time_ps| TimestampRecord { coarse_code, fine_bin: 1, fine_time_ps };
        assert_eq!(reconstruct_interval(&rec(2, 3_000.0), &cfg), 27_000.0);
        assert_eq!(reconstruct_interval(&rec(0, 10_000.0), &cfg), 0.0);
        let (p, _) = ten_ns();
        let r = capture_timestamp(&p, &cfg, 3_000.0).unwrap();
        assert_eq!(reconstruct_interval(&r, &cfg), 3_000.0);
    }

    #[test]
    fn uniform_bracketing() {
        let p = BinProfile::uniform(4, 1000.0).unwrap();
        let cfg = ChannelConfig::new(1000.0, 4, 1);
        // Event 740 ps after START leaves 260 ps to the next edge.
        assert_eq!(capture_timestamp(&p, &cfg, 740.0).unwrap().fine_bin, 2);
    }

    #[test]
    fn negative_time_rejected() {
        let (p, cfg) = ten_ns();
        assert!(matches!(capture_timestamp(&p, &cfg, -1.0), Err(Error::NegativeEventTime(_))));
        assert!(capture_timestamp(&p, &cfg, f64::NAN).is_err());
    }
}
