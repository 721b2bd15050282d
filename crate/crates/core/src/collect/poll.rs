//! Adaptive poll interval tuning from the novelty of the last fetch.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PollSchedule {
    pub interval: f64,
    pub min_interval: f64,
    pub max_interval: f64,
    /// Novelty of the most recent adapted poll, in [0, 1].
    #[serde(default)]
    pub last_novelty_ratio: f64,
}

impl PollSchedule {
    pub fn new(interval: f64, min_interval: f64, max_interval: f64) -> Result<PollSchedule> {
        let s = PollSchedule {
            interval,
            min_interval,
            max_interval,
            last_novelty_ratio: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_interval > 0.0) {
            return Err(Error::Plan("poll min_interval must be positive".into()));
        }
        if !(self.min_interval <= self.interval && self.interval <= self.max_interval) {
            return Err(Error::Plan(format!(
                "poll intervals must satisfy min <= interval <= max, got {} <= {} <= {}",
                self.min_interval, self.interval, self.max_interval
            )));
        }
        Ok(())
    }
}

/// Multiplicative backoff/speedup on novelty: mostly-stale fetches (< 0.1
/// new) double the interval up to the cap, mostly-fresh ones (> 0.5 new)
/// halve it down to the floor, anything between leaves it alone.
///
/// `novelty_ratio` is new-unique documents over fetched documents for the
/// last poll; a poll that fetched nothing has no ratio, and the caller must
/// keep the schedule unchanged rather than call this.
pub fn adapt_poll_interval(sched: &PollSchedule, novelty_ratio: f64) -> Result<PollSchedule> {
    if !(0.0..=1.0).contains(&novelty_ratio) {
        return Err(Error::InvalidValue(format!(
            "novelty ratio {novelty_ratio} outside [0, 1]"
        )));
    }
    let interval = if novelty_ratio < 0.1 {
        (sched.interval * 2.0).min(sched.max_interval)
    } else if novelty_ratio > 0.5 {
        (sched.interval / 2.0).max(sched.min_interval)
    } else {
        sched.interval
    };
    Ok(PollSchedule {
        interval,
        last_novelty_ratio: novelty_ratio,
        ..*sched
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(interval: f64, min: f64, max: f64) -> PollSchedule {
        PollSchedule::new(interval, min, max).unwrap()
    }

    #[test]
    fn stale_fetch_doubles_up_to_cap() {
        let s = adapt_poll_interval(&sched(60.0, 30.0, 600.0), 0.05).unwrap();
        assert_eq!(s.interval, 120.0);
        assert_eq!(s.last_novelty_ratio, 0.05);
        let capped = adapt_poll_interval(&sched(400.0, 30.0, 600.0), 0.0).unwrap();
        assert_eq!(capped.interval, 600.0);
    }

    #[test]
    fn fresh_fetch_halves_down_to_floor() {
        let s = adapt_poll_interval(&sched(60.0, 30.0, 600.0), 0.8).unwrap();
        assert_eq!(s.interval, 30.0);
        let floored = adapt_poll_interval(&sched(40.0, 30.0, 600.0), 0.9).unwrap();
        assert_eq!(floored.interval, 30.0);
    }

    #[test]
    fn middling_novelty_changes_nothing() {
        for ratio in [0.1, 0.3, 0.5] {
            let s = adapt_poll_interval(&sched(60.0, 30.0, 600.0), ratio).unwrap();
            assert_eq!(s.interval, 60.0, "ratio {ratio} is in the dead band");
        }
    }

    #[test]
    fn zero_novelty_converges_to_max_and_stays() {
        let mut s = sched(60.0, 30.0, 960.0);
        for _ in 0..10 {
            s = adapt_poll_interval(&s, 0.0).unwrap();
        }
        assert_eq!(s.interval, 960.0);
        let again = adapt_poll_interval(&s, 0.0).unwrap();
        assert_eq!(again.interval, 960.0, "max is a fixed point");
    }

    #[test]
    fn interval_stays_in_bounds_for_any_ratio() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let mut s = sched(120.0, 30.0, 600.0);
        for _ in 0..1000 {
            s = adapt_poll_interval(&s, rng.random_range(0.0..=1.0)).unwrap();
            assert!(s.min_interval <= s.interval && s.interval <= s.max_interval);
        }
    }

    #[test]
    fn out_of_range_ratio_is_rejected() {
        assert!(adapt_poll_interval(&sched(60.0, 30.0, 600.0), 1.5).is_err());
        assert!(adapt_poll_interval(&sched(60.0, 30.0, 600.0), -0.1).is_err());
    }
}
