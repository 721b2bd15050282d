//! Sliding-window rate limiting against an SLA quota.

use std::collections::VecDeque;

use super::SlaContract;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateDecision {
    Allow,
    /// Seconds until the oldest in-window grant leaves the window.
    Deny { retry_after: f64 },
}

/// Allow iff fewer than `max_requests` grants fall in `(now − window, now]`.
///
/// The interval is half-open on the left: a grant exactly `window` seconds
/// old has already left.
pub fn rate_limit_check(sla: &SlaContract, history: &[f64], now: f64) -> RateDecision {
    debug_assert!(history.windows(2).all(|w| w[0] <= w[1]), "history sorted");
    let cutoff = now - sla.window;
    let in_window: Vec<f64> = history
        .iter()
        .copied()
        .filter(|&t| t > cutoff && t <= now)
        .collect();
    if (in_window.len() as u32) < sla.max_requests {
        RateDecision::Allow
    } else {
        RateDecision::Deny {
            retry_after: time_to_expiry(in_window[0], sla.window, now),
        }
    }
}

/// Seconds until `oldest` has left the window ending at `now`.
///
/// Plain `oldest + window − now` can round to zero or below even while the
/// window check still counts the grant, and a wait that small would stall a
/// caller that sleeps `retry_after` and re-checks: the retried check would
/// deny again at the same instant. Nudge upward until a check at
/// `now + retry_after` is guaranteed to see the grant expired.
fn time_to_expiry(oldest: f64, window: f64, now: f64) -> f64 {
    let mut target = oldest + window;
    while target - window < oldest {
        target = target.next_up();
    }
    // The deny branch implies now − window < oldest ≤ target − window, so
    // target > now and the difference rounds strictly positive.
    let mut wait = target - now;
    while now + wait < target {
        wait = wait.next_up();
    }
    wait
}

/// Stateful wrapper holding the grant history for one provider.
#[derive(Debug)]
pub struct RateLimiter {
    sla: SlaContract,
    grants: VecDeque<f64>,
}

impl RateLimiter {
    pub fn new(sla: SlaContract) -> RateLimiter {
        RateLimiter {
            sla,
            grants: VecDeque::new(),
        }
    }

    pub fn check(&mut self, now: f64) -> RateDecision {
        // Entries at exactly now − window are already outside every window
        // from now on; dropping them keeps the history short.
        while let Some(&front) = self.grants.front() {
            if front <= now - self.sla.window {
                self.grants.pop_front();
            } else {
                break;
            }
        }
        let (a, b) = self.grants.as_slices();
        if b.is_empty() {
            rate_limit_check(&self.sla, a, now)
        } else {
            let hist: Vec<f64> = self.grants.iter().copied().collect();
            rate_limit_check(&self.sla, &hist, now)
        }
    }

    /// Record a granted request. Callers must have seen `Allow` for `now`.
    pub fn record(&mut self, now: f64) {
        debug_assert!(self.grants.back().is_none_or(|&b| b <= now));
        self.grants.push_back(now);
    }

    pub fn granted(&self) -> usize {
        self.grants.len()
    }
}
