//! Stream subscriptions with bounded buffering.
//!
//! A subscription buffers incoming items until the first flush bound is
//! crossed (count, elapsed seconds since last flush, or buffered bytes),
//! then hands the whole batch over. Bounds are checked in that order, so a
//! tie is attributed deterministically.

use serde::{Deserialize, Serialize};

use crate::value::DocValue;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlushPolicy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elapsed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bytes: Option<u64>,
}

impl FlushPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_count.is_none() && self.max_elapsed.is_none() && self.max_bytes.is_none() {
            return Err(Error::Plan("flush policy needs at least one bound".into()));
        }
        if self.max_count.is_some_and(|c| c == 0) {
            return Err(Error::Plan("flush max_count must be positive".into()));
        }
        if self.max_elapsed.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Plan("flush max_elapsed must be positive".into()));
        }
        if self.max_bytes.is_some_and(|b| b == 0) {
            return Err(Error::Plan("flush max_bytes must be positive".into()));
        }
        Ok(())
    }
}

/// When a subscription stops: on explicit unsubscribe only, or after a fixed
/// duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubscriptionEnd {
    Unsubscribe,
    Duration(f64),
}

/// One buffered stream item: a body and its arrival time.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamItem {
    pub body: DocValue,
    pub at: f64,
}

impl StreamItem {
    pub fn bytes(&self) -> u64 {
        self.body.canonical_bytes().len() as u64
    }
}

/// Which bound fired a flush.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlushTrigger {
    Count,
    Elapsed,
    Bytes,
    /// Residual buffer handed over by unsubscribe.
    Final,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlushOutcome {
    Hold,
    Flush {
        batch: Vec<StreamItem>,
        trigger: FlushTrigger,
    },
}

#[derive(Debug)]
pub struct Subscription {
    pub provider_id: String,
    /// Seconds between produced items.
    pub production_period: f64,
    pub started_at: f64,
    pub end: SubscriptionEnd,
    pub flush: FlushPolicy,
    buffer: Vec<StreamItem>,
    buffered_bytes: u64,
    last_flush_at: f64,
    flush_count: u64,
    delivered: u64,
    ended: bool,
}

impl Subscription {
    pub fn new(
        provider_id: String,
        production_period: f64,
        started_at: f64,
        end: SubscriptionEnd,
        flush: FlushPolicy,
    ) -> Result<Subscription> {
        flush.validate()?;
        if !(production_period > 0.0) {
            return Err(Error::Plan("production period must be positive".into()));
        }
        if let SubscriptionEnd::Duration(d) = end {
            if !(d >= 0.0) {
                return Err(Error::Plan("subscription duration must be non-negative".into()));
            }
        }
        Ok(Subscription {
            provider_id,
            production_period,
            started_at,
            end,
            flush,
            buffer: Vec::new(),
            buffered_bytes: 0,
            last_flush_at: started_at,
            flush_count: 0,
            delivered: 0,
            ended: false,
        })
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Total items accepted over the subscription's lifetime.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Count of flushes so far; elapsed-timer events use it to detect that a
    /// newer flush made them stale.
    pub fn flush_epoch(&self) -> u64 {
        self.flush_count
    }

    pub fn last_flush_at(&self) -> f64 {
        self.last_flush_at
    }

    /// The instant the subscription is due to end, if it has a fixed one.
    pub fn end_time(&self) -> Option<f64> {
        match self.end {
            SubscriptionEnd::Unsubscribe => None,
            SubscriptionEnd::Duration(d) => Some(self.started_at + d),
        }
    }

    /// Buffer `item` (if any) and decide whether to flush at `now`.
    ///
    /// Passing no item is a timer check for the elapsed bound. An empty
    /// buffer never flushes; the batch is capped at `max_count` because the
    /// check fires the moment the count bound is reached.
    pub fn flush_decision(&mut self, item: Option<StreamItem>, now: f64) -> Result<FlushOutcome> {
        if self.ended {
            return Err(Error::SubscriptionEnded(self.provider_id.clone()));
        }
        if let Some(item) = item {
            self.buffered_bytes += item.bytes();
            self.buffer.push(item);
            self.delivered += 1;
        }
        if self.buffer.is_empty() {
            return Ok(FlushOutcome::Hold);
        }
        let trigger = if self
            .flush
            .max_count
            .is_some_and(|c| self.buffer.len() as u32 >= c)
        {
            Some(FlushTrigger::Count)
        } else if self
            .flush
            .max_elapsed
            .is_some_and(|e| now - self.last_flush_at >= e)
        {
            Some(FlushTrigger::Elapsed)
        } else if self.flush.max_bytes.is_some_and(|b| self.buffered_bytes >= b) {
            Some(FlushTrigger::Bytes)
        } else {
            None
        };
        match trigger {
            None => Ok(FlushOutcome::Hold),
            Some(trigger) => Ok(FlushOutcome::Flush {
                batch: self.drain(now),
                trigger,
            }),
        }
    }

    /// End the subscription, handing back any residual buffer.
    pub fn unsubscribe(&mut self, now: f64) -> Result<Option<Vec<StreamItem>>> {
        if self.ended {
            return Err(Error::SubscriptionEnded(self.provider_id.clone()));
        }
        self.ended = true;
        if self.buffer.is_empty() {
            Ok(None)
        } else {
            Ok(Some(self.drain(now)))
        }
    }

    fn drain(&mut self, now: f64) -> Vec<StreamItem> {
        self.buffered_bytes = 0;
        self.last_flush_at = now;
        self.flush_count += 1;
        std::mem::take(&mut self.buffer)
    }
}
