//! Per-request cost accounting: time, money, and an abstract energy unit.

use serde::{Deserialize, Serialize};

use super::{NetworkProfile, ProviderDescriptor};

/// Weights for the energy model: `alpha` units per second spent, `beta`
/// units per byte moved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            alpha: 1.0,
            beta: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub request_id: String,
    pub transfer_time: f64,
    pub execution_time: f64,
    pub monetary_cost: f64,
    pub energy_cost: f64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

/// Price one request: fixed latency plus transfer at line rate, method
/// execution at the provider's capacity, invocation price plus per-byte
/// price, and the weighted energy sum of all of it.
pub fn cost_of_request(
    net: &NetworkProfile,
    p: &ProviderDescriptor,
    params: &CostParams,
    request_id: String,
    bytes_in: u64,
    bytes_out: u64,
) -> CostRecord {
    let total_bytes = (bytes_in + bytes_out) as f64;
    let transfer_time = net.latency + total_bytes / net.throughput;
    let execution_time = 1.0 / p.method_throughput;
    let monetary_cost = p.invocation_price + net.price_per_byte * total_bytes;
    let energy_cost = params.alpha * (transfer_time + execution_time) + params.beta * total_bytes;
    CostRecord {
        request_id,
        transfer_time,
        execution_time,
        monetary_cost,
        energy_cost,
        bytes_in,
        bytes_out,
    }
}

/// Component-wise totals over a ledger, summed in record order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostTotals {
    pub requests: u64,
    pub transfer_time: f64,
    pub execution_time: f64,
    pub monetary_cost: f64,
    pub energy_cost: f64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

impl CostTotals {
    pub fn add(&mut self, r: &CostRecord) {
        self.requests += 1;
        self.transfer_time += r.transfer_time;
        self.execution_time += r.execution_time;
        self.monetary_cost += r.monetary_cost;
        self.energy_cost += r.energy_cost;
        self.bytes_in += r.bytes_in;
        self.bytes_out += r.bytes_out;
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub records: Vec<CostRecord>,
}

impl CostLedger {
    pub fn push(&mut self, record: CostRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fold in insertion order; callers verifying additivity must sum the
    /// same way.
    pub fn totals(&self) -> CostTotals {
        let mut t = CostTotals::default();
        for r in &self.records {
            t.add(r);
        }
        t
    }
}
