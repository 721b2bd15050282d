//! Core library for the poliview toolkit: harvesting political web data
//! under provider constraints, storing it content-addressed, profiling it
//! into dataset views, gating access by policy, and building campaign
//! reports. Everything here is deterministic: given the same inputs and
//! seed, every byte of output is reproducible.

pub mod collect;
pub mod dataset;
pub mod doc;
pub mod error;
pub mod exact;
pub mod analytics;
pub mod policy;
pub mod value;
pub mod view;

pub use error::{Error, Result};
