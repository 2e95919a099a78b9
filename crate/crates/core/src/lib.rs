//! Deterministic closed-loop driving simulator with sensor and compute fault
//! injection, a workload-dependent latency model and a Monte Carlo campaign
//! runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod fault;
pub mod latency;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod sensor;
pub mod world;
