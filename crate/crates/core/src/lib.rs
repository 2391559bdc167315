//! Deterministic discrete-event simulator of a two-block programmable
//! switch pipeline (ingress, traffic manager, egress) with pluggable queue
//! management, dual-queue low-latency service, window-based endpoint
//! models, and per-drop resource accounting.

pub mod aqm;
pub mod cli;
pub mod engine;
pub mod hosts;
pub mod metrics;
pub mod model;
pub mod scenario_file;
pub mod sim;
pub mod switch;
pub mod workload;
