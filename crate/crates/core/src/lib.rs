//! Joint assignment of computational tasks to network slices and management
//! of the radio and computing resources they share.
//!
//! Wireless devices either compute a task locally or offload it through an
//! access point to an edge cloud inside one slice. Bandwidth is split across
//! slices and, within a slice, across devices; edge-cloud capacity is split
//! within each slice. The crate provides:
//!
//! - closed-form optimal provisioning coefficients and two baseline
//!   inter-slice policies ([`allocation`]),
//! - the induced completion-time costs in general and reduced congestion
//!   form, plus the exact potential of the offloading game ([`cost`]),
//! - a best-response solver that computes pure equilibria of that game with
//!   certification ([`solver`]),
//! - exhaustive and perturbation-based ground truth for small instances
//!   ([`oracle`]),
//! - a seeded scenario generator with a realistic radio model
//!   ([`scenario`]), and
//! - a reproducible sweep harness with CSV output ([`experiments`]).
//!
//! Scenario data is immutable after construction and safe to share across
//! threads; with the default `parallel` feature the oracle, the perturbation
//! checks and the sweep harness fan out over all cores.

pub mod allocation;
pub mod cost;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Decision, DecisionVector, Scenario};
