//! Exact feasibility and plan synthesis for layered streaming in
//! upload-constrained peer-to-peer overlays.
//!
//! A fully connected overlay has one source and `k` peers, each with an
//! upload capacity. A layered stream with per-layer rates is demanded at
//! nested resolutions: peer `i` wants layers `1..=max_layer(i)`. This crate
//!
//! * decides exactly whether a rate vector is supportable
//!   ([`capacity::check_feasibility`]),
//! * synthesizes a concrete routing plan for any supportable vector
//!   ([`scheduler::schedule`]),
//! * validates plans independently of how they were produced
//!   ([`verifier::verify_plan`]), and
//! * cross-checks the closed form against brute-force tree packing on
//!   small instances ([`oracle::oracle_feasible`]).
//!
//! All arithmetic is exact rational; no floating point is used anywhere.

pub mod capacity;
pub mod margins;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod rational;
pub mod scheduler;
pub mod verifier;

pub use capacity::{check_feasibility, max_scale, required_total_upload, FeasibilityReport};
pub use margins::{dominant_subsequence, margins, shell_capacity, MarginVector};
pub use model::{demand_profile, instance_to_json, parse_instance, Instance, Node, Peer};
pub use oracle::{enumerate_trees, oracle_feasible, TreeCatalog};
pub use plan::{plan_from_json, plan_to_json, TransmissionPlan};
pub use rational::Rational;
pub use scheduler::{schedule, ScheduleOutcome};
pub use verifier::{plan_stats, verify_plan, VerificationReport};
