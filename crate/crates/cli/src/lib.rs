//! Library half of the layercast CLI: command implementations and the
//! seeded instance sampler, kept callable so the harness parts can be
//! exercised directly from tests.

pub mod random;
pub mod run;
