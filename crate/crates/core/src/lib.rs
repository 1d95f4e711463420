//! Defect dependency analysis over istarml Strategic Dependency models.
//!
//! The pipeline: parse and validate a product model ([`istarml`]), extract the
//! part of it a defect touches ([`graph`]), measure how far the defect spreads
//! across the product ([`metric`]), and rank open defects for triage
//! ([`priority`]). [`store`] persists models, defects and results by version.

pub mod decimal;
pub mod graph;
pub mod istarml;
pub mod metric;
pub mod priority;
pub mod store;
pub mod workflow;
