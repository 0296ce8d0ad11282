//! Seismic risk assessment and budget-constrained retrofit planning for
//! electric power networks.
//!
//! The crate chains four stages into one deterministic, seed-driven pipeline:
//!
//! - [`hazard`] — earthquake recurrence, ground-motion prediction, and
//!   spatially correlated PGA field sampling;
//! - [`fragility`] — damage-state sampling and damage-to-functionality
//!   mapping per component;
//! - [`topology`] + [`dcopf`] — post-damage islanding and per-island DC
//!   optimal power flow with emergency load shedding;
//! - [`simulation`] + [`retrofit`] — Monte Carlo risk integration (EAFL) and
//!   genetic-algorithm retrofit planning under a budget.
//!
//! [`io`] reads the input files and writes the result artifacts; [`model`]
//! holds the static network description shared by every stage.

pub mod dcopf;
pub mod fragility;
pub mod hazard;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod retrofit;
pub mod rng;
pub mod simulation;
pub mod topology;
