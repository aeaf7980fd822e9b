//! Scheduling mobile interventions over a commuting network.
//!
//! Locations are restless arms with a good and a bad state. Pulling an arm
//! reaches everyone currently at that location, including visitors, so arms
//! share reward through the people who travel between them. Planning runs in
//! two steps: [`periods::plan_periods`] picks a visiting period per arm, and
//! [`scheduler::engage`] dispatches those periods round by round, keeping
//! arms that share residents in phase. [`simulator`] replays any schedule on
//! an individual-level population, and [`experiment`] compares it with the
//! baselines.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod generator;
pub mod io;
pub mod model;
pub mod periods;
pub mod scheduler;
pub mod simulator;
pub mod spectral;
