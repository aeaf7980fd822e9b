//! JSON instance files.
//!
//! ```json
//! {"budget": 2, "max_period": 4,
//!  "locations": [{"id": 0, "population": 100, "initial_good": 50,
//!                 "p_a_gb": 0.05, "p_a_bg": 0.5, "p_p_gb": 0.2, "p_p_bg": 0.05}],
//!  "commute": [{"at": 0, "home": 0, "weight": 1.0}]}
//! ```
//!
//! Pairs missing from `commute` have weight 0, including self-weights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_instance, Instance, Location, TransitionPair, TravelNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub budget: usize,
    pub max_period: usize,
    pub locations: Vec<LocationRecord>,
    #[serde(default)]
    pub commute: Vec<CommuteRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub id: usize,
    pub population: u64,
    pub initial_good: u64,
    pub p_a_gb: f64,
    pub p_a_bg: f64,
    pub p_p_gb: f64,
    pub p_p_bg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommuteRecord {
    pub at: usize,
    pub home: usize,
    pub weight: f64,
}

impl From<&Instance> for InstanceFile {
    fn from(instance: &Instance) -> Self {
        let net = &instance.network;
        let mut commute = Vec::new();
        for home in 0..net.size() {
            for at in 0..net.size() {
                let weight = net.weight(at, home);
                if weight != 0.0 {
                    commute.push(CommuteRecord { at, home, weight });
                }
            }
        }
        Self {
            budget: instance.budget,
            max_period: instance.max_period,
            locations: instance
                .locations
                .iter()
                .map(|l| LocationRecord {
                    id: l.id,
                    population: l.population,
                    initial_good: l.initial_good,
                    p_a_gb: l.transitions.p_a_gb,
                    p_a_bg: l.transitions.p_a_bg,
                    p_p_gb: l.transitions.p_p_gb,
                    p_p_bg: l.transitions.p_p_bg,
                })
                .collect(),
            commute,
        }
    }
}

impl InstanceFile {
    /// Builds the instance, rescaling columns within rounding distance of 1,
    /// and rejects it if any invariant fails.
    pub fn into_instance(self) -> Result<Instance> {
        let m = self.locations.len();
        let mut network = TravelNetwork::from_fn(m, |_, _| 0.0);
        for c in &self.commute {
            if c.at >= m || c.home >= m {
                return Err(Error::OutOfRange(format!(
                    "commute entry ({}, {}) outside {m} locations",
                    c.at, c.home
                )));
            }
            network.set_weight(c.at, c.home, c.weight);
        }
        network.renormalize_columns();
        let instance = Instance {
            locations: self
                .locations
                .into_iter()
                .map(|r| Location {
                    id: r.id,
                    population: r.population,
                    initial_good: r.initial_good,
                    transitions: TransitionPair::new(r.p_a_gb, r.p_a_bg, r.p_p_gb, r.p_p_bg),
                })
                .collect(),
            network,
            budget: self.budget,
            max_period: self.max_period,
        };
        let report = validate_instance(&instance);
        if report.is_empty() {
            Ok(instance)
        } else {
            Err(Error::Invalid(report))
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_instance()
}

pub fn instance_to_json(instance: &Instance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from(instance))?)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let mut text = instance_to_json(instance)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
