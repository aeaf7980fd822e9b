//! Synthetic instances: spatial preferential-attachment travel networks,
//! random transition rates, domain presets, and small hand-built layouts.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Location, TransitionPair, TravelNetwork};

const MAX_REJECTIONS: usize = 100_000;

/// Closed sampling interval.
pub type Range = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRanges {
    pub p_a_gb: Range,
    pub p_a_bg: Range,
    pub p_p_gb: Range,
    pub p_p_bg: Range,
    /// Forces `p_a_gb = p_p_gb`: the intervention cures but does not protect.
    pub zero_prevention: bool,
}

impl Default for TransitionRanges {
    fn default() -> Self {
        Self {
            p_a_gb: (0.0, 1.0),
            p_a_bg: (0.0, 1.0),
            p_p_gb: (0.0, 1.0),
            p_p_bg: (0.0, 1.0),
            zero_prevention: false,
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): Range) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Rejection-samples rates inside `ranges` until every assumption holds.
pub fn sample_transitions(rng: &mut impl Rng, ranges: &TransitionRanges) -> Result<TransitionPair> {
    for _ in 0..MAX_REJECTIONS {
        let p_p_gb = uniform(rng, ranges.p_p_gb);
        let p_a_gb = if ranges.zero_prevention {
            p_p_gb
        } else {
            uniform(rng, ranges.p_a_gb)
        };
        let t = TransitionPair::new(p_a_gb, uniform(rng, ranges.p_a_bg), p_p_gb, uniform(rng, ranges.p_p_bg));
        if t.violated().is_empty() {
            return Ok(t);
        }
    }
    Err(Error::Infeasible(format!(
        "no valid transition rates after {MAX_REJECTIONS} draws from {ranges:?}"
    )))
}

pub fn generate_transitions(seed: u64, ranges: &TransitionRanges) -> Result<TransitionPair> {
    sample_transitions(&mut ChaCha8Rng::seed_from_u64(seed), ranges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub m: usize,
    /// Edges each new node attaches with.
    pub attach: usize,
    /// Chance of one extra attachment, to tune the average degree between
    /// `2 * attach` and `2 * (attach + 1)`.
    pub extra_attach_prob: f64,
    /// Distance scale of the attachment kernel.
    pub radius: f64,
    /// Share of residents staying home.
    pub self_stay: f64,
    pub population: (u64, u64),
    /// Initial good share of each population.
    pub initial_good: Range,
    pub transitions: TransitionRanges,
    pub budget: usize,
    pub max_period: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            m: 50,
            attach: 1,
            extra_attach_prob: 0.4,
            radius: 0.2,
            self_stay: 0.5,
            population: (100, 1000),
            initial_good: (0.3, 0.7),
            transitions: TransitionRanges::default(),
            budget: 5,
            max_period: 10,
            seed: 0,
        }
    }
}

/// Undirected simple graph grown by spatial preferential attachment: nodes
/// land uniformly in the unit square and each new node links to existing
/// ones with weight `(degree + 1) · exp(-distance / radius)`.
pub fn spatial_attachment_graph(config: &GeneratorConfig, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let m = config.m;
    let pos: Vec<(f64, f64)> = (0..m).map(|_| (rng.random(), rng.random())).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 1..m {
        let mut links = config.attach;
        if rng.random::<f64>() < config.extra_attach_prob {
            links += 1;
        }
        let mut weight: Vec<f64> = (0..i)
            .map(|j| {
                let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
                (adj[j].len() as f64 + 1.0) * (-d / config.radius).exp()
            })
            .collect();
        for _ in 0..links.min(i) {
            let total: f64 = weight.iter().sum();
            let j = if total > 0.0 {
                let mut x = rng.random::<f64>() * total;
                let mut pick = weight.iter().rposition(|&w| w > 0.0).unwrap_or(0);
                for (j, &w) in weight.iter().enumerate() {
                    if x < w {
                        pick = j;
                        break;
                    }
                    x -= w;
                }
                pick
            } else {
                // kernel underflow; fall back to any unlinked node
                match (0..i).find(|&j| !adj[i].contains(&j)) {
                    Some(j) => j,
                    None => break,
                }
            };
            weight[j] = 0.0;
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    adj
}

/// Residents stay home with probability `self_stay` and otherwise visit a
/// uniformly chosen neighbour; isolated nodes keep everyone home.
pub fn commute_network(adj: &[Vec<usize>], self_stay: f64) -> TravelNetwork {
    let m = adj.len();
    let mut net = TravelNetwork::from_fn(m, |_, _| 0.0);
    for v in 0..m {
        if adj[v].is_empty() {
            net.set_weight(v, v, 1.0);
            continue;
        }
        net.set_weight(v, v, self_stay);
        let share = (1.0 - self_stay) / adj[v].len() as f64;
        for &u in &adj[v] {
            net.set_weight(u, v, share);
        }
    }
    net
}

pub fn generate_synthetic(config: &GeneratorConfig) -> Result<Instance> {
    if config.m < config.attach + 1 {
        return Err(Error::Infeasible(format!(
            "{} nodes cannot each attach to {} others",
            config.m, config.attach
        )));
    }
    if !(0.0..=1.0).contains(&config.self_stay) {
        return Err(Error::Infeasible(format!("self-stay {} outside [0, 1]", config.self_stay)));
    }
    let (lo, hi) = config.population;
    if lo == 0 || hi < lo {
        return Err(Error::Infeasible(format!("population range {lo}..={hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let adj = spatial_attachment_graph(config, &mut rng);
    let network = commute_network(&adj, config.self_stay);
    let locations = (0..config.m)
        .map(|id| {
            let population = rng.random_range(lo..=hi);
            let share = uniform(&mut rng, config.initial_good).clamp(0.0, 1.0);
            Ok(Location {
                id,
                population,
                initial_good: (share * population as f64).round() as u64,
                transitions: sample_transitions(&mut rng, &config.transitions)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance {
        locations,
        network,
        budget: config.budget.clamp(1, config.m),
        max_period: config.max_period,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Urban,
    Rural,
    Food,
    Synthetic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Urban, Preset::Rural, Preset::Food, Preset::Synthetic];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Urban => "urban",
            Preset::Rural => "rural",
            Preset::Food => "food",
            Preset::Synthetic => "synthetic",
        }
    }

    pub fn default_size(&self) -> usize {
        match self {
            Preset::Urban => 431,
            Preset::Rural => 631,
            Preset::Food => 561,
            Preset::Synthetic => 50,
        }
    }

    /// Generator settings for this domain; `m = None` uses the default size.
    pub fn config(&self, m: Option<usize>, seed: u64) -> GeneratorConfig {
        let m = m.unwrap_or(self.default_size());
        let base = GeneratorConfig {
            m,
            seed,
            budget: (m / 10).max(1),
            ..GeneratorConfig::default()
        };
        match self {
            Preset::Urban => GeneratorConfig {
                population: (500, 5000),
                radius: 0.1,
                ..base
            },
            Preset::Rural => GeneratorConfig {
                population: (20, 200),
                radius: 0.3,
                self_stay: 0.7,
                ..base
            },
            Preset::Food => GeneratorConfig {
                transitions: TransitionRanges {
                    zero_prevention: true,
                    ..TransitionRanges::default()
                },
                ..base
            },
            Preset::Synthetic => base,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown preset {s:?}")))
    }
}

fn uniform_locations(m: usize, population: u64, initial_good: u64, t: TransitionPair) -> Vec<Location> {
    (0..m)
        .map(|id| Location {
            id,
            population,
            initial_good,
            transitions: t,
        })
        .collect()
}

/// Cycle of `m` identical locations; residents stay home with probability
/// `self_stay` and split the rest between both neighbours.
pub fn ring(m: usize, self_stay: f64, t: TransitionPair, population: u64, budget: usize) -> Instance {
    let network = TravelNetwork::from_fn(m, |u, v| {
        if u == v {
            self_stay
        } else if (u + 1) % m == v || (v + 1) % m == u {
            (1.0 - self_stay) / 2.0
        } else {
            0.0
        }
    });
    Instance {
        locations: uniform_locations(m, population, population / 2, t),
        network,
        budget,
        max_period: 4,
    }
}

/// The four-location square with rates `(p, 1, p, 0)`: the intervention
/// cures everyone it reaches and nobody recovers unaided. Scenario 1 sends
/// every resident to a neighbour; scenario 2 keeps half at home.
///
/// The certain cure breaks the strict rate inequalities, so the result is
/// not meant to pass validation.
pub fn square(p: f64, scenario: u8, population: u64) -> Instance {
    let self_stay = if scenario == 1 { 0.0 } else { 0.5 };
    let mut inst = ring(4, self_stay, TransitionPair::new(p, 1.0, p, 0.0), population, 2);
    for l in &mut inst.locations {
        l.initial_good = population;
    }
    inst
}

/// `count` disjoint clusters of `size` identical locations. Inside a cluster
/// residents stay home with probability `self_stay` and spread the rest
/// evenly over the other members.
pub fn clusters(
    count: usize,
    size: usize,
    self_stay: f64,
    transitions: &[TransitionPair],
    population: u64,
    budget: usize,
    max_period: usize,
) -> Instance {
    let m = count * size;
    let network = TravelNetwork::from_fn(m, |u, v| {
        if u == v {
            if size == 1 {
                1.0
            } else {
                self_stay
            }
        } else if u / size == v / size {
            (1.0 - self_stay) / (size - 1) as f64
        } else {
            0.0
        }
    });
    let locations = (0..m)
        .map(|id| Location {
            id,
            population,
            initial_good: population / 2,
            transitions: transitions[(id / size) % transitions.len()],
        })
        .collect();
    Instance {
        locations,
        network,
        budget,
        max_period,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn generated_instances_validate() {
        for seed in 0..20 {
            let cfg = GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            };
            let inst = generate_synthetic(&cfg).unwrap();
            assert!(validate_instance(&inst).is_empty(), "seed {seed}");
        }
        for p in Preset::ALL {
            let inst = generate_synthetic(&p.config(Some(60), 3)).unwrap();
            assert!(validate_instance(&inst).is_empty(), "{p}");
        }
    }

    #[test]
    fn full_self_stay_is_diagonal() {
        let cfg = GeneratorConfig {
            self_stay: 1.0,
            ..GeneratorConfig::default()
        };
        assert_eq!(generate_synthetic(&cfg).unwrap().network, TravelNetwork::identity(cfg.m));
    }

    #[test]
    fn seeded() {
        let cfg = GeneratorConfig::default();
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
        let r = TransitionRanges::default();
        assert_eq!(generate_transitions(4, &r).unwrap(), generate_transitions(4, &r).unwrap());
    }

    #[test]
    fn food_has_no_prevention() {
        let inst = generate_synthetic(&Preset::Food.config(Some(40), 1)).unwrap();
        assert!(inst.locations.iter().all(|l| l.transitions.prevention() == 0.0));
    }

    #[test]
    fn pinned_equal_recovery_rejected() {
        // equal active and passive recovery leaves no cure to beat prevention
        let r = TransitionRanges {
            p_a_bg: (0.05, 0.05),
            p_p_bg: (0.05, 0.05),
            ..TransitionRanges::default()
        };
        assert!(matches!(generate_transitions(0, &r), Err(Error::Infeasible(_))));
    }

    #[test]
    fn too_few_nodes() {
        let cfg = GeneratorConfig {
            m: 2,
            attach: 2,
            ..GeneratorConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn presets_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn average_degree_in_street_range() {
        let cfg = GeneratorConfig {
            m: 400,
            ..GeneratorConfig::default()
        };
        let adj = spatial_attachment_graph(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let avg = adj.iter().map(Vec::len).sum::<usize>() as f64 / cfg.m as f64;
        assert!((2.5..=3.1).contains(&avg), "{avg}");
    }
}
