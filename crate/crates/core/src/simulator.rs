//! Individual-level stochastic simulation with seeded, order-independent
//! randomness.
//!
//! Every (replication, round, location) triple draws from its own ChaCha8
//! stream, seeded with `mix(mix(s ^ round) ^ location)` where
//! `s = mix(mix(master ^ K) ^ rep)` and `mix` is the SplitMix64 finalizer. Replications can therefore run in any order or in parallel and
//! still produce the same numbers.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{reached_fractions, ActionVector, Instance, TransitionPair, TravelNetwork};
use crate::scheduler::{join_ids, Policy, Schedule};

const STREAM_KEY: u64 = 0x6a09_e667_f3bc_c909;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` under `master`.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    mix(mix(master ^ STREAM_KEY) ^ rep)
}

fn location_stream(seed: u64, round: usize, location: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ round as u64) ^ location as u64))
}

/// Good-individual count per location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationState {
    pub good: Vec<u64>,
}

impl PopulationState {
    pub fn initial(instance: &Instance) -> Self {
        Self {
            good: instance.locations.iter().map(|l| l.initial_good).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub rewards: Vec<f64>,
    pub actions: Vec<ActionVector>,
    /// State at the start of each round.
    pub states: Vec<PopulationState>,
}

impl SimTrace {
    pub fn horizon(&self) -> usize {
        self.rewards.len()
    }

    pub fn average_reward(&self) -> f64 {
        self.average_reward_from(0)
    }

    /// Mean reward over rounds `start..horizon`.
    pub fn average_reward_from(&self, start: usize) -> f64 {
        let tail = &self.rewards[start.min(self.rewards.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "reward", "pulled_ids"])?;
        for (t, (r, a)) in self.rewards.iter().zip(&self.actions).enumerate() {
            w.write_record([t.to_string(), r.to_string(), join_ids(a)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
    }
}

/// One round for one location: exposure is drawn per compartment, then each
/// sub-group moves with its own rates.
fn step_location(rng: &mut ChaCha8Rng, t: &TransitionPair, n: u64, good: u64, w_hat: f64) -> u64 {
    let bad = n - good;
    let good_exposed = draw(rng, good, w_hat);
    let bad_exposed = draw(rng, bad, w_hat);
    let lost = draw(rng, good_exposed, t.p_a_gb) + draw(rng, good - good_exposed, t.p_p_gb);
    let gained = draw(rng, bad_exposed, t.p_a_bg) + draw(rng, bad - bad_exposed, t.p_p_bg);
    good - lost + gained
}

/// Runs `actions` once. The round reward is the expected benefit of this
/// round's exposure given the realized state.
pub fn simulate(instance: &Instance, actions: &[ActionVector], seed: u64) -> Result<SimTrace> {
    let mut state = PopulationState::initial(instance);
    let mut rewards = Vec::with_capacity(actions.len());
    let mut states = Vec::with_capacity(actions.len());
    for (round, action) in actions.iter().enumerate() {
        let w_hat = reached_fractions(&instance.network, action)?;
        let mut reward = 0.0;
        let mut next = Vec::with_capacity(instance.len());
        for (v, loc) in instance.locations.iter().enumerate() {
            let t = &loc.transitions;
            let s = state.good[v];
            let n = loc.population;
            reward += w_hat[v] * (t.prevention() * s as f64 + t.cure() * (n - s) as f64);
            let mut rng = location_stream(seed, round, v);
            next.push(step_location(&mut rng, t, n, s, w_hat[v]));
        }
        rewards.push(reward);
        states.push(std::mem::replace(&mut state, PopulationState { good: next }));
    }
    Ok(SimTrace {
        rewards,
        actions: actions.to_vec(),
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub mean: f64,
    pub half_width: f64,
    pub reps: usize,
}

impl RunStats {
    /// Mean and `1.96 · sd / √reps` of per-replication averages.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let reps = samples.len();
        if reps < 2 {
            return Err(Error::Precondition(format!("need at least 2 replications, got {reps}")));
        }
        let mean = samples.iter().sum::<f64>() / reps as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        Ok(Self {
            mean,
            half_width: 1.96 * var.sqrt() / (reps as f64).sqrt(),
            reps,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Replicates a fixed schedule; rewards before `burn_in` are not averaged.
pub fn replicate_schedule(
    instance: &Instance,
    actions: &[ActionVector],
    reps: usize,
    master_seed: u64,
    burn_in: usize,
) -> Result<RunStats> {
    let samples = (0..reps)
        .into_par_iter()
        .map(|r| {
            simulate(instance, actions, replication_seed(master_seed, r as u64))
                .map(|tr| tr.average_reward_from(burn_in))
        })
        .collect::<Result<Vec<_>>>()?;
    RunStats::from_samples(&samples)
}

/// Replicates a policy. Deterministic policies are scheduled once; the random
/// policy draws a fresh schedule per replication.
pub fn replicate(
    instance: &Instance,
    policy: Policy,
    horizon: usize,
    reps: usize,
    master_seed: u64,
) -> Result<RunStats> {
    if policy.is_randomized() {
        let samples = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = replication_seed(master_seed, r as u64);
                let schedule = policy.schedule(instance, horizon, mix(seed))?;
                simulate(instance, &schedule.actions, seed).map(|tr| tr.average_reward())
            })
            .collect::<Result<Vec<_>>>()?;
        RunStats::from_samples(&samples)
    } else {
        let schedule = policy.schedule(instance, horizon, master_seed)?;
        replicate_schedule(instance, &schedule.actions, reps, master_seed, 0)
    }
}

/// Writes `policy,mean,ci_half_width,reps,horizon,seed`.
pub fn write_stats_csv<W: Write>(out: W, rows: &[(Policy, RunStats, usize, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "mean", "ci_half_width", "reps", "horizon", "seed"])?;
    for (p, s, horizon, seed) in rows {
        w.write_record([
            p.name().to_string(),
            s.mean.to_string(),
            s.half_width.to_string(),
            s.reps.to_string(),
            horizon.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Location ids ordered from highest to lowest risk: high passive decay and
/// low passive recovery, combined by rank sum, lowest id first on ties.
pub fn risk_order(instance: &Instance) -> Vec<usize> {
    let m = instance.len();
    let rank = |key: &dyn Fn(usize, usize) -> std::cmp::Ordering| {
        let mut ids: Vec<usize> = (0..m).collect();
        ids.sort_by(|&a, &b| key(a, b).then(a.cmp(&b)));
        let mut r = vec![0; m];
        for (pos, id) in ids.into_iter().enumerate() {
            r[id] = pos;
        }
        r
    };
    let t = |v: usize| &instance.locations[v].transitions;
    let decay = rank(&|a, b| t(b).p_p_gb.total_cmp(&t(a).p_p_gb));
    let recovery = rank(&|a, b| t(a).p_p_bg.total_cmp(&t(b).p_p_bg));
    let mut ids: Vec<usize> = (0..m).collect();
    ids.sort_by_key(|&v| (decay[v] + recovery[v], v));
    ids
}

/// Average per-round pull frequency of the riskiest `quantile` share of
/// locations and of everyone else.
pub fn disadvantaged_rates(instance: &Instance, schedule: &Schedule, quantile: f64) -> Result<(f64, f64)> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::OutOfRange(format!("quantile {quantile} outside (0, 1)")));
    }
    let m = instance.len();
    if m < 2 || schedule.horizon == 0 {
        return Err(Error::Precondition("need two locations and a nonempty schedule".into()));
    }
    let top = ((quantile * m as f64).ceil() as usize).clamp(1, m - 1);
    let order = risk_order(instance);
    let counts = schedule.pull_counts(m);
    let rate = |ids: &[usize]| {
        ids.iter().map(|&v| counts[v] as f64).sum::<f64>() / (ids.len() * schedule.horizon) as f64
    };
    Ok((rate(&order[..top]), rate(&order[top..])))
}

/// Moves `⌊fraction · |E|⌋` undirected edges to random pairs that had no
/// edge, carrying their weights along, then rescales every column to sum 1.
pub fn perturb_network(instance: &Instance, fraction: f64, seed: u64) -> Result<Instance> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::OutOfRange(format!("fraction {fraction} outside [0, 1]")));
    }
    let net = &instance.network;
    let m = net.size();
    let edges = net.undirected_edges();
    let mut absent = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if net.weight(u, v) == 0.0 && net.weight(v, u) == 0.0 {
                absent.push((u, v));
            }
        }
    }
    let moves = ((fraction * edges.len() as f64).floor() as usize).min(absent.len());
    if moves == 0 {
        return Ok(instance.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ STREAM_KEY));
    let removed = sample(&mut rng, edges.len(), moves);
    let added = sample(&mut rng, absent.len(), moves);
    let mut weights = net.clone();
    for (ri, ai) in removed.into_iter().zip(added) {
        let (u, v) = edges[ri];
        let (x, y) = absent[ai];
        // keep orientation random so mass does not drift toward low ids
        let (x, y) = if rng.random::<bool>() { (x, y) } else { (y, x) };
        weights.set_weight(x, y, net.weight(u, v));
        weights.set_weight(y, x, net.weight(v, u));
        weights.set_weight(u, v, 0.0);
        weights.set_weight(v, u, 0.0);
    }
    Ok(Instance {
        network: rescale_columns(weights),
        ..instance.clone()
    })
}

fn rescale_columns(mut net: TravelNetwork) -> TravelNetwork {
    let m = net.size();
    for v in 0..m {
        let s = net.column_sum(v);
        if s > 0.0 {
            for u in 0..m {
                net.set_weight(u, v, net.weight(u, v) / s);
            }
        } else {
            net.set_weight(v, v, 1.0);
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, Location};

    fn ring(m: usize, n: u64, t: TransitionPair) -> Instance {
        Instance {
            locations: (0..m)
                .map(|id| Location {
                    id,
                    population: n,
                    initial_good: n / 2,
                    transitions: t,
                })
                .collect(),
            network: TravelNetwork::from_fn(m, |u, v| {
                if u == v {
                    0.5
                } else if (u + 1) % m == v || (v + 1) % m == u {
                    0.25
                } else {
                    0.0
                }
            }),
            budget: 2,
            max_period: 4,
        }
    }

    fn pair() -> TransitionPair {
        TransitionPair::new(0.05, 0.5, 0.2, 0.05)
    }

    #[test]
    fn same_seed_same_trace() {
        let inst = ring(6, 100, pair());
        let s = crate::scheduler::random_policy(&inst, 30, 4);
        let a = simulate(&inst, &s.actions, 11).unwrap();
        assert_eq!(a, simulate(&inst, &s.actions, 11).unwrap());
        assert_ne!(a.rewards, simulate(&inst, &s.actions, 12).unwrap().rewards);
    }

    #[test]
    fn full_exposure_certain_cure() {
        let mut inst = ring(1, 50, TransitionPair::new(0.0, 1.0, 0.2, 0.05));
        inst.network = TravelNetwork::identity(1);
        inst.budget = 1;
        let tr = simulate(&inst, &vec![ActionVector::from_ids(1, &[0]); 2], 3).unwrap();
        assert_eq!(tr.states[1].good, vec![50]);
    }

    #[test]
    fn counts_stay_in_range() {
        let inst = ring(5, 30, TransitionPair::new(0.3, 0.9, 0.6, 0.1));
        let s = crate::scheduler::random_policy(&inst, 200, 1);
        let tr = simulate(&inst, &s.actions, 8).unwrap();
        assert!(tr.states.iter().all(|st| st.good.iter().all(|&g| g <= 30)));
        assert!(tr.rewards.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn identical_samples_zero_width() {
        let s = RunStats::from_samples(&[2.5, 2.5]).unwrap();
        assert_eq!(s.half_width, 0.0);
        assert!(RunStats::from_samples(&[1.0]).is_err());
    }

    #[test]
    fn deterministic_rates_zero_variance() {
        let mut inst = ring(4, 20, TransitionPair::new(0.0, 1.0, 1.0, 0.0));
        inst.network = TravelNetwork::identity(4);
        let s = crate::scheduler::myopic_policy(&inst, 20);
        let st = replicate_schedule(&inst, &s.actions, 5, 7, 0).unwrap();
        assert_eq!(st.half_width, 0.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let inst = ring(6, 100, pair());
        let s = crate::scheduler::myopic_policy(&inst, 40);
        let par = replicate_schedule(&inst, &s.actions, 8, 99, 0).unwrap();
        let seq: Vec<f64> = (0..8)
            .map(|r| simulate(&inst, &s.actions, replication_seed(99, r)).unwrap().average_reward())
            .collect();
        assert_eq!(par, RunStats::from_samples(&seq).unwrap());
    }

    #[test]
    fn perturbation_keeps_edge_count_and_columns() {
        let inst = ring(12, 10, pair());
        assert_eq!(perturb_network(&inst, 0.0, 5).unwrap(), inst);
        for f in [0.15, 0.5, 1.0] {
            let p = perturb_network(&inst, f, 5).unwrap();
            assert_eq!(p.network.undirected_edges().len(), inst.network.undirected_edges().len());
            for v in 0..12 {
                assert!((p.network.column_sum(v) - 1.0).abs() <= 1e-9);
            }
            assert!(validate_instance(&p).is_empty());
        }
        assert_eq!(perturb_network(&inst, 0.5, 5).unwrap(), perturb_network(&inst, 0.5, 5).unwrap());
    }

    #[test]
    fn riskiest_arm_only() {
        let mut inst = ring(6, 10, pair());
        inst.locations[4].transitions = TransitionPair::new(0.3, 0.5, 0.4, 0.01);
        assert_eq!(risk_order(&inst)[0], 4);
        let s = Schedule::new(vec![ActionVector::from_ids(6, &[4]); 10]);
        let (hi, rest) = disadvantaged_rates(&inst, &s, 0.15).unwrap();
        assert!(hi > 0.0);
        assert_eq!(rest, 0.0);
    }
}
