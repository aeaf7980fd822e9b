//! Round-by-round dispatch: the timer-driven spectral scheduler and the
//! Random, Myopic and Recharging baselines.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{advance, exposure_reward, isolated_pull_reward, ExpectedState};
use crate::error::{Error, Result};
use crate::model::{ActionVector, Instance};
use crate::periods::{plan_periods, solve_periods_greedy, PeriodAssignment, PlanOptions, RewardTable};
use crate::spectral::{build_coupling_graph, cut_capacity, fiedler_set, MULTIPLICITY_TOL};

/// Pull sets for rounds `0..horizon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub horizon: usize,
    pub actions: Vec<ActionVector>,
}

impl Schedule {
    pub fn new(actions: Vec<ActionVector>) -> Self {
        Self {
            horizon: actions.len(),
            actions,
        }
    }

    /// Rounds `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> &[ActionVector] {
        &self.actions[start..start + len]
    }

    /// Number of times each arm is pulled.
    pub fn pull_counts(&self, size: usize) -> Vec<usize> {
        let mut counts = vec![0; size];
        for a in &self.actions {
            for v in a.pulled() {
                counts[v] += 1;
            }
        }
        counts
    }

    /// Rounds at which arm `v` is pulled.
    pub fn pull_rounds(&self, v: usize) -> Vec<usize> {
        self.actions
            .iter()
            .enumerate()
            .filter_map(|(t, a)| a.is_pulled(v).then_some(t))
            .collect()
    }

    /// Writes `round,pulled_ids` rows, ids comma-joined.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "pulled_ids"])?;
        for (t, a) in self.actions.iter().enumerate() {
            w.write_record([t.to_string(), join_ids(a)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn join_ids(a: &ActionVector) -> String {
    a.pulled().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngageOptions {
    pub multiplicity_tol: f64,
}

impl Default for EngageOptions {
    fn default() -> Self {
        Self {
            multiplicity_tol: MULTIPLICITY_TOL,
        }
    }
}

/// Candidate and waiting arms with their countdown timers. Indices are local
/// to the coupling graph.
#[derive(Debug, Clone)]
pub struct SchedulerState {
    pub candidate: Vec<bool>,
    pub timers: Vec<u32>,
    /// Round at which each candidate last became due.
    pub due_since: Vec<usize>,
}

impl SchedulerState {
    fn new(n: usize) -> Self {
        Self {
            candidate: vec![true; n],
            timers: vec![0; n],
            due_since: vec![0; n],
        }
    }

    fn tick(&mut self, round: usize) {
        for i in 0..self.candidate.len() {
            if !self.candidate[i] {
                self.timers[i] -= 1;
                if self.timers[i] == 0 {
                    self.candidate[i] = true;
                    self.due_since[i] = round;
                }
            }
        }
    }

    fn candidates(&self) -> Vec<usize> {
        (0..self.candidate.len()).filter(|&i| self.candidate[i]).collect()
    }
}

pub fn engage(instance: &Instance, periods: &PeriodAssignment, horizon: usize) -> Result<Schedule> {
    engage_with(instance, periods, horizon, &EngageOptions::default())
}

/// Timer-driven spectral scheduler.
///
/// Every round the due arms are candidates. For each vector of the Fiedler
/// set the `k` candidates with the smallest and the `k` with the largest
/// entries are proposed, and the proposal with the lowest cut on the
/// coupling graph is pulled. Equal cuts go to the proposal with the higher
/// total frequency, so shorter periods are served first. Pulled arms wait
/// exactly their period before becoming candidates again.
pub fn engage_with(
    instance: &Instance,
    periods: &PeriodAssignment,
    horizon: usize,
    options: &EngageOptions,
) -> Result<Schedule> {
    if periods.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            actual: periods.len(),
        });
    }
    let graph = build_coupling_graph(instance, periods)?;
    let fiedler = fiedler_set(&graph, options.multiplicity_tol)?;
    let edgeless = graph.is_edgeless();
    let n = graph.size();
    let k = instance.budget;
    let tau: Vec<u32> = graph
        .nodes
        .iter()
        .map(|&v| periods.period(v).expect("assigned arm"))
        .collect();

    let mut state = SchedulerState::new(n);
    let mut actions = Vec::with_capacity(horizon);
    for round in 0..horizon {
        state.tick(round);
        let cands = state.candidates();

        let chosen: Vec<usize> = if cands.len() <= k {
            cands
        } else if edgeless {
            let mut c = cands;
            c.sort_by_key(|&i| (state.due_since[i], tau[i], graph.nodes[i]));
            c.truncate(k);
            c
        } else {
            let urgency = |s: &[usize]| s.iter().map(|&i| 1.0 / tau[i] as f64).sum::<f64>();
            let mut best: Option<(f64, f64, Vec<usize>)> = None;
            for eta in &fiedler.vectors {
                let mut low = cands.clone();
                low.sort_by(|&a, &b| eta[a].total_cmp(&eta[b]).then(a.cmp(&b)));
                low.truncate(k);
                let mut high = cands.clone();
                high.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
                high.truncate(k);
                for set in [low, high] {
                    let cut = cut_capacity(&graph, &set);
                    let urg = urgency(&set);
                    let replace = match &best {
                        None => true,
                        Some((bc, bu, _)) => {
                            let eps = 1e-12 * (1.0 + bc.abs());
                            cut < bc - eps || ((cut - bc).abs() <= eps && urg > bu + 1e-12)
                        }
                    };
                    if replace {
                        best = Some((cut, urg, set));
                    }
                }
            }
            best.map(|b| b.2).unwrap_or_default()
        };

        let mut action = ActionVector::zeros(instance.len());
        for &i in &chosen {
            state.candidate[i] = false;
            state.timers[i] = tau[i];
            action.set(graph.nodes[i], true);
        }
        actions.push(action);
    }
    Ok(Schedule::new(actions))
}

/// Plans periods with default options and dispatches them with [`engage`].
pub fn engage_planned(instance: &Instance, horizon: usize) -> Result<Schedule> {
    let plan = plan_periods(instance, &PlanOptions::default())?;
    if plan.periods.assigned().is_empty() {
        return Ok(Schedule::new(vec![ActionVector::zeros(instance.len()); horizon]));
    }
    engage(instance, &plan.periods, horizon)
}

/// `k` arms drawn uniformly without replacement each round.
pub fn random_policy(instance: &Instance, horizon: usize, seed: u64) -> Schedule {
    let m = instance.len();
    let k = instance.budget.min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = (0..horizon)
        .map(|_| {
            let ids: Vec<usize> = sample(&mut rng, m, k).into_iter().collect();
            ActionVector::from_ids(m, &ids)
        })
        .collect();
    Schedule::new(actions)
}

/// Greedily adds the arm with the largest marginal expected reward this
/// round, `k` times, then advances the expected states.
pub fn myopic_policy(instance: &Instance, horizon: usize) -> Schedule {
    let m = instance.len();
    let k = instance.budget.min(m);
    let net = &instance.network;
    // locations whose residents each arm reaches
    let reach: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|u| {
            (0..m)
                .filter_map(|v| {
                    let w = net.weight(u, v);
                    (w > 0.0).then_some((v, w))
                })
                .collect()
        })
        .collect();

    let mut states: Vec<ExpectedState> = instance.locations.iter().map(ExpectedState::initial).collect();
    let mut actions = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut w_hat = vec![0.0; m];
        let mut action = ActionVector::zeros(m);
        for _ in 0..k {
            let mut best: Option<(usize, f64)> = None;
            for u in (0..m).filter(|&u| !action.is_pulled(u)) {
                let gain: f64 = reach[u]
                    .iter()
                    .map(|&(v, w)| {
                        let t = &instance.locations[v].transitions;
                        let extra = (w_hat[v] + w).min(1.0) - w_hat[v];
                        exposure_reward(t, states[v], extra)
                    })
                    .sum();
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((u, gain));
                }
            }
            let Some((u, _)) = best else { break };
            action.set(u, true);
            for &(v, w) in &reach[u] {
                w_hat[v] = (w_hat[v] + w).min(1.0);
            }
        }
        let (_, next) = advance(instance, &states, &action).expect("dimensions agree");
        states = next;
        actions.push(action);
    }
    Schedule::new(actions)
}

/// Reward tables computed as if every pull reached the whole resident
/// population and no other location mattered.
pub fn network_blind_tables(instance: &Instance) -> Result<Vec<RewardTable>> {
    instance
        .locations
        .iter()
        .map(|loc| {
            let values = (1..=instance.max_period as u32)
                .map(|t| isolated_pull_reward(loc, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(RewardTable::from_values(loc.id, values))
        })
        .collect()
}

/// Network-blind periods dispatched earliest-deadline-first.
pub fn recharging_policy(instance: &Instance, horizon: usize) -> Result<Schedule> {
    let tables = network_blind_tables(instance)?;
    let periods = solve_periods_greedy(&tables, instance.budget);
    Ok(earliest_deadline(instance, &periods, horizon))
}

/// Pulls up to `k` due arms per round, oldest deadline first, lowest id on
/// ties; a pulled arm is next due `τ_v` rounds later.
pub fn earliest_deadline(instance: &Instance, periods: &PeriodAssignment, horizon: usize) -> Schedule {
    let m = instance.len();
    let mut next_due: Vec<Option<usize>> = periods.periods.iter().map(|p| p.map(|_| 0)).collect();
    let mut actions = Vec::with_capacity(horizon);
    for round in 0..horizon {
        let mut due: Vec<usize> = (0..m)
            .filter(|&v| next_due[v].is_some_and(|d| d <= round))
            .collect();
        due.sort_by_key(|&v| (next_due[v], v));
        due.truncate(instance.budget);
        let mut action = ActionVector::zeros(m);
        for v in due {
            action.set(v, true);
            next_due[v] = Some(round + periods.periods[v].unwrap() as usize);
        }
        actions.push(action);
    }
    Schedule::new(actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Engage,
    Random,
    Myopic,
    Recharging,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Engage, Policy::Random, Policy::Myopic, Policy::Recharging];

    /// Schedule for `horizon` rounds; `seed` only matters for [`Policy::Random`].
    pub fn schedule(&self, instance: &Instance, horizon: usize, seed: u64) -> Result<Schedule> {
        match self {
            Policy::Engage => engage_planned(instance, horizon),
            Policy::Random => Ok(random_policy(instance, horizon, seed)),
            Policy::Myopic => Ok(myopic_policy(instance, horizon)),
            Policy::Recharging => recharging_policy(instance, horizon),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Engage => "engage",
            Policy::Random => "random",
            Policy::Myopic => "myopic",
            Policy::Recharging => "recharging",
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, Policy::Random)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown policy {s:?}")))
    }
}
