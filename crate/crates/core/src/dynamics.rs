//! Expected-state evolution of each location and the per-pull reward bounds
//! the period optimizer is built on.
//!
//! Every location evolves independently given the reached fractions of the
//! round: `b_{t+1} = b_t · P̂(ŵ_t)`. A periodic schedule therefore turns each
//! location into a two-state chain sampled once per cycle, whose stationary
//! vector has the closed form `q_bg / (q_gb + q_bg)`.

use crate::error::{Error, Result};
use crate::model::{
    mat_mul, mixed_unchecked, reached_fractions, ActionVector, Instance, Location, Mat2,
    TransitionPair, TravelNetwork, IDENTITY,
};

/// Expected number of individuals in the good and bad state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedState {
    pub good: f64,
    pub bad: f64,
}

impl ExpectedState {
    pub fn new(good: f64, bad: f64) -> Self {
        Self { good, bad }
    }

    pub fn initial(location: &Location) -> Self {
        let g = location.initial_good as f64;
        Self::new(g, location.population as f64 - g)
    }

    pub fn total(&self) -> f64 {
        self.good + self.bad
    }
}

/// One round of the expectation recursion, `b · P`.
pub fn step_expected(state: ExpectedState, matrix: &Mat2) -> ExpectedState {
    ExpectedState {
        good: state.good * matrix[0][0] + state.bad * matrix[1][0],
        bad: state.good * matrix[0][1] + state.bad * matrix[1][1],
    }
}

/// Intervention benefit of exposing a share `w_hat` of a location in state
/// `state`.
#[inline]
pub fn exposure_reward(t: &TransitionPair, state: ExpectedState, w_hat: f64) -> f64 {
    w_hat * (t.prevention() * state.good + t.cure() * state.bad)
}

/// Expected reward of playing `action` when locations are in `states`.
pub fn expected_round_reward(
    instance: &Instance,
    states: &[ExpectedState],
    action: &ActionVector,
) -> Result<f64> {
    if states.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            actual: states.len(),
        });
    }
    let w = reached_fractions(&instance.network, action)?;
    Ok(instance
        .locations
        .iter()
        .zip(states)
        .zip(&w)
        .map(|((loc, &s), &wv)| exposure_reward(&loc.transitions, s, wv))
        .sum())
}

/// Applies `action` to every location: returns the round reward and the
/// next expected states.
pub fn advance(
    instance: &Instance,
    states: &[ExpectedState],
    action: &ActionVector,
) -> Result<(f64, Vec<ExpectedState>)> {
    let w = reached_fractions(&instance.network, action)?;
    let mut reward = 0.0;
    let next = instance
        .locations
        .iter()
        .zip(states)
        .zip(&w)
        .map(|((loc, &s), &wv)| {
            reward += exposure_reward(&loc.transitions, s, wv);
            step_expected(s, &mixed_unchecked(&loc.transitions, wv))
        })
        .collect();
    Ok((reward, next))
}

/// Per-round expected rewards of playing `actions` in order from the
/// instance's initial state.
pub fn expected_rewards(instance: &Instance, actions: &[ActionVector]) -> Result<Vec<f64>> {
    let mut states: Vec<_> = instance.locations.iter().map(ExpectedState::initial).collect();
    let mut out = Vec::with_capacity(actions.len());
    for a in actions {
        let (r, next) = advance(instance, &states, a)?;
        out.push(r);
        states = next;
    }
    Ok(out)
}

/// Good-state share after `tau` passive rounds starting from `s0_frac`,
/// via the eigendecomposition of the passive matrix.
pub fn passive_good_fraction(t: &TransitionPair, s0_frac: f64, tau: u32) -> f64 {
    let sum = t.p_p_gb + t.p_p_bg;
    if sum == 0.0 {
        return s0_frac;
    }
    let steady = t.p_p_bg / sum;
    steady + (1.0 - sum).powi(tau as i32) * (s0_frac - steady)
}

/// Stationary expected state of the two-state chain with rates `q_gb`,
/// `q_bg` over `population` individuals.
pub fn chain_steady_state(q_gb: f64, q_bg: f64, population: f64) -> Result<ExpectedState> {
    let sum = q_gb + q_bg;
    if !(sum > 0.0) {
        return Err(Error::Degenerate(format!(
            "two-state chain with rates ({q_gb}, {q_bg}) has no unique stationary state"
        )));
    }
    let good = population * q_bg / sum;
    Ok(ExpectedState::new(good, population - good))
}

fn stationary(matrix: &Mat2, population: f64) -> Result<ExpectedState> {
    chain_steady_state(matrix[0][1], matrix[1][0], population)
}

/// Which extreme of neighbour activity a pull bound assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// No other location is ever visited.
    Upper,
    /// Every neighbour is visited in every round.
    Lower,
}

/// Transition of the expected state over one pull cycle, from just before a
/// pull to just before the next one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleMatrix {
    pub entries: Mat2,
}

pub fn cycle_matrix(
    location: &Location,
    network: &TravelNetwork,
    tau: u32,
    regime: Regime,
) -> Result<CycleMatrix> {
    let own = network.weight(location.id, location.id);
    group_cycle_matrix(&location.transitions, own, tau, regime)
}

/// Cycle matrix of the residents who meet a pull with probability `share`.
/// Between pulls they are left alone (upper) or exposed to everything else
/// (lower); at the pull the lower regime exposes all of them.
pub fn group_cycle_matrix(t: &TransitionPair, share: f64, tau: u32, regime: Regime) -> Result<CycleMatrix> {
    if tau < 1 {
        return Err(Error::Precondition("cycle length must be at least 1".into()));
    }
    let (at_pull, between) = match regime {
        Regime::Upper => (mixed_unchecked(t, share), t.passive()),
        Regime::Lower => (mixed_unchecked(t, 1.0), mixed_unchecked(t, 1.0 - share)),
    };
    let mut entries = at_pull;
    for _ in 1..tau {
        entries = mat_mul(&entries, &between);
    }
    Ok(CycleMatrix { entries })
}

/// Average per-round reward attributable to pulling one location every
/// `period` rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullRewardBound {
    pub period: u32,
    pub value: f64,
    pub regime: Regime,
}

/// Steady-cycle reward of pulling `location` every `tau` rounds under the
/// given neighbour regime.
///
/// The round reward splits exactly over pulled locations, so a pull is
/// credited with every resident group present there: residents of `u` are
/// met with probability `w_{v,u}`. Each group is followed through its own
/// cycle chain; in the lower regime the extra exposure from elsewhere only
/// improves the state the pull meets.
pub fn pull_reward_bound(instance: &Instance, location: usize, tau: u32, regime: Regime) -> Result<PullRewardBound> {
    let net = &instance.network;
    if location >= instance.len() {
        return Err(Error::OutOfRange(format!("location {location}")));
    }
    let mut value = 0.0;
    for (u, home) in instance.locations.iter().enumerate() {
        let share = net.weight(location, u);
        if share <= 0.0 {
            continue;
        }
        let cycle = group_cycle_matrix(&home.transitions, share, tau, regime)?;
        let steady = stationary(&cycle.entries, home.population as f64)?;
        value += exposure_reward(&home.transitions, steady, share);
    }
    Ok(PullRewardBound {
        period: tau,
        value: value / tau as f64,
        regime,
    })
}

/// Network-blind variant: every pull is assumed to reach the whole resident
/// population and nothing else ever does.
pub fn isolated_pull_reward(location: &Location, tau: u32) -> Result<f64> {
    if tau < 1 {
        return Err(Error::Precondition("cycle length must be at least 1".into()));
    }
    let t = &location.transitions;
    let mut cycle = t.active();
    let passive = t.passive();
    for _ in 1..tau {
        cycle = mat_mul(&cycle, &passive);
    }
    let steady = stationary(&cycle, location.population as f64)?;
    Ok(exposure_reward(t, steady, 1.0) / tau as f64)
}

/// Reward of exposing a share `w_hat` of `location` after `tau` passive
/// rounds from good share `s0_frac`.
pub fn pull_gain(location: &Location, tau: u32, w_hat: f64, s0_frac: f64) -> Result<f64> {
    let t = &location.transitions;
    if let Some(steady) = t.passive_steady_ratio() {
        if s0_frac < steady {
            return Err(Error::Precondition(format!(
                "initial good share {s0_frac} below passive steady share {steady}"
            )));
        }
    }
    let n = location.population as f64;
    let f = passive_good_fraction(t, s0_frac, tau);
    Ok(t.prevention() * w_hat * n * f + t.cure() * w_hat * n * (1.0 - f))
}

/// Exact long-run average expected reward of repeating `cycle` forever.
///
/// Each location's expected state converges to the stationary vector of its
/// cycle product; that vector is rolled through the cycle once and the
/// per-position rewards averaged.
pub fn periodic_average_reward(instance: &Instance, cycle: &[ActionVector]) -> Result<f64> {
    if cycle.is_empty() {
        return Err(Error::Precondition("empty cycle".into()));
    }
    if let Some(a) = cycle.iter().find(|a| !a.within_budget(instance.budget)) {
        return Err(Error::Precondition(format!(
            "action pulls {} arms, budget is {}",
            a.count(),
            instance.budget
        )));
    }
    let fractions = cycle
        .iter()
        .map(|a| reached_fractions(&instance.network, a))
        .collect::<Result<Vec<_>>>()?;

    let mut total = 0.0;
    for (v, loc) in instance.locations.iter().enumerate() {
        if fractions.iter().all(|w| w[v] == 0.0) {
            continue;
        }
        let t = &loc.transitions;
        let mats: Vec<Mat2> = fractions.iter().map(|w| mixed_unchecked(t, w[v])).collect();
        let product = mats.iter().fold(IDENTITY, |acc, m| mat_mul(&acc, m));
        let mut state = stationary(&product, loc.population as f64).map_err(|_| {
            Error::Degenerate(format!(
                "cycle chain of location {v} has more than one stationary state"
            ))
        })?;
        for (w, m) in fractions.iter().zip(&mats) {
            total += exposure_reward(t, state, w[v]);
            state = step_expected(state, m);
        }
    }
    Ok(total / cycle.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_state, TravelNetwork};

    fn loc(t: TransitionPair, n: u64) -> Location {
        Location {
            id: 0,
            population: n,
            initial_good: n,
            transitions: t,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // repeated multiplication, kept independent of the closed forms above
    fn power_oracle(m: &Mat2, s0: f64, steps: u32) -> f64 {
        let mut g = s0;
        let mut b = 1.0 - s0;
        for _ in 0..steps {
            let ng = g * m[0][0] + b * m[1][0];
            let nb = g * m[0][1] + b * m[1][1];
            g = ng;
            b = nb;
        }
        g
    }

    #[test]
    fn step_identity_and_steady() {
        let s = step_expected(ExpectedState::new(10.0, 0.0), &IDENTITY);
        assert_eq!(s, ExpectedState::new(10.0, 0.0));
        let s = step_expected(ExpectedState::new(6.0, 4.0), &two_state(0.2, 0.3));
        assert!(close(s.good, 6.0, 1e-12) && close(s.bad, 4.0, 1e-12));
    }

    #[test]
    fn passive_fraction_examples() {
        let t = TransitionPair::new(0.1, 0.5, 0.2, 0.3);
        assert_eq!(passive_good_fraction(&t, 0.8, 0), 0.8);
        assert!(close(passive_good_fraction(&t, 0.6, 17), 0.6, 1e-15));
        assert!(close(passive_good_fraction(&t, 1.0, 2), 0.7, 1e-15));
        assert!(close(power_oracle(&t.passive(), 1.0, 2), 0.7, 1e-15));
    }

    #[test]
    fn chain_steady_examples() {
        let s = chain_steady_state(0.2, 0.3, 10.0).unwrap();
        assert!(close(s.good, 6.0, 1e-12) && close(s.bad, 4.0, 1e-12));
        assert_eq!(chain_steady_state(0.4, 0.0, 7.0).unwrap().good, 0.0);
        assert_eq!(chain_steady_state(0.0, 0.4, 7.0).unwrap().good, 7.0);
        assert!(chain_steady_state(0.0, 0.0, 7.0).is_err());
        let fixed = step_expected(s, &two_state(0.2, 0.3));
        assert!(close(fixed.good, s.good, 1e-12));
    }

    #[test]
    fn cycle_matrix_cases() {
        let t = TransitionPair::new(0.1, 0.6, 0.3, 0.05);
        let l = loc(t, 10);
        let net = TravelNetwork::from_fn(2, |u, v| if u == v { 0.7 } else { 0.3 });
        let c1 = cycle_matrix(&l, &net, 1, Regime::Upper).unwrap();
        assert_eq!(c1.entries, mixed_unchecked(&t, 0.7));

        let solo = TravelNetwork::identity(1);
        let c2 = cycle_matrix(&l, &solo, 2, Regime::Upper).unwrap();
        let expect = mat_mul(&t.active(), &t.passive());
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(c2.entries[i][j], expect[i][j], 1e-15));
            }
        }

        // brute-force product of per-round mixtures
        let c3 = cycle_matrix(&l, &net, 3, Regime::Lower).unwrap();
        let rounds = [1.0, 0.3, 0.3].map(|w| mixed_unchecked(&t, w));
        let brute = mat_mul(&mat_mul(&rounds[0], &rounds[1]), &rounds[2]);
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(c3.entries[i][j], brute[i][j], 1e-15));
            }
            assert!(close(c3.entries[i][0] + c3.entries[i][1], 1.0, 1e-12));
        }
        assert!(cycle_matrix(&l, &net, 0, Regime::Upper).is_err());
    }

    fn single(t: TransitionPair, n: u64) -> Instance {
        Instance {
            locations: vec![loc(t, n)],
            network: TravelNetwork::identity(1),
            budget: 1,
            max_period: 10,
        }
    }

    fn pair_instance(t: [TransitionPair; 2], n: [u64; 2], net: TravelNetwork) -> Instance {
        Instance {
            locations: (0..2)
                .map(|id| Location {
                    id,
                    population: n[id],
                    initial_good: 0,
                    transitions: t[id],
                })
                .collect(),
            network: net,
            budget: 1,
            max_period: 10,
        }
    }

    #[test]
    fn pull_bound_zero_when_intervention_inert() {
        let inst = single(TransitionPair::new(0.2, 0.1, 0.2, 0.1), 50);
        for tau in 1..10 {
            let b = pull_reward_bound(&inst, 0, tau, Regime::Upper).unwrap();
            assert_eq!(b.value, 0.0);
        }
    }

    #[test]
    fn pull_bound_zero_when_nobody_present() {
        // everyone from 0 visits 1 and vice versa; location 1 is inert
        let t = TransitionPair::new(0.05, 0.5, 0.2, 0.1);
        let inert = TransitionPair::new(0.2, 0.1, 0.2, 0.1);
        let net = TravelNetwork::from_fn(2, |u, v| if u != v { 1.0 } else { 0.0 });
        let inst = pair_instance([t, inert], [50, 50], net);
        assert_eq!(pull_reward_bound(&inst, 0, 3, Regime::Upper).unwrap().value, 0.0);
        assert!(pull_reward_bound(&inst, 1, 3, Regime::Upper).unwrap().value > 0.0);
    }

    #[test]
    fn pull_bound_sums_visitor_groups() {
        let a = TransitionPair::new(0.05, 0.5, 0.2, 0.1);
        let b = TransitionPair::new(0.1, 0.7, 0.3, 0.02);
        let net = TravelNetwork::from_fn(2, |u, v| if u == v { 0.6 } else { 0.4 });
        let inst = pair_instance([a, b], [30, 80], net);
        for tau in 1..6u32 {
            // each group's steady state by iterating its cycle to convergence
            let mut want = 0.0;
            for (t, n, share) in [(a, 30.0, 0.6), (b, 80.0, 0.4)] {
                let mut s = ExpectedState::new(n, 0.0);
                for _ in 0..5000 {
                    s = step_expected(s, &mixed_unchecked(&t, share));
                    for _ in 1..tau {
                        s = step_expected(s, &t.passive());
                    }
                }
                want += exposure_reward(&t, s, share);
            }
            let got = pull_reward_bound(&inst, 0, tau, Regime::Upper).unwrap().value;
            assert!(close(got, want / tau as f64, 1e-9));
        }
    }

    #[test]
    fn pull_bound_matches_alternating_square() {
        // a self-contained location pulled every other round sees exactly what a
        // node of the square sees under the non-neighbouring policy
        for p in [0.1, 0.5, 0.9] {
            let t = TransitionPair::new(p, 1.0, p, 0.0);
            let b = pull_reward_bound(&single(t, 1), 0, 2, Regime::Upper).unwrap();
            let per_pull = p * (2.0 - p) / (1.0 + p - p * p);
            assert!(close(b.value, per_pull / 2.0, 1e-12));
        }
    }

    #[test]
    fn pull_gain_cases() {
        let t = TransitionPair::new(0.05, 0.5, 0.2, 0.1);
        let l = loc(t, 100);
        assert_eq!(pull_gain(&l, 5, 0.0, 0.9).unwrap(), 0.0);
        assert!(pull_gain(&l, 5, 1.0, 0.1).is_err());
        let steady = t.passive_steady_ratio().unwrap();
        let limit = pull_gain(&l, 0, 1.0, steady).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for tau in 0..200 {
            let g = pull_gain(&l, tau, 1.0, 0.95).unwrap();
            assert!(g >= prev && g <= limit + 1e-9);
            prev = g;
        }
        assert!(close(prev, limit, 1e-9));
        // brute-force expectation
        let f = power_oracle(&t.passive(), 0.95, 7);
        let brute = 100.0 * (t.prevention() * f + t.cure() * (1.0 - f)) * 0.4;
        assert!(close(pull_gain(&l, 7, 0.4, 0.95).unwrap(), brute, 1e-10));
    }

    #[test]
    fn periodic_reward_zero_cycle() {
        let t = TransitionPair::new(0.05, 0.5, 0.2, 0.1);
        let inst = Instance {
            locations: vec![loc(t, 10)],
            network: TravelNetwork::identity(1),
            budget: 1,
            max_period: 3,
        };
        let r = periodic_average_reward(&inst, &[ActionVector::zeros(1)]).unwrap();
        assert_eq!(r, 0.0);
        assert!(periodic_average_reward(&inst, &[]).is_err());
    }

    #[test]
    fn expected_reward_all_bad() {
        let t = TransitionPair::new(0.05, 0.5, 0.2, 0.1);
        let inst = Instance {
            locations: vec![loc(t, 10)],
            network: TravelNetwork::identity(1),
            budget: 1,
            max_period: 3,
        };
        let on = ActionVector::from_ids(1, &[0]);
        let r = expected_round_reward(&inst, &[ExpectedState::new(0.0, 10.0)], &on).unwrap();
        assert!(close(r, 10.0 * t.cure(), 1e-12));
        let off = ActionVector::zeros(1);
        assert_eq!(
            expected_round_reward(&inst, &[ExpectedState::new(3.0, 7.0)], &off).unwrap(),
            0.0
        );
    }

    proptest::proptest! {
        #[test]
        fn lower_bound_below_upper(seed in 0u64..10_000, sigma in 0.0f64..1.0) {
            let cfg = crate::generator::GeneratorConfig {
                m: 8,
                self_stay: sigma,
                seed,
                ..Default::default()
            };
            let inst = crate::generator::generate_synthetic(&cfg).unwrap();
            for v in 0..inst.len() {
                for tau in 1..=8 {
                    let lo = pull_reward_bound(&inst, v, tau, Regime::Lower).unwrap().value;
                    let hi = pull_reward_bound(&inst, v, tau, Regime::Upper).unwrap().value;
                    proptest::prop_assert!(lo <= hi + 1e-9 * (1.0 + hi.abs()), "{lo} > {hi}");
                }
            }
        }
    }
}
