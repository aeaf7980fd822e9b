//! Instance types: locations with their two-state transition laws, the
//! commuting network, the per-round budget, and action vectors.
//!
//! Matrices are 2×2 row-stochastic over the states `[G, B]`, with the
//! row index being the current state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-stochastic 2×2 matrix over `[good, bad]`.
pub type Mat2 = [[f64; 2]; 2];

/// Column sums must equal one within this tolerance.
pub const COLUMN_TOL: f64 = 1e-9;

/// Loaders rescale columns whose sum is within this distance of one.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// Builds the transition matrix for per-round rates G→B and B→G.
pub fn two_state(p_gb: f64, p_bg: f64) -> Mat2 {
    [[1.0 - p_gb, p_gb], [p_bg, 1.0 - p_bg]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Active (intervention) and passive per-individual transition rates of one
/// location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPair {
    pub p_a_gb: f64,
    pub p_a_bg: f64,
    pub p_p_gb: f64,
    pub p_p_bg: f64,
}

impl TransitionPair {
    pub fn new(p_a_gb: f64, p_a_bg: f64, p_p_gb: f64, p_p_bg: f64) -> Self {
        Self {
            p_a_gb,
            p_a_bg,
            p_p_gb,
            p_p_bg,
        }
    }

    /// Extra B→G probability an exposed individual receives.
    pub fn cure(&self) -> f64 {
        self.p_a_bg - self.p_p_bg
    }

    /// G→B probability an exposed individual avoids.
    pub fn prevention(&self) -> f64 {
        self.p_p_gb - self.p_a_gb
    }

    pub fn active(&self) -> Mat2 {
        two_state(self.p_a_gb, self.p_a_bg)
    }

    pub fn passive(&self) -> Mat2 {
        two_state(self.p_p_gb, self.p_p_bg)
    }

    /// Good-state share the passive chain settles at, `None` when the
    /// passive chain is frozen.
    pub fn passive_steady_ratio(&self) -> Option<f64> {
        let s = self.p_p_gb + self.p_p_bg;
        (s > 0.0).then(|| self.p_p_bg / s)
    }

    /// Names of the invariants this pair violates.
    pub fn violated(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        let all = [self.p_a_gb, self.p_a_bg, self.p_p_gb, self.p_p_bg];
        if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
            out.push(Constraint::ProbabilityRange);
        }
        if !(self.p_p_gb >= self.p_a_gb && self.p_a_bg >= self.p_p_bg) {
            out.push(Constraint::Assumption1);
        }
        if !(1.0 - self.p_p_gb > self.p_p_bg && 1.0 - self.p_a_gb > self.p_a_bg) {
            out.push(Constraint::Assumption2);
        }
        if !(self.cure() > self.prevention()) {
            out.push(Constraint::Assumption3);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: usize,
    pub population: u64,
    pub initial_good: u64,
    pub transitions: TransitionPair,
}

/// Column-stochastic presence matrix; `weight(u, v)` is the probability that
/// a resident of `v` is present at `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelNetwork {
    size: usize,
    weights: Vec<f64>,
}

impl TravelNetwork {
    /// `weights` is row-major, entry `u * size + v` holding `w_{u,v}`.
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                actual: weights.len(),
            });
        }
        Ok(Self { size, weights })
    }

    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, |u, v| if u == v { 1.0 } else { 0.0 })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut weights = Vec::with_capacity(size * size);
        for u in 0..size {
            for v in 0..size {
                weights.push(f(u, v));
            }
        }
        Self { size, weights }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn weight(&self, at: usize, home: usize) -> f64 {
        self.weights[at * self.size + home]
    }

    pub fn set_weight(&mut self, at: usize, home: usize, w: f64) {
        self.weights[at * self.size + home] = w;
    }

    pub fn column_sum(&self, home: usize) -> f64 {
        (0..self.size).map(|u| self.weight(u, home)).sum()
    }

    /// Locations where residents of `home` can be found (includes `home`
    /// itself when its self-weight is positive).
    pub fn support(&self, home: usize) -> Vec<usize> {
        (0..self.size)
            .filter(|&u| self.weight(u, home) > 0.0)
            .collect()
    }

    /// Rescales every column whose sum is off by more than [`COLUMN_TOL`] but
    /// within [`RENORMALIZE_TOL`]. Returns the columns left untouched because
    /// they were too far off.
    pub fn renormalize_columns(&mut self) -> Vec<usize> {
        let mut rejected = Vec::new();
        for v in 0..self.size {
            let s = self.column_sum(v);
            let gap = (s - 1.0).abs();
            if gap <= COLUMN_TOL {
                continue;
            }
            if gap <= RENORMALIZE_TOL {
                for u in 0..self.size {
                    self.weights[u * self.size + v] /= s;
                }
            } else {
                rejected.push(v);
            }
        }
        rejected
    }

    /// Positive-weight off-diagonal pairs `(u, v)` with `u < v`, counting a
    /// pair once if either direction carries weight.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.size {
            for v in u + 1..self.size {
                if self.weight(u, v) > 0.0 || self.weight(v, u) > 0.0 {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub locations: Vec<Location>,
    pub network: TravelNetwork,
    pub budget: usize,
    pub max_period: usize,
}

impl Instance {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Returns the instance if [`validate_instance`] finds nothing.
    pub fn validated(self) -> Result<Self> {
        let report = validate_instance(&self);
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(report))
        }
    }

    pub fn with_budget(&self, budget: usize) -> Self {
        Self {
            budget,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    ProbabilityRange,
    Assumption1,
    Assumption2,
    Assumption3,
    PopulationPositive,
    InitialGoodRange,
    LocationId,
    NegativeWeight,
    ColumnStochastic,
    NetworkSize,
    EmptyInstance,
    BudgetRange,
    MaxPeriod,
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::ProbabilityRange => "probability-range",
            Constraint::Assumption1 => "assumption-1",
            Constraint::Assumption2 => "assumption-2",
            Constraint::Assumption3 => "assumption-3",
            Constraint::PopulationPositive => "population-positive",
            Constraint::InitialGoodRange => "initial-good-range",
            Constraint::LocationId => "location-id",
            Constraint::NegativeWeight => "negative-weight",
            Constraint::ColumnStochastic => "column-stochastic",
            Constraint::NetworkSize => "network-size",
            Constraint::EmptyInstance => "empty-instance",
            Constraint::BudgetRange => "budget-range",
            Constraint::MaxPeriod => "max-period",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Location(usize),
    Column(usize),
    Instance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: Constraint,
    pub site: Site,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.constraint.name();
        match self.site {
            Site::Location(id) => write!(f, "{name} @ location {id}"),
            Site::Column(v) => write!(f, "{name} @ column {v}"),
            Site::Instance => write!(f, "{name} @ instance"),
        }
    }
}

/// Checks every instance invariant and reports all violations. Never fails;
/// an empty report means the instance is valid.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |constraint, site| report.push(Violation { constraint, site });

    let m = instance.locations.len();
    if m == 0 {
        push(Constraint::EmptyInstance, Site::Instance);
    }
    for (idx, loc) in instance.locations.iter().enumerate() {
        let site = Site::Location(loc.id);
        if loc.id != idx {
            push(Constraint::LocationId, site);
        }
        if loc.population == 0 {
            push(Constraint::PopulationPositive, site);
        }
        if loc.initial_good > loc.population {
            push(Constraint::InitialGoodRange, site);
        }
        for c in loc.transitions.violated() {
            push(c, site);
        }
    }

    let net = &instance.network;
    if net.size() != m {
        push(Constraint::NetworkSize, Site::Instance);
    }
    for v in 0..net.size() {
        if (0..net.size()).any(|u| !(net.weight(u, v) >= 0.0)) {
            push(Constraint::NegativeWeight, Site::Column(v));
        }
        if !((net.column_sum(v) - 1.0).abs() <= COLUMN_TOL) {
            push(Constraint::ColumnStochastic, Site::Column(v));
        }
    }

    if instance.budget < 1 || instance.budget > m {
        push(Constraint::BudgetRange, Site::Instance);
    }
    if instance.max_period < 1 {
        push(Constraint::MaxPeriod, Site::Instance);
    }
    report
}

/// Binary pull vector for one round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionVector {
    bits: Vec<bool>,
}

impl ActionVector {
    pub fn zeros(size: usize) -> Self {
        Self {
            bits: vec![false; size],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Panics if an id is out of range.
    pub fn from_ids(size: usize, ids: &[usize]) -> Self {
        let mut bits = vec![false; size];
        for &i in ids {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_pulled(&self, id: usize) -> bool {
        self.bits[id]
    }

    pub fn set(&mut self, id: usize, on: bool) {
        self.bits[id] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn pulled(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn within_budget(&self, budget: usize) -> bool {
        self.count() <= budget
    }
}

/// Expected share of each location's residents exposed by `action`
/// (`W · a`).
pub fn reached_fractions(network: &TravelNetwork, action: &ActionVector) -> Result<Vec<f64>> {
    let m = network.size();
    if action.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: action.len(),
        });
    }
    let mut out = vec![0.0; m];
    for u in action.pulled() {
        for (v, o) in out.iter_mut().enumerate() {
            *o += network.weight(u, v);
        }
    }
    // Column sums are 1 only up to COLUMN_TOL.
    for o in &mut out {
        *o = o.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Transition law of a location when a share `w_hat` of its residents is
/// exposed: `w_hat · P^a + (1 − w_hat) · P^p`.
pub fn mixed_transition(transitions: &TransitionPair, w_hat: f64) -> Result<Mat2> {
    if !(0.0..=1.0).contains(&w_hat) {
        return Err(Error::OutOfRange(format!("reached fraction {w_hat}")));
    }
    Ok(mixed_unchecked(transitions, w_hat))
}

#[inline]
pub(crate) fn mixed_unchecked(t: &TransitionPair, w_hat: f64) -> Mat2 {
    let gb = w_hat * t.p_a_gb + (1.0 - w_hat) * t.p_p_gb;
    let bg = w_hat * t.p_a_bg + (1.0 - w_hat) * t.p_p_bg;
    two_state(gb, bg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn good_pair() -> TransitionPair {
        TransitionPair::new(0.05, 0.4, 0.2, 0.1)
    }

    fn instance(transitions: Vec<TransitionPair>, network: TravelNetwork) -> Instance {
        let locations = transitions
            .into_iter()
            .enumerate()
            .map(|(id, t)| Location {
                id,
                population: 100,
                initial_good: 50,
                transitions: t,
            })
            .collect();
        Instance {
            locations,
            network,
            budget: 1,
            max_period: 5,
        }
    }

    fn cycle4(self_w: f64) -> TravelNetwork {
        let edge = (1.0 - self_w) / 2.0;
        TravelNetwork::from_fn(4, |u, v| {
            if u == v {
                self_w
            } else if (u + 1) % 4 == v || (v + 1) % 4 == u {
                edge
            } else {
                0.0
            }
        })
    }

    #[test]
    fn assumption_one_violation_is_reported() {
        let mut ts = vec![good_pair(); 4];
        ts[2] = TransitionPair::new(0.3, 0.4, 0.2, 0.1);
        let report = validate_instance(&instance(ts, TravelNetwork::identity(4)));
        let text: Vec<_> = report.iter().map(|v| v.to_string()).collect();
        assert!(text.contains(&"assumption-1 @ location 2".to_string()), "{text:?}");
        assert!(report.iter().all(|v| v.site == Site::Location(2)));
    }

    #[test]
    fn valid_instance_has_empty_report() {
        let inst = instance(vec![good_pair(); 4], cycle4(0.5));
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn short_column_is_reported() {
        let mut net = TravelNetwork::identity(3);
        net.set_weight(1, 1, 0.9);
        let report = validate_instance(&instance(vec![good_pair(); 3], net));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].to_string(), "column-stochastic @ column 1");
    }

    #[test]
    fn dimension_problems_are_reported_not_raised() {
        let report = validate_instance(&instance(vec![good_pair(); 3], TravelNetwork::identity(4)));
        assert!(report.iter().any(|v| v.constraint == Constraint::NetworkSize));
        let empty = instance(vec![], TravelNetwork::identity(0));
        assert!(validate_instance(&empty)
            .iter()
            .any(|v| v.constraint == Constraint::EmptyInstance));
    }

    #[test]
    fn star_center_reaches_every_leaf() {
        // all residents of each leaf sit at the center (node 0)
        let m = 5;
        let net = TravelNetwork::from_fn(m, |u, _| if u == 0 { 1.0 } else { 0.0 });
        let w = reached_fractions(&net, &ActionVector::from_ids(m, &[0])).unwrap();
        for leaf in 1..m {
            assert_eq!(w[leaf], 1.0);
        }
    }

    #[test]
    fn zero_action_reaches_nobody() {
        let w = reached_fractions(&cycle4(0.5), &ActionVector::zeros(4)).unwrap();
        assert_eq!(w, vec![0.0; 4]);
    }

    #[test]
    fn cycle_reached_fractions() {
        let w = reached_fractions(&cycle4(0.5), &ActionVector::from_ids(4, &[0])).unwrap();
        assert_eq!(w, vec![0.5, 0.25, 0.0, 0.25]);
    }

    #[test]
    fn reached_fraction_dimension_mismatch() {
        assert!(reached_fractions(&cycle4(0.5), &ActionVector::zeros(3)).is_err());
    }

    #[test]
    fn mixed_transition_endpoints_and_midpoint() {
        let t = TransitionPair::new(0.1, 0.9, 0.3, 0.1);
        assert_eq!(mixed_transition(&t, 0.0).unwrap(), t.passive());
        assert_eq!(mixed_transition(&t, 1.0).unwrap(), t.active());
        let m = mixed_transition(&t, 0.5).unwrap();
        assert!((m[0][1] - 0.2).abs() < 1e-15);
        assert!((m[1][0] - 0.5).abs() < 1e-15);
        assert!(mixed_transition(&t, 1.5).is_err());
        assert!(mixed_transition(&t, -0.1).is_err());
    }

    #[test]
    fn support_includes_self_loop() {
        let net = cycle4(0.5);
        assert_eq!(net.support(0), vec![0, 1, 3]);
        assert_eq!(cycle4(0.0).support(0), vec![1, 3]);
    }

    #[test]
    fn renormalize_absorbs_rounding_only() {
        let mut net = TravelNetwork::identity(2);
        net.set_weight(0, 0, 1.0 + 5e-7);
        net.set_weight(1, 1, 0.8);
        assert_eq!(net.renormalize_columns(), vec![1]);
        assert!((net.column_sum(0) - 1.0).abs() < 1e-15);
    }

    fn stochastic_network(m: usize) -> impl Strategy<Value = TravelNetwork> {
        proptest::collection::vec(0.0f64..1.0, m * m).prop_map(move |raw| {
            let mut net = TravelNetwork::new(m, raw).unwrap();
            for v in 0..m {
                let s = net.column_sum(v).max(1e-12);
                for u in 0..m {
                    let w = net.weight(u, v) / s;
                    net.set_weight(u, v, w);
                }
            }
            net
        })
    }

    proptest! {
        #[test]
        fn reached_fractions_bounded_and_monotone(
            net in stochastic_network(6),
            bits in proptest::collection::vec(any::<bool>(), 6),
            extra in 0usize..6,
        ) {
            let a = ActionVector::from_bits(bits);
            let w = reached_fractions(&net, &a).unwrap();
            prop_assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
            let mut b = a.clone();
            b.set(extra, true);
            let w2 = reached_fractions(&net, &b).unwrap();
            for (x, y) in w.iter().zip(&w2) {
                prop_assert!(y >= x);
            }
        }

        #[test]
        fn mixed_transition_is_affine(
            a in 0.0f64..0.5, b in 0.5f64..1.0, c in 0.0f64..0.5, d in 0.0f64..0.5,
            x in 0.0f64..=1.0, y in 0.0f64..=1.0,
        ) {
            let t = TransitionPair::new(a, b, c, d);
            let mid = mixed_transition(&t, (x + y) / 2.0).unwrap();
            let mx = mixed_transition(&t, x).unwrap();
            let my = mixed_transition(&t, y).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((mid[i][j] - (mx[i][j] + my[i][j]) / 2.0).abs() <= 1e-12);
                }
                prop_assert!((mid[i][0] + mid[i][1] - 1.0).abs() <= 1e-12);
            }
        }
    }
}
