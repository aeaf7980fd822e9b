//! Visiting-period selection.
//!
//! Each arm gets a table of average per-round rewards for every candidate
//! period. Choosing one period per arm under a frequency budget is a
//! separable concave knapsack once each table is replaced by its upper
//! concave envelope over frequency `1/t`: sort all envelope segments by
//! slope and fill the budget greedily. A dynamic program over integer
//! frequency units solves small instances exactly and serves as the check.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{pull_reward_bound, Regime};
use crate::error::{Error, Result};
use crate::model::Instance;

/// Slack allowed on the frequency budget.
pub const BUDGET_TOL: f64 = 1e-12;

/// Reward of pulling one arm every `t` rounds, `t = 1..=T`. `None` marks a
/// period excluded from consideration.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    pub location_id: usize,
    pub values: Vec<Option<f64>>,
}

impl RewardTable {
    pub fn from_values(location_id: usize, values: Vec<f64>) -> Self {
        Self {
            location_id,
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn max_period(&self) -> usize {
        self.values.len()
    }

    /// Value at period `t` (1-based); excluded periods read as `None`.
    pub fn value(&self, t: u32) -> Option<f64> {
        self.values.get((t as usize).checked_sub(1)?).copied().flatten()
    }

    fn points(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as u32 + 1, v)))
    }
}

/// Table of upper pull-reward bounds for one location. Periods shorter than
/// `t_min` are excluded.
pub fn build_reward_table(instance: &Instance, location_id: usize, t_min: usize) -> Result<RewardTable> {
    let max_period = instance.max_period;
    if t_min < 1 || t_min > max_period {
        return Err(Error::Precondition(format!(
            "minimum period {t_min} outside 1..={max_period}"
        )));
    }
    let values = (1..=max_period)
        .map(|t| {
            if t < t_min {
                Ok(None)
            } else {
                pull_reward_bound(instance, location_id, t as u32, Regime::Upper).map(|b| Some(b.value))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RewardTable { location_id, values })
}

/// Tables for every location, built in parallel.
pub fn build_reward_tables(instance: &Instance, t_min: usize) -> Result<Vec<RewardTable>> {
    (0..instance.len())
        .into_par_iter()
        .map(|v| build_reward_table(instance, v, t_min))
        .collect()
}

/// Replaces each entry `H` with `(H / population)^alpha / alpha`.
pub fn welfare_transform(table: &RewardTable, population: u64, alpha: f64) -> Result<RewardTable> {
    if alpha == 0.0 || alpha > 1.0 || alpha.is_nan() {
        return Err(Error::OutOfRange(format!(
            "welfare exponent {alpha} must be nonzero and at most 1"
        )));
    }
    let n = population as f64;
    let values = table
        .values
        .iter()
        .map(|v| {
            v.and_then(|h| {
                let w = (h / n).powf(alpha) / alpha;
                w.is_finite().then_some(w)
            })
        })
        .collect();
    Ok(RewardTable {
        location_id: table.location_id,
        values,
    })
}

/// One linear piece of an arm's concave envelope over frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSegment {
    pub location_id: usize,
    pub freq_lo: f64,
    pub freq_hi: f64,
    pub slope: f64,
    /// Period at the right end of the segment.
    pub period: u32,
    /// Table value at the left and right ends.
    pub value_lo: f64,
    pub value_hi: f64,
}

impl EnvelopeSegment {
    pub fn width(&self) -> f64 {
        self.freq_hi - self.freq_lo
    }
}

/// Upper concave envelope of `(0, 0)` and `(1/t, H(t))`, keeping only
/// segments of positive slope.
pub fn concave_envelope(table: &RewardTable) -> Vec<EnvelopeSegment> {
    // (frequency, value, period); period 0 stands for "never"
    let mut pts: Vec<(f64, f64, u32)> = vec![(0.0, 0.0, 0)];
    let mut tail: Vec<_> = table.points().map(|(t, v)| (1.0 / t as f64, v, t)).collect();
    tail.reverse();
    pts.extend(tail);

    let mut hull: Vec<(f64, f64, u32)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    hull.windows(2)
        .map(|w| EnvelopeSegment {
            location_id: table.location_id,
            freq_lo: w[0].0,
            freq_hi: w[1].0,
            slope: (w[1].1 - w[0].1) / (w[1].0 - w[0].0),
            period: w[1].2,
            value_lo: w[0].1,
            value_hi: w[1].1,
        })
        .take_while(|s| s.slope > 0.0)
        .collect()
}

/// One period per arm, or `None` for arms never visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodAssignment {
    pub periods: Vec<Option<u32>>,
}

impl PeriodAssignment {
    pub fn never(size: usize) -> Self {
        Self {
            periods: vec![None; size],
        }
    }

    pub fn uniform(size: usize, period: u32) -> Self {
        Self {
            periods: vec![Some(period); size],
        }
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn period(&self, v: usize) -> Option<u32> {
        self.periods[v]
    }

    /// Ids of arms with a period.
    pub fn assigned(&self) -> Vec<usize> {
        (0..self.periods.len())
            .filter(|&v| self.periods[v].is_some())
            .collect()
    }

    pub fn frequency_sum(&self) -> f64 {
        self.periods.iter().flatten().map(|&t| 1.0 / t as f64).sum()
    }

    pub fn is_feasible(&self, budget: usize) -> bool {
        self.frequency_sum() <= budget as f64 + BUDGET_TOL
    }

    /// Objective value of this assignment under `tables`.
    pub fn value(&self, tables: &[RewardTable]) -> f64 {
        tables
            .iter()
            .map(|tab| {
                self.periods[tab.location_id]
                    .and_then(|t| tab.value(t))
                    .unwrap_or(0.0)
            })
            .sum()
    }
}

struct GreedyOutcome {
    assignment: PeriodAssignment,
    fractional_value: f64,
}

fn greedy(tables: &[RewardTable], budget: usize) -> GreedyOutcome {
    let size = tables.iter().map(|t| t.location_id + 1).max().unwrap_or(0);
    let mut segments: Vec<EnvelopeSegment> = tables.iter().flat_map(concave_envelope).collect();
    segments.sort_by(|a, b| {
        b.slope
            .partial_cmp(&a.slope)
            .unwrap_or(Ordering::Equal)
            .then(a.location_id.cmp(&b.location_id))
            .then(b.period.cmp(&a.period))
    });

    let mut assignment = PeriodAssignment::never(size);
    let mut remaining = budget as f64;
    let mut fractional_value = 0.0;
    for seg in segments {
        let width = seg.width();
        if width <= remaining + BUDGET_TOL {
            assignment.periods[seg.location_id] = Some(seg.period);
            remaining -= width;
            fractional_value += seg.value_hi - seg.value_lo;
        } else {
            // the one truncated arm keeps its last full breakpoint
            fractional_value += seg.slope * remaining.max(0.0);
            break;
        }
    }
    GreedyOutcome {
        assignment,
        fractional_value,
    }
}

/// Slope-sorting greedy over all arms' envelope segments. Stops at the first
/// segment the remaining budget cannot cover, so at most one arm ends below
/// its fractional frequency.
pub fn solve_periods_greedy(tables: &[RewardTable], budget: usize) -> PeriodAssignment {
    greedy(tables, budget).assignment
}

/// Value of the continuous relaxation, where the truncated segment is taken
/// fractionally. Upper-bounds every feasible assignment.
pub fn fractional_relaxation_value(tables: &[RewardTable], budget: usize) -> f64 {
    greedy(tables, budget).fractional_value
}

pub const EXACT_MAX_ARMS: usize = 10;
pub const EXACT_MAX_PERIOD: usize = 8;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Exact optimum by dynamic programming over integer frequency units
/// `lcm(1..=T) / t`. Ties go to the smaller total frequency; within an arm
/// "never" and longer periods are preferred.
pub fn solve_periods_exact(tables: &[RewardTable], budget: usize) -> Result<PeriodAssignment> {
    let max_period = tables.iter().map(|t| t.max_period()).max().unwrap_or(0);
    if tables.len() > EXACT_MAX_ARMS || max_period > EXACT_MAX_PERIOD {
        return Err(Error::ScaleLimit {
            max_arms: EXACT_MAX_ARMS,
            max_period: EXACT_MAX_PERIOD,
            arms: tables.len(),
            period: max_period,
        });
    }
    let size = tables.iter().map(|t| t.location_id + 1).max().unwrap_or(0);
    let unit = (1..=max_period.max(1) as u64).fold(1, lcm) as usize;
    let cap = budget.min(tables.len()) * unit;

    let better = |new: f64, old: Option<f64>| match old {
        None => true,
        Some(o) => new > o + 1e-12 * (1.0 + o.abs()),
    };

    let mut dp: Vec<Option<f64>> = vec![None; cap + 1];
    dp[0] = Some(0.0);
    let mut choices: Vec<Vec<Option<u32>>> = Vec::with_capacity(tables.len());
    for tab in tables {
        let mut next: Vec<Option<f64>> = dp.clone();
        let mut choice: Vec<Option<u32>> = vec![None; cap + 1];
        for t in (1..=tab.max_period() as u32).rev() {
            let Some(h) = tab.value(t) else { continue };
            let cost = unit / t as usize;
            for c in cost..=cap {
                if let Some(base) = dp[c - cost] {
                    if better(base + h, next[c]) {
                        next[c] = Some(base + h);
                        choice[c] = Some(t);
                    }
                }
            }
        }
        dp = next;
        choices.push(choice);
    }

    let mut best_c = 0;
    for c in 0..=cap {
        if let Some(v) = dp[c] {
            if better(v, dp[best_c]) {
                best_c = c;
            }
        }
    }

    let mut assignment = PeriodAssignment::never(size);
    let mut c = best_c;
    for (tab, choice) in tables.iter().zip(&choices).rev() {
        if let Some(t) = choice[c] {
            assignment.periods[tab.location_id] = Some(t);
            c -= unit / t as usize;
        }
    }
    Ok(assignment)
}

/// Writes `location_id,period,table_value` rows.
pub fn write_periods_csv<W: Write>(
    out: W,
    tables: &[RewardTable],
    assignment: &PeriodAssignment,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["location_id", "period", "table_value"])?;
    for tab in tables {
        let v = tab.location_id;
        let (period, value) = match assignment.periods[v] {
            Some(t) => (t.to_string(), tab.value(t).unwrap_or(0.0)),
            None => ("never".to_string(), 0.0),
        };
        w.write_record([v.to_string(), period, value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_periods_csv`].
pub fn read_periods_csv<R: std::io::Read>(input: R, size: usize) -> Result<PeriodAssignment> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = PeriodAssignment::never(size);
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse {
            line: rec.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: what.to_string(),
        };
        let v: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("location_id"))?;
        if v >= size {
            return Err(bad("location_id out of range"));
        }
        out.periods[v] = match rec.get(1) {
            Some("never") => None,
            Some(s) => Some(s.parse().map_err(|_| bad("period"))?),
            None => return Err(bad("missing period")),
        };
    }
    Ok(out)
}

/// Fairness knobs for period planning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Shortest admissible period.
    pub t_min: usize,
    /// Longest admissible period; defaults to the instance's. Setting it to
    /// `1 / f_min` enforces a minimum visiting frequency for visited arms.
    pub t_max: Option<usize>,
    /// Welfare exponent applied to per-capita table values.
    pub alpha: Option<f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            t_min: 1,
            t_max: None,
            alpha: None,
        }
    }
}

/// Reward tables and greedy periods for an instance.
#[derive(Debug, Clone)]
pub struct Plan {
    pub tables: Vec<RewardTable>,
    pub periods: PeriodAssignment,
}

pub fn plan_periods(instance: &Instance, options: &PlanOptions) -> Result<Plan> {
    let capped;
    let instance = match options.t_max {
        Some(t) if t < instance.max_period => {
            capped = Instance {
                max_period: t,
                ..instance.clone()
            };
            &capped
        }
        _ => instance,
    };
    let mut tables = build_reward_tables(instance, options.t_min)?;
    if let Some(alpha) = options.alpha {
        tables = tables
            .iter()
            .zip(&instance.locations)
            .map(|(t, loc)| welfare_transform(t, loc.population, alpha))
            .collect::<Result<_>>()?;
    }
    let periods = solve_periods_greedy(&tables, instance.budget);
    Ok(Plan { tables, periods })
}
