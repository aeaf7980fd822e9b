//! Policy comparisons and run manifests.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use serde::Serialize;

use crate::error::Result;
use crate::model::Instance;
use crate::scheduler::Policy;
use crate::simulator::{replicate, RunStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub budget: usize,
    pub policy: Policy,
    pub stats: RunStats,
}

/// Replicates every policy at every budget. Budgets above the number of
/// locations are clamped.
pub fn compare_policies(
    instance: &Instance,
    policies: &[Policy],
    budgets: &[usize],
    horizon: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for &k in budgets {
        let inst = instance.with_budget(k.clamp(1, instance.len()));
        for &policy in policies {
            rows.push(ComparisonRow {
                budget: inst.budget,
                policy,
                stats: replicate(&inst, policy, horizon, reps, seed)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow], horizon: usize, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["budget", "policy", "mean", "ci_half_width", "reps", "horizon", "seed"])?;
    for r in rows {
        w.write_record([
            r.budget.to_string(),
            r.policy.name().to_string(),
            r.stats.mean.to_string(),
            r.stats.half_width.to_string(),
            r.stats.reps.to_string(),
            horizon.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun a command: its arguments, seeds, and the
/// source version it ran from.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seeds: Vec<u64>, config: serde_json::Value, outputs: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            version: version_string(),
            seeds,
            config,
            outputs,
        }
    }

    /// Writes `<first output>.manifest.json`.
    pub fn write_next_to(&self, output: &Path) -> Result<()> {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(name, text)?;
        Ok(())
    }
}

/// Crate version plus `git describe` output when run inside a checkout.
pub fn version_string() -> String {
    let pkg = env!("CARGO_PKG_VERSION");
    let described = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    match described {
        Some(d) => format!("{pkg}+{d}"),
        None => pkg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_synthetic, GeneratorConfig};

    #[test]
    fn one_row_per_budget_and_policy() {
        let inst = generate_synthetic(&GeneratorConfig {
            m: 12,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let rows = compare_policies(&inst, &Policy::ALL, &[1, 3, 40], 10, 3, 2).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows.last().unwrap().budget, 12);
        let mut buf = Vec::new();
        write_comparison_csv(&mut buf, &rows, 10, 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert!(text.starts_with("budget,policy,mean"));
    }
}
