//! Stochastic simulation of one schedule against its expected-value reward.

use netrmab::dynamics::expected_rewards;
use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::scheduler::engage_planned;
use netrmab::simulator::{replicate_schedule, simulate};

fn main() -> netrmab::error::Result<()> {
    let inst = generate_synthetic(&GeneratorConfig { m: 30, budget: 3, seed: 4, ..GeneratorConfig::default() })?;
    let sched = engage_planned(&inst, 100)?;

    let trace = simulate(&inst, &sched.actions, 11)?;
    println!("one run: average reward {:.1}", trace.average_reward());
    for t in 0..5 {
        let pulled: Vec<usize> = trace.actions[t].pulled().collect();
        println!("  round {t}: reward {:7.1}, pulled {pulled:?}", trace.rewards[t]);
    }

    let expected = expected_rewards(&inst, &sched.actions)?;
    let mean_expected = expected.iter().sum::<f64>() / expected.len() as f64;
    let stats = replicate_schedule(&inst, &sched.actions, 30, 11, 0)?;
    // the half-width is 1.96 standard errors
    let z = 1.96 * (stats.mean - mean_expected) / stats.half_width;
    println!(
        "30 runs: {:.1} ± {:.1}; expected dynamics {mean_expected:.1} ({z:+.1} standard errors)",
        stats.mean, stats.half_width
    );
    Ok(())
}
