//! Reward as cure or prevention strength varies, for the scheduler and the
//! baselines.

use netrmab::generator::{generate_synthetic, GeneratorConfig, TransitionRanges};
use netrmab::scheduler::Policy;
use netrmab::simulator::replicate;

fn run(label: &str, ranges: TransitionRanges) -> netrmab::error::Result<()> {
    let inst = generate_synthetic(&GeneratorConfig {
        m: 40,
        budget: 4,
        transitions: ranges,
        seed: 2,
        ..GeneratorConfig::default()
    })?;
    let cells: Vec<String> = Policy::ALL
        .iter()
        .map(|&p| replicate(&inst, p, 100, 10, 5).map(|s| format!("{} {:7.1}", p.name(), s.mean)))
        .collect::<Result<_, _>>()?;
    println!("{label:<16} {}", cells.join("  "));
    Ok(())
}

fn main() -> netrmab::error::Result<()> {
    // active cure probability drawn above a rising floor
    for lo in [0.2, 0.5, 0.8] {
        run(&format!("cure >= {lo}"), TransitionRanges { p_a_bg: (lo, 1.0), ..TransitionRanges::default() })?;
    }
    // active relapse probability drawn below a falling ceiling
    for hi in [0.5, 0.2, 0.05] {
        run(&format!("relapse <= {hi}"), TransitionRanges { p_a_gb: (0.0, hi), ..TransitionRanges::default() })?;
    }
    run("no prevention", TransitionRanges { zero_prevention: true, ..TransitionRanges::default() })
}
