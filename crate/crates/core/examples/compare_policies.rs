//! Budget sweep over all four policies with 95% confidence intervals.
//!
//! `cargo run --release --example compare_policies -- [m] [reps]`

use netrmab::experiment::compare_policies;
use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::scheduler::Policy;

fn main() -> netrmab::error::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let m = args.next().unwrap_or(50);
    let reps = args.next().unwrap_or(30);
    let inst = generate_synthetic(&GeneratorConfig { m, seed: 1, ..GeneratorConfig::default() })?;
    let budgets = [m / 10, m / 5, 3 * m / 10];
    for row in compare_policies(&inst, &Policy::ALL, &budgets, 100, reps, 7)? {
        println!("k={:<3} {:>10} {:9.1} ± {:.1}", row.budget, row.policy.name(), row.stats.mean, row.stats.half_width);
    }
    Ok(())
}
