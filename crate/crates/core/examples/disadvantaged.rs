//! How often each policy visits the highest-risk 15% of locations compared
//! with the rest.

use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::scheduler::Policy;
use netrmab::simulator::disadvantaged_rates;

fn main() -> netrmab::error::Result<()> {
    let inst = generate_synthetic(&GeneratorConfig { m: 60, budget: 6, seed: 5, ..GeneratorConfig::default() })?;
    for policy in Policy::ALL {
        let sched = policy.schedule(&inst, 100, 1)?;
        let (top, rest) = disadvantaged_rates(&inst, &sched, 0.15)?;
        println!("{:>10}: high risk {top:.3} per round, others {rest:.3}", policy.name());
    }
    Ok(())
}
