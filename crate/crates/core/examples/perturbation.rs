//! Plan on a rewired copy of the network, evaluate on the true one.

use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::scheduler::engage_planned;
use netrmab::simulator::{perturb_network, replicate_schedule};

fn main() -> netrmab::error::Result<()> {
    let inst = generate_synthetic(&GeneratorConfig { m: 50, seed: 8, ..GeneratorConfig::default() })?;
    let base = replicate_schedule(&inst, &engage_planned(&inst, 100)?.actions, 30, 1, 0)?.mean;
    println!("unperturbed {base:.1}");
    for fraction in [0.05, 0.15, 0.3, 0.5] {
        let noisy = perturb_network(&inst, fraction, 21)?;
        let got = replicate_schedule(&inst, &engage_planned(&noisy, 100)?.actions, 30, 1, 0)?.mean;
        println!("{:>3.0}% rewired: {got:.1} ({:+.1}%)", fraction * 100.0, 100.0 * (got - base) / base);
    }
    Ok(())
}
