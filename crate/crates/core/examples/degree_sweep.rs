//! Reward against the average degree of the travel graph.

use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::scheduler::Policy;
use netrmab::simulator::replicate;

fn main() -> netrmab::error::Result<()> {
    for (attach, extra) in [(1, 0.0), (1, 0.5), (2, 0.0), (2, 0.5), (3, 0.0)] {
        let inst = generate_synthetic(&GeneratorConfig {
            m: 50,
            attach,
            extra_attach_prob: extra,
            seed: 9,
            ..GeneratorConfig::default()
        })?;
        let degree = 2.0 * inst.network.undirected_edges().len() as f64 / inst.len() as f64;
        let cells: Vec<String> = Policy::ALL
            .iter()
            .map(|&p| replicate(&inst, p, 100, 10, 3).map(|s| format!("{} {:7.1}", p.name(), s.mean)))
            .collect::<Result<_, _>>()?;
        println!("degree {degree:4.2}: {}", cells.join("  "));
    }
    Ok(())
}
