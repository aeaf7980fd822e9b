//! Generating preset instances, writing them as JSON, and what validation
//! reports for a broken file.

use netrmab::generator::{generate_synthetic, Preset};
use netrmab::io::{load_instance, parse_instance, save_instance};

fn main() -> netrmab::error::Result<()> {
    let dir = std::env::temp_dir();
    for preset in [Preset::Urban, Preset::Rural, Preset::Food, Preset::Synthetic] {
        let inst = generate_synthetic(&preset.config(Some(60), 0))?;
        let path = dir.join(format!("netrmab-{}.json", preset.name()));
        save_instance(&inst, &path)?;
        let back = load_instance(&path)?;
        let edges = back.network.undirected_edges().len();
        println!("{:>9}: {} locations, {edges} edges, budget {} -> {}", preset.name(), back.len(), back.budget, path.display());
    }

    let broken = r#"{"budget": 3, "max_period": 4,
        "locations": [{"id": 0, "population": 10, "initial_good": 12,
                       "p_a_gb": 0.4, "p_a_bg": 0.5, "p_p_gb": 0.2, "p_p_bg": 0.05}],
        "commute": [{"at": 0, "home": 0, "weight": 1.0}]}"#;
    match parse_instance(broken) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
