//! Reward tables, greedy versus exact period choice, and the fairness knobs.

use netrmab::generator::{generate_synthetic, GeneratorConfig};
use netrmab::periods::{
    build_reward_tables, fractional_relaxation_value, plan_periods, solve_periods_exact, solve_periods_greedy,
    PlanOptions,
};

fn main() -> netrmab::error::Result<()> {
    let inst = generate_synthetic(&GeneratorConfig {
        m: 8,
        budget: 2,
        max_period: 6,
        seed: 3,
        ..GeneratorConfig::default()
    })?;

    let tables = build_reward_tables(&inst, 1)?;
    for t in &tables {
        let row: Vec<String> = (1..=t.max_period() as u32).map(|p| format!("{:7.1}", t.value(p).unwrap())).collect();
        println!("location {}: {}", t.location_id, row.join(" "));
    }

    let greedy = solve_periods_greedy(&tables, inst.budget);
    let exact = solve_periods_exact(&tables, inst.budget)?;
    println!("greedy {:.2}  exact {:.2}  relaxation {:.2}",
        greedy.value(&tables),
        exact.value(&tables),
        fractional_relaxation_value(&tables, inst.budget));
    println!("greedy periods {:?}", greedy.periods);

    let variants = [
        ("default", PlanOptions::default()),
        ("t_min 2", PlanOptions { t_min: 2, ..PlanOptions::default() }),
        ("f_min 1/3", PlanOptions { t_max: Some(3), ..PlanOptions::default() }),
        ("alpha 0.5", PlanOptions { alpha: Some(0.5), ..PlanOptions::default() }),
    ];
    for (name, opts) in variants {
        let plan = plan_periods(&inst, &opts)?;
        println!("{name:>10}: {:?} (frequency {:.2})", plan.periods.periods, plan.periods.frequency_sum());
    }
    Ok(())
}
