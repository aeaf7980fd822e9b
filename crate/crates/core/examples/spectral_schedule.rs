//! Coupling graph, Laplacian spectrum, and the resulting dispatch on a small
//! clustered network.

use netrmab::generator::clusters;
use netrmab::model::TransitionPair;
use netrmab::periods::PeriodAssignment;
use netrmab::scheduler::{earliest_deadline, engage};
use netrmab::spectral::{build_coupling_graph, connected_components, fiedler_set, laplacian, symmetric_eigen};

fn main() -> netrmab::error::Result<()> {
    let t = TransitionPair::new(0.1, 0.6, 0.3, 0.1);
    let inst = clusters(2, 3, 0.4, &[t, t], 500, 3, 4);
    let periods = PeriodAssignment::uniform(inst.len(), 2);

    let graph = build_coupling_graph(&inst, &periods)?;
    let mut values = symmetric_eigen(&laplacian(&graph))?.values;
    values.sort_by(f64::total_cmp);
    println!("components {:?}", connected_components(&graph));
    println!("spectrum {values:.4?}");
    let fiedler = fiedler_set(&graph, 1e-8)?;
    println!("fiedler value {:.4}, {} vector(s)", fiedler.eigenvalue, fiedler.vectors.len());

    let show = |name: &str, actions: &[netrmab::model::ActionVector]| {
        let rounds: Vec<Vec<usize>> = actions.iter().map(|a| a.pulled().collect()).collect();
        println!("{name:>8}: {rounds:?}");
    };
    show("spectral", &engage(&inst, &periods, 6)?.actions);
    show("edf", &earliest_deadline(&inst, &periods, 6).actions);
    Ok(())
}
