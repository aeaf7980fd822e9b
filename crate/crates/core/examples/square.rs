//! The four-location square: closed-form rewards of the two pairing policies
//! and the pairing the spectral scheduler picks in each commuting scenario.

use netrmab::dynamics::periodic_average_reward;
use netrmab::generator::square;
use netrmab::model::ActionVector;
use netrmab::periods::PeriodAssignment;
use netrmab::scheduler::engage;

fn pairs(a: [usize; 2], b: [usize; 2]) -> Vec<ActionVector> {
    vec![ActionVector::from_ids(4, &a), ActionVector::from_ids(4, &b)]
}

fn main() -> netrmab::error::Result<()> {
    let opposite = pairs([0, 2], [1, 3]);
    let adjacent = pairs([0, 1], [2, 3]);
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "p", "NN/S1", "NB/S1", "NN/S2", "NB/S2");
    for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let s1 = square(p, 1, 1);
        let s2 = square(p, 2, 1);
        println!(
            "{p:>5} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            periodic_average_reward(&s1, &opposite)?,
            periodic_average_reward(&s1, &adjacent)?,
            periodic_average_reward(&s2, &opposite)?,
            periodic_average_reward(&s2, &adjacent)?,
        );
    }

    for scenario in [1, 2] {
        let inst = square(0.5, scenario, 1);
        let sched = engage(&inst, &PeriodAssignment::uniform(4, 2), 4)?;
        let rounds: Vec<Vec<usize>> = sched.actions.iter().map(|a| a.pulled().collect()).collect();
        println!("scenario {scenario}: scheduler pulls {rounds:?}");
    }
    Ok(())
}
