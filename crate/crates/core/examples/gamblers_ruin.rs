//! Gambler's ruin on {0..10}: reach 10 before 0.

use taboo::{build_birth_death, hitting_prob_first_step, HittingQuery, TabooSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10;
    for (up, down) in [(1.0, 1.0), (2.0, 1.0)] {
        let gen = build_birth_death(n, &vec![up; n], &vec![down; n])?;
        println!("up={up} down={down}");
        let s = down / up;
        for x in 1..n {
            let q = HittingQuery::new(x, n, TabooSet::from_indices([0]));
            let v = hitting_prob_first_step(&gen, &q)?.value;
            let closed = if up == down {
                x as f64 / n as f64
            } else {
                (1.0 - s.powi(x as i32)) / (1.0 - s.powi(n as i32))
            };
            println!("  x={x}: {v:.12} closed form {closed:.12}");
        }
    }
    Ok(())
}
