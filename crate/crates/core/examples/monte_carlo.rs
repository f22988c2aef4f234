//! Seeded simulation against the exact answer, the hitting time clocked from
//! the first exit, and the effect of a short horizon.

use taboo::mc::zero_atom_probability;
use taboo::{
    estimate_hitting, estimate_hitting_after_exit, hitting_prob_taboo_green, simulate_trajectory,
    Generator, HittingQuery,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let gen: Generator = std::fs::read_to_string(format!("{dir}/leaky5.chain"))?.parse()?;
    let q = HittingQuery::from_labels(gen.states(), "c", "a", &["b"])?;
    let exact = hitting_prob_taboo_green(&gen, &q)?.value;

    let est = estimate_hitting(&gen, &q, 200_000, 1, 1e3)?;
    println!("exact {exact:.6}  mc {:.6} ± {:.6}", est.mean, est.stderr);

    let after = estimate_hitting_after_exit(&gen, &q, 200_000, 1, 1e3)?;
    println!(
        "after exit {:.6}; first jump lands on target {:.6} (exact {:.6})",
        after.estimate.mean,
        after.zero_atom.mean,
        zero_atom_probability(&gen, q.from, q.to)
    );

    for horizon in [0.5, 2.0, 8.0, 1e3] {
        let e = estimate_hitting(&gen, &q, 50_000, 2, horizon)?;
        println!(
            "horizon {horizon:>6}: {:.4} ({} censored)",
            e.mean, e.horizon_censored
        );
    }

    let path = simulate_trajectory(&gen, q.from, 3, 1e3)?;
    let labels: Vec<&str> = path.jumps.iter().map(|&(_, s)| gen.label(s)).collect();
    println!("one path: {} -> {:?}", labels.join(" "), path.terminal);
    Ok(())
}
