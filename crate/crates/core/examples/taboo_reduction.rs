//! A three-state taboo evaluated by growing it one state at a time from a
//! singleton, with the trace of intermediate values.

use taboo::reduction::{reduce_with_trace, render_trace};
use taboo::{build_complete_graph, hitting_prob_first_step, HittingQuery, TabooSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gen = build_complete_graph(6, 0.2)?;
    for order in [[3, 4, 5], [5, 3, 4]] {
        let q = HittingQuery::new(0, 1, TabooSet::from_indices(order));
        let r = reduce_with_trace(&gen, &q).map_err(|p| p.error)?;
        println!("order {order:?}: {:.12}", r.value);
        let trace = r.trace.as_deref().unwrap_or_default();
        // each line names the added state; the pair it was computed for is
        // in the step's output query
        for (line, step) in render_trace(trace, &gen).lines().zip(trace) {
            let (q, _) = &step.output;
            println!(
                "  {line:<40} for {} -> {} avoiding {:?}",
                gen.label(q.from),
                gen.label(q.to),
                q.taboo.labels(gen.states())
            );
        }
    }
    // by symmetry the walk meets 1 before 3, 4, 5 with probability 1/4
    let direct = hitting_prob_first_step(
        &gen,
        &HittingQuery::new(0, 1, TabooSet::from_indices([3, 4, 5])),
    )?;
    println!("first-step: {:.12}", direct.value);

    // start in the taboo: the taboo only applies after the first exit
    let q = HittingQuery::new(4, 1, TabooSet::from_indices([3, 4, 5]));
    let r = reduce_with_trace(&gen, &q).map_err(|p| p.error)?;
    println!(
        "from 4: {:.12} in {} steps",
        r.value,
        r.trace.map_or(0, |t| t.len())
    );
    Ok(())
}
