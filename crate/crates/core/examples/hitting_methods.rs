//! Every exact method on the same query, plus the value-iteration sequence
//! that converges to the minimal solution from below.

use taboo::hitting::applicable;
use taboo::{hitting_probability, value_iteration_hitting, Generator, HittingQuery, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let gen: Generator = std::fs::read_to_string(format!("{dir}/leaky5.chain"))?.parse()?;

    for (from, to, taboo) in [
        ("a", "d", vec!["b", "e"]),
        ("a", "e", vec!["b"]),
        ("c", "c", vec![]),
        ("b", "b", vec!["a"]),
    ] {
        let q = HittingQuery::from_labels(gen.states(), from, to, &taboo)?;
        println!("{from} -> {to} avoiding {taboo:?}");
        for m in Method::ALL.into_iter().filter(|&m| applicable(&gen, &q, m)) {
            let r = hitting_probability(&gen, &q, m)?;
            println!("  {:<10} {:.12}", m.name(), r.value);
        }
    }

    let q = HittingQuery::from_labels(gen.states(), "a", "d", &["b"])?;
    let exact = hitting_probability(&gen, &q, Method::FirstStep)?.value;
    for sweeps in [1, 5, 20, 80] {
        let vi = value_iteration_hitting(&gen, q.to, &q.taboo, 1e-300, sweeps)?;
        println!(
            "after {sweeps:>2} sweeps: {:.12} (gap {:.1e})",
            vi.values[q.from],
            (exact - vi.values[q.from]).abs()
        );
    }
    Ok(())
}
