//! Taboo Green functions: expected occupation times before entering a taboo
//! set, and the ordinary Green function of a leaky chain.

use taboo::{green_function, taboo_green, Generator, GreenResult, TabooSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let tri: Generator = std::fs::read_to_string(format!("{dir}/tri.chain"))?.parse()?;
    let h = TabooSet::from_labels(tri.states(), &["2"])?;
    let m = taboo_green(&tri, &h)?;
    println!("complete 3-graph, taboo {{2}}:");
    print!("{}", m.render(&tri));

    // no taboo on a conservative irreducible chain: occupation times diverge
    assert_eq!(green_function(&tri)?, GreenResult::Recurrent);
    println!("without taboo: recurrent\n");

    let leaky: Generator = std::fs::read_to_string(format!("{dir}/leaky5.chain"))?.parse()?;
    if let GreenResult::Finite(g) = green_function(&leaky)? {
        println!("leaky ring, no taboo (residual {:.1e}):", g.residual());
        print!("{}", g.render(&leaky));
    }
    Ok(())
}
