//! Simple random walk on a window of Z^3 with an absorbing exterior.
//!
//! Compares the singleton-taboo value computed from the ordinary Green
//! function against the taboo Green ratio, and prints the return probability
//! to the origin for growing windows.
//!
//! ```text
//! cargo run --release --example transient_lattice
//! ```

use std::time::Instant;

use taboo::green::transient_green;
use taboo::{
    build_lattice_walk, hitting_prob_base, hitting_prob_taboo_green, singleton_taboo_transient,
    HittingQuery, LatticeSpec, TabooSet,
};

fn main() -> taboo::Result<()> {
    for radius in [4, 6, 8, 10] {
        let started = Instant::now();
        let gen = build_lattice_walk(&LatticeSpec::simple(3, radius, 1.0))?;
        let origin = gen.lookup("0_0_0")?;
        let g00 = transient_green(&gen)?.column(origin)?.values[origin];
        let ret = hitting_prob_base(&gen, origin, origin)?.value;
        println!(
            "R={radius:2} states={:5} G(0,0)={g00:.10} return={ret:.10} ({:.2?})",
            gen.len(),
            started.elapsed()
        );
    }

    let gen = build_lattice_walk(&LatticeSpec::simple(3, 10, 1.0))?;
    let x = gen.lookup("1_0_0")?;
    let y = gen.lookup("0_1_0")?;
    let z = gen.lookup("0_0_0")?;
    for (from, to) in [(x, y), (y, y), (z, y)] {
        let via_green = singleton_taboo_transient(&gen, from, to, z)?.value;
        let q = HittingQuery::new(from, to, TabooSet::from_indices([z]));
        let via_taboo = hitting_prob_taboo_green(&gen, &q)?.value;
        println!(
            "from {} to {} avoiding {}: {via_green:.12} vs {via_taboo:.12} (diff {:.1e})",
            gen.label(from),
            gen.label(to),
            gen.label(z),
            (via_green - via_taboo).abs()
        );
    }
    Ok(())
}
