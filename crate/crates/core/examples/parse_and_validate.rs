//! Parse chain files, report validation findings, and round-trip through the
//! canonical text form.

use taboo::{embedded_chain, parse_chain, validate, Generator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    for name in ["tri.chain", "leaky5.chain"] {
        let text = std::fs::read_to_string(format!("{dir}/{name}"))?;
        let gen = parse_chain(&text)?;
        let report = validate(&gen);
        println!(
            "{name}: {} states, conservative={}, irreducible={}",
            gen.len(),
            report.conservative,
            report.irreducible
        );
        for f in &report.findings {
            println!("  {f}");
        }
        let jumps = embedded_chain(&gen);
        println!("  jump law from {}: {:?}", gen.label(0), jumps.row(0));

        let again: Generator = gen.to_chain_file().parse()?;
        assert_eq!(again, gen);
    }

    // the builder derives diagonals for conservative chains
    let gen = Generator::builder(["up", "down"])
        .rate("up", "down", 2.0)
        .rate("down", "up", 0.5)
        .build()?;
    print!("{}", gen.to_chain_file());

    // malformed input is rejected with a line number
    let err = parse_chain("states: a b\nconservative: true\nrate: a b -1\n").unwrap_err();
    println!("rejected: {err}");
    Ok(())
}
