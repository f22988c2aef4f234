#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod common;

use common::ruin;
use taboo::green::transient_green;
use taboo::{
    build_birth_death, build_lattice_walk, hitting_prob_base, hitting_prob_first_step,
    singleton_taboo_transient, HittingQuery, LatticeSpec, TabooSet,
};

fn z3(radius: u32) -> taboo::Generator {
    build_lattice_walk(&LatticeSpec::simple(3, radius, 1.0)).unwrap()
}

fn origin_green(radius: u32) -> f64 {
    let g = z3(radius);
    let o = g.lookup("0_0_0").unwrap();
    transient_green(&g).unwrap().column(o).unwrap().values[o]
}

#[test]
fn origin_green_stabilizes() {
    let vals: Vec<f64> = [8, 10, 12].map(origin_green).to_vec();
    for w in vals.windows(2) {
        assert!(w[1] > w[0], "window growth adds occupation time");
        assert!((w[1] - w[0]).abs() < 2e-2);
    }
    assert!((vals[2] - vals[0]).abs() < 2e-2);
    // the infinite lattice value is about 1.5164
    assert!(vals[2] < 1.5164 && vals[2] > 1.45);
}

#[test]
fn wider_windows_agree() {
    // the window deficit decays like 1/R; at 10 vs 14 it is just over 0.0101
    let (g10, g12, g14, g16) = (
        origin_green(10),
        origin_green(12),
        origin_green(14),
        origin_green(16),
    );
    assert!(g14 - g10 < 1.1e-2);
    assert!(g16 - g12 < g14 - g10);
}

#[test]
fn return_probability_is_below_one() {
    let g = z3(6);
    let o = g.lookup("0_0_0").unwrap();
    let f = hitting_prob_base(&g, o, o).unwrap().value;
    // Pólya's constant for Z^3 is about 0.3405; the window only loses paths
    assert!(f > 0.3 && f < 0.3405, "{f}");
}

#[test]
fn singleton_taboo_converges_monotonically() {
    let vals: Vec<f64> = [4, 6, 8, 10]
        .iter()
        .map(|&r| {
            let g = z3(r);
            let (x, y, z) = (
                g.lookup("1_0_0").unwrap(),
                g.lookup("0_1_0").unwrap(),
                g.lookup("0_0_0").unwrap(),
            );
            singleton_taboo_transient(&g, x, y, z).unwrap().value
        })
        .collect();
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(diffs.iter().all(|&d| d > 0.0), "{vals:?}");
    assert!(diffs.windows(2).all(|w| w[1] <= w[0]), "{diffs:?}");
}

#[test]
fn lattice_symmetry() {
    let g = z3(4);
    let o = g.lookup("0_0_0").unwrap();
    let col = transient_green(&g).unwrap().column(o).unwrap().values;
    let e = |s: &str| col[g.lookup(s).unwrap()];
    let v = e("1_0_0");
    for s in ["-1_0_0", "0_1_0", "0_-1_0", "0_0_1", "0_0_-1"] {
        assert!((e(s) - v).abs() < 1e-12);
    }
    assert!((e("1_1_0") - e("0_-1_-1")).abs() < 1e-12);
}

#[test]
fn gamblers_ruin() {
    let n = 10;
    for (up, down) in [(1.0, 1.0), (2.0, 1.0), (0.5, 1.5)] {
        let g = build_birth_death(n, &vec![up; n], &vec![down; n]).unwrap();
        let h = TabooSet::from_indices([0]);
        for x in 1..n {
            let q = HittingQuery::new(x, n, h.clone());
            let v = hitting_prob_first_step(&g, &q).unwrap().value;
            assert!((v - ruin(x, n, up / down)).abs() < 1e-10, "x={x}: {v}");
        }
    }
}
