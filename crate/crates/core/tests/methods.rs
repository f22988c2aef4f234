#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod common;

use common::*;
use rand::Rng;
use taboo::hitting::{first_step_solve, taboo_green_hitting_column};
use taboo::{
    build_complete_graph, hitting_prob_base, hitting_prob_first_step, hitting_prob_taboo_green,
    hitting_probability, singleton_taboo_transient, value_iteration_hitting, Error, HittingQuery,
    Method, TabooGreen, TabooSet,
};

#[test]
fn three_state_values_by_hand() {
    let g = complete_3();
    let h = TabooSet::from_indices([2]);
    // _{2}P restricted to {0,1}: inverse of [[1,-.5],[-.5,1]]
    let green = TabooGreen::new(&g, &h).unwrap().matrix().unwrap();
    assert!((green.get(0, 0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert!((green.get(0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    for m in [
        Method::TabooGreen,
        Method::FirstStep,
        Method::ValueIteration,
    ] {
        let v = hitting_probability(&g, &HittingQuery::new(0, 1, h.clone()), m)
            .unwrap()
            .value;
        assert!((v - 0.5).abs() < 1e-11, "{m}: {v}");
        let r = hitting_probability(&g, &HittingQuery::new(0, 0, h.clone()), m)
            .unwrap()
            .value;
        assert!((r - 0.25).abs() < 1e-11, "{m}: {r}");
    }
}

#[test]
fn matches_oracle_on_random_conservative_chains() {
    let mut rng = rng(11);
    for _ in 0..40 {
        let n = rng.gen_range(5..=30);
        let g = random_conservative(n, &mut rng);
        let y = rng.gen_range(0..n);
        let k = rng.gen_range(1..=3.min(n - 2));
        let h = random_taboo(n, k, &[y], &mut rng);
        let x = rng.gen_range(0..n);
        let q = HittingQuery::new(x, y, h.clone());
        let want = oracle_hitting(&g, x, y, &h);
        let a = hitting_prob_taboo_green(&g, &q).unwrap().value;
        let b = hitting_prob_first_step(&g, &q).unwrap().value;
        assert!((a - want).abs() < 1e-10, "green {a} oracle {want}");
        assert!((b - want).abs() < 1e-10, "first-step {b} oracle {want}");
    }
}

#[test]
fn matches_oracle_on_leaky_chains_including_empty_taboo() {
    let mut rng = rng(12);
    for _ in 0..40 {
        let n = rng.gen_range(5..=25);
        let g = random_leaky(n, &mut rng);
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let want = oracle_hitting(&g, x, y, &TabooSet::empty());
        let base = hitting_prob_base(&g, x, y).unwrap().value;
        let fs = hitting_prob_first_step(&g, &HittingQuery::new(x, y, TabooSet::empty()))
            .unwrap()
            .value;
        assert!((base - want).abs() < 1e-10);
        assert!((fs - want).abs() < 1e-10);
        assert!(base < 1.0 || x != y);
    }
}

#[test]
fn column_helper_agrees_with_single_queries() {
    let mut rng = rng(13);
    let g = random_conservative(12, &mut rng);
    let h = TabooSet::from_indices([3, 7]);
    let tg = TabooGreen::new(&g, &h).unwrap();
    let col = taboo_green_hitting_column(&g, &tg, 5).unwrap();
    let fs = first_step_solve(&g, 5, &h).unwrap();
    for x in 0..g.len() {
        assert!((col[x] - fs.values[x]).abs() < 1e-10);
    }
}

#[test]
fn recurrent_base_case_is_one() {
    let g = build_complete_graph(5, 0.7).unwrap();
    for x in 0..5 {
        for y in 0..5 {
            assert_eq!(hitting_prob_base(&g, x, y).unwrap().value, 1.0);
            let fs = hitting_prob_first_step(&g, &HittingQuery::new(x, y, TabooSet::empty()))
                .unwrap()
                .value;
            assert!((fs - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn value_iteration_approaches_one_on_recurrent_chains() {
    let mut rng = rng(14);
    let g = random_conservative(10, &mut rng);
    let vi = value_iteration_hitting(&g, 4, &TabooSet::empty(), 1e-14, 1_000_000).unwrap();
    assert!(vi.converged);
    for v in &vi.values {
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}

#[test]
fn transient_singleton_formulas_match_green_ratio() {
    let mut rng = rng(15);
    for _ in 0..30 {
        let n = rng.gen_range(4..=20);
        let g = random_leaky(n, &mut rng);
        let y = rng.gen_range(0..n);
        let z = (y + rng.gen_range(1..n)) % n;
        for x in [y, z, (z + 1) % n] {
            let t3 = singleton_taboo_transient(&g, x, y, z).unwrap().value;
            let t1 =
                hitting_prob_taboo_green(&g, &HittingQuery::new(x, y, TabooSet::from_indices([z])))
                    .unwrap()
                    .value;
            assert!((t3 - t1).abs() < 1e-10, "x={x} y={y} z={z}: {t3} vs {t1}");
            assert!((0.0..=1.0).contains(&t3));
        }
    }
}

#[test]
fn transient_formulas_refuse_conservative_chains() {
    let g = complete_3();
    assert!(matches!(
        singleton_taboo_transient(&g, 0, 1, 2),
        Err(Error::NotTransient)
    ));
}

#[test]
fn target_in_taboo_is_dropped() {
    let g = complete_3();
    let with = HittingQuery::new(0, 1, TabooSet::from_indices([1, 2]));
    let without = HittingQuery::new(0, 1, TabooSet::from_indices([2]));
    let a = hitting_probability(&g, &with, Method::TabooGreen)
        .unwrap()
        .value;
    let b = hitting_probability(&g, &without, Method::TabooGreen)
        .unwrap()
        .value;
    assert_eq!(a, b);
}

#[test]
fn taboo_covering_the_space_is_rejected() {
    let g = complete_3();
    assert!(matches!(
        taboo::restrict(&g, &TabooSet::from_indices([0, 1, 2])),
        Err(Error::TabooCoversSpace)
    ));
    // only the target survives: one jump decides everything
    let q = HittingQuery::new(0, 1, TabooSet::from_indices([0, 2]));
    let v = hitting_prob_taboo_green(&g, &q).unwrap().value;
    assert!((v - 0.5).abs() < 1e-15);
}
