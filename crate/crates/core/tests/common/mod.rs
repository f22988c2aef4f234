//! Shared chain corpora and independent oracles for integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taboo::{Generator, StateSpace, TabooSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labels(n: usize) -> StateSpace {
    StateSpace::new((0..n).map(|i| format!("s{i}"))).unwrap()
}

/// Sparse random edges on top of a random Hamiltonian cycle, rates in
/// [0.1, 10]. Irreducible by construction.
fn random_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = std::collections::BTreeMap::new();
    for k in 0..n {
        edges.insert((perm[k], perm[(k + 1) % n]), rng.gen_range(0.1..=10.0));
    }
    let density = (3.0 / n as f64).min(1.0);
    for x in 0..n {
        for y in 0..n {
            if x != y && rng.gen_bool(density) {
                edges.entry((x, y)).or_insert(rng.gen_range(0.1..=10.0));
            }
        }
    }
    edges.into_iter().map(|((x, y), v)| (x, y, v)).collect()
}

/// Conservative irreducible chain on `n` states.
pub fn random_conservative(n: usize, rng: &mut ChaCha8Rng) -> Generator {
    Generator::new(labels(n), random_edges(n, rng), None, true).unwrap()
}

/// Irreducible chain where every row leaks at a rate in [0.1, 1].
pub fn random_leaky(n: usize, rng: &mut ChaCha8Rng) -> Generator {
    let edges = random_edges(n, rng);
    let mut diag = vec![0.0; n];
    for &(x, _, v) in &edges {
        diag[x] -= v;
    }
    for d in diag.iter_mut() {
        *d -= rng.gen_range(0.1..=1.0);
    }
    Generator::new(labels(n), edges, Some(diag), false).unwrap()
}

/// Random nonempty taboo of `k` states avoiding `exclude`.
pub fn random_taboo(n: usize, k: usize, exclude: &[usize], rng: &mut ChaCha8Rng) -> TabooSet {
    let mut pool: Vec<usize> = (0..n).filter(|s| !exclude.contains(s)).collect();
    pool.shuffle(rng);
    TabooSet::from_indices(pool.into_iter().take(k))
}

/// `_H F_xy(∞)` by Gauss–Jordan elimination on the embedded chain with `y`,
/// `H` and the exterior made absorbing. Written independently of the crate's
/// solvers.
pub fn oracle_hitting(gen: &Generator, x: usize, y: usize, taboo: &TabooSet) -> f64 {
    let n = gen.len();
    let p = |a: usize, b: usize| gen.rate(a, b) / gen.exit_rate(a);
    let free: Vec<usize> = (0..n).filter(|&s| s != y && !taboo.contains(s)).collect();
    let m = free.len();
    // (I - Q) h = r
    let mut a = vec![vec![0.0; m + 1]; m];
    for (i, &s) in free.iter().enumerate() {
        a[i][i] = 1.0;
        for (j, &t) in free.iter().enumerate() {
            if t != s {
                a[i][j] -= p(s, t);
            }
        }
        a[i][m] = p(s, y);
    }
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
            .unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for v in a[c].iter_mut() {
            *v /= d;
        }
        for r in 0..m {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in c..=m {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    let mut h = vec![0.0; n];
    for (i, &s) in free.iter().enumerate() {
        h[s] = a[i][m];
    }
    // start state: one jump, then the absorbed values
    let mut v = 0.0;
    for s in 0..n {
        if s == x {
            continue;
        }
        let ps = p(x, s);
        if ps == 0.0 {
            continue;
        }
        if s == y {
            v += ps;
        } else if !taboo.contains(s) {
            v += ps * h[s];
        }
    }
    v
}

/// Gambler's ruin on {0..n}: reach `n` before `0` from `x` with up/down
/// ratio `r = up / down`.
pub fn ruin(x: usize, n: usize, r: f64) -> f64 {
    if (r - 1.0).abs() < 1e-15 {
        x as f64 / n as f64
    } else {
        let s = 1.0 / r;
        (1.0 - s.powi(x as i32)) / (1.0 - s.powi(n as i32))
    }
}

pub fn complete_3() -> Generator {
    taboo::build_complete_graph(3, 0.5).unwrap()
}
