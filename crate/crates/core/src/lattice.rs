//! Test chains: random walks on windows of `Z^d` with an absorbing exterior,
//! birth–death chains and complete graphs.

use std::collections::HashMap;

use crate::chain::{Generator, StateSpace};
use crate::error::{Error, Result};

/// A walk on `{u ∈ Z^d : |u|_∞ ≤ radius}`; jumps leaving the window are lost.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub dim: usize,
    pub radius: u32,
    /// Total jump rate per site.
    pub rate: f64,
    pub jump_law: Vec<(Vec<i64>, f64)>,
}

impl LatticeSpec {
    /// Nearest-neighbour symmetric walk.
    pub fn simple(dim: usize, radius: u32, rate: f64) -> Self {
        let mut jump_law = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1, -1] {
                let mut off = vec![0; dim];
                off[axis] = sign;
                jump_law.push((off, 1.0 / (2 * dim) as f64));
            }
        }
        LatticeSpec {
            dim,
            radius,
            rate,
            jump_law,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension {} not in 1..=4",
                self.dim
            )));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rate must be positive, got {}",
                self.rate
            )));
        }
        if self.jump_law.is_empty() {
            return Err(Error::InvalidArgument("empty jump law".into()));
        }
        let mut total = 0.0;
        for (off, p) in &self.jump_law {
            if off.len() != self.dim || off.iter().all(|&c| c == 0) {
                return Err(Error::InvalidArgument(format!("bad jump offset {off:?}")));
            }
            if !(*p > 0.0) {
                return Err(Error::InvalidArgument(format!("bad jump probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("jump law sums to {total}")));
        }
        // radius 0 is the single-site window; otherwise some jump must fit
        let width = 2 * i64::from(self.radius);
        if self.radius > 0
            && self
                .jump_law
                .iter()
                .all(|(off, _)| off.iter().any(|c| c.abs() > width))
        {
            return Err(Error::InvalidArgument(format!(
                "window of radius {} too small for the jump law",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Canonical site label: coordinates joined by `_`.
pub fn site_label(coords: &[i64]) -> String {
    coords
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("_")
}

fn window_sites(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = 2 * radius + 1;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            // first coordinate varies slowest
            let mut c = vec![0; dim];
            for slot in c.iter_mut().rev() {
                *slot = k % side - radius;
                k /= side;
            }
            c
        })
        .collect()
}

pub fn build_lattice_walk(spec: &LatticeSpec) -> Result<Generator> {
    spec.validate()?;
    let r = i64::from(spec.radius);
    let sites = window_sites(spec.dim, r);
    let index: HashMap<&[i64], usize> = sites
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let states = StateSpace::new(sites.iter().map(|s| site_label(s)))?;

    let mut rates = Vec::new();
    let mut any_boundary = false;
    for (i, s) in sites.iter().enumerate() {
        for (off, p) in &spec.jump_law {
            let t: Vec<i64> = s.iter().zip(off).map(|(a, b)| a + b).collect();
            match index.get(t.as_slice()) {
                Some(&j) => rates.push((i, j, spec.rate * p)),
                None => any_boundary = true,
            }
        }
    }
    let diag = vec![-spec.rate; sites.len()];
    Generator::new(states, rates, Some(diag), !any_boundary)
}

/// States `0..=n`; `up[i]` is the rate `i → i+1` and `down[i]` the rate
/// `i+1 → i`, for `i < n`. Both ends reflect.
pub fn build_birth_death(n: usize, up: &[f64], down: &[f64]) -> Result<Generator> {
    if n == 0 || up.len() != n || down.len() != n {
        return Err(Error::InvalidArgument(format!(
            "birth-death chain with {n} edges needs {n} up and {n} down rates"
        )));
    }
    if let Some(v) = up
        .iter()
        .chain(down)
        .find(|v| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidArgument(format!("nonpositive rate {v}")));
    }
    let states = StateSpace::new((0..=n).map(|i| i.to_string()))?;
    let rates = (0..n)
        .flat_map(|i| [(i, i + 1, up[i]), (i + 1, i, down[i])])
        .collect::<Vec<_>>();
    Generator::new(states, rates, None, true)
}

/// Every ordered pair of distinct states connected at `rate`.
pub fn build_complete_graph(n: usize, rate: f64) -> Result<Generator> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "complete graph needs two states".into(),
        ));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("nonpositive rate {rate}")));
    }
    let states = StateSpace::new((0..n).map(|i| i.to_string()))?;
    let rates = (0..n)
        .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y, rate)))
        .collect::<Vec<_>>();
    Generator::new(states, rates, None, true)
}
