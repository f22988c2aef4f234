//! Growing a taboo set one state at a time.
//!
//! Adding `z` to a nonempty taboo `H` (with `y, z ∉ H`, `z ≠ y`):
//!
//! ```text
//! _{z,H}F_xy = (_H F_xy - _H F_xz · _H F_zy) / (1 - _H F_yz · _H F_zy)
//! ```
//!
//! Removing the start state `x ∉ H` from the taboo (`x ≠ y`):
//!
//! ```text
//! _H F_xy = _{x,H}F_xy / (1 - _{y,H}F_xx)
//! ```
//!
//! [`reduce_to_singleton`] evaluates a query with `|H| = k ≥ 2` from
//! singleton-taboo values alone, recording every step.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::chain::{fmt_prob, Generator, HittingQuery, TabooSet};
use crate::error::{Error, Result};
use crate::green::TabooGreen;
use crate::hitting::{checked_probability, taboo_green_hitting_column, HittingResult, Method};

/// Denominators at or below this are treated as a broken guarantee.
pub const DENOMINATOR_MIN: f64 = 1e-14;

/// Known values `_H F_xy(∞)` keyed by query. Taboo order is ignored.
#[derive(Debug, Clone, Default)]
pub struct HittingValues {
    map: HashMap<(usize, usize, Vec<usize>), f64>,
}

fn key(x: usize, y: usize, taboo: &TabooSet) -> (usize, usize, Vec<usize>) {
    let mut members = taboo.without(y).members().to_vec();
    members.sort_unstable();
    (x, y, members)
}

impl HittingValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: usize, y: usize, taboo: &TabooSet, value: f64) {
        self.map.insert(key(x, y, taboo), value);
    }

    pub fn get(&self, x: usize, y: usize, taboo: &TabooSet) -> Result<f64> {
        self.map.get(&key(x, y, taboo)).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "missing value for start #{x}, target #{y}, taboo {:?}",
                taboo.members()
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Value of `_{z,H}F_xy(∞)` from four values under `H`.
pub fn add_taboo(
    x: usize,
    y: usize,
    z: usize,
    taboo: &TabooSet,
    vals: &HittingValues,
) -> Result<f64> {
    if taboo.is_empty() {
        return Err(Error::EmptyTaboo);
    }
    if z == y || x == z || taboo.contains(y) || taboo.contains(z) {
        return Err(Error::InvalidArgument(
            "taboo expansion needs y, z outside H, z != y and x != z".into(),
        ));
    }
    let f_xy = vals.get(x, y, taboo)?;
    let f_xz = vals.get(x, z, taboo)?;
    let f_zy = vals.get(z, y, taboo)?;
    let f_yz = vals.get(y, z, taboo)?;
    let denom = 1.0 - f_yz * f_zy;
    if !(denom > DENOMINATOR_MIN) {
        return Err(Error::Denominator {
            relation: "taboo-expansion",
            value: denom,
        });
    }
    checked_probability((f_xy - f_xz * f_zy) / denom, x == y)
}

/// Value of `_H F_xy(∞)` from `_{x,H}F_xy(∞)` and `_{y,H}F_xx(∞)`.
pub fn remove_start_taboo(
    x: usize,
    y: usize,
    taboo: &TabooSet,
    vals: &HittingValues,
) -> Result<f64> {
    if x == y || taboo.contains(x) {
        return Err(Error::InvalidArgument(
            "start-taboo removal needs x outside H and x != y".into(),
        ));
    }
    let with_start = vals.get(x, y, &taboo.with(x))?;
    let f_return = vals.get(x, x, &taboo.with(y))?;
    let denom = 1.0 - f_return;
    if !(denom > DENOMINATOR_MIN) {
        return Err(Error::Denominator {
            relation: "start-taboo",
            value: denom,
        });
    }
    checked_probability(with_start / denom, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionAction {
    /// Taboo expansion by `z`.
    AddTaboo(usize),
    /// `_H F_xy → _{x,H}F_xy` by inverting the start-taboo relation; used when
    /// the start state itself is the state being added.
    AddStartTaboo(usize),
    RemoveStartTaboo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep {
    pub action: ReductionAction,
    pub inputs: Vec<(HittingQuery, f64)>,
    pub output: (HittingQuery, f64),
}

impl ReductionStep {
    /// `step <i>: add z=<label> value=<v>`.
    pub fn render(&self, index: usize, gen: &Generator) -> String {
        match self.action {
            ReductionAction::AddTaboo(z) => format!(
                "step {index}: add z={} value={}",
                gen.label(z),
                fmt_prob(self.output.1)
            ),
            ReductionAction::AddStartTaboo(z) => format!(
                "step {index}: add-start z={} value={}",
                gen.label(z),
                fmt_prob(self.output.1)
            ),
            ReductionAction::RemoveStartTaboo => format!(
                "step {index}: remove-start x={} value={}",
                gen.label(self.output.0.from),
                fmt_prob(self.output.1)
            ),
        }
    }
}

/// One line per step, numbered from 1.
pub fn render_trace(steps: &[ReductionStep], gen: &Generator) -> String {
    let mut out = String::new();
    for (i, s) in steps.iter().enumerate() {
        let _ = writeln!(out, "{}", s.render(i + 1, gen));
    }
    out
}

/// A reduction that failed midway, with the steps completed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialReduction {
    pub error: Error,
    pub trace: Vec<ReductionStep>,
}

struct Reducer<'a> {
    gen: &'a Generator,
    order: Vec<usize>,
    base: TabooGreen,
    base_columns: HashMap<usize, Vec<f64>>,
    cache: HashMap<(usize, usize, usize), f64>,
    steps: Vec<ReductionStep>,
}

impl<'a> Reducer<'a> {
    fn taboo(&self, level: usize) -> TabooSet {
        TabooSet::from_indices(self.order[..level].iter().copied())
    }

    fn query(&self, level: usize, a: usize, b: usize) -> HittingQuery {
        HittingQuery::new(a, b, self.taboo(level))
    }

    /// `_{H_level} F_ab` where `H_level` holds the first `level` taboo states.
    fn value(&mut self, level: usize, a: usize, b: usize) -> Result<f64> {
        if let Some(&v) = self.cache.get(&(level, a, b)) {
            return Ok(v);
        }
        let v = if level == 1 {
            if !self.base_columns.contains_key(&b) {
                let col = taboo_green_hitting_column(self.gen, &self.base, b)?;
                self.base_columns.insert(b, col);
            }
            self.base_columns[&b][a]
        } else {
            let z = self.order[level - 1];
            let prev = self.taboo(level - 1);
            if a != z {
                let mut vals = HittingValues::new();
                let mut inputs = Vec::with_capacity(4);
                for (s, t) in [(a, b), (a, z), (z, b), (b, z)] {
                    let v = self.value(level - 1, s, t)?;
                    vals.insert(s, t, &prev, v);
                    inputs.push((self.query(level - 1, s, t), v));
                }
                let v = add_taboo(a, b, z, &prev, &vals)?;
                self.steps.push(ReductionStep {
                    action: ReductionAction::AddTaboo(z),
                    inputs,
                    output: (self.query(level, a, b), v),
                });
                v
            } else {
                // Start state is the one being added: first add the target b
                // to get the return probability to z avoiding b, then invert
                // the start-taboo relation.
                let mut vals = HittingValues::new();
                let mut inputs = Vec::with_capacity(3);
                for (s, t) in [(z, z), (z, b), (b, z)] {
                    let v = self.value(level - 1, s, t)?;
                    vals.insert(s, t, &prev, v);
                    inputs.push((self.query(level - 1, s, t), v));
                }
                let with_b = prev.with(b);
                let f_return = add_taboo(z, z, b, &prev, &vals)?;
                self.steps.push(ReductionStep {
                    action: ReductionAction::AddTaboo(b),
                    inputs,
                    output: (HittingQuery::new(z, z, with_b), f_return),
                });
                let f_zb = vals.get(z, b, &prev)?;
                let v = checked_probability(f_zb * (1.0 - f_return), false)?;
                self.steps.push(ReductionStep {
                    action: ReductionAction::AddStartTaboo(z),
                    inputs: vec![
                        (self.query(level - 1, z, b), f_zb),
                        (HittingQuery::new(z, z, prev.with(b)), f_return),
                    ],
                    output: (self.query(level, z, b), v),
                });
                v
            }
        };
        self.cache.insert((level, a, b), v);
        Ok(v)
    }
}

/// Evaluates `_H F_xy(∞)` for `|H| ≥ 2` by growing the taboo from `{h1}` in
/// the declared order of `H`. Singleton values come from the taboo Green
/// ratio.
pub fn reduce_to_singleton(gen: &Generator, q: &HittingQuery) -> Result<HittingResult> {
    reduce_with_trace(gen, q).map_err(|p| p.error)
}

/// Like [`reduce_to_singleton`], keeping the partial trace on failure.
pub fn reduce_with_trace(
    gen: &Generator,
    q: &HittingQuery,
) -> std::result::Result<HittingResult, PartialReduction> {
    let fail = |error: Error| PartialReduction {
        error,
        trace: Vec::new(),
    };
    q.check_bounds(gen.len()).map_err(fail)?;
    let q = q.normalized();
    let k = q.taboo.len();
    if k < 2 {
        return Err(fail(Error::InvalidArgument(
            "reduction needs at least two taboo states".into(),
        )));
    }
    let order = q.taboo.members().to_vec();
    let base = TabooGreen::new(gen, &TabooSet::from_indices([order[0]])).map_err(fail)?;
    let mut reducer = Reducer {
        gen,
        order,
        base,
        base_columns: HashMap::new(),
        cache: HashMap::new(),
        steps: Vec::new(),
    };
    match reducer.value(k, q.from, q.to) {
        Ok(value) => Ok(HittingResult {
            query: q,
            value,
            method: Method::Reduction,
            trace: Some(reducer.steps),
        }),
        Err(error) => Err(PartialReduction {
            error,
            trace: reducer.steps,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitting::{hitting_prob_first_step, hitting_prob_taboo_green};

    fn complete(n: usize, rate: f64) -> Generator {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut b = Generator::builder(labels.clone());
        for x in &labels {
            for y in &labels {
                if x != y {
                    b = b.rate(x.as_str(), y.as_str(), rate);
                }
            }
        }
        b.build().unwrap()
    }

    fn direct(gen: &Generator, x: usize, y: usize, h: &TabooSet) -> f64 {
        hitting_prob_taboo_green(gen, &HittingQuery::new(x, y, h.clone()))
            .unwrap()
            .value
    }

    #[test]
    fn unreachable_taboo_is_noop() {
        let mut vals = HittingValues::new();
        let h = TabooSet::from_indices([9]);
        vals.insert(0, 1, &h, 0.3);
        vals.insert(0, 2, &h, 0.0);
        vals.insert(2, 1, &h, 0.7);
        vals.insert(1, 2, &h, 0.0);
        assert_eq!(add_taboo(0, 1, 2, &h, &vals).unwrap(), 0.3);
    }

    #[test]
    fn add_taboo_contract() {
        let vals = HittingValues::new();
        let h = TabooSet::from_indices([3]);
        assert!(matches!(
            add_taboo(2, 1, 2, &h, &vals),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            add_taboo(0, 1, 1, &h, &vals),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            add_taboo(0, 1, 2, &h, &vals),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(
            add_taboo(0, 1, 2, &TabooSet::empty(), &vals),
            Err(Error::EmptyTaboo)
        );

        let mut vals = HittingValues::new();
        for (s, t) in [(0, 1), (0, 2), (2, 1), (1, 2)] {
            vals.insert(s, t, &h, 1.0);
        }
        assert!(matches!(
            add_taboo(0, 1, 2, &h, &vals),
            Err(Error::Denominator { .. })
        ));
    }

    #[test]
    fn remove_start_single_attempt() {
        let h = TabooSet::from_indices([5]);
        let mut vals = HittingValues::new();
        vals.insert(0, 1, &h.with(0), 0.4);
        vals.insert(0, 0, &h.with(1), 0.0);
        assert_eq!(remove_start_taboo(0, 1, &h, &vals).unwrap(), 0.4);
    }

    #[test]
    fn complete_graph_expansion_matches_direct() {
        let g = complete(3, 0.5);
        // grow {2} from... the only nonempty base on three states with y=1
        // is a singleton, so check expansion on the complete 4-graph too
        let h = TabooSet::from_indices([2]);
        assert!((direct(&g, 0, 1, &h) - 0.5).abs() < 1e-15);

        let g4 = complete(4, 1.0 / 3.0);
        let h = TabooSet::from_indices([3]);
        let mut vals = HittingValues::new();
        for (s, t) in [(0, 1), (0, 2), (2, 1), (1, 2)] {
            vals.insert(s, t, &h, direct(&g4, s, t, &h));
        }
        let grown = add_taboo(0, 1, 2, &h, &vals).unwrap();
        let expected = direct(&g4, 0, 1, &h.with(2));
        assert!((grown - expected).abs() < 1e-14);
        // from 0, first jump to 1 w.p. 1/3, else taboo
        assert!((grown - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn reduction_on_complete_4_graph() {
        let g = complete(4, 1.0 / 3.0);
        for (x, y, h) in [
            (0, 1, vec![2, 3]),
            (2, 1, vec![2, 3]),
            (1, 1, vec![3, 2]),
            (3, 0, vec![3, 1]),
        ] {
            let q = HittingQuery::new(x, y, TabooSet::from_indices(h));
            let r = reduce_to_singleton(&g, &q).unwrap();
            let fs = hitting_prob_first_step(&g, &q).unwrap();
            assert!((r.value - fs.value).abs() < 1e-10, "{x}->{y}");
            assert!(!r.trace.unwrap().is_empty());
        }
    }

    #[test]
    fn trace_lines() {
        let g = complete(4, 1.0 / 3.0);
        let q = HittingQuery::new(0, 1, TabooSet::from_indices([2, 3]));
        let r = reduce_to_singleton(&g, &q).unwrap();
        let text = render_trace(r.trace.as_ref().unwrap(), &g);
        let last = text.lines().last().unwrap();
        assert_eq!(
            last,
            format!(
                "step {}: add z=3 value={}",
                text.lines().count(),
                fmt_prob(r.value)
            )
        );
    }

    #[test]
    fn singleton_taboo_rejected() {
        let g = complete(3, 0.5);
        let q = HittingQuery::new(0, 1, TabooSet::from_indices([2]));
        assert!(reduce_to_singleton(&g, &q).is_err());
    }
}
