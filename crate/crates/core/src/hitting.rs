//! `_H F_xy(∞)`: the probability that `y` is reached from `x` without visiting
//! the taboo set `H` after the first exit from `x`.
//!
//! Four exact routes are provided:
//!
//! * [`hitting_prob_taboo_green`]: ratio of taboo Green entries, nonempty `H`;
//! * [`hitting_prob_first_step`]: the first-jump linear system, any `H`;
//! * [`hitting_prob_base`]: empty taboo, via recurrence or the Green function;
//! * [`singleton_taboo_transient`]: `H = {z}` on transient chains, via `G`.

use std::fmt;
use std::str::FromStr;

use crate::chain::{embedded_chain, Generator, HittingQuery, TabooSet};
use crate::error::{Error, Result};
use crate::green::{is_recurrent, transient_green, TabooGreen};
use crate::linalg::{trapped_states, Solver, SparseRows, DENSE_LIMIT};
use crate::reduction::ReductionStep;

/// Slack allowed on `[0,1]` before a value counts as out of range.
pub const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Ratio of taboo Green function entries.
    TabooGreen,
    FirstStep,
    /// Green-function formulas for a singleton taboo on transient chains.
    TransientGreen,
    /// Empty taboo: recurrence check or Green-function ratio.
    Base,
    /// Taboo set grown one state at a time from a singleton.
    Reduction,
    ValueIteration,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::TabooGreen,
        Method::FirstStep,
        Method::TransientGreen,
        Method::Base,
        Method::Reduction,
        Method::ValueIteration,
        Method::MonteCarlo,
    ];

    /// Name used on the command line and in printed results.
    pub fn name(self) -> &'static str {
        match self {
            Method::TabooGreen => "theorem1",
            Method::FirstStep => "firststep",
            Method::TransientGreen => "theorem3",
            Method::Base => "base",
            Method::Reduction => "reduce",
            Method::ValueIteration => "vi",
            Method::MonteCarlo => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HittingResult {
    pub query: HittingQuery,
    pub value: f64,
    pub method: Method,
    pub trace: Option<Vec<ReductionStep>>,
}

/// Range check with slack, then clamp. `strict` demands `v < 1`.
pub fn checked_probability(v: f64, strict: bool) -> Result<f64> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) || (strict && v >= 1.0) {
        return Err(Error::OutOfRange { value: v });
    }
    Ok(v.clamp(0.0, 1.0))
}

fn prepare(gen: &Generator, q: &HittingQuery) -> Result<HittingQuery> {
    q.check_bounds(gen.len())?;
    Ok(q.normalized())
}

/// `_H F_xy(∞)` for every start `x`, from one column of the taboo Green
/// matrix. Requires `H` nonempty and `y ∉ H`.
pub fn taboo_green_hitting_column(
    gen: &Generator,
    green: &TabooGreen,
    y: usize,
) -> Result<Vec<f64>> {
    if green.taboo().is_empty() {
        return Err(Error::EmptyTaboo);
    }
    let col = green.column(y)?;
    let pyy = col.values[y];
    (0..gen.len())
        .map(|x| {
            if x == y {
                checked_probability(1.0 + 1.0 / (gen.diag(x) * pyy), true)
            } else {
                checked_probability(col.values[x] / pyy, false)
            }
        })
        .collect()
}

/// Ratio of taboo Green entries: `P_xy / P_yy` for `x ≠ y` and
/// `1 + 1 / (a(x,x) P_xx)` for `x = y`.
pub fn hitting_prob_taboo_green(gen: &Generator, q: &HittingQuery) -> Result<HittingResult> {
    let q = prepare(gen, q)?;
    if q.taboo.is_empty() {
        return Err(Error::EmptyTaboo);
    }
    let green = TabooGreen::new(gen, &q.taboo)?;
    let col = green.column(q.to)?;
    let (x, y) = (q.from, q.to);
    let value = if x == y {
        checked_probability(1.0 + 1.0 / (gen.diag(x) * col.values[x]), true)?
    } else {
        checked_probability(col.values[x] / col.values[y], false)?
    };
    Ok(HittingResult {
        query: q,
        value,
        method: Method::TabooGreen,
        trace: None,
    })
}

/// Solution of the first-step system for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStepSolution {
    pub target: usize,
    pub taboo: TabooSet,
    /// `_H F_xy(∞)` for every `x`.
    pub values: Vec<f64>,
    /// Max residual of the first-step equations over all `x`.
    pub residual: f64,
    /// States that cannot reach the target, pinned to zero as the minimal
    /// nonnegative solution. Empty when the system is nonsingular.
    pub pinned: Vec<usize>,
}

/// Solves, for all `x` simultaneously,
/// `h(x) = (1 - δ_xy) p(x,y) + Σ_{z ∉ H, z ≠ x, y} p(x,z) h(z)`.
///
/// Unknowns are the states outside `H ∪ {y}`; the rows for `x = y` and
/// `x ∈ H` are explicit in terms of those. Closed classes that cannot reach
/// `y` make the system singular; they are pinned to zero, which selects the
/// minimal nonnegative solution.
pub fn first_step_solve(gen: &Generator, y: usize, taboo: &TabooSet) -> Result<FirstStepSolution> {
    first_step_solve_with(gen, y, taboo, DENSE_LIMIT)
}

pub fn first_step_solve_with(
    gen: &Generator,
    y: usize,
    taboo: &TabooSet,
    dense_limit: usize,
) -> Result<FirstStepSolution> {
    let n = gen.len();
    if y >= n {
        return Err(Error::UnknownState(format!("#{y}")));
    }
    taboo.check_bounds(n)?;
    let taboo = taboo.without(y);
    let kernel = embedded_chain(gen);
    let blocked = taboo.mask(n);
    let free = |z: usize| !blocked[z] && z != y;

    let unknowns: Vec<usize> = (0..n).filter(|&x| free(x)).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &x) in unknowns.iter().enumerate() {
        slot[x] = k;
    }
    let rows: Vec<Vec<(usize, f64)>> = unknowns
        .iter()
        .map(|&x| {
            let mut row = vec![(slot[x], 1.0)];
            row.extend(
                kernel
                    .row(x)
                    .iter()
                    .filter(|&&(z, _)| free(z))
                    .map(|&(z, p)| (slot[z], -p)),
            );
            row
        })
        .collect();
    let leaking: Vec<bool> = unknowns
        .iter()
        .map(|&x| kernel.defect(x) > 0.0 || kernel.row(x).iter().any(|&(z, _)| !free(z)))
        .collect();
    let matrix = SparseRows::new(rows);
    let pinned_slots = trapped_states(&matrix, &leaking);
    let pinned: Vec<usize> = pinned_slots.iter().map(|&k| unknowns[k]).collect();

    let mut values = vec![0.0; n];
    if !unknowns.is_empty() {
        // drop pinned unknowns; they stay at zero
        let mut is_pinned = vec![false; unknowns.len()];
        for &k in &pinned_slots {
            is_pinned[k] = true;
        }
        let active: Vec<usize> = (0..unknowns.len()).filter(|&k| !is_pinned[k]).collect();
        let mut remap = vec![usize::MAX; unknowns.len()];
        for (i, &k) in active.iter().enumerate() {
            remap[k] = i;
        }
        let reduced = SparseRows::new(
            active
                .iter()
                .map(|&k| {
                    matrix
                        .row(k)
                        .iter()
                        .filter(|&&(j, _)| !is_pinned[j])
                        .map(|&(j, v)| (remap[j], v))
                        .collect()
                })
                .collect(),
        );
        let rhs: Vec<f64> = active
            .iter()
            .map(|&k| kernel.prob(unknowns[k], y))
            .collect();
        if !active.is_empty() {
            let sol = Solver::new(reduced, dense_limit)?.solve(&rhs)?;
            for (i, &k) in active.iter().enumerate() {
                values[unknowns[k]] = sol.x[i];
            }
        }
    }

    // explicit rows: x = y and x ∈ H
    let explicit = |x: usize, values: &[f64]| -> f64 {
        kernel
            .row(x)
            .iter()
            .map(|&(z, p)| {
                if z == y {
                    if x == y {
                        0.0
                    } else {
                        p
                    }
                } else if free(z) {
                    p * values[z]
                } else {
                    0.0
                }
            })
            .sum()
    };
    for x in 0..n {
        if !free(x) {
            values[x] = explicit(x, &values);
        }
    }

    let residual = (0..n)
        .map(|x| (values[x] - explicit(x, &values)).abs())
        .fold(0.0, f64::max);
    if residual > crate::linalg::RESIDUAL_TOL {
        return Err(Error::Residual {
            residual,
            tolerance: crate::linalg::RESIDUAL_TOL,
        });
    }

    let strict_return = !taboo.is_empty() && pinned.is_empty();
    for (x, v) in values.iter_mut().enumerate() {
        *v = checked_probability(*v, strict_return && x == y)?;
    }

    Ok(FirstStepSolution {
        target: y,
        taboo,
        values,
        residual,
        pinned,
    })
}

pub fn hitting_prob_first_step(gen: &Generator, q: &HittingQuery) -> Result<HittingResult> {
    let q = prepare(gen, q)?;
    let sol = first_step_solve(gen, q.to, &q.taboo)?;
    Ok(HittingResult {
        value: sol.values[q.from],
        query: q,
        method: Method::FirstStep,
        trace: None,
    })
}

/// Empty taboo: `1` on recurrent chains; on transient ones
/// `G(x,y) / G(y,y)` for `x ≠ y` and `1 + 1 / (a(x,x) G(x,x))` for `x = y`.
pub fn hitting_prob_base(gen: &Generator, x: usize, y: usize) -> Result<HittingResult> {
    let query = HittingQuery::new(x, y, TabooSet::empty());
    query.check_bounds(gen.len())?;
    let value = if gen.is_conservative() {
        if !is_recurrent(gen)? {
            return Err(Error::NotTransient);
        }
        1.0
    } else {
        let col = transient_green(gen)?.column(y)?;
        let gyy = col.values[y];
        if x == y {
            checked_probability(1.0 + 1.0 / (gen.diag(y) * gyy), true)?
        } else {
            checked_probability(col.values[x] / gyy, false)?
        }
    };
    Ok(HittingResult {
        query,
        value,
        method: Method::Base,
        trace: None,
    })
}

/// `_z F_xy(∞)` on a transient chain from the ordinary Green function.
///
/// With `D = G(y,y) G(z,z) - G(y,z) G(z,y)`:
///
/// * `x ∉ {y, z}`: `(G(x,y) G(z,z) - G(x,z) G(z,y)) / D`
/// * `x = y`: `1 + G(z,z) / (a(y,y) D)`
/// * `x = z`: `-G(z,y) / (a(z,z) D)`
pub fn singleton_taboo_transient(
    gen: &Generator,
    x: usize,
    y: usize,
    z: usize,
) -> Result<HittingResult> {
    let query = HittingQuery::new(x, y, TabooSet::from_indices([z]));
    query.check_bounds(gen.len())?;
    if z == y {
        return Err(Error::InvalidArgument(
            "taboo state must differ from the target".into(),
        ));
    }
    let green = transient_green(gen)?;
    let gy = green.column(y)?.values;
    let gz = green.column(z)?.values;
    let det = gy[y] * gz[z] - gz[y] * gy[z];
    if !(det > 0.0) {
        return Err(Error::Denominator {
            relation: "transient singleton-taboo",
            value: det,
        });
    }
    let value = if x == y {
        1.0 + gz[z] / (gen.diag(y) * det)
    } else if x == z {
        -gy[z] / (gen.diag(z) * det)
    } else {
        (gy[x] * gz[z] - gz[x] * gy[z]) / det
    };
    Ok(HittingResult {
        query,
        value: checked_probability(value, x == y)?,
        method: Method::TransientGreen,
        trace: None,
    })
}

/// Method used when none is requested.
pub fn default_method(q: &HittingQuery) -> Method {
    if q.normalized().taboo.is_empty() {
        Method::Base
    } else {
        Method::TabooGreen
    }
}

/// Whether `method` can answer `q` on `gen` exactly (Monte Carlo excluded).
pub fn applicable(gen: &Generator, q: &HittingQuery, method: Method) -> bool {
    let q = q.normalized();
    match method {
        Method::TabooGreen => !q.taboo.is_empty(),
        Method::FirstStep | Method::ValueIteration => true,
        Method::TransientGreen => {
            !gen.is_conservative() && q.taboo.len() == 1 && q.taboo.members()[0] != q.to
        }
        Method::Base => q.taboo.is_empty(),
        Method::Reduction => q.taboo.len() >= 2,
        Method::MonteCarlo => false,
    }
}

/// Dispatches any exact method.
pub fn hitting_probability(
    gen: &Generator,
    q: &HittingQuery,
    method: Method,
) -> Result<HittingResult> {
    let nq = prepare(gen, q)?;
    match method {
        Method::TabooGreen => hitting_prob_taboo_green(gen, &nq),
        Method::FirstStep => hitting_prob_first_step(gen, &nq),
        Method::Base => {
            if !nq.taboo.is_empty() {
                return Err(Error::InvalidArgument(
                    "base method needs an empty taboo".into(),
                ));
            }
            hitting_prob_base(gen, nq.from, nq.to)
        }
        Method::TransientGreen => match nq.taboo.members() {
            [z] => singleton_taboo_transient(gen, nq.from, nq.to, *z),
            _ => Err(Error::InvalidArgument(
                "transient Green formulas need a single taboo state".into(),
            )),
        },
        Method::Reduction => crate::reduction::reduce_to_singleton(gen, &nq),
        Method::ValueIteration => {
            let vi = crate::mc::value_iteration_hitting(
                gen,
                nq.to,
                &nq.taboo,
                crate::mc::VI_TOL,
                crate::mc::VI_MAX_ITER,
            )?;
            if !vi.converged {
                return Err(Error::InvalidArgument(format!(
                    "value iteration did not converge in {} sweeps",
                    vi.iterations
                )));
            }
            Ok(HittingResult {
                value: checked_probability(vi.values[nq.from], false)?,
                query: nq,
                method: Method::ValueIteration,
                trace: None,
            })
        }
        Method::MonteCarlo => Err(Error::InvalidArgument(
            "Monte Carlo estimates are produced by the estimator, not this dispatcher".into(),
        )),
    }
}
