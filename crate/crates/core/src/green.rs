//! Expected occupation times: the taboo Green function `_H P_xy(∞)` and the
//! ordinary Green function `G(x,y)` of a transient representation.

use crate::chain::{embedded_chain, restrict, validate, Generator, JumpKernel, TabooSet};
use crate::error::{Error, Result};
use crate::linalg::{trapped_states, Solver, SparseRows, DENSE_LIMIT};

/// Prepared linear system `(-A|_{S\H}) M = I` for one taboo set.
///
/// Rows `x ∈ H` are filled in by first-step decomposition:
/// `_H P_xy(∞) = Σ_{z∉H} p(x,z) _H P_zy(∞)`.
#[derive(Debug, Clone)]
pub struct TabooGreen {
    taboo: TabooSet,
    n: usize,
    /// Full index to restricted index, `None` for taboo states.
    to_sub: Vec<Option<usize>>,
    kernel: JumpKernel,
    exit_rates: Vec<f64>,
    solver: Solver,
}

/// One column `y` of the taboo Green matrix, indexed by all states.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenColumn {
    pub target: usize,
    pub values: Vec<f64>,
    pub residual: f64,
}

impl TabooGreen {
    pub fn new(gen: &Generator, taboo: &TabooSet) -> Result<Self> {
        Self::with_dense_limit(gen, taboo, DENSE_LIMIT)
    }

    /// Like [`TabooGreen::new`] with an explicit dense/sparse switch-over size.
    pub fn with_dense_limit(gen: &Generator, taboo: &TabooSet, dense_limit: usize) -> Result<Self> {
        taboo.check_bounds(gen.len())?;
        let sub = restrict(gen, taboo)?;
        let n = gen.len();
        let mask = taboo.mask(n);
        let mut to_sub = vec![None; n];
        let mut k = 0;
        for (x, slot) in to_sub.iter_mut().enumerate() {
            if !mask[x] {
                *slot = Some(k);
                k += 1;
            }
        }

        let rows: Vec<Vec<(usize, f64)>> = (0..sub.len())
            .map(|i| {
                let mut row = Vec::with_capacity(sub.row(i).len() + 1);
                row.push((i, sub.exit_rate(i)));
                row.extend(sub.row(i).iter().map(|&(j, v)| (j, -v)));
                row
            })
            .collect();
        let matrix = SparseRows::new(rows);
        let leaking: Vec<bool> = (0..sub.len()).map(|i| sub.defect_rate(i) > 0.0).collect();
        let trapped = trapped_states(&matrix, &leaking);
        if !trapped.is_empty() {
            let labels: Vec<&str> = trapped.iter().map(|&i| sub.label(i)).collect();
            return Err(Error::TabooGreenDiverges(format!(
                "no escape from {{{}}}",
                labels.join(",")
            )));
        }
        let solver = Solver::new(matrix, dense_limit)?;

        Ok(TabooGreen {
            taboo: taboo.clone(),
            n,
            to_sub,
            kernel: embedded_chain(gen),
            exit_rates: (0..n).map(|x| gen.exit_rate(x)).collect(),
            solver,
        })
    }

    pub fn taboo(&self) -> &TabooSet {
        &self.taboo
    }

    pub fn uses_dense_solver(&self) -> bool {
        self.solver.is_dense()
    }

    /// `_H P_xy(∞)` for all `x`, with `y ∉ H`.
    pub fn column(&self, y: usize) -> Result<GreenColumn> {
        let j =
            self.to_sub.get(y).copied().flatten().ok_or_else(|| {
                Error::InvalidArgument(format!("target #{y} lies in the taboo set"))
            })?;
        let sol = self.solver.inverse_column(j)?;
        let scale = sol.x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);

        let mut values = vec![0.0; self.n];
        for x in 0..self.n {
            let v = match self.to_sub[x] {
                Some(i) => sol.x[i],
                None => self
                    .kernel
                    .row(x)
                    .iter()
                    .filter_map(|&(z, p)| self.to_sub[z].map(|k| p * sol.x[k]))
                    .sum(),
            };
            values[x] = nonnegative(v, scale)?;
        }
        let vy = values[y];
        let hold = 1.0 / self.exit_rates[y];
        if !(vy.is_finite() && vy >= hold * (1.0 - 1e-9)) {
            return Err(Error::TabooGreenDiverges(format!(
                "diagonal occupation {vy} below one holding time {hold}"
            )));
        }
        Ok(GreenColumn {
            target: y,
            values,
            residual: sol.residual,
        })
    }

    /// The whole matrix; rows are all states, columns are `S \ H`.
    pub fn matrix(&self) -> Result<TabooGreenMatrix> {
        let cols: Vec<usize> = (0..self.n).filter(|&y| self.to_sub[y].is_some()).collect();
        let mut columns = Vec::with_capacity(cols.len());
        let mut residual = 0.0f64;
        for &y in &cols {
            let c = self.column(y)?;
            residual = residual.max(c.residual);
            columns.push(c.values);
        }
        Ok(TabooGreenMatrix {
            taboo: self.taboo.clone(),
            cols,
            columns,
            residual,
        })
    }
}

fn nonnegative(v: f64, scale: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::TabooGreenDiverges(format!("non-finite entry {v}")));
    }
    if v < -1e-9 * scale {
        return Err(Error::OutOfRange { value: v });
    }
    Ok(v.max(0.0))
}

/// `_H P_xy(∞)` for every state `x` and every `y ∉ H`, in time units.
#[derive(Debug, Clone, PartialEq)]
pub struct TabooGreenMatrix {
    taboo: TabooSet,
    cols: Vec<usize>,
    /// Column-major: `columns[k][x]` is the entry for `(x, cols[k])`.
    columns: Vec<Vec<f64>>,
    residual: f64,
}

impl TabooGreenMatrix {
    pub fn taboo(&self) -> &TabooSet {
        &self.taboo
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// `None` when `y` is a taboo state.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let k = self.cols.iter().position(|&c| c == y)?;
        self.columns[k].get(x).copied()
    }

    /// Largest residual of the underlying solves.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Row-major text with labels.
    pub fn render(&self, gen: &Generator) -> String {
        let mut out = String::from("row");
        for &y in &self.cols {
            out.push(' ');
            out.push_str(gen.label(y));
        }
        out.push('\n');
        for x in 0..self.n_rows() {
            out.push_str(gen.label(x));
            for col in &self.columns {
                out.push(' ');
                out.push_str(&crate::chain::fmt_num(col[x]));
            }
            out.push('\n');
        }
        out
    }
}

/// Taboo Green matrix for a nonempty taboo set.
pub fn taboo_green(gen: &Generator, taboo: &TabooSet) -> Result<TabooGreenMatrix> {
    if taboo.is_empty() {
        return Err(Error::EmptyTaboo);
    }
    TabooGreen::new(gen, taboo)?.matrix()
}

#[derive(Debug, Clone, PartialEq)]
pub enum GreenResult {
    /// `G(x,y)` for a transient representation.
    Finite(TabooGreenMatrix),
    Recurrent,
}

/// Ordinary Green function. Conservative irreducible chains are recurrent;
/// conservative reducible chains are rejected.
pub fn green_function(gen: &Generator) -> Result<GreenResult> {
    if gen.is_conservative() {
        return if validate(gen).irreducible {
            Ok(GreenResult::Recurrent)
        } else {
            Err(Error::Reducible)
        };
    }
    Ok(GreenResult::Finite(
        TabooGreen::new(gen, &TabooSet::empty())?.matrix()?,
    ))
}

/// Solver for individual columns of `G`, for chains too large to hold the
/// full matrix.
pub fn transient_green(gen: &Generator) -> Result<TabooGreen> {
    if gen.is_conservative() {
        return Err(Error::NotTransient);
    }
    TabooGreen::new(gen, &TabooSet::empty())
}

/// A finite irreducible chain is recurrent iff it is conservative.
pub fn is_recurrent(gen: &Generator) -> Result<bool> {
    if !validate(gen).irreducible {
        return Err(Error::Reducible);
    }
    Ok(gen.is_conservative())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Generator {
        let mut b = Generator::builder(["0", "1", "2"]);
        for x in ["0", "1", "2"] {
            for y in ["0", "1", "2"] {
                if x != y {
                    b = b.rate(x, y, 0.5);
                }
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn complete_graph_taboo_green() {
        let g = tri();
        let m = taboo_green(&g, &TabooSet::from_indices([2])).unwrap();
        assert!((m.get(0, 0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((m.get(0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        // taboo row by first-step decomposition
        assert!((m.get(2, 0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(m.get(0, 2), None);
        assert!(m.residual() <= 1e-10);
    }

    #[test]
    fn single_free_state() {
        let g = Generator::builder(["x", "h"])
            .rate("x", "h", 3.0)
            .rate("h", "x", 1.0)
            .build()
            .unwrap();
        let m = taboo_green(&g, &TabooSet::from_indices([1])).unwrap();
        assert!((m.get(0, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_taboo_rejected() {
        assert_eq!(
            taboo_green(&tri(), &TabooSet::empty()),
            Err(Error::EmptyTaboo)
        );
    }

    #[test]
    fn closed_class_inside_complement_diverges() {
        // {a,b} closed, c feeds into it; taboo {c} leaves {a,b} trapped
        let g = Generator::builder(["a", "b", "c"])
            .rate("a", "b", 1.0)
            .rate("b", "a", 1.0)
            .rate("c", "a", 1.0)
            .build()
            .unwrap();
        let err = taboo_green(&g, &TabooSet::from_indices([2])).unwrap_err();
        assert!(matches!(err, Error::TabooGreenDiverges(_)));
    }

    #[test]
    fn green_function_cases() {
        let cycle = Generator::builder(["0", "1", "2"])
            .rate("0", "1", 1.0)
            .rate("1", "2", 1.0)
            .rate("2", "0", 1.0)
            .build()
            .unwrap();
        assert_eq!(green_function(&cycle).unwrap(), GreenResult::Recurrent);
        assert!(is_recurrent(&cycle).unwrap());

        let death = Generator::builder(["x"])
            .diag("x", -1.0)
            .conservative(false)
            .build()
            .unwrap();
        match green_function(&death).unwrap() {
            GreenResult::Finite(m) => assert_eq!(m.get(0, 0), Some(1.0)),
            GreenResult::Recurrent => panic!("pure death chain is transient"),
        }
        assert!(!is_recurrent(&death).unwrap());

        let split = Generator::builder(["a", "b", "c", "d"])
            .rate("a", "b", 1.0)
            .rate("b", "a", 1.0)
            .rate("c", "d", 1.0)
            .rate("d", "c", 1.0)
            .build()
            .unwrap();
        assert_eq!(green_function(&split), Err(Error::Reducible));
        assert_eq!(is_recurrent(&split), Err(Error::Reducible));
        assert!(is_recurrent(&tri()).unwrap());
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let g = tri();
        let h = TabooSet::from_indices([1]);
        let d = TabooGreen::with_dense_limit(&g, &h, 500).unwrap();
        let s = TabooGreen::with_dense_limit(&g, &h, 0).unwrap();
        assert!(d.uses_dense_solver() && !s.uses_dense_solver());
        let (a, b) = (d.matrix().unwrap(), s.matrix().unwrap());
        for x in 0..3 {
            for &y in a.cols() {
                assert!((a.get(x, y).unwrap() - b.get(x, y).unwrap()).abs() < 1e-12);
            }
        }
    }
}
