//! Generators of finite continuous-time Markov chains, their embedded jump
//! chains, taboo sets and the chain file format.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative tolerance for row-sum checks, scaled by `|a(x,x)|`.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Ordered, duplicate-free state labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = StateSpace {
            labels: Vec::new(),
            index: HashMap::new(),
        };
        for label in labels {
            let label = label.into();
            if label.is_empty()
                || label
                    .chars()
                    .any(|c| c.is_whitespace() || c == '#' || c == ',')
            {
                return Err(Error::InvalidArgument(format!("bad state label `{label}`")));
            }
            if out.index.contains_key(&label) {
                return Err(Error::DuplicateState(label));
            }
            out.index.insert(label.clone(), out.labels.len());
            out.labels.push(label);
        }
        if out.labels.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn lookup(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }
}

/// Rate matrix `A = (a(x,y))` of a finite chain.
///
/// Off-diagonal rates are stored sparsely per row, sorted by target index;
/// only strictly positive rates are kept. A generator is either
/// conservative (every row sums to zero) or substochastic, in which case the
/// missing row mass is an escape rate out of the represented state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    states: StateSpace,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    conservative: bool,
}

impl Generator {
    /// Builds and validates a generator from indexed rate triples.
    ///
    /// When `diag` is `None` the diagonal is derived as the negative row sum,
    /// which is only allowed for conservative chains.
    pub fn new(
        states: StateSpace,
        rates: impl IntoIterator<Item = (usize, usize, f64)>,
        diag: Option<Vec<f64>>,
        conservative: bool,
    ) -> Result<Self> {
        let n = states.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (from, to, value) in rates {
            if from >= n || to >= n {
                return Err(Error::UnknownState(format!("#{}", from.max(to))));
            }
            if from == to {
                return Err(Error::InvalidArgument(format!(
                    "off-diagonal rate from `{}` to itself; use a diagonal entry",
                    states.label(from)
                )));
            }
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeRate {
                    from: states.label(from).to_string(),
                    to: states.label(to).to_string(),
                    value,
                });
            }
            if rows[from].iter().any(|&(t, _)| t == to) {
                return Err(Error::DuplicateRate {
                    from: states.label(from).to_string(),
                    to: states.label(to).to_string(),
                });
            }
            rows[from].push((to, value));
        }
        for row in rows.iter_mut() {
            row.retain(|&(_, v)| v > 0.0);
            row.sort_by_key(|&(t, _)| t);
        }

        let diag = match diag {
            Some(d) => {
                if d.len() != n {
                    return Err(Error::InvalidArgument("diagonal length mismatch".into()));
                }
                d
            }
            None if conservative => rows
                .iter()
                .map(|row| -row.iter().map(|&(_, v)| v).sum::<f64>())
                .collect(),
            None => {
                return Err(Error::InvalidArgument(
                    "diagonal entries are required for non-conservative chains".into(),
                ))
            }
        };

        let gen = Generator {
            states,
            rows,
            diag,
            conservative,
        };
        gen.check()?;
        Ok(gen)
    }

    pub fn builder<I, S>(labels: I) -> GeneratorBuilder
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GeneratorBuilder {
            labels: labels.into_iter().map(Into::into).collect(),
            rates: Vec::new(),
            diag: Vec::new(),
            conservative: true,
        }
    }

    fn check(&self) -> Result<()> {
        let mut any_defect = false;
        for x in 0..self.len() {
            let d = self.diag[x];
            if !(d.is_finite() && d < 0.0) {
                return Err(Error::InvalidDiagonal {
                    state: self.states.label(x).to_string(),
                    value: d,
                });
            }
            let sum = d + self.exit_sum(x);
            let tol = ROW_SUM_TOL * d.abs();
            if self.conservative {
                if sum.abs() > tol {
                    return Err(Error::RowSum {
                        state: self.states.label(x).to_string(),
                        sum,
                    });
                }
            } else {
                if sum > tol {
                    return Err(Error::RowSum {
                        state: self.states.label(x).to_string(),
                        sum,
                    });
                }
                any_defect |= sum < -tol;
            }
        }
        if !self.conservative && !any_defect {
            return Err(Error::NoDefect);
        }
        Ok(())
    }

    fn exit_sum(&self, x: usize) -> f64 {
        self.rows[x].iter().map(|&(_, v)| v).sum()
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn label(&self, state: usize) -> &str {
        self.states.label(state)
    }

    pub fn lookup(&self, label: &str) -> Result<usize> {
        self.states.lookup(label)
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    /// Positive off-diagonal rates out of `x`, sorted by target.
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    /// `a(x,y)`, including the diagonal.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.diag[x];
        }
        let row = &self.rows[x];
        match row.binary_search_by_key(&y, |&(t, _)| t) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self, x: usize) -> f64 {
        self.diag[x]
    }

    /// Total exit rate `-a(x,x)`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.diag[x]
    }

    /// Rate at which row `x` leaks out of the represented state space.
    pub fn defect_rate(&self, x: usize) -> f64 {
        let leak = -self.diag[x] - self.exit_sum(x);
        if leak <= ROW_SUM_TOL * self.diag[x].abs() {
            0.0
        } else {
            leak
        }
    }

    /// Serializes to the canonical chain file form.
    pub fn to_chain_file(&self) -> String {
        let mut out = String::new();
        out.push_str("states:");
        for l in self.states.labels() {
            out.push(' ');
            out.push_str(l);
        }
        out.push('\n');
        let _ = writeln!(out, "conservative: {}", self.conservative);
        for x in 0..self.len() {
            for &(y, v) in &self.rows[x] {
                let _ = writeln!(out, "rate: {} {} {:?}", self.label(x), self.label(y), v);
            }
        }
        for x in 0..self.len() {
            let _ = writeln!(out, "diag: {} {:?}", self.label(x), self.diag[x]);
        }
        out
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_chain_file())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_chain(s)
    }
}

/// Label-based construction of a [`Generator`].
#[derive(Debug, Clone)]
pub struct GeneratorBuilder {
    labels: Vec<String>,
    rates: Vec<(String, String, f64)>,
    diag: Vec<(String, f64)>,
    conservative: bool,
}

impl GeneratorBuilder {
    pub fn rate(mut self, from: impl Into<String>, to: impl Into<String>, value: f64) -> Self {
        self.rates.push((from.into(), to.into(), value));
        self
    }

    pub fn diag(mut self, state: impl Into<String>, value: f64) -> Self {
        self.diag.push((state.into(), value));
        self
    }

    pub fn conservative(mut self, conservative: bool) -> Self {
        self.conservative = conservative;
        self
    }

    pub fn build(self) -> Result<Generator> {
        let states = StateSpace::new(self.labels)?;
        let mut rates = Vec::with_capacity(self.rates.len());
        for (from, to, v) in &self.rates {
            rates.push((states.lookup(from)?, states.lookup(to)?, *v));
        }
        let diag = resolve_diag(&states, &self.diag, self.conservative, &rates)?;
        Generator::new(states, rates, diag, self.conservative)
    }
}

/// Merges explicitly given diagonal entries with derived ones. Returns `None`
/// when nothing was given so that [`Generator::new`] derives all of them.
fn resolve_diag(
    states: &StateSpace,
    given: &[(String, f64)],
    conservative: bool,
    rates: &[(usize, usize, f64)],
) -> Result<Option<Vec<f64>>> {
    if given.is_empty() {
        return Ok(None);
    }
    let mut diag: Vec<Option<f64>> = vec![None; states.len()];
    for (label, v) in given {
        let x = states.lookup(label)?;
        if diag[x].is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate diagonal entry for `{label}`"
            )));
        }
        diag[x] = Some(*v);
    }
    let mut out = Vec::with_capacity(states.len());
    for (x, d) in diag.into_iter().enumerate() {
        match d {
            Some(v) => out.push(v),
            None if conservative => out.push(
                -rates
                    .iter()
                    .filter(|&&(f, _, v)| f == x && v > 0.0)
                    .map(|&(_, _, v)| v)
                    .sum::<f64>(),
            ),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "missing diagonal entry for `{}` in non-conservative chain",
                    states.label(x)
                )))
            }
        }
    }
    Ok(Some(out))
}

/// Parses the line-oriented chain file format.
///
/// ```text
/// states: a b
/// conservative: true
/// rate: a b 1.0
/// rate: b a 2.0
/// diag: a -1.0   # optional for conservative chains
/// ```
pub fn parse_chain(text: &str) -> Result<Generator> {
    let mut labels: Option<Vec<String>> = None;
    let mut conservative: Option<bool> = None;
    let mut rates: Vec<(usize, String, String, f64)> = Vec::new();
    let mut diag: Vec<(usize, String, f64)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected `key: value`, got `{line}`")))?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        match key.trim() {
            "states" => {
                if labels.is_some() {
                    return Err(err("repeated `states` line".into()));
                }
                labels = Some(tokens.iter().map(|s| s.to_string()).collect());
            }
            "conservative" => {
                let v = match tokens.as_slice() {
                    ["true"] => true,
                    ["false"] => false,
                    _ => return Err(err("expected `conservative: true|false`".into())),
                };
                if conservative.replace(v).is_some() {
                    return Err(err("repeated `conservative` line".into()));
                }
            }
            "rate" => match tokens.as_slice() {
                [from, to, value] => {
                    let v = parse_float(value).map_err(&err)?;
                    rates.push((line_no, from.to_string(), to.to_string(), v));
                }
                _ => return Err(err("expected `rate: <from> <to> <value>`".into())),
            },
            "diag" => match tokens.as_slice() {
                [state, value] => {
                    let v = parse_float(value).map_err(&err)?;
                    diag.push((line_no, state.to_string(), v));
                }
                _ => return Err(err("expected `diag: <state> <value>`".into())),
            },
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }

    let labels = labels.ok_or(Error::Parse {
        line: 0,
        msg: "missing `states` line".into(),
    })?;
    let conservative = conservative.ok_or(Error::Parse {
        line: 0,
        msg: "missing `conservative` line".into(),
    })?;
    let states = StateSpace::new(labels)?;
    let mut indexed = Vec::with_capacity(rates.len());
    for (_, from, to, v) in &rates {
        indexed.push((states.lookup(from)?, states.lookup(to)?, *v));
    }
    let given: Vec<(String, f64)> = diag.into_iter().map(|(_, s, v)| (s, v)).collect();
    let d = resolve_diag(&states, &given, conservative, &indexed)?;
    Generator::new(states, indexed, d, conservative)
}

fn parse_float(token: &str) -> std::result::Result<f64, String> {
    token
        .parse::<f64>()
        .map_err(|_| format!("invalid number `{token}`"))
}

/// Outcome of [`validate`]. Findings are data, never errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub irreducible: bool,
    pub conservative: bool,
    /// Rows whose rates leak out of the state space.
    pub defective_rows: Vec<usize>,
    pub findings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.irreducible
    }
}

/// Checks irreducibility (strong connectivity of the positive-rate graph)
/// and reports per-row conservativeness.
pub fn validate(gen: &Generator) -> ValidationReport {
    let n = gen.len();
    let mut findings = Vec::new();

    let defective_rows: Vec<usize> = (0..n).filter(|&x| gen.defect_rate(x) > 0.0).collect();
    for &x in &defective_rows {
        findings.push(format!(
            "row `{}` is defective: escape rate {}",
            gen.label(x),
            fmt_num(gen.defect_rate(x))
        ));
    }

    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        for &(y, _) in gen.row(x) {
            reverse[y].push(x);
        }
    }
    let forward = reachable(n, 0, |x| gen.row(x).iter().map(|&(y, _)| y).collect());
    let backward = reachable(n, 0, |x| reverse[x].clone());
    let unreached: Vec<&str> = (0..n)
        .filter(|&x| !forward[x])
        .map(|x| gen.label(x))
        .collect();
    let stuck: Vec<&str> = (0..n)
        .filter(|&x| !backward[x])
        .map(|x| gen.label(x))
        .collect();
    if !unreached.is_empty() {
        findings.push(format!(
            "not reachable from `{}`: {}",
            gen.label(0),
            unreached.join(" ")
        ));
    }
    if !stuck.is_empty() {
        findings.push(format!(
            "cannot reach `{}`: {}",
            gen.label(0),
            stuck.join(" ")
        ));
    }
    let irreducible = unreached.is_empty() && stuck.is_empty();

    ValidationReport {
        irreducible,
        conservative: gen.is_conservative(),
        defective_rows,
        findings,
    }
}

fn reachable(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(x) = queue.pop_front() {
        for y in next(x) {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    seen
}

/// Embedded jump chain `p(x,z) = a(x,z) / (-a(x,x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel {
    probs: Vec<Vec<(usize, f64)>>,
    defect: Vec<f64>,
}

impl JumpKernel {
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.probs[x]
    }

    pub fn prob(&self, x: usize, z: usize) -> f64 {
        let row = &self.probs[x];
        match row.binary_search_by_key(&z, |&(t, _)| t) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    /// Probability that the jump out of `x` leaves the state space.
    pub fn defect(&self, x: usize) -> f64 {
        self.defect[x]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn embedded_chain(gen: &Generator) -> JumpKernel {
    let mut probs = Vec::with_capacity(gen.len());
    let mut defect = Vec::with_capacity(gen.len());
    for x in 0..gen.len() {
        let q = gen.exit_rate(x);
        probs.push(gen.row(x).iter().map(|&(z, v)| (z, v / q)).collect());
        defect.push(gen.defect_rate(x) / q);
    }
    JumpKernel { probs, defect }
}

/// A set of forbidden states, kept in the order it was declared.
#[derive(Debug, Clone, Default, Eq)]
pub struct TabooSet {
    members: Vec<usize>,
}

impl PartialEq for TabooSet {
    fn eq(&self, other: &Self) -> bool {
        let mut a = self.members.clone();
        let mut b = other.members.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl TabooSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Duplicates are dropped; first occurrence wins.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut members = Vec::new();
        for i in indices {
            if !members.contains(&i) {
                members.push(i);
            }
        }
        TabooSet { members }
    }

    pub fn from_labels<S: AsRef<str>>(states: &StateSpace, labels: &[S]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| states.lookup(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_indices(idx))
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.contains(&state)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `{z} ∪ H`, with `z` appended last.
    pub fn with(&self, z: usize) -> Self {
        let mut out = self.clone();
        if !out.contains(z) {
            out.members.push(z);
        }
        out
    }

    pub fn without(&self, z: usize) -> Self {
        TabooSet {
            members: self.members.iter().copied().filter(|&m| m != z).collect(),
        }
    }

    /// Membership mask over `n` states.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &h in &self.members {
            m[h] = true;
        }
        m
    }

    pub fn labels<'a>(&self, states: &'a StateSpace) -> Vec<&'a str> {
        self.members.iter().map(|&m| states.label(m)).collect()
    }

    pub(crate) fn check_bounds(&self, n: usize) -> Result<()> {
        match self.members.iter().find(|&&m| m >= n) {
            Some(m) => Err(Error::UnknownState(format!("#{m}"))),
            None => Ok(()),
        }
    }
}

/// Hitting `to` from `from` while avoiding `taboo` after the first exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingQuery {
    pub from: usize,
    pub to: usize,
    pub taboo: TabooSet,
}

impl HittingQuery {
    pub fn new(from: usize, to: usize, taboo: TabooSet) -> Self {
        HittingQuery { from, to, taboo }
    }

    pub fn from_labels<S: AsRef<str>>(
        states: &StateSpace,
        from: &str,
        to: &str,
        taboo: &[S],
    ) -> Result<Self> {
        Ok(HittingQuery {
            from: states.lookup(from)?,
            to: states.lookup(to)?,
            taboo: TabooSet::from_labels(states, taboo)?,
        })
    }

    /// Drops the target from the taboo set; hitting `y` under `H` and under
    /// `H \ {y}` are the same event.
    pub fn normalized(&self) -> Self {
        HittingQuery {
            from: self.from,
            to: self.to,
            taboo: self.taboo.without(self.to),
        }
    }

    pub fn is_normalized(&self) -> bool {
        !self.taboo.contains(self.to)
    }

    pub(crate) fn check_bounds(&self, n: usize) -> Result<()> {
        if self.from >= n || self.to >= n {
            return Err(Error::UnknownState(format!("#{}", self.from.max(self.to))));
        }
        self.taboo.check_bounds(n)
    }
}

/// Generator restricted to `S \ H`. Rates into `H` become row defect; the
/// diagonal is unchanged.
pub fn restrict(gen: &Generator, taboo: &TabooSet) -> Result<Generator> {
    taboo.check_bounds(gen.len())?;
    if taboo.is_empty() {
        return Ok(gen.clone());
    }
    let mask = taboo.mask(gen.len());
    let keep: Vec<usize> = (0..gen.len()).filter(|&x| !mask[x]).collect();
    if keep.is_empty() {
        return Err(Error::TabooCoversSpace);
    }
    let mut new_index = vec![usize::MAX; gen.len()];
    for (k, &x) in keep.iter().enumerate() {
        new_index[x] = k;
    }
    let states = StateSpace::new(keep.iter().map(|&x| gen.label(x).to_string()))?;
    let rows: Vec<Vec<(usize, f64)>> = keep
        .iter()
        .map(|&x| {
            gen.row(x)
                .iter()
                .filter(|&&(y, _)| !mask[y])
                .map(|&(y, v)| (new_index[y], v))
                .collect()
        })
        .collect();
    let diag: Vec<f64> = keep.iter().map(|&x| gen.diag(x)).collect();
    let mut sub = Generator {
        states,
        rows,
        diag,
        conservative: false,
    };
    sub.conservative = (0..sub.len()).all(|x| sub.defect_rate(x) == 0.0);
    Ok(sub)
}

/// `P_x(τ_x ≤ t) = 1 - exp(a(x,x) t)`.
pub fn exit_time_cdf(gen: &Generator, x: usize, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(-(gen.diag(x) * t).exp_m1())
}

/// Probability with 12 decimal places, the format used for hitting values.
pub fn fmt_prob(v: f64) -> String {
    format!("{v:.12}")
}

/// General quantity with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}
