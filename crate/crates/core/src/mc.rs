//! Independent checks: seeded trajectory simulation and value iteration on
//! the first-step equations.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{embedded_chain, Generator, HittingQuery, JumpKernel, TabooSet};
use crate::error::{Error, Result};

pub const VI_TOL: f64 = 1e-12;
pub const VI_MAX_ITER: usize = 1_000_000;

/// Holding times allowed per trial, in units of the slowest mean holding time.
pub const HORIZON_HOLDING_TIMES: f64 = 50.0;

/// `50 / min_x(-a(x,x))`.
pub fn default_horizon(gen: &Generator) -> f64 {
    let slowest = (0..gen.len())
        .map(|x| gen.exit_rate(x))
        .fold(f64::INFINITY, f64::min);
    HORIZON_HOLDING_TIMES / slowest
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    HitTarget(f64),
    HitTaboo(f64),
    /// Left the represented state space through a defective row.
    Escaped(f64),
    HorizonExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub seed: u64,
    /// `(time, state)` pairs; the first is `(0, start)`.
    pub jumps: Vec<(f64, usize)>,
    pub terminal: Terminal,
}

/// Cumulative jump distributions for fast sampling.
struct Sampler {
    exit_rates: Vec<f64>,
    targets: Vec<Vec<usize>>,
    cumulative: Vec<Vec<f64>>,
}

enum Jump {
    To(usize),
    Escape,
}

impl Sampler {
    fn new(gen: &Generator) -> Self {
        let kernel: JumpKernel = embedded_chain(gen);
        let mut targets = Vec::with_capacity(gen.len());
        let mut cumulative = Vec::with_capacity(gen.len());
        for x in 0..gen.len() {
            let mut acc = 0.0;
            let mut t = Vec::new();
            let mut c = Vec::new();
            for &(z, p) in kernel.row(x) {
                acc += p;
                t.push(z);
                c.push(acc);
            }
            // conservative rows never escape through round-off
            if kernel.defect(x) == 0.0 {
                if let Some(last) = c.last_mut() {
                    *last = 1.0;
                }
            }
            targets.push(t);
            cumulative.push(c);
        }
        Sampler {
            exit_rates: (0..gen.len()).map(|x| gen.exit_rate(x)).collect(),
            targets,
            cumulative,
        }
    }

    fn holding_time<R: RngCore>(&self, x: usize, rng: &mut R) -> f64 {
        -open_unit(rng).ln() / self.exit_rates[x]
    }

    fn jump<R: RngCore>(&self, x: usize, rng: &mut R) -> Jump {
        let u: f64 = rng.gen();
        let c = &self.cumulative[x];
        let k = c.partition_point(|&v| v <= u);
        match self.targets[x].get(k) {
            Some(&z) => Jump::To(z),
            None => Jump::Escape,
        }
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Substream `stream` of the counter-based generator keyed by `seed`.
fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the chain from `x` until `horizon` or escape.
pub fn simulate_trajectory(
    gen: &Generator,
    x: usize,
    seed: u64,
    horizon: f64,
) -> Result<TrajectorySample> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if x >= gen.len() {
        return Err(Error::UnknownState(format!("#{x}")));
    }
    let sampler = Sampler::new(gen);
    let mut rng = substream(seed, 0);
    let mut jumps = vec![(0.0, x)];
    let mut state = x;
    let mut t = 0.0;
    let terminal = loop {
        t += sampler.holding_time(state, &mut rng);
        if t > horizon {
            break Terminal::HorizonExceeded;
        }
        match sampler.jump(state, &mut rng) {
            Jump::Escape => break Terminal::Escaped(t),
            Jump::To(z) => {
                jumps.push((t, z));
                state = z;
            }
        }
    };
    Ok(TrajectorySample {
        seed,
        jumps,
        terminal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Trials stopped by the horizon; counted as failures.
    pub horizon_censored: u64,
}

impl Estimate {
    fn from_counts(successes: u64, trials: u64, censored: u64) -> Self {
        let mean = successes as f64 / trials as f64;
        Estimate {
            mean,
            stderr: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            horizon_censored: censored,
        }
    }

    /// `|mean - exact| ≤ k · stderr`.
    pub fn covers(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfterExitEstimate {
    pub estimate: Estimate,
    /// Frequency of the hitting time after first exit being zero, i.e. the
    /// first jump lands on the target.
    pub zero_atom: Estimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    success: u64,
    censored: u64,
    zero: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            success: self.success + o.success,
            censored: self.censored + o.censored,
            zero: self.zero + o.zero,
        }
    }
}

/// One trial. The taboo is only active strictly after the first exit from
/// the start. With `after_exit` the horizon applies to the time elapsed
/// since that exit.
fn run_trial(
    sampler: &Sampler,
    q: &HittingQuery,
    taboo: &[bool],
    rng: &mut ChaCha8Rng,
    horizon: f64,
    after_exit: bool,
) -> Tally {
    let mut state = q.from;
    let mut t = sampler.holding_time(state, rng);
    let clock_offset = if after_exit { t } else { 0.0 };
    let mut first = true;
    loop {
        if t - clock_offset > horizon {
            return Tally {
                censored: 1,
                ..Tally::default()
            };
        }
        let z = match sampler.jump(state, rng) {
            Jump::Escape => return Tally::default(),
            Jump::To(z) => z,
        };
        if z == q.to {
            return Tally {
                success: 1,
                censored: 0,
                zero: u64::from(first),
            };
        }
        if taboo[z] {
            return Tally::default();
        }
        first = false;
        state = z;
        t += sampler.holding_time(state, rng);
    }
}

fn tally(
    gen: &Generator,
    q: &HittingQuery,
    trials: u64,
    seed: u64,
    horizon: f64,
    after_exit: bool,
) -> Result<Tally> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    q.check_bounds(gen.len())?;
    let q = q.normalized();
    let sampler = Sampler::new(gen);
    let taboo = q.taboo.mask(gen.len());
    let base = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.clone();
            rng.set_stream(i);
            rng.set_word_pos(0);
            run_trial(&sampler, &q, &taboo, &mut rng, horizon, after_exit)
        })
        .reduce(Tally::default, |a, b| a + b))
}

/// Monte-Carlo estimate of `_H F_xy(∞)`. Trial `i` draws from substream `i`
/// of the generator keyed by `seed`, so the result does not depend on
/// scheduling.
pub fn estimate_hitting(
    gen: &Generator,
    q: &HittingQuery,
    trials: u64,
    seed: u64,
    horizon: f64,
) -> Result<Estimate> {
    let t = tally(gen, q, trials, seed, horizon, false)?;
    Ok(Estimate::from_counts(t.success, trials, t.censored))
}

/// Same event, clocked from the first exit; also reports the atom at zero.
pub fn estimate_hitting_after_exit(
    gen: &Generator,
    q: &HittingQuery,
    trials: u64,
    seed: u64,
    horizon: f64,
) -> Result<AfterExitEstimate> {
    let t = tally(gen, q, trials, seed, horizon, true)?;
    Ok(AfterExitEstimate {
        estimate: Estimate::from_counts(t.success, trials, t.censored),
        zero_atom: Estimate::from_counts(t.zero, trials, 0),
    })
}

/// `P_x(hitting time after first exit = 0) = (1 - δ_xy) a(x,y) / (-a(x,x))`.
pub fn zero_atom_probability(gen: &Generator, x: usize, y: usize) -> f64 {
    if x == y {
        0.0
    } else {
        gen.rate(x, y) / gen.exit_rate(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the final sweep.
    pub last_change: f64,
}

/// Iterates the first-step map from zero:
/// `h(x) ← (1 - δ_xy) p(x,y) + Σ_{z ∉ H, z ≠ x, y} p(x,z) h(z)`.
///
/// Iterates are nondecreasing and bounded by one; both are checked on every
/// sweep. Stops once the sup-norm change is at most `tol`.
pub fn value_iteration_hitting(
    gen: &Generator,
    y: usize,
    taboo: &TabooSet,
    tol: f64,
    max_iter: usize,
) -> Result<ValueIteration> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = gen.len();
    if y >= n {
        return Err(Error::UnknownState(format!("#{y}")));
    }
    taboo.check_bounds(n)?;
    let blocked = taboo.without(y).mask(n);
    let kernel = embedded_chain(gen);
    // (target weight, [(z, p)] over free z)
    let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
        .map(|x| {
            let direct = if x == y { 0.0 } else { kernel.prob(x, y) };
            let free = kernel
                .row(x)
                .iter()
                .filter(|&&(z, _)| z != y && !blocked[z])
                .copied()
                .collect();
            (direct, free)
        })
        .collect();

    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        change = 0.0;
        for (x, (direct, free)) in rows.iter().enumerate() {
            let v = direct + free.iter().map(|&(z, p)| p * h[z]).sum::<f64>();
            if v < h[x] || v > 1.0 + 1e-12 {
                return Err(Error::OutOfRange { value: v });
            }
            change = change.max(v - h[x]);
            next[x] = v;
        }
        std::mem::swap(&mut h, &mut next);
        if change <= tol {
            break;
        }
    }
    for v in h.iter_mut() {
        *v = v.min(1.0);
    }
    Ok(ValueIteration {
        values: h,
        iterations,
        converged: change <= tol,
        last_change: change,
    })
}
