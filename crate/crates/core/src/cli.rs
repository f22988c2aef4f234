//! Command-line front end. [`run`] returns the exit code and the text for
//! stdout and stderr so that it can be tested without a process.
//!
//! Exit codes: 0 success, 1 invalid input or failed validation, 2 numerical
//! degeneracy.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::chain::{fmt_num, fmt_prob, parse_chain, validate, Generator, HittingQuery, TabooSet};
use crate::error::Error;
use crate::green::{green_function, taboo_green, GreenResult};
use crate::hitting::{applicable, default_method, hitting_probability, Method};
use crate::lattice::{build_lattice_walk, LatticeSpec};
use crate::mc::{default_horizon, estimate_hitting, estimate_hitting_after_exit};
use crate::reduction::{reduce_with_trace, render_trace};

/// Largest disagreement tolerated between methods in `--method all`.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "taboo",
    about = "Hitting probabilities under taboo for continuous-time Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct QueryArgs {
    /// Chain file.
    file: PathBuf,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// Comma-separated taboo states.
    #[arg(long, value_delimiter = ',')]
    taboo: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a chain file and report findings.
    Validate { file: PathBuf },
    /// Compute a hitting probability under taboo.
    Hit {
        #[command(flatten)]
        query: QueryArgs,
        /// theorem1, firststep, theorem3, base, reduce, vi, mc or all.
        #[arg(long)]
        method: Option<String>,
        /// Trials for `--method mc`.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Seed for `--method mc`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the Green matrix, or the taboo Green matrix with `--taboo`.
    Green {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        taboo: Vec<String>,
    },
    /// Evaluate a multi-state taboo from singleton values, with the step trace.
    Reduce {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Monte-Carlo estimate of a hitting probability.
    Simulate {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        horizon: Option<f64>,
        /// Clock the hitting time from the first exit and report the atom at zero.
        #[arg(long)]
        after_exit: bool,
    },
    /// Emit a chain file for a simple random walk on a window of Z^d.
    Lattice {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        radius: u32,
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    message: String,
    stdout: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
            stdout: String::new(),
        }
    }
}

pub fn run<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                CliOutput {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let mut out = String::new();
    let mut err = String::new();
    match execute(cli.command, &mut out, &mut err) {
        Ok(code) => CliOutput {
            code,
            stdout: out,
            stderr: err,
        },
        Err(f) => {
            out.push_str(&f.stdout);
            let _ = writeln!(err, "error: {}", f.message);
            CliOutput {
                code: f.code,
                stdout: out,
                stderr: err,
            }
        }
    }
}

fn load(path: &PathBuf) -> Result<Generator, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
        stdout: String::new(),
    })?;
    Ok(parse_chain(&text)?)
}

fn build_query(
    gen: &Generator,
    args: &QueryArgs,
    err: &mut String,
) -> Result<HittingQuery, Failure> {
    let taboo: Vec<&str> = args
        .taboo
        .iter()
        .map(String::as_str)
        .filter(|s| !s.is_empty())
        .collect();
    let q = HittingQuery::from_labels(gen.states(), &args.from, &args.to, &taboo)?;
    if !q.is_normalized() {
        let _ = writeln!(err, "notice: target `{}` removed from taboo", args.to);
    }
    Ok(q.normalized())
}

fn execute(cmd: Command, out: &mut String, err: &mut String) -> Result<i32, Failure> {
    match cmd {
        Command::Validate { file } => {
            let gen = load(&file)?;
            let report = validate(&gen);
            let _ = writeln!(out, "states={}", gen.len());
            let _ = writeln!(out, "conservative={}", report.conservative);
            let _ = writeln!(out, "irreducible={}", report.irreducible);
            for f in &report.findings {
                let _ = writeln!(out, "finding: {f}");
            }
            Ok(if report.is_valid() { 0 } else { 1 })
        }
        Command::Hit {
            query,
            method,
            trials,
            seed,
        } => {
            let gen = load(&query.file)?;
            let q = build_query(&gen, &query, err)?;
            match method.as_deref() {
                Some("all") => hit_all(&gen, &q, out),
                Some("mc") => {
                    let e = estimate_hitting(&gen, &q, trials, seed, default_horizon(&gen))?;
                    let _ = writeln!(
                        out,
                        "value={} method={}",
                        fmt_prob(e.mean),
                        Method::MonteCarlo
                    );
                    let _ = writeln!(
                        out,
                        "stderr={} trials={} censored={}",
                        fmt_prob(e.stderr),
                        e.trials,
                        e.horizon_censored
                    );
                    Ok(0)
                }
                Some(name) => {
                    let m: Method = name.parse()?;
                    let r = hitting_probability(&gen, &q, m)?;
                    let _ = writeln!(out, "value={} method={}", fmt_prob(r.value), r.method);
                    Ok(0)
                }
                None => {
                    let r = hitting_probability(&gen, &q, default_method(&q))?;
                    let _ = writeln!(out, "value={} method={}", fmt_prob(r.value), r.method);
                    Ok(0)
                }
            }
        }
        Command::Green { file, taboo } => {
            let gen = load(&file)?;
            let labels: Vec<&str> = taboo
                .iter()
                .map(String::as_str)
                .filter(|s| !s.is_empty())
                .collect();
            let h = TabooSet::from_labels(gen.states(), &labels)?;
            let m = if h.is_empty() {
                match green_function(&gen)? {
                    GreenResult::Recurrent => {
                        let _ = writeln!(out, "green=recurrent");
                        return Ok(0);
                    }
                    GreenResult::Finite(m) => m,
                }
            } else {
                taboo_green(&gen, &h)?
            };
            out.push_str(&m.render(&gen));
            let _ = writeln!(out, "residual={}", fmt_num(m.residual()));
            Ok(0)
        }
        Command::Reduce { query } => {
            let gen = load(&query.file)?;
            let q = build_query(&gen, &query, err)?;
            match reduce_with_trace(&gen, &q) {
                Ok(r) => {
                    let _ = writeln!(out, "value={} method={}", fmt_prob(r.value), r.method);
                    out.push_str(&render_trace(r.trace.as_deref().unwrap_or_default(), &gen));
                    Ok(0)
                }
                Err(p) => {
                    let mut f = Failure::from(p.error);
                    f.stdout = render_trace(&p.trace, &gen);
                    Err(f)
                }
            }
        }
        Command::Simulate {
            query,
            trials,
            seed,
            horizon,
            after_exit,
        } => {
            let gen = load(&query.file)?;
            let q = build_query(&gen, &query, err)?;
            let horizon = horizon.unwrap_or_else(|| default_horizon(&gen));
            let (e, atom) = if after_exit {
                let a = estimate_hitting_after_exit(&gen, &q, trials, seed, horizon)?;
                (a.estimate, Some(a.zero_atom))
            } else {
                (estimate_hitting(&gen, &q, trials, seed, horizon)?, None)
            };
            let _ = writeln!(out, "mean={}", fmt_prob(e.mean));
            let _ = writeln!(out, "stderr={}", fmt_prob(e.stderr));
            let _ = writeln!(out, "trials={}", e.trials);
            let _ = writeln!(out, "censored={}", e.horizon_censored);
            if let Some(a) = atom {
                let _ = writeln!(out, "zero_atom={}", fmt_prob(a.mean));
                let _ = writeln!(out, "zero_atom_stderr={}", fmt_prob(a.stderr));
            }
            Ok(0)
        }
        Command::Lattice { dim, radius, rate } => {
            let gen = build_lattice_walk(&LatticeSpec::simple(dim, radius, rate))?;
            out.push_str(&gen.to_chain_file());
            Ok(0)
        }
    }
}

fn hit_all(gen: &Generator, q: &HittingQuery, out: &mut String) -> Result<i32, Failure> {
    let mut values = Vec::new();
    for m in Method::ALL {
        if !applicable(gen, q, m) {
            continue;
        }
        let r = hitting_probability(gen, q, m)?;
        let _ = writeln!(out, "value={} method={}", fmt_prob(r.value), m);
        values.push((m, r.value));
    }
    let mut worst = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((a.1 - b.1).abs());
        }
    }
    let _ = writeln!(out, "max_disagreement={}", fmt_num(worst));
    if worst > CROSS_CHECK_TOL {
        return Err(Failure {
            code: 2,
            message: format!("methods disagree by {worst:e}"),
            stdout: String::new(),
        });
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tri() -> tempfile_path::TempPath {
        let text = "states: 0 1 2\nconservative: true\n\
                    rate: 0 1 0.5\nrate: 0 2 0.5\nrate: 1 0 0.5\n\
                    rate: 1 2 0.5\nrate: 2 0 0.5\nrate: 2 1 0.5\n";
        tempfile_path::TempPath::with_contents("tri.chain", text)
    }

    /// Minimal self-cleaning temp file.
    mod tempfile_path {
        use std::path::PathBuf;
        use std::sync::atomic::{AtomicUsize, Ordering};

        static COUNTER: AtomicUsize = AtomicUsize::new(0);

        pub struct TempPath(pub PathBuf);

        impl TempPath {
            pub fn with_contents(name: &str, text: &str) -> Self {
                let k = COUNTER.fetch_add(1, Ordering::SeqCst);
                let p =
                    std::env::temp_dir().join(format!("taboo-{}-{k}-{name}", std::process::id()));
                std::fs::write(&p, text).unwrap();
                TempPath(p)
            }

            pub fn as_str(&self) -> &str {
                self.0.to_str().unwrap()
            }
        }

        impl Drop for TempPath {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
    }

    #[test]
    fn hit_default_methods() {
        let f = write_tri();
        let o = run([
            "taboo",
            "hit",
            f.as_str(),
            "--from",
            "0",
            "--to",
            "1",
            "--taboo",
            "2",
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(o.stdout, "value=0.500000000000 method=theorem1\n");
        let o = run(["taboo", "hit", f.as_str(), "--from", "0", "--to", "1"]);
        assert_eq!(o.stdout, "value=1.000000000000 method=base\n");
    }

    #[test]
    fn notice_when_target_in_taboo() {
        let f = write_tri();
        let o = run([
            "taboo",
            "hit",
            f.as_str(),
            "--from",
            "0",
            "--to",
            "1",
            "--taboo",
            "1,2",
        ]);
        assert_eq!(o.code, 0);
        assert!(o.stderr.contains("notice"));
        assert_eq!(o.stdout, "value=0.500000000000 method=theorem1\n");
    }

    #[test]
    fn cross_check_all() {
        let f = write_tri();
        let o = run([
            "taboo",
            "hit",
            f.as_str(),
            "--from",
            "0",
            "--to",
            "0",
            "--taboo",
            "2",
            "--method",
            "all",
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(o.stdout.contains("method=theorem1"));
        assert!(o.stdout.contains("method=firststep"));
        assert!(o.stdout.contains("method=vi"));
    }

    #[test]
    fn exit_codes() {
        let bad = tempfile_path::TempPath::with_contents(
            "bad.chain",
            "states: a b\nconservative: true\nrate: a b -1\n",
        );
        assert_eq!(run(["taboo", "validate", bad.as_str()]).code, 1);
        let split = tempfile_path::TempPath::with_contents(
            "split.chain",
            "states: a b c d\nconservative: true\nrate: a b 1\nrate: b a 1\nrate: c d 1\nrate: d c 1\n",
        );
        let o = run(["taboo", "validate", split.as_str()]);
        assert_eq!(o.code, 1);
        assert!(o.stdout.contains("irreducible=false"));
        // {a,b} is closed and avoids the taboo {c}
        let o = run([
            "taboo",
            "hit",
            split.as_str(),
            "--from",
            "a",
            "--to",
            "b",
            "--taboo",
            "c",
        ]);
        assert_eq!(o.code, 2, "{}", o.stderr);
        assert_eq!(run(["taboo", "bogus"]).code, 1);
        assert_eq!(
            run(["taboo", "hit", "/nonexistent", "--from", "a", "--to", "b"]).code,
            1
        );
    }

    #[test]
    fn green_and_reduce_and_lattice() {
        let f = write_tri();
        let o = run(["taboo", "green", f.as_str(), "--taboo", "2"]);
        assert_eq!(o.code, 0);
        assert!(o
            .stdout
            .starts_with("row 0 1\n0 1.33333333333e0 6.66666666667e-1\n"));
        let o = run(["taboo", "green", f.as_str()]);
        assert_eq!(o.stdout, "green=recurrent\n");

        let o = run([
            "taboo",
            "reduce",
            f.as_str(),
            "--from",
            "0",
            "--to",
            "1",
            "--taboo",
            "2",
        ]);
        assert_eq!(o.code, 1);

        let o = run(["taboo", "lattice", "--dim", "1", "--radius", "1"]);
        assert_eq!(o.code, 0);
        let g = parse_chain(&o.stdout).unwrap();
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn simulate_is_deterministic() {
        let f = write_tri();
        let args = [
            "taboo",
            "simulate",
            f.as_str(),
            "--from",
            "0",
            "--to",
            "1",
            "--taboo",
            "2",
            "--trials",
            "2000",
            "--seed",
            "7",
        ];
        let a = run(args);
        let b = run(args);
        assert_eq!(a.code, 0);
        assert_eq!(a, b);
        assert!(a.stdout.contains("trials=2000"));
    }
}
