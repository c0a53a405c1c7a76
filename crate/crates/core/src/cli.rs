//! Command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::bounds::{self, BoundsConfig, BoundsEngine};
use crate::exact_eval::{self, DEFAULT_STATE_CAP};
use crate::game::GameSpec;
use crate::montecarlo::{self, SimConfig, DEFAULT_MAX_STEPS};
use crate::numerics::{ExtValue, Rational};
use crate::strategies::{counterexample_policy, Policy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "betbound",
    version,
    about = "Hitting times of betting strategies in a favorable game"
)]
pub struct Cli {
    /// Game as "p=<rational> b=<rational>".
    #[arg(long, global = true, default_value = "p=2/3 b=2", value_parser = parse_game)]
    pub game: GameSpec,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute the golden hitting times of the example game.
    Verify,
    /// Exact expected rounds of a policy from a starting bankroll.
    Eval {
        #[arg(long, value_parser = parse_policy)]
        policy: Policy,
        #[arg(long, value_parser = parse_rational)]
        x0: Rational,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
    },
    /// Iterate certified bounds on the optimal expected rounds and export a curve.
    Bounds {
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long, default_value_t = 4096)]
        pieces: usize,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_rational)]
        x_min: Option<Rational>,
    },
    /// Simulate a policy and compare with its exact value.
    Simulate {
        #[arg(long, value_parser = parse_policy)]
        policy: Policy,
        #[arg(long, value_parser = parse_rational)]
        x0: Rational,
        #[arg(long, default_value_t = 100_000)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Compare threshold strategies with the table strategy at 7/18.
    Counterexample {
        /// Comma-separated thresholds.
        #[arg(long, value_parser = parse_rational, value_delimiter = ',',
              default_value = "17/50,3/8,7/18,2/5,9/20,1/2")]
        xi0_samples: Vec<Rational>,
    },
    /// Locate the concave kink of an exported upper curve.
    Bump {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 41)]
        window: usize,
    },
}

fn parse_game(s: &str) -> Result<GameSpec, String> {
    s.parse().map_err(|e: crate::game::GameError| e.to_string())
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
        .map_err(|e: crate::strategies::PolicyError| e.to_string())
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse()
        .map_err(|_| format!("not a rational number: {s:?}"))
}

/// A failed command: exit code plus message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::runtime(e)
    }
}

/// `14/3 ≈ 4.6667`, or just the integer.
pub fn format_exact(v: &ExtValue<Rational>) -> String {
    match v {
        ExtValue::Infinity => "inf".into(),
        ExtValue::Finite(r) if r.denom() == &1.into() => r.to_string(),
        ExtValue::Finite(r) => format!("{r} ≈ {:.4}", r.to_f64()),
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let game = &cli.game;
    match &cli.command {
        Command::Verify => cmd_verify(game, out),
        Command::Eval {
            policy,
            x0,
            state_cap,
        } => cmd_eval(game, policy, x0, *state_cap, out, err),
        Command::Bounds {
            iters,
            pieces,
            grid,
            out: path,
            x_min,
        } => cmd_bounds(game, *iters, *pieces, *grid, path, x_min.as_ref(), out, err),
        Command::Simulate {
            policy,
            x0,
            episodes,
            seed,
            max_steps,
        } => {
            let config = SimConfig {
                master_seed: *seed,
                episodes: *episodes,
                max_steps: *max_steps,
                x0: x0.clone(),
                policy: policy.clone(),
                game: game.clone(),
            };
            cmd_simulate(&config, out, err)
        }
        Command::Counterexample { xi0_samples } => cmd_counterexample(game, xi0_samples, out),
        Command::Bump { curve, window } => cmd_bump(curve, *window, out),
    }
}

fn cmd_verify(game: &GameSpec, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows = exact_eval::verify_golden(game).map_err(Failure::runtime)?;
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  result",
        "check", "expected", "computed"
    )?;
    for row in &rows {
        writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {}",
            row.label,
            row.expected.to_string(),
            row.computed.to_string(),
            if row.pass { "pass" } else { "FAIL" }
        )?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", rows.len())?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "{failed} of {} checks failed", rows.len())?;
        Ok(EXIT_FAIL)
    }
}

fn cmd_eval(
    game: &GameSpec,
    policy: &Policy,
    x0: &Rational,
    cap: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    for w in policy.validate(game).map_err(Failure::usage)? {
        writeln!(err, "warning: {w}")?;
    }
    let result = exact_eval::evaluate(game, policy, x0, cap).map_err(Failure::runtime)?;
    writeln!(out, "{}", format_exact(&result.value))?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    game: &GameSpec,
    iters: usize,
    pieces: usize,
    grid: usize,
    path: &PathBuf,
    x_min: Option<&Rational>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let mut config = BoundsConfig::with_budget(pieces);
    if let Some(x) = x_min {
        config.x_min = x.clone();
    }
    let mut engine = BoundsEngine::new(game, config).map_err(Failure::runtime)?;
    for d in engine.diagnostics() {
        writeln!(out, "note: {d}")?;
    }
    // wall times go to stderr so that stdout stays reproducible
    let print = |out: &mut dyn Write, s: &bounds::IterationStats| {
        writeln!(
            out,
            "iteration {:>3}: pieces lower {:>5} upper {:>5}, max gap {}",
            s.iteration,
            s.pieces_lower,
            s.pieces_upper,
            crate::numerics::format_sig(s.max_gap, 6)
        )
    };
    print(out, &engine.stats(Default::default()))?;
    let start = Instant::now();
    for _ in 0..iters {
        let s = engine.iteration();
        print(out, &s)?;
        writeln!(
            err,
            "iteration {}: {:.3} s",
            s.iteration,
            s.wall_time.as_secs_f64()
        )?;
    }
    writeln!(err, "total: {:.3} s", start.elapsed().as_secs_f64())?;
    let rows = bounds::export_curve(engine.bounds(), grid).map_err(Failure::usage)?;
    let file =
        File::create(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    bounds::write_csv(&rows, BufWriter::new(file)).map_err(Failure::runtime)?;
    writeln!(
        out,
        "final max gap {}; wrote {} rows to {}",
        crate::numerics::format_sig(bounds::max_gap(engine.bounds()), 6),
        rows.len(),
        path.display()
    )?;
    Ok(EXIT_OK)
}

fn cmd_simulate(
    config: &SimConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    for w in config
        .policy
        .validate(&config.game)
        .map_err(Failure::usage)?
    {
        writeln!(err, "warning: {w}")?;
    }
    let est = montecarlo::estimate(config).map_err(Failure::runtime)?;
    writeln!(out, "mean rounds: {:.6}", est.mean_rounds)?;
    writeln!(out, "std error:   {:.6}", est.std_error)?;
    writeln!(out, "completed:   {}", est.completed)?;
    writeln!(out, "truncated:   {}", est.truncated)?;
    if est.is_biased_low() {
        writeln!(out, "note: truncated episodes bias the mean downwards")?;
    }
    match exact_eval::evaluate(&config.game, &config.policy, &config.x0, DEFAULT_STATE_CAP) {
        Ok(r) => match r.value {
            ExtValue::Finite(exact) => {
                let e = exact.to_f64();
                let z = if est.std_error > 0.0 {
                    est.z_score(e)
                } else if est.mean_rounds == e {
                    0.0
                } else {
                    f64::INFINITY
                };
                writeln!(
                    out,
                    "exact:       {}",
                    format_exact(&ExtValue::Finite(exact))
                )?;
                writeln!(out, "z-score:     {z:.3}")?;
            }
            ExtValue::Infinity => writeln!(out, "exact:       inf")?,
        },
        Err(e) => writeln!(out, "exact value unavailable: {e}")?,
    }
    Ok(EXIT_OK)
}

fn cmd_counterexample(
    game: &GameSpec,
    samples: &[Rational],
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if !game.is_example() {
        writeln!(
            out,
            "the counterexample report rests on closed-form values of the example game p=2/3 b=2 and does not apply to {game}"
        )?;
        return Ok(EXIT_OK);
    }
    if samples.is_empty() {
        return Err(Failure::usage("no threshold samples given"));
    }
    let start = Rational::frac(7, 18);
    let mut best: Option<ExtValue<Rational>> = None;
    for xi0 in samples {
        let policy = Policy::threshold(xi0.clone());
        policy.validate(game).map_err(Failure::usage)?;
        let v = exact_eval::evaluate(game, &policy, &start, DEFAULT_STATE_CAP)
            .map_err(Failure::runtime)?
            .value;
        writeln!(out, "xi0 = {xi0}: T(7/18) = {}", format_exact(&v))?;
        best = Some(match best {
            None => v,
            Some(b) => b.min(&v),
        });
    }
    let best = best.expect("samples nonempty");
    let alt = exact_eval::evaluate(game, &counterexample_policy(), &start, DEFAULT_STATE_CAP)
        .map_err(Failure::runtime)?
        .value;
    let (ExtValue::Finite(t), ExtValue::Finite(c)) = (&best, &alt) else {
        return Err(Failure::runtime("a strategy never reaches the target"));
    };
    let ratio = t / c;
    writeln!(
        out,
        "threshold: {t}, alternative: {c}, threshold/alternative = {ratio} ≈ {:.4}",
        ratio.to_f64()
    )?;
    writeln!(
        out,
        "every sampled threshold strategy needs at least {ratio} times the expected rounds of the alternative from 7/18"
    )?;
    Ok(EXIT_OK)
}

fn cmd_bump(path: &PathBuf, window: usize, out: &mut dyn Write) -> Result<i32, Failure> {
    let file =
        File::open(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    let rows =
        bounds::read_csv(file).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    match bounds::detect_bump(&rows, window).map_err(Failure::usage)? {
        Some(b) => writeln!(
            out,
            "bump at x = {} (score {})",
            crate::numerics::format_sig(b.x, 6),
            crate::numerics::format_sig(b.score, 6)
        )?,
        None => writeln!(out, "no bump detected")?,
    }
    Ok(EXIT_OK)
}
