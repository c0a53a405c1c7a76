//! Certified step-function bounds on the optimal expected hitting time.
//!
//! Both bounds live on `[0, 1)` with exact rational breakpoints. The
//! Bellman operator
//!
//! ```text
//! B[F](x) = 1 + min_{0 <= s < x} ( p F(x + b s) + (1 - p) F(x - s) )
//! ```
//!
//! maps an upper (lower) bound of the optimal value to another one. For a
//! nonincreasing `F` the expression inside the minimum is piecewise constant
//! in the stake `s`, changing only where a win or a loss lands on a
//! breakpoint of `F`, so the minimum is found exactly by sweeping those
//! critical stakes.
//!
//! Upper bounds use pieces `[a, c)` and take `B[U](a)`, the supremum over the
//! piece. Lower bounds use pieces `(a, c]` and take `B[L](c)`, the infimum.
//! Both conventions let exact values at breakpoints such as `1/2` survive.
//!
//! To keep the sweep in integer arithmetic, all breakpoints are put on a
//! common lattice `k / D`.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameError, GameSpec};
use crate::numerics::{
    add_down, add_up, format_sig, lcm_denominators, mul_down, mul_up, scaled_integer, Closure,
    Combine, Direction, NumericsError, Rational, StepFunction,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("x_min must lie in (0, 1/2), got {0}")]
    XMin(Rational),
    #[error("breakpoint lattice with denominator {0} is too fine for 128-bit sweeps")]
    Lattice(BigInt),
    #[error("grid needs at least 2 points, got {0}")]
    Grid(usize),
    #[error("window must be at least 3, got {0}")]
    Window(usize),
    #[error("need at least {needed} rows for window {window}, got {rows}")]
    TooFewRows {
        rows: usize,
        window: usize,
        needed: usize,
    },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    fn direction(self) -> Direction {
        match self {
            Side::Upper => Direction::Up,
            Side::Lower => Direction::Down,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsConfig {
    /// Truncation point; the upper bound is `+∞` below it.
    pub x_min: Rational,
    pub piece_budget: usize,
    /// Denominator `N` of the uniform refinement grid `k / N` on which new
    /// bound values are computed. `None` picks the largest `9 * 2^j` whose
    /// grid fits the piece budget.
    pub grid_denominator: Option<u64>,
    /// Largest stake fraction tried for the upper bound.
    pub max_stake_fraction: Option<Rational>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            x_min: Rational::frac(1, 1 << 20),
            piece_budget: 4096,
            grid_denominator: None,
            max_stake_fraction: Some(
                Rational::one() - Rational::from_integer(3).pow(-15).expect("nonzero"),
            ),
        }
    }
}

impl BoundsConfig {
    pub fn with_budget(piece_budget: usize) -> Self {
        BoundsConfig {
            piece_budget,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsPair {
    pub lower: StepFunction,
    pub upper: StepFunction,
    pub x_min: Rational,
    pub iteration_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub pieces_lower: usize,
    pub pieces_upper: usize,
    /// Largest `upper - lower` over piece starts in `[x_min, 1)`.
    pub max_gap: f64,
    pub wall_time: Duration,
}

/// Lattice points `m^-k >= x_min` (`k >= 1`) of the Kelly walk, descending,
/// with `m` the Kelly win multiplier. Empty for games without the
/// reciprocal-Kelly property.
fn kelly_levels(game: &GameSpec, x_min: &Rational) -> Vec<Rational> {
    let Ok((up, _)) = game.kelly_multipliers() else {
        return Vec::new();
    };
    if !game.reciprocal_kelly() {
        return Vec::new();
    }
    let down = up.recip().expect("multiplier positive");
    let mut levels = Vec::new();
    let mut x = down.clone();
    while x >= *x_min {
        levels.push(x.clone());
        x = &x * &down;
    }
    levels
}

/// Initial bounds from the closed-form Kelly hitting times.
///
/// With `c = 1/(2p - 1)` and Kelly levels `m^-k`: the upper bound is `k c` on
/// `[m^-k, m^-(k-1))` (Kelly reaches the target from `m^-k` in `k c`
/// expected rounds, and the optimum is nonincreasing), `+∞` below `x_min`.
/// The lower bound is `k c` on `(m^-(k+1), m^-k]` from the log-drift
/// supermartingale, raised to `1/p` everywhere (at least one win is needed).
pub fn seed_bounds(
    game: &GameSpec,
    x_min: &Rational,
) -> Result<(BoundsPair, Vec<String>), BoundsError> {
    if !x_min.is_positive() || *x_min >= Rational::frac(1, 2) {
        return Err(BoundsError::XMin(x_min.clone()));
    }
    let mut diagnostics = Vec::new();
    let first_win = game.p_win().recip()?.to_f64_down();
    let levels = kelly_levels(game, x_min);

    if levels.is_empty() {
        diagnostics.push(format!(
            "game {game} lacks the reciprocal-Kelly property; upper seed is +inf and the lower seed is 1/p only"
        ));
        let upper = StepFunction::constant(f64::INFINITY)?;
        let lower = StepFunction::constant(first_win)?.with_closure(Closure::Right);
        return Ok((
            BoundsPair {
                lower,
                upper,
                x_min: x_min.clone(),
                iteration_count: 0,
            },
            diagnostics,
        ));
    }

    let c = (Rational::from_integer(2) * game.p_win() - Rational::one()).recip()?;
    let k_rounds = |k: usize| Rational::from_integer(k as i64) * &c;
    let kmax = levels.len();

    // upper: [0, x_min) -> inf, [x_min, m^-kmax) -> (kmax+1) c, [m^-k, m^-(k-1)) -> k c
    let mut up_pieces = vec![(Rational::zero(), f64::INFINITY)];
    if levels[kmax - 1] != *x_min {
        up_pieces.push((x_min.clone(), k_rounds(kmax + 1).to_f64_up()));
    }
    for k in (1..=kmax).rev() {
        up_pieces.push((levels[k - 1].clone(), k_rounds(k).to_f64_up()));
    }
    let upper = StepFunction::from_pieces(&up_pieces)?;

    // lower: (m^-(k+1), m^-k] -> k c; below the deepest level, the level count
    // at x_min, which is a valid bound on all of [0, x_min) by monotonicity
    let mut low_pieces = vec![(
        Rational::zero(),
        k_rounds(kmax).to_f64_down().max(first_win),
    )];
    for k in (1..=kmax).rev() {
        let v = k_rounds(k - 1).to_f64_down().max(first_win);
        low_pieces.push((levels[k - 1].clone(), v));
    }
    let lower = StepFunction::from_pieces(&low_pieces)?.with_closure(Closure::Right);

    Ok((
        BoundsPair {
            lower,
            upper,
            x_min: x_min.clone(),
            iteration_count: 0,
        },
        diagnostics,
    ))
}

/// Breakpoints on a common integer lattice: `points[i] = breakpoint_i * scale`.
#[derive(Debug, Clone)]
struct Lattice {
    scale: BigInt,
    one: i128,
}

impl Lattice {
    fn new<'a>(
        game: &GameSpec,
        points: impl IntoIterator<Item = &'a Rational>,
        cap: Option<&Rational>,
    ) -> Result<Lattice, BoundsError> {
        let scale = lcm_denominators(points);
        let b = game.b_odds();
        let bound = BigInt::one() << 120;
        let cap_size = cap.map_or(BigInt::one(), |c| c.numer().max(c.denom()).clone());
        let worst = &scale * b.numer().max(b.denom()) * cap_size * 8;
        if worst > bound {
            return Err(BoundsError::Lattice(scale));
        }
        let one = scale.to_i128().expect("checked above");
        Ok(Lattice { scale, one })
    }

    fn map(&self, x: &Rational) -> i128 {
        scaled_integer(x, &self.scale)
            .and_then(|v| v.to_i128())
            .expect("point lies on the lattice")
    }

    fn map_all(&self, xs: &[Rational]) -> Vec<i128> {
        xs.iter().map(|x| self.map(x)).collect()
    }
}

/// Everything a sweep needs about the function being improved.
struct SweepInput<'a> {
    /// Breakpoints of `F` in lattice units, `0 = bp[0] < ... < bp[n] = one`.
    bp: &'a [i128],
    values: &'a [f64],
    one: i128,
    /// Odds `b = u / w` in lowest terms.
    u: i128,
    w: i128,
    p: f64,
    q: f64,
    /// Upper-bound stakes satisfy `s * cap_den <= cap_num * x`.
    cap: Option<(i128, i128)>,
    /// `F` has pieces `(a, c]` rather than `[a, c)`.
    right_closed: bool,
}

/// The conservatively rounded Bellman value at lattice point `t`, evaluating
/// `F` with its own piece convention.
fn sweep_point(input: &SweepInput<'_>, t: i128, side: Side) -> f64 {
    let SweepInput {
        bp,
        values,
        one,
        u,
        w,
        ..
    } = *input;
    let n = values.len();
    if t <= 0 {
        return f64::INFINITY;
    }
    // Stakes are measured in units of 1/(2 * one * u): a win-critical stake
    // (win lands on breakpoint B) is 2(B - t)w, a loss-critical stake (loss
    // lands on B) is 2(t - B)u. Doubling leaves room for exact midpoints.
    let full = 2 * t * u;
    let mut crit: Vec<i128> = Vec::with_capacity(2 * n + 2);
    {
        // merge two increasing sequences
        let first_above = bp.partition_point(|&b| b <= t);
        let mut wi = first_above; // win-critical, B ascending from just above t
        let last_below = bp.partition_point(|&b| b < t); // count of B < t
        let mut li = last_below; // loss-critical, B descending from just below t
        crit.push(0);
        loop {
            let ws = (wi <= n).then(|| 2 * (bp[wi] - t) * w);
            let ls = (li > 0).then(|| 2 * (t - bp[li - 1]) * u);
            let next = match (ws, ls) {
                (None, None) => break,
                (Some(a), None) => {
                    wi += 1;
                    a
                }
                (None, Some(b)) => {
                    li -= 1;
                    b
                }
                (Some(a), Some(b)) => {
                    if a <= b {
                        wi += 1;
                        a
                    } else {
                        li -= 1;
                        b
                    }
                }
            };
            if next >= full {
                break;
            }
            if *crit.last().unwrap() != next {
                crit.push(next);
            }
        }
    }

    let (p, q) = (input.p, input.q);
    let combine = |wv: f64, lv: f64| match side {
        Side::Upper => add_up(1.0, add_up(mul_up(p, wv), mul_up(q, lv))),
        Side::Lower => add_down(1.0, add_down(mul_down(p, wv), mul_down(q, lv))),
    };
    let allowed = |s2: i128| match (side, input.cap) {
        (Side::Upper, Some((num, den))) => s2 * den <= num * 2 * t * u,
        _ => true,
    };

    // win outcome y: y * one * 2w = 2tw + s2;  loss outcome z: z * one * 2u = 2tu - s2
    let unit_w = 2 * w;
    let unit_u = 2 * u;
    let mut best = f64::INFINITY;
    let rc = input.right_closed;
    // queries come in increasing stake order, so y only moves up and z down
    let mut yi = 0usize;
    let mut zi = n - 1;
    let mut eval = |s2: i128| -> f64 {
        let y = 2 * t * w + s2;
        let z = 2 * t * u - s2;
        let wv = if y >= one * unit_w {
            0.0
        } else {
            while if rc {
                bp[yi + 1] * unit_w < y
            } else {
                bp[yi + 1] * unit_w <= y
            } {
                yi += 1;
            }
            values[yi]
        };
        while if rc {
            bp[zi] * unit_u >= z
        } else {
            bp[zi] * unit_u > z
        } {
            zi -= 1;
        }
        combine(wv, values[zi])
    };

    for (k, &s2) in crit.iter().enumerate() {
        if allowed(s2) {
            best = best.min(eval(s2));
        }
        let next = crit.get(k + 1).copied().unwrap_or(full);
        let mid = (s2 + next) / 2;
        if mid > s2 && mid < full && allowed(mid) {
            best = best.min(eval(mid));
        }
    }
    best
}

fn sweep_input<'a>(
    game: &GameSpec,
    lattice: &Lattice,
    bp: &'a [i128],
    values: &'a [f64],
    right_closed: bool,
    side: Side,
    max_stake_fraction: Option<&Rational>,
) -> SweepInput<'a> {
    let b = game.b_odds();
    let to_i = |v: &BigInt| v.to_i128().expect("odds fit in i128");
    let (p, q) = match side {
        Side::Upper => (game.p_win().to_f64_up(), game.p_loss().to_f64_up()),
        Side::Lower => (game.p_win().to_f64_down(), game.p_loss().to_f64_down()),
    };
    SweepInput {
        bp,
        values,
        one: lattice.one,
        u: to_i(b.numer()),
        w: to_i(b.denom()),
        p,
        q,
        cap: max_stake_fraction.map(|c| (to_i(c.numer()), to_i(c.denom()))),
        right_closed,
    }
}

/// Raw conservative Bellman values of `f`, one per piece of `targets`
/// (a breakpoint list `0 = t_0 < ... < t_m = 1`).
///
/// Upper: value at each piece's left endpoint, valid across `[a, c)` when
/// `f` is a nonincreasing upper bound. Lower: value at each piece's right
/// endpoint, valid across `(a, c]`. `f` is evaluated with its own closure.
pub fn bellman_values(
    game: &GameSpec,
    f: &StepFunction,
    targets: &[Rational],
    side: Side,
    max_stake_fraction: Option<&Rational>,
) -> Result<Vec<f64>, BoundsError> {
    let lattice = Lattice::new(
        game,
        f.breakpoints().iter().chain(targets),
        max_stake_fraction,
    )?;
    let bp = lattice.map_all(f.breakpoints());
    let tp = lattice.map_all(targets);
    let rc = f.closure() == Closure::Right;
    Ok(bellman_on_lattice(
        game,
        &lattice,
        &bp,
        f.values(),
        rc,
        &tp,
        side,
        max_stake_fraction,
    ))
}

#[allow(clippy::too_many_arguments)]
fn bellman_on_lattice(
    game: &GameSpec,
    lattice: &Lattice,
    bp: &[i128],
    values: &[f64],
    right_closed: bool,
    targets: &[i128],
    side: Side,
    max_stake_fraction: Option<&Rational>,
) -> Vec<f64> {
    let input = sweep_input(
        game,
        lattice,
        bp,
        values,
        right_closed,
        side,
        max_stake_fraction,
    );
    (0..targets.len() - 1)
        .into_par_iter()
        .map(|i| {
            let t = match side {
                Side::Upper => targets[i],
                Side::Lower => targets[i + 1],
            };
            sweep_point(&input, t, side)
        })
        .collect()
}

/// Iterates the conservative Bellman operator from the seed bounds.
pub struct BoundsEngine {
    game: GameSpec,
    config: BoundsConfig,
    lattice: Lattice,
    /// Breakpoints of the refinement partition (exact and lattice form).
    partition: Vec<Rational>,
    partition_lattice: Vec<i128>,
    x_min_index: usize,
    diagnostics: Vec<String>,
    bounds: BoundsPair,
}

impl BoundsEngine {
    pub fn new(game: &GameSpec, config: BoundsConfig) -> Result<Self, BoundsError> {
        let (seed, diagnostics) = seed_bounds(game, &config.x_min)?;
        Self::from_bounds(game, config, seed, diagnostics)
    }

    /// Continues from existing bounds; their breakpoints join the partition.
    pub fn from_bounds(
        game: &GameSpec,
        config: BoundsConfig,
        start: BoundsPair,
        diagnostics: Vec<String>,
    ) -> Result<Self, BoundsError> {
        game.kelly_fraction()?;
        if !config.x_min.is_positive() || config.x_min >= Rational::frac(1, 2) {
            return Err(BoundsError::XMin(config.x_min.clone()));
        }

        let grid_n = match config.grid_denominator {
            Some(n) => n.max(1),
            None => default_grid_denominator(config.piece_budget, &config.x_min),
        };
        let mut partition: Vec<Rational> = start
            .upper
            .breakpoints()
            .iter()
            .chain(start.lower.breakpoints())
            .cloned()
            .chain(std::iter::once(config.x_min.clone()))
            .chain(
                (1..grid_n)
                    .map(|k| Rational::frac(k as i64, grid_n as i64))
                    .filter(|x| *x >= config.x_min),
            )
            .collect();
        partition.sort();
        partition.dedup();
        let x_min_index = partition
            .iter()
            .position(|x| *x == config.x_min)
            .expect("x_min inserted");

        let lattice = Lattice::new(game, &partition, config.max_stake_fraction.as_ref())?;
        let partition_lattice = lattice.map_all(&partition);
        Ok(BoundsEngine {
            game: game.clone(),
            config,
            lattice,
            partition,
            partition_lattice,
            x_min_index,
            diagnostics,
            bounds: start,
        })
    }

    pub fn bounds(&self) -> &BoundsPair {
        &self.bounds
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn partition(&self) -> &[Rational] {
        &self.partition
    }

    /// One conservative update of the chosen bound.
    pub fn step(&mut self, which: Side) {
        let current = match which {
            Side::Upper => &self.bounds.upper,
            Side::Lower => &self.bounds.lower,
        };
        let bp = self.lattice.map_all(current.breakpoints());
        let cap = match which {
            Side::Upper => self.config.max_stake_fraction.as_ref(),
            Side::Lower => None,
        };
        let mut fresh = bellman_on_lattice(
            &self.game,
            &self.lattice,
            &bp,
            current.values(),
            current.closure() == Closure::Right,
            &self.partition_lattice,
            which,
            cap,
        );
        let closure = match which {
            Side::Upper => {
                // +inf below the truncation point
                fresh[..self.x_min_index].fill(f64::INFINITY);
                Closure::Left
            }
            Side::Lower => {
                // the piece ending at x_min carries the value at x_min; below
                // it that value is still valid by monotonicity
                let at = fresh[self.x_min_index - 1];
                fresh[..self.x_min_index].fill(at);
                Closure::Right
            }
        };
        let fresh = StepFunction::new(self.partition.clone(), fresh)
            .expect("partition is a valid breakpoint list")
            .with_closure(closure);
        let mode = match which {
            Side::Upper => Combine::Min,
            Side::Lower => Combine::Max,
        };
        let next = current
            .pointwise_combine(&fresh, mode)
            .monotone_repair(which.direction())
            .coarsen(self.config.piece_budget, which.direction());
        match which {
            Side::Upper => self.bounds.upper = next,
            Side::Lower => self.bounds.lower = next,
        }
    }

    /// Upper step then lower step.
    pub fn iteration(&mut self) -> IterationStats {
        let start = Instant::now();
        self.step(Side::Upper);
        self.step(Side::Lower);
        self.bounds.iteration_count += 1;
        self.stats(start.elapsed())
    }

    pub fn stats(&self, wall_time: Duration) -> IterationStats {
        IterationStats {
            iteration: self.bounds.iteration_count,
            pieces_lower: self.bounds.lower.pieces(),
            pieces_upper: self.bounds.upper.pieces(),
            max_gap: max_gap(&self.bounds),
            wall_time,
        }
    }
}

fn default_grid_denominator(budget: usize, x_min: &Rational) -> u64 {
    // leave room for the Kelly levels below the grid
    let levels = (1.0 / x_min.to_f64()).log2().ceil().max(0.0) as usize + 2;
    let room = budget.saturating_sub(levels).max(9) as u64;
    let mut n = 9u64;
    while n * 2 <= room {
        n *= 2;
    }
    n
}

/// Largest `upper - lower` over `[x_min, 1)`: both bounds are constant
/// between consecutive breakpoints, so breakpoints and midpoints suffice.
pub fn max_gap(bounds: &BoundsPair) -> f64 {
    let mut xs: Vec<&Rational> = bounds
        .upper
        .breakpoints()
        .iter()
        .chain(bounds.lower.breakpoints())
        .chain(std::iter::once(&bounds.x_min))
        .filter(|x| **x >= bounds.x_min)
        .collect();
    xs.sort();
    xs.dedup();
    let half = Rational::frac(1, 2);
    let gap = |x: &Rational| {
        let u = bounds.upper.eval(x).expect("x >= 0").to_f64();
        let l = bounds.lower.eval(x).expect("x >= 0").to_f64();
        u - l
    };
    xs.windows(2)
        .map(|w| gap(w[0]).max(gap(&((w[0] + w[1]) * &half))))
        .fold(0.0, f64::max)
}

/// One conservative update of `which`, computed on the partition the engine
/// would use for `config` refined by the breakpoints of `bounds`.
pub fn bellman_step(
    bounds: &BoundsPair,
    game: &GameSpec,
    which: Side,
    config: BoundsConfig,
) -> Result<BoundsPair, BoundsError> {
    let config = BoundsConfig {
        x_min: bounds.x_min.clone(),
        ..config
    };
    let mut engine = BoundsEngine::from_bounds(game, config, bounds.clone(), Vec::new())?;
    engine.step(which);
    Ok(engine.bounds)
}

/// Seeds, then `n` iterations; returns the stats of the seed (iteration 0)
/// followed by one entry per iteration.
pub fn iterate(
    game: &GameSpec,
    n: usize,
    config: BoundsConfig,
) -> Result<(BoundsPair, Vec<IterationStats>), BoundsError> {
    let mut engine = BoundsEngine::new(game, config)?;
    let mut stats = vec![engine.stats(Duration::ZERO)];
    for _ in 0..n {
        stats.push(engine.iteration());
    }
    Ok((engine.bounds.clone(), stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Grid abscissae: `x_min` followed by `i / grid_points` for
/// `i = 1 .. grid_points - 1`, so that dyadic reference points appear exactly.
pub fn curve_grid(x_min: &Rational, grid_points: usize) -> Result<Vec<Rational>, BoundsError> {
    if grid_points < 2 {
        return Err(BoundsError::Grid(grid_points));
    }
    let g = grid_points as i64;
    if Rational::frac(1, g) > *x_min {
        Ok(std::iter::once(x_min.clone())
            .chain((1..g).map(|i| Rational::frac(i, g)))
            .collect())
    } else {
        let step = (Rational::one() - x_min) / Rational::from_integer(g);
        Ok((0..g)
            .map(|i| x_min + &step * Rational::from_integer(i))
            .collect())
    }
}

pub fn export_curve(bounds: &BoundsPair, grid_points: usize) -> Result<Vec<CurveRow>, BoundsError> {
    curve_grid(&bounds.x_min, grid_points)?
        .into_iter()
        .map(|x| {
            Ok(CurveRow {
                x: x.to_f64(),
                lower: bounds.lower.eval(&x)?.to_f64(),
                upper: bounds.upper.eval(&x)?.to_f64(),
            })
        })
        .collect()
}

/// Decimal with `sig` significant digits, rounded toward `-∞` (`up = false`)
/// or `+∞` (`up = true`).
pub fn format_directed(v: f64, sig: usize, up: bool) -> String {
    if !v.is_finite() || v == 0.0 {
        return format_sig(v, sig);
    }
    let exact = Rational::from_f64(v).expect("finite");
    let mag = v.abs().log10().floor() as i32;
    let shift = sig as i32 - 1 - mag;
    let ten = Rational::from_integer(10);
    let scaled = &exact * ten.pow(shift).expect("nonzero");
    let mut n = scaled.floor();
    if up && Rational::from_bigints(n.clone(), BigInt::one()).expect("denominator one") != scaled {
        n += 1;
    }
    let r = Rational::from_bigints(n, BigInt::one()).expect("denominator one")
        * ten.pow(-shift).expect("nonzero");
    // the rounded value has at most `sig` significant digits; print exactly
    let decimals = shift.max(0) as usize;
    let mut s = decimal_string(&r, decimals);
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    s
}

fn decimal_string(r: &Rational, decimals: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), decimals);
    let scaled = (r * Rational::from_bigints(scale, BigInt::one()).expect("one")).floor();
    let neg = scaled < BigInt::from(0);
    let digits = if neg { -scaled } else { scaled }.to_string();
    let digits = format!("{digits:0>width$}", width = decimals + 1);
    let (int, frac) = digits.split_at(digits.len() - decimals);
    let sign = if neg { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Writes `x,lower,upper` rows; lower values are rounded down and upper
/// values up, so the printed curve remains a certified bracket.
pub fn write_csv<W: std::io::Write>(rows: &[CurveRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "lower", "upper"])?;
    for row in rows {
        w.write_record([
            format_sig(row.x, 12),
            format_directed(row.lower, 12, false),
            format_directed(row.upper, 12, true),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum CurveParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CurveRow>, CurveParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CurveParseError::Line {
            line,
            message: e.to_string(),
        })?;
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if i == 0 {
            if fields != ["x", "lower", "upper"] {
                return Err(CurveParseError::Line {
                    line,
                    message: "expected header x,lower,upper".into(),
                });
            }
            continue;
        }
        if fields.len() != 3 {
            return Err(CurveParseError::Line {
                line,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64, CurveParseError> {
            let v = if s == "inf" {
                f64::INFINITY
            } else {
                s.parse::<f64>().map_err(|_| CurveParseError::Line {
                    line,
                    message: format!("not a number: {s:?}"),
                })?
            };
            if v.is_nan() {
                return Err(CurveParseError::Line {
                    line,
                    message: "NaN".into(),
                });
            }
            Ok(v)
        };
        rows.push(CurveRow {
            x: num(fields[0])?,
            lower: num(fields[1])?,
            upper: num(fields[2])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub x: f64,
    pub score: f64,
}

/// Locates the strongest concave kink of the upper curve: the grid point
/// maximising `2 u(x_i) - u(x_{i-h}) - u(x_{i+h})` with `h = window / 2`.
/// A nonincreasing convex curve scores `<= 0` everywhere and yields `None`.
pub fn detect_bump(rows: &[CurveRow], window: usize) -> Result<Option<Bump>, BoundsError> {
    if window < 3 {
        return Err(BoundsError::Window(window));
    }
    let h = window / 2;
    let needed = 2 * h + 1;
    if rows.len() < needed {
        return Err(BoundsError::TooFewRows {
            rows: rows.len(),
            window,
            needed,
        });
    }
    let mut best: Option<Bump> = None;
    for i in h..rows.len() - h {
        let (a, m, c) = (rows[i - h].upper, rows[i].upper, rows[i + h].upper);
        if !(a.is_finite() && m.is_finite() && c.is_finite()) {
            continue;
        }
        let score = 2.0 * m - a - c;
        if score > 0.0 && best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Bump {
                x: rows[i].x,
                score,
            });
        }
    }
    Ok(best)
}
