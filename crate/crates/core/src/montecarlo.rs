//! Simulation of fixed policies, for cross-checking exact values and bounds.

use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameError, GameSpec};
use crate::numerics::Rational;
use crate::strategies::{Policy, PolicyError};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("episodes and max_steps must be at least 1")]
    Counts,
    #[error("starting bankroll must be positive, got {0}")]
    Start(Rational),
    #[error("cannot sample win probability {0}")]
    Probability(Rational),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub master_seed: u64,
    pub episodes: u64,
    pub max_steps: u64,
    pub x0: Rational,
    pub policy: Policy,
    pub game: GameSpec,
}

impl SimConfig {
    pub fn new(
        game: GameSpec,
        policy: Policy,
        x0: Rational,
        episodes: u64,
        master_seed: u64,
    ) -> Self {
        SimConfig {
            master_seed,
            episodes,
            max_steps: DEFAULT_MAX_STEPS,
            x0,
            policy,
            game,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Mean over completed episodes (NaN when none completed).
    pub mean_rounds: f64,
    pub std_error: f64,
    pub completed: u64,
    /// Episodes that hit `max_steps` or were ruined.
    pub truncated: u64,
}

impl SimEstimate {
    /// Truncation drops the longest episodes, biasing the mean downwards.
    pub fn is_biased_low(&self) -> bool {
        self.truncated > 0
    }

    /// `(mean - exact) / std_error`.
    pub fn z_score(&self, exact: f64) -> f64 {
        (self.mean_rounds - exact) / self.std_error
    }
}

/// Win draws: the ratio itself when it fits in 32 bits, else its `f64`.
fn coin(game: &GameSpec) -> Result<Bernoulli, SimError> {
    let p = game.p_win();
    let fit = |v: &num_bigint::BigInt| u32::try_from(v).ok();
    let coin = match (fit(p.numer()), fit(p.denom())) {
        (Some(num), Some(den)) => Bernoulli::from_ratio(num, den),
        _ => Bernoulli::new(p.to_f64()),
    };
    coin.map_err(|_| SimError::Probability(p.clone()))
}

/// Plays one episode; `Some(rounds)` on reaching the target, `None` when
/// truncated at `max_steps` or ruined.
pub fn run_episode<R: Rng + ?Sized>(
    game: &GameSpec,
    policy: &Policy,
    x0: &Rational,
    rng: &mut R,
    max_steps: u64,
) -> Result<Option<u64>, SimError> {
    if !x0.is_positive() {
        return Err(SimError::Start(x0.clone()));
    }
    let coin = coin(game)?;
    let one = Rational::one();
    let mut x = x0.clone();
    for step in 0..max_steps {
        if x >= one {
            return Ok(Some(step));
        }
        if x.is_zero() {
            return Ok(None);
        }
        let stake = policy.stake(game, &x)?;
        x = game.apply_bet(&x, &stake, coin.sample(rng))?;
    }
    Ok((x >= one).then_some(max_steps))
}

fn episode_rng(master_seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(episode);
    rng
}

/// Runs all episodes in parallel; each episode draws from its own stream of
/// the master seed, so results do not depend on scheduling.
pub fn estimate(config: &SimConfig) -> Result<SimEstimate, SimError> {
    if config.episodes == 0 || config.max_steps == 0 {
        return Err(SimError::Counts);
    }
    if !config.x0.is_positive() {
        return Err(SimError::Start(config.x0.clone()));
    }
    config.policy.validate(&config.game)?;
    coin(&config.game)?;

    let (completed, sum, sum_sq) = (0..config.episodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = episode_rng(config.master_seed, i);
            run_episode(
                &config.game,
                &config.policy,
                &config.x0,
                &mut rng,
                config.max_steps,
            )
            .map(|r| {
                r.map_or((0u64, 0u128, 0u128), |n| {
                    (1, n as u128, (n as u128) * (n as u128))
                })
            })
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;

    let (mean, se) = if completed == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let n = completed as f64;
        let mean = sum as f64 / n;
        let var = if completed > 1 {
            // exact integer numerator: n * sum_sq - sum^2
            let num = completed as u128 * sum_sq - sum * sum;
            num as f64 / (n * (n - 1.0))
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    Ok(SimEstimate {
        mean_rounds: mean,
        std_error: se,
        completed,
        truncated: config.episodes - completed,
    })
}
