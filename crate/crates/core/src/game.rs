//! The repeated two-outcome betting game.
//!
//! Bankrolls are fractions of the target, which is fixed at 1. Staking `s`
//! from bankroll `x` moves to `x + b*s` with probability `p` and to `x - s`
//! otherwise.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::numerics::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("win probability must lie strictly between 0 and 1, got {0}")]
    Probability(Rational),
    #[error("payoff odds must be positive, got {0}")]
    Odds(Rational),
    #[error("game p={p} b={b} is not favorable")]
    Unfavorable { p: Box<Rational>, b: Box<Rational> },
    #[error("stake {stake} is not within [0, {bankroll}]")]
    Stake {
        stake: Box<Rational>,
        bankroll: Box<Rational>,
    },
    #[error("stake fraction must be nonnegative, got {0}")]
    Fraction(Rational),
    #[error("cannot parse game {0:?}; expected \"p=<rational> b=<rational>\"")]
    Parse(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GameSpec {
    p_win: Rational,
    b_odds: Rational,
}

impl GameSpec {
    pub fn new(p_win: Rational, b_odds: Rational) -> Result<Self, GameError> {
        if !p_win.is_positive() || p_win >= Rational::one() {
            return Err(GameError::Probability(p_win));
        }
        if !b_odds.is_positive() {
            return Err(GameError::Odds(b_odds));
        }
        Ok(GameSpec { p_win, b_odds })
    }

    /// Heads with probability 2/3, paid at 2:1.
    pub fn example() -> Self {
        GameSpec {
            p_win: Rational::frac(2, 3),
            b_odds: Rational::from_integer(2),
        }
    }

    pub fn p_win(&self) -> &Rational {
        &self.p_win
    }

    pub fn p_loss(&self) -> Rational {
        Rational::one() - &self.p_win
    }

    pub fn b_odds(&self) -> &Rational {
        &self.b_odds
    }

    pub fn is_example(&self) -> bool {
        *self == GameSpec::example()
    }

    /// Positive expected value per unit staked: `p(b + 1) > 1`.
    pub fn is_favorable(&self) -> bool {
        &self.p_win * (&self.b_odds + Rational::one()) > Rational::one()
    }

    pub fn apply_bet(
        &self,
        x: &Rational,
        stake: &Rational,
        won: bool,
    ) -> Result<Rational, GameError> {
        if stake.is_negative() || stake > x {
            return Err(GameError::Stake {
                stake: Box::new(stake.clone()),
                bankroll: Box::new(x.clone()),
            });
        }
        Ok(if won {
            x + &self.b_odds * stake
        } else {
            x - stake
        })
    }

    /// `f* = p - (1 - p) / b`, the stake fraction maximising expected log
    /// bankroll.
    pub fn kelly_fraction(&self) -> Result<Rational, GameError> {
        if !self.is_favorable() {
            return Err(GameError::Unfavorable {
                p: Box::new(self.p_win.clone()),
                b: Box::new(self.b_odds.clone()),
            });
        }
        Ok(&self.p_win - &self.p_loss() / &self.b_odds)
    }

    /// Bankroll multipliers `(1 + b f*, 1 - f*)` after a Kelly win or loss.
    pub fn kelly_multipliers(&self) -> Result<(Rational, Rational), GameError> {
        let f = self.kelly_fraction()?;
        Ok((Rational::one() + &self.b_odds * &f, Rational::one() - f))
    }

    /// True when a Kelly win and a Kelly loss cancel exactly, so that the
    /// log bankroll under Kelly betting is a ±1 walk on a geometric lattice.
    pub fn reciprocal_kelly(&self) -> bool {
        self.kelly_multipliers()
            .map(|(up, down)| up * down == Rational::one())
            .unwrap_or(false)
    }

    /// Expected one-round change of `log2(bankroll)` when staking fraction
    /// `f`; `-∞` once a loss would empty the bankroll.
    pub fn log2_drift(&self, f: &Rational) -> Result<f64, GameError> {
        if f.is_negative() {
            return Err(GameError::Fraction(f.clone()));
        }
        if *f >= Rational::one() {
            return Ok(f64::NEG_INFINITY);
        }
        let p = self.p_win.to_f64();
        let win = (Rational::one() + &self.b_odds * f).to_f64().log2();
        let loss = (Rational::one() - f).to_f64().log2();
        Ok(p * win + (1.0 - p) * loss)
    }

    /// Growth rate `g*` of `log2(bankroll)` under Kelly betting.
    pub fn kelly_growth(&self) -> Result<f64, GameError> {
        self.log2_drift(&self.kelly_fraction()?)
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} b={}", self.p_win, self.b_odds)
    }
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GameSpec {
    type Err = GameError;

    /// Parses `"p=<rational> b=<rational>"`, fields in either order.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GameError::Parse(s.to_string());
        let (mut p, mut b) = (None, None);
        for tok in s.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(bad)?;
            let val: Rational = val.parse().map_err(|_| bad())?;
            let slot = match key {
                "p" => &mut p,
                "b" => &mut b,
                _ => return Err(bad()),
            };
            if slot.replace(val).is_some() {
                return Err(bad());
            }
        }
        GameSpec::new(p.ok_or_else(bad)?, b.ok_or_else(bad)?)
    }
}
