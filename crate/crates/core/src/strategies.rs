//! Betting policies: Kelly, bet-to-target, threshold and explicit tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::game::{GameError, GameSpec};
use crate::numerics::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("bankroll {0} is outside (0, 1)")]
    Bankroll(Rational),
    #[error("target unreachable in one round from bankroll {x}: needs stake {needed}")]
    TargetUnreachable {
        x: Box<Rational>,
        needed: Box<Rational>,
    },
    #[error("threshold {xi0} must lie in ({lower}, 1]")]
    Threshold {
        xi0: Box<Rational>,
        lower: Box<Rational>,
    },
    #[error("kelly cap {0} must lie in (0, 1)")]
    Cap(Rational),
    #[error("table stake {stake} at {state} is outside [0, state]")]
    TableEntry {
        state: Box<Rational>,
        stake: Box<Rational>,
    },
    #[error("cannot parse policy {0:?}")]
    Parse(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, PartialEq, Eq)]
pub enum Policy {
    /// Stake the Kelly fraction, optionally capped.
    Kelly { max_fraction: Option<Rational> },
    /// Stake exactly enough that a win lands on the target.
    BetToTarget,
    /// Bet to the target at or above `xi0`, Kelly below it.
    Threshold { xi0: Rational },
    /// Exact-state overrides on top of a fallback policy.
    Table {
        entries: BTreeMap<Rational, Rational>,
        fallback: Box<Policy>,
    },
}

/// How a policy behaves at a given bankroll, as seen by the exact evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Kelly,
    Explicit,
}

impl Policy {
    pub fn kelly() -> Policy {
        Policy::Kelly { max_fraction: None }
    }

    pub fn threshold(xi0: Rational) -> Policy {
        Policy::Threshold { xi0 }
    }

    pub fn table(
        entries: impl IntoIterator<Item = (Rational, Rational)>,
        fallback: Policy,
    ) -> Result<Policy, PolicyError> {
        let entries: BTreeMap<_, _> = entries.into_iter().collect();
        for (state, stake) in &entries {
            if !state.is_positive() || stake.is_negative() || stake > state {
                return Err(PolicyError::TableEntry {
                    state: Box::new(state.clone()),
                    stake: Box::new(stake.clone()),
                });
            }
        }
        Ok(Policy::Table {
            entries,
            fallback: Box::new(fallback),
        })
    }

    /// Checks the policy against `game`; returns non-fatal diagnostics.
    pub fn validate(&self, game: &GameSpec) -> Result<Vec<String>, PolicyError> {
        match self {
            Policy::Kelly { max_fraction } => {
                game.kelly_fraction()?;
                if let Some(cap) = max_fraction {
                    if !cap.is_positive() || *cap >= Rational::one() {
                        return Err(PolicyError::Cap(cap.clone()));
                    }
                }
                Ok(Vec::new())
            }
            Policy::BetToTarget => Ok(Vec::new()),
            Policy::Threshold { xi0 } => {
                game.kelly_fraction()?;
                let lower = (Rational::one() + game.b_odds()).recip().expect("b > 0");
                if *xi0 <= lower || *xi0 > Rational::one() {
                    return Err(PolicyError::Threshold {
                        xi0: Box::new(xi0.clone()),
                        lower: Box::new(lower),
                    });
                }
                let mut warnings = Vec::new();
                if game.is_example() && *xi0 > Rational::frac(1, 2) {
                    warnings.push(format!(
                        "threshold {xi0} exceeds 1/2; an optimal strategy for this game bets to the target from 1/2 upward"
                    ));
                }
                Ok(warnings)
            }
            Policy::Table { fallback, .. } => fallback.validate(game),
        }
    }

    pub fn stake(&self, game: &GameSpec, x: &Rational) -> Result<Rational, PolicyError> {
        if !x.is_positive() || *x >= Rational::one() {
            return Err(PolicyError::Bankroll(x.clone()));
        }
        match self {
            Policy::Kelly { max_fraction } => {
                let mut f = game.kelly_fraction()?;
                if let Some(cap) = max_fraction {
                    f = f.min(cap.clone());
                }
                Ok(f * x)
            }
            Policy::BetToTarget => {
                let needed = (Rational::one() - x) / game.b_odds().clone();
                if needed > *x {
                    return Err(PolicyError::TargetUnreachable {
                        x: Box::new(x.clone()),
                        needed: Box::new(needed),
                    });
                }
                Ok(needed)
            }
            Policy::Threshold { xi0 } => {
                if x >= xi0 {
                    Policy::BetToTarget.stake(game, x)
                } else {
                    Policy::kelly().stake(game, x)
                }
            }
            Policy::Table { entries, fallback } => match entries.get(x) {
                Some(s) => Ok(s.clone()),
                None => fallback.stake(game, x),
            },
        }
    }

    /// Whether the stake at `x` is the uncapped Kelly stake, produced by the
    /// Kelly rule rather than an explicit entry.
    pub fn regime(&self, game: &GameSpec, x: &Rational) -> Regime {
        match self {
            Policy::Kelly { max_fraction: None } => Regime::Kelly,
            Policy::Kelly {
                max_fraction: Some(cap),
            } => match game.kelly_fraction() {
                Ok(f) if *cap >= f => Regime::Kelly,
                _ => Regime::Explicit,
            },
            Policy::BetToTarget => Regime::Explicit,
            Policy::Threshold { xi0 } => {
                if x < xi0 {
                    Regime::Kelly
                } else {
                    Regime::Explicit
                }
            }
            Policy::Table { entries, fallback } => {
                if entries.contains_key(x) {
                    Regime::Explicit
                } else {
                    fallback.regime(game, x)
                }
            }
        }
    }

    /// True when every state reachable from `x` by Kelly losses alone
    /// (`x * down^j`, `j >= 1`) is in the Kelly regime. `down` is the Kelly
    /// loss multiplier.
    pub fn kelly_below(&self, game: &GameSpec, x: &Rational, down: &Rational) -> bool {
        match self {
            Policy::Kelly { .. } => self.regime(game, x) == Regime::Kelly,
            Policy::BetToTarget => false,
            Policy::Threshold { xi0 } => x * down < *xi0,
            Policy::Table { entries, fallback } => {
                let shadowed = entries.keys().any(|k| {
                    k < x
                        && k.checked_div(x)
                            .ok()
                            .and_then(|ratio| ratio.integer_log(down))
                            .is_some_and(|j| j >= 1)
                });
                !shadowed && fallback.kelly_below(game, x, down)
            }
        }
    }
}

/// The strategy that beats every threshold strategy from 7/18 in the
/// example game: stake 5/36 at 7/18 (win lands on 2/3, loss on 1/4), bet to
/// the target at 2/3 and 1/2, Kelly elsewhere.
pub fn counterexample_policy() -> Policy {
    Policy::table(
        [
            (Rational::frac(7, 18), Rational::frac(5, 36)),
            (Rational::frac(2, 3), Rational::frac(1, 6)),
            (Rational::frac(1, 2), Rational::frac(1, 4)),
        ],
        Policy::kelly(),
    )
    .expect("valid table")
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Kelly { max_fraction: None } => f.write_str("kelly"),
            Policy::Kelly {
                max_fraction: Some(c),
            } => write!(f, "kelly:cap={c}"),
            Policy::BetToTarget => f.write_str("bet-to-target"),
            Policy::Threshold { xi0 } => write!(f, "threshold:{xi0}"),
            Policy::Table { entries, fallback } => {
                f.write_str("table:")?;
                for (i, (x, s)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}={s}")?;
                }
                write!(f, ";fallback={fallback}")
            }
        }
    }
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Policy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::Parse(s.to_string());
        let t = s.trim();
        let rat = |v: &str| v.trim().parse::<Rational>().map_err(|_| bad());
        if t == "kelly" {
            return Ok(Policy::kelly());
        }
        if t == "bet-to-target" {
            return Ok(Policy::BetToTarget);
        }
        if let Some(rest) = t.strip_prefix("kelly:cap=") {
            let cap = rat(rest)?;
            if !cap.is_positive() || cap >= Rational::one() {
                return Err(PolicyError::Cap(cap));
            }
            return Ok(Policy::Kelly {
                max_fraction: Some(cap),
            });
        }
        if let Some(rest) = t.strip_prefix("threshold:") {
            return Ok(Policy::threshold(rat(rest)?));
        }
        if let Some(rest) = t.strip_prefix("table:") {
            let (list, fallback) = rest.split_once(";fallback=").ok_or_else(bad)?;
            let mut entries = Vec::new();
            for item in list.split(',').filter(|i| !i.trim().is_empty()) {
                let (x, stake) = item.split_once('=').ok_or_else(bad)?;
                entries.push((rat(x)?, rat(stake)?));
            }
            return Policy::table(entries, fallback.parse()?);
        }
        Err(bad())
    }
}
