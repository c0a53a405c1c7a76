//! Exact rationals, extended values and step functions.

mod ext;
mod rational;
mod step;

pub use ext::{add_down, add_up, mul_down, mul_up, ExtValue};
pub use rational::{format_sig, Rational};
pub(crate) use rational::{lcm_denominators, scaled_integer};
pub use step::{Closure, Combine, Direction, Extremum, StepFunction};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {0:?} as a rational")]
    Parse(String),
    #[error("negative argument")]
    NegativeArgument,
    #[error("empty interval")]
    EmptyInterval,
    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),
    #[error("step values must be nonnegative and not NaN")]
    InvalidValue,
}
