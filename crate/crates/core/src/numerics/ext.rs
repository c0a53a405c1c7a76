use std::cmp::Ordering;
use std::fmt;

use super::rational::{format_sig, Rational};

/// A nonnegative quantity that may be `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtValue<T> {
    Finite(T),
    Infinity,
}

impl<T> ExtValue<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtValue::Infinity)
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            ExtValue::Finite(v) => Some(v),
            ExtValue::Infinity => None,
        }
    }
}

impl<T: PartialOrd> PartialOrd for ExtValue<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtValue::Finite(a), ExtValue::Finite(b)) => a.partial_cmp(b),
            (ExtValue::Finite(_), ExtValue::Infinity) => Some(Ordering::Less),
            (ExtValue::Infinity, ExtValue::Finite(_)) => Some(Ordering::Greater),
            (ExtValue::Infinity, ExtValue::Infinity) => Some(Ordering::Equal),
        }
    }
}

impl<T: Clone + PartialOrd> ExtValue<T> {
    pub fn min(&self, other: &Self) -> Self {
        if other < self {
            other.clone()
        } else {
            self.clone()
        }
    }
}

impl ExtValue<Rational> {
    pub fn zero() -> Self {
        ExtValue::Finite(Rational::zero())
    }

    /// Adds; infinity absorbs.
    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (ExtValue::Finite(a), ExtValue::Finite(b)) => ExtValue::Finite(a + b),
            _ => ExtValue::Infinity,
        }
    }

    /// Scales by a positive constant; infinity absorbs.
    pub fn scale(&self, k: &Rational) -> Self {
        debug_assert!(k.is_positive());
        match self {
            ExtValue::Finite(a) => ExtValue::Finite(a * k),
            ExtValue::Infinity => ExtValue::Infinity,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtValue::Finite(r) => r.to_f64(),
            ExtValue::Infinity => f64::INFINITY,
        }
    }
}

impl ExtValue<f64> {
    /// Maps `f64::INFINITY` to [`ExtValue::Infinity`].
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtValue::Infinity
        } else {
            ExtValue::Finite(v)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtValue::Finite(v) => *v,
            ExtValue::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for ExtValue<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtValue::Finite(r) => write!(f, "{r}"),
            ExtValue::Infinity => f.write_str("inf"),
        }
    }
}

impl fmt::Display for ExtValue<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_sig(self.to_f64(), 12))
    }
}

// Directed-rounding arithmetic on nonnegative f64 (with +inf). Round-to-nearest
// results are nudged one ulp only when the error-free residual shows the
// rounded result fell on the wrong side.

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}
