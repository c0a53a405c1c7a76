use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::ext::ExtValue;
use super::rational::Rational;
use super::NumericsError;

/// Which side of the true function a bound sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// An upper bound: transformations may only raise values (or lower them
    /// where monotonicity justifies it).
    Up,
    /// A lower bound.
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Inf,
    Sup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Min,
    Max,
}

/// Which end of each piece is closed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Closure {
    /// Pieces `[b_i, b_{i+1})`; right-continuous.
    #[default]
    Left,
    /// Pieces `(b_i, b_{i+1}]`, the first one also containing 0;
    /// left-continuous.
    Right,
}

/// Piecewise-constant function on `[0, 1)`.
///
/// Piece `i` covers `[breakpoints[i], breakpoints[i + 1])` by default, or
/// `(breakpoints[i], breakpoints[i + 1]]` under [`Closure::Right`]. Values are
/// nonnegative `f64` where `f64::INFINITY` stands for `+∞`; every query at
/// `x >= 1` returns 0 (the target is absorbing).
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<Rational>,
    values: Vec<f64>,
    closure: Closure,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<Rational>, values: Vec<f64>) -> Result<Self, NumericsError> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(NumericsError::InvalidBreakpoints(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if !breakpoints[0].is_zero() || *breakpoints.last().unwrap() != Rational::one() {
            return Err(NumericsError::InvalidBreakpoints(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NumericsError::InvalidBreakpoints(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(NumericsError::InvalidValue);
        }
        Ok(StepFunction {
            breakpoints,
            values,
            closure: Closure::Left,
        })
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    /// Builds from `(piece start, value)` pairs; the first start must be 0.
    pub fn from_pieces(pieces: &[(Rational, f64)]) -> Result<Self, NumericsError> {
        let mut bps: Vec<Rational> = pieces.iter().map(|(b, _)| b.clone()).collect();
        bps.push(Rational::one());
        StepFunction::new(bps, pieces.iter().map(|(_, v)| *v).collect())
    }

    pub fn constant(value: f64) -> Result<Self, NumericsError> {
        StepFunction::new(vec![Rational::zero(), Rational::one()], vec![value])
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    /// Index of the piece containing `x`, for `0 <= x < 1`.
    fn piece_index(&self, x: &Rational) -> usize {
        match self.closure {
            // breakpoints[0] == 0 <= x, so the partition point is >= 1
            Closure::Left => self.breakpoints.partition_point(|b| b <= x) - 1,
            Closure::Right => self
                .breakpoints
                .partition_point(|b| b < x)
                .saturating_sub(1),
        }
    }

    pub fn eval(&self, x: &Rational) -> Result<ExtValue<f64>, NumericsError> {
        if x.is_negative() {
            return Err(NumericsError::NegativeArgument);
        }
        if *x >= Rational::one() {
            return Ok(ExtValue::Finite(0.0));
        }
        Ok(ExtValue::from_f64(self.values[self.piece_index(x)]))
    }

    /// Exact infimum or supremum over `[lo, hi)`; any part at or above 1
    /// contributes the value 0.
    pub fn bound_on_interval(
        &self,
        lo: &Rational,
        hi: &Rational,
        mode: Extremum,
    ) -> Result<ExtValue<f64>, NumericsError> {
        if lo.is_negative() {
            return Err(NumericsError::NegativeArgument);
        }
        if lo >= hi {
            return Err(NumericsError::EmptyInterval);
        }
        let one = Rational::one();
        let mut acc: Option<f64> = None;
        let mut fold = |v: f64| {
            acc = Some(match (acc, mode) {
                (None, _) => v,
                (Some(a), Extremum::Inf) => a.min(v),
                (Some(a), Extremum::Sup) => a.max(v),
            })
        };
        if *lo < one {
            let first = self.piece_index(lo);
            // last piece whose start is strictly below hi
            let last = self.breakpoints.partition_point(|b| b < hi) - 1;
            for v in &self.values[first..=last.min(self.values.len() - 1)] {
                fold(*v);
            }
        }
        if *hi > one {
            fold(0.0);
        }
        Ok(ExtValue::from_f64(acc.expect("nonempty interval")))
    }

    pub fn is_monotone_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    /// Merges adjacent pieces, smallest value gap first, until at most
    /// `max_pieces` remain. Merged pieces take the max (`Up`) or min (`Down`).
    pub fn coarsen(&self, max_pieces: usize, direction: Direction) -> StepFunction {
        let max_pieces = max_pieces.max(1);
        let n = self.values.len();
        if n <= max_pieces {
            return self.clone();
        }
        let merge = |a: f64, b: f64| match direction {
            Direction::Up => a.max(b),
            Direction::Down => a.min(b),
        };
        let gap = |a: f64, b: f64| {
            if a == b {
                0.0
            } else {
                (a - b).abs()
            }
        };

        // Doubly linked list over pieces; a heap entry (gap, left, version)
        // is stale once either endpoint has changed.
        let mut value = self.values.clone();
        let mut next: Vec<Option<usize>> = (0..n).map(|i| (i + 1 < n).then_some(i + 1)).collect();
        let mut prev: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
        let mut alive = vec![true; n];
        let mut version = vec![0u64; n];
        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            heap.push(Reverse(GapKey {
                gap: gap(value[i], value[i + 1]),
                left: i,
                left_version: 0,
                right_version: 0,
            }));
        }
        let mut count = n;
        while count > max_pieces {
            let Reverse(key) = heap.pop().expect("pairs remain while count > 1");
            let left = key.left;
            let Some(right) = next[left] else { continue };
            if !alive[left]
                || version[left] != key.left_version
                || version[right] != key.right_version
            {
                continue;
            }
            value[left] = merge(value[left], value[right]);
            alive[right] = false;
            next[left] = next[right];
            if let Some(r) = next[right] {
                prev[r] = Some(left);
            }
            version[left] += 1;
            count -= 1;
            if let Some(p) = prev[left] {
                heap.push(Reverse(GapKey {
                    gap: gap(value[p], value[left]),
                    left: p,
                    left_version: version[p],
                    right_version: version[left],
                }));
            }
            if let Some(r) = next[left] {
                heap.push(Reverse(GapKey {
                    gap: gap(value[left], value[r]),
                    left,
                    left_version: version[left],
                    right_version: version[r],
                }));
            }
        }

        let mut bps = Vec::with_capacity(count + 1);
        let mut vals = Vec::with_capacity(count);
        for i in (0..n).filter(|&i| alive[i]) {
            bps.push(self.breakpoints[i].clone());
            vals.push(value[i]);
        }
        bps.push(Rational::one());
        StepFunction {
            breakpoints: bps,
            values: vals,
            closure: self.closure,
        }
    }

    /// Makes the function nonincreasing: running minimum from the left for
    /// upper bounds, running maximum from the right for lower bounds.
    pub fn monotone_repair(&self, direction: Direction) -> StepFunction {
        let mut values = self.values.clone();
        match direction {
            Direction::Up => {
                for i in 1..values.len() {
                    values[i] = values[i].min(values[i - 1]);
                }
            }
            Direction::Down => {
                for i in (0..values.len().saturating_sub(1)).rev() {
                    values[i] = values[i].max(values[i + 1]);
                }
            }
        }
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values,
            closure: self.closure,
        }
    }

    /// Exact pointwise min or max on the union of both breakpoint sets.
    /// Both functions must share the same closure.
    pub fn pointwise_combine(&self, other: &StepFunction, mode: Combine) -> StepFunction {
        assert_eq!(self.closure, other.closure, "mixed piece closures");
        let (mut i, mut j) = (0usize, 0usize);
        let mut bps = vec![Rational::zero()];
        let mut vals = Vec::new();
        loop {
            let v = match mode {
                Combine::Min => self.values[i].min(other.values[j]),
                Combine::Max => self.values[i].max(other.values[j]),
            };
            vals.push(v);
            let a = &self.breakpoints[i + 1];
            let b = &other.breakpoints[j + 1];
            match a.cmp(b) {
                Ordering::Less => {
                    bps.push(a.clone());
                    i += 1;
                }
                Ordering::Greater => {
                    bps.push(b.clone());
                    j += 1;
                }
                Ordering::Equal => {
                    bps.push(a.clone());
                    i += 1;
                    j += 1;
                }
            }
            if i == self.values.len() || j == other.values.len() {
                break;
            }
        }
        StepFunction {
            breakpoints: bps,
            values: vals,
            closure: self.closure,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct GapKey {
    gap: f64,
    left: usize,
    left_version: u64,
    right_version: u64,
}

impl PartialEq for GapKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for GapKey {}

impl PartialOrd for GapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gap
            .total_cmp(&other.gap)
            .then(self.left.cmp(&other.left))
            .then(self.left_version.cmp(&other.left_version))
            .then(self.right_version.cmp(&other.right_version))
    }
}
