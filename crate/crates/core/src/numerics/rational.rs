use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumericsError;

/// Exact fraction in lowest terms with a positive denominator.
///
/// Used for bankrolls, stakes, probabilities and exact hitting times.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self, NumericsError> {
        if denom == 0 {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom.into())))
    }

    /// Panicking constructor for literals known to be valid.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Self::new(numer, denom).expect("nonzero denominator")
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Result<Self, NumericsError> {
        if denom.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, NumericsError> {
        if rhs.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Rational, NumericsError> {
        Rational::one().checked_div(self)
    }

    pub fn pow(&self, exp: i32) -> Result<Rational, NumericsError> {
        if exp < 0 && self.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(num_traits::Pow::pow(&self.0, exp)))
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn min(self, other: Rational) -> Rational {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(v: f64) -> Option<Rational> {
        BigRational::from_float(v).map(Rational)
    }

    /// Largest `f64` that is `<= self`.
    pub fn to_f64_down(&self) -> f64 {
        let near = self.to_f64();
        match Rational::from_f64(near) {
            Some(r) if r > *self => near.next_down(),
            _ => near,
        }
    }

    /// Smallest `f64` that is `>= self`.
    pub fn to_f64_up(&self) -> f64 {
        let near = self.to_f64();
        match Rational::from_f64(near) {
            Some(r) if r < *self => near.next_up(),
            _ => near,
        }
    }

    /// `Some(k)` when `self == base^k` for an integer `k` (either sign).
    pub fn integer_log(&self, base: &Rational) -> Option<i32> {
        if !self.is_positive() || !base.is_positive() || *base == Rational::one() {
            return None;
        }
        let (big, step) = if *base > Rational::one() {
            (base.clone(), 1)
        } else {
            (base.recip().ok()?, -1)
        };
        let mut k = 0i32;
        let mut cur = self.clone();
        while cur > Rational::one() {
            cur = cur.checked_div(&big).ok()?;
            k += step;
        }
        while cur < Rational::one() {
            cur = &cur * &big;
            k -= step;
        }
        (cur == Rational::one()).then_some(k)
    }

    /// Renders with `sig` significant digits, for human-facing output.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        format_sig(self.to_f64(), sig)
    }

    pub(crate) fn inner(&self) -> &BigRational {
        &self.0
    }
}

/// Formats `v` with `sig` significant digits, trailing zeros trimmed.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `n`, `n/d`, and finite decimals such as `0.35` or `-1.5`.
impl FromStr for Rational {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::Parse(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            return Rational::from_bigints(n, d);
        }
        if let Some((int, frac)) = t.split_once('.') {
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if frac.is_empty() && int_digits.is_empty()
                || !frac.chars().all(|c| c.is_ascii_digit())
                || !int_digits.chars().all(|c| c.is_ascii_digit())
            {
                return Err(bad());
            }
            let digits = format!("{int_digits}{frac}");
            let mut n: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().map_err(|_| bad())?
            };
            if neg {
                n = -n;
            }
            let d = num_traits::pow(BigInt::from(10), frac.len());
            return Rational::from_bigints(n, d);
        }
        let n: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Rational(BigRational::from_integer(n)))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($tr::$method(&self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($tr::$method(self.0, rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational($tr::$method(self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($tr::$method(&self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

/// Panics on a zero divisor; use [`Rational::checked_div`] for fallible division.
impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// Least common multiple of the denominators, as used to put breakpoints on
/// a shared integer lattice.
pub(crate) fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// `value * scale` when that is an integer.
pub(crate) fn scaled_integer(value: &Rational, scale: &BigInt) -> Option<BigInt> {
    let prod = value.inner() * BigRational::from_integer(scale.clone());
    prod.is_integer().then(|| prod.to_integer())
}
