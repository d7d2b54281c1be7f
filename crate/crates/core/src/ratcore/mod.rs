//! Exact rational scalars, matrices and polynomials.
//!
//! Everything symbolic in the crate sits on top of [`Rat`] (an
//! arbitrary-precision fraction kept in lowest terms). Floating point only
//! enters through [`roots_numeric`] and the explicit `to_f64` conversions.

mod factor;
mod matrix;
mod poly;
mod roots;
mod snf;

pub use factor::{factor_over_q, is_cyclotomic, Factorization, FACTOR_DEGREE_LIMIT};
pub use matrix::{IntMatrix, RatMatrix};
pub use poly::RatPoly;
pub use roots::{roots_numeric, DEFAULT_ROOT_TOL};
pub use snf::{smith_normal_form, SmithForm};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always normalized with a positive denominator.
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix has non-integer entries")]
    NotIntegral,
    #[error("polynomial of degree {degree} exceeds the factorization limit {limit}")]
    DegreeLimit { degree: usize, limit: usize },
    #[error("the zero polynomial has no factorization")]
    ZeroPolynomial,
    #[error("root finder did not converge (worst residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p"`, `"-p/q"` or a plain decimal such as `"0.25"`.
pub fn parse_rat(text: &str) -> Result<Rat, RatError> {
    let s = text.trim();
    let err = || RatError::Parse(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        let mut n: BigInt = digits.parse().map_err(|_| err())?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac_part.len());
        return Ok(Rat::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rat::from_integer(n))
}

/// Canonical text form used by the file format: `"p"` or `"p/q"`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fallback for magnitudes outside the f64 range.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub(crate) fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    use num_integer::Integer;
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}
