use std::fmt::Debug;

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::ratcore::{rat_to_f64, Rat};

/// Coefficient field for algebra and group computations: exact rationals or `f64`.
pub trait Scalar: Clone + Debug + PartialEq + Zero + One + Send + Sync + 'static {
    /// Whether arithmetic is exact (lattice membership is only decidable then).
    const EXACT: bool;

    fn from_rat(r: &Rat) -> Self;
    fn from_i64(n: i64) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    /// Largest integer not above `self`, as an `i64`.
    fn floor_i64(&self) -> i64;
    fn is_integer(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Nearest representable value of `v` (exact for rationals).
    fn from_f64_lossy(v: f64) -> Self;
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn from_i64(n: i64) -> Self {
        Rat::from_integer(n.into())
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn floor_i64(&self) -> i64 {
        let q = self.numer().div_floor(self.denom());
        i64::try_from(q).expect("coordinate too large for lattice reduction")
    }
    fn is_integer(&self) -> bool {
        Rat::is_integer(self)
    }
    fn to_f64(&self) -> f64 {
        rat_to_f64(self)
    }
    fn from_f64_lossy(v: f64) -> Self {
        Rat::from_float(v).expect("finite value")
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rat(r: &Rat) -> Self {
        rat_to_f64(r)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
    fn is_integer(&self) -> bool {
        self.fract() == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}
