//! Exact scalar type and the integer fast path shared by the solvers.
//!
//! All geometry is carried in [`Scalar`] (arbitrary-precision rationals).
//! The combinatorial solvers are generic over [`Exact`], so a table of
//! rationals with a common denominator can be rescaled to `i128` and solved
//! without allocation, then converted back.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

pub type Scalar = BigRational;

/// Largest magnitude admitted on the `i128` fast path. Leaves room for sums of
/// a few million terms and pairwise differences without overflow.
pub(crate) const FAST_PATH_LIMIT: i128 = 1 << 80;

/// Ordered ring element usable by the exact solvers.
pub trait Exact: Clone + Ord + Signed + Send + Sync + Debug {
    fn to_scalar(&self) -> Scalar;
}

impl Exact for i128 {
    fn to_scalar(&self) -> Scalar {
        Scalar::from_integer(BigInt::from(*self))
    }
}

impl Exact for BigRational {
    fn to_scalar(&self) -> Scalar {
        self.clone()
    }
}

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"7"`, `"-3/4"` or `" 10 / 6 "` into a reduced rational.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| invalid(format!("bad rational {s:?}")))?;
    let den = BigInt::from_str(den).map_err(|_| invalid(format!("bad rational {s:?}")))?;
    if den.is_zero() {
        return Err(invalid(format!("zero denominator in {s:?}")));
    }
    Ok(Scalar::new(num, den))
}

/// Canonical text form: `"p"` for integers, `"p/q"` with `q > 0` otherwise.
pub fn format_scalar(v: &Scalar) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn to_f64(v: &Scalar) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Rescales a set of rationals by the lcm of their denominators.
///
/// Returns the common scale `D` and the integers `v * D`, or `None` when any
/// scaled value leaves the fast-path range.
pub fn scale_to_i128<'a>(
    values: impl IntoIterator<Item = &'a Scalar> + Clone,
) -> Option<(BigInt, Vec<i128>)> {
    let mut scale = BigInt::one();
    for v in values.clone() {
        scale = scale.lcm(v.denom());
    }
    let limit = BigInt::from(FAST_PATH_LIMIT);
    let mut out = Vec::new();
    if scale.is_one() {
        let out = values.into_iter().map(|v| v.numer().to_i128().filter(|x| x.abs() <= FAST_PATH_LIMIT));
        return out.collect::<Option<Vec<_>>>().map(|ints| (scale, ints));
    }
    for v in values {
        let scaled = v.numer() * (&scale / v.denom());
        if scaled.abs() > limit {
            return None;
        }
        out.push(scaled.to_i128()?);
    }
    Some((scale, out))
}

/// Divides a value produced on the scaled fast path back into a rational.
pub fn unscale(v: &i128, scale: &BigInt) -> Scalar {
    Scalar::new(BigInt::from(*v), scale.clone())
}
