use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::real::{ln_interval, Interval};

/// `-x ln x` with `0 ln 0 = 0`.
fn xlnx_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `H(p) = -p ln p - (1-p) ln(1-p)` in double precision.
pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("entropy needs 0 <= p <= 1, got {p}")));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: f64) -> f64 {
    xlnx_neg(p) + xlnx_neg(1.0 - p)
}

/// `-r ln r` enclosed at `prec` bits, for `r = a/b` with 64-bit parts.
fn xlnx_neg_rational(r: &BigRational, prec: u32) -> Result<Interval> {
    if r.is_zero() || r.is_one() {
        return Ok(Interval::zero());
    }
    let (a, b) = (r.numer().to_u64(), r.denom().to_u64());
    let (Some(a), Some(b)) = (a, b) else {
        return Err(Error::DomainError(format!("{r} needs numerator and denominator below 2^64")));
    };
    let ln = ln_interval(a, prec).sub(&ln_interval(b, prec), prec);
    Ok(ln.scale_rational(&-r.clone(), prec))
}

/// Rigorous enclosure of `H(p)` for rational `p` at `prec` bits.
pub fn entropy_enclosure(p: &BigRational, prec: u32) -> Result<Interval> {
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(Error::DomainError(format!("entropy needs 0 <= p <= 1, got {p}")));
    }
    let q = BigRational::one() - p;
    Ok(xlnx_neg_rational(p, prec)?.add(&xlnx_neg_rational(&q, prec)?, prec))
}
