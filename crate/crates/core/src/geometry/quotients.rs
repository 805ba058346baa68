#[cfg(test)]
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
#[cfg(test)]
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::models::{sym_point, SymmetricModel};
use crate::symbolic::Word;

/// Levels at which the formula is cross-checked against the raw quotient.
const CHECK_LEVELS: usize = 48;

/// `(phi_i(x) - phi_i(y_n)) / (x - y_n)` where `x` is coded by `x_bits`
/// and `y_n` flips its `n`-th symbol, both truncated after level `n + 1`.
pub fn defining_quotient(model: &SymmetricModel, i: u8, x_bits: &Word, n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::InvalidParameter("levels start at 1".into()));
    }
    let depth = n + 1;
    let x = pad(x_bits, depth);
    let mut flipped = x.bits().to_vec();
    flipped[n - 1] ^= 1;
    let y = Word::from_bits(flipped)?;
    let dx = sym_point(model, &x, depth) - sym_point(model, &y, depth);
    let (ix, iy) = (x.prepend(i), y.prepend(i));
    let dphi = sym_point(model, &ix, depth + 1) - sym_point(model, &iy, depth + 1);
    Ok(dphi / dx)
}

fn pad(w: &Word, len: usize) -> Word {
    if w.len() >= len {
        w.prefix(len)
    } else {
        w.concat(&Word::repeat(0, len - w.len()))
    }
}

/// `c_n (1 - c_{n+1}) / (1 - c_n)` for `n = 1..=n_max`. The first levels
/// are checked against the defining quotient at `x_bits` and at its
/// complement.
pub fn diff_quotients(model: &SymmetricModel, x_bits: &Word, n_max: usize) -> Result<Vec<BigRational>> {
    let one = BigRational::one();
    let mut out = Vec::with_capacity(n_max);
    let mut c = model.c(1);
    for n in 1..=n_max as u64 {
        let d = model.c(n + 1);
        out.push(&c * (&one - &d) / (&one - &c));
        c = d;
    }
    let other = Word::from_bits(pad(x_bits, CHECK_LEVELS + 1).bits().iter().map(|b| b ^ 1))?;
    for n in 1..=n_max.min(CHECK_LEVELS) {
        for bits in [x_bits, &other] {
            for i in 0..2u8 {
                let q = defining_quotient(model, i, bits, n)?;
                if q != out[n - 1] {
                    return Err(Error::PrecondFailed(format!(
                        "difference quotient at level {n} is {q}, expected {}",
                        out[n - 1]
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// `sup - inf` of `q[from..]`.
pub fn tail_spread(q: &[BigRational], from: usize) -> Option<BigRational> {
    let tail = q.get(from..)?;
    let max = tail.iter().max()?;
    let min = tail.iter().min()?;
    Some(max - min)
}

#[cfg(test)]
fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
