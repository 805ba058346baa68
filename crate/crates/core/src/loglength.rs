//! Exact lengths of the form `prod p^(e_p)` with rational exponents over
//! primes.
//!
//! Every integer base is factored before it enters a [`LogLength`], so two
//! values are equal as reals exactly when their exponent maps coincide.
//! Ordering is decided by [`ll_cmp`], which evaluates `sum e_p ln p` with
//! rigorous enclosures at doubling precision until the sign is certain.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::primes;
use crate::real::{self, Dyadic, Interval, Round};

/// Starting precision of the interval comparison.
pub const CMP_START_BITS: u32 = 128;

/// `exp(sum_p e_p ln p)`, stored as a sparse map from prime to nonzero
/// rational exponent.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LogLength {
    exps: BTreeMap<u64, BigRational>,
}

impl LogLength {
    /// The length 1.
    pub fn one() -> Self {
        LogLength::default()
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// `base^e` for an integer base `>= 1`.
    pub fn int_pow(base: u64, e: &BigRational) -> Self {
        assert!(base >= 1, "base must be positive");
        let mut out = LogLength::one();
        if e.is_zero() {
            return out;
        }
        for (p, k) in primes::factor(base) {
            out.add_exp(p, &(e * BigInt::from(k)));
        }
        out
    }

    /// `base^k` for an integer exponent.
    pub fn int_pow_i(base: u64, k: i64) -> Self {
        LogLength::int_pow(base, &BigRational::from_integer(BigInt::from(k)))
    }

    /// `2^e`.
    pub fn pow2(e: &BigRational) -> Self {
        LogLength::int_pow(2, e)
    }

    /// A positive rational as a length.
    pub fn from_rational(r: &BigRational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::InvalidParameter(format!("length must be positive, got {r}")));
        }
        let num = r.numer().to_biguint().expect("positive");
        let den = r.denom().to_biguint().expect("positive");
        let mut out = LogLength::one();
        for (p, k) in primes::factor_big(&num)? {
            out.add_exp(p, &BigRational::from_integer(BigInt::from(k)));
        }
        for (p, k) in primes::factor_big(&den)? {
            out.add_exp(p, &BigRational::from_integer(-BigInt::from(k)));
        }
        Ok(out)
    }

    /// Builds directly from `(prime, exponent)` pairs; fails if a key is not prime.
    pub fn from_prime_exponents<I: IntoIterator<Item = (u64, BigRational)>>(it: I) -> Result<Self> {
        let mut out = LogLength::one();
        for (p, e) in it {
            if !primes::is_prime(p) {
                return Err(Error::InvalidParameter(format!("{p} is not prime")));
            }
            out.add_exp(p, &e);
        }
        Ok(out)
    }

    fn add_exp(&mut self, p: u64, e: &BigRational) {
        if e.is_zero() {
            return;
        }
        let entry = self.exps.entry(p).or_insert_with(BigRational::zero);
        *entry += e;
        if entry.is_zero() {
            self.exps.remove(&p);
        }
    }

    /// Exponent of the prime `p` (zero if absent).
    pub fn exponent(&self, p: u64) -> BigRational {
        self.exps.get(&p).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.exps.iter().map(|(&p, e)| (p, e))
    }

    pub fn mul(&self, other: &LogLength) -> LogLength {
        let mut out = self.clone();
        for (&p, e) in &other.exps {
            out.add_exp(p, e);
        }
        out
    }

    pub fn div(&self, other: &LogLength) -> LogLength {
        let mut out = self.clone();
        for (&p, e) in &other.exps {
            out.add_exp(p, &-e);
        }
        out
    }

    pub fn inv(&self) -> LogLength {
        LogLength { exps: self.exps.iter().map(|(&p, e)| (p, -e)).collect() }
    }

    pub fn pow(&self, k: &BigRational) -> LogLength {
        if k.is_zero() {
            return LogLength::one();
        }
        LogLength { exps: self.exps.iter().map(|(&p, e)| (p, e * k)).collect() }
    }

    /// `ln` of the value as a double (for filters and reporting only).
    pub fn ln_f64(&self) -> f64 {
        self.exps
            .iter()
            .map(|(&p, e)| ratio_to_f64(e) * (p as f64).ln())
            .sum()
    }

    pub fn log2_f64(&self) -> f64 {
        self.ln_f64() / std::f64::consts::LN_2
    }

    /// The exact rational value when every exponent is an integer.
    pub fn to_rational(&self) -> Option<BigRational> {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, e) in &self.exps {
            if !e.is_integer() {
                return None;
            }
            let k = e.to_integer();
            let mag = k.abs().to_usize()?;
            let pw = num_traits::pow(BigInt::from(p), mag);
            if k.is_positive() {
                num *= pw;
            } else {
                den *= pw;
            }
        }
        Some(BigRational::new(num, den))
    }

    /// Enclosure of the value with about `prec` significant bits.
    pub fn to_interval(&self, prec: u32) -> Interval {
        let e = ll_to_float(self, prec.max(32));
        Interval::new(e.lo, e.hi)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

/// Exact product.
pub fn ll_mul(x: &LogLength, y: &LogLength) -> LogLength {
    x.mul(y)
}

/// Integer coefficients `c_p` and a positive scale `d` with `e_p = c_p / d`.
fn integer_form(x: &LogLength) -> (Vec<(u64, BigInt)>, BigInt) {
    let d = x.exps.values().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    let coeffs = x
        .exps
        .iter()
        .map(|(&p, e)| (p, e.numer() * (&d / e.denom())))
        .collect();
    (coeffs, d)
}

/// Sign of `ln(x)`; never returns `Equal` unless `x` is exactly one.
fn sign_of_log(x: &LogLength) -> Ordering {
    if x.is_one() {
        return Ordering::Equal;
    }
    let (coeffs, _) = integer_form(x);
    // all exponents share a sign: nothing to evaluate
    if coeffs.iter().all(|(_, c)| c.is_positive()) {
        return Ordering::Greater;
    }
    if coeffs.iter().all(|(_, c)| c.is_negative()) {
        return Ordering::Less;
    }
    let mut s = 0.0f64;
    let mut mag = 0.0f64;
    let mut finite = true;
    for (p, c) in &coeffs {
        let cf = c.to_f64().unwrap_or(f64::INFINITY);
        if !cf.is_finite() {
            finite = false;
            break;
        }
        let l = (*p as f64).ln();
        s += cf * l;
        mag += cf.abs() * l;
    }
    if finite && s.abs() > 1e-12 * mag {
        return if s > 0.0 { Ordering::Greater } else { Ordering::Less };
    }
    let mut prec = CMP_START_BITS;
    loop {
        let mut sum = BigInt::zero();
        let mut err = BigInt::zero();
        for (p, c) in &coeffs {
            let l = real::ln_fixed(*p, prec);
            sum += c * &l.0;
            err += c.abs() * BigInt::from(l.1);
        }
        if sum > err {
            return Ordering::Greater;
        }
        if sum < -&err {
            return Ordering::Less;
        }
        prec = prec.checked_mul(2).expect("precision overflow in ll_cmp");
    }
}

/// Exact comparison of two lengths.
pub fn ll_cmp(x: &LogLength, y: &LogLength) -> Ordering {
    if x == y {
        return Ordering::Equal;
    }
    sign_of_log(&x.div(y))
}

impl PartialOrd for LogLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogLength {
    fn cmp(&self, other: &Self) -> Ordering {
        ll_cmp(self, other)
    }
}

/// Enclosure returned by [`ll_to_float`].
#[derive(Clone, Debug, PartialEq)]
pub struct FloatEnclosure {
    pub lo: Dyadic,
    pub hi: Dyadic,
    /// Set when the value lies below `2^-UNDERFLOW_LOG2`; then `lo = 0`.
    pub underflow: bool,
}

impl FloatEnclosure {
    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64(Round::Up)
    }
}

/// Binary exponent below which [`ll_to_float`] reports underflow.
pub const UNDERFLOW_LOG2: i64 = 1 << 40;

fn pow_big(p: u64, k: &BigInt) -> BigUint {
    let k = k.to_usize().expect("exponent fits in memory");
    num_traits::pow(BigUint::from(p), k)
}

/// Enclosure `[lo, hi]` of the real value of `x` with `bits` significant bits.
pub fn ll_to_float(x: &LogLength, bits: u32) -> FloatEnclosure {
    assert!(bits >= 32, "ll_to_float needs at least 32 bits");
    if x.log2_f64() < -(UNDERFLOW_LOG2 as f64) {
        return FloatEnclosure { lo: Dyadic::zero(), hi: Dyadic::pow2(-UNDERFLOW_LOG2), underflow: true };
    }
    let (coeffs, d) = integer_form(x);
    let mut a = BigUint::one();
    let mut b = BigUint::one();
    let mut r = BigUint::one();
    for (p, c) in &coeffs {
        let (q, rem) = c.div_mod_floor(&d);
        match q.sign() {
            Sign::Plus => a *= pow_big(*p, &q),
            Sign::Minus => b *= pow_big(*p, &-q),
            Sign::NoSign => {}
        }
        if !rem.is_zero() {
            r *= pow_big(*p, &rem);
        }
    }
    let a = BigInt::from(a);
    let b = BigInt::from(b);
    if d.is_one() {
        return FloatEnclosure {
            lo: Dyadic::from_ratio(&a, &b, bits, Round::Down),
            hi: Dyadic::from_ratio(&a, &b, bits, Round::Up),
            underflow: false,
        };
    }
    // root = floor(R^(1/d) * 2^P), so R^(1/d) lies in [root, root + 1] * 2^-P
    let dd = d.to_u32().expect("exponent denominator fits in u32");
    let p_bits = bits as usize + 8;
    let scaled = &r << (dd as usize * p_bits);
    let root = scaled.nth_root(dd);
    let exact = num_traits::pow(root.clone(), dd as usize) == scaled;
    let root = BigInt::from(root);
    let den = &b << p_bits;
    let lo = Dyadic::from_ratio(&(&root * &a), &den, bits, Round::Down);
    let hi = if exact {
        Dyadic::from_ratio(&(&root * &a), &den, bits, Round::Up)
    } else {
        Dyadic::from_ratio(&((root + 1) * &a), &den, bits, Round::Up)
    };
    FloatEnclosure { lo, hi, underflow: false }
}

impl fmt::Display for LogLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.exps.iter().map(|(p, e)| format!("{p}^({e})")).collect();
        f.write_str(&parts.join("*"))
    }
}

impl fmt::Debug for LogLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogLength({self})")
    }
}

impl Serialize for LogLength {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.exps.len()))?;
        for (p, e) in &self.exps {
            m.serialize_entry(&p.to_string(), &format!("{}/{}", e.numer(), e.denom()))?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for LogLength {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = LogLength;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from prime to \"num/den\" exponent")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<LogLength, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    let p: u64 = k.parse().map_err(de::Error::custom)?;
                    let e: BigRational = v.parse().map_err(|_| de::Error::custom(format!("bad exponent {v:?}")))?;
                    pairs.push((p, e));
                }
                LogLength::from_prime_exponents(pairs).map_err(de::Error::custom)
            }
        }
        d.deserialize_map(V)
    }
}
