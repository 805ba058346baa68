//! Outward-rounded dyadic interval arithmetic and rigorous enclosures of
//! `ln n`.
//!
//! A [`Dyadic`] is `mant * 2^exp` with an arbitrary-precision mantissa. An
//! [`Interval`] is a pair of dyadics; every operation taking a `prec`
//! argument rounds the lower end down and the upper end up to `prec`
//! significant bits, so the true result always stays enclosed.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Round {
    Down,
    Up,
}

/// `mant * 2^exp`; normalized so that `mant` is odd, or zero with `exp == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Dyadic::zero();
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        Dyadic { mant: mant >> tz, exp: exp + tz as i64 }
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic { mant: BigInt::one(), exp: e }
    }

    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Exact `f64` conversion (every finite double is dyadic).
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, ex) = if e == 0 { (frac, -1074) } else { (frac | (1u64 << 52), e - 1075) };
        Some(Dyadic::new(BigInt::from(m) * sign, ex))
    }

    /// Position of the leading bit: `2^(msb) <= |self| < 2^(msb+1)`.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 - 1 + self.exp)
        }
    }

    pub fn neg(&self) -> Self {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    pub fn mul_int(&self, k: &BigInt) -> Dyadic {
        Dyadic::new(&self.mant * k, self.exp)
    }

    /// Multiply by `2^k` exactly.
    pub fn shl(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    /// Keep at most `prec` significant bits, rounding in the given direction.
    pub fn round(&self, prec: u32, dir: Round) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let drop = bits - prec as u64;
        Dyadic::new(shift_right_round(&self.mant, drop, dir), self.exp + drop as i64)
    }

    /// `num / den` rounded to `prec` significant bits.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32, dir: Round) -> Dyadic {
        assert!(!den.is_zero(), "division by zero");
        if num.is_zero() {
            return Dyadic::zero();
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num.clone(), den.clone()) };
        // scale so the quotient carries prec + 2 bits
        let shift = prec as i64 + 2 + den.bits() as i64 - num.bits() as i64;
        let (n, d) = if shift >= 0 {
            (num << shift as usize, den)
        } else {
            (num, den << (-shift) as usize)
        };
        let (q, r) = n.div_mod_floor(&d);
        let q = if r.is_zero() || dir == Round::Down { q } else { q + 1 };
        Dyadic::new(q, -shift).round(prec, dir)
    }

    pub fn from_rational(r: &BigRational, prec: u32, dir: Round) -> Dyadic {
        Dyadic::from_ratio(r.numer(), r.denom(), prec, dir)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Nearest double in the given direction; saturates to `±f64::MAX` or
    /// infinity outside the double range.
    pub fn to_f64(&self, dir: Round) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, dir);
        let mut m = r.mant.clone();
        let mut e = r.exp;
        if e < -1074 {
            let drop = (-1074 - e) as u64;
            m = shift_right_round(&m, drop, dir);
            e = -1074;
            if m.is_zero() {
                return 0.0;
            }
        }
        if m.bits() as i64 + e > 1024 {
            let big = if dir == Round::Up { f64::INFINITY } else { f64::MAX };
            return if m.is_negative() {
                if dir == Round::Up { -f64::MAX } else { -f64::INFINITY }
            } else {
                big
            };
        }
        ldexp(m.to_f64().expect("53-bit mantissa"), e)
    }

    /// Scientific-notation decimal with `digits` significant digits, rounded
    /// in the given direction.
    pub fn to_decimal(&self, digits: u32, dir: Round) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let v = self.to_rational();
        let msb = self.msb().expect("nonzero");
        let mut e10 = (msb as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let lo = num_traits::pow(BigInt::from(10), (digits - 1) as usize);
        let hi = &lo * 10;
        for _ in 0..4 {
            let k = digits as i64 - 1 - e10;
            let scaled = if k >= 0 {
                &v * BigRational::from_integer(num_traits::pow(BigInt::from(10), k as usize))
            } else {
                &v / BigRational::from_integer(num_traits::pow(BigInt::from(10), (-k) as usize))
            };
            let n = match dir {
                Round::Down => scaled.floor().to_integer(),
                Round::Up => scaled.ceil().to_integer(),
            };
            let a = n.abs();
            if a >= hi {
                e10 += 1;
                continue;
            }
            if a < lo {
                e10 -= 1;
                continue;
            }
            let s = a.to_string();
            let sign = if n.is_negative() { "-" } else { "" };
            let (head, tail) = s.split_at(1);
            return if tail.is_empty() {
                format!("{sign}{head}e{e10}")
            } else {
                format!("{sign}{head}.{tail}e{e10}")
            };
        }
        // rounding carried across a power of ten twice; fall back on the exact rational
        v.to_string()
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let up = 2f64.powi(1000);
    let down = 2f64.powi(-1000);
    while e > 1000 {
        x *= up;
        e -= 1000;
    }
    while e < -1000 {
        x *= down;
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// `floor` or `ceil` of `m / 2^k`.
fn shift_right_round(m: &BigInt, k: u64, dir: Round) -> BigInt {
    let q = m >> k as usize; // arithmetic shift floors
    if dir == Round::Up {
        let back = &q << k as usize;
        if &back != m {
            return q + 1;
        }
    }
    q
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum().cmp(&0)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20, Round::Down))
    }
}

/// A closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Interval::point(Dyadic::zero())
    }

    pub fn one() -> Self {
        Interval::point(Dyadic::one())
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        Interval {
            lo: Dyadic::from_rational(r, prec, Round::Down),
            hi: Dyadic::from_rational(r, prec, Round::Up),
        }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn mid(&self) -> Dyadic {
        self.lo.add(&self.hi).shl(-1)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi.signum() < 0
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_rational(&self, x: &BigRational) -> bool {
        &self.lo.to_rational() <= x && x <= &self.hi.to_rational()
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Every point of `self` lies strictly below every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !(self.hi < other.lo || other.hi < self.lo)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn add(&self, other: &Interval, prec: u32) -> Interval {
        Interval {
            lo: self.lo.add(&other.lo).round(prec, Round::Down),
            hi: self.hi.add(&other.hi).round(prec, Round::Up),
        }
    }

    pub fn sub(&self, other: &Interval, prec: u32) -> Interval {
        self.add(&other.neg(), prec)
    }

    pub fn mul(&self, other: &Interval, prec: u32) -> Interval {
        let c = [
            self.lo.mul(&other.lo),
            self.lo.mul(&other.hi),
            self.hi.mul(&other.lo),
            self.hi.mul(&other.hi),
        ];
        let lo = c.iter().min().expect("four products").round(prec, Round::Down);
        let hi = c.iter().max().expect("four products").round(prec, Round::Up);
        Interval { lo, hi }
    }

    /// `self / other`, or `None` if `other` contains zero.
    pub fn div(&self, other: &Interval, prec: u32) -> Option<Interval> {
        if other.lo.signum() <= 0 && other.hi.signum() >= 0 {
            return None;
        }
        let q = |a: &Dyadic, b: &Dyadic, dir: Round| -> Dyadic {
            // a/b = (ma/mb) * 2^(ea-eb)
            Dyadic::from_ratio(&a.mant, &b.mant, prec, dir).shl(a.exp - b.exp)
        };
        let ends = [(&self.lo, &other.lo), (&self.lo, &other.hi), (&self.hi, &other.lo), (&self.hi, &other.hi)];
        let lo = ends.iter().map(|(a, b)| q(a, b, Round::Down)).min().expect("four quotients");
        let hi = ends.iter().map(|(a, b)| q(a, b, Round::Up)).max().expect("four quotients");
        Some(Interval { lo, hi })
    }

    pub fn scale_rational(&self, r: &BigRational, prec: u32) -> Interval {
        self.mul(&Interval::from_rational(r, prec + 8), prec)
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.lo.to_f64(Round::Down), self.hi.to_f64(Round::Up))
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64(Round::Down)
    }

    /// `hi - lo` as a double, rounded up.
    pub fn width_f64(&self) -> f64 {
        self.width().to_f64(Round::Up)
    }

    pub fn to_decimal_pair(&self, digits: u32) -> (String, String) {
        (self.lo.to_decimal(digits, Round::Down), self.hi.to_decimal(digits, Round::Up))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal_pair(17);
        write!(f, "[{lo}, {hi}]")
    }
}

/// Decimal `{lo, hi}` pair used by every report that prints an enclosure.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecimalEnclosure {
    pub lo: String,
    pub hi: String,
    pub digits: u32,
}

impl DecimalEnclosure {
    pub fn of(iv: &Interval, digits: u32) -> Self {
        let (lo, hi) = iv.to_decimal_pair(digits);
        DecimalEnclosure { lo, hi, digits }
    }
}

// ---------------------------------------------------------------------------
// ln enclosures

const GUARD_BITS: u32 = 32;

/// Fixed-point `atanh(a/b) * 2^w` for `0 <= a/b <= 1/3`, with an error
/// bound in units of `2^-w`.
fn atanh_fixed(a: &BigUint, b: &BigUint, w: u32) -> (BigUint, u64) {
    if a.is_zero() {
        return (BigUint::zero(), 0);
    }
    let one = BigUint::one() << w as usize;
    let a2 = a * a;
    let b2 = b * b;
    // power_j ~ t^(2j+1) * 2^w, each floor costs under one ulp and the
    // factor t^2 <= 1/9 keeps the accumulated error below 9/8 ulp
    let mut power = (&one * a) / b;
    let mut sum = BigUint::zero();
    let mut terms = 0u64;
    let mut j = 0u64;
    while !power.is_zero() {
        sum += &power / BigUint::from(2 * j + 1);
        terms += 1;
        power = (&power * &a2) / &b2;
        j += 1;
    }
    // per-term error < 9/8 + 1, tail after the last nonzero power < 3
    (sum, 3 * terms + 3)
}

fn ln2_fixed(w: u32) -> (BigUint, u64) {
    let (s, e) = atanh_fixed(&BigUint::from(1u32), &BigUint::from(3u32), w);
    (s << 1usize, 2 * e)
}

type LnCache = RwLock<HashMap<(u64, u32), Arc<(BigInt, u64)>>>;

fn ln_cache() -> &'static LnCache {
    static CACHE: OnceLock<LnCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `(L, err)` with `|ln(n) * 2^prec - L| <= err`.
pub fn ln_fixed(n: u64, prec: u32) -> Arc<(BigInt, u64)> {
    assert!(n >= 1, "ln of zero");
    if let Some(v) = ln_cache().read().expect("ln cache poisoned").get(&(n, prec)) {
        return v.clone();
    }
    let value = if n == 1 {
        (BigInt::zero(), 0)
    } else {
        let w = prec + GUARD_BITS;
        let k = 63 - n.leading_zeros();
        let p2 = 1u128 << k;
        // n = 2^k (1 + x) with t = (n - 2^k)/(n + 2^k) in [0, 1/3)
        let num = BigUint::from(n as u128 - p2);
        let den = BigUint::from(n as u128 + p2);
        let (l2, e2) = ln2_fixed(w);
        let (at, et) = atanh_fixed(&num, &den, w);
        let total = l2 * BigUint::from(k) + (at << 1usize);
        let err_w = e2 * k as u64 + 2 * et;
        let shifted = BigInt::from(total >> GUARD_BITS as usize);
        let err = (err_w >> GUARD_BITS) + 2;
        (shifted, err)
    };
    let arc = Arc::new(value);
    ln_cache().write().expect("ln cache poisoned").insert((n, prec), arc.clone());
    arc
}

/// Rigorous enclosure of `ln(n)` with roughly `prec` fractional bits.
pub fn ln_interval(n: u64, prec: u32) -> Interval {
    let v = ln_fixed(n, prec);
    let (l, e) = (&v.0, BigInt::from(v.1));
    Interval {
        lo: Dyadic::new(l - &e, -(prec as i64)),
        hi: Dyadic::new(l + &e, -(prec as i64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ln_enclosures_contain_double_values() {
        for n in [2u64, 3, 5, 7, 127, 128, 129, 43, 1_000_003, u64::MAX] {
            let iv = ln_interval(n, 128);
            let (lo, hi) = iv.to_f64_pair();
            let f = (n as f64).ln();
            assert!(lo <= f * (1.0 + 1e-15) && f * (1.0 - 1e-15) <= hi, "ln {n}: {lo} {f} {hi}");
            assert!(iv.width_f64() < 1e-30);
        }
    }

    #[test]
    fn ln_is_additive_within_enclosure() {
        let p = 200;
        let l6 = ln_interval(6, p);
        let sum = ln_interval(2, p).add(&ln_interval(3, p), p + 8);
        assert!(l6.overlaps(&sum));
        let l128 = ln_interval(128, p);
        let seven = ln_interval(2, p).mul(&Interval::point(Dyadic::from_int(7)), p + 8);
        assert!(l128.overlaps(&seven));
    }

    #[test]
    fn ln2_matches_known_digits() {
        let iv = ln_interval(2, 256);
        let s = iv.lo().to_decimal(40, Round::Down);
        assert!(s.starts_with("6.931471805599453094172321214581765680"), "{s}");
    }

    #[test]
    fn decimal_output() {
        let third = Interval::from_rational(&rat(1, 3), 80);
        let (lo, hi) = third.to_decimal_pair(10);
        assert_eq!(lo, "3.333333333e-1");
        assert_eq!(hi, "3.333333334e-1");
        assert_eq!(Dyadic::from_int(-5).to_decimal(3, Round::Down), "-5.00e0");
        assert_eq!(Dyadic::pow2(-1).to_decimal(1, Round::Up), "5e-1");
    }

    #[test]
    fn f64_conversions_round_outward() {
        let third = Interval::from_rational(&rat(1, 3), 200);
        let (lo, hi) = third.to_f64_pair();
        assert!(lo < hi);
        assert!(lo <= 1.0 / 3.0 && 1.0 / 3.0 <= hi);
        let tiny = Dyadic::pow2(-1080);
        assert_eq!(tiny.to_f64(Round::Down), 0.0);
        assert_eq!(tiny.to_f64(Round::Up), f64::from_bits(1));
        assert_eq!(Dyadic::pow2(-1074).to_f64(Round::Down), f64::from_bits(1));
        assert_eq!(Dyadic::from_f64(0.1).unwrap().to_f64(Round::Up), 0.1);
    }

    #[test]
    fn division_by_interval_with_zero_is_refused() {
        let a = Interval::one();
        let z = Interval::new(Dyadic::from_int(-1), Dyadic::from_int(1));
        assert!(a.div(&z, 64).is_none());
    }

    proptest! {
        #[test]
        fn arithmetic_encloses_exact_rationals(
            a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000, prec in 8u32..80
        ) {
            let (x, y) = (rat(a, b), rat(c, d));
            let (ix, iy) = (Interval::from_rational(&x, prec), Interval::from_rational(&y, prec));
            prop_assert!(ix.add(&iy, prec).contains_rational(&(&x + &y)));
            prop_assert!(ix.sub(&iy, prec).contains_rational(&(&x - &y)));
            prop_assert!(ix.mul(&iy, prec).contains_rational(&(&x * &y)));
            if c != 0 {
                prop_assert!(ix.div(&iy, prec).unwrap().contains_rational(&(&x / &y)));
            }
        }

        #[test]
        fn decimal_strings_bracket_the_value(a in -100000i64..100000, b in 1i64..100000, digits in 1u32..25) {
            prop_assume!(a != 0);
            let x = rat(a, b);
            let iv = Interval::from_rational(&x, 128);
            let (lo, hi) = iv.to_decimal_pair(digits);
            let parse = |s: &str| -> BigRational {
                let (m, e) = s.split_once('e').unwrap();
                let e: i64 = e.parse().unwrap();
                let neg = m.starts_with('-');
                let m = m.trim_start_matches('-');
                let (ip, fp) = m.split_once('.').unwrap_or((m, ""));
                let digits: BigInt = format!("{ip}{fp}").parse().unwrap();
                let shift = e - fp.len() as i64;
                let ten = BigInt::from(10);
                let v = if shift >= 0 {
                    BigRational::from_integer(digits * num_traits::pow(ten, shift as usize))
                } else {
                    BigRational::new(digits, num_traits::pow(ten, (-shift) as usize))
                };
                if neg { -v } else { v }
            };
            prop_assert!(parse(&lo) <= x && x <= parse(&hi));
        }
    }
}
