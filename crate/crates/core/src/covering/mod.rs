//! Exact counts of the covering families `Lambda(rho)` and
//! `Lambda^{*,u}(rho)`.
//!
//! A word `w` belongs to `Lambda(rho)` when `l(w) <= rho < l(w^-)`, with
//! `w^-` the word without its last symbol. The family is prefix-free and
//! complete, and `#Lambda(rho)` is comparable to the number of `rho`-balls
//! needed to cover the attractor, so the box dimensions are read off its
//! growth.

mod binomial;
mod classes;
mod oracle;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::loglength::{ll_cmp, LogLength};
use crate::models::{LengthFunction, McMullenModel, Model, StarModel};
use crate::symbolic::Word;

pub use binomial::{binomial, binomial_row, ln_biguint, log2_biguint};
pub use classes::lambda_classes;
pub use oracle::{lambda_oracle, lambda_oracle_generic, OracleOptions};

/// Default cap on the number of DFS leaves.
pub const DEFAULT_MAX_LEAVES: u64 = 1 << 26;

/// The leaf guard, overridable through `CANTORLAB_MAX_LEAVES`.
pub fn max_leaves() -> u64 {
    std::env::var("CANTORLAB_MAX_LEAVES")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_LEAVES)
}

/// A scale `rho`, given as `2^-K`, `2^(-p/q)` or a rational `p/q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rho(pub LogLength);

impl Rho {
    pub fn pow2(k: i64) -> Rho {
        Rho(LogLength::int_pow_i(2, -k))
    }

    /// `log2(1/rho)`.
    pub fn log2_inv(&self) -> f64 {
        -self.0.log2_f64()
    }
}

impl FromStr for Rho {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace(' ', "");
        if let Some(e) = t.strip_prefix("2^") {
            let e = e.trim_start_matches('(').trim_end_matches(')');
            let r: BigRational = parse_rational(e).ok_or_else(|| bad_rho(s))?;
            return Ok(Rho(LogLength::pow2(&r)));
        }
        if t.contains('.') || t.contains('e') || t.contains('E') {
            return Err(Error::InvalidParameter(format!(
                "decimal rho {s:?} cannot be represented exactly; write it as 2^-K or p/q"
            )));
        }
        let r = parse_rational(&t).ok_or_else(|| bad_rho(s))?;
        if r <= BigRational::zero() {
            return Err(bad_rho(s));
        }
        Ok(Rho(LogLength::from_rational(&r)?))
    }
}

fn bad_rho(s: &str) -> Error {
    Error::InvalidParameter(format!("cannot parse rho {s:?}; expected 2^-K, 2^(-p/q) or p/q"))
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p, q),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().ok()?;
    let q: BigInt = q.parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(BigRational::new(p, q))
}

/// What to count: `Lambda(rho)`, or `Lambda^{*,u}(rho)` when a prefix is set.
#[derive(Clone, Debug)]
pub struct LambdaSpec<'a> {
    pub model: &'a Model,
    pub rho: LogLength,
    pub prefix: Option<Word>,
}

impl<'a> LambdaSpec<'a> {
    pub fn new(model: &'a Model, rho: LogLength) -> Result<Self> {
        if ll_cmp(&rho, &LogLength::one()) != Ordering::Less {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(LambdaSpec { model, rho, prefix: None })
    }

    pub fn localized(model: &'a Model, rho: LogLength, u: Word) -> Result<Self> {
        let mut s = LambdaSpec::new(model, rho)?;
        s.prefix = Some(u);
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Classes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Oracle,
    Classes,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "oracle" => Ok(MethodChoice::Oracle),
            "classes" => Ok(MethodChoice::Classes),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}; use auto, oracle or classes"))),
        }
    }
}

pub(crate) fn serialize_decimal<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_str_radix(10))
}

/// Members of one `(n, N1, N2)` class. Symmetric models key by `n` alone
/// (`N1 = N2 = 0`); localized counts key by `(n, L1(w), 0)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ClassCount {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    #[serde(serialize_with = "serialize_decimal")]
    pub count: BigUint,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    #[serde(serialize_with = "serialize_decimal")]
    pub count: BigUint,
    /// Per-class breakdown, sorted; empty unless requested.
    pub classes: Vec<ClassCount>,
    /// Member counts by word length.
    pub levels: Vec<(usize, String)>,
    /// Depth range examined (classes) or observed (oracle).
    pub depth_bounds: (usize, usize),
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<Word>>,
    #[serde(skip)]
    level_counts: BTreeMap<usize, BigUint>,
}

impl CoverReport {
    pub(crate) fn new(
        level_counts: BTreeMap<usize, BigUint>,
        mut classes: Vec<ClassCount>,
        depth_bounds: (usize, usize),
        method: Method,
        members: Option<Vec<Word>>,
    ) -> Self {
        classes.sort();
        let count = level_counts.values().sum();
        let levels = level_counts.iter().map(|(n, c)| (*n, c.to_str_radix(10))).collect();
        CoverReport { count, classes, levels, depth_bounds, method, members, level_counts }
    }

    pub fn level_counts(&self) -> &BTreeMap<usize, BigUint> {
        &self.level_counts
    }

    /// `sum over members of 2^-|w|`, exactly.
    pub fn kraft_sum(&self) -> BigRational {
        let top = self.level_counts.keys().max().copied().unwrap_or(0);
        let num: BigUint = self.level_counts.iter().map(|(n, c)| c << (top - n)).sum();
        BigRational::new(BigInt::from(num), BigInt::one() << top)
    }

    pub fn count_bits(&self) -> u64 {
        self.count.bits()
    }

    pub fn log2_count(&self) -> f64 {
        log2_biguint(&self.count)
    }

    /// The histogram as a map, for comparisons.
    pub fn class_map(&self) -> BTreeMap<(usize, usize, usize), BigUint> {
        self.classes.iter().map(|c| ((c.n, c.n1, c.n2), c.count.clone())).collect()
    }
}

/// Depth window containing every member: `n >= ln(1/rho)/ln(1/r_lo)` and
/// `n <= ln(1/(r_lo rho))/ln(1/r_hi)`, widened by one on each side.
pub fn depth_window<L: LengthFunction + ?Sized>(model: &L, rho: &LogLength) -> (usize, usize) {
    let (lo, hi) = model.ratio_bounds();
    let l = -rho.ln_f64();
    let n_min = (l / -lo.ln()).floor() - 1.0;
    let n_max = ((l - lo.ln()) / -hi.ln()).ceil() + 1.0;
    (n_min.max(1.0) as usize, n_max.max(1.0) as usize)
}

/// Counts with the requested method; `Auto` uses classes when they apply
/// and the oracle otherwise.
pub fn lambda_count(spec: &LambdaSpec, method: MethodChoice, with_classes: bool) -> Result<CoverReport> {
    match method {
        MethodChoice::Oracle => lambda_oracle(spec, &OracleOptions { collect_members: false, ..Default::default() }),
        MethodChoice::Classes => lambda_classes(spec, with_classes),
        MethodChoice::Auto => match lambda_classes(spec, with_classes) {
            Err(Error::UnsupportedPrefix(_)) | Err(Error::UnsupportedModel(_)) => {
                lambda_oracle(spec, &OracleOptions { collect_members: false, ..Default::default() })
            }
            r => r,
        },
    }
}

/// `(#Lambda_{M+1}(rho), #Lambda*(rho), #Lambda_M(rho))`.
#[derive(Clone, Debug, Serialize)]
pub struct Sandwich {
    #[serde(serialize_with = "serialize_decimal")]
    pub plus: BigUint,
    #[serde(serialize_with = "serialize_decimal")]
    pub star: BigUint,
    #[serde(serialize_with = "serialize_decimal")]
    pub base: BigUint,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.plus <= self.star && self.star <= self.base
    }

    pub fn strict(&self) -> bool {
        self.plus < self.star && self.star < self.base
    }
}

/// Class counts for the star model and its two constant-base neighbours;
/// fails if `#Lambda_{M+1} <= #Lambda* <= #Lambda_M` does not hold.
pub fn lambda_sandwich(star: &StarModel, rho: &LogLength) -> Result<Sandwich> {
    let (base, plus): (McMullenModel, McMullenModel) = star.constant_base_pair();
    let count = |m: Model| -> Result<BigUint> {
        let spec = LambdaSpec::new(&m, rho.clone())?;
        Ok(lambda_classes(&spec, false)?.count)
    };
    let s = Sandwich {
        plus: count(Model::McMullen(plus))?,
        star: count(Model::Star(star.clone()))?,
        base: count(Model::McMullen(base))?,
    };
    if !s.holds() {
        return Err(Error::PrecondFailed(format!(
            "sandwich violated at rho = {rho}: {} <= {} <= {} fails",
            s.plus, s.star, s.base
        )));
    }
    Ok(s)
}
