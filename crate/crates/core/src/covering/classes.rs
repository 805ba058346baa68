use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use super::binomial::{at, binomial_row};
use super::{depth_window, ClassCount, CoverReport, LambdaSpec, Method};
use crate::error::{Error, Result};
use crate::loglength::{ll_cmp, LogLength};
use crate::models::{McMullenModel, Model, StarModel, SymmetricModel};
use crate::symbolic::{floor_boundary, Beta, Word};

/// Relative gap below which the double-precision filter defers to `ll_cmp`.
const FILTER_EPS: f64 = 1e-9;

/// `l <= rho`, decided in floating point away from ties.
fn le_rho(lhs_log2: f64, exact: impl FnOnce() -> Result<LogLength>, rho: &LogLength, rho_log2: f64) -> Result<bool> {
    let d = lhs_log2 - rho_log2;
    let tol = FILTER_EPS * (1.0 + rho_log2.abs());
    if d < -tol {
        return Ok(true);
    }
    if d > tol {
        return Ok(false);
    }
    Ok(ll_cmp(&exact()?, rho) != Ordering::Greater)
}

/// Length functions that depend on `(n, N1, N2)` only.
trait SplitModel: Sync {
    fn beta(&self) -> Beta;
    fn class_log2(&self, n: usize, n1: usize, n2: usize) -> f64;
    fn class_length(&self, n: usize, n1: usize, n2: usize) -> LogLength;
}

impl SplitModel for McMullenModel {
    fn beta(&self) -> Beta {
        McMullenModel::beta(self)
    }
    fn class_log2(&self, n: usize, n1: usize, n2: usize) -> f64 {
        McMullenModel::class_log2(self, n, n1, n2)
    }
    fn class_length(&self, n: usize, n1: usize, n2: usize) -> LogLength {
        McMullenModel::class_length(self, n, n1, n2)
    }
}

impl SplitModel for StarModel {
    fn beta(&self) -> Beta {
        StarModel::beta(self)
    }
    fn class_log2(&self, n: usize, n1: usize, n2: usize) -> f64 {
        StarModel::class_log2(self, n, n1, n2)
    }
    fn class_length(&self, n: usize, n1: usize, n2: usize) -> LogLength {
        StarModel::class_length(self, n, n1, n2)
    }
}

struct Level {
    n: usize,
    total: BigUint,
    classes: Vec<ClassCount>,
}

/// Members of length `n`, grouped by the window-boundary symbol `t` (when
/// the boundary moves between `n - 1` and `n`) and the last symbol `b`.
fn split_level<S: SplitModel>(m: &S, n: usize, rho: &LogLength, rho_log2: f64, with_classes: bool) -> Result<Level> {
    let beta = m.beta();
    let f = floor_boundary(n, beta);
    let g = floor_boundary(n - 1, beta);
    let shifted = f > g;
    // free positions: 1..f (or 1..f-1 when position f is pinned) and f+1..n-1
    let inner2 = n - f - 1;
    let row1 = binomial_row(if shifted { f - 1 } else { f });
    let row2 = binomial_row(inner2);
    let member = |n1: usize, n2: usize| le_rho(m.class_log2(n, n1, n2), || Ok(m.class_length(n, n1, n2)), rho, rho_log2);
    let parent_above = |n1: i64, n2: i64| -> Result<bool> {
        if n1 < 0 || n2 < 0 {
            return Ok(false);
        }
        let (a, b) = (n1 as usize, n2 as usize);
        Ok(!le_rho(m.class_log2(n - 1, a, b), || Ok(m.class_length(n - 1, a, b)), rho, rho_log2)?)
    };
    let mut total = BigUint::zero();
    let mut classes: BTreeMap<(usize, usize), BigUint> = BTreeMap::new();
    for n1 in 0..=f {
        let flags: Vec<bool> = (0..=n - f).map(|n2| member(n1, n2)).collect::<Result<_>>()?;
        if !flags.iter().any(|&x| x) {
            continue;
        }
        for t in 0..=(shifted as usize) {
            let Some(c1) = at(&row1, n1 as i64 - t as i64) else { continue };
            for b in 0..=1usize {
                let mut sum = BigUint::zero();
                for n2 in b..=inner2 + b {
                    if !flags[n2] {
                        continue;
                    }
                    let (p1, p2) = if shifted {
                        (n1 as i64 - t as i64, n2 as i64 - b as i64 + t as i64)
                    } else {
                        (n1 as i64, n2 as i64 - b as i64)
                    };
                    if !parent_above(p1, p2)? {
                        continue;
                    }
                    let term = &row2[n2 - b];
                    sum += term;
                    if with_classes {
                        *classes.entry((n1, n2)).or_default() += c1 * term;
                    }
                }
                if !sum.is_zero() {
                    total += c1 * sum;
                }
            }
        }
    }
    let classes = classes.into_iter().map(|((n1, n2), count)| ClassCount { n, n1, n2, count }).collect();
    Ok(Level { n, total, classes })
}

fn split_counts<S: SplitModel>(m: &S, rho: &LogLength, window: (usize, usize), with_classes: bool) -> Result<CoverReport> {
    let rho_log2 = rho.log2_f64();
    let levels: Vec<Level> = (window.0..=window.1)
        .into_par_iter()
        .map(|n| split_level(m, n, rho, rho_log2, with_classes))
        .collect::<Result<_>>()?;
    Ok(assemble(levels, window))
}

fn assemble(levels: Vec<Level>, window: (usize, usize)) -> CoverReport {
    let mut by_level = BTreeMap::new();
    let mut classes = Vec::new();
    for l in levels {
        if !l.total.is_zero() {
            by_level.insert(l.n, l.total);
        }
        classes.extend(l.classes);
    }
    CoverReport::new(by_level, classes, window, Method::Classes, None)
}

/// Relative lengths `l(u w)/l(u)` for `u = s^k`, which depend on `(n, L1(w))`
/// as long as `n <= (1 - beta) k / beta`.
struct Localized<'a> {
    model: &'a Model,
    beta: Beta,
    k: usize,
    ones: bool,
}

impl Localized<'_> {
    fn two_exponent(&self, n: usize, j: usize) -> BigRational {
        let shift = if self.ones { floor_boundary(n + self.k, self.beta) - floor_boundary(self.k, self.beta) } else { 0 };
        let p = self.beta.num() as i64;
        let q = self.beta.den() as i64;
        BigRational::new(BigInt::from(shift as i64 * q - p * j as i64), BigInt::from(q))
    }

    fn log2(&self, n: usize, j: usize) -> f64 {
        let e = self.two_exponent(n, j);
        let e = e.numer().to_string().parse::<f64>().unwrap_or(0.0) / e.denom().to_string().parse::<f64>().unwrap_or(1.0);
        let base = match self.model {
            Model::McMullen(m) => n as f64 * (m.m() as f64).log2(),
            Model::Star(s) => s.base().log2_product((self.k + n) as u64) - s.base().log2_product(self.k as u64),
            Model::Symmetric(_) => unreachable!("checked by the caller"),
        };
        e - base
    }

    fn exact(&self, n: usize, j: usize) -> LogLength {
        let base = match self.model {
            Model::McMullen(m) => LogLength::int_pow_i(m.m(), -(n as i64)),
            Model::Star(s) => s.base().inverse_product(self.k as u64, n as u64),
            Model::Symmetric(_) => unreachable!("checked by the caller"),
        };
        LogLength::pow2(&self.two_exponent(n, j)).mul(&base)
    }
}

fn localized_level(loc: &Localized, n: usize, rho: &LogLength, rho_log2: f64, with_classes: bool) -> Result<Level> {
    let row = binomial_row(n - 1);
    let mut total = BigUint::zero();
    let mut classes = Vec::new();
    for j in 0..=n {
        if !le_rho(loc.log2(n, j), || Ok(loc.exact(n, j)), rho, rho_log2)? {
            continue;
        }
        let mut class = BigUint::zero();
        for b in 0..=1usize {
            let Some(c) = at(&row, j as i64 - b as i64) else { continue };
            let pj = j - b;
            if le_rho(loc.log2(n - 1, pj), || Ok(loc.exact(n - 1, pj)), rho, rho_log2)? {
                continue;
            }
            class += c;
        }
        if !class.is_zero() {
            total += &class;
            if with_classes {
                classes.push(ClassCount { n, n1: j, n2: 0, count: class });
            }
        }
    }
    Ok(Level { n, total, classes })
}

fn homogeneous(u: &Word) -> Option<bool> {
    let first = *u.bits().first()?;
    u.bits().iter().all(|&b| b == first).then_some(first == 1)
}

fn localized_counts(spec: &LambdaSpec, u: &Word, with_classes: bool) -> Result<CoverReport> {
    let beta = match spec.model {
        Model::McMullen(m) => m.beta(),
        Model::Star(s) => s.beta(),
        Model::Symmetric(_) => {
            return Err(Error::UnsupportedPrefix("localized class counts need the mcmullen or star family".into()))
        }
    };
    let ones = homogeneous(u)
        .ok_or_else(|| Error::UnsupportedPrefix(format!("prefix {u} is not of the form 0^k or 1^k")))?;
    let k = u.len();
    let window = depth_window(spec.model, &spec.rho);
    // the closed form holds for n * beta <= (1 - beta) * k
    if (window.1 as u128) * beta.num() as u128 > (beta.den() - beta.num()) as u128 * k as u128 {
        return Err(Error::UnsupportedPrefix(format!(
            "prefix length {k} is too short for depths up to {}; need n <= (1 - beta) k / beta",
            window.1
        )));
    }
    let loc = Localized { model: spec.model, beta, k, ones };
    let rho_log2 = spec.rho.log2_f64();
    let levels: Vec<Level> = (window.0..=window.1)
        .into_par_iter()
        .map(|n| localized_level(&loc, n, &spec.rho, rho_log2, with_classes))
        .collect::<Result<_>>()?;
    Ok(assemble(levels, window))
}

fn symmetric_counts(m: &SymmetricModel, rho: &LogLength, window: (usize, usize)) -> Result<CoverReport> {
    let v = m.neg_log_products(window.1 as u64 + 1);
    let neg_ln_rho = -rho.ln_f64();
    for n in 1..v.len() {
        let d = v[n] - neg_ln_rho;
        let tol = FILTER_EPS * (1.0 + neg_ln_rho);
        let member = if d > tol {
            true
        } else if d < -tol {
            false
        } else {
            ll_cmp(&m.length_at_level(n as u64)?, rho) != Ordering::Greater
        };
        if member {
            let count = BigUint::from(1u32) << n;
            let level = Level { n, total: count.clone(), classes: vec![ClassCount { n, n1: 0, n2: 0, count }] };
            return Ok(assemble(vec![level], window));
        }
    }
    Err(Error::DepthExceeded(window.1))
}

/// `#Lambda(rho)` (or `#Lambda^{*,u}(rho)`) summed over length classes with
/// exact binomial class sizes. `with_classes` also returns the
/// per-class histogram.
pub fn lambda_classes(spec: &LambdaSpec, with_classes: bool) -> Result<CoverReport> {
    if let Some(u) = spec.prefix.as_ref().filter(|u| !u.is_empty()) {
        return localized_counts(spec, u, with_classes);
    }
    let window = depth_window(spec.model, &spec.rho);
    match spec.model {
        Model::McMullen(m) => split_counts(m, &spec.rho, window, with_classes),
        Model::Star(s) => split_counts(s, &spec.rho, window, with_classes),
        Model::Symmetric(s) => symmetric_counts(s, &spec.rho, window),
    }
}
