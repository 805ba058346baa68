use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::report::{DimValue, DimensionReport};
use crate::error::{Error, Result};
use crate::models::{CSequence, SymmetricModel};
use crate::real::{DecimalEnclosure, Interval};
use crate::symbolic::Word;

/// `q_n = n ln 2 / -ln(c_1 ... c_n)` for `n = 1..=n_max` (index `n - 1`).
pub fn quotient_sequence(model: &SymmetricModel, n_max: u64) -> Vec<f64> {
    let v = model.neg_log_products(n_max);
    (1..=n_max as usize).map(|n| n as f64 * LN_2 / v[n]).collect()
}

/// Tail extremes of a quotient sequence.
#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    /// Levels `n` the extremes are taken over.
    pub scales: Vec<u64>,
    pub liminf_est: f64,
    pub limsup_est: f64,
    /// Shift of each extreme when the window is halved.
    pub liminf_err: f64,
    pub limsup_err: f64,
    pub block_ends: bool,
}

fn extremes(q: &[f64], scales: &[u64]) -> (f64, f64) {
    scales.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &n| {
        let x = q[n as usize - 1];
        (lo.min(x), hi.max(x))
    })
}

/// The final third of the levels, or of the block ends when the sequence
/// has at least three blocks inside `1..=n_max`.
pub fn tail_estimate(model: &SymmetricModel, q: &[f64]) -> TailEstimate {
    let n_max = q.len() as u64;
    let ends: Vec<u64> = model.block_ends().unwrap_or(&[]).iter().copied().filter(|&e| e <= n_max).collect();
    let (candidates, block_ends) = if ends.len() >= 3 { (ends, true) } else { ((1..=n_max).collect(), false) };
    let take = candidates.len().div_ceil(3).max(2).min(candidates.len());
    let scales = candidates[candidates.len() - take..].to_vec();
    let half = &scales[scales.len() - scales.len().div_ceil(2)..];
    let (lo, hi) = extremes(q, &scales);
    let (lo2, hi2) = extremes(q, half);
    TailEstimate { scales, liminf_est: lo, limsup_est: hi, liminf_err: lo2 - lo, limsup_err: hi - hi2, block_ends }
}

fn check_inf(model: &SymmetricModel) -> Result<()> {
    let (inf, positive) = model.inf_c();
    if !positive {
        return Err(Error::PrecondFailed(format!(
            "inf c_n = {inf} is not positive; the dimension formulas need inf c_n > 0"
        )));
    }
    Ok(())
}

/// Tail estimates of `liminf q_n` (lower box = Hausdorff) and `limsup q_n`
/// (upper box = packing).
pub fn symmetric_dimensions(model: &SymmetricModel, n_max: u64) -> Result<(DimensionReport, TailEstimate)> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    check_inf(model)?;
    let q = quotient_sequence(model, n_max);
    let t = tail_estimate(model, &q);
    let lower = DimValue::empirical(t.liminf_est, t.liminf_err);
    let upper = DimValue::empirical(t.limsup_est, t.limsup_err);
    let report = DimensionReport {
        model: format!("symmetric(c={})", model.sequence().describe()),
        ldim: None,
        hdim: lower,
        lbdim: lower,
        ubdim: upper,
        pdim: Some(upper),
        adim: None,
        argmax: None,
    };
    Ok((report, t))
}

/// Local dimension ratios of the uniform stationary measure at the point
/// coded by `x`, at the cylinder scales `delta_n = c_1 ... c_n`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalDimSample {
    pub coding: Word,
    /// `-ln delta_n` for `n = 1..=n_max`.
    pub neg_ln_deltas: Vec<f64>,
    /// `ln mu(I_n(x)) / ln delta_n`.
    pub ratios: Vec<f64>,
    pub liminf_est: f64,
    pub limsup_est: f64,
    pub tail: TailEstimate,
}

pub fn local_dimension(model: &SymmetricModel, x_bits: &Word, n_max: u64) -> Result<LocalDimSample> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    check_inf(model)?;
    let v = model.neg_log_products(n_max);
    // mu(I_w) = 2^-|w| for every w, so the ratio does not depend on x
    let ratios = quotient_sequence(model, n_max);
    let tail = tail_estimate(model, &ratios);
    Ok(LocalDimSample {
        coding: x_bits.clone(),
        neg_ln_deltas: v[1..].to_vec(),
        liminf_est: tail.liminf_est,
        limsup_est: tail.limsup_est,
        ratios,
        tail,
    })
}

fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Rational bounds on the Lebesgue measure of the attractor.
#[derive(Clone, Debug, Serialize)]
pub struct LebesgueBounds {
    pub n_max: u64,
    #[serde(serialize_with = "ser_rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub upper: BigRational,
    pub enclosure: DecimalEnclosure,
}

impl LebesgueBounds {
    pub fn interval(&self, prec: u32) -> Interval {
        Interval::from_rational(&self.lower, prec).hull(&Interval::from_rational(&self.upper, prec))
    }

    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }
}

/// The level-`n_max` total length `prod 2 c_j` bounds the measure from above.
/// From below, `prod_{j > n} 2 c_j >= 1 - sum_{j > n} (1 - 2 c_j)`, which is
/// summable in closed form for `c_n = 1/2 - a b^-n`; otherwise the lower
/// bound is 0.
pub fn lebesgue_measure(model: &SymmetricModel, n_max: u64) -> Result<LebesgueBounds> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let upper = (1..=n_max).fold(BigRational::one(), |acc, j| acc * &two * model.c(j));
    let lower = match model.sequence() {
        CSequence::HalfMinusPow { a, b } => {
            let bn = num_traits::pow(BigInt::from(*b), n_max as usize);
            let tail = &two * a / BigRational::from_integer(bn * BigInt::from(*b - 1));
            let f = BigRational::one() - tail;
            if f > BigRational::zero() {
                &upper * f
            } else {
                BigRational::zero()
            }
        }
        _ => BigRational::zero(),
    };
    let iv = Interval::from_rational(&lower, 128).hull(&Interval::from_rational(&upper, 128));
    Ok(LebesgueBounds { n_max, enclosure: DecimalEnclosure::of(&iv, 15), lower, upper })
}
