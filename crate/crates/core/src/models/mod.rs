//! Length functions `l: words -> (0, 1]` for the three construction
//! families: McMullen-type, the star construction with an oscillating base
//! sequence, and symmetric Cantor sets.

mod config;
mod mcmullen;
mod star;
mod symmetric;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use config::{BaseSequenceConfig, CConfig, ModelConfig, Rat};
pub use mcmullen::{mc_length, McMullenModel};
pub use star::{star_length, star_relative_length, BaseSequence, StarModel};
pub use symmetric::{box_nonexist_sequence, sym_length, sym_point, BlockGrowth, CSequence, SymmetricModel};

use crate::error::Result;
use crate::loglength::LogLength;
use crate::symbolic::{Beta, Word};

/// Smallest base accepted by the McMullen and star families.
pub const MIN_M: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    McMullen,
    Star,
    Symmetric,
    Custom,
}

/// Closed-form bounds on the one-step ratios `|I_{iw}|/|I_w|` and
/// `|G_{iw}|/|G_w|`, valid for every word.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioCertificate {
    pub interval: (BigRational, BigRational),
    pub gap: (BigRational, BigRational),
    /// Whether the lower bounds are attained or at least approached by a
    /// positive infimum. `false` means the infimum is zero.
    pub positive_infimum: bool,
}

impl RatioCertificate {
    /// The bi-Lipschitz criterion holds for every depth.
    pub fn passes(&self) -> bool {
        let zero = BigRational::from_integer(BigInt::from(0));
        let one = BigRational::from_integer(BigInt::from(1));
        self.positive_infimum
            && self.interval.0 > zero
            && self.gap.0 > zero
            && self.interval.1 < one
            && self.gap.1 < one
    }
}

/// A length function on finite binary words.
pub trait LengthFunction: Send + Sync {
    fn length(&self, w: &Word) -> Result<LogLength>;

    fn family(&self) -> Family;

    /// Conservative `(lo, hi)` with `lo <= l(w i)/l(w) <= hi` for all `w`, `i`.
    fn ratio_bounds(&self) -> (f64, f64);

    /// Bounds certifying the bi-Lipschitz criterion at every depth, if known.
    fn certificate(&self) -> Option<RatioCertificate> {
        None
    }
}

/// One of the built-in families.
#[derive(Clone, Debug)]
pub enum Model {
    McMullen(McMullenModel),
    Star(StarModel),
    Symmetric(SymmetricModel),
}

impl Model {
    pub fn beta(&self) -> Option<Beta> {
        match self {
            Model::McMullen(m) => Some(m.beta()),
            Model::Star(m) => Some(m.beta()),
            Model::Symmetric(_) => None,
        }
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Model> {
        cfg.build()
    }

    pub fn describe(&self) -> String {
        match self {
            Model::McMullen(m) => format!("mcmullen(beta={}, M={})", m.beta(), m.m()),
            Model::Star(m) => format!("star(beta={}, M={}, N_k={})", m.beta(), m.base().m(), m.base().describe()),
            Model::Symmetric(m) => format!("symmetric(c={})", m.sequence().describe()),
        }
    }
}

impl LengthFunction for Model {
    fn length(&self, w: &Word) -> Result<LogLength> {
        match self {
            Model::McMullen(m) => m.length(w),
            Model::Star(m) => m.length(w),
            Model::Symmetric(m) => m.length(w),
        }
    }

    fn family(&self) -> Family {
        match self {
            Model::McMullen(_) => Family::McMullen,
            Model::Star(_) => Family::Star,
            Model::Symmetric(_) => Family::Symmetric,
        }
    }

    fn ratio_bounds(&self) -> (f64, f64) {
        match self {
            Model::McMullen(m) => m.ratio_bounds(),
            Model::Star(m) => m.ratio_bounds(),
            Model::Symmetric(m) => m.ratio_bounds(),
        }
    }

    fn certificate(&self) -> Option<RatioCertificate> {
        match self {
            Model::McMullen(m) => m.certificate(),
            Model::Star(m) => m.certificate(),
            Model::Symmetric(m) => m.certificate(),
        }
    }
}

/// `(1 - beta) N1 - beta N2`, the exponent of 2 shared by the McMullen and
/// star lengths.
pub(crate) fn two_exponent(beta: Beta, n1: usize, n2: usize) -> BigRational {
    let p = beta.num() as i128;
    let q = beta.den() as i128;
    let num = (q - p) * n1 as i128 - p * n2 as i128;
    BigRational::new(BigInt::from(num), BigInt::from(q))
}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loglength::ll_cmp;
    use std::cmp::Ordering;

    fn default_models() -> Vec<Model> {
        vec![
            Model::McMullen(McMullenModel::new(Beta::half(), 128).unwrap()),
            Model::Star(StarModel::new(Beta::half(), BaseSequence::factorial(128).unwrap())),
            Model::McMullen(McMullenModel::new(Beta::new(1, 3).unwrap(), 100).unwrap()),
        ]
    }

    #[test]
    fn ratio_bounds_hold_for_appending_and_prepending_to_depth_14() {
        for model in default_models() {
            let cert = model.certificate().unwrap();
            let lo = LogLength::from_rational(&cert.interval.0).unwrap();
            let hi = LogLength::from_rational(&cert.interval.1).unwrap();
            for n in 0..=14 {
                for w in Word::all_of_length(n) {
                    let lw = model.length(&w).unwrap();
                    for i in 0..=1u8 {
                        for child in [w.child(i), w.prepend(i)] {
                            let r = model.length(&child).unwrap().div(&lw);
                            assert_ne!(ll_cmp(&r, &lo), Ordering::Less, "{} {child:?}", model.describe());
                            assert_ne!(ll_cmp(&r, &hi), Ordering::Greater, "{} {child:?}", model.describe());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn float_ratio_bounds_are_consistent_with_certificates() {
        for model in default_models() {
            let (lo, hi) = model.ratio_bounds();
            let cert = model.certificate().unwrap();
            use num_traits::ToPrimitive;
            assert!(lo <= cert.interval.0.to_f64().unwrap());
            assert!(hi >= cert.interval.1.to_f64().unwrap());
            assert!(cert.passes());
        }
    }
}
