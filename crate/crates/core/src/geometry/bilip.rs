use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::tree::{check_node, LengthSum, DEFAULT_PREC};
use crate::error::{Error, Result};
use crate::loglength::{ll_cmp, LogLength};
use crate::models::{Family, LengthFunction, RatioCertificate};
use crate::real::{DecimalEnclosure, Interval};
use crate::symbolic::Word;

const RATIO_MAX_PREC: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    Interval,
    Gap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certification {
    /// The model's closed-form bounds cover every depth.
    Certified,
    /// Only the probed words were examined.
    DepthBounded,
}

/// One ratio `|I_{iw}|/|I_w|` or `|G_{iw}|/|G_w|`.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub word: Word,
    pub symbol: u8,
    pub kind: RatioKind,
    /// Exact ratio for interval-type witnesses.
    pub exact: Option<LogLength>,
    /// Exact value when the gap lengths are rational.
    pub rational: Option<String>,
    pub enclosure: DecimalEnclosure,
    #[serde(skip)]
    value: Interval,
}

impl Witness {
    pub fn value(&self) -> &Interval {
        &self.value
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub interval: (String, String),
    pub gap: (String, String),
    pub positive_infimum: bool,
    pub passes: bool,
}

impl CertificateReport {
    fn of(c: &RatioCertificate) -> Self {
        let s = |r: &BigRational| format!("{}/{}", r.numer(), r.denom());
        CertificateReport {
            interval: (s(&c.interval.0), s(&c.interval.1)),
            gap: (s(&c.gap.0), s(&c.gap.1)),
            positive_infimum: c.positive_infimum,
            passes: c.passes(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BiLipReport {
    pub family: Family,
    pub depth: usize,
    /// Rigorous lower bound for the smallest probed ratio.
    pub theta_star: f64,
    /// Rigorous upper bound for the largest probed ratio.
    pub theta_upper: f64,
    pub min_witness: Witness,
    pub max_witness: Witness,
    pub ratios_checked: usize,
    /// Ratios outside the certificate bounds, or too close to a bound to
    /// decide.
    pub violations: usize,
    pub certificate: Option<CertificateReport>,
    pub certification: Certification,
    pub verdict: Verdict,
}

impl BiLipReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

struct Lengths {
    exact: HashMap<Word, LogLength>,
    encl: HashMap<Word, Interval>,
}

impl Lengths {
    fn build<L: LengthFunction + ?Sized>(model: &L, max_len: usize, prec: u32) -> Result<Self> {
        let words: Vec<Word> = (0..=max_len).flat_map(Word::all_of_length).collect();
        let vals: Vec<(Word, LogLength, Interval)> = words
            .into_par_iter()
            .map(|w| {
                let l = model.length(&w)?;
                let iv = l.to_interval(prec);
                Ok((w, l, iv))
            })
            .collect::<Result<_>>()?;
        let mut exact = HashMap::with_capacity(vals.len());
        let mut encl = HashMap::with_capacity(vals.len());
        for (w, l, iv) in vals {
            encl.insert(w.clone(), iv);
            exact.insert(w, l);
        }
        Ok(Lengths { exact, encl })
    }

    fn get(&self, w: &Word) -> &LogLength {
        &self.exact[w]
    }

    fn gap_sum(&self, w: &Word) -> LengthSum {
        LengthSum::of(self.get(w)).minus(self.get(&w.child(0))).minus(self.get(&w.child(1)))
    }

    fn gap_encl(&self, w: &Word, prec: u32) -> Interval {
        let e = |v: &Word| &self.encl[v];
        e(w).sub(e(&w.child(0)), prec).sub(e(&w.child(1)), prec)
    }
}

fn rat_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Whether `v` lies in `[lo, hi]`; `None` when undecided.
fn within(v: &Interval, lo: &BigRational, hi: &BigRational) -> Option<bool> {
    let lo_ok = v.lo().to_rational() >= *lo;
    let hi_ok = v.hi().to_rational() <= *hi;
    if lo_ok && hi_ok {
        return Some(true);
    }
    if v.hi().to_rational() < *lo || v.lo().to_rational() > *hi {
        return Some(false);
    }
    None
}

fn ll_within(x: &LogLength, lo: &BigRational, hi: &BigRational) -> Result<bool> {
    let zero = BigRational::from_integer(0.into());
    let lo_ok = *lo <= zero || ll_cmp(x, &LogLength::from_rational(lo)?).is_ge();
    let hi_ok = *hi > zero && ll_cmp(x, &LogLength::from_rational(hi)?).is_le();
    Ok(lo_ok && hi_ok)
}

fn interval_witness(lengths: &Lengths, w: &Word, i: u8, prec: u32) -> Witness {
    let r = lengths.get(&w.prepend(i)).div(lengths.get(w));
    let value = r.to_interval(prec);
    Witness {
        word: w.clone(),
        symbol: i,
        kind: RatioKind::Interval,
        rational: r.to_rational().as_ref().map(rat_string),
        exact: Some(r),
        enclosure: DecimalEnclosure::of(&value, 17),
        value,
    }
}

fn gap_witness(lengths: &Lengths, w: &Word, i: u8, prec: u32) -> Result<(Witness, LengthSum, LengthSum)> {
    let iw = w.prepend(i);
    let num = lengths.gap_sum(&iw);
    let den = lengths.gap_sum(w);
    let rational = match (num.exact(), den.exact()) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };
    let value = match &rational {
        Some(r) => Interval::from_rational(r, prec),
        None => lengths
            .gap_encl(&iw, prec)
            .div(&lengths.gap_encl(w, prec), prec)
            .ok_or_else(|| Error::ModelInvalid(format!("gap G_{w} is not certifiably positive")))?,
    };
    let witness = Witness {
        word: w.clone(),
        symbol: i,
        kind: RatioKind::Gap,
        exact: None,
        rational: rational.as_ref().map(rat_string),
        enclosure: DecimalEnclosure::of(&value, 17),
        value,
    };
    Ok((witness, num, den))
}

/// Decides whether a gap ratio lies within the certificate bounds,
/// refining the enclosure as needed.
fn gap_within(w: &Witness, num: &LengthSum, den: &LengthSum, lo: &BigRational, hi: &BigRational) -> Option<bool> {
    if let Some(r) = &w.rational {
        let r: BigRational = r.parse().ok()?;
        return Some(&r >= lo && &r <= hi);
    }
    let mut prec = DEFAULT_PREC;
    loop {
        let v = num.eval(prec).div(&den.eval(prec), prec)?;
        if let Some(b) = within(&v, lo, hi) {
            return Some(b);
        }
        if prec >= RATIO_MAX_PREC {
            return None;
        }
        prec *= 2;
    }
}

/// Probes all `|I_{iw}|/|I_w|` and `|G_{iw}|/|G_w|` with `|w| <= depth`.
pub fn bilip_check<L: LengthFunction + ?Sized>(model: &L, depth: usize) -> Result<BiLipReport> {
    if depth < 1 {
        return Err(Error::InvalidParameter("bi-Lipschitz depth must be at least 1".into()));
    }
    if depth > 20 {
        return Err(Error::InvalidParameter(format!("depth {depth} exceeds the limit of 20")));
    }
    let prec = DEFAULT_PREC;
    let lengths = Lengths::build(model, depth + 2, prec)?;
    // every probed gap must be positive before its ratio means anything
    let nodes: Vec<Word> = (0..=depth + 1).flat_map(Word::all_of_length).collect();
    nodes.par_iter().try_for_each(|w| check_node(model, w).map(|_| ()))?;

    let cert = model.certificate();
    let words: Vec<Word> = (0..=depth).flat_map(Word::all_of_length).collect();
    let per_word: Vec<(Vec<Witness>, usize)> = words
        .par_iter()
        .map(|w| {
            let mut out = Vec::with_capacity(4);
            let mut bad = 0usize;
            for i in 0..2u8 {
                let iw = interval_witness(&lengths, w, i, prec);
                if let Some(c) = &cert {
                    if !ll_within(iw.exact.as_ref().expect("interval witness"), &c.interval.0, &c.interval.1)? {
                        bad += 1;
                    }
                }
                out.push(iw);
                let (gw, num, den) = gap_witness(&lengths, w, i, prec)?;
                if let Some(c) = &cert {
                    if gap_within(&gw, &num, &den, &c.gap.0, &c.gap.1) != Some(true) {
                        bad += 1;
                    }
                }
                out.push(gw);
            }
            Ok((out, bad))
        })
        .collect::<Result<_>>()?;

    let violations = per_word.iter().map(|(_, b)| b).sum();
    let all: Vec<Witness> = per_word.into_iter().flat_map(|(w, _)| w).collect();
    let ratios_checked = all.len();
    let min_witness = all
        .iter()
        .min_by(|a, b| a.value.lo().cmp(b.value.lo()))
        .expect("depth >= 1 yields ratios")
        .clone();
    let max_witness = all
        .iter()
        .max_by(|a, b| a.value.hi().cmp(b.value.hi()))
        .expect("depth >= 1 yields ratios")
        .clone();
    let theta_star = min_witness.value.lo().to_f64(crate::real::Round::Down);
    let theta_upper = max_witness.value.hi().to_f64(crate::real::Round::Up);

    let probed_ok = min_witness.value.is_positive() && max_witness.value.hi().to_rational() < BigRational::from_integer(1.into());
    let cert_ok = cert.as_ref().is_none_or(|c| c.passes());
    let verdict = if probed_ok && cert_ok && violations == 0 { Verdict::Pass } else { Verdict::Fail };
    let certification = if cert.is_some() { Certification::Certified } else { Certification::DepthBounded };
    Ok(BiLipReport {
        family: model.family(),
        depth,
        theta_star,
        theta_upper,
        min_witness,
        max_witness,
        ratios_checked,
        violations,
        certificate: cert.as_ref().map(CertificateReport::of),
        certification,
        verdict,
    })
}

/// Closed-form `(theta_*, theta^*)` from a certificate, as doubles.
pub fn certificate_thetas(c: &RatioCertificate) -> (f64, f64) {
    let lo = c.interval.0.clone().min(c.gap.0.clone()).to_f64().unwrap_or(0.0);
    let hi = c.interval.1.clone().max(c.gap.1.clone()).to_f64().unwrap_or(1.0);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tree::rat;
    use crate::models::{CSequence, McMullenModel, SymmetricModel};
    use crate::symbolic::Beta;

    #[test]
    fn mcmullen_passes_within_closed_form() {
        let m = McMullenModel::new(Beta::half(), 128).unwrap();
        let r = bilip_check(&m, 6).unwrap();
        assert!(r.passed());
        assert_eq!(r.violations, 0);
        assert_eq!(r.certification, Certification::Certified);
        let mf = 128.0;
        assert!(r.theta_star >= 1.0 / (2.0 * mf) * (mf - 4.0) / (mf - 1.0));
        assert!(r.theta_upper <= 2.0 / mf * (mf - 1.0) / (mf - 4.0));
    }

    #[test]
    fn half_minus_pow_passes() {
        let m = SymmetricModel::new(CSequence::HalfMinusPow { a: rat(1, 2), b: 2 }).unwrap();
        let r = bilip_check(&m, 8).unwrap();
        assert!(r.passed());
        // the smallest gap ratio is the first one, c_1(1 - 2c_2)/(1 - 2c_1) = 1/8
        assert_eq!(m.gap_ratio(1), rat(1, 8));
        assert!(r.theta_star <= 0.125);
    }

    #[test]
    fn reciprocal_fails() {
        let m = SymmetricModel::new(CSequence::Reciprocal { offset: 2 }).unwrap();
        let r = bilip_check(&m, 8).unwrap();
        assert!(!r.passed());
        assert!(r.theta_star > 0.0);
        assert!(!r.certificate.unwrap().passes);
    }

    #[test]
    fn constant_thirds_ratios_are_exact() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        let r = bilip_check(&m, 4).unwrap();
        assert!(r.passed());
        assert_eq!(r.min_witness.rational.as_deref(), Some("1/3"));
        assert_eq!(r.max_witness.rational.as_deref(), Some("1/3"));
    }

    #[test]
    fn depth_zero_rejected() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        assert!(bilip_check(&m, 0).is_err());
    }
}
