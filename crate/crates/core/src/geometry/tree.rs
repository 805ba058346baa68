use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;
#[cfg(test)]
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::loglength::LogLength;
use crate::models::LengthFunction;
use crate::real::Interval;
use crate::symbolic::Word;

/// Working precision for endpoint enclosures.
pub const DEFAULT_PREC: u32 = 128;
/// Precision beyond which sign decisions give up.
pub const MAX_PREC: u32 = 4096;

/// A signed sum of lengths, kept unevaluated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LengthSum {
    terms: Vec<(bool, LogLength)>,
    offset: BigRational,
}

impl LengthSum {
    pub fn zero() -> Self {
        LengthSum { terms: Vec::new(), offset: BigRational::zero() }
    }

    pub fn constant(r: BigRational) -> Self {
        LengthSum { terms: Vec::new(), offset: r }
    }

    pub fn of(x: &LogLength) -> Self {
        let mut s = LengthSum::zero();
        s.push(x, false);
        s
    }

    pub fn push(&mut self, x: &LogLength, negative: bool) {
        self.terms.push((negative, x.clone()));
    }

    pub fn plus(mut self, x: &LogLength) -> Self {
        self.push(x, false);
        self
    }

    pub fn minus(mut self, x: &LogLength) -> Self {
        self.push(x, true);
        self
    }

    pub fn add_sum(mut self, other: &LengthSum) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self.offset += &other.offset;
        self
    }

    pub fn add_rational(mut self, r: &BigRational) -> Self {
        self.offset += r;
        self
    }

    pub fn negated(&self) -> Self {
        LengthSum {
            terms: self.terms.iter().map(|(neg, x)| (!neg, x.clone())).collect(),
            offset: -&self.offset,
        }
    }

    pub fn terms(&self) -> &[(bool, LogLength)] {
        &self.terms
    }

    /// Exact value when every term is rational.
    pub fn exact(&self) -> Option<BigRational> {
        let mut acc = self.offset.clone();
        for (neg, x) in &self.terms {
            let v = x.to_rational()?;
            if *neg {
                acc -= v;
            } else {
                acc += v;
            }
        }
        Some(acc)
    }

    pub fn eval(&self, prec: u32) -> Interval {
        let inner = prec + 16;
        let mut acc = Interval::from_rational(&self.offset, inner);
        for (neg, x) in &self.terms {
            let v = x.to_interval(inner);
            acc = if *neg { acc.sub(&v, inner) } else { acc.add(&v, inner) };
        }
        acc
    }

    /// Sign of the value, decided exactly or by precision doubling; `None`
    /// when the value is too close to zero to separate at `MAX_PREC`.
    pub fn sign(&self) -> Option<Ordering> {
        if let Some(v) = self.exact() {
            return Some(v.cmp(&BigRational::zero()));
        }
        let mut prec = DEFAULT_PREC;
        while prec <= MAX_PREC {
            let iv = self.eval(prec);
            if iv.is_positive() {
                return Some(Ordering::Greater);
            }
            if iv.is_negative() {
                return Some(Ordering::Less);
            }
            prec *= 2;
        }
        None
    }
}

/// A generating interval `I_w` with exact left endpoint and length.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalNode {
    pub word: Word,
    pub left: LengthSum,
    pub length: LogLength,
    pub child_lengths: (LogLength, LogLength),
}

impl IntervalNode {
    pub fn right(&self) -> LengthSum {
        self.left.clone().plus(&self.length)
    }

    /// `|G_w| = |I_w| - |I_w0| - |I_w1|`.
    pub fn gap_length(&self) -> LengthSum {
        LengthSum::of(&self.length).minus(&self.child_lengths.0).minus(&self.child_lengths.1)
    }

    /// `(left, right)` endpoints of the open gap `G_w`.
    pub fn gap(&self) -> (LengthSum, LengthSum) {
        (self.left.clone().plus(&self.child_lengths.0), self.right().minus(&self.child_lengths.1))
    }

    pub fn enclosure(&self, prec: u32) -> Interval {
        let l = self.left.eval(prec);
        let r = self.right().eval(prec);
        Interval::new(l.lo().clone(), r.hi().clone())
    }
}

/// Checks `|I_w0| + |I_w1| < |I_w|`.
pub fn check_node<L: LengthFunction + ?Sized>(model: &L, w: &Word) -> Result<(LogLength, LogLength, LogLength)> {
    let l = model.length(w)?;
    let l0 = model.length(&w.child(0))?;
    let l1 = model.length(&w.child(1))?;
    let gap = LengthSum::of(&l).minus(&l0).minus(&l1);
    match gap.sign() {
        Some(Ordering::Greater) => Ok((l, l0, l1)),
        Some(_) => Err(Error::ModelInvalid(format!(
            "children of I_{w} do not fit: |I_w0| + |I_w1| >= |I_w|"
        ))),
        None => Err(Error::ModelInvalid(format!("could not certify a positive gap at I_{w}"))),
    }
}

/// `I_w` with its exact left endpoint: the sum over `j` with `w_j = 1` of
/// `l(w|j-1) - l(w|j-1 1)`.
pub fn build_interval<L: LengthFunction + ?Sized>(model: &L, w: &Word) -> Result<IntervalNode> {
    let mut left = LengthSum::zero();
    let mut prefix = Word::empty();
    for j in 0..w.len() {
        let (l, _, l1) = check_node(model, &prefix)?;
        if w.bit(j) == 1 {
            left = left.plus(&l).minus(&l1);
        }
        prefix = prefix.child(w.bit(j));
    }
    let (length, l0, l1) = check_node(model, w)?;
    Ok(IntervalNode { word: w.clone(), left, length, child_lengths: (l0, l1) })
}

/// Exact gap length when all lengths involved are rational.
pub fn gap_length_exact<L: LengthFunction + ?Sized>(model: &L, w: &Word) -> Result<Option<BigRational>> {
    let l = model.length(w)?;
    let l0 = model.length(&w.child(0))?;
    let l1 = model.length(&w.child(1))?;
    Ok(LengthSum::of(&l).minus(&l0).minus(&l1).exact())
}

/// Enclosure `[left(I_{bits|depth}), right(I_{bits|depth})]` of the coded
/// point, evaluated incrementally along the path.
pub fn pi_point<L: LengthFunction + ?Sized>(model: &L, bits: &Word, depth: usize, prec: u32) -> Result<Interval> {
    if depth > bits.len() {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} exceeds the {} available symbols",
            bits.len()
        )));
    }
    let inner = prec + 16;
    let mut left = Interval::zero();
    let mut prefix = Word::empty();
    let mut len = Interval::one();
    for j in 0..depth {
        let b = bits.bit(j);
        let child = prefix.child(b);
        let lc = model.length(&child)?.to_interval(inner);
        if b == 1 {
            left = left.add(&len, inner).sub(&lc, inner);
        }
        len = lc;
        prefix = child;
    }
    let right = left.add(&len, inner);
    Ok(Interval::new(left.lo().clone(), right.hi().clone()))
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
