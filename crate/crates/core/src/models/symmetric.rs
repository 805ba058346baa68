use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{rat, Family, LengthFunction, RatioCertificate};
use crate::error::{Error, Result};
use crate::loglength::LogLength;
use crate::symbolic::Word;

/// Block lengths for [`CSequence::Blocks`]; block `k` (from 1) has length
/// `k!`, `k^k`, `L` or `r^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockGrowth {
    Factorial,
    SelfPower,
    Constant(u64),
    Geometric(u64),
}

impl BlockGrowth {
    fn block_len(&self, k: u64) -> Option<u64> {
        match *self {
            BlockGrowth::Factorial => (1..=k).try_fold(1u64, |acc, j| acc.checked_mul(j)),
            BlockGrowth::SelfPower => k.checked_pow(u32::try_from(k).ok()?),
            BlockGrowth::Constant(l) => Some(l),
            BlockGrowth::Geometric(r) => r.checked_pow(u32::try_from(k).ok()?),
        }
    }

    /// Ratio of consecutive block lengths is unbounded.
    pub fn has_unbounded_ratio(&self) -> bool {
        matches!(self, BlockGrowth::Factorial | BlockGrowth::SelfPower)
    }

    pub fn name(&self) -> String {
        match self {
            BlockGrowth::Factorial => "factorial".into(),
            BlockGrowth::SelfPower => "self_power".into(),
            BlockGrowth::Constant(l) => format!("constant({l})"),
            BlockGrowth::Geometric(r) => format!("geometric({r})"),
        }
    }
}

/// The contraction ratios `c_n`, all rational in `(0, 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CSequence {
    Constant(BigRational),
    /// `c_n = 1/2 - a b^-n`.
    HalfMinusPow { a: BigRational, b: u64 },
    /// Block `k` uses `values[(k - 1) mod len]`.
    Blocks { values: Vec<BigRational>, growth: BlockGrowth },
    /// `c_n = 1/(n + offset)`.
    Reciprocal { offset: u64 },
    /// `c_1, ..., c_L`, then `c_L` forever.
    Explicit(Vec<BigRational>),
}

impl CSequence {
    pub fn describe(&self) -> String {
        match self {
            CSequence::Constant(r) => format!("constant {r}"),
            CSequence::HalfMinusPow { a, b } => format!("1/2 - ({a}) * {b}^-n"),
            CSequence::Blocks { values, growth } => {
                let v: Vec<String> = values.iter().map(|r| r.to_string()).collect();
                format!("blocks [{}] with {} lengths", v.join(", "), growth.name())
            }
            CSequence::Reciprocal { offset } => format!("1/(n + {offset})"),
            CSequence::Explicit(v) => format!("explicit list of {} values", v.len()),
        }
    }
}

fn in_open_half(r: &BigRational) -> bool {
    r > &BigRational::zero() && r < &rat(1, 2)
}

/// Symmetric Cantor set: both children of a level-`n-1` interval have
/// relative length `c_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricModel {
    seq: CSequence,
    // cumulative block ends, for the block kind
    block_ends: Vec<u64>,
    values_f64: Vec<f64>,
}

const HALF: f64 = 0.5;

impl SymmetricModel {
    pub fn new(seq: CSequence) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let mut block_ends = Vec::new();
        let mut values_f64 = Vec::new();
        match &seq {
            CSequence::Constant(r) => {
                if !in_open_half(r) {
                    return bad(format!("c must lie in (0, 1/2), got {r}"));
                }
            }
            CSequence::HalfMinusPow { a, b } => {
                if *b < 2 || a <= &BigRational::zero() {
                    return bad("1/2 - a b^-n needs a > 0 and b >= 2".into());
                }
                let c1 = rat(1, 2) - a / BigRational::from_integer(BigInt::from(*b));
                if !in_open_half(&c1) {
                    return bad(format!("c_1 = {c1} is not in (0, 1/2)"));
                }
            }
            CSequence::Blocks { values, growth } => {
                if values.is_empty() {
                    return bad("block values must be nonempty".into());
                }
                if let Some(r) = values.iter().find(|r| !in_open_half(r)) {
                    return bad(format!("block value {r} is not in (0, 1/2)"));
                }
                match growth {
                    BlockGrowth::Constant(0) => return bad("block length must be positive".into()),
                    BlockGrowth::Geometric(r) if *r < 2 => return bad("geometric block ratio must be >= 2".into()),
                    _ => {}
                }
                let mut end = 0u64;
                for k in 1u64.. {
                    match growth.block_len(k).and_then(|l| end.checked_add(l)) {
                        Some(e) if e < u64::MAX / 4 => {
                            end = e;
                            block_ends.push(e);
                        }
                        _ => break,
                    }
                    if k > 100_000 {
                        break;
                    }
                }
                values_f64 = values.iter().map(|r| r.to_f64().expect("finite")).collect();
            }
            CSequence::Reciprocal { offset } => {
                if *offset < 2 {
                    return bad("1/(n + offset) needs offset >= 2".into());
                }
            }
            CSequence::Explicit(values) => {
                if values.is_empty() {
                    return bad("explicit c list must be nonempty".into());
                }
                if let Some(r) = values.iter().find(|r| !in_open_half(r)) {
                    return bad(format!("c value {r} is not in (0, 1/2)"));
                }
                values_f64 = values.iter().map(|r| r.to_f64().expect("finite")).collect();
            }
        }
        Ok(SymmetricModel { seq, block_ends, values_f64 })
    }

    pub fn constant(r: BigRational) -> Result<Self> {
        SymmetricModel::new(CSequence::Constant(r))
    }

    pub fn sequence(&self) -> &CSequence {
        &self.seq
    }

    /// Cumulative block ends `E_1 < E_2 < ...` for the block kind.
    pub fn block_ends(&self) -> Option<&[u64]> {
        match self.seq {
            CSequence::Blocks { .. } => Some(&self.block_ends),
            _ => None,
        }
    }

    /// 1-based block index of level `n`.
    fn block_index(&self, n: u64) -> usize {
        // first k with E_k >= n
        self.block_ends.partition_point(|&e| e < n) + 1
    }

    /// `c_n` for `n >= 1`.
    pub fn c(&self, n: u64) -> BigRational {
        assert!(n >= 1, "c_n is indexed from 1");
        match &self.seq {
            CSequence::Constant(r) => r.clone(),
            CSequence::HalfMinusPow { a, b } => {
                let bn = num_traits::pow(BigInt::from(*b), n as usize);
                rat(1, 2) - a / BigRational::from_integer(bn)
            }
            CSequence::Blocks { values, .. } => {
                let k = self.block_index(n);
                values[(k - 1) % values.len()].clone()
            }
            CSequence::Reciprocal { offset } => {
                BigRational::new(BigInt::one(), BigInt::from(n) + BigInt::from(*offset))
            }
            CSequence::Explicit(values) => values[(n as usize).min(values.len()) - 1].clone(),
        }
    }

    pub fn c_f64(&self, n: u64) -> f64 {
        match &self.seq {
            CSequence::Constant(r) => r.to_f64().expect("finite"),
            CSequence::HalfMinusPow { a, b } => HALF - a.to_f64().expect("finite") * (*b as f64).powf(-(n as f64)),
            CSequence::Blocks { .. } => {
                let k = self.block_index(n);
                self.values_f64[(k - 1) % self.values_f64.len()]
            }
            CSequence::Reciprocal { offset } => 1.0 / (n as f64 + *offset as f64),
            CSequence::Explicit(_) => self.values_f64[(n as usize).min(self.values_f64.len()) - 1],
        }
    }

    /// `-ln c_n`, accurate also when `c_n` is close to 1/2.
    pub fn neg_ln_c(&self, n: u64) -> f64 {
        match &self.seq {
            CSequence::HalfMinusPow { a, b } => {
                let x = a.to_f64().expect("finite") * (*b as f64).powf(-(n as f64));
                std::f64::consts::LN_2 - (-2.0 * x).ln_1p()
            }
            _ => -self.c_f64(n).ln(),
        }
    }

    /// `v[n] = -ln(c_1 ... c_n)` for `n = 0..=n_max`.
    pub fn neg_log_products(&self, n_max: u64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n_max as usize + 1);
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        v.push(0.0);
        for n in 1..=n_max {
            // Kahan summation keeps the long partial sums stable
            let y = self.neg_ln_c(n) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            v.push(acc);
        }
        v
    }

    /// `|I_w|` for any word of length `n`.
    pub fn length_at_level(&self, n: u64) -> Result<LogLength> {
        let mut out = LogLength::one();
        for j in 1..=n {
            out = out.mul(&LogLength::from_rational(&self.c(j))?);
        }
        Ok(out)
    }

    /// Exact `prod_{j <= n} c_j`.
    pub fn product_rational(&self, n: u64) -> BigRational {
        (1..=n).fold(BigRational::one(), |acc, j| acc * self.c(j))
    }

    /// Infimum of `c_n` and whether it is positive.
    pub fn inf_c(&self) -> (BigRational, bool) {
        match &self.seq {
            CSequence::Constant(r) => (r.clone(), true),
            CSequence::HalfMinusPow { .. } => (self.c(1), true),
            CSequence::Blocks { values, .. } | CSequence::Explicit(values) => {
                (values.iter().min().expect("nonempty").clone(), true)
            }
            CSequence::Reciprocal { .. } => (BigRational::zero(), false),
        }
    }

    /// Supremum of `c_n` (possibly not attained).
    pub fn sup_c(&self) -> BigRational {
        match &self.seq {
            CSequence::Constant(r) => r.clone(),
            CSequence::HalfMinusPow { .. } => rat(1, 2),
            CSequence::Blocks { values, .. } | CSequence::Explicit(values) => {
                values.iter().max().expect("nonempty").clone()
            }
            CSequence::Reciprocal { .. } => self.c(1),
        }
    }

    /// `c_n (1 - 2 c_{n+1}) / (1 - 2 c_n)`, the gap ratio one level down.
    pub fn gap_ratio(&self, n: u64) -> BigRational {
        let two = BigRational::from_integer(BigInt::from(2));
        let one = BigRational::one();
        let (c, d) = (self.c(n), self.c(n + 1));
        &c * (&one - &two * d) / (&one - &two * &c)
    }
}

fn gap_value(c: &BigRational, d: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let one = BigRational::one();
    c * (&one - &two * d) / (&one - &two * c)
}

pub fn sym_length(m: &SymmetricModel, w: &Word) -> Result<LogLength> {
    m.length_at_level(w.len() as u64)
}

/// `sum_{n <= depth} w_n u_n` with `u_1 = 1 - c_1` and
/// `u_n = c_1 ... c_{n-1} (1 - c_n)`. The truncation error is at most
/// `c_1 ... c_depth`.
pub fn sym_point(m: &SymmetricModel, w: &Word, depth: usize) -> BigRational {
    assert!(depth >= 1 && depth <= w.len(), "depth must lie in 1..=len");
    let mut sum = BigRational::zero();
    let mut prod = BigRational::one();
    for n in 1..=depth {
        let c = m.c(n as u64);
        if w.bit(n - 1) == 1 {
            sum += &prod * (BigRational::one() - &c);
        }
        prod *= c;
    }
    sum
}

/// The `{1/3, 1/4}` block model with the given growth; ratio-bounded
/// schedules are refused since they cannot separate the box dimensions.
pub fn box_nonexist_sequence(growth: BlockGrowth) -> Result<SymmetricModel> {
    if !growth.has_unbounded_ratio() {
        return Err(Error::InvalidParameter(format!(
            "block schedule {} has bounded growth ratio; block lengths must grow super-geometrically",
            growth.name()
        )));
    }
    SymmetricModel::new(CSequence::Blocks { values: vec![rat(1, 3), rat(1, 4)], growth })
}

impl LengthFunction for SymmetricModel {
    fn length(&self, w: &Word) -> Result<LogLength> {
        sym_length(self, w)
    }

    fn family(&self) -> Family {
        Family::Symmetric
    }

    fn ratio_bounds(&self) -> (f64, f64) {
        (self.inf_c().0.to_f64().unwrap_or(0.0), self.sup_c().to_f64().unwrap_or(0.5))
    }

    fn certificate(&self) -> Option<RatioCertificate> {
        let (inf, positive) = self.inf_c();
        let interval = (inf, self.sup_c());
        let gap = match &self.seq {
            CSequence::Constant(r) => (r.clone(), r.clone()),
            CSequence::HalfMinusPow { b, .. } => {
                // the ratio equals c_n / b, increasing from c_1 / b to 1 / (2b)
                let b = BigRational::from_integer(BigInt::from(*b));
                (self.c(1) / &b, rat(1, 2) / b)
            }
            CSequence::Blocks { values, .. } => {
                let mut all: Vec<BigRational> = values.clone();
                for i in 0..values.len() {
                    all.push(gap_value(&values[i], &values[(i + 1) % values.len()]));
                }
                (all.iter().min().expect("nonempty").clone(), all.iter().max().expect("nonempty").clone())
            }
            CSequence::Reciprocal { offset } => {
                // (m - 1)/((m + 1)(m - 2)) with m = n + offset decreases to zero
                let m = 1 + *offset as i64;
                (BigRational::zero(), rat(m - 1, (m + 1) * (m - 2)))
            }
            CSequence::Explicit(values) => {
                let len = values.len() as u64;
                let all: Vec<BigRational> = (1..=len).map(|n| self.gap_ratio(n)).collect();
                (all.iter().min().expect("nonempty").clone(), all.iter().max().expect("nonempty").clone())
            }
        };
        Some(RatioCertificate { interval, gap, positive_infimum: positive })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn thirds() -> SymmetricModel {
        SymmetricModel::constant(rat(1, 3)).unwrap()
    }

    fn half_minus() -> SymmetricModel {
        SymmetricModel::new(CSequence::HalfMinusPow { a: rat(1, 2), b: 2 }).unwrap()
    }

    #[test]
    fn length_examples() {
        assert_eq!(sym_length(&thirds(), &w("01")).unwrap(), LogLength::int_pow_i(3, -2));
        assert_eq!(sym_length(&half_minus(), &Word::empty()).unwrap(), LogLength::one());
        assert_eq!(sym_length(&half_minus(), &w("1")).unwrap(), LogLength::int_pow_i(2, -2));
    }

    #[test]
    fn length_depends_only_on_level() {
        let models = [thirds(), half_minus(), box_nonexist_sequence(BlockGrowth::Factorial).unwrap()];
        for m in &models {
            for n in 0..=10 {
                let first = sym_length(m, &Word::repeat(0, n)).unwrap();
                for word in Word::all_of_length(n) {
                    assert_eq!(sym_length(m, &word).unwrap(), first);
                }
            }
        }
    }

    #[test]
    fn point_examples() {
        let m = thirds();
        let one_then_zeros = Word::from_bits([1, 0, 0, 0]).unwrap();
        assert_eq!(sym_point(&m, &one_then_zeros, 1), rat(2, 3));
        assert_eq!(sym_point(&half_minus(), &Word::repeat(0, 30), 30), BigRational::zero());
        let ones = Word::repeat(1, 40);
        let x = sym_point(&m, &ones, 40);
        let err = BigRational::one() - &x;
        assert!(err >= BigRational::zero() && err <= m.product_rational(40));
    }

    #[test]
    fn block_model_layout() {
        let m = box_nonexist_sequence(BlockGrowth::Factorial).unwrap();
        assert_eq!(&m.block_ends().unwrap()[..9], &[1, 3, 9, 33, 153, 873, 5913, 46233, 409113]);
        assert_eq!(m.c(1), rat(1, 3));
        assert_eq!(m.c(2), rat(1, 4));
        assert_eq!(m.c(3), rat(1, 4));
        assert_eq!(m.c(4), rat(1, 3));
        assert_eq!(m.c(9), rat(1, 3));
        assert_eq!(m.c(10), rat(1, 4));
        assert!(box_nonexist_sequence(BlockGrowth::Constant(5)).is_err());
        assert!(box_nonexist_sequence(BlockGrowth::Geometric(3)).is_err());
        assert!(box_nonexist_sequence(BlockGrowth::SelfPower).is_ok());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(SymmetricModel::constant(rat(1, 2)).is_err());
        assert!(SymmetricModel::constant(rat(0, 1)).is_err());
        assert!(SymmetricModel::new(CSequence::Reciprocal { offset: 1 }).is_err());
        assert!(SymmetricModel::new(CSequence::HalfMinusPow { a: rat(1, 1), b: 2 }).is_err());
        assert!(SymmetricModel::new(CSequence::Explicit(vec![])).is_err());
    }

    #[test]
    fn gap_certificates() {
        let c = half_minus().certificate().unwrap();
        assert_eq!(c.gap, (rat(1, 8), rat(1, 4)));
        assert!(c.passes());
        for n in 1..40 {
            let g = half_minus().gap_ratio(n);
            assert!(g >= c.gap.0 && g < c.gap.1);
        }
        let blocks = box_nonexist_sequence(BlockGrowth::Factorial).unwrap().certificate().unwrap();
        assert_eq!(blocks.gap, (rat(1, 6), rat(1, 2)));
        let recip = SymmetricModel::new(CSequence::Reciprocal { offset: 2 }).unwrap();
        let rc = recip.certificate().unwrap();
        assert!(!rc.passes());
        for n in 1..50 {
            assert!(recip.gap_ratio(n) <= rc.gap.1);
        }
    }

    #[test]
    fn float_logs_match_exact_products() {
        for m in [half_minus(), box_nonexist_sequence(BlockGrowth::Factorial).unwrap()] {
            let v = m.neg_log_products(60);
            for n in [1u64, 7, 33, 60] {
                let exact = -m.length_at_level(n).unwrap().ln_f64();
                assert!((v[n as usize] - exact).abs() < 1e-10, "{n}: {} vs {exact}", v[n as usize]);
            }
        }
    }
}
