use num_bigint::BigInt;
use num_rational::BigRational;

use super::{rat, two_exponent, Family, LengthFunction, McMullenModel, RatioCertificate, MIN_M};
use crate::error::{Error, Result};
use crate::loglength::LogLength;
use crate::symbolic::{floor_boundary, Beta, Word};

/// The base sequence `M_i`: `M` on `[N_{2k-1}, N_{2k})` and `M + 1` on
/// `[N_{2k}, N_{2k+1})`. The last listed `N_k` opens a block that never ends.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseSequence {
    m: u64,
    boundaries: Vec<u64>,
    factorial: bool,
}

impl BaseSequence {
    /// `N_k = k!` for `k = 1..=20` (every factorial that fits in 64 bits).
    pub fn factorial(m: u64) -> Result<Self> {
        let mut b = Vec::with_capacity(20);
        let mut f = 1u64;
        for k in 1..=20u64 {
            f *= k;
            b.push(f);
        }
        let mut s = BaseSequence::explicit(m, b)?;
        s.factorial = true;
        Ok(s)
    }

    pub fn explicit(m: u64, boundaries: Vec<u64>) -> Result<Self> {
        if m < MIN_M {
            return Err(Error::InvalidParameter(format!("M must be at least {MIN_M}, got {m}")));
        }
        if boundaries.first() != Some(&1) {
            return Err(Error::InvalidParameter("the sequence N_k must start with N_1 = 1".into()));
        }
        if boundaries.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidParameter("the sequence N_k must be strictly increasing".into()));
        }
        Ok(BaseSequence { m, boundaries, factorial: false })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn is_factorial(&self) -> bool {
        self.factorial
    }

    pub fn describe(&self) -> String {
        if self.factorial {
            "k!".to_string()
        } else {
            format!("{:?}", self.boundaries)
        }
    }

    /// 1-based block index `j` with `N_j <= i < N_{j+1}`.
    fn block_of(&self, i: u64) -> usize {
        self.boundaries.partition_point(|&b| b <= i)
    }

    /// `M_i` for `i >= 1`.
    pub fn m_at(&self, i: u64) -> u64 {
        assert!(i >= 1, "M_i is indexed from 1");
        if self.block_of(i) % 2 == 1 {
            self.m
        } else {
            self.m + 1
        }
    }

    /// `#{1 <= i <= n : M_i = M + 1}`.
    pub fn plus_count(&self, n: u64) -> u64 {
        let mut total = 0;
        for (idx, &start) in self.boundaries.iter().enumerate() {
            if start > n {
                break;
            }
            // block index idx + 1; even blocks carry M + 1
            if (idx + 1) % 2 == 0 {
                let end = self.boundaries.get(idx + 1).map(|&e| e - 1).unwrap_or(u64::MAX).min(n);
                total += end - start + 1;
            }
        }
        total
    }

    /// `(prod_{i = k+1}^{k+n} M_i)^-1`.
    pub fn inverse_product(&self, k: u64, n: u64) -> LogLength {
        let plus = self.plus_count(k + n) - self.plus_count(k);
        let base = n - plus;
        LogLength::int_pow_i(self.m, -(base as i64)).mul(&LogLength::int_pow_i(self.m + 1, -(plus as i64)))
    }

    /// `log2 prod_{i=1}^n M_i`.
    pub fn log2_product(&self, n: u64) -> f64 {
        let plus = self.plus_count(n);
        (n - plus) as f64 * (self.m as f64).log2() + plus as f64 * ((self.m + 1) as f64).log2()
    }
}

/// The star length function with the oscillating base sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct StarModel {
    beta: Beta,
    base: BaseSequence,
}

impl StarModel {
    pub fn new(beta: Beta, base: BaseSequence) -> Self {
        StarModel { beta, base }
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn base(&self) -> &BaseSequence {
        &self.base
    }

    pub fn m(&self) -> u64 {
        self.base.m
    }

    pub fn class_length(&self, n: usize, n1: usize, n2: usize) -> LogLength {
        LogLength::pow2(&two_exponent(self.beta, n1, n2)).mul(&self.base.inverse_product(0, n as u64))
    }

    pub fn class_log2(&self, n: usize, n1: usize, n2: usize) -> f64 {
        let b = self.beta.to_f64();
        (1.0 - b) * n1 as f64 - b * n2 as f64 - self.base.log2_product(n as u64)
    }

    /// The two constant-base models bracketing this one: `(l_M, l_{M+1})`.
    pub fn constant_base_pair(&self) -> (McMullenModel, McMullenModel) {
        (
            McMullenModel::new(self.beta, self.base.m).expect("M already validated"),
            McMullenModel::new(self.beta, self.base.m + 1).expect("M + 1 is valid too"),
        )
    }
}

pub fn star_length(m: &StarModel, w: &Word) -> LogLength {
    let (n1, n2) = w.ones_split(m.beta);
    m.class_length(w.len(), n1, n2)
}

/// `l*(u w) / l*(u)` from the closed form: with `v = u_{floor(beta k)+1..k} w`,
/// the exponent of 2 is `-beta L1(w)` plus the ones among the first
/// `floor(beta (n+k)) - floor(beta k)` symbols of `v`.
pub fn star_relative_length(m: &StarModel, u: &Word, w: &Word) -> LogLength {
    let k = u.len();
    let n = w.len();
    let fk = floor_boundary(k, m.beta);
    let fnk = floor_boundary(n + k, m.beta);
    let take = fnk - fk;
    // ones among v[0..take] where v = u[fk..k] ++ w
    let from_u = (k - fk).min(take);
    let ones_u = u.ones_between(fk, fk + from_u);
    let ones_w = if take > from_u { w.ones_between(0, take - from_u) } else { 0 };
    let ones_v = (ones_u + ones_w) as i64;
    let l1 = w.ones() as i64;
    let p = m.beta.num() as i64;
    let q = m.beta.den() as i64;
    let e = BigRational::new(BigInt::from(ones_v * q - p * l1), BigInt::from(q));
    LogLength::pow2(&e).mul(&m.base.inverse_product(k as u64, n as u64))
}

impl LengthFunction for StarModel {
    fn length(&self, w: &Word) -> Result<LogLength> {
        Ok(star_length(self, w))
    }

    fn family(&self) -> Family {
        Family::Star
    }

    fn ratio_bounds(&self) -> (f64, f64) {
        let m = self.base.m as f64;
        (1.0 / (2.0 * m + 2.0), 2.0 / m)
    }

    fn certificate(&self) -> Option<RatioCertificate> {
        let m = self.base.m as i64;
        Some(RatioCertificate {
            interval: (rat(1, 2 * m + 2), rat(2, m)),
            gap: (rat(m - 4, (2 * m + 2) * m), rat(2, m - 4)),
            positive_infimum: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loglength::ll_cmp;
    use proptest::prelude::*;
    use std::cmp::Ordering;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn default_star() -> StarModel {
        StarModel::new(Beta::half(), BaseSequence::factorial(128).unwrap())
    }

    #[test]
    fn examples() {
        let m = default_star();
        assert_eq!(star_length(&m, &Word::empty()), LogLength::one());
        assert_eq!(star_length(&m, &w("0")), LogLength::int_pow_i(128, -1));
        assert_eq!(
            star_length(&m, &w("00")),
            LogLength::int_pow_i(128, -1).mul(&LogLength::int_pow_i(129, -1))
        );
    }

    #[test]
    fn base_sequence_blocks() {
        let b = BaseSequence::factorial(128).unwrap();
        assert_eq!(b.m_at(1), 128);
        for i in 2..6 {
            assert_eq!(b.m_at(i), 129);
        }
        for i in 6..24 {
            assert_eq!(b.m_at(i), 128);
        }
        assert_eq!(b.m_at(24), 129);
        assert_eq!(b.m_at(119), 129);
        assert_eq!(b.m_at(120), 128);
        for n in [0u64, 1, 5, 6, 23, 24, 200, 1000, 5039, 5040, 10_000] {
            let brute = (1..=n).filter(|&i| b.m_at(i) == 129).count() as u64;
            assert_eq!(b.plus_count(n), brute, "n = {n}");
        }
    }

    #[test]
    fn explicit_sequence_last_block_is_unbounded() {
        let b = BaseSequence::explicit(128, vec![1, 3, 10]).unwrap();
        assert_eq!(b.m_at(2), 128);
        assert_eq!(b.m_at(3), 129);
        assert_eq!(b.m_at(9), 129);
        assert_eq!(b.m_at(10), 128);
        assert_eq!(b.m_at(1_000_000), 128);
        assert!(BaseSequence::explicit(128, vec![2, 3]).is_err());
        assert!(BaseSequence::explicit(128, vec![1, 3, 3]).is_err());
    }

    #[test]
    fn agrees_with_mcmullen_for_constant_sequence() {
        let beta = Beta::new(1, 3).unwrap();
        let star = StarModel::new(beta, BaseSequence::explicit(128, vec![1]).unwrap());
        let mc = McMullenModel::new(beta, 128).unwrap();
        for n in 0..8 {
            for word in Word::all_of_length(n) {
                assert_eq!(star_length(&star, &word), super::super::mc_length(&mc, &word));
            }
        }
    }

    #[test]
    fn relative_length_special_cases() {
        let m = default_star();
        let beta = m.beta();
        // u = empty
        for word in Word::all_of_length(6) {
            assert_eq!(star_relative_length(&m, &Word::empty(), &word), star_length(&m, &word));
        }
        let k = 30;
        let n_max = k; // (1 - beta) k / beta = k for beta = 1/2
        for n in [1usize, 5, 17, n_max] {
            let ones_u = Word::repeat(1, k);
            let zeros_w = Word::repeat(0, n);
            let e = (floor_boundary(n + k, beta) - floor_boundary(k, beta)) as i64;
            let expect = LogLength::int_pow_i(2, e).mul(&m.base().inverse_product(k as u64, n as u64));
            assert_eq!(star_relative_length(&m, &ones_u, &zeros_w), expect);

            let zeros_u = Word::repeat(0, k);
            let mut bits = vec![0u8; n];
            for b in bits.iter_mut().step_by(3) {
                *b = 1;
            }
            let word = Word::from_bits(bits).unwrap();
            let j = word.ones() as i64;
            let expect = LogLength::pow2(&rat(-j, 2)).mul(&m.base().inverse_product(k as u64, n as u64));
            assert_eq!(star_relative_length(&m, &zeros_u, &word), expect);
        }
    }

    fn arb_word(max: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec(0u8..=1, 0..=max).prop_map(|b| Word::from_bits(b).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn relative_length_times_prefix_length_is_concatenation(u in arb_word(20), v in arb_word(20), p in 1u64..5) {
            let beta = Beta::new(p, 5).unwrap();
            let m = StarModel::new(beta, BaseSequence::factorial(128).unwrap());
            let lhs = star_relative_length(&m, &u, &v).mul(&star_length(&m, &u));
            prop_assert_eq!(lhs, star_length(&m, &u.concat(&v)));
        }

        #[test]
        fn relative_length_bounds(u in arb_word(20), v in arb_word(20)) {
            let m = default_star();
            let n = v.len() as i64;
            let l1 = v.ones() as i64;
            let r = star_relative_length(&m, &u, &v);
            // 2^(-beta L1) (M+1)^-n <= r <= 2^(1 + beta n - beta L1) M^-n
            let lo = LogLength::pow2(&rat(-l1, 2)).mul(&LogLength::int_pow_i(129, -n));
            let hi = LogLength::pow2(&rat(2 + n - l1, 2)).mul(&LogLength::int_pow_i(128, -n));
            prop_assert_ne!(ll_cmp(&r, &lo), Ordering::Less);
            prop_assert_ne!(ll_cmp(&r, &hi), Ordering::Greater);
        }
    }
}
