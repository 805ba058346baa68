use num_bigint::BigInt;
use num_rational::BigRational;

use super::{rat, two_exponent, Family, LengthFunction, RatioCertificate, MIN_M};
use crate::error::{Error, Result};
use crate::loglength::LogLength;
use crate::symbolic::{Beta, Word};

/// `l(w) = 2^((1-beta) N1 - beta N2) * M^-n`.
#[derive(Clone, Debug, PartialEq)]
pub struct McMullenModel {
    beta: Beta,
    m: u64,
}

impl McMullenModel {
    pub fn new(beta: Beta, m: u64) -> Result<Self> {
        if m < MIN_M {
            return Err(Error::InvalidParameter(format!("M must be at least {MIN_M}, got {m}")));
        }
        Ok(McMullenModel { beta, m })
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Length of every word of length `n` with split `(n1, n2)`.
    pub fn class_length(&self, n: usize, n1: usize, n2: usize) -> LogLength {
        LogLength::pow2(&two_exponent(self.beta, n1, n2))
            .mul(&LogLength::int_pow(self.m, &BigRational::from_integer(-BigInt::from(n))))
    }

    /// `log2` of [`Self::class_length`] in floating point.
    pub fn class_log2(&self, n: usize, n1: usize, n2: usize) -> f64 {
        let b = self.beta.to_f64();
        (1.0 - b) * n1 as f64 - b * n2 as f64 - n as f64 * (self.m as f64).log2()
    }
}

pub fn mc_length(m: &McMullenModel, w: &Word) -> LogLength {
    let (n1, n2) = w.ones_split(m.beta);
    m.class_length(w.len(), n1, n2)
}

impl LengthFunction for McMullenModel {
    fn length(&self, w: &Word) -> Result<LogLength> {
        Ok(mc_length(self, w))
    }

    fn family(&self) -> Family {
        Family::McMullen
    }

    fn ratio_bounds(&self) -> (f64, f64) {
        let m = self.m as f64;
        (1.0 / (2.0 * m), 2.0 / m)
    }

    fn certificate(&self) -> Option<RatioCertificate> {
        let m = self.m as i64;
        Some(RatioCertificate {
            interval: (rat(1, 2 * m), rat(2, m)),
            gap: (rat(m - 4, 2 * m * (m - 1)), rat(2 * (m - 1), m * (m - 4))),
            positive_infimum: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn examples() {
        let m = McMullenModel::new(Beta::half(), 128).unwrap();
        assert_eq!(mc_length(&m, &Word::empty()), LogLength::one());
        assert_eq!(mc_length(&m, &w("0")), LogLength::int_pow_i(128, -1));
        assert_eq!(mc_length(&m, &w("11")), LogLength::int_pow_i(128, -2));
        // "1": N1 = 0, N2 = 1
        assert_eq!(mc_length(&m, &w("1")), LogLength::pow2(&rat(-1, 2)).mul(&LogLength::int_pow_i(2, -7)));
    }

    #[test]
    fn rejects_small_base() {
        assert!(McMullenModel::new(Beta::half(), 99).is_err());
    }

    #[test]
    fn class_log2_matches_exact() {
        let m = McMullenModel::new(Beta::new(2, 5).unwrap(), 131).unwrap();
        for (n, n1, n2) in [(0, 0, 0), (5, 1, 2), (40, 10, 20), (300, 100, 90)] {
            let exact = m.class_length(n, n1, n2).log2_f64();
            assert!((exact - m.class_log2(n, n1, n2)).abs() < 1e-9 * (1.0 + exact.abs()));
        }
    }
}
