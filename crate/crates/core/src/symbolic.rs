//! Finite binary words and the one-count statistics consumed by the length
//! functions.
//!
//! A [`Word`] carries a cumulative ones-profile so that the number of `1`s in
//! any prefix window is available in constant time. The window split at
//! `floor(beta * n)` is what every length formula in [`crate::models`] reads.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::BigRational;
use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest denominator accepted for `beta`. Keeps every exponent denominator
/// small enough for exact root extraction.
pub const MAX_BETA_DENOMINATOR: u64 = 1 << 16;

/// A rational window fraction `num/den` with `0 < num < den`, stored reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Beta {
    num: u64,
    den: u64,
}

impl Beta {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "beta must satisfy 0 < beta < 1, got {num}/{den}"
            )));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        if den > MAX_BETA_DENOMINATOR {
            return Err(Error::InvalidParameter(format!(
                "beta denominator {den} exceeds {MAX_BETA_DENOMINATOR}"
            )));
        }
        Ok(Beta { num, den })
    }

    pub fn half() -> Self {
        Beta { num: 1, den: 2 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    /// `floor(beta * n)` in exact integer arithmetic.
    pub fn floor_mul(&self, n: usize) -> usize {
        floor_boundary(n, *self)
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("beta must be written as \"p/q\", got {s:?}"));
        let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        Beta::new(p, q)
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `floor(beta * n)` computed as `(p n - (p n mod q)) / q`.
pub fn floor_boundary(n: usize, beta: Beta) -> usize {
    let pn = beta.num as u128 * n as u128;
    ((pn - pn % beta.den as u128) / beta.den as u128) as usize
}

/// A finite word over `{0, 1}` with its cumulative ones-profile.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    bits: Vec<u8>,
    // ones[j] = number of 1s among the first j symbols; ones.len() == bits.len() + 1
    ones: Vec<u32>,
}

impl Word {
    pub fn empty() -> Self {
        Word { bits: Vec::new(), ones: vec![0] }
    }

    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Result<Self> {
        let mut w = Word::empty();
        for b in bits {
            if b > 1 {
                return Err(Error::InvalidWord(format!("symbol {b} is not 0 or 1")));
            }
            w.push_in_place(b);
        }
        Ok(w)
    }

    /// The word `s^k`.
    pub fn repeat(symbol: u8, k: usize) -> Self {
        debug_assert!(symbol <= 1);
        let bits = vec![symbol; k];
        let ones = (0..=k as u32).map(|j| j * symbol as u32).collect();
        Word { bits, ones }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Symbol at 0-based position `i`.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Cumulative ones-profile; entry `j` counts the 1s among the first `j` symbols.
    pub fn ones_profile(&self) -> &[u32] {
        &self.ones
    }

    /// Total number of 1s.
    pub fn ones(&self) -> usize {
        self.ones[self.bits.len()] as usize
    }

    /// Number of 1s among positions `from..to` (0-based, half open).
    pub fn ones_between(&self, from: usize, to: usize) -> usize {
        (self.ones[to] - self.ones[from]) as usize
    }

    pub fn prefix(&self, k: usize) -> Word {
        assert!(k <= self.len(), "prefix length {k} exceeds word length {}", self.len());
        Word { bits: self.bits[..k].to_vec(), ones: self.ones[..=k].to_vec() }
    }

    /// The word with its last symbol removed.
    pub fn remove_last(&self) -> Result<Word> {
        if self.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(self.prefix(self.len() - 1))
    }

    fn push_in_place(&mut self, b: u8) {
        let last = *self.ones.last().expect("profile is never empty");
        self.bits.push(b);
        self.ones.push(last + b as u32);
    }

    /// The word `self · b`.
    pub fn child(&self, b: u8) -> Word {
        assert!(b <= 1);
        let mut w = self.clone();
        w.push_in_place(b);
        w
    }

    /// The word `b · self`.
    pub fn prepend(&self, b: u8) -> Word {
        assert!(b <= 1);
        let mut bits = Vec::with_capacity(self.len() + 1);
        bits.push(b);
        bits.extend_from_slice(&self.bits);
        Word::from_bits(bits).expect("bits are binary")
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.bits.reserve(other.len());
        w.ones.reserve(other.len());
        for &b in &other.bits {
            w.push_in_place(b);
        }
        w
    }

    /// Drops the first `k` symbols.
    pub fn suffix_from(&self, k: usize) -> Word {
        Word::from_bits(self.bits[k..].iter().copied()).expect("bits are binary")
    }

    /// `(N1, N2)`: ones among the first `floor(beta n)` symbols and among the rest.
    pub fn ones_split(&self, beta: Beta) -> (usize, usize) {
        let n = self.len();
        let w = floor_boundary(n, beta);
        let n1 = self.ones[w] as usize;
        (n1, self.ones() - n1)
    }

    /// Every word of length `n`, in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = Word> {
        assert!(n < 63);
        (0u64..(1u64 << n)).map(move |code| {
            Word::from_bits((0..n).rev().map(|i| ((code >> i) & 1) as u8)).expect("binary")
        })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut w = Word::empty();
        for ch in s.chars() {
            match ch {
                '0' => w.push_in_place(0),
                '1' => w.push_in_place(1),
                other => {
                    return Err(Error::InvalidWord(format!(
                        "unexpected character {other:?}; words are strings of '0' and '1'"
                    )))
                }
            }
        }
        Ok(w)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn ones_split_examples() {
        let half = Beta::half();
        assert_eq!(Word::empty().ones_split(half), (0, 0));
        assert_eq!(w("11").ones_split(half), (1, 1));
        assert_eq!(w("101").ones_split(half), (1, 1));
    }

    #[test]
    fn remove_last_examples() {
        assert_eq!(w("0").remove_last().unwrap(), Word::empty());
        assert_eq!(w("10").remove_last().unwrap(), w("1"));
        assert_eq!(w("110").remove_last().unwrap(), w("11"));
        assert_eq!(Word::empty().remove_last(), Err(Error::EmptyWord));
    }

    #[test]
    fn floor_boundary_examples() {
        assert_eq!(floor_boundary(3, Beta::half()), 1);
        assert_eq!(floor_boundary(0, Beta::half()), 0);
        assert_eq!(floor_boundary(7, Beta::new(2, 3).unwrap()), 4);
    }

    #[test]
    fn floor_boundary_matches_integer_formula_up_to_a_million() {
        for beta in [Beta::half(), Beta::new(2, 3).unwrap(), Beta::new(7, 19).unwrap()] {
            let (p, q) = (beta.num(), beta.den());
            for n in 0..=1_000_000u64 {
                let pn = p * n;
                assert_eq!(floor_boundary(n as usize, beta) as u64, (pn - pn % q) / q);
            }
        }
    }

    #[test]
    fn beta_rejects_out_of_range() {
        assert!(Beta::new(0, 3).is_err());
        assert!(Beta::new(3, 3).is_err());
        assert!(Beta::new(1, 0).is_err());
        assert_eq!("2/4".parse::<Beta>().unwrap(), Beta::half());
        assert!("0.5".parse::<Beta>().is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("0110").to_string(), "0110");
        assert!("01a".parse::<Word>().is_err());
        assert_eq!(Word::empty().to_string(), "");
        let json = serde_json::to_string(&w("101")).unwrap();
        assert_eq!(json, "\"101\"");
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        proptest::collection::vec(0u8..=1, 0..64).prop_map(|b| Word::from_bits(b).unwrap())
    }

    fn arb_beta() -> impl Strategy<Value = Beta> {
        (1u64..50).prop_flat_map(|q| (1..q.max(2)).prop_map(move |p| (p, q.max(2))))
            .prop_map(|(p, q)| Beta::new(p, q).unwrap())
    }

    fn split_from_scratch(w: &Word, beta: Beta) -> (usize, usize) {
        let b = floor_boundary(w.len(), beta);
        let n1 = w.bits()[..b].iter().filter(|&&x| x == 1).count();
        let n2 = w.bits()[b..].iter().filter(|&&x| x == 1).count();
        (n1, n2)
    }

    proptest! {
        #[test]
        fn split_sums_to_total_ones(word in arb_word(), beta in arb_beta()) {
            let (n1, n2) = word.ones_split(beta);
            prop_assert_eq!(n1 + n2, word.ones());
            prop_assert_eq!((n1, n2), split_from_scratch(&word, beta));
        }

        #[test]
        fn removing_last_changes_at_most_two_positions(word in arb_word(), beta in arb_beta()) {
            prop_assume!(!word.is_empty());
            let n = word.len();
            let parent = word.remove_last().unwrap();
            let (n1, n2) = word.ones_split(beta);
            let (m1, m2) = split_from_scratch(&parent, beta);
            let last = word.bit(n - 1) as usize;
            let b = floor_boundary(n, beta);
            if floor_boundary(n - 1, beta) == b {
                prop_assert_eq!((m1, m2), (n1, n2 - last));
            } else {
                let boundary = word.bit(b - 1) as usize;
                prop_assert_eq!((m1, m2), (n1 - boundary, n2 - last + boundary));
            }
        }

        #[test]
        fn prefix_profile_is_consistent(word in arb_word()) {
            let prof = word.ones_profile();
            prop_assert_eq!(prof[0], 0);
            for j in 0..word.len() {
                prop_assert!(prof[j + 1] - prof[j] <= 1);
            }
            prop_assert_eq!(word.prefix(word.len()), word.clone());
        }
    }
}
