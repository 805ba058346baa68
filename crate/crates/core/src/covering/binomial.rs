use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// The row `C(m, 0), ..., C(m, m)`.
pub fn binomial_row(m: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(m + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..m {
        c = c * BigUint::from(m - k) / BigUint::from(k + 1);
        row.push(c.clone());
    }
    row
}

/// `C(m, k)`, zero outside `0 <= k <= m`.
pub fn binomial(m: usize, k: i64) -> BigUint {
    if k < 0 || k as usize > m {
        return BigUint::zero();
    }
    let k = (k as usize).min(m - k as usize);
    let mut c = BigUint::one();
    for j in 0..k {
        c = c * BigUint::from(m - j) / BigUint::from(j + 1);
    }
    c
}

/// Row lookup that tolerates indices outside the row.
pub(crate) fn at(row: &[BigUint], k: i64) -> Option<&BigUint> {
    if k < 0 {
        return None;
    }
    row.get(k as usize)
}

/// Natural log of a positive big integer, to double precision.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift as usize).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn log2_biguint(x: &BigUint) -> f64 {
    ln_biguint(x) / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(p: f64) -> f64 {
        let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
        t(p) + t(1.0 - p)
    }

    #[test]
    fn small_rows() {
        let r = binomial_row(5);
        let v: Vec<u32> = r.iter().map(|x| x.to_u32().unwrap()).collect();
        assert_eq!(v, vec![1, 5, 10, 10, 5, 1]);
        assert_eq!(binomial(5, 6), BigUint::zero());
        assert_eq!(binomial(5, -1), BigUint::zero());
        assert_eq!(binomial(60, 30), BigUint::from(118264581564861424u64));
    }

    #[test]
    fn row_sums_to_power_of_two() {
        for m in [0usize, 1, 7, 64, 300] {
            let s: BigUint = binomial_row(m).iter().sum();
            assert_eq!(s, BigUint::one() << m);
        }
    }

    proptest! {
        // e^{nH(k/n)}/(n+1) <= C(n,k) <= e^{nH(k/n)}
        #[test]
        fn entropy_sandwich(n in 1usize..3000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as usize;
            let c = binomial(n, k as i64);
            let lc = ln_biguint(&c);
            let nh = n as f64 * h(k as f64 / n as f64);
            let slack = 1e-9 * (1.0 + nh);
            prop_assert!(lc <= nh + slack);
            prop_assert!(lc >= nh - ((n + 1) as f64).ln() - slack);
        }

        #[test]
        fn row_matches_single(m in 0usize..200, k in 0usize..200) {
            let row = binomial_row(m);
            prop_assert_eq!(at(&row, k as i64).cloned().unwrap_or_default(), binomial(m, k as i64));
        }
    }
}
