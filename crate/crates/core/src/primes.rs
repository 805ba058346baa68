//! Integer factorization for the bases that appear in length functions.
//!
//! Deterministic Miller-Rabin and Brent's variant of Pollard rho on `u64`,
//! with a bounded big-integer fallback for the numerators of `c_n` values
//! such as `2^n - 1`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{OnceLock, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic for every `u64` with the first twelve prime bases.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &SMALL_PRIMES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut ys = 2u64;
        let mut r = 1u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("rho always finds a factor of a composite")
}

fn factor_into(n: u64, out: &mut BTreeMap<u64, u32>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        *out.entry(n).or_insert(0) += 1;
        return;
    }
    let d = rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

type FactorCache = RwLock<HashMap<u64, Vec<(u64, u32)>>>;

fn cache() -> &'static FactorCache {
    static CACHE: OnceLock<FactorCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Prime factorization of `n >= 1`, sorted by prime. Memoized.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "cannot factor zero");
    if let Some(v) = cache().read().expect("factor cache poisoned").get(&n) {
        return v.clone();
    }
    let mut out = BTreeMap::new();
    let mut m = n;
    for p in [2u64, 3, 5, 7, 11, 13] {
        while m.is_multiple_of(p) {
            *out.entry(p).or_insert(0) += 1;
            m /= p;
        }
    }
    factor_into(m, &mut out);
    let v: Vec<_> = out.into_iter().collect();
    cache().write().expect("factor cache poisoned").insert(n, v.clone());
    v
}

fn big_is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s as usize;
    'witness: for &a in &SMALL_PRIMES {
        let a = BigUint::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn big_rho(n: &BigUint, budget: u64) -> Option<BigUint> {
    for c in 1u32..8 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u32);
        let mut y = x.clone();
        let mut q = BigUint::one();
        let mut steps = 0u64;
        loop {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            q = (q * diff) % n;
            steps += 1;
            if steps.is_multiple_of(64) {
                let g = q.gcd(n);
                if !g.is_one() {
                    if &g != n {
                        return Some(g);
                    }
                    break;
                }
            }
            if steps > budget {
                return None;
            }
        }
    }
    None
}

fn big_factor_into(n: BigUint, out: &mut BTreeMap<u64, u32>) -> Result<()> {
    if n.is_one() {
        return Ok(());
    }
    if let Some(small) = n.to_u64() {
        for (p, e) in factor(small) {
            *out.entry(p).or_insert(0) += e;
        }
        return Ok(());
    }
    if big_is_probable_prime(&n) {
        return Err(Error::InvalidParameter(format!(
            "prime factor {n} exceeds the supported 64-bit range"
        )));
    }
    let d = big_rho(&n, 1 << 20)
        .ok_or_else(|| Error::InvalidParameter(format!("could not factor {n} within budget")))?;
    let rest = &n / &d;
    big_factor_into(d, out)?;
    big_factor_into(rest, out)
}

/// Factorization of an arbitrary positive integer whose prime factors all
/// fit in 64 bits.
pub fn factor_big(n: &BigUint) -> Result<Vec<(u64, u32)>> {
    if n.is_zero() {
        return Err(Error::InvalidParameter("cannot factor zero".into()));
    }
    let mut out = BTreeMap::new();
    let mut m = n.clone();
    let tz = m.trailing_zeros().unwrap_or(0);
    if tz > 0 {
        out.insert(2, tz as u32);
        m >>= tz as usize;
    }
    for p in 3u64..1000 {
        if m.is_one() {
            break;
        }
        let bp = BigUint::from(p);
        while (&m % &bp).is_zero() {
            *out.entry(p).or_insert(0) += 1;
            m /= &bp;
        }
    }
    big_factor_into(m, &mut out)?;
    Ok(out.into_iter().collect())
}
