use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use super::entropy::entropy_unchecked as h;
use crate::error::{Error, Result};
use crate::symbolic::Beta;

pub const DEFAULT_GRID: usize = 512;
const STARTS: usize = 8;
const MAX_ROUNDS: usize = 5000;
const GOLDEN_STEPS: usize = 90;

/// Maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if b - a < 1e-15 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    // the endpoints may beat the interior (maximum on the boundary)
    [(a, f(a)), (b, f(b)), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Result of a one-dimensional maximization on `[0, 1]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Max1d {
    pub value: f64,
    pub argmax: f64,
    /// Grid values had a single local maximum.
    pub unimodal: bool,
}

/// Grid scan of `[0, 1]`, then golden section around every grid-local maximum.
pub fn maximize_1d(f: impl Fn(f64) -> f64 + Sync, grid: usize) -> Max1d {
    let xs: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let v: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let peaks: Vec<usize> = (0..=grid)
        .filter(|&i| (i == 0 || v[i] >= v[i - 1]) && (i == grid || v[i] > v[i + 1]))
        .collect();
    let mut best = Max1d { value: f64::NEG_INFINITY, argmax: 0.0, unimodal: peaks.len() == 1 };
    for i in peaks {
        let (a, b) = (xs[i.saturating_sub(1)], xs[(i + 1).min(grid)]);
        let (x, y) = golden_max(&f, a, b);
        if y > best.value {
            best.value = y;
            best.argmax = x;
        }
    }
    best
}

/// `D(lambda)` with the maximizing `(p, q)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DOptimum {
    pub d: f64,
    pub p: f64,
    pub q: f64,
    pub grid: usize,
    pub tol: f64,
}

/// `(beta H(p) + (1-beta) H(q)) / (lambda + beta (1-beta) (q - p) ln 2)`.
pub fn d_objective(lambda: f64, beta: f64, p: f64, q: f64) -> f64 {
    (beta * h(p) + (1.0 - beta) * h(q)) / (lambda + beta * (1.0 - beta) * (q - p) * LN_2)
}

/// [`compute_d_grid`] on the default 512 x 512 grid.
pub fn compute_d(lambda: f64, beta: Beta, tol: f64) -> Result<DOptimum> {
    compute_d_grid(lambda, beta, tol, DEFAULT_GRID)
}

/// Global maximum of [`d_objective`] over the unit square: grid scan, then
/// coordinate ascent from the best grid cells.
pub fn compute_d_grid(lambda: f64, beta: Beta, tol: f64, grid: usize) -> Result<DOptimum> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must have at least 2 cells, got {grid}")));
    }
    if !(lambda > LN_2 + tol) || !lambda.is_finite() {
        return Err(Error::DomainError(format!("D(lambda) needs lambda > ln 2, got {lambda}")));
    }
    let b = beta.to_f64();
    let f = |p: f64, q: f64| d_objective(lambda, b, p, q);
    let xs: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let mut cells: Vec<(f64, usize, usize)> = (0..=grid)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xs = &xs;
            (0..=grid).map(move |j| (f(xs[i], xs[j]), i, j))
        })
        .collect();
    let k = STARTS.min(cells.len());
    cells.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0));
    cells.truncate(k);
    // ties broken by position so the result does not depend on scan order
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let best = cells
        .par_iter()
        .map(|&(_, i, j)| ascend(&f, xs[i], xs[j], tol))
        .reduce(|| (f64::NEG_INFINITY, 0.0, 0.0), |x, y| if y.0 > x.0 { y } else { x });
    Ok(DOptimum { d: best.0, p: best.1, q: best.2, grid, tol })
}

fn ascend(f: &(impl Fn(f64, f64) -> f64 + Sync), mut p: f64, mut q: f64, tol: f64) -> (f64, f64, f64) {
    let mut v = f(p, q);
    for _ in 0..MAX_ROUNDS {
        let (np, _) = golden_max(|x| f(x, q), 0.0, 1.0);
        let (nq, nv) = golden_max(|y| f(np, y), 0.0, 1.0);
        let moved = (np - p).abs().max((nq - q).abs());
        let gain = nv - v;
        if nv >= v {
            p = np;
            q = nq;
            v = nv;
        }
        if moved < 1e-11 || gain.abs() < tol * 1e-6 {
            break;
        }
    }
    (v, p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent value of `D`: the fixed point of Dinkelbach's
    /// parametrization, whose inner maximum is separable in closed form.
    fn dinkelbach(lambda: f64, beta: f64) -> f64 {
        let g = |t: f64| {
            beta * (1.0 + (t * (1.0 - beta) * LN_2).exp()).ln() + (1.0 - beta) * (1.0 + (-t * beta * LN_2).exp()).ln()
                - t * lambda
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn half() -> Beta {
        Beta::half()
    }

    #[test]
    fn matches_dinkelbach() {
        for (lam, beta) in [(128f64.ln(), Beta::half()), (129f64.ln(), Beta::half()), (128f64.ln(), Beta::new(1, 3).unwrap()), (3.0, Beta::new(3, 4).unwrap())] {
            let r = compute_d(lam, beta, 1e-10).unwrap();
            let want = dinkelbach(lam, beta.to_f64());
            assert!((r.d - want).abs() < 1e-10, "lambda {lam}: {} vs {want}", r.d);
            assert_eq!(r.d, d_objective(lam, beta.to_f64(), r.p, r.q));
        }
    }

    #[test]
    fn frozen_values() {
        let d = compute_d(128f64.ln(), half(), 1e-10).unwrap().d;
        assert!((d - 0.14292034345).abs() < 1e-10);
        assert!(d > 1.0 / 7.0);
        let d129 = compute_d(129f64.ln(), half(), 1e-10).unwrap().d;
        assert!((d129 - 0.142691274).abs() < 1e-8);
        let d3 = compute_d(128f64.ln(), Beta::new(1, 3).unwrap(), 1e-10).unwrap().d;
        assert!((d3 - 0.14291331).abs() < 1e-8);
    }

    #[test]
    fn grid_resolution_and_restarts() {
        let lam = 128f64.ln();
        let a = compute_d_grid(lam, half(), 1e-8, 256).unwrap();
        let b = compute_d_grid(lam, half(), 1e-8, 512).unwrap();
        let c = compute_d_grid(lam, half(), 1e-8, 1024).unwrap();
        assert!((a.d - b.d).abs() < 1e-8 && (b.d - c.d).abs() < 1e-8);
    }

    #[test]
    fn large_lambda_asymptote() {
        let lam = 100.0;
        let d = compute_d(lam, half(), 1e-10).unwrap().d;
        assert!((d * lam / LN_2 - 1.0).abs() < 0.01);
        assert!(d > LN_2 / lam);
    }

    #[test]
    fn domain() {
        assert!(matches!(compute_d(LN_2, half(), 1e-8), Err(Error::DomainError(_))));
        assert!(matches!(compute_d(0.5, half(), 1e-8), Err(Error::DomainError(_))));
        assert!(compute_d(3.0, half(), 0.0).is_err());
    }

    #[test]
    fn decreasing_in_lambda() {
        let mut prev = f64::INFINITY;
        for m in [100u64, 128, 129, 200, 1000] {
            let d = compute_d((m as f64).ln(), half(), 1e-10).unwrap().d;
            assert!(d < prev);
            assert!(d > LN_2 / (m as f64).ln());
            prev = d;
        }
    }

    #[test]
    fn one_dimensional() {
        let r = maximize_1d(|x| -(x - 0.3).powi(2), 64);
        assert!(r.unimodal && (r.argmax - 0.3).abs() < 1e-7);
        let r = maximize_1d(|x| x, 64);
        assert_eq!(r.argmax, 1.0);
        let r = maximize_1d(|x| (6.0 * std::f64::consts::PI * x).sin() + x, 256);
        assert!(!r.unimodal && r.argmax > 0.75);
    }
}
