use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{depth_window, lambda_count, LambdaSpec, Method, MethodChoice, Rho};
use crate::error::{Error, Result};
use crate::models::{Model, StarModel};

#[derive(Clone, Debug, Serialize)]
pub struct SlopeSample {
    pub k: u64,
    pub count_bits: u64,
    pub log2_count: f64,
    /// `log2 #Lambda(2^-K) / K`.
    pub slope: f64,
    pub method: Method,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalBox {
    pub slopes: Vec<SlopeSample>,
    /// Minimum and maximum slope over the final third of the schedule.
    pub lb_est: f64,
    pub ub_est: f64,
    /// Finite data: the values are stabilized windows, not limits.
    pub caveat: &'static str,
}

pub fn slope_at(model: &Model, k: u64) -> Result<SlopeSample> {
    let spec = LambdaSpec::new(model, Rho::pow2(k as i64).0)?;
    let r = lambda_count(&spec, MethodChoice::Auto, false)?;
    let log2_count = r.log2_count();
    Ok(SlopeSample { k, count_bits: r.count_bits(), log2_count, slope: log2_count / k as f64, method: r.method })
}

/// Slopes along `rho = 2^-K` for the given increasing `K` schedule.
pub fn empirical_box(model: &Model, schedule: &[u64]) -> Result<EmpiricalBox> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("the K schedule is empty".into()));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("the K schedule must be positive and strictly increasing".into()));
    }
    let slopes: Vec<SlopeSample> = schedule.par_iter().map(|&k| slope_at(model, k)).collect::<Result<_>>()?;
    let tail = &slopes[slopes.len() - slopes.len().div_ceil(3)..];
    let lb_est = tail.iter().map(|s| s.slope).fold(f64::INFINITY, f64::min);
    let ub_est = tail.iter().map(|s| s.slope).fold(f64::NEG_INFINITY, f64::max);
    Ok(EmpiricalBox { slopes, lb_est, ub_est, caveat: "asymptotic" })
}

/// A run of scales `2^-K` whose whole depth window lies in one block
/// `[N_j, N_{j+1})` of the star sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockScales {
    /// 1-based block index `j`.
    pub block: usize,
    /// `M` or `M + 1`.
    pub base: u64,
    pub k_min: u64,
    pub k_max: u64,
}

fn block_of(bounds: &[u64], n: u64) -> usize {
    bounds.partition_point(|&b| b <= n)
}

pub fn block_interior_scales(star: &StarModel, k_limit: u64) -> Vec<BlockScales> {
    let model = Model::Star(star.clone());
    let bounds = star.base().boundaries();
    let mut out: Vec<BlockScales> = Vec::new();
    for k in 1..=k_limit {
        let (lo, hi) = depth_window(&model, &Rho::pow2(k as i64).0);
        let (a, b) = (block_of(bounds, lo as u64), block_of(bounds, hi as u64));
        if a != b || a == 0 {
            continue;
        }
        match out.last_mut() {
            Some(s) if s.block == a && s.k_max + 1 == k => s.k_max = k,
            _ => out.push(BlockScales { block: a, base: star.base().m_at(lo as u64), k_min: k, k_max: k }),
        }
    }
    out
}
