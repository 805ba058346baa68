//! Named end-to-end recipes with default models and pinned tolerances.

use std::collections::BTreeSet;

use cantorlab::covering::{lambda_classes, lambda_oracle, lambda_sandwich, LambdaSpec, OracleOptions};
use cantorlab::dimensions::{
    block_interior_scales, compute_d, compute_d_grid, lebesgue_measure, local_dimension, mcmullen_dimensions,
    slope_at, star_dimensions, symmetric_dimensions,
};
use cantorlab::geometry::{bilip_check, build_dynamics, diff_quotients, gap_length_exact, tail_spread};
use cantorlab::models::{
    box_nonexist_sequence, BaseSequence, BlockGrowth, CSequence, McMullenModel, Model, StarModel, SymmetricModel,
};
use cantorlab::{Beta, LogLength, Word};
use clap::Args;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{check_dynamics, Ran};
use crate::output::Output;
use crate::Failure;

#[derive(Args, Debug, Serialize)]
pub struct ReproArgs {
    /// Recipe name, or `list`.
    pub name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

type Recipe = fn(u64) -> Result<Value, Failure>;

const RECIPES: &[(&str, &str, Recipe)] = &[
    ("carpet-bilip", "bi-Lipschitz check of the M = 128 carpet model to depth 12", carpet_bilip),
    ("carpet-dimensions", "Hausdorff vs box dimension of the M = 128 carpet model", carpet_dimensions),
    ("carpet-slopes", "covering-count slopes at K = 500, 1000, 2000 against D(log 128)", carpet_slopes),
    ("cover-completeness", "oracle vs class counts at 20 random dyadic scales", cover_completeness),
    ("star-chain", "five distinct dimensions of the star model and the count sandwich", star_chain),
    ("box-oscillation", "quotients of the {1/3, 1/4} block model at block ends", box_oscillation),
    ("local-dimensions", "lower and upper local dimensions of the uniform measure", local_dimensions),
    ("fat-cantor", "Lebesgue measure and gaps of c_n = 1/2 - 2^-(n+1)", fat_cantor),
    ("dynamics", "expanding map of the carpet model", dynamics),
    ("smoothness", "difference quotients of the maps at attractor points", smoothness),
];

pub fn run(a: &ReproArgs) -> Result<Ran, Failure> {
    if a.name == "list" {
        let v: Vec<Value> = RECIPES.iter().map(|(n, d, _)| json!({ "name": n, "description": d })).collect();
        return Ok(("repro", Value::Null, Output::json(json!({ "recipes": v }))));
    }
    let (_, _, f) = RECIPES.iter().find(|(n, _, _)| *n == a.name).ok_or_else(|| {
        let names: Vec<&str> = RECIPES.iter().map(|r| r.0).collect();
        Failure::config(format!("unknown recipe {:?}; one of {}", a.name, names.join(", ")))
    })?;
    let mut v = f(a.seed)?;
    v["recipe"] = json!(a.name);
    Ok(("repro", Value::Null, Output::json(v)))
}

fn carpet() -> Model {
    Model::McMullen(McMullenModel::new(Beta::half(), 128).expect("valid defaults"))
}

fn star() -> StarModel {
    StarModel::new(Beta::half(), BaseSequence::factorial(128).expect("valid defaults"))
}

fn box_model() -> SymmetricModel {
    box_nonexist_sequence(BlockGrowth::Factorial).expect("valid defaults")
}

fn fat_model() -> SymmetricModel {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    SymmetricModel::new(CSequence::HalfMinusPow { a: half, b: 2 }).expect("valid defaults")
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, Failure> {
    serde_json::to_value(x).map_err(|e| Failure::internal(e.to_string()))
}

fn carpet_bilip(_: u64) -> Result<Value, Failure> {
    let r = bilip_check(&carpet(), 12)?;
    Ok(json!({ "pass": r.passed() && r.violations == 0, "report": to_value(&r)? }))
}

fn carpet_dimensions(_: u64) -> Result<Value, Failure> {
    let tol = 1e-8;
    let Model::McMullen(m) = carpet() else { unreachable!() };
    let r = mcmullen_dimensions(&m, tol)?;
    let fine = compute_d_grid(128f64.ln(), Beta::half(), tol, 1024)?;
    let gap = r.ubdim.value - 1.0 / 7.0;
    let grids = (fine.d - r.ubdim.value).abs();
    Ok(json!({
        "pass": gap > 1e-3 && grids < 1e-6,
        "hdim": r.hdim.value,
        "box": r.ubdim.value,
        "box_minus_hdim": gap,
        "required_gap": 1e-3,
        "grid_512_vs_1024": grids,
        "report": to_value(&r)?,
    }))
}

fn carpet_slopes(_: u64) -> Result<Value, Failure> {
    let m = carpet();
    let d = compute_d(128f64.ln(), Beta::half(), 1e-10)?.d;
    let mut errs = Vec::new();
    let mut rows = Vec::new();
    for k in [500u64, 1000, 2000] {
        let s = slope_at(&m, k)?;
        errs.push((s.slope - d).abs());
        rows.push(to_value(&s)?);
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    Ok(json!({ "pass": errs[2] < 0.01 && decreasing, "d": d, "errors": errs, "slopes": rows }))
}

fn cover_completeness(seed: u64) -> Result<Value, Failure> {
    let m = carpet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    while rows.len() < 20 {
        // dyadic p / 2^24 strictly between 2^-24 and 1/2
        let p: u64 = rng.gen_range(2..(1u64 << 23));
        if !seen.insert(p) {
            continue;
        }
        let rho = BigRational::new(BigInt::from(p), BigInt::from(1u64 << 24));
        let spec = LambdaSpec::new(&m, LogLength::from_rational(&rho)?)?;
        let o = lambda_oracle(&spec, &OracleOptions::default())?;
        let c = lambda_classes(&spec, true)?;
        let kraft = o.kraft_sum() == BigRational::one();
        let same = o.count == c.count && o.class_map() == c.class_map();
        ok &= kraft && same;
        rows.push(json!({ "rho": rho.to_string(), "count": o.count.to_string(), "kraft_one": kraft, "classes_agree": same }));
    }
    Ok(json!({ "pass": ok, "samples": rows }))
}

/// `count` scales spread over the block-interior runs with `K > 20`.
pub fn sample_block_scales(star: &StarModel, count: usize) -> Vec<u64> {
    let ks: Vec<u64> =
        block_interior_scales(star, 2200).into_iter().filter(|b| b.k_min > 20).flat_map(|b| b.k_min..=b.k_max).collect();
    (0..count).map(|i| ks[i * (ks.len() - 1) / (count - 1).max(1)]).collect()
}

fn star_chain(_: u64) -> Result<Value, Failure> {
    let s = star();
    let r = star_dimensions(&s, 1e-8)?;
    let gaps = r.gaps();
    let gaps_ok = gaps.iter().all(|(_, g)| *g > 1e-4);
    let mut sandwiches = Vec::new();
    let mut holds = true;
    for k in sample_block_scales(&s, 10) {
        let sw = lambda_sandwich(&s, &cantorlab::covering::Rho::pow2(k as i64).0)?;
        holds &= sw.holds();
        sandwiches.push(json!({ "K": k, "plus": sw.plus.to_string(), "star": sw.star.to_string(), "base": sw.base.to_string() }));
    }
    Ok(json!({
        "pass": gaps_ok && holds && r.chain_holds(),
        "required_gap": 1e-4,
        "gaps": gaps,
        "report": to_value(&r)?,
        "sandwich": sandwiches,
    }))
}

fn box_oscillation(_: u64) -> Result<Value, Failure> {
    let m = box_model();
    let (r, tail) = symmetric_dimensions(&m, 100_000)?;
    let q = cantorlab::dimensions::quotient_sequence(&m, 100_000);
    let ends: Vec<(u64, f64)> =
        m.block_ends().unwrap_or(&[]).iter().filter(|&&e| e <= 100_000).map(|&e| (e, q[e as usize - 1])).collect();
    let low = ends.iter().filter(|(_, x)| *x < 0.52).count();
    let high = ends.iter().filter(|(_, x)| *x > 0.61).count();
    let b = bilip_check(&m, 12)?;
    Ok(json!({
        "pass": low >= 2 && high >= 2 && b.passed(),
        "block_ends": ends,
        "below_0.52": low,
        "above_0.61": high,
        "liminf_est": tail.liminf_est,
        "limsup_est": tail.limsup_est,
        "bilip": b.verdict,
        "report": to_value(&r)?,
    }))
}

fn local_dimensions(_: u64) -> Result<Value, Failure> {
    let m = box_model();
    let x = local_dimension(&m, &Word::repeat(0, 32), 100_000)?;
    let (r, _) = symmetric_dimensions(&m, 100_000)?;
    let spread = x.limsup_est - x.liminf_est;
    let close = (x.liminf_est - r.lbdim.value).abs() <= 0.02 && (x.limsup_est - r.ubdim.value).abs() <= 0.02;
    let same = x.ratios == cantorlab::dimensions::quotient_sequence(&m, 100_000);
    Ok(json!({
        "pass": spread > 0.08 && close && same,
        "liminf_est": x.liminf_est,
        "limsup_est": x.limsup_est,
        "spread": spread,
        "lbdim": r.lbdim.value,
        "ubdim": r.ubdim.value,
        "shared_sequence": same,
    }))
}

pub const FAT_MEASURE: f64 = 0.2887880951;

fn fat_cantor(seed: u64) -> Result<Value, Failure> {
    let m = fat_model();
    let l = lebesgue_measure(&m, 64)?;
    let width = l.width().to_f64().unwrap_or(f64::INFINITY);
    let (lo, hi) = l.interval(128).to_f64_pair();
    // the reference value carries ten decimals
    let contains = lo - 5e-11 <= FAT_MEASURE && FAT_MEASURE <= hi + 5e-11;
    let b = bilip_check(&m, 12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps_ok = true;
    for n in 0..=20usize {
        let random = Word::from_bits((0..n).map(|_| rng.gen_range(0..2u8)))?;
        for w in [Word::repeat(0, n), Word::repeat(1, n), random] {
            let g = gap_length_exact(&m, &w)?;
            gaps_ok &= g.is_some_and(|g| g > BigRational::zero());
        }
    }
    Ok(json!({
        "pass": width < 1e-9 && contains && b.passed() && gaps_ok,
        "measure": to_value(&l)?,
        "width": width,
        "reference": FAT_MEASURE,
        "bilip": b.verdict,
        "positive_gaps_to_depth_20": gaps_ok,
    }))
}

fn dynamics(seed: u64) -> Result<Value, Failure> {
    let m = carpet();
    let f = build_dynamics(&m, None)?;
    check_dynamics(&f, 1000, 20, seed)
}

/// Whether every tail `q[m..]` starting before `last` spreads by at least
/// `tol`.
fn no_cauchy_tail(q: &[BigRational], last: usize, tol: &BigRational) -> bool {
    let mut lo = q[q.len() - 1].clone();
    let mut hi = lo.clone();
    let mut ok = true;
    for m in (0..q.len()).rev() {
        if q[m] < lo {
            lo = q[m].clone();
        }
        if q[m] > hi {
            hi = q[m].clone();
        }
        if m < last {
            ok &= &(&hi - &lo) >= tol;
        }
    }
    ok
}

fn smoothness(_: u64) -> Result<Value, Failure> {
    let n_max = 10_000;
    let m = box_model();
    let x = Word::repeat(0, 16);
    let q = diff_quotients(&m, &x, n_max)?;
    let last = (1..q.len()).rev().find(|&i| q[i] != q[i - 1]).unwrap_or(0);
    let tol = BigRational::new(BigInt::from(1), BigInt::from(20));
    let oscillates = no_cauchy_tail(&q, last, &tol);
    let third = SymmetricModel::constant(BigRational::new(BigInt::from(1), BigInt::from(3)))?;
    let qc = diff_quotients(&third, &x, n_max)?;
    let constant = tail_spread(&qc, 0).is_some_and(|s| s.is_zero());
    Ok(json!({
        "pass": oscillates && constant,
        "last_transition": last,
        "tail_spread_from_start": tail_spread(&q, 0).map(|s| s.to_string()),
        "no_cauchy_tail": oscillates,
        "constant_third_is_constant": constant,
    }))
}
