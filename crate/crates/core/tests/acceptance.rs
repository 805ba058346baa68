//! Acceptance checks. Each criterion prints one line; the run fails if any does.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cantorlab::covering::{lambda_classes, lambda_oracle, lambda_sandwich, LambdaSpec, OracleOptions, Rho};
use cantorlab::dimensions::{
    block_interior_scales, compute_d, compute_d_grid, lebesgue_measure, local_dimension, mcmullen_dimensions,
    quotient_sequence, slope_at, star_dimensions, symmetric_dimensions, DimMethod,
};
use cantorlab::geometry::{bilip_check, build_dynamics, diff_quotients, gap_length_exact, tail_spread};
use cantorlab::models::{
    box_nonexist_sequence, BaseSequence, BlockGrowth, CSequence, McMullenModel, Model, StarModel, SymmetricModel,
};
use cantorlab::real::{Dyadic, Round};
use cantorlab::{Beta, LogLength, Word};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: u64 = 128;
const OPT_TOL: f64 = 1e-8;
const GRID_AGREE: f64 = 1e-6;
const CARPET_GAP: f64 = 1e-3;
const SLOPE_TOL: f64 = 0.01;
const CHAIN_GAP: f64 = 1e-4;
const LOW_Q: f64 = 0.52;
const HIGH_Q: f64 = 0.61;
const LOCAL_SPREAD: f64 = 0.08;
const LOCAL_TOL: f64 = 0.02;
const MEASURE_WIDTH: f64 = 1e-9;
const FAT_MEASURE: f64 = 0.2887880951;
// the reference is rounded to ten decimals
const FAT_SLACK: f64 = 5e-11;
const CODING_TOL: f64 = 1e-9;
const CONTINUITY_TOL: f64 = 1e-12;
const CAUCHY_TOL: (i64, i64) = (1, 20);

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn carpet() -> McMullenModel {
    McMullenModel::new(Beta::half(), M).unwrap()
}

fn star() -> StarModel {
    StarModel::new(Beta::half(), BaseSequence::factorial(M).unwrap())
}

fn box_model() -> SymmetricModel {
    box_nonexist_sequence(BlockGrowth::Factorial).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn bilipschitz() -> Outcome {
    let r = bilip_check(&Model::McMullen(carpet()), 12).unwrap();
    let m = M as i64;
    let s = |r: BigRational| format!("{}/{}", r.numer(), r.denom());
    let interval = (s(rat(1, 2 * m)), s(rat(2, m)));
    let gap = (s(rat(m - 4, 2 * m * (m - 1))), s(rat(2 * (m - 1), m * (m - 4))));
    let cert = r.certificate.as_ref().unwrap();
    let bounds = cert.interval == interval && cert.gap == gap;
    let words = (1usize << 13) - 2;
    outcome(
        r.passed() && r.violations == 0 && bounds && r.ratios_checked >= words,
        format!("violations {} over {} ratios, exact bounds {bounds}", r.violations, r.ratios_checked),
    )
}

fn carpet_separation() -> Outcome {
    let r = mcmullen_dimensions(&carpet(), OPT_TOL).unwrap();
    let exact = r.hdim.value == 1.0 / 7.0 && r.hdim.method == DimMethod::Formula;
    let fine = compute_d_grid((M as f64).ln(), Beta::half(), OPT_TOL, 1024).unwrap();
    let agree = (fine.d - r.ubdim.value).abs();
    let gap = r.ubdim.value - r.hdim.value;
    outcome(
        exact && agree < GRID_AGREE && gap > CARPET_GAP,
        format!("hdim 1/7 {exact}, D {:.10}, D - 1/7 = {gap:.3e} (need > {CARPET_GAP:e}), grids differ {agree:.1e}", r.ubdim.value),
    )
}

fn slopes() -> Outcome {
    let m = Model::McMullen(carpet());
    let d = compute_d((M as f64).ln(), Beta::half(), 1e-10).unwrap().d;
    let errs: Vec<f64> = [500, 1000, 2000].iter().map(|&k| (slope_at(&m, k).unwrap().slope - d).abs()).collect();
    let trend = errs[0] > errs[1] && errs[1] > errs[2];
    outcome(errs[2] < SLOPE_TOL && trend, format!("|slope - D| at K = 500, 1000, 2000: {errs:.5?}"))
}

fn completeness() -> Outcome {
    let m = Model::McMullen(carpet());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = BTreeSet::new();
    let mut bad = 0;
    while seen.len() < 20 {
        let p: i64 = rng.gen_range(2..(1 << 23));
        if !seen.insert(p) {
            continue;
        }
        let spec = LambdaSpec::new(&m, LogLength::from_rational(&rat(p, 1 << 24)).unwrap()).unwrap();
        let o = lambda_oracle(&spec, &OracleOptions::default()).unwrap();
        let c = lambda_classes(&spec, true).unwrap();
        if o.kraft_sum() != BigRational::one() || o.count != c.count || o.class_map() != c.class_map() {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 20 scales disagree"))
}

fn star_chain() -> Outcome {
    let s = star();
    let r = star_dimensions(&s, OPT_TOL).unwrap();
    let d128 = compute_d((M as f64).ln(), Beta::half(), OPT_TOL).unwrap().d;
    let d129 = compute_d(((M + 1) as f64).ln(), Beta::half(), OPT_TOL).unwrap().d;
    let bases = (r.lbdim.value - d129).abs() < 10.0 * OPT_TOL && (r.ubdim.value - d128).abs() < 10.0 * OPT_TOL;
    let gaps = r.gaps();
    let narrow: Vec<String> =
        gaps.iter().filter(|(_, g)| *g <= CHAIN_GAP).map(|(n, g)| format!("{n} {g:.3e}")).collect();
    let ks: Vec<u64> =
        block_interior_scales(&s, 2200).into_iter().filter(|b| b.k_min > 20).flat_map(|b| b.k_min..=b.k_max).collect();
    let mut sandwiched = 0;
    for i in 0..10 {
        let k = ks[i * (ks.len() - 1) / 9];
        if lambda_sandwich(&s, &Rho::pow2(k as i64).0).unwrap().holds() {
            sandwiched += 1;
        }
    }
    outcome(
        r.chain_holds() && narrow.is_empty() && bases && sandwiched == 10,
        format!(
            "chain {}, base dims {bases}, sandwich {sandwiched}/10, gaps <= {CHAIN_GAP:e}: [{}]",
            r.chain_holds(),
            narrow.join(", ")
        ),
    )
}

fn box_oscillation() -> Outcome {
    let m = box_model();
    let q = quotient_sequence(&m, 100_000);
    let ends: Vec<f64> =
        m.block_ends().unwrap().iter().filter(|&&e| e <= 100_000).map(|&e| q[e as usize - 1]).collect();
    let low = ends.iter().filter(|&&x| x < LOW_Q).count();
    let high = ends.iter().filter(|&&x| x > HIGH_Q).count();
    let b = bilip_check(&m, 12).unwrap().passed();
    outcome(low >= 2 && high >= 2 && b, format!("{low} block ends below {LOW_Q}, {high} above {HIGH_Q}, bilip {b}"))
}

fn local_dims() -> Outcome {
    let m = box_model();
    let x = local_dimension(&m, &Word::repeat(0, 32), 100_000).unwrap();
    let (r, _) = symmetric_dimensions(&m, 100_000).unwrap();
    let spread = x.limsup_est - x.liminf_est;
    let close = (x.liminf_est - r.lbdim.value).abs() <= LOCAL_TOL && (x.limsup_est - r.ubdim.value).abs() <= LOCAL_TOL;
    let same = x.ratios == quotient_sequence(&m, 100_000);
    outcome(
        spread > LOCAL_SPREAD && close && same,
        format!("liminf {:.4}, limsup {:.4}, spread {spread:.4}, shared sequence {same}", x.liminf_est, x.limsup_est),
    )
}

fn fat_cantor() -> Outcome {
    let m = SymmetricModel::new(CSequence::HalfMinusPow { a: rat(1, 2), b: 2 }).unwrap();
    let l = lebesgue_measure(&m, 64).unwrap();
    let width = l.width().to_f64().unwrap();
    let (lo, hi) = l.interval(128).to_f64_pair();
    // 2^n intervals of length c_1 ... c_n, so the measure is the product of 1 - 2^-n
    let product = (1..=64u32).fold(BigRational::one(), |p, n| p * (BigRational::one() - rat(1, 2).pow(n as i32)));
    let holds = l.lower <= product && product <= l.upper;
    let reference = lo - FAT_SLACK <= FAT_MEASURE && FAT_MEASURE <= hi + FAT_SLACK;
    let b = bilip_check(&m, 12).unwrap().passed();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut gaps = true;
    for n in 0..=20 {
        let w = Word::from_bits((0..n).map(|_| rng.gen_range(0..2u8))).unwrap();
        for w in [Word::repeat(0, n), Word::repeat(1, n), w] {
            gaps &= gap_length_exact(&m, &w).unwrap().is_some_and(|g| g > BigRational::zero());
        }
    }
    outcome(
        width < MEASURE_WIDTH && holds && reference && b && gaps,
        format!("[{lo:.12}, {hi:.12}] width {width:.1e}, product inside {holds}, bilip {b}, gaps {gaps}"),
    )
}

fn dynamics() -> Outcome {
    let model = Model::McMullen(carpet());
    let f = build_dynamics(&model, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut coding = 0.0f64;
    for _ in 0..1000 {
        let w = Word::from_bits((0..=20).map(|_| rng.gen_range(0..2u8))).unwrap();
        coding = coding.max(f.coding_defect(&w).unwrap());
    }
    let continuity = f.continuity_defect().unwrap();
    let mut q = f64::INFINITY;
    for (lo, hi) in f.u() {
        let (a, b) = (lo.hi().to_f64(Round::Up), hi.lo().to_f64(Round::Down));
        for _ in 0..200 {
            let h = f.delta_f64() * rng.gen_range(0.01..0.99);
            let x = rng.gen_range(a..(b - h));
            let r = |v: f64| Dyadic::from_f64(v).unwrap().to_rational();
            q = q.min(f.difference_quotient(&r(x), &r(x + h)).unwrap());
        }
    }
    outcome(
        coding < CODING_TOL && continuity < CONTINUITY_TOL && f.expansion() > 1.0 && q > 1.0,
        format!("coding {coding:.1e}, continuity {continuity:.1e}, c {}, sampled {q:.6}", f.expansion()),
    )
}

fn smoothness() -> Outcome {
    let n_max = 10_000;
    let x = Word::repeat(0, 16);
    let q = diff_quotients(&box_model(), &x, n_max).unwrap();
    // windows starting after the last transition below n_max see one block only
    let last = (1..q.len()).rev().find(|&i| q[i] != q[i - 1]).unwrap();
    let tol = rat(CAUCHY_TOL.0, CAUCHY_TOL.1);
    let mut lo = q[q.len() - 1].clone();
    let mut hi = lo.clone();
    let mut narrow = 0;
    for m in (0..q.len()).rev() {
        lo = lo.min(q[m].clone());
        hi = hi.max(q[m].clone());
        if m < last && &hi - &lo < tol {
            narrow += 1;
        }
    }
    let third = SymmetricModel::constant(rat(1, 3)).unwrap();
    let constant = tail_spread(&diff_quotients(&third, &x, n_max).unwrap(), 0).is_some_and(|s| s.is_zero());
    outcome(
        narrow == 0 && constant,
        format!("{narrow} tail windows before n = {last} within 1/20, constant 1/3 exact {constant}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 10] = [
        ("bi-Lipschitz certificate, M = 128, depth 12", bilipschitz, secs(10)),
        ("carpet Hausdorff vs box separation", carpet_separation, secs(30)),
        ("empirical slope vs D(log 128)", slopes, secs(300)),
        ("prefix-free completeness", completeness, secs(120)),
        ("star dimension chain and sandwich", star_chain, secs(600)),
        ("box dimension non-existence", box_oscillation, secs(60)),
        ("local dimension oscillation", local_dims, secs(60)),
        ("positive measure, empty interior", fat_cantor, secs(30)),
        ("expanding map", dynamics, secs(60)),
        ("difference quotients", smoothness, secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let took = t.elapsed();
        let pass = o.pass && took < *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {}: {name}: {} ({:.1}s of {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
