use std::fs;
use std::str::FromStr;

use cantorlab::covering::{lambda_count, LambdaSpec, MethodChoice, Rho};
use cantorlab::dimensions::{empirical_box, mcmullen_dimensions, star_dimensions, symmetric_dimensions, EmpiricalBox};
use cantorlab::geometry::{
    bilip_check, build_dynamics, phi_eval_rational, phi_inv, sample_map, EvalOptions, ExpandingMap,
};
use cantorlab::models::{Model, ModelConfig, Rat};
use cantorlab::real::{DecimalEnclosure, Dyadic, Interval};
use cantorlab::Word;
use clap::{Args, Subcommand};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{Output, Table};
use crate::Failure;

pub type Ran = (&'static str, Value, Output);

/// Reads a model document from a file, or inline when it starts with `{`.
pub fn load_model(arg: &str) -> Result<(ModelConfig, Model), Failure> {
    let (text, origin) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), "inline model".to_string())
    } else {
        let t = fs::read_to_string(arg).map_err(|e| Failure::config(format!("cannot read {arg}: {e}")))?;
        (t, arg.to_string())
    };
    let cfg = ModelConfig::from_json(&text).map_err(|e| Failure::config(format!("{origin}: {e}")))?;
    let model = cfg.build().map_err(|e| match e {
        cantorlab::Error::Config(m) => Failure::config(format!("{origin}: {m}")),
        other => Failure::model(format!("{origin}: {other}")),
    })?;
    Ok((cfg, model))
}

fn model_value(cfg: &ModelConfig) -> Value {
    serde_json::to_value(cfg).expect("model config serializes")
}

fn rational(s: &str) -> Result<BigRational, String> {
    Rat::from_str(s).map(|r| r.0).map_err(|e| e.to_string())
}

fn symbol(s: &str) -> Result<u8, String> {
    match s {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(format!("symbol must be 0 or 1, got {s:?}")),
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapCommand {
    /// Enclose `phi_i(x)` (or its inverse) at rational points, or sample a grid.
    Eval(MapEvalArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct MapEvalArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_parser = symbol)]
    pub symbol: u8,
    /// Rational points `p/q`; repeatable.
    #[arg(long = "x", value_parser = rational)]
    #[serde(serialize_with = "ser_rationals")]
    pub xs: Vec<BigRational>,
    /// Sample this many equally spaced points of [0, 1] instead.
    #[arg(long, conflicts_with = "xs")]
    pub grid: Option<usize>,
    #[arg(long)]
    pub inverse: bool,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 20)]
    pub digits: u32,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

pub fn map(c: &MapCommand) -> Result<Ran, Failure> {
    let MapCommand::Eval(a) = c;
    let (cfg, model) = load_model(&a.model)?;
    if !(a.tol > 0.0) {
        return Err(Failure::config("--tol must be positive"));
    }
    let opts = EvalOptions::with_tol(a.tol);
    if let Some(n) = a.grid {
        if a.inverse {
            return Err(Failure::config("--grid samples the forward map only"));
        }
        let pts = sample_map(&model, a.symbol, n, &opts)?;
        let mut t = Table::new(vec!["x", "y"]);
        for (x, y) in &pts {
            t.push(vec![format!("{x:e}"), format!("{y:e}")]);
        }
        let rows: Vec<Value> = pts.iter().map(|(x, y)| json!([x, y])).collect();
        return Ok(("map eval", model_value(&cfg), Output::with_table(json!({ "symbol": a.symbol, "samples": rows }), t)));
    }
    if a.xs.is_empty() {
        return Err(Failure::config("give --x points or --grid"));
    }
    let mut t = Table::new(vec!["x", "lo", "hi"]);
    let mut values = Vec::new();
    for x in &a.xs {
        let iv = if a.inverse {
            phi_inv(&model, a.symbol, &Interval::from_rational(x, opts.prec), &opts)?
        } else {
            phi_eval_rational(&model, a.symbol, x, &opts)?
        };
        let e = DecimalEnclosure::of(&iv, a.digits);
        t.push(vec![x.to_string(), e.lo.clone(), e.hi.clone()]);
        values.push(json!({ "x": x.to_string(), "image": e }));
    }
    let result = json!({ "symbol": a.symbol, "inverse": a.inverse, "values": values });
    Ok(("map eval", model_value(&cfg), Output::with_table(result, t)))
}

#[derive(Args, Debug, Serialize)]
pub struct BilipArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
}

pub fn bilip(a: &BilipArgs) -> Result<Ran, Failure> {
    let (cfg, model) = load_model(&a.model)?;
    let r = bilip_check(&model, a.depth)?;
    let v = serde_json::to_value(&r).map_err(|e| Failure::internal(e.to_string()))?;
    Ok(("bilip", model_value(&cfg), Output::json(v)))
}

/// `0^k`, `1^k` or a literal bit string.
fn prefix(s: &str) -> Result<Word, String> {
    if let Some((b, k)) = s.split_once('^') {
        let k: usize = k.parse().map_err(|_| format!("bad exponent in {s:?}"))?;
        return Ok(Word::repeat(symbol(b)?, k));
    }
    s.parse::<Word>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    #[arg(long)]
    pub model: String,
    /// `2^-K`, `2^(-p/q)` or `p/q`.
    #[arg(long)]
    pub rho: String,
    /// Localize below a prefix: `0^k`, `1^k` or bits.
    #[arg(long, value_parser = prefix)]
    #[serde(serialize_with = "ser_word")]
    pub prefix: Option<Word>,
    #[arg(long, default_value = "auto")]
    pub method: String,
    /// Include the per-class histogram.
    #[arg(long)]
    pub classes: bool,
}

fn ser_word<S: serde::Serializer>(w: &Option<Word>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        Some(w) => s.serialize_str(&w.to_string()),
        None => s.serialize_none(),
    }
}

pub fn count(a: &CountArgs) -> Result<Ran, Failure> {
    let (cfg, model) = load_model(&a.model)?;
    let rho: Rho = a.rho.parse()?;
    let method: MethodChoice = a.method.parse()?;
    let log2_inv = rho.log2_inv();
    let spec = match &a.prefix {
        Some(u) => LambdaSpec::localized(&model, rho.0, u.clone())?,
        None => LambdaSpec::new(&model, rho.0)?,
    };
    let r = lambda_count(&spec, method, a.classes)?;
    let mut t = Table::new(vec!["n", "count"]);
    for (n, c) in r.level_counts() {
        t.push(vec![n.to_string(), c.to_string()]);
    }
    let mut result = json!({
        "rho": a.rho,
        "rho_log2": -log2_inv,
        "count_decimal": r.count.to_string(),
        "count_bits": r.count_bits(),
        "slope": r.log2_count() / log2_inv,
        "method": r.method,
        "depth_bounds": r.depth_bounds,
        "levels": r.levels,
    });
    if a.classes {
        result["classes"] = serde_json::to_value(&r.classes).map_err(|e| Failure::internal(e.to_string()))?;
    }
    Ok(("count", model_value(&cfg), Output::with_table(result, t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    Empirical,
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct DimsArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value = "theory")]
    pub mode: Mode,
    /// Optimizer tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Comma-separated `K` values for `rho = 2^-K`.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
    pub schedule: Vec<u64>,
    /// Levels probed for symmetric models.
    #[arg(long, default_value_t = 100_000)]
    pub n_max: u64,
}

fn slope_table(b: &EmpiricalBox) -> Table {
    let mut t = Table::new(vec!["K", "slope", "count_bits"]);
    for s in &b.slopes {
        t.push(vec![s.k.to_string(), format!("{:.12}", s.slope), s.count_bits.to_string()]);
    }
    t
}

pub fn dims(a: &DimsArgs) -> Result<Ran, Failure> {
    let (cfg, model) = load_model(&a.model)?;
    let mut result = json!({});
    let mut table = None;
    if a.mode != Mode::Empirical {
        let (report, tail) = match &model {
            Model::McMullen(m) => (mcmullen_dimensions(m, a.tol)?, None),
            Model::Star(s) => (star_dimensions(s, a.tol)?, None),
            Model::Symmetric(s) => {
                let (r, t) = symmetric_dimensions(s, a.n_max)?;
                (r, Some(t))
            }
        };
        let mut t = Table::new(vec!["dimension", "value", "method", "error"]);
        for (name, d) in report.chain() {
            t.push(vec![name.into(), format!("{:.12}", d.value), format!("{:?}", d.method).to_lowercase(), format!("{:e}", d.error)]);
        }
        table = Some(t);
        result["theory"] = serde_json::to_value(&report).map_err(|e| Failure::internal(e.to_string()))?;
        result["chain_holds"] = json!(report.chain_holds());
        result["gaps"] = json!(report.gaps());
        if let Some(t) = tail {
            result["tail"] = json!({
                "block_ends": t.block_ends,
                "scales": t.scales,
                "liminf_est": t.liminf_est,
                "limsup_est": t.limsup_est,
            });
        }
    }
    if a.mode != Mode::Theory {
        let b = empirical_box(&model, &a.schedule)?;
        table = Some(slope_table(&b));
        result["empirical"] = serde_json::to_value(&b).map_err(|e| Failure::internal(e.to_string()))?;
    }
    let out = match table {
        Some(t) => Output::with_table(result, t),
        None => Output::json(result),
    };
    Ok(("dims", model_value(&cfg), out))
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 100)]
    pub k_min: u64,
    #[arg(long, default_value_t = 2000)]
    pub k_max: u64,
    #[arg(long, default_value_t = 100)]
    pub k_step: u64,
}

pub fn sweep(a: &SweepArgs) -> Result<Ran, Failure> {
    let (cfg, model) = load_model(&a.model)?;
    if a.k_step == 0 || a.k_min == 0 || a.k_min > a.k_max {
        return Err(Failure::config("need 0 < k-min <= k-max and k-step > 0"));
    }
    let ks: Vec<u64> = (a.k_min..=a.k_max).step_by(a.k_step as usize).collect();
    let b = empirical_box(&model, &ks)?;
    let t = slope_table(&b);
    let v = serde_json::to_value(&b).map_err(|e| Failure::internal(e.to_string()))?;
    Ok(("sweep", model_value(&cfg), Output::with_table(v, t)))
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsCommand {
    /// Build the expanding map and check it on random codings.
    Check(DynamicsArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub model: String,
    /// Rational `p/q`; defaults to a dyadic below an eighth of the middle gap.
    #[arg(long, value_parser = rational)]
    #[serde(serialize_with = "ser_opt_rational")]
    pub delta: Option<BigRational>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

pub const CODING_TOL: f64 = 1e-9;
pub const CONTINUITY_TOL: f64 = 1e-12;

/// Coding-shift, continuity and expansion checks on random samples.
pub fn check_dynamics<L: cantorlab::models::LengthFunction + ?Sized>(
    f: &ExpandingMap<'_, L>,
    samples: usize,
    depth: usize,
    seed: u64,
) -> Result<Value, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let bits: Vec<u8> = (0..=depth).map(|_| rng.gen_range(0..2u8)).collect();
        let w = Word::from_bits(bits)?;
        worst = worst.max(f.coding_defect(&w)?);
    }
    let continuity = f.continuity_defect()?;
    // pairs closer than delta inside one component of U
    let delta = f.delta_f64();
    let mut min_q = f64::INFINITY;
    for (lo, hi) in f.u() {
        let (a, b) = (lo.hi().to_f64(cantorlab::real::Round::Up), hi.lo().to_f64(cantorlab::real::Round::Down));
        for _ in 0..samples.max(1).min(200) {
            let h = delta * rng.gen_range(0.01..0.99);
            let x = rng.gen_range(a..(b - h));
            let to_q = |v: f64| Dyadic::from_f64(v).expect("finite").to_rational();
            min_q = min_q.min(f.difference_quotient(&to_q(x), &to_q(x + h))?);
        }
    }
    let c = f.expansion();
    Ok(json!({
        "summary": f.summary(),
        "coding": { "samples": samples, "depth": depth, "max_defect": worst, "tol": CODING_TOL, "pass": worst < CODING_TOL },
        "continuity": { "defect": continuity, "tol": CONTINUITY_TOL, "pass": continuity < CONTINUITY_TOL },
        "expansion": { "c": c, "sampled_min": min_q, "pass": c > 1.0 && min_q > 1.0 },
        "pass": worst < CODING_TOL && continuity < CONTINUITY_TOL && c > 1.0 && min_q > 1.0,
    }))
}

pub fn dynamics(c: &DynamicsCommand) -> Result<Ran, Failure> {
    let DynamicsCommand::Check(a) = c;
    let (cfg, model) = load_model(&a.model)?;
    let f = build_dynamics(&model, a.delta.clone())?;
    let v = check_dynamics(&f, a.samples, a.depth, a.seed)?;
    Ok(("dynamics check", model_value(&cfg), Output::json(v)))
}
