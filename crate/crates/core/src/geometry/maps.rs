use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::tree::DEFAULT_PREC;
use crate::error::{Error, Result};
use crate::models::LengthFunction;
use crate::real::{Dyadic, Interval, Round};
use crate::symbolic::Word;

/// Highest precision tried before an endpoint tie is resolved by widening.
const TRANSFER_MAX_PREC: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    /// Target width of the returned enclosure.
    pub tol: f64,
    pub max_depth: usize,
    pub prec: u32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { tol: 1e-12, max_depth: 64, prec: DEFAULT_PREC }
    }
}

impl EvalOptions {
    pub fn with_tol(tol: f64) -> Self {
        EvalOptions { tol, ..Default::default() }
    }
}

/// Running enclosure of a node: left endpoint and length, with exact
/// rationals riding along while every length met so far is rational.
#[derive(Clone, Debug)]
struct Track {
    word: Word,
    left: Interval,
    len: Interval,
    left_x: Option<BigRational>,
    len_x: Option<BigRational>,
}

struct Split {
    l0: Interval,
    l1: Interval,
    l0_x: Option<BigRational>,
    l1_x: Option<BigRational>,
}

impl Track {
    fn root() -> Self {
        Track {
            word: Word::empty(),
            left: Interval::zero(),
            len: Interval::one(),
            left_x: Some(BigRational::zero()),
            len_x: Some(BigRational::from_integer(1.into())),
        }
    }

    fn split<L: LengthFunction + ?Sized>(&self, model: &L, prec: u32) -> Result<Split> {
        let a = model.length(&self.word.child(0))?;
        let b = model.length(&self.word.child(1))?;
        let (l0_x, l1_x) = if self.len_x.is_some() { (a.to_rational(), b.to_rational()) } else { (None, None) };
        Ok(Split { l0: a.to_interval(prec), l1: b.to_interval(prec), l0_x, l1_x })
    }

    fn descend(&self, s: &Split, bit: u8, prec: u32) -> Track {
        let exact = |x: &Option<BigRational>, y: &Option<BigRational>| match (x, y) {
            (Some(x), Some(y)) => Some((x.clone(), y.clone())),
            _ => None,
        };
        if bit == 0 {
            Track {
                word: self.word.child(0),
                left: self.left.clone(),
                len: s.l0.clone(),
                left_x: exact(&self.left_x, &s.l0_x).map(|(l, _)| l),
                len_x: s.l0_x.clone(),
            }
        } else {
            let left = self.left.add(&self.len, prec).sub(&s.l1, prec);
            let left_x = match (&self.left_x, &self.len_x, &s.l1_x) {
                (Some(l), Some(n), Some(b)) => Some(l + n - b),
                _ => None,
            };
            Track { word: self.word.child(1), left, len: s.l1.clone(), left_x, len_x: s.l1_x.clone() }
        }
    }

    fn walk<L: LengthFunction + ?Sized>(model: &L, w: &Word, prec: u32) -> Result<Track> {
        let mut t = Track::root();
        for j in 0..w.len() {
            let s = t.split(model, prec)?;
            t = t.descend(&s, w.bit(j), prec);
        }
        Ok(t)
    }

    fn enclosure(&self, prec: u32) -> Interval {
        if let (Some(l), Some(n)) = (&self.left_x, &self.len_x) {
            let lo = Interval::from_rational(l, prec);
            let hi = Interval::from_rational(&(l + n), prec);
            return Interval::new(lo.lo().clone(), hi.hi().clone());
        }
        let r = self.left.add(&self.len, prec);
        Interval::new(self.left.lo().clone(), r.hi().clone())
    }

    /// `(left, right)` of the gap, as enclosures and exactly when possible.
    fn gap(&self, s: &Split, prec: u32) -> (Interval, Interval, Option<(BigRational, BigRational)>) {
        let gl = self.left.add(&s.l0, prec);
        let gr = self.left.add(&self.len, prec).sub(&s.l1, prec);
        let exact = match (&self.left_x, &self.len_x, &s.l0_x, &s.l1_x) {
            (Some(l), Some(n), Some(a), Some(b)) => Some((l + a, l + n - b)),
            _ => None,
        };
        (gl, gr, exact)
    }
}

enum Pass {
    Done(Interval),
    Ambiguous,
}

/// Lipschitz constant of the transfer `I_src -> I_dst` from the model's
/// certificate.
fn transfer_lipschitz<L: LengthFunction + ?Sized>(model: &L, src: usize, dst: usize) -> Option<Dyadic> {
    let cert = model.certificate()?;
    let lo = cert.interval.0.clone().min(cert.gap.0.clone()).to_f64()?;
    let hi = cert.interval.1.clone().max(cert.gap.1.clone()).to_f64()?;
    if !cert.positive_infimum || lo <= 0.0 {
        return if src == 0 { Dyadic::from_f64(2.0 * hi.max(1.0).powi(dst as i32)) } else { None };
    }
    let l = hi.powi(dst as i32) / lo.powi(src as i32);
    // doubled to absorb the rounding of the two powers
    Dyadic::from_f64(2.0 * l).filter(|_| l.is_finite())
}

fn to_point(x: &BigRational, prec: u32) -> Interval {
    Interval::from_rational(x, prec)
}

/// Affine image of `x` in the gap of `s` onto the gap of `d`.
fn gap_affine(
    x: &Dyadic,
    s: (&Track, &Split),
    d: (&Track, &Split),
    prec: u32,
) -> Interval {
    let (gls, grs, ex_s) = s.0.gap(s.1, prec);
    let (gld, grd, ex_d) = d.0.gap(d.1, prec);
    if let (Some((a, b)), Some((c, e))) = (ex_s, ex_d) {
        let xr = x.to_rational();
        let y = &c + (xr - &a) * (&e - &c) / (&b - &a);
        return to_point(&y, prec);
    }
    let gs = grs.sub(&gls, prec);
    let gd = grd.sub(&gld, prec);
    let scale = gd.div(&gs, prec).expect("gap lengths were certified positive");
    gld.add(&Interval::point(x.clone()).sub(&gls, prec).mul(&scale, prec), prec)
}

fn widen(center: &Interval, x: &Dyadic, target: &Interval, lip: &Dyadic, prec: u32) -> Interval {
    let w = x.sub(target.lo()).abs().max(target.hi().sub(x).abs());
    let r = w.mul(lip).round(prec, Round::Up);
    Interval::new(center.lo().sub(&r), center.hi().add(&r))
}

fn transfer_pass<L: LengthFunction + ?Sized>(
    model: &L,
    src: &Word,
    dst: &Word,
    x: &Dyadic,
    opts: &EvalOptions,
    prec: u32,
    last: bool,
) -> Result<Pass> {
    let mut s = Track::walk(model, src, prec)?;
    let mut d = Track::walk(model, dst, prec)?;
    let tol = Dyadic::from_f64(opts.tol).ok_or_else(|| Error::InvalidParameter("tol must be finite".into()))?;
    let xr = x.to_rational();
    for _ in 0..=opts.max_depth {
        let encl = d.enclosure(prec);
        if encl.width() <= tol {
            return Ok(Pass::Done(encl));
        }
        let ss = s.split(model, prec)?;
        let ds = d.split(model, prec)?;
        let (gls, grs, ex_s) = s.gap(&ss, prec);
        let bit = if let Some((a, b)) = &ex_s {
            let (gld, grd, ex_d) = d.gap(&ds, prec);
            if &xr == a {
                return Ok(Pass::Done(ex_d.map_or(gld, |(c, _)| to_point(&c, prec))));
            }
            if &xr == b {
                return Ok(Pass::Done(ex_d.map_or(grd, |(_, e)| to_point(&e, prec))));
            }
            if &xr < a {
                0
            } else if &xr > b {
                1
            } else {
                return Ok(Pass::Done(gap_affine(x, (&s, &ss), (&d, &ds), prec)));
            }
        } else if x < gls.lo() {
            0
        } else if x > grs.hi() {
            1
        } else if x > gls.hi() && x < grs.lo() {
            return Ok(Pass::Done(gap_affine(x, (&s, &ss), (&d, &ds), prec)));
        } else if !last {
            return Ok(Pass::Ambiguous);
        } else {
            let lip = transfer_lipschitz(model, s.word.len(), d.word.len()).ok_or_else(|| {
                Error::PrecondFailed(format!(
                    "point lies within 2^-{prec} of a gap endpoint of I_{} and the model has no Lipschitz certificate",
                    s.word
                ))
            })?;
            let (gld, grd, _) = d.gap(&ds, prec);
            let out = if gls.contains(x) { widen(&gld, x, &gls, &lip, prec) } else { widen(&grd, x, &grs, &lip, prec) };
            return Ok(Pass::Done(out));
        };
        s = s.descend(&ss, bit, prec);
        d = d.descend(&ds, bit, prec);
    }
    Err(Error::DepthExceeded(opts.max_depth))
}

/// The map `I_src -> I_dst` sending `I_{src w}` onto `I_{dst w}` and each
/// gap `G_{src w}` affinely onto `G_{dst w}`, at a point of `I_src`.
pub fn transfer<L: LengthFunction + ?Sized>(
    model: &L,
    src: &Word,
    dst: &Word,
    x: &Dyadic,
    opts: &EvalOptions,
) -> Result<Interval> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    let mut prec = opts.prec.max(64);
    loop {
        let last = prec >= TRANSFER_MAX_PREC;
        match transfer_pass(model, src, dst, x, opts, prec, last)? {
            Pass::Done(iv) => return Ok(iv),
            Pass::Ambiguous => prec = (prec * 2).min(TRANSFER_MAX_PREC),
        }
    }
}

fn node_ends<L: LengthFunction + ?Sized>(model: &L, w: &Word, prec: u32) -> Result<(Interval, Interval)> {
    let t = Track::walk(model, w, prec)?;
    if let (Some(l), Some(n)) = (&t.left_x, &t.len_x) {
        return Ok((to_point(l, prec), to_point(&(l + n), prec)));
    }
    let lo = match &t.left_x {
        Some(l) => to_point(l, prec),
        None => t.left.clone(),
    };
    Ok((lo, t.left.add(&t.len, prec)))
}

fn check_symbol(i: u8) -> Result<()> {
    if i > 1 {
        return Err(Error::InvalidParameter(format!("symbol must be 0 or 1, got {i}")));
    }
    Ok(())
}

fn half(iv: &Interval) -> Interval {
    Interval::new(iv.lo().shl(-1), iv.hi().shl(-1))
}

fn phi_point<L: LengthFunction + ?Sized>(model: &L, i: u8, x: &Dyadic, opts: &EvalOptions) -> Result<Interval> {
    let prec = opts.prec;
    let target = Word::repeat(i, 1);
    if x.signum() < 0 {
        let (lo, _) = node_ends(model, &target, prec)?;
        return Ok(lo.add(&half(&Interval::point(x.clone())), prec));
    }
    if x > &Dyadic::one() {
        let (_, hi) = node_ends(model, &target, prec)?;
        return Ok(hi.add(&half(&Interval::point(x.sub(&Dyadic::one()))), prec));
    }
    transfer(model, &Word::empty(), &target, x, opts)
}

fn phi_inv_point<L: LengthFunction + ?Sized>(model: &L, i: u8, y: &Dyadic, opts: &EvalOptions) -> Result<Interval> {
    let prec = opts.prec;
    let src = Word::repeat(i, 1);
    let (lo, hi) = node_ends(model, &src, prec)?;
    let two = |iv: Interval| Interval::new(iv.lo().shl(1), iv.hi().shl(1));
    if y < lo.lo() {
        return Ok(two(Interval::point(y.clone()).sub(&lo, prec)));
    }
    if y > hi.hi() {
        return Ok(Interval::one().add(&two(Interval::point(y.clone()).sub(&hi, prec)), prec));
    }
    if lo.is_point() && y == lo.lo() {
        return Ok(Interval::zero());
    }
    if hi.is_point() && y == hi.lo() {
        return Ok(Interval::one());
    }
    if y <= lo.hi() || y >= hi.lo() {
        // within the endpoint enclosure: the image is within L * width of 0 or 1
        let lip = transfer_lipschitz(model, 1, 0)
            .ok_or_else(|| Error::PrecondFailed(format!("{y} is too close to an endpoint of I_{i}")))?
            .max(Dyadic::from_int(2));
        let (center, end) = if y <= lo.hi() { (Interval::zero(), &lo) } else { (Interval::one(), &hi) };
        return Ok(widen(&center, y, end, &lip, prec));
    }
    transfer(model, &src, &Word::empty(), y, opts)
}

/// `phi_i` on an enclosure, using monotonicity.
pub fn phi_eval<L: LengthFunction + ?Sized>(model: &L, i: u8, x: &Interval, opts: &EvalOptions) -> Result<Interval> {
    check_symbol(i)?;
    let a = phi_point(model, i, x.lo(), opts)?;
    if x.is_point() {
        return Ok(a);
    }
    Ok(a.hull(&phi_point(model, i, x.hi(), opts)?))
}

/// `phi_i` at a rational point.
pub fn phi_eval_rational<L: LengthFunction + ?Sized>(
    model: &L,
    i: u8,
    x: &BigRational,
    opts: &EvalOptions,
) -> Result<Interval> {
    phi_eval(model, i, &rational_input(x, opts), opts)
}

/// `phi_i^{-1}` on an enclosure.
pub fn phi_inv<L: LengthFunction + ?Sized>(model: &L, i: u8, y: &Interval, opts: &EvalOptions) -> Result<Interval> {
    check_symbol(i)?;
    let a = phi_inv_point(model, i, y.lo(), opts)?;
    if y.is_point() {
        return Ok(a);
    }
    Ok(a.hull(&phi_inv_point(model, i, y.hi(), opts)?))
}

fn rational_input(x: &BigRational, opts: &EvalOptions) -> Interval {
    // dyadic rationals stay points
    let d = x.denom();
    if (d & (d - BigInt::from(1))).is_zero() {
        return Interval::point(Dyadic::from_rational(x, opts.prec.max(64) + x.numer().bits() as u32, Round::Down));
    }
    Interval::from_rational(x, opts.prec + 64)
}

/// `(x, phi_i(x))` midpoints on a uniform grid of `[0, 1]`, for plotting.
pub fn sample_map<L: LengthFunction + ?Sized>(model: &L, i: u8, points: usize, opts: &EvalOptions) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::InvalidParameter("need at least two sample points".into()));
    }
    (0..points)
        .map(|k| {
            let x = BigRational::new(BigInt::from(k), BigInt::from(points - 1));
            let y = phi_eval_rational(model, i, &x, opts)?;
            Ok((x.to_f64().unwrap_or(f64::NAN), y.mid_f64()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tree::{pi_point, rat};
    use crate::models::{McMullenModel, SymmetricModel};
    use crate::symbolic::Beta;

    fn mc() -> McMullenModel {
        McMullenModel::new(Beta::half(), 128).unwrap()
    }

    #[test]
    fn fixed_points_and_corners() {
        let m = mc();
        let o = EvalOptions::default();
        let z = phi_eval(&m, 0, &Interval::zero(), &o).unwrap();
        assert!(z.contains(&Dyadic::zero()) && z.width_f64() <= 1e-12);
        let one = phi_eval(&m, 1, &Interval::one(), &o).unwrap();
        assert!(one.contains(&Dyadic::one()) && one.width_f64() <= 1e-12);
        let a = phi_eval(&m, 0, &Interval::one(), &o).unwrap();
        assert!(a.contains_rational(&rat(1, 128)));
    }

    #[test]
    fn thirds_are_exact() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        let o = EvalOptions::default();
        // 1/2 is the middle of the first gap; its image is the middle of G_0
        let y = phi_eval_rational(&m, 0, &rat(1, 2), &o).unwrap();
        assert!(y.contains_rational(&rat(1, 6)));
        assert!(y.width_f64() < 1e-30);
        let y = phi_eval_rational(&m, 1, &rat(1, 2), &o).unwrap();
        assert!(y.contains_rational(&rat(5, 6)));
        let back = phi_inv(&m, 1, &y, &o).unwrap();
        assert!(back.contains_rational(&rat(1, 2)));
        // phi_0(x) = x/3 on the middle-thirds set
        let y = phi_eval_rational(&m, 0, &rat(3, 4), &o).unwrap();
        assert!(y.contains_rational(&rat(1, 4)));
    }

    #[test]
    fn outside_unit_interval() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        let o = EvalOptions::default();
        let y = phi_eval_rational(&m, 1, &rat(3, 1), &o).unwrap();
        assert!(y.contains_rational(&rat(2, 1)));
        let y = phi_eval_rational(&m, 0, &rat(-1, 1), &o).unwrap();
        assert!(y.contains_rational(&rat(-1, 2)));
        let x = phi_inv(&m, 0, &y, &o).unwrap();
        assert!(x.contains_rational(&rat(-1, 1)));
        // [0, 1] outside I_1 is sent below zero
        let x = phi_inv(&m, 1, &Interval::from_rational(&rat(1, 2), 128), &o).unwrap();
        assert!(x.contains_rational(&rat(-1, 3)));
    }

    #[test]
    fn self_reference_on_nodes() {
        let m = mc();
        let o = EvalOptions::default();
        for word in ["", "0", "1", "0110", "111000"] {
            let w: Word = word.parse().unwrap();
            let node = pi_point(&m, &w.concat(&Word::repeat(0, 20)), w.len() + 20, 160).unwrap();
            for i in 0..2u8 {
                let img = phi_eval(&m, i, &Interval::point(node.lo().clone()), &o).unwrap();
                let iw = w.prepend(i).concat(&Word::repeat(0, 20));
                let target = pi_point(&m, &iw, iw.len(), 160).unwrap();
                assert!(img.overlaps(&target), "phi_{i}(left I_{w}) missed left I_{i}{w}");
            }
        }
    }

    #[test]
    fn inverse_roundtrip_in_gaps() {
        let m = mc();
        let o = EvalOptions::default();
        for k in 1..20 {
            let x = Dyadic::new(BigInt::from(2 * k + 1), -6);
            for i in 0..2u8 {
                let y = phi_eval(&m, i, &Interval::point(x.clone()), &o).unwrap();
                let back = phi_inv(&m, i, &y, &o).unwrap();
                assert!(back.contains(&x), "phi_{i}^-1(phi_{i}({x})) = {back}");
                assert!(back.width_f64() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        let o = EvalOptions { tol: 0.0, ..Default::default() };
        assert!(phi_eval(&mc(), 0, &Interval::one(), &o).is_err());
    }

    #[test]
    fn depth_cap() {
        let o = EvalOptions { tol: 1e-300, max_depth: 4, prec: 128 };
        assert!(matches!(phi_eval(&mc(), 0, &Interval::one(), &o), Err(Error::DepthExceeded(4))));
    }
}
