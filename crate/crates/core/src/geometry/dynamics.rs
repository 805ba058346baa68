use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::bilip::certificate_thetas;
use super::maps::{phi_inv, EvalOptions};
use super::tree::{pi_point, LengthSum, DEFAULT_PREC};
use crate::error::{Error, Result};
use crate::models::LengthFunction;
use crate::real::{DecimalEnclosure, Dyadic, Interval, Round};
use crate::symbolic::Word;

/// One piece of `f`, valid between two consecutive breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Piece {
    /// `x -> y0 + slope (x - x0)` with `x0` the piece's left breakpoint
    /// (its right one for the leftmost piece).
    Affine { slope: String, anchor: usize, value: String },
    /// The inverse of `phi_i`.
    InverseBranch { symbol: u8 },
    /// Line from `(x_k, y_k)` to `(x_{k+1}, y_{k+1})`.
    Connecting { from: usize, to: usize },
}

/// The expanding map `f` with `f o phi_i = id` near the attractor.
pub struct ExpandingMap<'a, L: LengthFunction + ?Sized> {
    model: &'a L,
    delta: BigRational,
    /// `0, a, a + 2d, b - 2d, b, 1` with `a = phi_0(1)` and `b = phi_1(0)`.
    breakpoints: Vec<LengthSum>,
    /// Exact images of the breakpoints.
    images: Vec<BigRational>,
    /// Seven pieces: `(-inf, 0]`, then between consecutive breakpoints,
    /// then `[1, inf)`.
    pieces: Vec<Piece>,
    expansion: f64,
    opts: EvalOptions,
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicsSummary {
    pub delta: String,
    pub breakpoints: Vec<DecimalEnclosure>,
    pub pieces: Vec<Piece>,
    pub u: [(DecimalEnclosure, DecimalEnclosure); 2],
    pub expansion: f64,
}

fn dyadic_rational(r: &BigRational) -> bool {
    let d = r.denom();
    (d & (d - BigInt::one())).is_zero()
}

fn two() -> BigRational {
    BigRational::from_integer(BigInt::from(2))
}

/// Largest power of two not exceeding `x > 0`.
fn pow2_floor(x: &Interval) -> Option<BigRational> {
    let lo = x.lo();
    if lo.signum() <= 0 {
        return None;
    }
    let r = lo.to_rational();
    let mut e = lo.msb()?;
    let p = |e: i64| {
        if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
        }
    };
    while p(e) > r {
        e -= 1;
    }
    while p(e + 1) <= r {
        e += 1;
    }
    Some(p(e))
}

/// Builds `f` for the model; `delta = None` picks the largest power of two
/// at most `(phi_1(0) - phi_0(1))/8`.
pub fn build_dynamics<L: LengthFunction + ?Sized>(model: &L, delta: Option<BigRational>) -> Result<ExpandingMap<'_, L>> {
    let prec = DEFAULT_PREC;
    let l0 = model.length(&Word::repeat(0, 1))?;
    let l1 = model.length(&Word::repeat(1, 1))?;
    let a = LengthSum::of(&l0);
    let b = LengthSum::constant(BigRational::one()).minus(&l1);
    let middle = b.clone().add_sum(&a.negated());
    let delta = match delta {
        Some(d) => d,
        None => {
            let eighth = middle.eval(prec).scale_rational(&BigRational::new(1.into(), 8.into()), prec);
            pow2_floor(&eighth).ok_or_else(|| Error::ModelInvalid("phi_0(1) >= phi_1(0)".into()))?
        }
    };
    if !delta.is_positive() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let four_delta = &delta * BigRational::from_integer(4.into());
    match middle.clone().add_rational(&-&four_delta).sign() {
        Some(std::cmp::Ordering::Greater) => {}
        _ => {
            return Err(Error::DeltaTooLarge(format!(
                "need phi_0(1) + 2 delta < phi_1(0) - 2 delta, got delta = {delta}"
            )))
        }
    }
    let two_delta = &delta * two();
    let breakpoints = vec![
        LengthSum::zero(),
        a.clone(),
        a.clone().add_rational(&two_delta),
        b.clone().add_rational(&-&two_delta),
        b.clone(),
        LengthSum::constant(BigRational::one()),
    ];
    let one = BigRational::one();
    let images = vec![
        BigRational::zero(),
        one.clone(),
        &one + &four_delta,
        -&four_delta,
        BigRational::zero(),
        one.clone(),
    ];
    let slope2 = |anchor: usize, value: &BigRational| Piece::Affine { slope: "2".into(), anchor, value: value.to_string() };
    let pieces = vec![
        slope2(0, &images[0]),
        Piece::InverseBranch { symbol: 0 },
        slope2(1, &images[1]),
        Piece::Connecting { from: 2, to: 3 },
        slope2(3, &images[3]),
        Piece::InverseBranch { symbol: 1 },
        slope2(5, &images[5]),
    ];
    let expansion = match model.certificate() {
        Some(c) => {
            let (_, hi) = certificate_thetas(&c);
            2.0f64.min(1.0 / hi)
        }
        None => {
            let (_, hi) = model.ratio_bounds();
            2.0f64.min(1.0 / hi)
        }
    };
    Ok(ExpandingMap { model, delta, breakpoints, images, pieces, expansion, opts: EvalOptions::default() })
}

impl<'a, L: LengthFunction + ?Sized> ExpandingMap<'a, L> {
    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn breakpoints(&self) -> &[LengthSum] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Lower bound `c` for `|f(x) - f(y)| / |x - y|` with `x, y` in the same
    /// component of `U`.
    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    pub fn set_options(&mut self, opts: EvalOptions) {
        self.opts = opts;
    }

    fn prec(&self) -> u32 {
        self.opts.prec
    }

    pub fn breakpoint_enclosure(&self, k: usize) -> Interval {
        self.breakpoints[k].eval(self.prec())
    }

    /// The two components of `U` as enclosures of their endpoints.
    pub fn u(&self) -> [(Interval, Interval); 2] {
        let p = self.prec();
        let d = Interval::from_rational(&self.delta, p);
        [
            (d.neg(), self.breakpoint_enclosure(1).add(&d, p)),
            (self.breakpoint_enclosure(4).sub(&d, p), Interval::one().add(&d, p)),
        ]
    }

    /// Whether `x` lies in `U`, if decidable at the working precision.
    pub fn in_u(&self, x: &Interval) -> Option<bool> {
        let mut undecided = false;
        for (lo, hi) in self.u() {
            if lo.certainly_lt(x) && x.certainly_lt(&hi) {
                return Some(true);
            }
            if !(x.certainly_lt(&lo) || hi.certainly_lt(x)) {
                undecided = true;
            }
        }
        if undecided {
            None
        } else {
            Some(false)
        }
    }

    /// Formula of piece `k`, extended past its ends.
    pub fn eval_piece(&self, k: usize, x: &Interval) -> Result<Interval> {
        let p = self.prec();
        let two = |iv: &Interval| Interval::new(iv.lo().shl(1), iv.hi().shl(1));
        match &self.pieces[k] {
            Piece::Affine { anchor, .. } => {
                let x0 = self.breakpoint_enclosure(*anchor);
                let y0 = Interval::from_rational(&self.images[*anchor], p);
                Ok(y0.add(&two(&x.sub(&x0, p)), p))
            }
            Piece::InverseBranch { symbol } => phi_inv(self.model, *symbol, x, &self.opts),
            Piece::Connecting { from, to } => {
                let (x0, x1) = (self.breakpoint_enclosure(*from), self.breakpoint_enclosure(*to));
                let (y0, y1) = (Interval::from_rational(&self.images[*from], p), Interval::from_rational(&self.images[*to], p));
                let slope = y1.sub(&y0, p).div(&x1.sub(&x0, p), p).expect("connecting piece has positive width");
                Ok(y0.add(&x.sub(&x0, p).mul(&slope, p), p))
            }
        }
    }

    fn eval_at(&self, x: &Dyadic) -> Result<Interval> {
        let point = Interval::point(x.clone());
        let mut out: Option<Interval> = None;
        let mut k = 0usize;
        for (j, bp) in self.breakpoints.iter().enumerate() {
            let e = bp.eval(self.prec());
            if e.contains(x) {
                // on a breakpoint enclosure both neighbours are candidates
                let v = self.eval_piece(j, &point)?.hull(&self.eval_piece(j + 1, &point)?);
                out = Some(match out {
                    Some(o) => o.hull(&v),
                    None => v,
                });
            }
            if e.hi() < x {
                k = j + 1;
            }
        }
        match out {
            Some(v) => Ok(v),
            None => self.eval_piece(k, &point),
        }
    }

    /// Enclosure of `f(x)`. `f` is monotone between breakpoints, so the
    /// hull of the endpoint and breakpoint images covers the range.
    pub fn eval(&self, x: &Interval) -> Result<Interval> {
        let mut out = self.eval_at(x.lo())?;
        if x.is_point() {
            return Ok(out);
        }
        out = out.hull(&self.eval_at(x.hi())?);
        for (j, bp) in self.breakpoints.iter().enumerate() {
            if bp.eval(self.prec()).overlaps(x) {
                out = out.hull(&Interval::from_rational(&self.images[j], self.prec()));
            }
        }
        Ok(out)
    }

    pub fn eval_rational(&self, x: &BigRational) -> Result<Interval> {
        let p = self.prec() + 64;
        if dyadic_rational(x) {
            return self.eval(&Interval::point(Dyadic::from_rational(x, p + x.numer().bits() as u32, Round::Down)));
        }
        self.eval(&Interval::from_rational(x, p))
    }

    /// Largest mismatch between the two pieces meeting at each breakpoint
    /// and its exact image.
    pub fn continuity_defect(&self) -> Result<f64> {
        let p = self.prec();
        let mut worst = 0.0f64;
        for j in 0..self.breakpoints.len() {
            let x = self.breakpoint_enclosure(j);
            let y = Interval::from_rational(&self.images[j], p);
            for k in [j, j + 1] {
                let v = self.eval_piece(k, &x)?;
                let d = v.hull(&y).width_f64();
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    /// Distance bound between `f(I_w)` and `I_{w'}`, where `w'` drops the
    /// first symbol of `w`. Zero in exact arithmetic.
    pub fn coding_defect(&self, w: &Word) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        let p = self.prec();
        let x = pi_point(self.model, w, w.len(), p)?;
        let image = self.eval(&x)?;
        let tail = w.suffix_from(1);
        let target = if tail.is_empty() {
            Interval::new(Dyadic::zero(), Dyadic::one())
        } else {
            pi_point(self.model, &tail, tail.len(), p)?
        };
        let d = |a: &Dyadic, b: &Dyadic| a.sub(b).abs().to_f64(Round::Up);
        Ok(d(image.lo(), target.lo()).max(d(image.hi(), target.hi())))
    }

    /// Certified lower bound on `|f(y) - f(x)| / |y - x|`; zero when the two
    /// image enclosures overlap.
    pub fn difference_quotient(&self, x: &BigRational, y: &BigRational) -> Result<f64> {
        if x == y {
            return Err(Error::InvalidParameter("difference quotient needs x != y".into()));
        }
        let (fx, fy) = (self.eval_rational(x)?, self.eval_rational(y)?);
        let num = if fx.certainly_lt(&fy) {
            fy.lo().sub(fx.hi())
        } else if fy.certainly_lt(&fx) {
            fx.lo().sub(fy.hi())
        } else {
            return Ok(0.0);
        };
        let den = Dyadic::from_rational(&(y - x).abs(), self.prec(), Round::Up);
        Ok(num.to_f64(Round::Down) / den.to_f64(Round::Up) * (1.0 - 4.0 * f64::EPSILON))
    }

    pub fn summary(&self) -> DynamicsSummary {
        let u = self.u();
        let de = |iv: &Interval| DecimalEnclosure::of(iv, 17);
        DynamicsSummary {
            delta: format!("{}/{}", self.delta.numer(), self.delta.denom()),
            breakpoints: (0..self.breakpoints.len()).map(|j| de(&self.breakpoint_enclosure(j))).collect(),
            pieces: self.pieces.clone(),
            u: [(de(&u[0].0), de(&u[0].1)), (de(&u[1].0), de(&u[1].1))],
            expansion: self.expansion,
        }
    }

    pub fn delta_f64(&self) -> f64 {
        self.delta.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::maps::phi_eval;
    use crate::geometry::tree::rat;
    use crate::models::{McMullenModel, SymmetricModel};
    use crate::symbolic::Beta;

    #[test]
    fn thirds_dynamics() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        let f = build_dynamics(&m, None).unwrap();
        // (2/3 - 1/3)/8 = 1/24, so the default is 1/32
        assert_eq!(f.delta(), &rat(1, 32));
        assert!(f.eval_rational(&rat(0, 1)).unwrap().contains_rational(&rat(0, 1)));
        assert!(f.eval_rational(&rat(1, 1)).unwrap().contains_rational(&rat(1, 1)));
        assert!(f.eval_rational(&rat(1, 9)).unwrap().contains_rational(&rat(1, 3)));
        assert!(f.eval_rational(&rat(8, 9)).unwrap().contains_rational(&rat(2, 3)));
        assert!(f.continuity_defect().unwrap() < 1e-12);
        assert_eq!(f.expansion(), 2.0);
    }

    #[test]
    fn delta_precondition() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        assert!(matches!(build_dynamics(&m, Some(rat(1, 12))), Err(Error::DeltaTooLarge(_))));
        assert!(build_dynamics(&m, Some(rat(1, 13))).is_ok());
        assert!(build_dynamics(&m, Some(rat(0, 1))).is_err());
    }

    #[test]
    fn mcmullen_inverse_branches() {
        let m = McMullenModel::new(Beta::half(), 128).unwrap();
        let f = build_dynamics(&m, None).unwrap();
        assert!(f.continuity_defect().unwrap() < 1e-12);
        let bits: Word = "10110100111010001101".parse().unwrap();
        let x = pi_point(&m, &bits, bits.len(), 160).unwrap();
        let y = f.eval(&Interval::point(x.lo().clone())).unwrap();
        let shifted = pi_point(&m, &bits.suffix_from(1), bits.len() - 1, 160).unwrap();
        assert!(y.overlaps(&shifted), "f(pi(1w)) = {y}, pi(w) = {shifted}");
        // f o phi_0 = id
        let x0 = Interval::from_rational(&rat(3, 7), 128);
        let img = phi_eval(&m, 0, &x0, &EvalOptions::default()).unwrap();
        assert!(f.eval(&img).unwrap().overlaps(&x0));
    }

    #[test]
    fn coding_shift_and_expansion() {
        let m = McMullenModel::new(Beta::half(), 128).unwrap();
        let f = build_dynamics(&m, None).unwrap();
        for w in ["1", "0", "0110", "10110100111010001101", "01111111111111111111"] {
            let d = f.coding_defect(&w.parse().unwrap()).unwrap();
            assert!(d < 1e-9, "{w}: {d}");
        }
        let c = f.expansion();
        assert!(c > 1.0);
        let d = f.delta().clone();
        for (x, y) in [(rat(0, 1), rat(1, 1000)), (-&d / rat(2, 1), rat(0, 1)), (rat(1, 1), rat(1, 1) + &d / rat(3, 1))] {
            let q = f.difference_quotient(&x, &y).unwrap();
            assert!(q >= c * (1.0 - 1e-12), "{x} {y}: {q}");
        }
    }

    #[test]
    fn u_contains_attractor_ends() {
        let m = SymmetricModel::constant(rat(1, 3)).unwrap();
        let f = build_dynamics(&m, None).unwrap();
        assert_eq!(f.in_u(&Interval::zero()), Some(true));
        assert_eq!(f.in_u(&Interval::from_rational(&rat(1, 2), 64)), Some(false));
    }
}
