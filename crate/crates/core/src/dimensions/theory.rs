use std::f64::consts::LN_2;

use super::entropy::entropy_unchecked as h;
use super::optimize::{compute_d, maximize_1d};
use super::report::{DimValue, DimensionReport};
use crate::error::{Error, Result};
use crate::models::{McMullenModel, StarModel};
use crate::symbolic::Beta;

const GRID_1D: usize = 4096;

/// `sup_p H(p) / (ln M - beta (1-p) ln 2)`.
pub fn assouad_value(m: u64, beta: Beta) -> f64 {
    let (lm, b) = ((m as f64).ln(), beta.to_f64());
    maximize_1d(|p| h(p) / (lm - b * (1.0 - p) * LN_2), GRID_1D).value
}

/// `sup_p H(p) / (ln (M+1) + beta p ln 2)`.
pub fn lower_value(m: u64, beta: Beta) -> f64 {
    let (lm, b) = (((m + 1) as f64).ln(), beta.to_f64());
    maximize_1d(|p| h(p) / (lm + b * p * LN_2), GRID_1D).value
}

pub fn mcmullen_dimensions(model: &McMullenModel, tol: f64) -> Result<DimensionReport> {
    let lm = (model.m() as f64).ln();
    let hdim = DimValue::formula(LN_2 / lm);
    let d = compute_d(lm, model.beta(), tol)?;
    let bdim = DimValue::optimizer(d.d, tol);
    if d.d <= hdim.value {
        return Err(Error::PrecondFailed(format!("box dimension {} does not exceed hdim {}", d.d, hdim.value)));
    }
    Ok(DimensionReport {
        model: format!("mcmullen(beta={}, M={})", model.beta(), model.m()),
        ldim: None,
        hdim,
        lbdim: bdim,
        ubdim: bdim,
        pdim: None,
        adim: None,
        argmax: Some([d.p, d.q]),
    })
}

pub fn star_dimensions(model: &StarModel, tol: f64) -> Result<DimensionReport> {
    let (m, beta) = (model.m(), model.beta());
    let lb = compute_d(((m + 1) as f64).ln(), beta, tol)?;
    let ub = compute_d((m as f64).ln(), beta, tol)?;
    Ok(DimensionReport {
        model: format!("star(beta={}, M={}, N_k={})", beta, m, model.base().describe()),
        ldim: Some(DimValue::optimizer(lower_value(m, beta), tol)),
        hdim: DimValue::formula(LN_2 / ((m + 1) as f64).ln()),
        lbdim: DimValue::optimizer(lb.d, tol),
        ubdim: DimValue::optimizer(ub.d, tol),
        pdim: None,
        adim: Some(DimValue::optimizer(assouad_value(m, beta), tol)),
        argmax: Some([ub.p, ub.q]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BaseSequence;

    #[test]
    fn mcmullen_values() {
        let r = mcmullen_dimensions(&McMullenModel::new(Beta::half(), 128).unwrap(), 1e-10).unwrap();
        assert!((r.hdim.value - 1.0 / 7.0).abs() < 1e-15);
        assert!((r.ubdim.value - 0.14292034345).abs() < 1e-10);
        assert!(r.chain_holds());
        let r3 = mcmullen_dimensions(&McMullenModel::new(Beta::new(1, 3).unwrap(), 128).unwrap(), 1e-10).unwrap();
        assert!(r3.lbdim.value > 1.0 / 7.0);
    }

    #[test]
    fn star_chain() {
        let s = StarModel::new(Beta::half(), BaseSequence::factorial(128).unwrap());
        let r = star_dimensions(&s, 1e-10).unwrap();
        let want = [0.137774385, 0.142628382, 0.142691274, 0.14292034345, 0.148218638];
        for ((name, d), w) in r.chain().into_iter().zip(want) {
            assert!((d.value - w).abs() < 1e-8, "{name}: {} vs {w}", d.value);
        }
        assert!(r.chain_holds());
        assert!(r.gaps().iter().all(|(_, g)| *g > 10.0 * 1e-10));
    }

    #[test]
    fn small_beta_assouad() {
        let a = assouad_value(128, Beta::new(1, 1000).unwrap());
        assert!((a - 1.0 / 7.0).abs() < 1e-3);
    }
}
