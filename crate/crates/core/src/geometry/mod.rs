//! Generating intervals, the maps `phi_0`, `phi_1`, the bi-Lipschitz test
//! and the expanding map `f`.

mod bilip;
mod dynamics;
mod maps;
mod quotients;
mod tree;

pub use bilip::{
    bilip_check, certificate_thetas, BiLipReport, CertificateReport, Certification, RatioKind, Verdict, Witness,
};
pub use dynamics::{build_dynamics, DynamicsSummary, ExpandingMap, Piece};
pub use maps::{phi_eval, phi_eval_rational, phi_inv, sample_map, transfer, EvalOptions};
pub use quotients::{defining_quotient, diff_quotients, tail_spread};
pub use tree::{build_interval, check_node, gap_length_exact, pi_point, IntervalNode, LengthSum, DEFAULT_PREC, MAX_PREC};
