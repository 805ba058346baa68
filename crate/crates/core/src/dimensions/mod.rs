//! Dimension formulas, the `D(lambda)` optimizer, covering-count slopes and
//! symmetric Cantor set quotients.

mod empirical;
mod entropy;
mod optimize;
mod report;
mod symmetric;
mod theory;

pub use empirical::{block_interior_scales, empirical_box, slope_at, BlockScales, EmpiricalBox, SlopeSample};
pub use entropy::{entropy, entropy_enclosure};
pub use optimize::{compute_d, compute_d_grid, d_objective, maximize_1d, DOptimum, Max1d, DEFAULT_GRID};
pub use report::{DimMethod, DimValue, DimensionReport};
pub use symmetric::{
    lebesgue_measure, local_dimension, quotient_sequence, symmetric_dimensions, tail_estimate, LebesgueBounds,
    LocalDimSample, TailEstimate,
};
pub use theory::{assouad_value, lower_value, mcmullen_dimensions, star_dimensions};
