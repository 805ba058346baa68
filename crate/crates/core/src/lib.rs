pub mod covering;
pub mod dimensions;
pub mod error;
pub mod geometry;
pub mod loglength;
pub mod models;
pub mod primes;
pub mod real;
pub mod symbolic;

pub use error::{Error, Result};
pub use loglength::{ll_cmp, ll_mul, ll_to_float, LogLength};
pub use symbolic::{floor_boundary, Beta, Word};
