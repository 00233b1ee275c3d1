pub mod blowup;
pub mod cli;
pub mod characteristic;
pub mod coeffs;
pub mod ermakov;
pub mod error;
pub mod expr;
pub mod figures;
pub mod numerics;
pub mod output;
pub mod ode;
pub mod riccati;
pub mod scenario;
pub mod pipeline;
pub mod seeds;
pub mod simulate;
pub mod special;
pub mod transforms;
pub mod validate;

pub use error::{Error, Result};
