//! Numerics for the stability of the Caffarelli-Kohn-Nirenberg inequality
//! on the cylinder `R × S^{N-1}`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod params;
pub mod specfun;
pub mod extremals;
pub mod spectrum;
pub mod eig_oracle;
pub mod cylinder;

pub use error::{Error, Result};
pub use params::{classify, curve_constants, felli_schneider, make_params, CknParams, Region, RegionClass};
pub mod energy;
pub mod minimizer;
pub use energy::{bounds, BoundsReport};
pub use minimizer::{estimate_cbe, minimize_quotient, quotient, MinimizeConfig, QuotientReport, Start};
