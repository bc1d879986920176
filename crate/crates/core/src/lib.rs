pub mod defcomplex;
pub mod error;
pub mod excalc;
pub mod flows;
pub mod foliation_dgla;
pub mod jet;
pub mod leafcx;
pub mod report;
pub mod residual;
pub mod sampling;
pub mod scenarios;
pub mod suites;
pub mod symfield;

pub use error::{Error, Result};
