pub mod bounded;
pub mod dataset;
pub mod error;
pub mod estimands;
pub mod experiment;
pub mod harness;
pub mod impute;
pub mod linalg;
pub mod regression;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod truncreg;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bounded-normals.md")]
    mod bounded_normals {}
    #[doc = include_str!("../../../book/src/regression.md")]
    mod regression {}
    #[doc = include_str!("../../../book/src/truncated-regression.md")]
    mod truncated_regression {}
    #[doc = include_str!("../../../book/src/imputation.md")]
    mod imputation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
