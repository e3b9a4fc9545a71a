//! Random codes, jammers, decoders and bounds for the Gaussian arbitrarily
//! varying channel.

pub mod bounds;
pub mod codebook;
pub mod config;
pub mod decoder;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod format;
pub mod jammers;
pub mod model;
pub mod plot;
pub mod rng;
pub mod special;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/codebook.md")]
    mod codebook {}
    #[doc = include_str!("../../../book/src/jammers.md")]
    mod jammers {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
