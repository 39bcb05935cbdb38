pub mod asian;
pub mod continuous;
pub mod contract;
pub mod error;
pub mod fair_fee;
pub mod hedging;
pub mod lattice;
pub mod model;
pub mod reproduce;
pub mod risk;
pub mod valuation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/contract.md")]
    mod contract {}
    #[doc = include_str!("../../../book/src/valuation.md")]
    mod valuation {}
    #[doc = include_str!("../../../book/src/surrender.md")]
    mod surrender {}
    #[doc = include_str!("../../../book/src/fair-fee.md")]
    mod fair_fee {}
    #[doc = include_str!("../../../book/src/approximation.md")]
    mod approximation {}
    #[doc = include_str!("../../../book/src/hedging.md")]
    mod hedging {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducing.md")]
    mod reproducing {}
}
