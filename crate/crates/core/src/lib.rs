pub mod energy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod mollifier;
pub mod pipeline;
mod quad;
pub mod report;
pub mod scenes;
pub mod solver;
pub mod study;
mod tv;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/circle.md")]
    mod circle {}
    #[doc = include_str!("../../../book/src/mollifiers.md")]
    mod mollifiers {}
    #[doc = include_str!("../../../book/src/functional.md")]
    mod functional {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
