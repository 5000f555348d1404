pub mod archmodel;
pub mod cli;
pub mod dagify;
pub mod deploy;
pub mod error;
pub mod hypart;
pub mod randgraph;
pub mod rng;
pub mod score;
pub mod sweep;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests, one module per chapter so a
// failure points at its page.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/dagify.md")]
    mod dagify {}
    #[doc = include_str!("../../../book/src/archmodel.md")]
    mod archmodel {}
    #[doc = include_str!("../../../book/src/partitioning.md")]
    mod partitioning {}
    #[doc = include_str!("../../../book/src/score.md")]
    mod score {}
    #[doc = include_str!("../../../book/src/deploy.md")]
    mod deploy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
