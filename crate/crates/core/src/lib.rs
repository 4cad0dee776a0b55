pub mod error;
pub mod eulerian;
pub mod filter_ma;
pub mod fixtures;
pub mod golden;
pub mod io;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/sampled.md")]
    mod sampled {}
    #[doc = include_str!("../../../book/src/eulerian.md")]
    mod eulerian {}
    #[doc = include_str!("../../../book/src/filter_ma.md")]
    mod filter_ma {}
    #[doc = include_str!("../../../book/src/simulate.md")]
    mod simulate {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/accuracy.md")]
    mod accuracy {}
}
