pub mod ensemble;
pub mod error;
pub mod functional;
pub mod initializer;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/functional.md")]
    mod functional {}
    #[doc = include_str!("../../../book/src/initializer.md")]
    mod initializer {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
}
