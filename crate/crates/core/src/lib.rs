//! Visible boundaries, boundary measures and Besov traces on grid domains.
//!
//! The guide in `book/` walks through each module with runnable examples.

// `!(x > 0.0)` also rejects NaN, which is the point of every such check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod content;
pub mod domain;
pub mod emit;
pub mod energy;
pub mod error;
pub mod frostman;
pub mod generators;
pub mod pipeline;
pub mod space;
pub mod suites;
pub mod tolerance;
pub mod trace;

pub use error::{Error, Result};

// The book's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/space.md")]
    mod space {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/content.md")]
    mod content {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/frostman.md")]
    mod frostman {}
    #[doc = include_str!("../../../book/src/trace.md")]
    mod trace {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
