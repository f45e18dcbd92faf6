//! Relational operators over run-length and index encoded columns.
//!
//! Columns live in [`column`]; interval primitives in [`primitives`]; mask
//! logic in [`logic`]; binary operators and filters in [`align`]; grouping
//! in [`groupby`]; joins in [`join`]; loading and encoding choice in
//! [`ingest`]; plan execution and differential checking in [`runner`].

pub mod alloc;
pub mod align;
pub mod column;
pub mod groupby;
pub mod ingest;
pub mod join;
mod error;
pub mod kernels;
pub mod logic;
pub mod primitives;
pub mod runner;
pub mod synth;
pub mod values;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    mod encodings {}
    #[doc = include_str!("../../../book/src/masks.md")]
    mod masks {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/groupby.md")]
    mod groupby {}
    #[doc = include_str!("../../../book/src/joins.md")]
    mod joins {}
    #[doc = include_str!("../../../book/src/choosing.md")]
    mod choosing {}
    #[doc = include_str!("../../../book/src/plans.md")]
    mod plans {}
}
