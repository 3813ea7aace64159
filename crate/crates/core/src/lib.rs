//! Homomorphic private database exploration.
//!
//! The crate is layered bottom-up: [`ring`] arithmetic, [`rlwe`] keys and
//! keyswitching, the approximate [`ckks`] layer and its [`bootstrap`], then the
//! scheme-switching pipeline ([`repack`], [`pfe`], [`threshold`]) composed by the
//! two-party [`protocol`].

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bootstrap;
pub mod ckks;
pub mod error;
pub mod pfe;
pub mod protocol;
pub mod repack;
pub mod ring;
pub mod rlwe;
pub mod threshold;

pub use error::{Error, Result};
