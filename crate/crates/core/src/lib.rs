#![no_std]
//! Fuzzy vault constructions for fingerprint minutiae, with the attacks
//! and statistics used to estimate their security.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod field;
pub mod minutiae;
pub mod classic;
pub mod bits;
pub mod bch;
pub mod stats;
pub mod analysis;
pub mod grid;
pub mod descriptor;
pub mod correlation;
#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
