//! Code design for two correlated binary sources sent over independent
//! erasure channels and decoded jointly.
//!
//! The crate is organised the way the analysis flows:
//!
//! * [`degree`] builds degree distributions, including the truncated check
//!   profile of the capacity-achieving LDGM (LT) ensemble for symmetric
//!   channels.
//! * [`region`] evaluates source entropies, the Slepian-Wolf conditions and
//!   the random-coding exponent.
//! * [`de`] runs scalar density evolution for joint iterative decoding and
//!   sweeps achievable channel parameter regions.
//! * [`stagger`] covers the staggered block construction built from
//!   single-user punctured LDPC codes.
//! * [`sim`] samples finite Tanner graphs and runs a GF(2) peeling decoder
//!   as ground truth for the asymptotic analysis.
//! * [`optimize`] searches check-degree profiles with differential
//!   evolution.

pub mod de;
pub mod degree;
mod error;
mod numeric;
pub mod optimize;
pub mod region;
pub mod sim;
pub mod stagger;

pub use error::{Error, Result};
