//! Single-photon transport through waveguide-coupled Jaynes–Cummings arrays.
//!
//! Each site is a ring cavity holding a two-level emitter, side-coupled to a
//! common waveguide. [`site`] gives the amplitudes of one site, [`transfer`]
//! cascades them into finite periodic arrays, [`bloch`] treats the infinite
//! lattice and [`disorder`] averages over random cavity positions.
//!
//! All rates and detunings are in units of the waveguide–cavity rate Γ.

// Negated comparisons are deliberate: they send NaN down the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
mod dd;
pub mod disorder;
pub mod error;
pub mod grid;
pub mod params;
pub mod site;
pub mod transfer;

pub use error::{Error, Result};
pub use grid::{Grid, GridKind};
pub use params::{CqedParams, Detuning, Regime, ScatteringAmplitudes};
pub use site::{PointFlag, SpectrumPoint};
pub use transfer::{LatticeSpec, PhaseModel};
