//! A desk-scale laboratory for multidimensional topological Markov shifts.
//!
//! The crate provides the objects needed to experiment with symmetric measures
//! on nearest-neighbor shift spaces over `Z^d`:
//!
//! * lattice geometry, shift spaces and admissible-pattern enumeration
//!   ([`geometry`], [`shift`], [`enumerate`], [`models`]);
//! * tail swaps, counting cocycles and their exchangeability kernel
//!   ([`relations`]);
//! * integer-lattice subgroup arithmetic and the strong-aperiodicity
//!   diagnostics ([`lattice`], [`aperiodicity`]);
//! * exact 1D theory: transfer matrices, maximal-entropy and twisted Markov
//!   measures, specification and conformality checks ([`onedim`]);
//! * finite-volume Gibbs measures, heat-bath sampling, entropy/pressure
//!   estimation and phase probes ([`potential`], [`thermo`], [`glauber`]);
//! * the free stacking product and driver-indexed product fields with
//!   correlation/periodogram diagnostics ([`spectral`]).
//!
//! Everything is deterministic given explicit seeds; statistical verdicts
//! always carry the tested ranges.

pub mod aperiodicity;
pub mod enumerate;
pub mod error;
pub mod geometry;
pub mod glauber;
pub mod irreducible;
pub mod lattice;
pub mod models;
pub mod onedim;
pub mod potential;
pub mod relations;
pub mod shift;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
pub use geometry::{Coord, Site, SiteSet};
pub use lattice::IntegerLattice;
pub use shift::{Pattern, ShiftSpace, SymbolId};
