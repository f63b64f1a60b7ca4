//! Classical simulation of spatially deformed XXZ spin chains.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: deformation profiles and the light-cone geodesics of the
//!   emergent metric `ds² = dx² − v(x)² dt²`.
//! - [`circuit`]: two-qubit gate decompositions, even/odd Trotter layers,
//!   quench circuits, gate statistics and OpenQASM 2.0 export.
//! - [`statevector`]: dense statevector simulation, exact propagation and
//!   projective sampling.
//! - [`freefermion`]: exact `Δ = 0` dynamics through the two-point
//!   correlation matrix.
//! - [`observables`]: estimators, standard errors and derived analyses.
//! - [`experiments`]: config-driven protocols producing result bundles.
//!
//! Site indices are 1-based throughout the public API, matching the usual
//! labelling of a chain `1..=N`. Bond `j` couples sites `j` and `j + 1`.

pub mod circuit;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fmt;
pub mod freefermion;
pub mod lattice;
pub mod observables;
pub mod statevector;

pub use circuit::{ChainSpec, Circuit, CircuitStats, Gate};
pub use error::{Error, Result};
pub use freefermion::{CorrelationMatrix, FreeFermionPropagator, HoppingMatrix};
pub use lattice::{DeformationProfile, GeodesicCurve, ProfileKind};
pub use statevector::{ShotTable, StateVector};
