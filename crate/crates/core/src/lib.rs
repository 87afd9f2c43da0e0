//! First-order high-frequency solution of a periodically driven qubit coupled
//! to a bosonic bath, with a truncated-Fock brute-force oracle.
//!
//! Units: frequencies in units of ω0, ħ = 1.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod reduced;
pub mod specfun;
pub mod strobe;

pub use error::{Error, Result};
pub use floquet::{
    DisplacementData, FirstOrderFloquet, FourierComponents, KickSpectra, MultiIndex, ProjectorSpectrum, SystemOperators,
};
pub use linalg::{CMat, C64};
pub use model::{
    DiscreteBath, DriveConfig, IntegralOptions, Mode, OhmicSpectralDensity, SpectralDensity, SpectralIntegrals,
    TabulatedSpectralDensity, ThermalParams,
};

pub use reduced::{BathRoute, Order, PhasePair, QubitState, ReducedDynamics};
pub use specfun::{KickCoefficients, KickSeries};

pub use oracle::{FockOperator, FockSpace};
pub use strobe::{ObservableFamily, ShiftedKickCoefficients};
