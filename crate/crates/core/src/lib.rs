//! Coarse geometry on discrete metric spaces, compactification models,
//! boundary lifting, completely positive kernel maps, Toeplitz quantization
//! on Fock space and Toeplitz cone maps, all evaluated on finite windows
//! with explicit defect profiles.

pub mod coarse;
pub mod compact;
pub mod cone;
pub mod error;
pub mod fock;
pub mod kernel;
pub mod lift;
pub mod operator;
pub mod profile;
pub mod space;

pub use coarse::{
    are_close, coarse_map_check, is_controlled, orbit_entourage, slow_oscillation_profile,
    Entourage, GroupAction, PointMap, SampledFunction, Translation,
};
pub use compact::{model_by_key, model_keys, BoundaryPoint, CompactModel};
pub use cone::{ConeFunction, RampSchedule, Selection, TrigPolynomial};
pub use error::{Error, Result};
pub use fock::{FockTruncation, Symbol, SymbolClass};
pub use kernel::StochasticKernel;
pub use lift::{boundary_map_by_key, BoundaryMap};
pub use operator::TruncatedOperator;
pub use profile::{DefectProfile, Verdict};
pub use space::{Lattice, LatticeMetric, Point, ProperMetricSpace};
