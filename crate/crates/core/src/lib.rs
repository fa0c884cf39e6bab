//! Exact diagonalization of the one-dimensional t-J model at fixed particle
//! number, with two-site negativity, generalized geometric measure, RVB-gas
//! fidelity and decay-law analysis of the resulting ground states.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for everyday use.

pub mod analysis;
pub mod basis;
pub mod eigensolver;
pub mod entanglement;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod rvb;
pub mod scalar;

pub use analysis::{
    fit_exponential, fit_inverse_linear, freezing_metric, ggm_scan, negativity_curve, pooled_fit, select_model,
    EntanglementCurve, FitModel, FitResult, FreezeReport, ModelSelection, Series,
};
pub use basis::{enumerate_sector, BasisState, Boundary, ModelParams, SectorBasis, SiteState};
pub use eigensolver::{global_ground, lanczos_ground, sector_ground, GroundState, SolverConfig};
pub use entanglement::{ggm, log_negativity, negativity, schmidt_lambda_max, two_site_rdm, GgmResult, SplitPolicy, TwoSiteRdm};
pub use error::{Error, Result};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, LinearOperator, SparseSymMatrix};
pub use rvb::{enumerate_coverings, rvb_fidelity, DimerCovering, RvbFidelityResult};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type GroundStateF64 = GroundState<f64>;
pub type GroundStateF32 = GroundState<f32>;
pub type TwoSiteRdmF64 = TwoSiteRdm<f64>;
pub type GgmResultF64 = GgmResult<f64>;
pub type RvbFidelityF64 = RvbFidelityResult<f64>;
pub type CurveF64 = EntanglementCurve<f64>;
pub type FitResultF64 = FitResult<f64>;
pub type SparseMatrixF64 = SparseSymMatrix<f64>;

/// Library version, part of every cache key and output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
