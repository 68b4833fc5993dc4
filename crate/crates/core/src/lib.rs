//! Regularized Cauchy problems for the Laplacian on cylinders and
//! rectangles, with a nonlinear Robin law on the inaccessible side.
//!
//! The numerical core is generic over the scalar type through [`Real`];
//! `f64` aliases are provided for the common case.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cylinder;
pub mod direct;
pub mod error;
pub mod general;
pub mod ident;
pub mod real;
pub mod spectral;
pub mod trace;

pub use cylinder::{
    alpha_of_eps, cutoff_index, dirichlet_lift, evaluate_interior, neumann_defect, reconstruct_gamma1,
    regularize, regularized_field, singular_system, singular_values, svd_operator_apply, threshold_count,
    CutoffPolicy, CylinderField, Gamma1Reconstruction, RegularizationConfig, SingularTriple,
};
pub use direct::{
    check_oversampling, energy, fixed_point_defect, flux_lower_bound, measure, neumann_field, oscillation_gamma1, solve_direct,
    CauchyPair, DirectOptions, DirectSolution, LawKind, NonlinearLaw,
};
pub use error::{Error, Result};
pub use general::{
    numeric_svd, regularized_invert, BoundaryPartition, ConductivityField, DiscreteOperator, GeneralOptions,
    GeneralProblem, GeneralReconstruction, NumericSvd, RectGrid, Side, SideData, SideRole, SideTrace, Tensor2,
};
pub use ident::{
    best_fit, identify, identify_samples, regular_value_report, BinDiagnostic, IdentifyOptions, LevelSetBinning,
    NonlinearityTable, TableEval, TraceSamples,
};
pub use real::Real;
pub use spectral::{CrossSection, CrossSectionKind, Mode, SpectralBasis};
pub use trace::{dual_pair, extend_by_zero, inject_noise, NoiseSpec, TraceFunction, TraceSpace};

pub type CrossSectionF64 = CrossSection<f64>;
pub type SpectralBasisF64 = SpectralBasis<f64>;
pub type TraceFunctionF64 = TraceFunction<f64>;
pub type NoiseSpecF64 = NoiseSpec<f64>;
pub type CylinderFieldF64 = CylinderField<f64>;
pub type RegularizationConfigF64 = RegularizationConfig<f64>;
pub type NonlinearLawF64 = NonlinearLaw<f64>;
pub type DirectSolutionF64 = DirectSolution<f64>;
pub type NonlinearityTableF64 = NonlinearityTable<f64>;
pub type GeneralProblemF64 = GeneralProblem<f64>;
pub type ConductivityFieldF64 = ConductivityField<f64>;

pub type CrossSectionF32 = CrossSection<f32>;
pub type SpectralBasisF32 = SpectralBasis<f32>;
pub type TraceFunctionF32 = TraceFunction<f32>;
pub type CylinderFieldF32 = CylinderField<f32>;
