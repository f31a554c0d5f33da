//! Symmetric two-valued harmonic functions in the plane and the frequency
//! function.

pub mod fourier;
pub mod frequency;
pub mod modes;

pub use fourier::{
    antiperiodic_poincare, dirichlet_solve_double_cover, gap_spectrum_check, DirichletSolution, HalfIntegerFourier,
    PoincareResult,
};
pub use frequency::{
    blow_up_rescale, doubling_check, frequency_profile, growth_bounds_check, growth_dichotomy, monotonicity_report,
    DichotomyReport, FrequencyOptions, FrequencyProfile, GrowthReport, MonotonicityReport,
};
pub use modes::{homogeneous_mode, ConstantSymmetric, HomogeneousMode, ModeSum, SymmetricFn, VectorModes};
