pub mod coefficients;
pub mod fits;
pub mod modified;

pub use coefficients::{
    conformal_factor, conformal_normalize, CoefficientField, ConformalNormalization, Identity, LinearAnisotropic,
    MatrixField, RadialConformal, SampledMatrixField, ScaledIdentity,
};
pub use fits::{almost_monotonicity_fit, decay_exponent_fit, poincare_ratio, symmetric_decay_fit, DecayFit};
pub use modified::{
    gl_identity_residuals, modified_frequency, two_point_bound, GlIdentityResiduals, ModifiedFrequencyProfile,
    ModifiedOptions, TwoPointReport, WeightedRadialMode,
};
