//! Symmetric homogeneous means, their operator (Schur multiplier) transforms,
//! positive definiteness checks for mean-ratio functions, unitarily invariant
//! norms, and a seeded harness that checks norm inequality chains between
//! operator means.

pub mod error;
pub mod matrix_io;
pub mod operator_means;
pub mod posdef_lab;
pub mod scalar_means;
pub mod uinorms;
pub mod verifier;

pub use error::{Error, Result};
pub use scalar_means::{eval_mean, eval_mean_ext, eval_ratio, EvalPolicy, Family, MeanKind, RatioScale};
pub use operator_means::{
    decompose_psd, frac_power, log_mean_integral, mean_transform, power_sum_representation, MeanTransformInput,
    PowerSumRep, SpectralDecomposition,
};
pub use posdef_lab::{
    check_positive_definite, fourier_kernel_check, gram_matrix, sinh_ratio_kernel_density, CatalogFunction, GramReport,
    Grid, GridSpec, Verdict,
};
pub use uinorms::{singular_values, uinorm, NormKind};
pub use verifier::{
    bound_check_prop32, builtin_chain, continuity_probe, counterexample_search, default_battery, sample_instance,
    verify_chain, ChainReport, ChainSpec, EnsembleKind, SampleEnsemble, SamplingConfig, Term,
};
