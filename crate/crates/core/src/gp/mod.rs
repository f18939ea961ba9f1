//! Additive Gaussian-process model.
//!
//! The kernel is a sum of squared-exponential components, one per variable
//! group. All components share one lengthscale vector, and component `i` is
//! scaled by `d_i / Σ_j d_j` (its share of the total group size) so that the
//! prior variance is 1 everywhere.

mod kernel;
mod likelihood;
mod posterior;
mod synthetic;

pub use kernel::{additive_kernel, se_kernel, se_kernel_component, AdditiveKernel, Decomposition, KernelParams};
pub use likelihood::{log_marginal_likelihood, log_marginal_likelihood_with};
pub use posterior::{
    factorize, fit_gram, posterior_component, posterior_full, FactorizedGram, GpModel, JITTER_LADDER, VARIANCE_CLAMP,
};
pub use synthetic::{sample_synthetic, sample_synthetic_with_cap, SyntheticFunction, DEFAULT_MAX_SUBDOMAIN};
