use std::f64::consts::PI;

use super::{fit_gram, AdditiveKernel, KernelParams};
use crate::domain::ObservationSet;
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;

/// `log p(𝐲 | G, l) = −½ 𝐲ᵀ Δ⁻¹ 𝐲 − ½ log|Δ| − (n/2) log 2π` for the additive
/// kernel induced by the maximal cliques of `graph`.
pub fn log_marginal_likelihood(obs: &ObservationSet, graph: &DependencyGraph, params: &KernelParams) -> Result<f64> {
    let kernel = AdditiveKernel::from_graph(graph, params.clone())?;
    log_marginal_likelihood_with(obs, &kernel)
}

pub fn log_marginal_likelihood_with(obs: &ObservationSet, kernel: &AdditiveKernel) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::invalid("marginal likelihood needs at least one observation"));
    }
    let gram = fit_gram(obs, kernel)?;
    let fit: f64 = obs.values().iter().zip(gram.alpha().iter()).map(|(y, a)| y * a).sum();
    let n = obs.len() as f64;
    let value = -0.5 * fit - 0.5 * gram.log_det() - 0.5 * n * (2.0 * PI).ln();
    if !value.is_finite() {
        return Err(Error::Numerical(format!("log marginal likelihood is {value}")));
    }
    Ok(value)
}
