use super::{LengthscaleGrids, StructureParams};
use crate::domain::ObservationSet;
use crate::error::{Error, Result};
use crate::gp::log_marginal_likelihood;

/// Turns log-weights into probabilities with the log-sum-exp shift. Entries
/// equal to `-inf` get probability zero; if all are `-inf` the result is
/// uniform.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / log_weights.len() as f64; log_weights.len()];
    }
    if max == f64::INFINITY {
        let hits = log_weights.iter().filter(|w| **w == f64::INFINITY).count() as f64;
        return log_weights
            .iter()
            .map(|&w| if w == f64::INFINITY { 1.0 / hits } else { 0.0 })
            .collect();
    }
    let shifted: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    shifted.iter().map(|w| w / total).collect()
}

/// `P(Z_ij = 1 | Z_-(ij), L, data)` under a Bernoulli(`p`) edge prior:
/// `p e^{φ₁} / ((1 − p) e^{φ₀} + p e^{φ₁})`, computed in log space.
pub fn edge_conditional(
    i: usize,
    j: usize,
    params: &StructureParams,
    obs: &ObservationSet,
    grids: &LengthscaleGrids,
    noise_variance: f64,
    edge_prior_p: f64,
) -> Result<f64> {
    if i >= j || j >= params.dim() {
        return Err(Error::invalid(format!("edge ({i}, {j}) must satisfy i < j < D")));
    }
    check_prior(edge_prior_p)?;
    let kp = params.kernel_params(grids, noise_variance)?;
    let mut with = params.clone();
    with.set_edge(i, j, true);
    let mut without = params.clone();
    without.set_edge(i, j, false);
    let phi1 = log_marginal_likelihood(obs, &with.graph(), &kp)
        .map_err(|e| e.context(format!("likelihood with edge {}-{}", i + 1, j + 1)))?;
    let phi0 = log_marginal_likelihood(obs, &without.graph(), &kp)
        .map_err(|e| e.context(format!("likelihood without edge {}-{}", i + 1, j + 1)))?;
    Ok(edge_probability(phi0, phi1, edge_prior_p))
}

pub(crate) fn check_prior(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("edge prior must lie in (0, 1), got {p}")));
    }
    Ok(())
}

pub(crate) fn edge_probability(phi0: f64, phi1: f64, p: f64) -> f64 {
    let w = normalize_log_weights(&[(1.0 - p).ln() + phi0, p.ln() + phi1]);
    w[1]
}

/// Categorical conditional of variable `var`'s lengthscale over its grid:
/// `∝ e^{φ(Z, L_-i ∪ {L_i = l})}`.
pub fn lengthscale_conditional(
    var: usize,
    params: &StructureParams,
    obs: &ObservationSet,
    grids: &LengthscaleGrids,
    noise_variance: f64,
) -> Result<Vec<f64>> {
    if var >= params.dim() {
        return Err(Error::invalid(format!("variable {var} out of range")));
    }
    let graph = params.graph();
    let mut logs = Vec::with_capacity(grids.grid(var).len());
    for k in 0..grids.grid(var).len() {
        let mut cand = params.clone();
        cand.set_lengthscale_index(var, k);
        let kp = cand.kernel_params(grids, noise_variance)?;
        logs.push(
            log_marginal_likelihood(obs, &graph, &kp)
                .map_err(|e| e.context(format!("likelihood for lengthscale candidate {k}")))?,
        );
    }
    Ok(normalize_log_weights(&logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelParams;
    use crate::graph::DependencyGraph;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(seed: u64, dim: usize, n: usize) -> ObservationSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..3.0)).collect())
            .collect();
        let ys = pts
            .iter()
            .map(|p| (p[0] * p[1]).sin() + 0.1 * rng.random::<f64>())
            .collect();
        ObservationSet::new(dim, pts, ys).unwrap()
    }

    #[test]
    fn symmetric_and_prior_dominated_cases() {
        assert_eq!(edge_probability(-3.0, -3.0, 0.5), 0.5);
        assert!(edge_probability(-3.0, -3.0, 1.0 - 1e-12) > 1.0 - 1e-11);
        assert!(check_prior(1.0).is_err());
        assert!(check_prior(0.0).is_err());
    }

    #[test]
    fn log_space_is_safe_for_large_magnitudes() {
        let p = edge_probability(-1e4, -1e4 + 3.0, 0.5);
        assert_relative_eq!(p, 1.0 / (1.0 + (-3.0f64).exp()), epsilon = 1e-12);
        let w = normalize_log_weights(&[1e4, 1e4 - 1.0, -1e4]);
        assert!(w.iter().all(|x| x.is_finite()));
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(
            normalize_log_weights(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn edge_conditional_matches_direct_likelihoods() {
        let obs = data(1, 3, 8);
        let grids = LengthscaleGrids::uniform(3, vec![0.8]).unwrap();
        let params = StructureParams::initial(&grids);
        let got = edge_conditional(0, 1, &params, &obs, &grids, 0.05, 0.5).unwrap();

        // Dense oracle: explicit inverse and determinant of K + σ²I.
        let dense = |g: &DependencyGraph| {
            let k = crate::gp::AdditiveKernel::from_graph(g, KernelParams::uniform(3, 0.8, 0.05).unwrap()).unwrap();
            let mut m = k.gram(obs.points()).unwrap();
            for i in 0..obs.len() {
                m[(i, i)] += 0.05;
            }
            let y = nalgebra::DVector::from_column_slice(obs.values());
            let inv = m.clone().try_inverse().unwrap();
            -0.5 * (y.transpose() * inv * &y)[0] - 0.5 * m.determinant().ln()
        };
        let phi1 = dense(&DependencyGraph::from_edges(3, &[(0, 1)]).unwrap());
        let phi0 = dense(&DependencyGraph::empty(3));
        let expected = phi1.exp() / (phi0.exp() + phi1.exp());
        assert_relative_eq!(got, expected, epsilon = 1e-9);
        assert!(edge_conditional(1, 1, &params, &obs, &grids, 0.05, 0.5).is_err());
    }

    #[test]
    fn lengthscale_conditional_cases() {
        let obs = data(2, 2, 10);
        let single = LengthscaleGrids::uniform(2, vec![1.0]).unwrap();
        let p = StructureParams::initial(&single);
        assert_eq!(lengthscale_conditional(0, &p, &obs, &single, 0.05).unwrap(), vec![1.0]);

        let grids = LengthscaleGrids::uniform(2, vec![0.3, 1.0, 3.0]).unwrap();
        let p = StructureParams::initial(&grids);
        let probs = lengthscale_conditional(1, &p, &obs, &grids, 0.05).unwrap();
        assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let phis: Vec<f64> = [0.3, 1.0, 3.0]
            .iter()
            .map(|&l| {
                let kp = KernelParams::new(vec![1.0, l], 0.05).unwrap();
                log_marginal_likelihood(&obs, &DependencyGraph::empty(2), &kp).unwrap()
            })
            .collect();
        let total: f64 = phis.iter().map(|p| p.exp()).sum();
        for (got, phi) in probs.iter().zip(&phis) {
            assert_relative_eq!(*got, phi.exp() / total, epsilon = 1e-10);
        }
    }

    #[test]
    fn equal_candidates_split_evenly() {
        // Variable 2 has no influence when its lengthscale candidates coincide
        // in effect: the data set is constant in x_2.
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        let obs = ObservationSet::new(2, pts, vec![0.1, -0.4, 0.3]).unwrap();
        let grids = LengthscaleGrids::new(vec![vec![1.0], vec![0.5, 2.0]]).unwrap();
        let p = StructureParams::initial(&grids);
        let probs = lengthscale_conditional(1, &p, &obs, &grids, 0.05).unwrap();
        assert_relative_eq!(probs[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(probs[1], 0.5, epsilon = 1e-12);
    }
}
