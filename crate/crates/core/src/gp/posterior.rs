use nalgebra::{Cholesky, DMatrix, DVector};

use super::AdditiveKernel;
use crate::domain::{advance, Domain, ObservationSet};
use crate::error::{Error, Result};

/// Diagonal jitter tried in order when `Δ` is not numerically positive definite.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Negative variances down to this value are rounded to zero.
pub const VARIANCE_CLAMP: f64 = -1e-9;

/// `Δ = κ(𝐱, 𝐱) + η² I` with its lower Cholesky factor and `Δ⁻¹ 𝐲`.
#[derive(Debug, Clone)]
pub struct FactorizedGram {
    gram: DMatrix<f64>,
    lower: DMatrix<f64>,
    /// Row-major copy of the factor for fast forward substitution.
    rows: Vec<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl FactorizedGram {
    pub fn size(&self) -> usize {
        self.gram.nrows()
    }

    /// `Δ` without the jitter.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter
    }

    /// `Δ⁻¹ 𝐲`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// `log |Δ|` (including jitter), from the factor diagonal.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L v = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.size();
        for i in 0..n {
            let row = &self.rows[i * n..i * n + i];
            let mut s = b[i];
            for (l, v) in row.iter().zip(b.iter()) {
                s -= l * v;
            }
            b[i] = s / self.rows[i * n + i];
        }
    }
}

/// Cholesky factorization with the escalating jitter of [`JITTER_LADDER`].
pub fn factorize(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut m = matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let l = chol.l();
            if l.diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
                return Ok((l, jitter));
            }
        }
    }
    let min_diag = matrix.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::Numerical(format!(
        "Cholesky factorization of a {n}x{n} matrix failed with jitter up to {max:e} \
         (smallest diagonal entry {min_diag:e})",
        n = matrix.nrows(),
        max = JITTER_LADDER[JITTER_LADDER.len() - 1],
    )))
}

/// Builds and factorizes `Δ` for `obs`. An empty observation set yields an
/// empty factorization, for which every posterior equals the prior.
pub fn fit_gram(obs: &ObservationSet, kernel: &AdditiveKernel) -> Result<FactorizedGram> {
    if obs.dim() != kernel.dim() {
        return Err(Error::invalid(format!(
            "observations have dimension {}, kernel {}",
            obs.dim(),
            kernel.dim()
        )));
    }
    let mut gram = kernel.gram(obs.points())?;
    let eta2 = kernel.noise_variance();
    for i in 0..gram.nrows() {
        gram[(i, i)] += eta2;
    }
    let (lower, jitter) = factorize(&gram)?;
    if jitter > 0.0 {
        log::debug!("gram factorization needed jitter {jitter:e}");
    }
    let n = gram.nrows();
    let mut rows = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            rows[i * n + j] = lower[(i, j)];
        }
    }
    let y = DVector::from_column_slice(obs.values());
    let alpha = if n == 0 {
        y
    } else {
        let z = lower
            .solve_lower_triangular(&y)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        lower
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?
    };
    Ok(FactorizedGram {
        gram,
        lower,
        rows,
        alpha,
        jitter,
    })
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("posterior variance {v:e} is negative")))
    }
}

fn check_fresh(gram: &FactorizedGram, obs: &ObservationSet) -> Result<()> {
    if gram.size() != obs.len() {
        return Err(Error::InvalidState(format!(
            "gram has {} rows but there are {} observations",
            gram.size(),
            obs.len()
        )));
    }
    Ok(())
}

/// Posterior mean and variance of component `j` at the full-dimensional point
/// `xq`: `μ^(j) = κ^(j)(x, 𝐱) Δ⁻¹ 𝐲`,
/// `σ²^(j) = κ^(j)(x, x) − κ^(j)(x, 𝐱) Δ⁻¹ κ^(j)(𝐱, x)`.
pub fn posterior_component(
    j: usize,
    xq: &[f64],
    gram: &FactorizedGram,
    obs: &ObservationSet,
    kernel: &AdditiveKernel,
) -> Result<(f64, f64)> {
    check_fresh(gram, obs)?;
    if j >= kernel.num_groups() {
        return Err(Error::invalid(format!("group index {j} out of range")));
    }
    if xq.len() != kernel.dim() {
        return Err(Error::invalid("query point has the wrong dimension"));
    }
    let mut k: Vec<f64> = obs.points().iter().map(|p| kernel.component_full(j, xq, p)).collect();
    let mean = k.iter().zip(gram.alpha.iter()).map(|(a, b)| a * b).sum();
    gram.forward_solve(&mut k);
    let explained: f64 = k.iter().map(|v| v * v).sum();
    Ok((mean, clamp_variance(kernel.scale(j) - explained)?))
}

/// Posterior of the full additive model at `xq`.
pub fn posterior_full(
    xq: &[f64],
    gram: &FactorizedGram,
    obs: &ObservationSet,
    kernel: &AdditiveKernel,
) -> Result<(f64, f64)> {
    check_fresh(gram, obs)?;
    if xq.len() != kernel.dim() {
        return Err(Error::invalid("query point has the wrong dimension"));
    }
    let mut k = obs
        .points()
        .iter()
        .map(|p| kernel.eval(xq, p))
        .collect::<Result<Vec<f64>>>()?;
    let mean = k.iter().zip(gram.alpha.iter()).map(|(a, b)| a * b).sum();
    gram.forward_solve(&mut k);
    let explained: f64 = k.iter().map(|v| v * v).sum();
    let var = clamp_variance(kernel.prior_variance() - explained)?;
    Ok((mean, var.min(kernel.prior_variance())))
}

/// A fitted additive GP: kernel, data and factorized Gram matrix together.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: AdditiveKernel,
    obs: ObservationSet,
    gram: FactorizedGram,
}

impl GpModel {
    pub fn fit(kernel: AdditiveKernel, obs: ObservationSet) -> Result<Self> {
        let gram = fit_gram(&obs, &kernel)?;
        Ok(GpModel { kernel, obs, gram })
    }

    pub fn kernel(&self) -> &AdditiveKernel {
        &self.kernel
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    pub fn gram(&self) -> &FactorizedGram {
        &self.gram
    }

    pub fn component(&self, j: usize, xq: &[f64]) -> Result<(f64, f64)> {
        posterior_component(j, xq, &self.gram, &self.obs, &self.kernel)
    }

    pub fn full(&self, xq: &[f64]) -> Result<(f64, f64)> {
        posterior_full(xq, &self.gram, &self.obs, &self.kernel)
    }

    /// Posterior of component `j` at a point given only on its own group.
    pub fn component_restricted(&self, j: usize, xg: &[f64]) -> Result<(f64, f64)> {
        let group = self.kernel.decomposition().group(j);
        if xg.len() != group.len() {
            return Err(Error::invalid("group-restricted point has the wrong length"));
        }
        let ls = self.kernel.group_lengthscales(j);
        let scale = self.kernel.scale(j);
        let mut k: Vec<f64> = self
            .obs
            .points()
            .iter()
            .map(|p| {
                let mut q = 0.0;
                for (c, &v) in group.iter().enumerate() {
                    let z = (xg[c] - p[v]) / ls[c];
                    q += z * z;
                }
                scale * (-0.5 * q).exp()
            })
            .collect();
        let mean = k.iter().zip(self.gram.alpha.iter()).map(|(a, b)| a * b).sum();
        self.gram.forward_solve(&mut k);
        let explained: f64 = k.iter().map(|v| v * v).sum();
        Ok((mean, clamp_variance(scale - explained)?))
    }

    /// Posterior mean and variance of component `j` at every configuration of
    /// its group, in lexicographic order (first group variable most significant).
    pub fn component_grid(&self, j: usize, domain: &Domain) -> Result<Vec<(f64, f64)>> {
        let group = self.kernel.decomposition().group(j);
        let sizes = domain.sizes(group);
        let count = domain
            .config_count(group)
            .ok_or_else(|| Error::Capacity("group subdomain size overflows".into()))?;
        let mut out = Vec::with_capacity(count);
        let mut digits = vec![0; group.len()];
        let mut xg = vec![0.0; group.len()];
        loop {
            for (c, &v) in group.iter().enumerate() {
                xg[c] = domain.values(v)[digits[c]];
            }
            out.push(self.component_restricted(j, &xg)?);
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Decomposition, KernelParams};
    use crate::graph::DependencyGraph;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_obs(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> ObservationSet {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        ObservationSet::new(dim, pts, ys).unwrap()
    }

    #[test]
    fn scalar_gram() {
        let k = AdditiveKernel::new(
            Decomposition::new(1, vec![vec![0]]).unwrap(),
            KernelParams::uniform(1, 1.0, 0.01).unwrap(),
        )
        .unwrap();
        let obs = ObservationSet::new(1, vec![vec![0.3]], vec![2.0]).unwrap();
        let g = fit_gram(&obs, &k).unwrap();
        assert_relative_eq!(g.gram()[(0, 0)], 1.01, epsilon = 1e-15);
        assert_eq!(g.jitter_applied(), 0.0);
    }

    #[test]
    fn duplicate_points_without_noise_need_jitter() {
        let k = AdditiveKernel::new(
            Decomposition::new(1, vec![vec![0]]).unwrap(),
            KernelParams::uniform(1, 1.0, 0.0).unwrap(),
        )
        .unwrap();
        let obs = ObservationSet::new(1, vec![vec![0.3], vec![0.3]], vec![1.0, 1.0]).unwrap();
        let g = fit_gram(&obs, &k).unwrap();
        assert!(g.jitter_applied() > 0.0);
    }

    #[test]
    fn factor_reconstructs_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let graph = DependencyGraph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let k = AdditiveKernel::from_graph(&graph, KernelParams::uniform(4, 0.6, 0.05).unwrap()).unwrap();
        let obs = random_obs(&mut rng, 4, 5);
        let g = fit_gram(&obs, &k).unwrap();
        let rebuilt = g.lower() * g.lower().transpose();
        assert!((rebuilt - g.gram()).norm() <= 1e-10);
        assert!((g.lower() * g.lower().transpose() - g.gram()).norm() / g.gram().norm() <= 1e-8);
    }

    #[test]
    fn empty_data_returns_prior() {
        let graph = DependencyGraph::from_edges(3, &[(0, 1)]).unwrap();
        let k = AdditiveKernel::from_graph(&graph, KernelParams::uniform(3, 0.5, 0.01).unwrap()).unwrap();
        let obs = ObservationSet::empty(3);
        let g = fit_gram(&obs, &k).unwrap();
        for j in 0..k.num_groups() {
            let (m, v) = posterior_component(j, &[0.1, 0.2, 0.3], &g, &obs, &k).unwrap();
            assert_eq!(m, 0.0);
            assert_relative_eq!(v, k.scale(j), epsilon = 1e-15);
        }
        let (m, v) = posterior_full(&[0.1, 0.2, 0.3], &g, &obs, &k).unwrap();
        assert_eq!(m, 0.0);
        assert_relative_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_observation_closed_form() {
        let k = AdditiveKernel::new(
            Decomposition::new(1, vec![vec![0]]).unwrap(),
            KernelParams::uniform(1, 0.7, 0.1).unwrap(),
        )
        .unwrap();
        let obs = ObservationSet::new(1, vec![vec![0.2]], vec![1.5]).unwrap();
        let g = fit_gram(&obs, &k).unwrap();
        let xq = [0.9];
        let kq = (-0.5 * ((0.9f64 - 0.2) / 0.7).powi(2)).exp();
        let (m, v) = posterior_component(0, &xq, &g, &obs, &k).unwrap();
        assert_relative_eq!(m, kq * 1.5 / 1.1, epsilon = 1e-14);
        assert_relative_eq!(v, 1.0 - kq * kq / 1.1, epsilon = 1e-14);
    }

    #[test]
    fn stale_gram_is_rejected() {
        let k = AdditiveKernel::new(
            Decomposition::new(1, vec![vec![0]]).unwrap(),
            KernelParams::uniform(1, 1.0, 0.1).unwrap(),
        )
        .unwrap();
        let obs = ObservationSet::new(1, vec![vec![0.2]], vec![1.5]).unwrap();
        let g = fit_gram(&obs, &k).unwrap();
        let mut more = obs.clone();
        more.push(vec![0.4], 0.0).unwrap();
        let err = posterior_component(0, &[0.0], &g, &more, &k).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
        assert!(posterior_full(&[0.0], &g, &more, &k).is_err());
    }

    #[test]
    fn interpolates_observed_point_without_noise() {
        let graph = DependencyGraph::from_edges(3, &[(0, 1)]).unwrap();
        let k = AdditiveKernel::from_graph(&graph, KernelParams::uniform(3, 0.5, 0.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let obs = random_obs(&mut rng, 3, 6);
        let g = fit_gram(&obs, &k).unwrap();
        let (m, v) = posterior_full(&obs.points()[2], &g, &obs, &k).unwrap();
        assert!(v <= 1e-6, "variance {v}");
        assert_relative_eq!(m, obs.values()[2], epsilon = 1e-4);
    }

    #[test]
    fn component_means_sum_to_full_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let graph = DependencyGraph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (3, 4), (2, 3)]).unwrap();
        let k = AdditiveKernel::from_graph(&graph, KernelParams::new(vec![0.3, 0.5, 0.8, 0.4, 1.1], 0.02).unwrap())
            .unwrap();
        let obs = random_obs(&mut rng, 5, 30);
        let model = GpModel::fit(k, obs).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let (mf, vf) = model.full(&x).unwrap();
            let mut sum_m = 0.0;
            let mut sum_s = 0.0;
            for j in 0..model.kernel().num_groups() {
                let (m, v) = model.component(j, &x).unwrap();
                let group: Vec<f64> = model.kernel().decomposition().group(j).iter().map(|&u| x[u]).collect();
                let (m2, v2) = model.component_restricted(j, &group).unwrap();
                assert_eq!((m, v), (m2, v2));
                sum_m += m;
                sum_s += v.sqrt();
            }
            assert!((sum_m - mf).abs() <= 1e-8);
            assert!(vf.sqrt() <= sum_s + 1e-9);
            assert!((0.0..=1.0).contains(&vf));
        }
    }
}
