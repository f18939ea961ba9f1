use crate::error::{Error, Result};
use crate::graph::{maximal_cliques, DependencyGraph};

/// The variable groups of an additive model, 0-indexed and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decomposition {
    dim: usize,
    groups: Vec<Vec<usize>>,
}

impl Decomposition {
    /// Validates and normalizes (sorts) the groups.
    pub fn new(dim: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut groups = groups;
        for g in &mut groups {
            if g.is_empty() {
                return Err(Error::invalid("empty variable group"));
            }
            g.sort_unstable();
            if g.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("group {g:?} repeats a variable")));
            }
            if g.iter().any(|&v| v >= dim) {
                return Err(Error::invalid(format!("group {g:?} out of range for D={dim}")));
            }
        }
        for a in 0..groups.len() {
            for b in 0..groups.len() {
                if a != b && groups[a].iter().all(|v| groups[b].contains(v)) {
                    return Err(Error::invalid(format!(
                        "group {:?} is contained in group {:?}",
                        groups[a], groups[b]
                    )));
                }
            }
        }
        Ok(Decomposition { dim, groups })
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, groups: Vec<Vec<usize>>) -> Self {
        Decomposition { dim, groups }
    }

    pub fn from_graph(graph: &DependencyGraph) -> Self {
        maximal_cliques(graph)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn into_groups(self) -> Vec<Vec<usize>> {
        self.groups
    }

    /// `σ^(i) = d_i / Σ_j d_j`, so the additive kernel has unit diagonal.
    pub fn scales(&self) -> Vec<f64> {
        let total: usize = self.groups.iter().map(Vec::len).sum();
        self.groups.iter().map(|g| g.len() as f64 / total as f64).collect()
    }
}

/// Shared lengthscale vector and observation noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lengthscales must be positive and finite"));
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::invalid("noise variance must be nonnegative and finite"));
        }
        Ok(KernelParams {
            lengthscales,
            noise_variance,
        })
    }

    pub fn uniform(dim: usize, lengthscale: f64, noise_variance: f64) -> Result<Self> {
        KernelParams::new(vec![lengthscale; dim], noise_variance)
    }
}

/// Squared-exponential kernel on a group-restricted pair of points:
/// `scale · exp(-½ Σ_k ((a_k - b_k) / l_k)²)`.
pub fn se_kernel(xa: &[f64], xb: &[f64], lengthscales: &[f64], scale: f64) -> f64 {
    let mut q = 0.0;
    for k in 0..xa.len() {
        let z = (xa[k] - xb[k]) / lengthscales[k];
        q += z * z;
    }
    scale * (-0.5 * q).exp()
}

/// An additive squared-exponential kernel: one component per group, all
/// sharing the same lengthscale vector.
#[derive(Debug, Clone)]
pub struct AdditiveKernel {
    decomp: Decomposition,
    params: KernelParams,
    scales: Vec<f64>,
    group_lengthscales: Vec<Vec<f64>>,
}

impl AdditiveKernel {
    pub fn new(decomp: Decomposition, params: KernelParams) -> Result<Self> {
        if params.lengthscales.len() != decomp.dim() {
            return Err(Error::invalid(format!(
                "{} lengthscales for D={}",
                params.lengthscales.len(),
                decomp.dim()
            )));
        }
        let scales = decomp.scales();
        let group_lengthscales = decomp
            .groups()
            .iter()
            .map(|g| g.iter().map(|&v| params.lengthscales[v]).collect())
            .collect();
        Ok(AdditiveKernel {
            decomp,
            params,
            scales,
            group_lengthscales,
        })
    }

    pub fn from_graph(graph: &DependencyGraph, params: KernelParams) -> Result<Self> {
        AdditiveKernel::new(Decomposition::from_graph(graph), params)
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.decomp.dim()
    }

    pub fn num_groups(&self) -> usize {
        self.decomp.len()
    }

    pub fn scale(&self, group: usize) -> f64 {
        self.scales[group]
    }

    pub fn noise_variance(&self) -> f64 {
        self.params.noise_variance
    }

    /// Prior variance `κ(x, x)`, which is 1 up to rounding.
    pub fn prior_variance(&self) -> f64 {
        self.scales.iter().sum()
    }

    pub(crate) fn group_lengthscales(&self, group: usize) -> &[f64] {
        &self.group_lengthscales[group]
    }

    /// Component kernel `κ^(i)` on points already restricted to group `i`.
    pub fn component(&self, group: usize, xa: &[f64], xb: &[f64]) -> Result<f64> {
        if group >= self.num_groups() {
            return Err(Error::invalid(format!("group index {group} out of range")));
        }
        let d = self.decomp.group(group).len();
        if xa.len() != d || xb.len() != d {
            return Err(Error::invalid(format!(
                "group {group} has {d} variables, got points of length {} and {}",
                xa.len(),
                xb.len()
            )));
        }
        Ok(se_kernel(xa, xb, &self.group_lengthscales[group], self.scales[group]))
    }

    /// Component kernel evaluated on full-dimensional points.
    pub(crate) fn component_full(&self, group: usize, xa: &[f64], xb: &[f64]) -> f64 {
        let ls = &self.group_lengthscales[group];
        let mut q = 0.0;
        for (k, &v) in self.decomp.group(group).iter().enumerate() {
            let z = (xa[v] - xb[v]) / ls[k];
            q += z * z;
        }
        self.scales[group] * (-0.5 * q).exp()
    }

    /// `κ(x, x') = Σ_i κ^(i)(x^(i), x'^(i))`.
    pub fn eval(&self, xa: &[f64], xb: &[f64]) -> Result<f64> {
        if xa.len() != self.dim() || xb.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected points of dimension {}, got {} and {}",
                self.dim(),
                xa.len(),
                xb.len()
            )));
        }
        Ok((0..self.num_groups()).map(|i| self.component_full(i, xa, xb)).sum())
    }

    /// Noise-free Gram matrix of the additive kernel.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<nalgebra::DMatrix<f64>> {
        let n = points.len();
        let mut k = nalgebra::DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                let v = self.eval(&points[a], &points[b])?;
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
        }
        Ok(k)
    }
}

/// `κ^(i)(xa, xb)` for group `group` of `kernel`.
pub fn se_kernel_component(xa: &[f64], xb: &[f64], group: usize, kernel: &AdditiveKernel) -> Result<f64> {
    kernel.component(group, xa, xb)
}

/// `κ(xa, xb)` summed over all groups.
pub fn additive_kernel(xa: &[f64], xb: &[f64], kernel: &AdditiveKernel) -> Result<f64> {
    kernel.eval(xa, xb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(dim: usize, groups: Vec<Vec<usize>>, l: f64) -> AdditiveKernel {
        AdditiveKernel::new(
            Decomposition::new(dim, groups).unwrap(),
            KernelParams::uniform(dim, l, 0.01).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn equal_points_give_group_scale() {
        let k = kernel(4, vec![vec![0, 1], vec![2, 3]], 0.7);
        assert_eq!(k.component(0, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.5);
        assert_eq!(k.component(1, &[0.9, 0.2], &[0.9, 0.2]).unwrap(), 0.5);
    }

    #[test]
    fn one_variable_unit_lengthscale() {
        let k = kernel(1, vec![vec![0]], 1.0);
        assert_relative_eq!(
            k.component(0, &[0.0], &[1.0]).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(k.component(0, &[0.0], &[1.0]).unwrap(), 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn precision_point_two() {
        // Diagonal precision 0.2 means lengthscale 1/sqrt(0.2).
        let l = 1.0 / 0.2f64.sqrt();
        let k = kernel(2, vec![vec![0, 1]], l);
        let (d1, d2) = (0.7, -1.3);
        let expected = (-0.5 * (d1 * d1 + d2 * d2) * 0.2f64).exp();
        assert_relative_eq!(
            k.component(0, &[d1, d2], &[0.0, 0.0]).unwrap(),
            expected,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = kernel(2, vec![vec![0, 1]], 1.0);
        assert!(k.component(0, &[0.0], &[0.0, 1.0]).is_err());
        assert!(k.component(3, &[0.0, 0.0], &[0.0, 1.0]).is_err());
        assert!(k.eval(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn decomposition_validation() {
        assert!(Decomposition::new(3, vec![vec![0, 1], vec![1]]).is_err());
        assert!(Decomposition::new(3, vec![vec![]]).is_err());
        assert!(Decomposition::new(3, vec![vec![0, 3]]).is_err());
        assert!(Decomposition::new(3, vec![vec![0, 0]]).is_err());
        let d = Decomposition::new(3, vec![vec![2, 1], vec![0, 1]]).unwrap();
        assert_eq!(d.groups(), &[vec![1, 2], vec![0, 1]]);
    }

    #[test]
    fn figure_one_sum_and_unit_diagonal() {
        let g = DependencyGraph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (0, 3), (2, 3), (3, 4)]).unwrap();
        let params = KernelParams::new(vec![0.4, 0.9, 1.3, 0.5, 2.0, 0.7], 0.01).unwrap();
        let k = AdditiveKernel::from_graph(&g, params.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            // Independent oracle: per-group sums with explicit scales d_i / 9.
            let groups = [vec![0, 1, 2], vec![0, 2, 3], vec![3, 4], vec![5]];
            let mut oracle = 0.0;
            for g in &groups {
                let q: f64 = g
                    .iter()
                    .map(|&v| ((a[v] - b[v]) / params.lengthscales[v]).powi(2))
                    .sum();
                oracle += g.len() as f64 / 9.0 * (-0.5 * q).exp();
            }
            assert_relative_eq!(k.eval(&a, &b).unwrap(), oracle, epsilon = 1e-14);
            assert_relative_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap(), epsilon = 0.0);
            assert_relative_eq!(k.eval(&a, &a).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_group_equals_component() {
        let k = kernel(3, vec![vec![0, 1, 2]], 0.8);
        let a = [0.1, 0.5, 0.9];
        let b = [0.3, 0.2, 0.4];
        assert_eq!(k.eval(&a, &b).unwrap(), k.component(0, &a, &b).unwrap());
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = crate::graph::DependencyGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
            let k = AdditiveKernel::from_graph(&g, KernelParams::uniform(5, rng.random_range(0.1..2.0), 0.0).unwrap())
                .unwrap();
            let pts: Vec<Vec<f64>> = (0..15).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
            let m = k.gram(&pts).unwrap();
            let min = m.symmetric_eigenvalues().min();
            assert!(min >= -1e-8, "min eigenvalue {min}");
        }
    }
}
