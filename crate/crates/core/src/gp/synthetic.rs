//! Random additive test functions drawn from the GP prior.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{AdditiveKernel, Decomposition, KernelParams};
use crate::acquisition::{evaluate_sum, maximize_acquisition, AcquisitionLimits, ComponentTable};
use crate::domain::{advance, Domain, GridPoint, ObservationSet};
use crate::error::{Error, Result};
use crate::graph::{build_junction_tree, triangulate, DependencyGraph, JunctionTreeOptions};
use crate::rng::{stream, Stream};

/// Default cap on the configurations of one group's subdomain.
pub const DEFAULT_MAX_SUBDOMAIN: usize = 4096;

/// `f(x) = Σ_i f^(i)(x^(i))` with every component tabulated on its group grid.
#[derive(Debug, Clone)]
pub struct SyntheticFunction {
    domain: Domain,
    true_graph: DependencyGraph,
    params: KernelParams,
    tables: Vec<ComponentTable>,
    optimum_value: f64,
    optimizer: GridPoint,
}

impl SyntheticFunction {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn true_graph(&self) -> &DependencyGraph {
        &self.true_graph
    }

    /// Kernel parameters the function was drawn with.
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn component_tables(&self) -> &[ComponentTable] {
        &self.tables
    }

    pub fn true_optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn true_optimizer(&self) -> &[usize] {
        &self.optimizer
    }

    /// Noise-free value at a grid point.
    pub fn value(&self, point: &[usize]) -> f64 {
        evaluate_sum(&self.tables, point)
    }

    /// `n` uniformly drawn points (with replacement) observed with Gaussian
    /// noise of variance `noise_variance`.
    pub fn sample_observations(&self, n: usize, noise_variance: f64, seed: u64) -> Result<ObservationSet> {
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be finite and nonnegative"));
        }
        let mut rng = stream(seed, Stream::DataGeneration);
        let noise = Normal::new(0.0, noise_variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
        let mut obs = ObservationSet::empty(self.domain.dim());
        for _ in 0..n {
            let p = self.domain.sample_uniform(&mut rng);
            let y = self.value(&p) + noise.sample(&mut rng);
            obs.push(self.domain.coords(&p), y)?;
        }
        Ok(obs)
    }
}

/// Draws one function per group of `graph`'s maximal cliques from a zero-mean
/// GP with kernel `κ^(i)` on that group's subdomain grid, then locates the
/// global maximum of their sum by message passing.
pub fn sample_synthetic(
    graph: &DependencyGraph,
    params: &KernelParams,
    domain: &Domain,
    seed: u64,
) -> Result<SyntheticFunction> {
    sample_synthetic_with_cap(graph, params, domain, seed, DEFAULT_MAX_SUBDOMAIN)
}

pub fn sample_synthetic_with_cap(
    graph: &DependencyGraph,
    params: &KernelParams,
    domain: &Domain,
    seed: u64,
    max_subdomain: usize,
) -> Result<SyntheticFunction> {
    if graph.dim() != domain.dim() {
        return Err(Error::invalid("graph and domain dimensions differ"));
    }
    let decomp = Decomposition::from_graph(graph);
    let kernel = AdditiveKernel::new(decomp.clone(), params.clone())?;
    let mut rng = stream(seed, Stream::SyntheticFunction);

    let mut tables = Vec::with_capacity(decomp.len());
    for (i, group) in decomp.groups().iter().enumerate() {
        let count = domain
            .config_count(group)
            .filter(|&c| c <= max_subdomain)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "subdomain of group {:?} exceeds {max_subdomain} configurations",
                    group.iter().map(|v| v + 1).collect::<Vec<_>>()
                ))
            })?;
        let coords = group_grid(group, domain);
        let mut cov = DMatrix::zeros(count, count);
        for a in 0..count {
            for b in 0..=a {
                let v = kernel.component(i, &coords[a], &coords[b])?;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        // Eigen square root: exact for the positive semidefinite covariances
        // that smooth kernels produce on dense grids.
        let eig = SymmetricEigen::new(cov);
        let z: Vec<f64> = (0..count).map(|_| StandardNormal.sample(&mut rng)).collect();
        let scaled = DVector::from_iterator(
            count,
            eig.eigenvalues.iter().zip(&z).map(|(l, z)| l.max(0.0).sqrt() * z),
        );
        let draw = &eig.eigenvectors * scaled;
        tables.push(ComponentTable::new(
            group.clone(),
            domain,
            draw.iter().copied().collect(),
        )?);
    }

    let tri = triangulate(graph);
    let tree = build_junction_tree(
        &tri,
        graph,
        JunctionTreeOptions {
            max_treewidth: graph.dim(),
        },
    )?;
    let best = maximize_acquisition(&tree, &tables, domain, AcquisitionLimits::default())?;

    Ok(SyntheticFunction {
        domain: domain.clone(),
        true_graph: graph.clone(),
        params: params.clone(),
        tables,
        optimum_value: best.value,
        optimizer: best.point,
    })
}

/// Real coordinates of every configuration of `group`, lexicographic order.
fn group_grid(group: &[usize], domain: &Domain) -> Vec<Vec<f64>> {
    let sizes = domain.sizes(group);
    let mut digits = vec![0; group.len()];
    let mut out = Vec::new();
    loop {
        out.push(group.iter().zip(&digits).map(|(&v, &d)| domain.values(v)[d]).collect());
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::brute_force_maximize;

    #[test]
    fn deterministic_for_a_seed() {
        let g = DependencyGraph::star(4);
        let d = Domain::uniform_grid(4, 5, 0.0, 4.0).unwrap();
        let p = KernelParams::uniform(4, 1.0, 0.01).unwrap();
        let a = sample_synthetic(&g, &p, &d, 17).unwrap();
        let b = sample_synthetic(&g, &p, &d, 17).unwrap();
        let c = sample_synthetic(&g, &p, &d, 18).unwrap();
        assert_eq!(a.component_tables(), b.component_tables());
        assert_ne!(a.component_tables(), c.component_tables());
    }

    #[test]
    fn star_has_one_component_per_edge() {
        let g = DependencyGraph::star(10);
        let d = Domain::uniform_grid(10, 10, 0.0, 9.0).unwrap();
        let p = KernelParams::uniform(10, 1.0 / 0.2f64.sqrt(), 0.01).unwrap();
        let f = sample_synthetic(&g, &p, &d, 1).unwrap();
        assert_eq!(f.component_tables().len(), 9);
        assert!(f
            .component_tables()
            .iter()
            .all(|t| t.vars().len() == 2 && t.vars()[0] == 0));
    }

    #[test]
    fn chain_optimum_matches_enumeration() {
        let g = DependencyGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let d = Domain::uniform_grid(3, 4, 0.0, 3.0).unwrap();
        let p = KernelParams::uniform(3, 1.5, 0.01).unwrap();
        for seed in 0..5 {
            let f = sample_synthetic(&g, &p, &d, seed).unwrap();
            let (bp, bv) = brute_force_maximize(&d, |x| f.value(x)).unwrap();
            assert!((f.true_optimum_value() - bv).abs() <= 1e-12);
            assert!((f.value(f.true_optimizer()) - bv).abs() <= 1e-12);
            assert_eq!(f.value(&bp), bv);
        }
    }

    #[test]
    fn grid_graph_needs_triangulation() {
        let g = DependencyGraph::grid(2, 3);
        let d = Domain::uniform_grid(6, 3, 0.0, 2.0).unwrap();
        let p = KernelParams::uniform(6, 1.0, 0.01).unwrap();
        let f = sample_synthetic(&g, &p, &d, 3).unwrap();
        let (_, bv) = brute_force_maximize(&d, |x| f.value(x)).unwrap();
        assert!((f.true_optimum_value() - bv).abs() <= 1e-12);
    }

    #[test]
    fn observations_follow_the_function() {
        let g = DependencyGraph::star(3);
        let d = Domain::uniform_grid(3, 4, 0.0, 3.0).unwrap();
        let f = sample_synthetic(&g, &KernelParams::uniform(3, 1.0, 0.01).unwrap(), &d, 2).unwrap();
        let obs = f.sample_observations(20, 0.0, 5).unwrap();
        assert_eq!(obs.len(), 20);
        for (x, y) in obs.points().iter().zip(obs.values()) {
            assert_eq!(f.value(&d.locate(x).unwrap()), *y);
        }
        assert_eq!(f.sample_observations(20, 0.0, 5).unwrap(), obs);
        assert!(f.sample_observations(1, -1.0, 5).is_err());
    }

    #[test]
    fn oversized_groups_are_rejected() {
        let g = DependencyGraph::complete(4);
        let d = Domain::uniform_grid(4, 10, 0.0, 1.0).unwrap();
        let p = KernelParams::uniform(4, 1.0, 0.01).unwrap();
        let err = sample_synthetic_with_cap(&g, &p, &d, 0, 1000).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }
}
