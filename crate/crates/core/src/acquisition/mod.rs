//! UCB acquisition terms and their exact joint maximization.

mod message_passing;
mod table;

pub use message_passing::{maximize_acquisition, AcquisitionLimits, Maximum, MessageTable, DEFAULT_MAX_TABLE_SIZE};
pub use table::{evaluate_sum, ComponentTable};

use crate::domain::{advance, Domain, GridPoint};
use crate::error::{Error, Result};
use crate::gp::GpModel;

/// Largest domain [`brute_force_maximize`] will enumerate.
pub const BRUTE_FORCE_CAP: usize = 10_000_000;

/// `μ^(j) + β^{1/2} σ^(j)` at a point restricted to group `j`.
pub fn component_ucb(j: usize, xq_group: &[f64], model: &GpModel, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
    }
    let (mean, var) = model.component_restricted(j, xq_group)?;
    Ok(mean + beta.sqrt() * var.sqrt())
}

/// One UCB table per group of the model's decomposition.
pub fn ucb_tables(model: &GpModel, beta: f64, domain: &Domain, max_table_size: usize) -> Result<Vec<ComponentTable>> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
    }
    let root_beta = beta.sqrt();
    let decomp = model.kernel().decomposition();
    (0..decomp.len())
        .map(|j| {
            let vars = decomp.group(j).to_vec();
            let count = domain
                .config_count(&vars)
                .filter(|&c| c <= max_table_size)
                .ok_or_else(|| Error::Capacity(format!("group {vars:?} table exceeds {max_table_size} entries")))?;
            let grid = model.component_grid(j, domain)?;
            debug_assert_eq!(grid.len(), count);
            let values = grid.iter().map(|(m, v)| m + root_beta * v.sqrt()).collect();
            ComponentTable::new(vars, domain, values)
        })
        .collect()
}

/// Exhaustive maximization in lexicographic order; the first maximizer wins.
pub fn brute_force_maximize(domain: &Domain, mut evaluator: impl FnMut(&[usize]) -> f64) -> Result<(GridPoint, f64)> {
    let total = domain
        .total_size()
        .filter(|&n| n <= BRUTE_FORCE_CAP)
        .ok_or_else(|| Error::Capacity(format!("domain exceeds {BRUTE_FORCE_CAP} points")))?;
    debug_assert!(total > 0);
    let sizes: Vec<usize> = (0..domain.dim()).map(|v| domain.size(v)).collect();
    let mut digits = vec![0; domain.dim()];
    let mut best = (digits.clone(), f64::NEG_INFINITY);
    loop {
        let v = evaluator(&digits);
        if v > best.1 {
            best = (digits.clone(), v);
        }
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ObservationSet;
    use crate::gp::{AdditiveKernel, KernelParams};
    use crate::graph::{build_junction_tree, maximal_cliques, triangulate, DependencyGraph, JunctionTreeOptions};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tree(g: &DependencyGraph) -> crate::graph::JunctionTree {
        build_junction_tree(&triangulate(g), g, JunctionTreeOptions::default()).unwrap()
    }

    fn random_tables(g: &DependencyGraph, domain: &Domain, rng: &mut ChaCha8Rng) -> Vec<ComponentTable> {
        maximal_cliques(g)
            .groups()
            .iter()
            .map(|c| {
                let n = domain.config_count(c).unwrap();
                let values = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                ComponentTable::new(c.clone(), domain, values).unwrap()
            })
            .collect()
    }

    #[test]
    fn brute_force_basics() {
        let d = Domain::new(vec![vec![0.0, 1.0, 2.0]]).unwrap();
        let vals = [1.0, 3.0, 2.0];
        assert_eq!(brute_force_maximize(&d, |p| vals[p[0]]).unwrap(), (vec![1], 3.0));
        let d2 = Domain::uniform_grid(3, 4, 0.0, 1.0).unwrap();
        assert_eq!(brute_force_maximize(&d2, |_| 7.0).unwrap(), (vec![0, 0, 0], 7.0));
        let huge = Domain::uniform_grid(8, 10, 0.0, 1.0).unwrap();
        assert!(matches!(brute_force_maximize(&huge, |_| 0.0), Err(Error::Capacity(_))));
    }

    #[test]
    fn single_clique_is_direct_argmax() {
        let d = Domain::uniform_grid(2, 3, 0.0, 1.0).unwrap();
        let g = DependencyGraph::complete(2);
        let t = ComponentTable::new(vec![0, 1], &d, vec![0.0, 1.0, 5.0, 2.0, 5.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let m = maximize_acquisition(&tree(&g), &[t], &d, AcquisitionLimits::default()).unwrap();
        assert_eq!(m.point, vec![0, 2]);
        assert_eq!(m.value, 5.0);
    }

    #[test]
    fn hand_worked_chain() {
        // f1(x1, x2) + f2(x2, x3) on binary variables.
        let d = Domain::uniform_grid(3, 2, 0.0, 1.0).unwrap();
        let g = DependencyGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let f1 = ComponentTable::new(vec![0, 1], &d, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let f2 = ComponentTable::new(vec![1, 2], &d, vec![3.0, 0.0, 0.0, 0.5]).unwrap();
        // x2 = 0: max f1 = 1 (x1=0), max f2 = 3 (x3=0) → 4
        // x2 = 1: max f1 = 2 (x1=1), max f2 = 0.5 (x3=1) → 2.5
        let m = maximize_acquisition(&tree(&g), &[f1, f2], &d, AcquisitionLimits::default()).unwrap();
        assert_eq!(m.value, 4.0);
        assert_eq!(m.point, vec![0, 0, 0]);
    }

    #[test]
    fn agrees_with_brute_force_and_is_root_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let dim = rng.random_range(1..=7);
            let grid: Vec<Vec<f64>> = (0..dim)
                .map(|_| (0..rng.random_range(1..=4)).map(|k| k as f64).collect())
                .collect();
            let d = Domain::new(grid).unwrap();
            let mut g = DependencyGraph::empty(dim);
            for i in 0..dim {
                for j in i + 1..dim {
                    if rng.random_bool(0.4) {
                        g.set_edge(i, j, true);
                    }
                }
            }
            let tables = random_tables(&g, &d, &mut rng);
            let t = tree(&g);
            let m = maximize_acquisition(&t, &tables, &d, AcquisitionLimits::default()).unwrap();
            let (_, bv) = brute_force_maximize(&d, |p| evaluate_sum(&tables, p)).unwrap();
            assert_relative_eq!(m.value, bv, epsilon = 1e-9);
            assert_relative_eq!(evaluate_sum(&tables, &m.point), m.value, epsilon = 1e-9);
            for r in 0..t.len() {
                let rerooted = t.with_root(r).unwrap();
                let mr = maximize_acquisition(&rerooted, &tables, &d, AcquisitionLimits::default()).unwrap();
                assert_relative_eq!(mr.value, m.value, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn capacity_and_coverage_errors() {
        let d = Domain::uniform_grid(3, 10, 0.0, 1.0).unwrap();
        let g = DependencyGraph::complete(3);
        let t = ComponentTable::from_fn(vec![0, 1, 2], &d, 1000, |_| Ok(0.0)).unwrap();
        let limits = AcquisitionLimits {
            max_table_size: 999,
            max_eval: None,
        };
        assert!(matches!(
            maximize_acquisition(&tree(&g), std::slice::from_ref(&t), &d, limits),
            Err(Error::Capacity(_))
        ));

        let sparse = DependencyGraph::empty(3);
        let err = maximize_acquisition(
            &tree(&sparse),
            std::slice::from_ref(&t),
            &d,
            AcquisitionLimits::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Inconsistency(_)));

        let limits = AcquisitionLimits {
            max_table_size: 1000,
            max_eval: Some(10),
        };
        let m = maximize_acquisition(&tree(&g), &[t], &d, limits).unwrap();
        assert!(m.max_eval_exceeded);
    }

    fn fitted_model(rng: &mut ChaCha8Rng, domain: &Domain, g: &DependencyGraph, n: usize) -> GpModel {
        let kernel = AdditiveKernel::from_graph(g, KernelParams::uniform(g.dim(), 0.6, 0.01).unwrap()).unwrap();
        let mut obs = ObservationSet::empty(g.dim());
        for _ in 0..n {
            let p = domain.sample_uniform(rng);
            obs.push(domain.coords(&p), rng.random_range(-1.0..1.0)).unwrap();
        }
        GpModel::fit(kernel, obs).unwrap()
    }

    #[test]
    fn ucb_component_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Domain::uniform_grid(3, 4, 0.0, 1.0).unwrap();
        let g = DependencyGraph::from_edges(3, &[(0, 1)]).unwrap();
        let model = fitted_model(&mut rng, &d, &g, 6);
        let x = [0.25, 0.5];
        let (m, _) = model.component_restricted(0, &x).unwrap();
        assert_eq!(component_ucb(0, &x, &model, 0.0).unwrap(), m);
        assert!(component_ucb(0, &x, &model, -1.0).is_err());

        let prior = fitted_model(&mut rng, &d, &g, 0);
        let s = prior.kernel().scale(0);
        assert_relative_eq!(component_ucb(0, &x, &prior, 1.0).unwrap(), s.sqrt(), epsilon = 1e-15);

        let beta1 = 0.5 * (2.0f64 * 1.0).ln();
        assert_relative_eq!(beta1, 0.34657, epsilon = 1e-5);
    }

    #[test]
    fn larger_beta_never_lowers_the_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = Domain::uniform_grid(4, 3, 0.0, 1.0).unwrap();
        let g = DependencyGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let model = fitted_model(&mut rng, &d, &g, 10);
        let t = tree(&g);
        let mut last = f64::NEG_INFINITY;
        for beta in [0.0, 0.1, 0.5, 1.0, 4.0] {
            let tables = ucb_tables(&model, beta, &d, DEFAULT_MAX_TABLE_SIZE).unwrap();
            let m = maximize_acquisition(&t, &tables, &d, AcquisitionLimits::default()).unwrap();
            assert!(m.value >= last);
            last = m.value;
        }
    }
}
