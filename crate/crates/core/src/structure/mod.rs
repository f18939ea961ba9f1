//! Structure learning: Gibbs sampling over edge indicators and lengthscales.
//!
//! The state is `θ = (Z, L)`: one binary indicator per unordered variable pair
//! and one index per variable into that variable's candidate lengthscale grid.
//! States are scored by the GP log marginal likelihood φ(Z, L).

mod conditionals;
mod gibbs;
mod no_overlap;

pub use conditionals::{edge_conditional, lengthscale_conditional, normalize_log_weights};
pub use gibbs::{gibbs_learn, GibbsSettings, GibbsTrace, LearningMode, TraceEntry};
pub use no_overlap::{canonical_assignment, no_overlap_candidates, no_overlap_step, no_overlap_weights};

use crate::error::{Error, Result};
use crate::gp::KernelParams;
use crate::graph::DependencyGraph;

/// Number of candidate lengthscales per variable in the default grids.
pub const DEFAULT_GRID_POINTS: usize = 8;

/// `count` log-spaced values in `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || count == 0 {
        return Err(Error::invalid("log-spaced grid needs 0 < lo <= hi and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Candidate lengthscales, one finite grid per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthscaleGrids(Vec<Vec<f64>>);

impl LengthscaleGrids {
    pub fn new(grids: Vec<Vec<f64>>) -> Result<Self> {
        if grids.iter().any(Vec::is_empty) {
            return Err(Error::invalid("every lengthscale grid needs at least one value"));
        }
        if grids.iter().flatten().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lengthscale candidates must be positive"));
        }
        Ok(LengthscaleGrids(grids))
    }

    /// The same grid for every variable.
    pub fn uniform(dim: usize, grid: Vec<f64>) -> Result<Self> {
        LengthscaleGrids::new(vec![grid; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn grid(&self, var: usize) -> &[f64] {
        &self.0[var]
    }

    pub fn midpoints(&self) -> Vec<usize> {
        self.0.iter().map(|g| g.len() / 2).collect()
    }

    /// Index of the candidate closest to `value` in log scale.
    pub fn nearest(&self, var: usize, value: f64) -> usize {
        let target = value.ln();
        (0..self.0[var].len())
            .min_by(|&a, &b| {
                let da = (self.0[var][a].ln() - target).abs();
                let db = (self.0[var][b].ln() - target).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }
}

/// Gibbs sampler state θ.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructureParams {
    dim: usize,
    edges: Vec<bool>,
    lengthscale_indices: Vec<usize>,
}

impl StructureParams {
    pub fn new(graph: &DependencyGraph, lengthscale_indices: Vec<usize>, grids: &LengthscaleGrids) -> Result<Self> {
        if grids.dim() != graph.dim() || lengthscale_indices.len() != graph.dim() {
            return Err(Error::invalid("lengthscale indices, grids and graph must share D"));
        }
        for (v, &k) in lengthscale_indices.iter().enumerate() {
            if k >= grids.grid(v).len() {
                return Err(Error::invalid(format!(
                    "lengthscale index {k} out of range for variable {}",
                    v + 1
                )));
            }
        }
        let d = graph.dim();
        let mut edges = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for i in 0..d {
            for j in i + 1..d {
                edges.push(graph.has_edge(i, j));
            }
        }
        Ok(StructureParams {
            dim: d,
            edges,
            lengthscale_indices,
        })
    }

    /// Empty graph with every lengthscale at its grid midpoint.
    pub fn initial(grids: &LengthscaleGrids) -> Self {
        StructureParams::new(&DependencyGraph::empty(grids.dim()), grids.midpoints(), grids)
            .expect("midpoints are in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_edges_slots(&self) -> usize {
        self.edges.len()
    }

    /// Position of pair `(i, j)`, `i < j`, in lexicographic pair order.
    pub fn edge_slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.dim);
        i * self.dim - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn edge(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        self.edges[self.edge_slot(a, b)]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let (a, b) = (i.min(j), i.max(j));
        let slot = self.edge_slot(a, b);
        self.edges[slot] = present;
    }

    pub fn lengthscale_indices(&self) -> &[usize] {
        &self.lengthscale_indices
    }

    pub fn set_lengthscale_index(&mut self, var: usize, index: usize) {
        self.lengthscale_indices[var] = index;
    }

    pub fn graph(&self) -> DependencyGraph {
        let mut g = DependencyGraph::empty(self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.edges[k] {
                    g.set_edge(i, j, true);
                }
                k += 1;
            }
        }
        g
    }

    pub fn with_graph(&self, graph: &DependencyGraph) -> StructureParams {
        let mut out = self.clone();
        let mut k = 0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                out.edges[k] = graph.has_edge(i, j);
                k += 1;
            }
        }
        out
    }

    pub fn lengthscales(&self, grids: &LengthscaleGrids) -> Vec<f64> {
        self.lengthscale_indices
            .iter()
            .enumerate()
            .map(|(v, &k)| grids.grid(v)[k])
            .collect()
    }

    pub fn kernel_params(&self, grids: &LengthscaleGrids, noise_variance: f64) -> Result<KernelParams> {
        KernelParams::new(self.lengthscales(grids), noise_variance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_slots_are_lexicographic() {
        let grids = LengthscaleGrids::uniform(4, vec![1.0]).unwrap();
        let p = StructureParams::initial(&grids);
        let mut expected = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                assert_eq!(p.edge_slot(i, j), expected);
                expected += 1;
            }
        }
        assert_eq!(p.num_edges_slots(), 6);
    }

    #[test]
    fn graph_round_trip() {
        let grids = LengthscaleGrids::uniform(5, vec![0.5, 1.0, 2.0]).unwrap();
        let g = DependencyGraph::from_edges(5, &[(0, 4), (1, 2), (3, 4)]).unwrap();
        let p = StructureParams::new(&g, vec![0, 1, 2, 1, 0], &grids).unwrap();
        assert_eq!(p.graph(), g);
        assert!(p.edge(4, 0));
        assert_eq!(p.lengthscales(&grids), vec![0.5, 1.0, 2.0, 1.0, 0.5]);
        assert!(StructureParams::new(&g, vec![0, 1, 3, 1, 0], &grids).is_err());
    }

    #[test]
    fn grids() {
        let g = log_spaced(0.1, 10.0, 3).unwrap();
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
        let grids = LengthscaleGrids::uniform(2, g).unwrap();
        assert_eq!(grids.midpoints(), vec![1, 1]);
        assert_eq!(grids.nearest(0, 8.0), 2);
        assert!(LengthscaleGrids::new(vec![vec![]]).is_err());
    }
}
