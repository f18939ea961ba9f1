//! Partition moves for the disjoint-groups model.
//!
//! The state is a group label per variable; the induced graph is a disjoint
//! union of cliques. One move reassigns a single variable to one of the other
//! existing groups or to a fresh singleton, with weights `∝ e^{φ}`.

use rand::Rng;

use super::conditionals::normalize_log_weights;
use crate::domain::ObservationSet;
use crate::error::{Error, Result};
use crate::gp::{log_marginal_likelihood, KernelParams};
use crate::graph::DependencyGraph;

/// Relabels groups 0, 1, ... in order of their smallest member.
pub fn canonical_assignment(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|l| match map.iter().find(|(from, _)| from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((*l, to));
                to
            }
        })
        .collect()
}

/// Group labels of the connected components of `graph`.
pub fn assignment_from_graph(graph: &DependencyGraph) -> Vec<usize> {
    let mut labels = vec![0; graph.dim()];
    for (k, comp) in graph.components().iter().enumerate() {
        for &v in comp {
            labels[v] = k;
        }
    }
    canonical_assignment(&labels)
}

pub fn assignment_graph(assignment: &[usize]) -> DependencyGraph {
    let mut g = DependencyGraph::empty(assignment.len());
    for i in 0..assignment.len() {
        for j in i + 1..assignment.len() {
            if assignment[i] == assignment[j] {
                g.set_edge(i, j, true);
            }
        }
    }
    g
}

/// Distinct canonical assignments reachable by moving `v`: into each group
/// formed by the other variables, then into a fresh singleton.
pub fn no_overlap_candidates(v: usize, assignment: &[usize]) -> Result<Vec<Vec<usize>>> {
    if v >= assignment.len() {
        return Err(Error::invalid(format!("variable {v} out of range")));
    }
    let mut targets: Vec<usize> = Vec::new();
    for (u, &l) in assignment.iter().enumerate() {
        if u != v && !targets.contains(&l) {
            targets.push(l);
        }
    }
    let fresh = assignment.iter().copied().max().unwrap_or(0) + 1;
    targets.push(fresh);

    let mut out: Vec<Vec<usize>> = Vec::new();
    for t in targets {
        let mut cand = assignment.to_vec();
        cand[v] = t;
        let cand = canonical_assignment(&cand);
        if !out.contains(&cand) {
            out.push(cand);
        }
    }
    Ok(out)
}

/// Candidates for moving `v` with their normalized `e^{φ}` weights.
pub fn no_overlap_weights(
    v: usize,
    assignment: &[usize],
    obs: &ObservationSet,
    params: &KernelParams,
) -> Result<(Vec<Vec<usize>>, Vec<f64>)> {
    let cands = no_overlap_candidates(v, assignment)?;
    let logs = cands
        .iter()
        .map(|a| log_marginal_likelihood(obs, &assignment_graph(a), params))
        .collect::<Result<Vec<f64>>>()?;
    Ok((cands, normalize_log_weights(&logs)))
}

/// Resamples the group of variable `v`.
pub fn no_overlap_step<R: Rng + ?Sized>(
    v: usize,
    assignment: &[usize],
    obs: &ObservationSet,
    params: &KernelParams,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (cands, weights) = no_overlap_weights(v, assignment, obs, params)?;
    Ok(cands[sample_index(&weights, rng)].clone())
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // Rounding can leave the cumulative sum just below 1.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}
