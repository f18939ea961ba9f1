use super::DependencyGraph;
use crate::gp::Decomposition;

/// All maximal cliques of `graph` (Bron–Kerbosch with Tomita pivoting).
///
/// Each clique is sorted and the list is sorted lexicographically. Isolated
/// vertices come back as singletons.
pub fn maximal_cliques(graph: &DependencyGraph) -> Decomposition {
    let mut out = Vec::new();
    let p: Vec<usize> = (0..graph.dim()).collect();
    bron_kerbosch(graph, &mut Vec::new(), p, Vec::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    Decomposition::from_sorted_unchecked(graph.dim(), out)
}

fn bron_kerbosch(graph: &DependencyGraph, r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() {
        if x.is_empty() && !r.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&w| graph.has_edge(u, w)).count())
        .expect("p is nonempty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !graph.has_edge(pivot, v)).collect();
    let mut p = p;
    let mut x = x;
    for v in candidates {
        let np = p.iter().copied().filter(|&w| graph.has_edge(v, w)).collect();
        let nx = x.iter().copied().filter(|&w| graph.has_edge(v, w)).collect();
        r.push(v);
        bron_kerbosch(graph, r, np, nx, out);
        r.pop();
        p.retain(|&w| w != v);
        x.push(v);
    }
}
