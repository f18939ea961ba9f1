use super::DependencyGraph;
use crate::error::{Error, Result};

/// A chordal supergraph of some input graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedGraph {
    graph: DependencyGraph,
    fill_edges: Vec<(usize, usize)>,
}

impl TriangulatedGraph {
    /// Wraps a graph that is already chordal.
    pub fn from_chordal(graph: DependencyGraph) -> Result<Self> {
        if !graph.is_chordal() {
            return Err(Error::invalid("graph is not chordal"));
        }
        Ok(TriangulatedGraph {
            graph,
            fill_edges: Vec::new(),
        })
    }

    #[cfg(test)]
    pub(crate) fn unchecked(graph: DependencyGraph) -> Self {
        TriangulatedGraph {
            graph,
            fill_edges: Vec::new(),
        }
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    /// Edges added by triangulation, `(i, j)` with `i < j`, in insertion order.
    pub fn fill_edges(&self) -> &[(usize, usize)] {
        &self.fill_edges
    }

    /// Size of the largest clique of the chordal graph.
    pub fn max_clique_size(&self) -> usize {
        super::maximal_cliques(&self.graph)
            .groups()
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }
}

/// Greedy min-fill triangulation.
///
/// At each step the remaining vertex whose elimination adds the fewest fill
/// edges is eliminated; ties go to the lowest vertex index. Chordal inputs come
/// back unchanged because a simplicial vertex (zero fill) always exists.
pub fn triangulate(graph: &DependencyGraph) -> TriangulatedGraph {
    let d = graph.dim();
    let mut work = graph.clone();
    let mut out = graph.clone();
    let mut alive = vec![true; d];
    let mut fill_edges = Vec::new();

    for _ in 0..d {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..d).filter(|&v| alive[v]) {
            let nb: Vec<usize> = work.neighbors(v).filter(|&u| alive[u]).collect();
            let fill = missing_pairs(&work, &nb).count();
            if best.is_none_or(|(_, f)| fill < f) {
                best = Some((v, fill));
            }
        }
        let (v, _) = best.expect("an alive vertex remains");
        let nb: Vec<usize> = work.neighbors(v).filter(|&u| alive[u]).collect();
        let missing: Vec<(usize, usize)> = missing_pairs(&work, &nb).collect();
        for (a, b) in missing {
            work.set_edge(a, b, true);
            out.set_edge(a, b, true);
            fill_edges.push((a.min(b), a.max(b)));
        }
        alive[v] = false;
    }

    TriangulatedGraph { graph: out, fill_edges }
}

fn missing_pairs<'a>(graph: &'a DependencyGraph, nb: &'a [usize]) -> impl Iterator<Item = (usize, usize)> + 'a {
    nb.iter().enumerate().flat_map(move |(k, &a)| {
        nb[k + 1..]
            .iter()
            .filter(move |&&b| !graph.has_edge(a, b))
            .map(move |&b| (a, b))
    })
}
