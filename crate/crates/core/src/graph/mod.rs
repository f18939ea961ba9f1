//! Dependency graphs over the input variables.
//!
//! An edge `i - j` means that variables `i` and `j` appear together in at least
//! one additive component. The components themselves are the maximal cliques
//! of the graph. Variables are 0-indexed in code and 1-indexed in files.

mod cliques;
mod edge_list;
mod junction_tree;
mod triangulate;

pub use cliques::maximal_cliques;
pub use edge_list::{format_edge_list, format_structure, parse_edge_list, parse_structure, MAX_FILE_DIM};
pub use junction_tree::{build_junction_tree, JunctionTree, JunctionTreeOptions, DEFAULT_MAX_TREEWIDTH};
pub use triangulate::{triangulate, TriangulatedGraph};

use crate::error::{Error, Result};

/// Symmetric 0/1 adjacency matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyGraph {
    dim: usize,
    adj: Vec<bool>,
}

impl DependencyGraph {
    pub fn empty(dim: usize) -> Self {
        DependencyGraph {
            dim,
            adj: vec![false; dim * dim],
        }
    }

    pub fn complete(dim: usize) -> Self {
        let mut g = DependencyGraph::empty(dim);
        for i in 0..dim {
            for j in i + 1..dim {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    /// Vertex 0 joined to every other vertex.
    pub fn star(dim: usize) -> Self {
        let mut g = DependencyGraph::empty(dim);
        for j in 1..dim {
            g.set_edge(0, j, true);
        }
        g
    }

    /// `rows × cols` lattice, vertices numbered row by row.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut g = DependencyGraph::empty(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    g.set_edge(v, v + 1, true);
                }
                if r + 1 < rows {
                    g.set_edge(v, v + cols, true);
                }
            }
        }
        g
    }

    pub fn from_edges(dim: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = DependencyGraph::empty(dim);
        for &(i, j) in edges {
            if i >= dim || j >= dim {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for D={dim}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop on vertex {i}")));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    /// Union of cliques, one per group.
    pub fn from_groups(dim: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut g = DependencyGraph::empty(dim);
        for group in groups {
            for (a, &i) in group.iter().enumerate() {
                if i >= dim {
                    return Err(Error::invalid(format!("variable {i} out of range for D={dim}")));
                }
                for &j in &group[a + 1..] {
                    if i != j {
                        g.set_edge(i, j, true);
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.dim + j]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "self-loops are not allowed");
        self.adj[i * self.dim + j] = present;
        self.adj[j * self.dim + i] = present;
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&u| self.adj[v * self.dim + u])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn is_clique(&self, vars: &[usize]) -> bool {
        vars.iter()
            .enumerate()
            .all(|(a, &i)| vars[a + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    /// True when every edge of `other` is an edge of `self`.
    pub fn contains_graph(&self, other: &DependencyGraph) -> bool {
        self.dim == other.dim && other.edges().iter().all(|&(i, j)| self.has_edge(i, j))
    }

    /// True when the graph is a disjoint union of cliques.
    pub fn is_cluster_graph(&self) -> bool {
        let cliques = maximal_cliques(self);
        let mut seen = vec![false; self.dim];
        for c in cliques.groups() {
            for &v in c {
                if seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        true
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.dim];
        let mut out = Vec::new();
        for start in 0..self.dim {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut comp = vec![start];
            label[start] = id;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                for u in self.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = id;
                        comp.push(u);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Chordality test via maximum cardinality search.
    pub fn is_chordal(&self) -> bool {
        let order = self.mcs_elimination_order();
        let mut position = vec![0; self.dim];
        for (k, &v) in order.iter().enumerate() {
            position[v] = k;
        }
        order.iter().all(|&v| {
            let later: Vec<usize> = self.neighbors(v).filter(|&u| position[u] > position[v]).collect();
            self.is_clique(&later)
        })
    }

    /// Reverse of a maximum cardinality search visit order. This is a perfect
    /// elimination ordering exactly when the graph is chordal.
    pub fn mcs_elimination_order(&self) -> Vec<usize> {
        let mut weight = vec![0usize; self.dim];
        let mut numbered = vec![false; self.dim];
        let mut visit = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            let v = (0..self.dim)
                .filter(|&v| !numbered[v])
                .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
                .expect("unnumbered vertex");
            numbered[v] = true;
            visit.push(v);
            for u in self.neighbors(v) {
                if !numbered[u] {
                    weight[u] += 1;
                }
            }
        }
        visit.reverse();
        visit
    }
}

impl std::fmt::Display for DependencyGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let edges: Vec<String> = self
            .edges()
            .iter()
            .map(|(i, j)| format!("{}-{}", i + 1, j + 1))
            .collect();
        write!(f, "D={} {{{}}}", self.dim, edges.join(", "))
    }
}
