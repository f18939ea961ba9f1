use super::{maximal_cliques, DependencyGraph, TriangulatedGraph};
use crate::error::{Error, Result};

/// Default cap on the treewidth (largest clique size minus one).
pub const DEFAULT_MAX_TREEWIDTH: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct JunctionTreeOptions {
    pub max_treewidth: usize,
}

impl Default for JunctionTreeOptions {
    fn default() -> Self {
        JunctionTreeOptions {
            max_treewidth: DEFAULT_MAX_TREEWIDTH,
        }
    }
}

/// A rooted clique tree of a chordal graph, together with the assignment of
/// each maximal clique of the original (pre-triangulation) graph to exactly one
/// tree node that contains it.
#[derive(Debug, Clone)]
pub struct JunctionTree {
    nodes: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    post_order: Vec<usize>,
    original_cliques: Vec<Vec<usize>>,
    assignment: Vec<usize>,
}

/// Builds a junction tree over the maximal cliques of `tri`.
///
/// The tree is a maximum-weight spanning tree of the clique graph with
/// separator-size weights (Kruskal; ties broken by lowest clique indices).
/// Cliques of different connected components are joined through empty
/// separators so the result is always a single tree.
pub fn build_junction_tree(
    tri: &TriangulatedGraph,
    original: &DependencyGraph,
    options: JunctionTreeOptions,
) -> Result<JunctionTree> {
    let graph = tri.graph();
    if graph.dim() != original.dim() {
        return Err(Error::invalid("triangulated and original graphs differ in dimension"));
    }
    if !graph.is_chordal() {
        return Err(Error::invalid("junction trees need a chordal graph"));
    }
    if !graph.contains_graph(original) {
        return Err(Error::invalid("triangulated graph does not contain the original graph"));
    }
    let nodes = maximal_cliques(graph).into_groups();
    let widest = nodes.iter().map(Vec::len).max().unwrap_or(0);
    if widest > options.max_treewidth + 1 {
        return Err(Error::Capacity(format!(
            "treewidth {} exceeds cap {}",
            widest - 1,
            options.max_treewidth
        )));
    }

    let mut candidates = Vec::new();
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            candidates.push((intersection(&nodes[a], &nodes[b]).len(), a, b));
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut uf = UnionFind::new(nodes.len());
    let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
    for (_, a, b) in candidates {
        if uf.union(a, b) {
            edges.push((a, b));
        }
    }

    let original_cliques = maximal_cliques(original).into_groups();
    let root = nodes.iter().position(|c| c.contains(&0)).unwrap_or(0);
    let mut tree = JunctionTree {
        nodes,
        edges,
        root,
        parent: Vec::new(),
        children: Vec::new(),
        post_order: Vec::new(),
        original_cliques,
        assignment: Vec::new(),
    };
    tree.orient()?;
    Ok(tree)
}

impl JunctionTree {
    /// The same tree rooted at `root`, with the term assignment recomputed.
    pub fn with_root(&self, root: usize) -> Result<JunctionTree> {
        if root >= self.nodes.len() {
            return Err(Error::invalid(format!("node {root} does not exist")));
        }
        let mut t = self.clone();
        t.root = root;
        t.orient()?;
        Ok(t)
    }

    fn orient(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        self.parent = vec![None; n];
        self.children = vec![Vec::new(); n];
        let mut visited = vec![false; n];
        let mut pre_order = Vec::with_capacity(n);
        let mut stack = vec![self.root];
        visited[self.root] = true;
        while let Some(v) = stack.pop() {
            pre_order.push(v);
            for &u in adjacency[v].iter().rev() {
                if !visited[u] {
                    visited[u] = true;
                    self.parent[u] = Some(v);
                    self.children[v].push(u);
                    stack.push(u);
                }
            }
        }
        for c in &mut self.children {
            c.sort_unstable();
        }
        self.post_order = Vec::with_capacity(n);
        post_order(self.root, &self.children, &mut self.post_order);

        // Each original clique goes to the first node containing it in
        // post-order, so no child of that node also contains it.
        let mut assignment = Vec::with_capacity(self.original_cliques.len());
        for c in &self.original_cliques {
            let node = self
                .post_order
                .iter()
                .copied()
                .find(|&v| is_subset(c, &self.nodes[v]))
                .ok_or_else(|| Error::Inconsistency(format!("clique {c:?} is not covered by any tree node")))?;
            assignment.push(node);
        }
        self.assignment = assignment;
        Ok(())
    }

    pub fn nodes(&self) -> &[Vec<usize>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Tree edges with their separator sets.
    pub fn edges(&self) -> Vec<(usize, usize, Vec<usize>)> {
        self.edges
            .iter()
            .map(|&(a, b)| (a, b, intersection(&self.nodes[a], &self.nodes[b])))
            .collect()
    }

    /// Separator between `node` and its parent (empty at the root).
    pub fn separator(&self, node: usize) -> Vec<usize> {
        match self.parent[node] {
            Some(p) => intersection(&self.nodes[node], &self.nodes[p]),
            None => Vec::new(),
        }
    }

    /// Nodes in post-order (children before parents), root last.
    pub fn post_order(&self) -> &[usize] {
        &self.post_order
    }

    /// Maximal cliques of the original graph, in lexicographic order.
    pub fn original_cliques(&self) -> &[Vec<usize>] {
        &self.original_cliques
    }

    /// Tree node assigned to each original clique.
    pub fn term_assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Original cliques (by index) assigned to `node`.
    pub fn terms_of(&self, node: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&k| self.assignment[k] == node)
            .collect()
    }

    pub fn max_clique_size(&self) -> usize {
        self.nodes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// For every variable, the nodes containing it induce a connected subtree.
    pub fn satisfies_running_intersection(&self) -> bool {
        let dim = self.nodes.iter().flatten().copied().max().map_or(0, |m| m + 1);
        (0..dim).all(|v| {
            let holders: Vec<usize> = (0..self.nodes.len()).filter(|&k| self.nodes[k].contains(&v)).collect();
            // A set of k nodes in a tree is connected iff it spans k - 1 tree edges.
            let inner = self
                .edges
                .iter()
                .filter(|(a, b)| holders.contains(a) && holders.contains(b))
                .count();
            holders.is_empty() || inner + 1 == holders.len()
        })
    }
}

fn post_order(v: usize, children: &[Vec<usize>], out: &mut Vec<usize>) {
    for &c in &children[v] {
        post_order(c, children, out);
    }
    out.push(v);
}

pub(crate) fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.contains(x)).collect()
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
