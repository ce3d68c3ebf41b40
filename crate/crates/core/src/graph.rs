//! Simple graphs, proper edge-colourings and bipartitions.
//!
//! Vertices are `0..n`. Graphs are immutable after construction and cheap to
//! clone at the sizes this crate targets (a few thousand vertices).

use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: usize, v: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error(
        "improper colouring: edges {u1}-{v1} and {u2}-{v2} share a vertex and colour {colour}"
    )]
    ImproperColouring {
        u1: usize,
        v1: usize,
        u2: usize,
        v2: usize,
        colour: usize,
    },
    #[error("graph is not bipartite; odd cycle witness {0:?}")]
    OddCycle(Vec<usize>),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vertex {0} out of range")]
    InvalidVertex(usize),
    #[error("edge {0}-{1} not present")]
    MissingEdge(usize, usize),
}

/// An undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Builds a graph on `n` vertices from an edge list. Rejects self-loops,
    /// parallel edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::InvalidVertex(u));
            }
            if v >= n {
                return Err(GraphError::InvalidVertex(v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        for (v, list) in adj.iter().enumerate() {
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge {
                    u: v.min(w[0]),
                    v: v.max(w[0]),
                });
            }
        }
        Ok(Graph {
            adj,
            m: edges.len(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as pairs `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.adj[u]
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Exact average degree `2 e(G) / n`.
    pub fn average_degree(&self) -> Rational64 {
        if self.n() == 0 {
            return Rational64::from_integer(0);
        }
        Rational64::new(2 * self.m as i64, self.n() as i64)
    }

    /// Edge counts inside `S`, across the cut, and the average degree of `G[S]`.
    pub fn cut_and_density(&self, s: &[usize]) -> Result<(usize, usize, Rational64), GraphError> {
        let mut mark = vec![false; self.n()];
        for &v in s {
            if v >= self.n() {
                return Err(GraphError::InvalidVertex(v));
            }
            mark[v] = true;
        }
        let size = mark.iter().filter(|&&b| b).count();
        let mut inside = 0usize;
        let mut cross = 0usize;
        for v in 0..self.n() {
            if !mark[v] {
                continue;
            }
            for &w in &self.adj[v] {
                if mark[w] {
                    if v < w {
                        inside += 1;
                    }
                } else {
                    cross += 1;
                }
            }
        }
        let density = if size == 0 {
            Rational64::from_integer(0)
        } else {
            Rational64::new(2 * inside as i64, size as i64)
        };
        Ok((inside, cross, density))
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        let mut seen = vec![false; self.n()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n()
    }

    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.n() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut verts = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        verts.push(w);
                        stack.push(w);
                    }
                }
            }
            verts.sort_unstable();
            out.push(verts);
        }
        out
    }

    /// Induced subgraph on `verts` (deduplicated, sorted). Returns the new
    /// graph together with the map new-id -> old-id.
    pub fn induced(&self, verts: &[usize]) -> (Graph, Vec<usize>) {
        let mut orig: Vec<usize> = verts.to_vec();
        orig.sort_unstable();
        orig.dedup();
        let mut back = vec![usize::MAX; self.n()];
        for (i, &v) in orig.iter().enumerate() {
            back[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in orig.iter().enumerate() {
            for &w in &self.adj[v] {
                if v < w && back[w] != usize::MAX {
                    edges.push((i, back[w]));
                }
            }
        }
        let g = Graph::from_edges(orig.len(), &edges).expect("induced subgraph is simple");
        (g, orig)
    }

    /// Spanning subgraph with the given edge subset (must all exist).
    pub fn spanning(&self, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        for &(u, v) in edges {
            if !self.has_edge(u, v) {
                return Err(GraphError::MissingEdge(u, v));
            }
        }
        Graph::from_edges(self.n(), edges)
    }

    /// Two-colouring classes without requiring connectivity (each component
    /// is coloured starting from its smallest vertex). Larger part first.
    pub fn two_colour_classes(&self) -> Result<Bipartition, GraphError> {
        let mut side = vec![u8::MAX; self.n()];
        let mut parent = vec![usize::MAX; self.n()];
        for root in 0..self.n() {
            if side[root] != u8::MAX {
                continue;
            }
            side[root] = 0;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[v] {
                    if side[w] == u8::MAX {
                        side[w] = 1 - side[v];
                        parent[w] = v;
                        queue.push_back(w);
                    } else if side[w] == side[v] {
                        return Err(GraphError::OddCycle(odd_cycle_witness(&parent, v, w)));
                    }
                }
            }
        }
        let part0: Vec<usize> = (0..self.n()).filter(|&v| side[v] == 0).collect();
        let part1: Vec<usize> = (0..self.n()).filter(|&v| side[v] == 1).collect();
        if part1.len() > part0.len() {
            Ok(Bipartition { x: part1, y: part0 })
        } else {
            Ok(Bipartition { x: part0, y: part1 })
        }
    }

    /// The unique two-colouring classes of a connected bipartite graph, the
    /// larger part first. Fails with an odd-cycle witness otherwise.
    pub fn bipartition(&self) -> Result<Bipartition, GraphError> {
        if self.n() == 0 {
            return Err(GraphError::Disconnected);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let mut side = vec![u8::MAX; self.n()];
        let mut parent = vec![usize::MAX; self.n()];
        side[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if side[w] == u8::MAX {
                    side[w] = 1 - side[v];
                    parent[w] = v;
                    queue.push_back(w);
                } else if side[w] == side[v] {
                    return Err(GraphError::OddCycle(odd_cycle_witness(&parent, v, w)));
                }
            }
        }
        let part0: Vec<usize> = (0..self.n()).filter(|&v| side[v] == 0).collect();
        let part1: Vec<usize> = (0..self.n()).filter(|&v| side[v] == 1).collect();
        // Larger part first; ties resolved by the part containing vertex 0.
        if part1.len() > part0.len() {
            Ok(Bipartition { x: part1, y: part0 })
        } else {
            Ok(Bipartition { x: part0, y: part1 })
        }
    }
}

/// Composes vertex maps: `inner` indexes into the domain of `outer`.
pub fn compose_maps(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&i| outer[i]).collect()
}

fn odd_cycle_witness(parent: &[usize], v: usize, w: usize) -> Vec<usize> {
    // Walk both vertices up to the root, then trim the common tail.
    let path_up = |mut a: usize| {
        let mut p = vec![a];
        while parent[a] != usize::MAX {
            a = parent[a];
            p.push(a);
        }
        p
    };
    let mut pv = path_up(v);
    let mut pw = path_up(w);
    while pv.len() >= 2 && pw.len() >= 2 && pv[pv.len() - 2] == pw[pw.len() - 2] {
        pv.pop();
        pw.pop();
    }
    pw.pop();
    pw.reverse();
    pv.extend(pw);
    pv
}

/// Bipartition `{X, Y}` with `|X| >= |Y|`.
#[derive(Debug, Clone)]
pub struct Bipartition {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl Bipartition {
    /// True if `v` lies in the first (larger) part.
    pub fn in_x(&self, v: usize) -> bool {
        self.x.binary_search(&v).is_ok()
    }
}

/// A simple graph with a proper edge-colouring.
#[derive(Debug, Clone)]
pub struct ColouredGraph {
    graph: Graph,
    /// `colour_adj[v][i]` is the colour of the edge `(v, neighbours(v)[i])`.
    colour_adj: Vec<Vec<usize>>,
    n_colours: usize,
}

impl ColouredGraph {
    /// Builds from coloured edges `(u, v, c)`. Colour ids are taken as given;
    /// use [`ColouredGraph::canonical`] to remap them to `0..C`.
    pub fn from_coloured_edges(
        n: usize,
        edges: &[(usize, usize, usize)],
    ) -> Result<Self, GraphError> {
        let pairs: Vec<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
        let graph = Graph::from_edges(n, &pairs)?;
        let mut colour_adj: Vec<Vec<usize>> = graph
            .adj
            .iter()
            .map(|list| vec![usize::MAX; list.len()])
            .collect();
        for &(u, v, c) in edges {
            let iu = graph.adj[u].binary_search(&v).unwrap();
            let iv = graph.adj[v].binary_search(&u).unwrap();
            colour_adj[u][iu] = c;
            colour_adj[v][iv] = c;
        }
        let cg = ColouredGraph {
            n_colours: edges.iter().map(|&(_, _, c)| c + 1).max().unwrap_or(0),
            graph,
            colour_adj,
        };
        cg.check_proper()?;
        Ok(cg)
    }

    fn check_proper(&self) -> Result<(), GraphError> {
        for v in 0..self.graph.n() {
            let nbrs = &self.graph.adj[v];
            for i in 0..nbrs.len() {
                for j in (i + 1)..nbrs.len() {
                    if self.colour_adj[v][i] == self.colour_adj[v][j] {
                        return Err(GraphError::ImproperColouring {
                            u1: v,
                            v1: nbrs[i],
                            u2: v,
                            v2: nbrs[j],
                            colour: self.colour_adj[v][i],
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Remaps colour ids to `0..C` preserving their numeric order.
    pub fn canonical(self) -> Self {
        let mut ids: Vec<usize> = self
            .coloured_edges()
            .map(|(_, _, c)| c)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        ids.sort_unstable();
        let remap: std::collections::HashMap<usize, usize> =
            ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let colour_adj = self
            .colour_adj
            .iter()
            .map(|row| row.iter().map(|c| remap[c]).collect())
            .collect();
        ColouredGraph {
            graph: self.graph,
            colour_adj,
            n_colours: ids.len(),
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn n_colours(&self) -> usize {
        self.n_colours
    }

    pub fn colour(&self, u: usize, v: usize) -> Option<usize> {
        let i = self.graph.adj.get(u)?.binary_search(&v).ok()?;
        Some(self.colour_adj[u][i])
    }

    /// Neighbours of `v` with edge colours, sorted by neighbour id.
    pub fn coloured_neighbours(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.graph.adj[v]
            .iter()
            .copied()
            .zip(self.colour_adj[v].iter().copied())
    }

    pub fn coloured_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.graph.n()).flat_map(move |u| {
            self.graph.adj[u]
                .iter()
                .copied()
                .zip(self.colour_adj[u].iter().copied())
                .filter(move |&(v, _)| u < v)
                .map(move |(v, c)| (u, v, c))
        })
    }

    /// Induced coloured subgraph; colour ids are preserved, not re-packed.
    pub fn induced(&self, verts: &[usize]) -> (ColouredGraph, Vec<usize>) {
        let (g, orig) = self.graph.induced(verts);
        let mut edges = Vec::new();
        for (u, v) in g.edges() {
            let c = self.colour(orig[u], orig[v]).unwrap();
            edges.push((u, v, c));
        }
        let mut cg =
            ColouredGraph::from_coloured_edges(g.n(), &edges).expect("induced colouring is proper");
        cg.n_colours = self.n_colours;
        (cg, orig)
    }

    /// Spanning coloured subgraph with the given edge subset.
    pub fn spanning(&self, edges: &[(usize, usize)]) -> Result<ColouredGraph, GraphError> {
        let mut coloured = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            let c = self.colour(u, v).ok_or(GraphError::MissingEdge(u, v))?;
            coloured.push((u, v, c));
        }
        let mut cg = ColouredGraph::from_coloured_edges(self.graph.n(), &coloured)?;
        cg.n_colours = self.n_colours;
        Ok(cg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use proptest::prelude::*;

    fn c4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    fn k4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn average_degree_examples() {
        assert_eq!(c4().average_degree(), Rational64::from_integer(2));
        assert_eq!(k4().average_degree(), Rational64::from_integer(3));
        // Q_3: 12 edges over 8 vertices.
        let q3 = generators::hypercube_coloured(3).unwrap();
        assert_eq!(q3.graph().m(), 12);
        assert_eq!(q3.graph().average_degree(), Rational64::from_integer(3));
    }

    #[test]
    fn cut_and_density_examples() {
        let (e_in, e_cross, d) = c4().cut_and_density(&[0]).unwrap();
        assert_eq!((e_in, e_cross), (0, 2));
        assert_eq!(d, Rational64::from_integer(0));

        // One side of the bipartition of C_4: all four edges cross.
        let (e_in, e_cross, _) = c4().cut_and_density(&[0, 2]).unwrap();
        assert_eq!((e_in, e_cross), (0, 4));

        // Two vertices of K_4: one internal edge, four crossing.
        let (e_in, e_cross, d) = k4().cut_and_density(&[0, 1]).unwrap();
        assert_eq!((e_in, e_cross), (1, 4));
        assert_eq!(d, Rational64::from_integer(1));

        assert!(matches!(
            k4().cut_and_density(&[7]),
            Err(GraphError::InvalidVertex(7))
        ));
    }

    #[test]
    fn bipartition_examples() {
        let b = c4().bipartition().unwrap();
        assert_eq!(b.x, vec![0, 2]);
        assert_eq!(b.y, vec![1, 3]);

        let c3 = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        match c3.bipartition() {
            Err(GraphError::OddCycle(w)) => assert_eq!(w.len(), 3),
            other => panic!("expected odd cycle, got {other:?}"),
        }

        // Q_3 splits into even/odd parity classes of size 4 each.
        let q3 = generators::hypercube_coloured(3).unwrap();
        let b = q3.graph().bipartition().unwrap();
        assert_eq!(b.x.len(), 4);
        assert_eq!(b.y.len(), 4);
        for &v in &b.x {
            assert_eq!((v as u32).count_ones() % 2, 0);
        }
    }

    #[test]
    fn bipartition_requires_connectivity() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(g.bipartition(), Err(GraphError::Disconnected)));
    }

    #[test]
    fn bipartition_odd_cycle_witness_is_an_odd_cycle() {
        // C_5 with a chord: odd cycles exist along several routes.
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]).unwrap();
        match g.bipartition() {
            Err(GraphError::OddCycle(w)) => {
                assert_eq!(w.len() % 2, 1);
                for i in 0..w.len() {
                    assert!(g.has_edge(w[i], w[(i + 1) % w.len()]));
                }
            }
            other => panic!("expected odd cycle, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            Graph::from_edges(3, &[(0, 0)]),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge { u: 0, v: 1 })
        ));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(GraphError::InvalidVertex(5))
        ));
    }

    #[test]
    fn properness_is_enforced() {
        let err = ColouredGraph::from_coloured_edges(3, &[(0, 1, 0), (1, 2, 0)]).unwrap_err();
        assert!(matches!(err, GraphError::ImproperColouring { .. }));

        let cg =
            ColouredGraph::from_coloured_edges(4, &[(0, 1, 0), (1, 2, 1), (2, 3, 0), (3, 0, 1)])
                .unwrap();
        assert_eq!(cg.n_colours(), 2);
        assert_eq!(cg.colour(2, 3), Some(0));
    }

    #[test]
    fn canonical_remaps_colours_densely() {
        let cg = ColouredGraph::from_coloured_edges(3, &[(0, 1, 17), (1, 2, 4)])
            .unwrap()
            .canonical();
        assert_eq!(cg.n_colours(), 2);
        assert_eq!(cg.colour(1, 2), Some(0));
        assert_eq!(cg.colour(0, 1), Some(1));
    }

    #[test]
    fn induced_preserves_structure() {
        let (h, orig) = k4().induced(&[1, 2, 3]);
        assert_eq!(h.n(), 3);
        assert_eq!(h.m(), 3);
        assert_eq!(orig, vec![1, 2, 3]);
    }

    proptest! {
        // Degree-sum identity: e(S) + e(S, S^c) = sum of degrees in S minus e(S).
        #[test]
        fn degree_sum_identity(n in 1usize..14, seed in 0u64..500, mask in 0u32..(1 << 13)) {
            let g = generators::random_graph(n, 0.5, seed);
            let s: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let (inside, cross, _) = g.cut_and_density(&s).unwrap();
            let degsum: usize = s.iter().map(|&v| g.degree(v)).sum();
            prop_assert_eq!(inside + cross, degsum - inside);
        }

        // Every edge crosses the bipartition when one exists.
        #[test]
        fn bipartition_edges_cross(n in 2usize..12, seed in 0u64..200) {
            let sizes = (n / 2 + n % 2, n / 2);
            let g = generators::random_bipartite(sizes.0, sizes.1, 0.7, seed);
            if g.is_connected() {
                let b = g.bipartition().unwrap();
                for (u, v) in g.edges() {
                    prop_assert!(b.in_x(u) != b.in_x(v));
                }
                prop_assert!(b.x.len() >= b.y.len());
            }
        }
    }
}
