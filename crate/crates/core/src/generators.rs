//! Instance generators: hard lower-bound instances and random dense inputs.
//!
//! Every generator is a deterministic function of its parameters and seed.

use crate::graph::{ColouredGraph, Graph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("hypercube dimension {0} out of range 1..=16")]
    DimensionTooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("enumeration budget exceeded after {0} steps")]
    BudgetExceeded(usize),
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The hypercube `Q_k` with the direction colouring: the colour of an edge is
/// the coordinate in which its endpoints differ. Proper by construction, and
/// every cycle uses each direction an even number of times, so no cycle is
/// rainbow.
pub fn hypercube_coloured(k: usize) -> Result<ColouredGraph, GenError> {
    if k == 0 || k > 16 {
        return Err(GenError::DimensionTooLarge(k));
    }
    let n = 1usize << k;
    let mut edges = Vec::with_capacity(k * n / 2);
    for v in 0..n {
        for i in 0..k {
            let w = v ^ (1 << i);
            if v < w {
                edges.push((v, w, i));
            }
        }
    }
    Ok(ColouredGraph::from_coloured_edges(n, &edges)
        .expect("direction colouring is proper")
        .canonical())
}

/// Erdős–Rényi sample `G(n, p)`, deterministic in the seed.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("sampled edges are simple")
}

/// Random bipartite graph on parts `0..a` and `a..a+b`.
pub fn random_bipartite(a: usize, b: usize, p: f64, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for u in 0..a {
        for v in a..(a + b) {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(a + b, &edges).expect("sampled edges are simple")
}

/// `count` distinct vertices of `0..n`, a seeded uniform sample.
pub fn random_distinct(n: usize, count: usize, seed: u64) -> Vec<usize> {
    assert!(count <= n);
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(&mut rng);
    pool.truncate(count);
    pool
}

pub fn complete(n: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let mut edges = Vec::new();
    for u in 0..a {
        for v in a..(a + b) {
            edges.push((u, v));
        }
    }
    Graph::from_edges(a + b, &edges).unwrap()
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3);
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges).unwrap()
}

/// Greedy proper edge-colouring over a seeded random edge order, assigning
/// each edge the smallest colour free at both endpoints. Uses at most
/// `2 Δ(G) - 1` colours.
pub fn greedy_proper_colouring(g: &Graph, seed: u64) -> ColouredGraph {
    let mut rng = rng_from_seed(seed);
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.shuffle(&mut rng);
    let cap = (2 * g.max_degree()).max(1);
    let mut used = vec![vec![false; cap]; g.n()];
    let mut coloured = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        let c = (0..cap)
            .find(|&c| !used[u][c] && !used[v][c])
            .expect("greedy colouring needs at most 2*maxdeg - 1 colours");
        used[u][c] = true;
        used[v][c] = true;
        coloured.push((u, v, c));
    }
    ColouredGraph::from_coloured_edges(g.n(), &coloured)
        .expect("greedy colouring is proper")
        .canonical()
}

/// The r-blow-up of a k-cycle: k groups of r vertices, complete bipartite
/// between consecutive groups. Vertex `g * r + j` is the j-th vertex of
/// group `g`. 2r-regular with `k r^2` edges.
pub fn blowup_cycle(k: usize, r: usize) -> Result<Graph, GenError> {
    if k < 3 {
        return Err(GenError::InvalidParam(format!(
            "cycle length {k} must be at least 3"
        )));
    }
    if r == 0 {
        return Err(GenError::InvalidParam(
            "blow-up factor must be positive".into(),
        ));
    }
    let n = k * r;
    let mut edges = Vec::with_capacity(k * r * r);
    for g in 0..k {
        let h = (g + 1) % k;
        for i in 0..r {
            for j in 0..r {
                let u = g * r + i;
                let v = h * r + j;
                edges.push((u.min(v), u.max(v)));
            }
        }
    }
    Ok(Graph::from_edges(n, &edges).expect("blow-up edges are simple"))
}

/// Outcome of the lower-bound construction: the graph, what was removed, and
/// whether the edge count met the configured `c * n^{2 - 1/r}` target.
#[derive(Debug)]
pub struct CrFreeOutcome {
    pub graph: Graph,
    pub initial_edges: usize,
    pub removed_edges: usize,
    pub kmax: usize,
    pub bound: f64,
    pub meets_bound: bool,
}

/// Samples `G(n, n^(-1/r))` and deletes the lowest-index edge of every
/// blow-up cycle `C_j[r]` with `3 <= j <= kmax`, rescanning until none
/// remains. The truncation at `kmax` is recorded in the outcome.
pub fn crfree_construction(
    n: usize,
    r: usize,
    kmax: usize,
    c: f64,
    seed: u64,
    budget: usize,
) -> Result<CrFreeOutcome, GenError> {
    if r == 0 {
        return Err(GenError::InvalidParam("r must be positive".into()));
    }
    if kmax < 3 {
        return Err(GenError::InvalidParam("kmax must be at least 3".into()));
    }
    let p = (n as f64).powf(-1.0 / r as f64);
    let mut graph = random_graph(n, p.min(1.0), seed);
    let initial_edges = graph.m();
    let mut steps = 0usize;
    let mut removed = 0usize;
    loop {
        match find_blowup_cycle_copy(&graph, r, kmax, &mut steps, budget)? {
            None => break,
            Some(copy) => {
                let doomed = lowest_edge_of_copy(&copy);
                let edges: Vec<(usize, usize)> = graph.edges().filter(|&e| e != doomed).collect();
                graph = Graph::from_edges(graph.n(), &edges).unwrap();
                removed += 1;
            }
        }
    }
    let bound = c * (n as f64).powf(2.0 - 1.0 / r as f64);
    let meets_bound = graph.m() as f64 >= bound;
    Ok(CrFreeOutcome {
        initial_edges,
        removed_edges: removed,
        kmax,
        bound,
        meets_bound,
        graph,
    })
}

/// A copy of `C_j[r]` as its `j` groups in cyclic order.
type BlowupCopy = Vec<Vec<usize>>;

fn lowest_edge_of_copy(copy: &BlowupCopy) -> (usize, usize) {
    let j = copy.len();
    let mut best = (usize::MAX, usize::MAX);
    for g in 0..j {
        let h = (g + 1) % j;
        for &u in &copy[g] {
            for &v in &copy[h] {
                let e = (u.min(v), u.max(v));
                if e < best {
                    best = e;
                }
            }
        }
    }
    best
}

/// Finds one copy of `C_j[r]` for some `3 <= j <= kmax`, trying shorter
/// cycles first. Deterministic scan order: group candidates ascending.
fn find_blowup_cycle_copy(
    g: &Graph,
    r: usize,
    kmax: usize,
    steps: &mut usize,
    budget: usize,
) -> Result<Option<BlowupCopy>, GenError> {
    for j in 3..=kmax {
        for first in RSets::new(g.n(), r) {
            *steps += 1;
            if *steps > budget {
                return Err(GenError::BudgetExceeded(*steps));
            }
            let mut used = vec![false; g.n()];
            for &v in &first {
                used[v] = true;
            }
            let mut groups = vec![first.clone()];
            if extend_copy(g, r, j, &mut groups, &mut used, steps, budget)? {
                return Ok(Some(groups));
            }
        }
    }
    Ok(None)
}

fn extend_copy(
    g: &Graph,
    r: usize,
    j: usize,
    groups: &mut BlowupCopy,
    used: &mut [bool],
    steps: &mut usize,
    budget: usize,
) -> Result<bool, GenError> {
    if groups.len() == j {
        // Close the cycle: last group must be complete to the first.
        let ok = groups[j - 1]
            .iter()
            .all(|&u| groups[0].iter().all(|&v| g.has_edge(u, v)));
        return Ok(ok);
    }
    let prev = groups.last().unwrap().clone();
    let mut cands: Vec<usize> = common_neighbours(g, &prev)
        .into_iter()
        .filter(|&v| !used[v])
        .collect();
    cands.sort_unstable();
    let mut chosen = Vec::with_capacity(r);
    pick_rset(g, r, j, groups, used, &cands, 0, &mut chosen, steps, budget)
}

#[allow(clippy::too_many_arguments)]
fn pick_rset(
    g: &Graph,
    r: usize,
    j: usize,
    groups: &mut BlowupCopy,
    used: &mut [bool],
    cands: &[usize],
    from: usize,
    chosen: &mut Vec<usize>,
    steps: &mut usize,
    budget: usize,
) -> Result<bool, GenError> {
    *steps += 1;
    if *steps > budget {
        return Err(GenError::BudgetExceeded(*steps));
    }
    if chosen.len() == r {
        groups.push(chosen.clone());
        for &v in chosen.iter() {
            used[v] = true;
        }
        let found = extend_copy(g, r, j, groups, used, steps, budget)?;
        if !found {
            for &v in chosen.iter() {
                used[v] = false;
            }
            groups.pop();
        }
        return Ok(found);
    }
    for i in from..cands.len() {
        chosen.push(cands[i]);
        if pick_rset(g, r, j, groups, used, cands, i + 1, chosen, steps, budget)? {
            return Ok(true);
        }
        chosen.pop();
    }
    Ok(false)
}

fn common_neighbours(g: &Graph, set: &[usize]) -> Vec<usize> {
    let mut iter = set.iter();
    let first = match iter.next() {
        Some(&v) => v,
        None => return (0..g.n()).collect(),
    };
    let mut common: Vec<usize> = g.neighbours(first).to_vec();
    for &v in iter {
        common.retain(|&w| g.has_edge(v, w));
    }
    common
}

/// Iterator over r-subsets of `0..n` in lexicographic order.
struct RSets {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl RSets {
    fn new(n: usize, r: usize) -> Self {
        RSets {
            n,
            cur: (0..r).collect(),
            done: r > n || r == 0,
        }
    }
}

impl Iterator for RSets {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let r = self.cur.len();
        let mut i = r;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.n - (r - i) {
                self.cur[i] += 1;
                for j in (i + 1)..r {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
