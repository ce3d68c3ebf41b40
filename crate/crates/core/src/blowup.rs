//! r-blow-up machinery: bounded-codegree biclique collections, the auxiliary
//! graph on r-sets, and the blow-up subdivision pipeline.
//!
//! A blow-up of a K_m-subdivision is found by listing K_{r,r} copies with a
//! per-(r-set, vertex) codegree cap, forming the auxiliary graph whose
//! vertices are r-sets and whose edges are admitted copies, and running the
//! subdivision engine there with r-set intersection as the degeneracy
//! relation. Disjoint r-sets along the auxiliary subdivision expand each
//! auxiliary edge into a full K_{r,r} in the host.

use crate::graph::{Graph, GraphError};
use crate::params::{derive_seed, PipelineParams};
use crate::subdivision::{
    engine_search_rsets, find_subdivision_plain, SubdivError, SubdivisionCertificate,
};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("auxiliary graph too small to search: {0} usable r-sets")]
    AuxiliaryTooSmall(usize),
    #[error("intersection codegree {found} exceeds the required bound {bound}")]
    IntersectionBoundExceeded { found: usize, bound: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Subdiv(#[from] SubdivError),
}

/// A collection of K_{r,r} copies with a codegree cap: no r-set `A` and
/// vertex `u` outside it lie in more than `cap` admitted copies.
#[derive(Debug)]
pub struct KrrCollection {
    pub r: usize,
    /// Canonical copies: both sides sorted, lexicographically smaller first.
    pub copies: Vec<(Vec<usize>, Vec<usize>)>,
    pub codegree_cap: usize,
    /// True when the enumeration budget cut the candidate list short.
    pub truncated: bool,
    /// Candidates discovered before admission.
    pub discovered: usize,
}

fn common_neighbours(g: &Graph, set: &[usize]) -> Vec<usize> {
    let mut iter = set.iter();
    let first = match iter.next() {
        Some(&v) => v,
        None => return Vec::new(),
    };
    let mut common: Vec<usize> = g.neighbours(first).to_vec();
    for &v in iter {
        common.retain(|&w| g.has_edge(v, w));
    }
    common
}

fn r_subsets(pool: &[usize], r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(pool: &[usize], r: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in from..pool.len() {
            cur.push(pool[i]);
            rec(pool, r, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(pool, r, 0, &mut cur, &mut out);
    out
}

/// Greedy bounded-codegree collection: enumerate K_{r,r} copies (budget
/// capped), then admit them in seeded random order, refusing any copy that
/// would push some (r-set, vertex) codegree beyond `cap`. The balanced
/// supersaturation theorem guarantees a large such collection in dense
/// graphs; here the collection is built greedily and the two consumed
/// properties (size, codegree cap) are reported and re-checkable instead.
pub fn build_krr_collection(
    g: &Graph,
    r: usize,
    cap: usize,
    budget: usize,
    seed: u64,
) -> Result<KrrCollection, BlowupError> {
    if r == 0 {
        return Err(BlowupError::BadParam("r must be positive".into()));
    }
    if cap == 0 {
        return Err(BlowupError::BadParam("cap must be positive".into()));
    }
    // Enumerate candidates: scan the A-sides in seeded random order (a lex
    // scan would bias a budget-truncated pool towards low-index hosts), then
    // every r-subset of A's common neighbourhood. Canonical A < B
    // de-duplicates.
    let mut rng = crate::generators::rng_from_seed(seed);
    let mut a_order = r_subsets(&(0..g.n()).collect::<Vec<usize>>(), r);
    a_order.shuffle(&mut rng);
    let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut truncated = false;
    'outer: for a in a_order {
        let pool: Vec<usize> = common_neighbours(g, &a)
            .into_iter()
            .filter(|v| !a.contains(v))
            .collect();
        if pool.len() < r {
            continue;
        }
        for b in r_subsets(&pool, r) {
            if a < b {
                candidates.push((a.clone(), b));
            }
            if candidates.len() >= budget {
                truncated = true;
                break 'outer;
            }
        }
    }
    let discovered = candidates.len();
    candidates.shuffle(&mut rng);
    // Admission with codegree bookkeeping on both sides.
    let mut count: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    let mut copies = Vec::new();
    for (a, b) in candidates {
        let fits = b
            .iter()
            .all(|&u| count.get(&(a.clone(), u)).copied().unwrap_or(0) < cap)
            && a.iter()
                .all(|&u| count.get(&(b.clone(), u)).copied().unwrap_or(0) < cap);
        if !fits {
            continue;
        }
        for &u in &b {
            *count.entry((a.clone(), u)).or_insert(0) += 1;
        }
        for &u in &a {
            *count.entry((b.clone(), u)).or_insert(0) += 1;
        }
        copies.push((a, b));
    }
    copies.sort();
    Ok(KrrCollection {
        r,
        copies,
        codegree_cap: cap,
        truncated,
        discovered,
    })
}

/// Independent post-hoc re-check of the codegree invariant, recomputed from
/// the stored copies alone. Returns the maximum codegree observed.
pub fn recheck_codegree(col: &KrrCollection) -> usize {
    let mut count: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    for (a, b) in &col.copies {
        for &u in b {
            *count.entry((a.clone(), u)).or_insert(0) += 1;
        }
        for &u in a {
            *count.entry((b.clone(), u)).or_insert(0) += 1;
        }
    }
    count.values().copied().max().unwrap_or(0)
}

/// The auxiliary graph: one vertex per r-set appearing in the collection
/// (sorted lexicographically), one edge per admitted copy.
#[derive(Debug)]
pub struct AuxiliaryGraph {
    pub graph: Graph,
    /// `rsets[i]` is the host r-set of auxiliary vertex `i`.
    pub rsets: Vec<Vec<usize>>,
}

pub fn auxiliary_graph(col: &KrrCollection) -> AuxiliaryGraph {
    let mut sets: Vec<Vec<usize>> = col
        .copies
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    sets.sort();
    sets.dedup();
    let index: BTreeMap<Vec<usize>, usize> = sets
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut edges: Vec<(usize, usize)> = col
        .copies
        .iter()
        .map(|(a, b)| {
            let (ia, ib) = (index[a], index[b]);
            (ia.min(ib), ia.max(ib))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let graph = Graph::from_edges(sets.len(), &edges).expect("copies give simple edges");
    AuxiliaryGraph { graph, rsets: sets }
}

#[derive(Debug)]
pub struct IntersectionReport {
    /// Max over ordered pairs (u, v) of the number of neighbours w of v whose
    /// r-set meets u's.
    pub max_count: usize,
    pub argmax: (usize, usize),
    /// `t - max_count`; non-negative when the hypothesis holds at bound t.
    pub margin: i64,
}

/// Measures the intersection codegree of the auxiliary graph against the
/// bound `t` the vertex counting lemma needs.
pub fn intersection_relation_check(aux: &AuxiliaryGraph, t: usize) -> IntersectionReport {
    let g = &aux.graph;
    let n = g.n();
    let host_of: Vec<BTreeSet<usize>> = aux
        .rsets
        .iter()
        .map(|s| s.iter().copied().collect())
        .collect();
    let mut max_count = 0usize;
    let mut argmax = (0, 0);
    for (u, hosts) in host_of.iter().enumerate() {
        for v in 0..n {
            let count = g
                .neighbours(v)
                .iter()
                .filter(|&&w| aux.rsets[w].iter().any(|h| hosts.contains(h)))
                .count();
            if count > max_count {
                max_count = count;
                argmax = (u, v);
            }
        }
    }
    IntersectionReport {
        max_count,
        argmax,
        margin: t as i64 - max_count as i64,
    }
}

/// Knobs of the blow-up pipeline beyond the shared search parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupOptions {
    pub cap: usize,
    pub budget: usize,
    /// When set, the pipeline refuses to proceed if the measured
    /// intersection codegree exceeds this bound; otherwise the measured
    /// value is recorded in the certificate.
    pub t_bound: Option<usize>,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        BlowupOptions {
            cap: 8,
            budget: 200_000,
            t_bound: None,
        }
    }
}

/// A blow-up certificate: an auxiliary-level subdivision plus the r-sets of
/// every auxiliary vertex it uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub r: usize,
    pub base: SubdivisionCertificate,
    /// Auxiliary vertex -> host r-set, for every vertex the base uses.
    pub rsets: BTreeMap<usize, Vec<usize>>,
    /// Measured intersection codegree of the auxiliary graph (the effective
    /// `t` of the vertex counting lemma at this scale).
    pub measured_t: usize,
    pub collection_size: usize,
    pub codegree_cap: usize,
}

impl BlowupCertificate {
    /// Host edges of the expanded blow-up: every consecutive pair of r-sets
    /// along every connector contributes its full biclique.
    pub fn expanded_edges(&self) -> Vec<(usize, usize)> {
        let mut out = BTreeSet::new();
        for connector in &self.base.paths {
            for e in connector.vertices.windows(2) {
                let (sa, sb) = (&self.rsets[&e[0]], &self.rsets[&e[1]]);
                for &x in sa {
                    for &y in sb {
                        out.insert((x.min(y), x.max(y)));
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

/// End-to-end blow-up subdivision search.
pub fn find_blowup_subdivision(
    g: &Graph,
    r: usize,
    m: usize,
    params: &PipelineParams,
    opts: &BlowupOptions,
    seed: u64,
) -> Result<BlowupCertificate, BlowupError> {
    let col = build_krr_collection(
        g,
        r,
        opts.cap,
        opts.budget,
        derive_seed(seed, "collection", &[]),
    )?;
    let aux = auxiliary_graph(&col);
    if aux.graph.n() < 2 * m {
        return Err(BlowupError::AuxiliaryTooSmall(aux.graph.n()));
    }
    let intersections = intersection_relation_check(&aux, opts.t_bound.unwrap_or(0));
    if let Some(t) = opts.t_bound {
        if intersections.max_count > t {
            return Err(BlowupError::IntersectionBoundExceeded {
                found: intersections.max_count,
                bound: t,
            });
        }
    }
    let (mut base, _expander) = engine_search_rsets(&aux.graph, &aux.rsets, m, params, seed)?;
    base.evidence.notes.push(format!(
        "auxiliary graph: {} r-sets, {} copies (cap {}, truncated: {})",
        aux.graph.n(),
        col.copies.len(),
        opts.cap,
        col.truncated
    ));
    let mut used: BTreeSet<usize> = base.branch_vertices.iter().copied().collect();
    for c in &base.paths {
        used.extend(c.vertices.iter().copied());
    }
    let rsets: BTreeMap<usize, Vec<usize>> = used
        .into_iter()
        .map(|v| (v, aux.rsets[v].clone()))
        .collect();
    let cert = BlowupCertificate {
        r,
        base,
        rsets,
        measured_t: intersections.max_count,
        collection_size: col.copies.len(),
        codegree_cap: col.codegree_cap,
    };
    verify_blowup(g, &cert).map_err(|f| {
        BlowupError::Subdiv(SubdivError::Internal(format!(
            "self-verification failed: {f:?}"
        )))
    })?;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowupVerifyFailure {
    MissingRSet { aux_vertex: usize },
    WrongRSetSize { aux_vertex: usize, size: usize },
    RSetOverlap { a: usize, b: usize },
    MissingBicliqueEdge { u: usize, v: usize },
    BaseStructure(String),
}

/// Checks a blow-up certificate against the host graph: the auxiliary-level
/// subdivision structure, pairwise disjointness of all used r-sets, and
/// completeness of every consecutive biclique.
pub fn verify_blowup(g: &Graph, cert: &BlowupCertificate) -> Result<(), BlowupVerifyFailure> {
    // Base structure: branch distinctness, path counts, endpoints, interior
    // disjointness (at the auxiliary level).
    let m = cert.base.branch_vertices.len();
    let expected = m * (m - 1) / 2;
    if cert.base.paths.len() != expected {
        return Err(BlowupVerifyFailure::BaseStructure(format!(
            "expected {expected} connectors, found {}",
            cert.base.paths.len()
        )));
    }
    let z: BTreeSet<usize> = cert.base.branch_vertices.iter().copied().collect();
    if z.len() != m {
        return Err(BlowupVerifyFailure::BaseStructure(
            "duplicate branch vertex".into(),
        ));
    }
    let mut interior_seen: BTreeSet<usize> = BTreeSet::new();
    let mut pairs_seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for connector in &cert.base.paths {
        let (a, b) = connector.endpoints;
        let w = &connector.vertices;
        let key = (a.min(b), a.max(b));
        if !z.contains(&a) || !z.contains(&b) || a == b || !pairs_seen.insert(key) {
            return Err(BlowupVerifyFailure::BaseStructure(format!(
                "bad endpoints {a}, {b}"
            )));
        }
        if w.len() < 2 || w[0] != a || *w.last().unwrap() != b {
            return Err(BlowupVerifyFailure::BaseStructure(format!(
                "path does not join {a} and {b}"
            )));
        }
        for &v in &w[1..w.len() - 1] {
            if z.contains(&v) || !interior_seen.insert(v) {
                return Err(BlowupVerifyFailure::BaseStructure(format!(
                    "interior vertex {v} reused"
                )));
            }
        }
    }
    // Every used auxiliary vertex carries an r-set of the right size.
    let mut used: BTreeSet<usize> = z.clone();
    for connector in &cert.base.paths {
        used.extend(connector.vertices.iter().copied());
    }
    for &v in &used {
        match cert.rsets.get(&v) {
            None => return Err(BlowupVerifyFailure::MissingRSet { aux_vertex: v }),
            Some(s) if s.len() != cert.r => {
                return Err(BlowupVerifyFailure::WrongRSetSize {
                    aux_vertex: v,
                    size: s.len(),
                })
            }
            Some(_) => {}
        }
    }
    // Pairwise disjoint r-sets over everything used.
    let mut host_owner: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in &used {
        for &h in &cert.rsets[&v] {
            if let Some(&other) = host_owner.get(&h) {
                return Err(BlowupVerifyFailure::RSetOverlap { a: other, b: v });
            }
            host_owner.insert(h, v);
        }
    }
    // Every consecutive pair along every connector spans a complete K_{r,r}.
    for connector in &cert.base.paths {
        for e in connector.vertices.windows(2) {
            let (sa, sb) = (&cert.rsets[&e[0]], &cert.rsets[&e[1]]);
            for &x in sa {
                for &y in sb {
                    if !g.has_edge(x, y) {
                        return Err(BlowupVerifyFailure::MissingBicliqueEdge { u: x, v: y });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Convenience wrapper for the r = 1 equivalence: the plain pipeline run on
/// the same seed and parameters.
pub fn plain_reference(
    g: &Graph,
    m: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<SubdivisionCertificate, SubdivError> {
    find_subdivision_plain(g, m, params, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete_bipartite, random_graph};

    #[test]
    fn r1_collection_is_the_edge_set() {
        let g = random_graph(20, 0.4, 3);
        let col = build_krr_collection(&g, 1, usize::MAX - 1, 100_000, 0).unwrap();
        assert_eq!(col.copies.len(), g.m());
        assert!(!col.truncated);
        let aux = auxiliary_graph(&col);
        // Isolated vertices aside, the auxiliary graph is the graph itself.
        if g.min_degree() > 0 {
            assert_eq!(aux.graph.n(), g.n());
            let a: Vec<(usize, usize)> = aux.graph.edges().collect();
            let b: Vec<(usize, usize)> = g.edges().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn k44_biclique_count() {
        // K_{4,4} holds C(4,2)^2 = 36 copies of K_{2,2}; the auxiliary graph
        // has the 12 within-side 2-sets as vertices.
        let g = complete_bipartite(4, 4);
        let col = build_krr_collection(&g, 2, usize::MAX - 1, 100_000, 5).unwrap();
        assert_eq!(col.copies.len(), 36);
        let aux = auxiliary_graph(&col);
        assert_eq!(aux.graph.n(), 12);
        assert_eq!(aux.graph.m(), 36);
    }

    #[test]
    fn codegree_cap_is_enforced_and_rechecked() {
        let g = complete_bipartite(6, 6);
        for seed in 0..5 {
            let col = build_krr_collection(&g, 2, 3, 100_000, seed).unwrap();
            assert!(recheck_codegree(&col) <= 3);
            assert!(!col.copies.is_empty());
        }
        // Unlimited cap admits everything discovered.
        let col = build_krr_collection(&g, 2, usize::MAX - 1, 100_000, 0).unwrap();
        assert_eq!(col.copies.len(), col.discovered);
    }

    #[test]
    fn intersection_check_r1() {
        // r = 1: related iff equal, so at most one neighbour w of v equals u.
        let g = random_graph(16, 0.5, 7);
        let col = build_krr_collection(&g, 1, usize::MAX - 1, 100_000, 0).unwrap();
        let aux = auxiliary_graph(&col);
        let report = intersection_relation_check(&aux, 1);
        assert!(report.max_count <= 1);
        assert!(report.margin >= 0);
    }

    #[test]
    fn r1_pipeline_matches_plain_pipeline() {
        let g = random_graph(48, 0.5, 41);
        assert!(g.is_connected());
        let params = PipelineParams {
            k: 2,
            s: 2,
            mc_samples: 250,
            ..PipelineParams::desk(3)
        };
        let opts = BlowupOptions {
            cap: usize::MAX - 1,
            budget: 1_000_000,
            t_bound: None,
        };
        for seed in [1u64, 2, 3] {
            let blow = find_blowup_subdivision(&g, 1, 3, &params, &opts, seed);
            let plain = plain_reference(&g, 3, &params, seed);
            match (blow, plain) {
                (Ok(b), Ok(p)) => {
                    assert_eq!(
                        b.base.branch_vertices, p.branch_vertices,
                        "branch sets differ at seed {seed}"
                    );
                    let expanded = b.expanded_edges();
                    let mut plain_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
                    for c in &p.paths {
                        for e in c.vertices.windows(2) {
                            plain_edges.insert((e[0].min(e[1]), e[0].max(e[1])));
                        }
                    }
                    assert_eq!(expanded, plain_edges.into_iter().collect::<Vec<_>>());
                }
                (Err(_), Err(_)) => {}
                (b, p) => panic!("pipelines disagree at seed {seed}: {b:?} vs {p:?}"),
            }
        }
    }

    #[test]
    fn r2_pipeline_on_dense_host() {
        let g = random_graph(60, 0.5, 23);
        let params = PipelineParams {
            k: 4,
            s: 1,
            mc_samples: 150,
            max_rounds: 800,
            ..PipelineParams::desk(3)
        };
        let opts = BlowupOptions {
            cap: 8,
            budget: 60_000,
            t_bound: None,
        };
        let mut ok = 0;
        for seed in 0..4 {
            if let Ok(cert) = find_blowup_subdivision(&g, 2, 3, &params, &opts, seed) {
                verify_blowup(&g, &cert).unwrap();
                // Blow-up theta property: all used r-sets pairwise disjoint.
                let mut hosts: Vec<usize> = cert.rsets.values().flatten().copied().collect();
                let total = hosts.len();
                hosts.sort_unstable();
                hosts.dedup();
                assert_eq!(hosts.len(), total);
                ok += 1;
            }
        }
        assert!(ok >= 3, "only {ok} of 4 seeds succeeded");
    }

    #[test]
    fn verifier_rejects_tampering() {
        let g = random_graph(60, 0.5, 23);
        let params = PipelineParams {
            k: 4,
            s: 1,
            mc_samples: 150,
            max_rounds: 800,
            ..PipelineParams::desk(3)
        };
        let opts = BlowupOptions {
            cap: 8,
            budget: 60_000,
            t_bound: None,
        };
        let cert = (0..10)
            .find_map(|seed| find_blowup_subdivision(&g, 2, 3, &params, &opts, seed).ok())
            .expect("some seed succeeds");

        // Overlapping r-sets.
        let mut bad = cert.clone();
        let keys: Vec<usize> = bad.rsets.keys().copied().collect();
        let donor = bad.rsets[&keys[0]].clone();
        bad.rsets.insert(keys[1], donor);
        assert!(matches!(
            verify_blowup(&g, &bad),
            Err(BlowupVerifyFailure::RSetOverlap { .. })
        ));

        // A missing biclique edge: point an r-set at non-adjacent hosts.
        let mut bad = cert.clone();
        let interior = cert
            .base
            .paths
            .iter()
            .flat_map(|c| c.vertices[1..c.vertices.len() - 1].iter())
            .next()
            .copied()
            .expect("some interior vertex");
        let mut fake = bad.rsets[&interior].clone();
        // Find a host vertex that breaks at least one biclique edge.
        let replacement = (0..g.n())
            .find(|&v| {
                if bad.rsets.values().any(|s| s.contains(&v)) {
                    return false;
                }
                let mut trial = fake.clone();
                trial[0] = v;
                let mut test_cert = bad.clone();
                test_cert.rsets.insert(interior, trial);
                matches!(
                    verify_blowup(&g, &test_cert),
                    Err(BlowupVerifyFailure::MissingBicliqueEdge { .. })
                )
            })
            .expect("some replacement breaks an edge");
        fake[0] = replacement;
        bad.rsets.insert(interior, fake);
        assert!(matches!(
            verify_blowup(&g, &bad),
            Err(BlowupVerifyFailure::MissingBicliqueEdge { .. })
        ));
    }
}
