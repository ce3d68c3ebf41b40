//! Rainbow-path machinery and end-to-end rainbow K_m-subdivision search.
//!
//! The search pipeline: take a spanning bipartite subgraph with at least half
//! the edges, extract an almost-regular expander from it, screen same-side
//! vertex pairs by their degenerate-walk fraction, pick branch vertices
//! greedily among pairwise-good pairs (the Turán step), and connect each
//! branch pair by a short rainbow path avoiding everything used so far.
//! The same engine runs with three degeneracy notions: colours + vertices
//! (rainbow subdivisions), vertices only (plain subdivisions), and r-set
//! intersection (the blow-up pipeline on an auxiliary graph).

use crate::expander::{self, AlmostRegularOpts, ExpanderCertificate, ExpanderError};
use crate::graph::{ColouredGraph, Graph, GraphError};
use crate::params::{derive_seed, reference_params, ParamSheet, PipelineParams};
use crate::paths::{concatenation_is_rainbow_cycle, is_rainbow_path, shortcut_to_path, Walk};
use crate::walkcount::{sample_walk, target_counts, wilson_interval, TargetCounts, WalkError};
use num_traits::Zero;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubdivError {
    #[error("no walk of the requested length between the endpoints")]
    NoWalk,
    #[error(
        "sampling rounds exhausted after {rounds} rounds (measured bad fraction {bad_fraction:.3})"
    )]
    RoundsExhausted { rounds: usize, bad_fraction: f64 },
    #[error("no usable pair found among the candidates")]
    NoGoodPair,
    #[error("could not assemble {wanted} branch vertices over pairwise good pairs")]
    NoCliqueOfGoodPairs { wanted: usize, found: usize },
    #[error("colour replacement did not stabilize within the {0} iteration cap")]
    IterationCapExceeded(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("stage for branch pair #{pair} failed: {source}")]
    StageFailed {
        pair: usize,
        #[source]
        source: Box<SubdivError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Expander(#[from] ExpanderError),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

// ---------------------------------------------------------------------------
// Avoid sets and reach sets
// ---------------------------------------------------------------------------

/// Vertices and colours that paths must stay clear of.
#[derive(Debug, Clone, Default)]
pub struct AvoidSet {
    pub vertices: BTreeSet<usize>,
    pub colours: BTreeSet<usize>,
}

impl AvoidSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Size |F| as the lemmas count it: vertices plus colours.
    pub fn len(&self) -> usize {
        self.vertices.len() + self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.colours.is_empty()
    }

    /// Absorbs a path: its vertices and its edge colours.
    pub fn absorb_path(&mut self, cg: &ColouredGraph, walk: &[usize]) {
        self.vertices.extend(walk.iter().copied());
        for e in walk.windows(2) {
            if let Some(c) = cg.colour(e[0], e[1]) {
                self.colours.insert(c);
            }
        }
    }
}

/// One designated rainbow path per reached vertex.
#[derive(Debug, Clone)]
pub struct ReachSet {
    pub source: usize,
    pub path_of: BTreeMap<usize, Walk>,
}

impl ReachSet {
    pub fn size(&self) -> usize {
        self.path_of.len()
    }

    pub fn reached(&self) -> Vec<usize> {
        self.path_of.keys().copied().collect()
    }

    /// Colour usage across all designated paths.
    pub fn colour_usage(&self, cg: &ColouredGraph) -> BTreeMap<usize, usize> {
        let mut usage = BTreeMap::new();
        for walk in self.path_of.values() {
            for e in walk.windows(2) {
                if let Some(c) = cg.colour(e[0], e[1]) {
                    *usage.entry(c).or_insert(0) += 1;
                }
            }
        }
        usage
    }
}

/// Layered greedy growth: for `ell + 1` rounds, extend every reached vertex
/// along edges whose colour is unused on its designated path and clear of the
/// avoid set. Deterministic scan order (vertex index, then neighbour index).
/// Reached sets are monotone in `ell` under this order. Small reach sets are
/// a valid outcome, not an error: the underlying reachability lemma holds
/// under degree hypotheses this routine does not check.
pub fn rainbow_reach(cg: &ColouredGraph, x: usize, avoid: &AvoidSet, ell: usize) -> ReachSet {
    rainbow_reach_capped(cg, x, avoid, ell, None)
}

/// The growth behind [`rainbow_reach`], optionally refusing extensions that
/// would push any colour's path-usage count above `cap`.
fn rainbow_reach_capped(
    cg: &ColouredGraph,
    x: usize,
    avoid: &AvoidSet,
    ell: usize,
    cap: Option<usize>,
) -> ReachSet {
    let mut reach = ReachSet {
        source: x,
        path_of: BTreeMap::new(),
    };
    if avoid.vertices.contains(&x) {
        return reach;
    }
    reach.path_of.insert(x, vec![x]);
    let mut usage: HashMap<usize, usize> = HashMap::new();
    for _round in 0..=ell {
        let frontier: Vec<usize> = reach.path_of.keys().copied().collect();
        for &u in &frontier {
            let path_u = reach.path_of[&u].clone();
            let mut colours_on_path: Vec<usize> = Vec::with_capacity(path_u.len());
            for e in path_u.windows(2) {
                colours_on_path.push(cg.colour(e[0], e[1]).unwrap());
            }
            for (w, c) in cg.coloured_neighbours(u) {
                if reach.path_of.contains_key(&w)
                    || avoid.vertices.contains(&w)
                    || avoid.colours.contains(&c)
                    || colours_on_path.contains(&c)
                {
                    continue;
                }
                // Adding w's path increments the usage of every colour along
                // it; respect the cap for each of them.
                if let Some(cap) = cap {
                    let fits = colours_on_path
                        .iter()
                        .chain([&c])
                        .all(|col| usage.get(col).copied().unwrap_or(0) < cap);
                    if !fits {
                        continue;
                    }
                }
                for &col in colours_on_path.iter().chain([&c]) {
                    *usage.entry(col).or_insert(0) += 1;
                }
                let mut path_w = path_u.clone();
                path_w.push(w);
                reach.path_of.insert(w, path_w);
            }
        }
    }
    reach
}

#[derive(Debug)]
pub struct RobustReach {
    pub reach: ReachSet,
    pub banned_colours: Vec<usize>,
    pub iterations: usize,
    /// The per-colour usage cap `floor(n / q)`.
    pub cap: usize,
}

/// Reach with a usage cap: run the layered growth, ban any colour used on
/// more than `n/q` designated paths, and rerun until no colour is saturated.
/// Reruns enforce the cap during growth so replacement paths spread over
/// alternative routes instead of piling onto the next hub and collapsing the
/// system. The ban list plays the role of the bad-colour set in the
/// maximality argument and is capped at `2 q ell` like there.
pub fn rainbow_reach_robust(
    cg: &ColouredGraph,
    x: usize,
    avoid: &AvoidSet,
    ell: usize,
    q: usize,
) -> Result<RobustReach, SubdivError> {
    if q == 0 {
        return Err(SubdivError::PreconditionViolated(
            "q must be positive".into(),
        ));
    }
    let n = cg.n();
    let cap = n / q;
    let ban_cap = 2 * q * ell.max(1);
    let mut banned: BTreeSet<usize> = BTreeSet::new();
    let mut iterations = 0usize;
    let mut enforce_cap = false;
    loop {
        iterations += 1;
        let mut avoid_now = avoid.clone();
        avoid_now.colours.extend(banned.iter().copied());
        let reach = rainbow_reach_capped(
            cg,
            x,
            &avoid_now,
            ell,
            if enforce_cap { Some(cap) } else { None },
        );
        let saturated: Vec<usize> = reach
            .colour_usage(cg)
            .into_iter()
            .filter(|&(_, count)| count > cap)
            .map(|(c, _)| c)
            .collect();
        if saturated.is_empty() {
            return Ok(RobustReach {
                reach,
                banned_colours: banned.into_iter().collect(),
                iterations,
                cap,
            });
        }
        banned.extend(saturated);
        enforce_cap = true;
        if banned.len() > ban_cap {
            return Err(SubdivError::IterationCapExceeded(ban_cap));
        }
    }
}

// ---------------------------------------------------------------------------
// Theta sampling
// ---------------------------------------------------------------------------

/// Samples `s` independent uniform k-walks from `x` to `y` per round and
/// accepts the batch once no ordered pair of distinct walks concatenates into
/// a bad closed walk. Succeeds with positive probability per round whenever
/// the bad family is smaller than a `1/s^2` fraction. A single walk is
/// accepted unconditionally.
#[allow(clippy::too_many_arguments)]
pub fn theta_sampler<F>(
    g: &Graph,
    x: usize,
    y: usize,
    k: usize,
    s: usize,
    bad: F,
    seed: u64,
    max_rounds: usize,
) -> Result<Vec<Walk>, SubdivError>
where
    F: Fn(&[usize], &[usize]) -> bool,
{
    if s == 0 {
        return Err(SubdivError::PreconditionViolated(
            "s must be positive".into(),
        ));
    }
    let counts = target_counts(g, y, k);
    if counts.count(k, x).is_zero() {
        return Err(SubdivError::NoWalk);
    }
    let mut rng = crate::generators::rng_from_seed(seed);
    let mut pairs_checked = 0usize;
    let mut pairs_bad = 0usize;
    for _ in 0..max_rounds {
        let walks: Result<Vec<Walk>, WalkError> = (0..s)
            .map(|_| sample_walk(g, &counts, x, &mut rng))
            .collect();
        let walks = walks?;
        let mut ok = true;
        'outer: for i in 0..s {
            for j in 0..s {
                if i == j {
                    continue;
                }
                pairs_checked += 1;
                if bad(&walks[i], &walks[j]) {
                    pairs_bad += 1;
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            return Ok(walks);
        }
    }
    Err(SubdivError::RoundsExhausted {
        rounds: max_rounds,
        bad_fraction: if pairs_checked == 0 {
            0.0
        } else {
            pairs_bad as f64 / pairs_checked as f64
        },
    })
}

/// `s` pairwise colour-disjoint, internally vertex-disjoint rainbow k-paths
/// from `x` to `y`, obtained by theta sampling against the rainbow-cycle
/// oracle. Pairwise rainbow concatenation forces each walk to be a rainbow
/// path and the batch to be disjoint; for `s = 1` the path condition is
/// checked directly.
pub fn disjoint_rainbow_paths(
    cg: &ColouredGraph,
    x: usize,
    y: usize,
    k: usize,
    s: usize,
    seed: u64,
    max_rounds: usize,
) -> Result<Vec<Walk>, SubdivError> {
    let g = cg.graph();
    if s == 1 {
        let counts = target_counts(g, y, k);
        if counts.count(k, x).is_zero() {
            return Err(SubdivError::NoWalk);
        }
        let mut rng = crate::generators::rng_from_seed(seed);
        let mut bad = 0usize;
        for round in 1..=max_rounds {
            let w = sample_walk(g, &counts, x, &mut rng)?;
            if is_rainbow_path(cg, &w) {
                return Ok(vec![w]);
            }
            bad = round;
        }
        return Err(SubdivError::RoundsExhausted {
            rounds: max_rounds,
            bad_fraction: bad as f64 / max_rounds as f64,
        });
    }
    let walks = theta_sampler(
        g,
        x,
        y,
        k,
        s,
        |p, q| !concatenation_is_rainbow_cycle(cg, p, q),
        seed,
        max_rounds,
    )?;
    for w in &walks {
        if !is_rainbow_path(cg, w) {
            return Err(SubdivError::Internal(
                "accepted batch contains a non-path".into(),
            ));
        }
    }
    for (i, p) in walks.iter().enumerate() {
        for q in walks.iter().skip(i + 1) {
            let pi: BTreeSet<usize> = p[1..p.len() - 1].iter().copied().collect();
            let qi: BTreeSet<usize> = q[1..q.len() - 1].iter().copied().collect();
            if pi.intersection(&qi).next().is_some() {
                return Err(SubdivError::Internal("interior vertices collide".into()));
            }
            let pc: BTreeSet<usize> = p
                .windows(2)
                .map(|e| cg.colour(e[0], e[1]).unwrap())
                .collect();
            let qc: BTreeSet<usize> = q
                .windows(2)
                .map(|e| cg.colour(e[0], e[1]).unwrap())
                .collect();
            if pc.intersection(&qc).next().is_some() {
                return Err(SubdivError::Internal("colour sets collide".into()));
            }
        }
    }
    Ok(walks)
}

// ---------------------------------------------------------------------------
// Rainbow connect
// ---------------------------------------------------------------------------

/// Connects `x` to `y` by a rainbow path of length at most `2(ell+1) + k`
/// avoiding the given vertices and colours. Builds capped reach sets from
/// both endpoints, discards colour-bad pairs (shared colours on the two
/// designated paths) and s-bad pairs (degenerate fraction above `1/s^2`,
/// Monte-Carlo screened; unknown verdicts are skipped, never trusted), then
/// splices reach-path + theta-path + reach-path and shortcuts the walk to a
/// path. The graph is used as the expander the claim assumes; pass the
/// certificate along in the surrounding pipeline.
pub fn rainbow_connect(
    cg: &ColouredGraph,
    x: usize,
    y: usize,
    avoid: &AvoidSet,
    params: &PipelineParams,
    seed: u64,
) -> Result<Walk, SubdivError> {
    if x == y {
        return Err(SubdivError::PreconditionViolated(
            "endpoints must differ".into(),
        ));
    }
    let g = cg.graph();
    let bip = g.bipartition()?;
    let reach_x = rainbow_reach_robust(cg, x, avoid, params.ell, params.q)?;
    // Direct hit: the designated path already connects x to y.
    if let Some(path) = reach_x.reach.path_of.get(&y) {
        return Ok(path.clone());
    }
    let reach_y = rainbow_reach_robust(cg, y, avoid, params.ell, params.q)?;
    let common: Vec<usize> = reach_x
        .reach
        .path_of
        .keys()
        .filter(|u| reach_y.reach.path_of.contains_key(u) && bip.in_x(**u))
        .copied()
        .collect();
    if common.len() < 2 {
        return Err(SubdivError::NoGoodPair);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &u in &common {
        for &v in &common {
            if u != v {
                pairs.push((u, v));
            }
        }
    }
    let mut rng =
        crate::generators::rng_from_seed(derive_seed(seed, "connect-pairs", &[x as u64, y as u64]));
    pairs.shuffle(&mut rng);
    let threshold = 1.0 / (params.s * params.s) as f64;
    let mut counts_cache: HashMap<usize, TargetCounts> = HashMap::new();
    for (attempt, &(u, v)) in pairs.iter().take(400).enumerate() {
        let p_u = &reach_x.reach.path_of[&u];
        let q_v = &reach_y.reach.path_of[&v];
        let colours_pu: BTreeSet<usize> = p_u
            .windows(2)
            .map(|e| cg.colour(e[0], e[1]).unwrap())
            .collect();
        let colours_qv: BTreeSet<usize> = q_v
            .windows(2)
            .map(|e| cg.colour(e[0], e[1]).unwrap())
            .collect();
        // Colour-bad pair: a colour appears on both designated paths.
        if colours_pu.intersection(&colours_qv).next().is_some() {
            continue;
        }
        let counts = counts_cache
            .entry(v)
            .or_insert_with(|| target_counts(g, v, params.k));
        if counts.count(params.k, u).is_zero() {
            continue;
        }
        // s-bad screen via Monte-Carlo.
        let mc_seed = derive_seed(seed, "connect-good", &[u as u64, v as u64]);
        let mut mc_rng = crate::generators::rng_from_seed(mc_seed);
        let mut bad = 0usize;
        for _ in 0..params.mc_samples {
            let p = sample_walk(g, counts, u, &mut mc_rng)?;
            let q = sample_walk(g, counts, u, &mut mc_rng)?;
            if !concatenation_is_rainbow_cycle(cg, &p, &q) {
                bad += 1;
            }
        }
        let (_, hi) = wilson_interval(bad, params.mc_samples);
        if hi > threshold {
            continue;
        }
        // Theta step: one rainbow path u..v clear of P(u), Q(v) and the
        // avoid set.
        let t_seed = derive_seed(seed, "connect-theta", &[u as u64, v as u64, attempt as u64]);
        let mut t_rng = crate::generators::rng_from_seed(t_seed);
        for _ in 0..params.max_rounds {
            let t = sample_walk(g, counts, u, &mut t_rng)?;
            if !is_rainbow_path(cg, &t) {
                continue;
            }
            if t.iter().any(|w| avoid.vertices.contains(w)) {
                continue;
            }
            let t_cols: BTreeSet<usize> = t
                .windows(2)
                .map(|e| cg.colour(e[0], e[1]).unwrap())
                .collect();
            if t_cols.iter().any(|c| {
                avoid.colours.contains(c) || colours_pu.contains(c) || colours_qv.contains(c)
            }) {
                continue;
            }
            // Splice P(u) + T + reverse(Q(v)): colour-disjoint rainbow
            // pieces make a rainbow walk; shortcutting yields a rainbow path.
            let mut walk = p_u.clone();
            walk.extend(t.iter().skip(1));
            walk.extend(q_v.iter().rev().skip(1));
            let path = shortcut_to_path(&walk);
            debug_assert!(is_rainbow_path(cg, &path));
            debug_assert_eq!(path.first(), Some(&x));
            debug_assert_eq!(path.last(), Some(&y));
            return Ok(path);
        }
    }
    Err(SubdivError::NoGoodPair)
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Connector {
    pub endpoints: (usize, usize),
    pub vertices: Vec<usize>,
    pub colours: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertParams {
    pub m: usize,
    pub k: usize,
    pub s: usize,
    pub seed: u64,
    /// Upper bound each connector length is verified against.
    pub length_bound: usize,
    pub sheet: Option<ParamSheet>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertEvidence {
    pub mode: String,
    pub expander: Option<ExpanderCertificate>,
    pub notes: Vec<String>,
}

/// A subdivision with its colour/vertex-disjointness witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdivisionCertificate {
    pub branch_vertices: Vec<usize>,
    pub paths: Vec<Connector>,
    pub colours: Vec<usize>,
    pub params: CertParams,
    pub evidence: CertEvidence,
}

impl SubdivisionCertificate {
    /// Rewrites all vertex labels through `map` (local index -> new label).
    pub fn relabel(&self, map: &[usize]) -> SubdivisionCertificate {
        let mut out = self.clone();
        out.branch_vertices = out.branch_vertices.iter().map(|&v| map[v]).collect();
        for c in &mut out.paths {
            c.endpoints = (map[c.endpoints.0], map[c.endpoints.1]);
            c.vertices = c.vertices.iter().map(|&v| map[v]).collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyFailure {
    DuplicateBranchVertex {
        vertex: usize,
    },
    WrongPathCount {
        expected: usize,
        found: usize,
    },
    EndpointMismatch {
        pair: (usize, usize),
    },
    MissingEdge {
        u: usize,
        v: usize,
    },
    ColourMismatch {
        u: usize,
        v: usize,
        recorded: usize,
        actual: usize,
    },
    RepeatedVertexInPath {
        vertex: usize,
    },
    ColourCollision {
        colour: usize,
    },
    VertexCollision {
        vertex: usize,
    },
    BranchInInterior {
        vertex: usize,
    },
    LengthExceeded {
        length: usize,
        bound: usize,
    },
}

fn verify_structure(
    g: &Graph,
    cert: &SubdivisionCertificate,
    colours_of: Option<&ColouredGraph>,
) -> Result<(), VerifyFailure> {
    let z: BTreeSet<usize> = cert.branch_vertices.iter().copied().collect();
    if z.len() != cert.branch_vertices.len() {
        let mut seen = BTreeSet::new();
        for &v in &cert.branch_vertices {
            if !seen.insert(v) {
                return Err(VerifyFailure::DuplicateBranchVertex { vertex: v });
            }
        }
    }
    let m = cert.branch_vertices.len();
    let expected = m * (m - 1) / 2;
    if cert.paths.len() != expected {
        return Err(VerifyFailure::WrongPathCount {
            expected,
            found: cert.paths.len(),
        });
    }
    let mut pairs_seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut colours_seen: BTreeMap<usize, ()> = BTreeMap::new();
    let mut interior_seen: BTreeSet<usize> = BTreeSet::new();
    for connector in &cert.paths {
        let (a, b) = connector.endpoints;
        let key = (a.min(b), a.max(b));
        if !z.contains(&a) || !z.contains(&b) || a == b || !pairs_seen.insert(key) {
            return Err(VerifyFailure::EndpointMismatch { pair: (a, b) });
        }
        let w = &connector.vertices;
        if w.len() < 2 || w[0] != a || *w.last().unwrap() != b {
            return Err(VerifyFailure::EndpointMismatch { pair: (a, b) });
        }
        if w.len() - 1 > cert.params.length_bound {
            return Err(VerifyFailure::LengthExceeded {
                length: w.len() - 1,
                bound: cert.params.length_bound,
            });
        }
        let mut in_path = BTreeSet::new();
        for &v in w {
            if !in_path.insert(v) {
                return Err(VerifyFailure::RepeatedVertexInPath { vertex: v });
            }
        }
        if let Some(cg) = colours_of {
            if connector.colours.len() != w.len() - 1 {
                return Err(VerifyFailure::EndpointMismatch { pair: (a, b) });
            }
            for (e, &c) in w.windows(2).zip(connector.colours.iter()) {
                match cg.colour(e[0], e[1]) {
                    None => return Err(VerifyFailure::MissingEdge { u: e[0], v: e[1] }),
                    Some(actual) if actual != c => {
                        return Err(VerifyFailure::ColourMismatch {
                            u: e[0],
                            v: e[1],
                            recorded: c,
                            actual,
                        })
                    }
                    Some(_) => {}
                }
                if colours_seen.insert(c, ()).is_some() {
                    return Err(VerifyFailure::ColourCollision { colour: c });
                }
            }
        } else {
            for e in w.windows(2) {
                if !g.has_edge(e[0], e[1]) {
                    return Err(VerifyFailure::MissingEdge { u: e[0], v: e[1] });
                }
            }
        }
        for &v in &w[1..w.len() - 1] {
            if z.contains(&v) {
                return Err(VerifyFailure::BranchInInterior { vertex: v });
            }
            if !interior_seen.insert(v) {
                return Err(VerifyFailure::VertexCollision { vertex: v });
            }
        }
    }
    Ok(())
}

/// Checks a rainbow subdivision certificate against the host graph: every
/// recorded edge and colour, rainbowness of the union, pairwise internal
/// disjointness, interiors clear of the branch set, and length bounds.
pub fn verify_subdivision(
    cg: &ColouredGraph,
    cert: &SubdivisionCertificate,
) -> Result<(), VerifyFailure> {
    verify_structure(cg.graph(), cert, Some(cg))
}

/// The colour-free variant for plain (uncoloured) subdivisions.
pub fn verify_subdivision_plain(
    g: &Graph,
    cert: &SubdivisionCertificate,
) -> Result<(), VerifyFailure> {
    verify_structure(g, cert, None)
}

// ---------------------------------------------------------------------------
// The search engine
// ---------------------------------------------------------------------------

/// What makes a closed walk degenerate, and therefore what the connectors
/// must keep disjoint.
pub enum Degeneracy<'a> {
    /// Repeated vertex or repeated colour (rainbow subdivisions).
    Rainbow(&'a ColouredGraph),
    /// Repeated vertex only (plain subdivisions).
    VertexOnly,
    /// Intersecting r-sets, one r-set per vertex (blow-up pipeline).
    RSets(&'a [Vec<usize>]),
}

impl Degeneracy<'_> {
    fn mode_name(&self) -> &'static str {
        match self {
            Degeneracy::Rainbow(_) => "rainbow",
            Degeneracy::VertexOnly => "vertex-disjoint",
            Degeneracy::RSets(_) => "r-set-disjoint",
        }
    }
}

fn cycle_vertices(p: &[usize], q: &[usize]) -> Vec<usize> {
    let k = p.len() - 1;
    let mut verts: Vec<usize> = p[..k].to_vec();
    verts.extend(q[1..].iter().rev());
    verts
}

fn has_repeat(mut verts: Vec<usize>) -> bool {
    let n = verts.len();
    verts.sort_unstable();
    verts.dedup();
    verts.len() != n
}

fn rsets_intersect(sets: &[Vec<usize>], verts: &[usize]) -> bool {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for &v in verts {
        for &h in &sets[v] {
            if !seen.insert(h) {
                return true;
            }
        }
    }
    false
}

fn cycle_is_bad(mode: &Degeneracy, p: &[usize], q: &[usize]) -> bool {
    match mode {
        Degeneracy::Rainbow(cg) => !concatenation_is_rainbow_cycle(cg, p, q),
        Degeneracy::VertexOnly => has_repeat(cycle_vertices(p, q)),
        Degeneracy::RSets(sets) => rsets_intersect(sets, &cycle_vertices(p, q)),
    }
}

/// Spanning bipartite subgraph with at least half the edges: seeded random
/// sides improved by greedy vertex moves until every vertex has at least as
/// many cross neighbours as same-side ones.
pub fn bipartite_half(g: &Graph, seed: u64) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut rng = crate::generators::rng_from_seed(seed);
    let mut side: Vec<bool> = (0..n).map(|_| rand::Rng::gen_bool(&mut rng, 0.5)).collect();
    loop {
        let mut moved = false;
        for v in 0..n {
            let cross = g
                .neighbours(v)
                .iter()
                .filter(|&&w| side[w] != side[v])
                .count();
            let same = g.degree(v) - cross;
            if same > cross {
                side[v] = !side[v];
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    g.edges().filter(|&(u, v)| side[u] != side[v]).collect()
}

struct EngineResult {
    branch: Vec<usize>,
    connectors: Vec<(usize, usize, Walk)>,
    expander: ExpanderCertificate,
    notes: Vec<String>,
}

/// The shared pipeline: bipartite half, almost-regular expander, good-pair
/// screening, greedy branch selection, greedy connector assembly. Vertices
/// in the result refer to the INPUT graph's labels.
fn engine_search(
    g: &Graph,
    mode: &Degeneracy,
    m: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<EngineResult, SubdivError> {
    if m < 2 {
        return Err(SubdivError::PreconditionViolated(
            "m must be at least 2".into(),
        ));
    }
    let mut notes = Vec::new();
    // Spanning bipartite subgraph with at least half the edges.
    let cross = bipartite_half(g, derive_seed(seed, "bipartite-half", &[]));
    notes.push(format!(
        "bipartite half keeps {}/{} edges",
        cross.len(),
        g.m()
    ));
    if 2 * cross.len() < g.m() {
        return Err(SubdivError::Internal(
            "greedy cut below half the edges".into(),
        ));
    }
    let half = g.spanning(&cross)?;
    // Almost-regular expander extraction.
    let opts = AlmostRegularOpts {
        relaxed: params.relaxed,
        mu_cap: params.mu_cap,
        exact_max_n: expander::EXACT_SUBSET_MAX_N,
    };
    let outcome = expander::almost_regular_expander(
        &half,
        params.eps,
        derive_seed(seed, "expander", &[]),
        &opts,
    )?;
    let h = &outcome.graph;
    let map = &outcome.orig; // h label -> input label
    notes.push(format!(
        "expander: n = {}, avg degree = {}, mu = {:.2}",
        h.n(),
        h.average_degree(),
        outcome.mu
    ));
    // Restrict the degeneracy data to the subgraph.
    let sub_cg: Option<ColouredGraph> = match mode {
        Degeneracy::Rainbow(cg) => {
            let mut edges = Vec::new();
            for (u, v) in h.edges() {
                let c = cg
                    .colour(map[u], map[v])
                    .ok_or_else(|| SubdivError::Internal("colour lost during extraction".into()))?;
                edges.push((u, v, c));
            }
            Some(ColouredGraph::from_coloured_edges(h.n(), &edges).map_err(SubdivError::Graph)?)
        }
        _ => None,
    };
    let sub_rsets: Option<Vec<Vec<usize>>> = match mode {
        Degeneracy::RSets(sets) => Some(map.iter().map(|&v| sets[v].clone()).collect()),
        _ => None,
    };
    let sub_mode = match mode {
        Degeneracy::Rainbow(_) => Degeneracy::Rainbow(sub_cg.as_ref().unwrap()),
        Degeneracy::VertexOnly => Degeneracy::VertexOnly,
        Degeneracy::RSets(_) => Degeneracy::RSets(sub_rsets.as_ref().unwrap()),
    };
    let bip = h.bipartition()?;
    // Greedy branch selection over pairwise-good pairs (the Turán step,
    // realized as greedy independent-set growth in the bad-pair graph).
    let threshold = 1.0 / (params.s * params.s) as f64;
    let mut order: Vec<usize> = bip.x.clone();
    let mut rng = crate::generators::rng_from_seed(derive_seed(seed, "branch-order", &[]));
    order.shuffle(&mut rng);
    let mut counts_cache: HashMap<usize, TargetCounts> = HashMap::new();
    let mut branch: Vec<usize> = Vec::new();
    for &cand in &order {
        if branch.len() == m {
            break;
        }
        // Branch r-sets must be pairwise disjoint from the start.
        if let Degeneracy::RSets(sets) = &sub_mode {
            let mut all: Vec<usize> = branch.iter().chain([&cand]).copied().collect();
            let total: usize = all.iter().map(|&v| sets[v].len()).sum();
            let mut hosts: Vec<usize> = all.drain(..).flat_map(|v| sets[v].clone()).collect();
            hosts.sort_unstable();
            hosts.dedup();
            if hosts.len() != total {
                continue;
            }
        }
        let mut ok = true;
        for &z in &branch {
            if !pair_is_good(
                h,
                &sub_mode,
                cand,
                z,
                params,
                threshold,
                seed,
                &mut counts_cache,
            )? {
                ok = false;
                break;
            }
        }
        if ok {
            branch.push(cand);
        }
    }
    if branch.len() < m {
        return Err(SubdivError::NoCliqueOfGoodPairs {
            wanted: m,
            found: branch.len(),
        });
    }
    branch.sort_unstable();
    notes.push(format!("branch vertices (expander labels): {branch:?}"));
    // Greedy connectors, pairs in lexicographic order.
    let mut used_vertices: BTreeSet<usize> = branch.iter().copied().collect();
    let mut used_colours: BTreeSet<usize> = BTreeSet::new();
    let mut occupied_hosts: BTreeSet<usize> = match &sub_mode {
        Degeneracy::RSets(sets) => branch
            .iter()
            .flat_map(|&v| sets[v].iter().copied())
            .collect(),
        _ => BTreeSet::new(),
    };
    let mut connectors: Vec<(usize, usize, Walk)> = Vec::new();
    let mut pair_index = 0usize;
    for i in 0..m {
        for j in (i + 1)..m {
            let (x, y) = (branch[i], branch[j]);
            let counts = counts_cache
                .entry(y)
                .or_insert_with(|| target_counts(h, y, params.k));
            let mut t_rng = crate::generators::rng_from_seed(derive_seed(
                seed,
                "connector",
                &[pair_index as u64],
            ));
            let budget = params.max_rounds * params.s;
            let mut accepted: Option<Walk> = None;
            let mut rounds = 0usize;
            for _ in 0..budget {
                rounds += 1;
                let w = sample_walk(h, counts, x, &mut t_rng)
                    .map_err(SubdivError::Walk)
                    .map_err(|e| SubdivError::StageFailed {
                        pair: pair_index,
                        source: Box::new(e),
                    })?;
                if connector_ok(
                    &sub_mode,
                    &w,
                    x,
                    y,
                    &used_vertices,
                    &used_colours,
                    &occupied_hosts,
                ) {
                    accepted = Some(w);
                    break;
                }
            }
            let Some(w) = accepted else {
                return Err(SubdivError::StageFailed {
                    pair: pair_index,
                    source: Box::new(SubdivError::RoundsExhausted {
                        rounds,
                        bad_fraction: 1.0,
                    }),
                });
            };
            // Absorb the connector into the avoid state.
            for &v in &w[1..w.len() - 1] {
                used_vertices.insert(v);
            }
            if let Degeneracy::Rainbow(cg) = &sub_mode {
                for e in w.windows(2) {
                    used_colours.insert(cg.colour(e[0], e[1]).unwrap());
                }
            }
            if let Degeneracy::RSets(sets) = &sub_mode {
                for &v in &w[1..w.len() - 1] {
                    occupied_hosts.extend(sets[v].iter().copied());
                }
            }
            connectors.push((x, y, w));
            pair_index += 1;
        }
    }
    // Map back to input labels.
    let branch: Vec<usize> = branch.iter().map(|&v| map[v]).collect();
    let connectors: Vec<(usize, usize, Walk)> = connectors
        .into_iter()
        .map(|(x, y, w)| {
            (
                map[x],
                map[y],
                w.into_iter().map(|v| map[v]).collect::<Vec<usize>>(),
            )
        })
        .collect();
    Ok(EngineResult {
        branch,
        connectors,
        expander: outcome.certificate,
        notes,
    })
}

#[allow(clippy::too_many_arguments)]
fn pair_is_good(
    h: &Graph,
    mode: &Degeneracy,
    u: usize,
    v: usize,
    params: &PipelineParams,
    threshold: f64,
    seed: u64,
    cache: &mut HashMap<usize, TargetCounts>,
) -> Result<bool, SubdivError> {
    let counts = cache
        .entry(v)
        .or_insert_with(|| target_counts(h, v, params.k));
    if counts.count(params.k, u).is_zero() {
        return Ok(false);
    }
    let mut rng =
        crate::generators::rng_from_seed(derive_seed(seed, "good-pair", &[u as u64, v as u64]));
    let mut bad = 0usize;
    for _ in 0..params.mc_samples {
        let p = sample_walk(h, counts, u, &mut rng)?;
        let q = sample_walk(h, counts, u, &mut rng)?;
        if cycle_is_bad(mode, &p, &q) {
            bad += 1;
        }
    }
    let (_, hi) = wilson_interval(bad, params.mc_samples);
    Ok(hi <= threshold)
}

fn connector_ok(
    mode: &Degeneracy,
    w: &[usize],
    x: usize,
    y: usize,
    used_vertices: &BTreeSet<usize>,
    used_colours: &BTreeSet<usize>,
    occupied_hosts: &BTreeSet<usize>,
) -> bool {
    debug_assert_eq!(w[0], x);
    debug_assert_eq!(*w.last().unwrap(), y);
    // A simple path whose interior avoids everything already used
    // (branch vertices included).
    if has_repeat(w.to_vec()) {
        return false;
    }
    let interior = &w[1..w.len() - 1];
    if interior.iter().any(|v| used_vertices.contains(v)) {
        return false;
    }
    match mode {
        Degeneracy::Rainbow(cg) => {
            if !is_rainbow_path(cg, w) {
                return false;
            }
            w.windows(2)
                .all(|e| !used_colours.contains(&cg.colour(e[0], e[1]).unwrap()))
        }
        Degeneracy::VertexOnly => true,
        Degeneracy::RSets(sets) => {
            let mut local: BTreeSet<usize> = BTreeSet::new();
            for &v in interior {
                for &hst in &sets[v] {
                    if occupied_hosts.contains(&hst) || !local.insert(hst) {
                        return false;
                    }
                }
            }
            true
        }
    }
}

fn assemble_certificate(
    result: EngineResult,
    colours_of: Option<&ColouredGraph>,
    m: usize,
    params: &PipelineParams,
    seed: u64,
    sheet: Option<ParamSheet>,
) -> SubdivisionCertificate {
    let mut colours_union: BTreeSet<usize> = BTreeSet::new();
    let paths: Vec<Connector> = result
        .connectors
        .iter()
        .map(|(x, y, w)| {
            let colours: Vec<usize> = match colours_of {
                Some(cg) => w
                    .windows(2)
                    .map(|e| {
                        let c = cg.colour(e[0], e[1]).unwrap();
                        colours_union.insert(c);
                        c
                    })
                    .collect(),
                None => Vec::new(),
            };
            Connector {
                endpoints: (*x, *y),
                vertices: w.clone(),
                colours,
            }
        })
        .collect();
    SubdivisionCertificate {
        branch_vertices: result.branch,
        paths,
        colours: colours_union.into_iter().collect(),
        params: CertParams {
            m,
            k: params.k,
            s: params.s,
            seed,
            length_bound: params.k,
            sheet,
        },
        evidence: CertEvidence {
            mode: format!("greedy-{}", Degeneracy::VertexOnly.mode_name()),
            expander: Some(result.expander),
            notes: result.notes,
        },
    }
}

/// End-to-end rainbow K_m-subdivision search. Returns a certificate that has
/// already passed [`verify_subdivision`] against the input graph.
pub fn find_subdivision(
    cg: &ColouredGraph,
    m: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<SubdivisionCertificate, SubdivError> {
    let sheet = ParamSheet {
        reference: reference_params(cg.n().max(2), params.eps, m, None),
        used: params.clone(),
        scale: None,
    };
    let mode = Degeneracy::Rainbow(cg);
    let result = engine_search(cg.graph(), &mode, m, params, seed)?;
    let mut cert = assemble_certificate(result, Some(cg), m, params, seed, Some(sheet));
    cert.evidence.mode = "greedy-rainbow".into();
    verify_subdivision(cg, &cert)
        .map_err(|f| SubdivError::Internal(format!("self-verification failed: {f:?}")))?;
    Ok(cert)
}

/// The colour-free pipeline (vertex-disjointness only); the blow-up search at
/// r = 1 must coincide with this bit for bit.
pub fn find_subdivision_plain(
    g: &Graph,
    m: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<SubdivisionCertificate, SubdivError> {
    let result = engine_search(g, &Degeneracy::VertexOnly, m, params, seed)?;
    let cert = assemble_certificate(result, None, m, params, seed, None);
    verify_subdivision_plain(g, &cert)
        .map_err(|f| SubdivError::Internal(format!("self-verification failed: {f:?}")))?;
    Ok(cert)
}

/// Blow-up entry point into the same engine (crate-internal).
pub(crate) fn engine_search_rsets(
    g: &Graph,
    rsets: &[Vec<usize>],
    m: usize,
    params: &PipelineParams,
    seed: u64,
) -> Result<(SubdivisionCertificate, ExpanderCertificate), SubdivError> {
    let mode = Degeneracy::RSets(rsets);
    let result = engine_search(g, &mode, m, params, seed)?;
    let expander = result.expander.clone();
    let mut cert = assemble_certificate(result, None, m, params, seed, None);
    cert.evidence.mode = "greedy-r-set-disjoint".into();
    Ok((cert, expander))
}

// ---------------------------------------------------------------------------
// Rooted subdivisions
// ---------------------------------------------------------------------------

/// The prepared working graph for rooted searches: the coloured expander
/// subgraph, its labels in the original graph, and the extraction evidence.
pub struct PreparedExpander {
    pub cg: ColouredGraph,
    pub orig: Vec<usize>,
    pub certificate: ExpanderCertificate,
}

/// Front half of the rainbow pipeline: bipartite half plus almost-regular
/// expander, with colours carried along.
pub fn prepare_rainbow_expander(
    cg: &ColouredGraph,
    params: &PipelineParams,
    seed: u64,
) -> Result<PreparedExpander, SubdivError> {
    let g = cg.graph();
    let cross = bipartite_half(g, derive_seed(seed, "bipartite-half", &[]));
    let half = g.spanning(&cross)?;
    let opts = AlmostRegularOpts {
        relaxed: params.relaxed,
        mu_cap: params.mu_cap,
        exact_max_n: expander::EXACT_SUBSET_MAX_N,
    };
    let outcome = expander::almost_regular_expander(
        &half,
        params.eps,
        derive_seed(seed, "expander", &[]),
        &opts,
    )?;
    let mut edges = Vec::new();
    for (u, v) in outcome.graph.edges() {
        let c = cg
            .colour(outcome.orig[u], outcome.orig[v])
            .ok_or_else(|| SubdivError::Internal("colour lost during extraction".into()))?;
        edges.push((u, v, c));
    }
    let sub = ColouredGraph::from_coloured_edges(outcome.graph.n(), &edges)
        .map_err(SubdivError::Graph)?;
    Ok(PreparedExpander {
        cg: sub,
        orig: outcome.orig,
        certificate: outcome.certificate,
    })
}

/// Rainbow K_m-subdivision rooted at the prescribed branch set `z` (labels of
/// `cg`, which is treated as the bipartite expander the theorem assumes).
/// Connectors are built pair by pair, each avoiding all vertices and colours
/// used so far plus the remaining branch vertices. Reports the failing pair
/// index on error.
pub fn find_rooted_subdivision(
    cg: &ColouredGraph,
    z: &[usize],
    params: &PipelineParams,
    seed: u64,
) -> Result<SubdivisionCertificate, SubdivError> {
    let m = z.len();
    if m < 2 {
        return Err(SubdivError::PreconditionViolated(
            "need at least two branch vertices".into(),
        ));
    }
    let mut sorted = z.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != m {
        return Err(SubdivError::PreconditionViolated(
            "branch vertices must be distinct".into(),
        ));
    }
    if let Some(&v) = z.iter().find(|&&v| v >= cg.n()) {
        return Err(SubdivError::PreconditionViolated(format!(
            "branch vertex {v} out of range"
        )));
    }
    let length_bound = 2 * (params.ell + 1) + params.k;
    let mut used = AvoidSet::new();
    used.vertices.extend(z.iter().copied());
    let mut connectors: Vec<(usize, usize, Walk)> = Vec::new();
    let mut max_avoid = 0usize;
    let mut pair_index = 0usize;
    for i in 0..m {
        for j in (i + 1)..m {
            let (x, y) = (z[i], z[j]);
            let mut avoid = used.clone();
            avoid.vertices.remove(&x);
            avoid.vertices.remove(&y);
            max_avoid = max_avoid.max(avoid.len());
            let path = rainbow_connect(
                cg,
                x,
                y,
                &avoid,
                params,
                derive_seed(seed, "rooted-pair", &[pair_index as u64]),
            )
            .map_err(|e| SubdivError::StageFailed {
                pair: pair_index,
                source: Box::new(e),
            })?;
            if path.len() - 1 > length_bound {
                return Err(SubdivError::Internal(format!(
                    "connector length {} above the bound {length_bound}",
                    path.len() - 1
                )));
            }
            used.absorb_path(cg, &path);
            connectors.push((x, y, path));
            pair_index += 1;
        }
    }
    let mut colours_union: BTreeSet<usize> = BTreeSet::new();
    let paths: Vec<Connector> = connectors
        .iter()
        .map(|(x, y, w)| Connector {
            endpoints: (*x, *y),
            vertices: w.clone(),
            colours: w
                .windows(2)
                .map(|e| {
                    let c = cg.colour(e[0], e[1]).unwrap();
                    colours_union.insert(c);
                    c
                })
                .collect(),
        })
        .collect();
    let cert = SubdivisionCertificate {
        branch_vertices: z.to_vec(),
        paths,
        colours: colours_union.into_iter().collect(),
        params: CertParams {
            m,
            k: params.k,
            s: params.s,
            seed,
            length_bound,
            sheet: Some(ParamSheet {
                reference: reference_params(cg.n().max(2), params.eps, m, None),
                used: params.clone(),
                scale: None,
            }),
        },
        evidence: CertEvidence {
            mode: "rooted-rainbow-connect".into(),
            expander: None,
            notes: vec![format!(
                "max |M_i| = {max_avoid} (bound 2 C(m,2) (L+1) = {})",
                2 * (m * (m - 1) / 2) * (length_bound + 1)
            )],
        },
    };
    verify_subdivision(cg, &cert)
        .map_err(|f| SubdivError::Internal(format!("self-verification failed: {f:?}")))?;
    Ok(cert)
}
