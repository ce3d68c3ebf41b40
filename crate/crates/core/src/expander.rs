//! d-minimal subgraphs, `(d, eta, eps)`-expanders and almost-regular
//! expanders.
//!
//! A graph is d-minimal when its average degree is at least `d` but every
//! proper subgraph falls below `d`; a `(d, eta, eps)`-expander is d-minimal
//! and every vertex subset of size at most `(1 - eps) n` induces average
//! degree at most `(1 - eta) d`. The definitions quantify over all subsets,
//! so certificates carry an explicit evidence level: full enumeration at
//! small n, spectral sufficiency or plain absence of counterexamples beyond
//! that.

use crate::graph::{compose_maps, Graph};
use crate::spectral;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Subset enumeration cap: definitions are checked exhaustively up to here.
pub const EXACT_SUBSET_MAX_N: usize = 18;

const REGULARIZE_RETRY_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum ExpanderError {
    #[error("average degree {actual} is below the requested threshold {wanted}")]
    ThresholdUnreachable { wanted: f64, actual: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("regularization failed in {0} attempts")]
    RetriesExhausted(usize),
    #[error("average degree {actual} below the required {needed} (pass relaxed to bypass)")]
    DegreeTooSmall { needed: f64, actual: f64 },
    #[error("edge-expansion violated on a verified expander: {0}; this is a bug")]
    ViolationFound(String),
    #[error("graph too large for exact subset checks: n = {0}")]
    TooLargeForExact(usize),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
}

/// Expander parameters. `eta` and `eps` are stored as exact rationals so
/// subset checks are exact; construct them from floats via
/// [`ExpanderParams::from_floats`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub d: Rational64,
    pub eta: Rational64,
    pub eps: Rational64,
}

impl ExpanderParams {
    pub fn new(d: Rational64, eta: Rational64, eps: Rational64) -> Result<Self, ExpanderError> {
        let zero = Rational64::from_integer(0);
        let one = Rational64::from_integer(1);
        let half = Rational64::new(1, 2);
        if eta <= zero || eta >= one {
            return Err(ExpanderError::PreconditionViolated(
                "eta must lie in (0, 1)".into(),
            ));
        }
        if eps <= zero || eps > half {
            return Err(ExpanderError::PreconditionViolated(
                "eps must lie in (0, 1/2]".into(),
            ));
        }
        if d < zero {
            return Err(ExpanderError::PreconditionViolated(
                "d must be non-negative".into(),
            ));
        }
        Ok(ExpanderParams { d, eta, eps })
    }

    pub fn from_floats(d: Rational64, eta: f64, eps: f64) -> Result<Self, ExpanderError> {
        let eta = Rational64::approximate_float(eta).ok_or_else(|| {
            ExpanderError::PreconditionViolated(format!("eta = {eta} is not representable"))
        })?;
        let eps = Rational64::approximate_float(eps).ok_or_else(|| {
            ExpanderError::PreconditionViolated(format!("eps = {eps} is not representable"))
        })?;
        ExpanderParams::new(d, eta, eps)
    }

    pub fn eta_f64(&self) -> f64 {
        self.eta.to_f64().unwrap()
    }

    pub fn eps_f64(&self) -> f64 {
        self.eps.to_f64().unwrap()
    }

    pub fn d_f64(&self) -> f64 {
        self.d.to_f64().unwrap()
    }

    /// Largest subset size the expansion condition applies to:
    /// `floor((1 - eps) n)`.
    pub fn subset_cap(&self, n: usize) -> usize {
        let one = Rational64::from_integer(1);
        let cap = (one - self.eps) * Rational64::from_integer(n as i64);
        cap.floor().to_integer().max(0) as usize
    }
}

/// A counterexample to the expander definition, re-checkable with
/// `cut_and_density`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Violation {
    /// Average degree of the whole graph is below d.
    AverageDegreeBelowD,
    /// Minimum degree below d/2, refuting d-minimality cheaply.
    MinDegreeBelowHalfD { vertex: usize },
    /// A subset of size at most `(1 - eps) n` inducing more than `(1 - eta) d`.
    ExpansionSubset { vertices: Vec<usize> },
    /// A proper induced subgraph with average degree at least d.
    ProperDenseSubgraph { vertices: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Evidence {
    /// Every subset was enumerated (n within the exact cap).
    ExactSubsetCheck { subsets_checked: u64 },
    /// No violation found, and a spectral lower bound on conductance implies
    /// the subset-density condition. d-minimality itself is only screened by
    /// the min-degree test at this level.
    ConductanceSufficient { phi_lower: f64, slack: f64 },
    /// No violation found among sweep-cut and peeling candidates; nothing is
    /// certified.
    HeuristicNoViolationFound { candidates_checked: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    pub params: ExpanderParams,
    pub n: usize,
    pub passed: bool,
    pub evidence: Evidence,
    pub witness_violation: Option<Violation>,
    /// Relaxed-mode bypasses taken while producing this certificate.
    pub relaxed_bypasses: Vec<String>,
}

// ---------------------------------------------------------------------------
// d-minimal extraction
// ---------------------------------------------------------------------------

/// `delta(g) >= d/2`, the cheap necessary condition for d-minimality.
pub fn min_degree_of_minimal(g: &Graph, d: Rational64) -> bool {
    Rational64::from_integer(g.min_degree() as i64) >= d / Rational64::from_integer(2)
}

fn peel_once(g: &Graph, d: Rational64) -> Option<usize> {
    // Lowest-index vertex whose removal keeps average degree >= d:
    // 2 (m - deg v) >= d (n - 1).
    if g.n() <= 1 {
        return None;
    }
    let (dn, dd) = (*d.numer() as i128, *d.denom() as i128);
    (0..g.n()).find(|&v| 2 * (g.m() as i128 - g.degree(v) as i128) * dd >= dn * (g.n() as i128 - 1))
}

fn densest_component(g: &Graph) -> Vec<usize> {
    g.connected_components()
        .into_iter()
        .max_by(|a, b| {
            let da = g.cut_and_density(a).unwrap().2;
            let db = g.cut_and_density(b).unwrap().2;
            da.cmp(&db).then(b.first().cmp(&a.first()))
        })
        .unwrap()
}

/// Densest proper induced subgraph reaching average degree `d`, if any
/// (exhaustive; n must be within the exact cap).
fn dense_proper_subset(g: &Graph, d: Rational64) -> Option<Vec<usize>> {
    let n = g.n();
    debug_assert!(n <= EXACT_SUBSET_MAX_N);
    let adj_mask: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let (dn, dd) = (*d.numer() as i128, *d.denom() as i128);
    let mut best: Option<(i128, i128, u32)> = None; // density as (2e, size)
    let full = (1u64 << n) - 1;
    let mut mask: u32 = 0;
    let mut inside: i128 = 0;
    for i in 1..=full {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        if mask & bit == 0 {
            inside += (adj_mask[v] & mask).count_ones() as i128;
            mask |= bit;
        } else {
            mask &= !bit;
            inside -= (adj_mask[v] & mask).count_ones() as i128;
        }
        let size = mask.count_ones() as i128;
        if size == n as i128 || size == 0 {
            continue;
        }
        // d(S) >= d, i.e. 2 e(S) dd >= dn |S|.
        if 2 * inside * dd >= dn * size {
            let better = match best {
                None => true,
                Some((be, bs, _)) => 2 * inside * bs > be * size,
            };
            if better {
                best = Some((2 * inside, size, mask));
            }
        }
    }
    best.map(|(_, _, mask)| (0..n).filter(|&v| mask >> v & 1 == 1).collect())
}

/// Densest suffix of the min-degree peeling order (the classic half-
/// approximation to the densest subgraph). Used to restart the peel when the
/// current graph as a whole is below the threshold.
fn densest_suffix(g: &Graph) -> Option<(Vec<usize>, Rational64)> {
    let n = g.n();
    if n == 0 {
        return None;
    }
    let mut alive = vec![true; n];
    let mut degs: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut edges = g.m();
    let mut order = Vec::with_capacity(n);
    let mut best: Option<(Rational64, usize)> = None; // (density, suffix start)
    for step in 0..n {
        let density = Rational64::new(2 * edges as i64, (n - step) as i64);
        if best.as_ref().is_none_or(|(b, _)| density > *b) {
            best = Some((density, step));
        }
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (degs[v], v))
            .unwrap();
        alive[v] = false;
        edges -= degs[v];
        for &w in g.neighbours(v) {
            if alive[w] {
                degs[w] -= 1;
            }
        }
        order.push(v);
    }
    let (density, start) = best?;
    let mut suffix: Vec<usize> = order[start..].to_vec();
    suffix.sort_unstable();
    Some((suffix, density))
}

/// Greedy-peel extraction of a subgraph with average degree at least `d` in
/// which no single vertex deletion keeps the average at `d`. For subgraphs
/// within the exact cap the result is additionally verified (and refined)
/// to be minimal over all induced subgraphs. Returns the subgraph and the
/// map to the input labels. Fails only when no dense-enough subgraph is
/// found (always detected exactly when the input is within the exact cap).
pub fn extract_d_minimal(
    g: &Graph,
    d: Rational64,
    exact_max_n: usize,
) -> Result<(Graph, Vec<usize>), ExpanderError> {
    let mut cur = g.clone();
    let mut map: Vec<usize> = (0..g.n()).collect();
    loop {
        // Greedy peel, lowest index first.
        while let Some(v) = peel_once(&cur, d) {
            let keep: Vec<usize> = (0..cur.n()).filter(|&u| u != v).collect();
            let (next, sub) = cur.induced(&keep);
            map = compose_maps(&map, &sub);
            cur = next;
        }
        // Restrict to the densest component: a d-minimal graph is connected
        // (a component with density >= d would be a dense proper subgraph).
        if !cur.is_connected() && cur.n() > 0 {
            let comp = densest_component(&cur);
            let (next, sub) = cur.induced(&comp);
            map = compose_maps(&map, &sub);
            cur = next;
            continue;
        }
        // If the peel stalled below the threshold, restart inside the
        // densest peeling suffix when that still reaches d.
        if cur.average_degree() < d {
            match densest_suffix(&cur) {
                Some((suffix, density)) if density >= d && suffix.len() < cur.n() => {
                    let (next, sub) = cur.induced(&suffix);
                    map = compose_maps(&map, &sub);
                    cur = next;
                    continue;
                }
                _ => {}
            }
        }
        // Exact-scale refinement over all induced subgraphs.
        if cur.n() <= exact_max_n.min(EXACT_SUBSET_MAX_N) && cur.n() > 1 {
            if let Some(dense) = dense_proper_subset(&cur, d) {
                let (next, sub) = cur.induced(&dense);
                map = compose_maps(&map, &sub);
                cur = next;
                continue;
            }
        }
        break;
    }
    if cur.average_degree() < d {
        return Err(ExpanderError::ThresholdUnreachable {
            wanted: d.to_f64().unwrap(),
            actual: cur.average_degree().to_f64().unwrap(),
        });
    }
    Ok((cur, map))
}

// ---------------------------------------------------------------------------
// Expander verification
// ---------------------------------------------------------------------------

/// Checks the expander definition. For `n` within the exact cap every subset
/// is enumerated; beyond it the min-degree screen plus sweep-cut and
/// peeling-order candidates are used, with spectral sufficiency when it
/// applies. Failure is a certificate carrying a witness, never an error.
pub fn verify_expander(
    g: &Graph,
    params: &ExpanderParams,
    exact_max_n: usize,
) -> ExpanderCertificate {
    let n = g.n();
    let mut cert = ExpanderCertificate {
        params: params.clone(),
        n,
        passed: false,
        evidence: Evidence::HeuristicNoViolationFound {
            candidates_checked: 0,
        },
        witness_violation: None,
        relaxed_bypasses: Vec::new(),
    };
    // d(G) >= d is part of d-minimality.
    let two_m = Rational64::from_integer(2 * g.m() as i64);
    if two_m < params.d * Rational64::from_integer(n.max(1) as i64) {
        cert.witness_violation = Some(Violation::AverageDegreeBelowD);
        return cert;
    }
    if n <= exact_max_n.min(EXACT_SUBSET_MAX_N) && n >= 1 {
        return verify_exact(g, params, cert);
    }
    verify_heuristic(g, params, cert)
}

fn verify_exact(
    g: &Graph,
    params: &ExpanderParams,
    mut cert: ExpanderCertificate,
) -> ExpanderCertificate {
    let n = g.n();
    let adj_mask: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let subset_cap = params.subset_cap(n);
    let (dn, dd) = (*params.d.numer() as i128, *params.d.denom() as i128);
    let (en, ed) = (*params.eta.numer() as i128, *params.eta.denom() as i128);
    let full = (1u64 << n) - 1;
    let mut mask: u32 = 0;
    let mut inside: i128 = 0;
    let mut checked = 0u64;
    for i in 1..=full {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        if mask & bit == 0 {
            inside += (adj_mask[v] & mask).count_ones() as i128;
            mask |= bit;
        } else {
            mask &= !bit;
            inside -= (adj_mask[v] & mask).count_ones() as i128;
        }
        let size = mask.count_ones() as i128;
        checked += 1;
        // Expansion: subsets of size at most (1 - eps) n must satisfy
        // d(S) <= (1 - eta) d, i.e. 2 e(S) ed dd <= (ed - en) dn |S|.
        if size >= 1 && size <= subset_cap as i128 && 2 * inside * ed * dd > (ed - en) * dn * size {
            cert.witness_violation = Some(Violation::ExpansionSubset {
                vertices: mask_to_vec(mask, n),
            });
            cert.evidence = Evidence::ExactSubsetCheck {
                subsets_checked: checked,
            };
            return cert;
        }
        // Minimality: every proper induced subgraph stays below d.
        if size >= 1 && size < n as i128 && 2 * inside * dd >= dn * size {
            cert.witness_violation = Some(Violation::ProperDenseSubgraph {
                vertices: mask_to_vec(mask, n),
            });
            cert.evidence = Evidence::ExactSubsetCheck {
                subsets_checked: checked,
            };
            return cert;
        }
    }
    cert.passed = true;
    cert.evidence = Evidence::ExactSubsetCheck {
        subsets_checked: checked,
    };
    cert
}

fn mask_to_vec(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

fn violates_expansion(g: &Graph, params: &ExpanderParams, s: &[usize], cap: usize) -> bool {
    if s.is_empty() || s.len() > cap {
        return false;
    }
    let (_, _, density) = g.cut_and_density(s).unwrap();
    let one = Rational64::from_integer(1);
    density > (one - params.eta) * params.d
}

/// Dense eigensolves get slow past this size; above it, heuristic
/// verification relies on peeling candidates alone.
const SPECTRAL_CANDIDATE_MAX_N: usize = 2048;

fn verify_heuristic(
    g: &Graph,
    params: &ExpanderParams,
    mut cert: ExpanderCertificate,
) -> ExpanderCertificate {
    let n = g.n();
    // Min-degree screen: delta >= d/2 is necessary for d-minimality.
    let half_d = params.d / Rational64::from_integer(2);
    if let Some(v) = (0..n).find(|&v| Rational64::from_integer(g.degree(v) as i64) < half_d) {
        cert.witness_violation = Some(Violation::MinDegreeBelowHalfD { vertex: v });
        return cert;
    }
    let cap = params.subset_cap(n);
    let mut candidates_checked = 0usize;
    // Sweep-cut prefixes ordered by the second eigenvector.
    if let Ok(order) = if n <= SPECTRAL_CANDIDATE_MAX_N {
        spectral::sweep_order(g)
    } else {
        Err(spectral::SpectralError::TooLarge {
            n,
            cap: SPECTRAL_CANDIDATE_MAX_N,
        })
    } {
        let mut prefix = Vec::with_capacity(n);
        for &v in order.iter().take(n.saturating_sub(1)) {
            prefix.push(v);
            candidates_checked += 1;
            if violates_expansion(g, params, &prefix, cap) {
                cert.witness_violation = Some(Violation::ExpansionSubset {
                    vertices: prefix.clone(),
                });
                cert.evidence = Evidence::HeuristicNoViolationFound { candidates_checked };
                return cert;
            }
        }
    }
    // Greedy densest-subgraph peel: suffixes of the min-degree peeling order.
    {
        let mut alive: Vec<bool> = vec![true; n];
        let mut degs: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
        let mut removed = Vec::with_capacity(n);
        for _ in 0..n.saturating_sub(1) {
            let v = (0..n)
                .filter(|&v| alive[v])
                .min_by_key(|&v| (degs[v], v))
                .unwrap();
            alive[v] = false;
            removed.push(v);
            for &w in g.neighbours(v) {
                if alive[w] {
                    degs[w] -= 1;
                }
            }
            let suffix: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
            candidates_checked += 1;
            if violates_expansion(g, params, &suffix, cap) {
                cert.witness_violation = Some(Violation::ExpansionSubset { vertices: suffix });
                cert.evidence = Evidence::HeuristicNoViolationFound { candidates_checked };
                return cert;
            }
            // Dense proper induced subgraphs refute minimality outright.
            let (_, _, density) = g
                .cut_and_density(&(0..n).filter(|&v| alive[v]).collect::<Vec<_>>())
                .unwrap();
            if density >= params.d {
                cert.witness_violation = Some(Violation::ProperDenseSubgraph {
                    vertices: (0..n).filter(|&v| alive[v]).collect(),
                });
                cert.evidence = Evidence::HeuristicNoViolationFound { candidates_checked };
                return cert;
            }
        }
    }
    // Spectral sufficiency for the subset-density condition: for |S| <=
    // (1-eps)n, d(S) <= Delta - phi_lower * delta^2 eps n / (2m); enough when
    // that is at most (1 - eta) d.
    cert.passed = true;
    if n <= SPECTRAL_CANDIDATE_MAX_N {
        if let Ok(spec) = spectral::spectrum(g) {
            let phi_lower = (1.0 - spec.lambda2).max(0.0);
            let delta = g.min_degree() as f64;
            let need = (1.0 - params.eta_f64()) * params.d_f64();
            let have = g.max_degree() as f64
                - phi_lower * delta * delta * params.eps_f64() * n as f64 / (2.0 * g.m() as f64);
            if have <= need {
                cert.evidence = Evidence::ConductanceSufficient {
                    phi_lower,
                    slack: need - have,
                };
                return cert;
            }
        }
    }
    cert.evidence = Evidence::HeuristicNoViolationFound { candidates_checked };
    cert
}

// ---------------------------------------------------------------------------
// Edge expansion
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct EdgeExpansionReport {
    /// Minimum of `e(S, S^c) - (eta d / 2) |S|` over the enumerated subsets.
    pub min_slack: f64,
    pub argmin: Vec<usize>,
    pub subsets_checked: u64,
}

/// Exhaustively asserts `e(S, S^c) >= (eta d / 2) |S|` for every subset of
/// size at most `(1 - eps) n`. On a verified expander a violation is an
/// implementation bug.
pub fn edge_expansion_check(
    g: &Graph,
    params: &ExpanderParams,
) -> Result<EdgeExpansionReport, ExpanderError> {
    let n = g.n();
    if n > EXACT_SUBSET_MAX_N {
        return Err(ExpanderError::TooLargeForExact(n));
    }
    let adj_mask: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let cap = params.subset_cap(n);
    let (dn, dd) = (*params.d.numer() as i128, *params.d.denom() as i128);
    let (en, ed) = (*params.eta.numer() as i128, *params.eta.denom() as i128);
    let full = (1u64 << n) - 1;
    let mut mask: u32 = 0;
    let mut inside: i128 = 0;
    let mut volume: i128 = 0;
    let mut checked = 0u64;
    let mut min_slack = f64::INFINITY;
    let mut argmin = Vec::new();
    for i in 1..=full {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        if mask & bit == 0 {
            inside += (adj_mask[v] & mask).count_ones() as i128;
            volume += deg[v] as i128;
            mask |= bit;
        } else {
            mask &= !bit;
            inside -= (adj_mask[v] & mask).count_ones() as i128;
            volume -= deg[v] as i128;
        }
        let size = mask.count_ones() as i128;
        if size < 1 || size > cap as i128 {
            continue;
        }
        checked += 1;
        let cut = volume - 2 * inside;
        // slack = e(S,S^c) - (eta d / 2)|S|, scaled by 2 ed dd.
        let scaled = 2 * cut * ed * dd - en * dn * size;
        let slack = scaled as f64 / (2.0 * (ed * dd) as f64);
        if slack < min_slack {
            min_slack = slack;
            argmin = mask_to_vec(mask, n);
        }
        if scaled < 0 {
            return Err(ExpanderError::ViolationFound(format!(
                "S = {:?} has cut {} below (eta d / 2)|S|",
                mask_to_vec(mask, n),
                cut
            )));
        }
    }
    Ok(EdgeExpansionReport {
        min_slack,
        argmin,
        subsets_checked: checked,
    })
}

// ---------------------------------------------------------------------------
// Expander extraction (density increment)
// ---------------------------------------------------------------------------

/// Extracts an expander: repeatedly peel a d-minimal subgraph and, while
/// some subset refutes the expansion condition, recurse into that subset.
/// `eta` is fixed to `eps / (2 log n)` from the input size; with exact
/// violation search the result's average degree is at least half the input's.
pub fn extract_expander(
    g: &Graph,
    eps: f64,
    exact_max_n: usize,
) -> Result<(Graph, Vec<usize>, ExpanderCertificate), ExpanderError> {
    if g.n() == 0 {
        return Err(ExpanderError::PreconditionViolated("empty graph".into()));
    }
    if g.n() == 1 {
        let params = ExpanderParams::from_floats(Rational64::from_integer(0), 0.5, eps.min(0.5))?;
        let cert = ExpanderCertificate {
            params,
            n: 1,
            passed: true,
            evidence: Evidence::ExactSubsetCheck { subsets_checked: 0 },
            witness_violation: None,
            relaxed_bypasses: vec!["degenerate single vertex".into()],
        };
        return Ok((g.clone(), vec![0], cert));
    }
    let eta = eps / (2.0 * (g.n() as f64).log2());
    let mut cur = g.clone();
    let mut map: Vec<usize> = (0..g.n()).collect();
    loop {
        let d = cur.average_degree();
        let (h, sub) = extract_d_minimal(&cur, d, exact_max_n)?;
        map = compose_maps(&map, &sub);
        cur = h;
        let params = ExpanderParams::from_floats(cur.average_degree(), eta, eps)?;
        let cert = verify_expander(&cur, &params, exact_max_n);
        if cert.passed {
            return Ok((cur, map, cert));
        }
        let witness = cert
            .witness_violation
            .clone()
            .expect("failed certificates carry a witness");
        let vertices = match witness {
            Violation::ExpansionSubset { vertices } => vertices,
            Violation::ProperDenseSubgraph { vertices } => vertices,
            other => {
                return Err(ExpanderError::PreconditionViolated(format!(
                    "unexpected violation after minimal extraction: {other:?}"
                )))
            }
        };
        let (next, sub) = cur.induced(&vertices);
        map = compose_maps(&map, &sub);
        cur = next;
    }
}

// ---------------------------------------------------------------------------
// Regularization
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct RegularizeOutcome {
    pub graph: Graph,
    pub orig: Vec<usize>,
    pub attempts: usize,
    /// The guaranteed average-degree floor `d / (12 log n)`.
    pub d_floor: f64,
    /// True when the dyadic bucket already had maximum degree at most d and
    /// no subsampling was needed.
    pub deterministic_branch: bool,
}

/// Produces a subgraph with maximum degree at most `d` and average degree at
/// least `d / (12 log n)` from a bipartite graph with minimum degree at least
/// `d`. Implements the probabilistic construction: truncate the larger
/// side's degrees to exactly `d`, pick the densest dyadic degree bucket on
/// the other side, and if its degrees exceed `d/2`, subsample the larger
/// side at rate `d/(4t)` and drop overloaded vertices until the average
/// degree target is met (retry cap 100, reseeding each time).
pub fn regularize_bipartite(
    g: &Graph,
    d: usize,
    seed: u64,
    relaxed: bool,
) -> Result<RegularizeOutcome, ExpanderError> {
    if d == 0 {
        return Err(ExpanderError::PreconditionViolated(
            "d must be positive".into(),
        ));
    }
    let n = g.n();
    let bip = g
        .two_colour_classes()
        .map_err(|_| ExpanderError::NotBipartite)?;
    if !relaxed {
        if g.min_degree() < d {
            return Err(ExpanderError::PreconditionViolated(format!(
                "minimum degree {} below d = {d}",
                g.min_degree()
            )));
        }
        let need = 36.0 * (n as f64).log2();
        if (d as f64) < need {
            return Err(ExpanderError::DegreeTooSmall {
                needed: need,
                actual: d as f64,
            });
        }
    }
    let log_n = (n.max(2) as f64).log2();
    let d_floor = d as f64 / (12.0 * log_n);
    let side_a = &bip.x; // larger side
    let in_a: Vec<bool> = {
        let mut v = vec![false; n];
        for &a in side_a {
            v[a] = true;
        }
        v
    };
    // Truncate A-side degrees to exactly d (lowest-index neighbours kept).
    let mut truncated: Vec<(usize, usize)> = Vec::new();
    for &a in side_a {
        for &b in g.neighbours(a).iter().take(d) {
            truncated.push((a.min(b), a.max(b)));
        }
    }
    truncated.sort_unstable();
    truncated.dedup();
    let gp = Graph::from_edges(n, &truncated).expect("truncation keeps the graph simple");
    // Dyadic degree buckets on the B side.
    let buckets = (log_n.ceil() as usize).max(1);
    let mut bucket_of = vec![usize::MAX; n];
    for v in 0..n {
        if in_a[v] || gp.degree(v) == 0 {
            continue;
        }
        let i = (gp.degree(v) as f64).log2().floor() as usize + 1; // 2^{i-1} <= deg < 2^i
        bucket_of[v] = i.min(buckets);
    }
    let mut bucket_edges = vec![0usize; buckets + 1];
    for &a in side_a {
        for &b in gp.neighbours(a) {
            if bucket_of[b] != usize::MAX {
                bucket_edges[bucket_of[b]] += 1;
            }
        }
    }
    let best_i = (1..=buckets)
        .max_by_key(|&i| (bucket_edges[i], buckets - i))
        .unwrap();
    if bucket_edges[best_i] == 0 {
        return Err(ExpanderError::PreconditionViolated(
            "the truncated graph has no edges".into(),
        ));
    }
    let t = 1usize << (best_i - 1);
    let b_i: Vec<usize> = (0..n).filter(|&v| bucket_of[v] == best_i).collect();
    if 2 * t <= d {
        // The bucket graph already has maximum degree at most d. The average
        // degree floor is guaranteed under the full precondition; with a
        // relaxed bypass it can fail, which must be an error rather than a
        // contract-violating return.
        let mut verts: Vec<usize> = side_a.clone();
        verts.extend(&b_i);
        let (graph, orig) = gp.induced(&verts);
        if (2 * graph.m()) as f64 >= d_floor * graph.n() as f64 {
            return Ok(RegularizeOutcome {
                graph,
                orig,
                attempts: 0,
                d_floor,
                deterministic_branch: true,
            });
        }
        return Err(ExpanderError::PreconditionViolated(format!(
            "densest bucket average degree {} is below the floor {d_floor}",
            graph.average_degree()
        )));
    }
    let p = d as f64 / (4.0 * t as f64);
    let mut rng = crate::generators::rng_from_seed(seed);
    for attempt in 1..=REGULARIZE_RETRY_CAP {
        let a_sub: Vec<usize> = side_a.iter().copied().filter(|_| rng.gen_bool(p)).collect();
        let in_a_sub: Vec<bool> = {
            let mut v = vec![false; n];
            for &a in &a_sub {
                v[a] = true;
            }
            v
        };
        let mut b_keep: Vec<usize> = Vec::new();
        for &b in &b_i {
            let deg_to_a_sub = gp.neighbours(b).iter().filter(|&&a| in_a_sub[a]).count();
            if deg_to_a_sub <= d {
                b_keep.push(b);
            }
        }
        let mut verts = a_sub.clone();
        verts.extend(&b_keep);
        if verts.is_empty() {
            continue;
        }
        let (candidate, orig) = gp.induced(&verts);
        let total = candidate.n() as f64;
        if candidate.m() as f64 >= d_floor * total {
            return Ok(RegularizeOutcome {
                graph: candidate,
                orig,
                attempts: attempt,
                d_floor,
                deterministic_branch: false,
            });
        }
    }
    Err(ExpanderError::RetriesExhausted(REGULARIZE_RETRY_CAP))
}

// ---------------------------------------------------------------------------
// Almost-regular expanders
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct AlmostRegularOutcome {
    pub graph: Graph,
    pub orig: Vec<usize>,
    pub certificate: ExpanderCertificate,
    /// Realized max-degree / average-degree ratio.
    pub mu: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct AlmostRegularOpts {
    pub relaxed: bool,
    /// In relaxed mode, skip the regularization step while the realized
    /// max/average degree ratio stays at or below this.
    pub mu_cap: f64,
    pub exact_max_n: usize,
}

impl Default for AlmostRegularOpts {
    fn default() -> Self {
        AlmostRegularOpts {
            relaxed: false,
            mu_cap: 4.0,
            exact_max_n: EXACT_SUBSET_MAX_N,
        }
    }
}

fn min_degree_subgraph(g: &Graph, threshold: f64) -> (Graph, Vec<usize>) {
    let mut cur = g.clone();
    let mut map: Vec<usize> = (0..g.n()).collect();
    loop {
        if cur.n() <= 1 {
            return (cur, map);
        }
        let victims: Vec<usize> = (0..cur.n())
            .filter(|&v| (cur.degree(v) as f64) < threshold)
            .collect();
        if victims.is_empty() {
            return (cur, map);
        }
        let keep: Vec<usize> = (0..cur.n())
            .filter(|&v| (cur.degree(v) as f64) >= threshold)
            .collect();
        if keep.is_empty() {
            return (cur, map);
        }
        let (next, sub) = cur.induced(&keep);
        map = compose_maps(&map, &sub);
        cur = next;
    }
}

/// Alternates regularization and expander extraction until the iterated
/// size signature stabilizes (`48 log n_i >= sqrt(48 log n_{i-1})`), which at
/// desk scale happens after one round. Returns the almost-regular expander,
/// its certificate and the realized degree ratio.
pub fn almost_regular_expander(
    g: &Graph,
    eps: f64,
    seed: u64,
    opts: &AlmostRegularOpts,
) -> Result<AlmostRegularOutcome, ExpanderError> {
    let n0 = g.n();
    if n0 < 2 {
        return Err(ExpanderError::PreconditionViolated(
            "need at least two vertices".into(),
        ));
    }
    g.two_colour_classes()
        .map_err(|_| ExpanderError::NotBipartite)?;
    let mut bypasses: Vec<String> = Vec::new();
    let d0 = g.average_degree().to_f64().unwrap();
    let need = 1e7 * (n0 as f64).log2().powi(3);
    if d0 < need {
        if !opts.relaxed {
            return Err(ExpanderError::DegreeTooSmall {
                needed: need,
                actual: d0,
            });
        }
        bypasses.push(format!(
            "degree threshold bypassed: d = {d0:.2} < 1e7 (log n)^3 = {need:.2e}"
        ));
    }
    let mut cur = g.clone();
    let mut map: Vec<usize> = (0..n0).collect();
    let mut prev_n = n0;
    for iteration in 1..=64 {
        let d_i = cur.average_degree().to_f64().unwrap();
        let mu_i = if d_i > 0.0 {
            cur.max_degree() as f64 / d_i
        } else {
            f64::INFINITY
        };
        // Step (a): regularize, unless the graph is already close to regular
        // and we are in relaxed mode.
        let (regular, reg_map) = if opts.relaxed && mu_i <= opts.mu_cap {
            bypasses.push(format!(
                "regularization skipped at iteration {iteration}: mu = {mu_i:.2}"
            ));
            (cur.clone(), (0..cur.n()).collect::<Vec<usize>>())
        } else {
            let (peeled, peel_map) = min_degree_subgraph(&cur, d_i / 2.0);
            let d_target = ((d_i / 2.0).floor() as usize).max(1);
            let outcome =
                regularize_bipartite(&peeled, d_target, seed ^ iteration as u64, opts.relaxed)?;
            let composed = compose_maps(&peel_map, &outcome.orig);
            (outcome.graph, composed)
        };
        // Step (b): extract an expander from the regularized graph.
        let (expander, exp_map, mut cert) = extract_expander(&regular, eps, opts.exact_max_n)?;
        let step_map = compose_maps(&reg_map, &exp_map);
        map = compose_maps(&map, &step_map);
        cur = expander;
        let n_i = cur.n().max(1);
        cert.relaxed_bypasses.extend(bypasses.iter().cloned());
        let stop = 48.0 * (n_i as f64).log2() >= (48.0 * (prev_n as f64).log2()).sqrt();
        if stop || cur.n() <= 2 {
            let d_f = cur.average_degree().to_f64().unwrap();
            let mu = if d_f > 0.0 {
                cur.max_degree() as f64 / d_f
            } else {
                f64::INFINITY
            };
            return Ok(AlmostRegularOutcome {
                graph: cur,
                orig: map,
                certificate: cert,
                mu,
                iterations: iteration,
            });
        }
        prev_n = n_i;
    }
    Err(ExpanderError::PreconditionViolated(
        "iteration cap reached; the size signature never stabilized".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, complete_bipartite, cycle, random_graph};

    fn params(d: i64, eta: f64, eps: f64) -> ExpanderParams {
        ExpanderParams::from_floats(Rational64::from_integer(d), eta, eps).unwrap()
    }

    #[test]
    fn k4_is_3_minimal() {
        let k4 = complete(4);
        let (h, map) = extract_d_minimal(&k4, Rational64::from_integer(3), 18).unwrap();
        assert_eq!(h.n(), 4);
        assert_eq!(map, vec![0, 1, 2, 3]);
    }

    #[test]
    fn peeling_removes_sparse_attachments() {
        // P_4 (0-1-2-3) disjoint from K_4 (4..8): threshold 3 keeps only K_4.
        let mut edges = vec![(0, 1), (1, 2), (2, 3)];
        for u in 4..8 {
            for v in (u + 1)..8 {
                edges.push((u, v));
            }
        }
        let g = Graph::from_edges(8, &edges).unwrap();
        let (h, map) = extract_d_minimal(&g, Rational64::from_integer(3), 18).unwrap();
        assert_eq!(h.n(), 4);
        assert_eq!(map, vec![4, 5, 6, 7]);
        assert_eq!(h.average_degree(), Rational64::from_integer(3));
    }

    #[test]
    fn c4_is_2_minimal() {
        let (h, _) = extract_d_minimal(&cycle(4), Rational64::from_integer(2), 18).unwrap();
        assert_eq!(h.n(), 4);
        assert_eq!(h.m(), 4);
    }

    #[test]
    fn threshold_unreachable_is_reported() {
        assert!(matches!(
            extract_d_minimal(&cycle(4), Rational64::from_integer(3), 18),
            Err(ExpanderError::ThresholdUnreachable { .. })
        ));
    }

    #[test]
    fn min_degree_filter_examples() {
        assert!(min_degree_of_minimal(
            &complete(4),
            Rational64::from_integer(3)
        ));
        assert!(min_degree_of_minimal(
            &cycle(4),
            Rational64::from_integer(2)
        ));
        // Star K_{1,3} with d = 3/2: delta = 1 >= 0.75.
        assert!(min_degree_of_minimal(
            &complete_bipartite(1, 3),
            Rational64::new(3, 2)
        ));
    }

    #[test]
    fn verify_k4_exact_pass() {
        let cert = verify_expander(&complete(4), &params(3, 0.1, 0.5), 18);
        assert!(cert.passed);
        assert!(matches!(cert.evidence, Evidence::ExactSubsetCheck { .. }));
    }

    #[test]
    fn verify_c8_fails_with_witness() {
        // C_8 with (2, 0.5, 0.25): a 6-vertex sub-path induces 10/6 > 1.
        let cert = verify_expander(&cycle(8), &params(2, 0.5, 0.25), 18);
        assert!(!cert.passed);
        match cert.witness_violation {
            Some(Violation::ExpansionSubset { ref vertices }) => {
                let (_, _, density) = cycle(8).cut_and_density(vertices).unwrap();
                assert!(density > Rational64::from_integer(1), "witness re-check");
                assert!(vertices.len() <= 6);
            }
            ref other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn edge_expansion_small_cases() {
        let r = edge_expansion_check(&complete(4), &params(3, 0.1, 0.5)).unwrap();
        // Minimum cut-per-size over |S| <= 2 in K_4 is 2 per vertex, so the
        // slack at eta d / 2 = 0.15 stays positive.
        assert!(r.min_slack > 0.0);

        let r = edge_expansion_check(&cycle(4), &params(2, 0.5, 0.5)).unwrap();
        assert!(r.min_slack >= 0.0);

        let r = edge_expansion_check(&complete(2), &params(1, 0.5, 0.5)).unwrap();
        assert!((r.min_slack - 0.75).abs() < 1e-12); // 1 - 0.25
    }

    #[test]
    fn expansion_follows_from_exact_certificates() {
        // Every exact-verified expander satisfies the edge-expansion bound
        // with non-negative slack, exhaustively.
        let mut verified = 0;
        for seed in 0..30 {
            let g = random_graph(10, 0.7, seed);
            if g.m() == 0 {
                continue;
            }
            let eps = 0.5;
            let Ok((h, _, cert)) = extract_expander(&g, eps, 18) else {
                continue;
            };
            if !cert.passed || h.n() < 2 {
                continue;
            }
            if matches!(cert.evidence, Evidence::ExactSubsetCheck { .. }) {
                verified += 1;
                edge_expansion_check(&h, &cert.params).unwrap();
            }
        }
        assert!(verified >= 10, "only {verified} exact certificates");
    }

    #[test]
    fn extract_expander_on_k8() {
        let (h, map, cert) = extract_expander(&complete(8), 0.5, 18).unwrap();
        assert_eq!(h.n(), 8);
        assert_eq!(map.len(), 8);
        assert!(cert.passed);
        assert!(h.average_degree() >= Rational64::new(7, 2));
    }

    #[test]
    fn extract_expander_splits_joined_cliques() {
        // Two K_8s joined by one edge: the sparse cut triggers recursion into
        // one of the cliques.
        let mut edges = Vec::new();
        for u in 0..8 {
            for v in (u + 1)..8 {
                edges.push((u, v));
                edges.push((u + 8, v + 8));
            }
        }
        edges.push((0, 8));
        let g = Graph::from_edges(16, &edges).unwrap();
        let (h, map, cert) = extract_expander(&g, 0.5, 18).unwrap();
        assert!(cert.passed);
        assert_eq!(h.n(), 8);
        assert_eq!(h.m(), 28);
        // d' >= d(g)/2.
        assert!(h.average_degree() >= g.average_degree() / Rational64::from_integer(2));
        // The vertices form one of the cliques.
        let side: Vec<bool> = map.iter().map(|&v| v >= 8).collect();
        assert!(side.iter().all(|&b| b) || side.iter().all(|&b| !b));
    }

    #[test]
    fn extract_expander_single_vertex() {
        let g = Graph::empty(1);
        let (h, _, cert) = extract_expander(&g, 0.5, 18).unwrap();
        assert_eq!(h.n(), 1);
        assert!(cert.passed);
    }

    #[test]
    fn minimal_extraction_satisfies_obs_d_expand() {
        // d(H) >= d and delta(H) >= d/2 for exact-scale extractions.
        for seed in 0..40 {
            let g = random_graph(12, 0.5, seed + 100);
            let d = g.average_degree();
            if g.m() == 0 {
                continue;
            }
            let (h, map) = extract_d_minimal(&g, d, 18).unwrap();
            assert!(h.average_degree() >= d);
            assert!(min_degree_of_minimal(&h, d), "seed {seed}");
            // The map embeds h back into g.
            for (u, v) in h.edges() {
                assert!(g.has_edge(map[u], map[v]));
            }
        }
    }

    #[test]
    fn extract_expander_keeps_half_density_at_exact_scale() {
        for seed in 0..40 {
            let g = random_graph(14, 0.6, seed);
            if g.m() == 0 {
                continue;
            }
            let (h, _, cert) = extract_expander(&g, 0.5, 18).unwrap();
            if matches!(cert.evidence, Evidence::ExactSubsetCheck { .. }) && cert.passed {
                assert!(
                    h.average_degree() >= g.average_degree() / Rational64::from_integer(2),
                    "seed {seed}: {} < {}/2",
                    h.average_degree(),
                    g.average_degree()
                );
            }
        }
    }

    #[test]
    fn regularize_contract_on_complete_bipartite() {
        // K_{16,16}, target d = 16: output satisfies both bounds. The formula
        // regime needs d >= 36 log n, far above desk scale, so relaxed.
        let g = complete_bipartite(16, 16);
        let out = regularize_bipartite(&g, 16, 3, true).unwrap();
        assert!(out.graph.max_degree() <= 16);
        let avg = out.graph.average_degree().to_f64().unwrap();
        assert!(avg >= out.d_floor, "avg {avg} below floor {}", out.d_floor);
    }

    #[test]
    fn regularize_rejects_bad_inputs() {
        let g = complete(5);
        assert!(matches!(
            regularize_bipartite(&g, 2, 0, true),
            Err(ExpanderError::NotBipartite)
        ));
        let g = complete_bipartite(4, 4);
        // Strict mode: d above the minimum degree.
        assert!(matches!(
            regularize_bipartite(&g, 5, 0, false),
            Err(ExpanderError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn regularize_contract_over_seeds() {
        let g = complete_bipartite(24, 24);
        for seed in 0..20 {
            let out = regularize_bipartite(&g, 24, seed, true).unwrap();
            assert!(out.graph.max_degree() <= 24);
            let avg = out.graph.average_degree().to_f64().unwrap();
            assert!(avg >= out.d_floor, "seed {seed}");
        }
    }

    #[test]
    fn almost_regular_on_regular_expander() {
        // A complete bipartite graph is already a regular expander: one
        // iteration, modest mu.
        let g = complete_bipartite(16, 16);
        let out = almost_regular_expander(
            &g,
            0.5,
            7,
            &AlmostRegularOpts {
                relaxed: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.certificate.passed);
        assert!(out.mu <= 2.0, "mu = {}", out.mu);
        // Realized bound of the extraction lemma, checked with realized
        // quantities: d' >= d / (2500 (log n)^2) is loose at this scale.
        let d_in = g.average_degree().to_f64().unwrap();
        let d_out = out.graph.average_degree().to_f64().unwrap();
        let log_n = (g.n() as f64).log2();
        assert!(d_out >= d_in / (2500.0 * log_n * log_n));
        // Max degree within 2500 (log n')^2 d'.
        let log_np = (out.graph.n() as f64).log2();
        assert!((out.graph.max_degree() as f64) <= 2500.0 * log_np * log_np * d_out);
    }

    #[test]
    fn almost_regular_strict_mode_needs_density() {
        let g = complete_bipartite(8, 8);
        assert!(matches!(
            almost_regular_expander(&g, 0.5, 0, &AlmostRegularOpts::default()),
            Err(ExpanderError::DegreeTooSmall { .. })
        ));
    }
}
