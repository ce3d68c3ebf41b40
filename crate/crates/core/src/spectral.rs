//! Random-walk matrices, spectra, conductance and mixing deviation bounds.
//!
//! Conventions: `M = D A` is the row-stochastic transition matrix of the
//! simple random walk (`D = diag(1/d(v))`), and `N = D^{1/2} A D^{1/2}` is its
//! symmetric conjugate. Conductance follows
//! `Phi(S) = e(S, S^c) / (2m pi(S) pi(S^c))` with `pi(v) = d(v)/2m`; note this
//! differs from the `e(S,S^c)/min(vol S, vol S^c)` normalization common
//! elsewhere.

use crate::graph::{Bipartition, Graph};
use crate::walkcount::{big_ratio_to_f64, WalkTable};
use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

/// Dense-matrix size cap.
pub const MAX_DENSE_N: usize = 4096;

/// Default cap for exact conductance enumeration.
pub const EXACT_CONDUCTANCE_MAX_N: usize = 22;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("graph too large for dense linear algebra: n = {n} > {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("eigensolver did not converge")]
    EigensolverFailure,
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
}

/// The pair of walk matrices together with the degree sequence.
pub struct WalkMatrices {
    pub transition: DMatrix<f64>,
    pub symmetric: DMatrix<f64>,
    pub degrees: Vec<usize>,
}

pub fn walk_matrices(g: &Graph) -> Result<WalkMatrices, SpectralError> {
    let n = g.n();
    if n > MAX_DENSE_N {
        return Err(SpectralError::TooLarge {
            n,
            cap: MAX_DENSE_N,
        });
    }
    let degrees: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    if let Some(v) = degrees.iter().position(|&d| d == 0) {
        return Err(SpectralError::IsolatedVertex(v));
    }
    let mut transition = DMatrix::zeros(n, n);
    let mut symmetric = DMatrix::zeros(n, n);
    for v in 0..n {
        for &u in g.neighbours(v) {
            transition[(v, u)] = 1.0 / degrees[v] as f64;
            symmetric[(v, u)] = 1.0 / ((degrees[v] as f64) * (degrees[u] as f64)).sqrt();
        }
    }
    Ok(WalkMatrices {
        transition,
        symmetric,
        degrees,
    })
}

/// Conductance evidence: exact by enumeration, or bounds for larger graphs.
/// The lower bound uses the easy direction of the eigenvalue-conductance
/// relation (`Phi_G >= 1 - lambda_2`); the upper bound is the best sweep cut,
/// capped by inverting the `lambda_2 <= 1 - Phi^2/8` bound.
#[derive(Debug, Clone)]
pub enum Conductance {
    Exact {
        value: f64,
        minimizer: Vec<usize>,
    },
    Bounds {
        lower: f64,
        upper: f64,
        sweep_cut: Vec<usize>,
    },
}

impl Conductance {
    pub fn exact_value(&self) -> Option<f64> {
        match self {
            Conductance::Exact { value, .. } => Some(*value),
            Conductance::Bounds { .. } => None,
        }
    }
}

/// Eigenvalues of `N` (descending) and the second largest one.
pub struct SpectrumSummary {
    pub lambda: Vec<f64>,
    pub lambda2: f64,
}

pub fn spectrum(g: &Graph) -> Result<SpectrumSummary, SpectralError> {
    if !g.is_connected() {
        return Err(SpectralError::Disconnected);
    }
    let wm = walk_matrices(g)?;
    let eig = SymmetricEigen::try_new(wm.symmetric, f64::EPSILON, 10_000)
        .ok_or(SpectralError::EigensolverFailure)?;
    let mut lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lambda2 = if lambda.len() >= 2 {
        lambda[1]
    } else {
        lambda[0]
    };
    Ok(SpectrumSummary { lambda, lambda2 })
}

/// Second-eigenvector sweep order: vertices sorted by `w_2(v)/sqrt(d(v))`,
/// descending, index ascending on ties.
pub fn sweep_order(g: &Graph) -> Result<Vec<usize>, SpectralError> {
    let wm = walk_matrices(g)?;
    let n = g.n();
    let eig = SymmetricEigen::try_new(wm.symmetric, f64::EPSILON, 10_000)
        .ok_or(SpectralError::EigensolverFailure)?;
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let col = eig.eigenvectors.column(idx[1.min(idx.len() - 1)]);
    let score: Vec<f64> = (0..n)
        .map(|v| col[v] / (wm.degrees[v] as f64).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap().then(a.cmp(&b)));
    Ok(order)
}

fn phi_value(cut: usize, vol: usize, two_m: usize) -> f64 {
    (cut * two_m) as f64 / (vol * (two_m - vol)) as f64
}

/// Exact conductance for `n <= exact_max_n` (full subset enumeration using
/// `Phi(S) = Phi(S^c)`), otherwise sweep-cut and eigenvalue bounds.
pub fn conductance(g: &Graph, exact_max_n: usize) -> Result<Conductance, SpectralError> {
    if !g.is_connected() {
        return Err(SpectralError::Disconnected);
    }
    let n = g.n();
    if n < 2 {
        return Err(SpectralError::BadParam("conductance needs n >= 2".into()));
    }
    if n <= exact_max_n && n <= 32 {
        return Ok(exact_conductance(g));
    }
    // Sweep-cut upper bound.
    let order = sweep_order(g)?;
    let two_m = 2 * g.m();
    let mut mark = vec![false; n];
    let mut cut = 0usize;
    let mut vol = 0usize;
    let mut best = f64::INFINITY;
    let mut best_prefix = 0usize;
    for (i, &v) in order.iter().take(n - 1).enumerate() {
        let inside = g.neighbours(v).iter().filter(|&&w| mark[w]).count();
        cut = cut + g.degree(v) - 2 * inside;
        vol += g.degree(v);
        mark[v] = true;
        let phi = phi_value(cut, vol, two_m);
        if phi < best {
            best = phi;
            best_prefix = i + 1;
        }
    }
    let spec = spectrum(g)?;
    let lower = (1.0 - spec.lambda2).max(0.0);
    let upper = best.min((8.0 * (1.0 - spec.lambda2)).sqrt());
    Ok(Conductance::Bounds {
        lower,
        upper,
        sweep_cut: order[..best_prefix].to_vec(),
    })
}

fn exact_conductance(g: &Graph) -> Conductance {
    let n = g.n();
    let two_m = 2 * g.m();
    let adj_mask: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    // Enumerate subsets of 0..n-1 (vertex n-1 stays outside), Gray-code order
    // so each step toggles one vertex.
    let mut mask: u32 = 0;
    let mut cut = 0usize;
    let mut vol = 0usize;
    let mut best = f64::INFINITY;
    let mut best_mask = 0u32;
    let limit: u64 = 1u64 << (n - 1);
    for i in 1..limit {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        if mask & bit == 0 {
            let inside = (adj_mask[v] & mask).count_ones() as usize;
            cut = cut + deg[v] - 2 * inside;
            vol += deg[v];
            mask |= bit;
        } else {
            mask &= !bit;
            let inside = (adj_mask[v] & mask).count_ones() as usize;
            cut = cut + 2 * inside - deg[v];
            vol -= deg[v];
        }
        let phi = phi_value(cut, vol, two_m);
        if phi < best {
            best = phi;
            best_mask = mask;
        }
    }
    let minimizer: Vec<usize> = (0..n).filter(|&v| best_mask >> v & 1 == 1).collect();
    Conductance::Exact {
        value: best,
        minimizer,
    }
}

/// Margin of the eigenvalue bound `lambda_2 <= 1 - Phi_G^2 / 8` computed from
/// the exact conductance. A negative margin (beyond rounding) signals an
/// implementation bug.
pub fn check_eigen_conductance_bound(g: &Graph, exact_max_n: usize) -> Result<f64, SpectralError> {
    let phi = match conductance(g, exact_max_n)? {
        Conductance::Exact { value, .. } => value,
        Conductance::Bounds { .. } => {
            return Err(SpectralError::TooLarge {
                n: g.n(),
                cap: exact_max_n,
            })
        }
    };
    let spec = spectrum(g)?;
    let margin = (1.0 - phi * phi / 8.0) - spec.lambda2;
    if margin < -1e-9 {
        return Err(SpectralError::BoundViolated(format!(
            "lambda2 = {} > 1 - Phi^2/8 = {}",
            spec.lambda2,
            1.0 - phi * phi / 8.0
        )));
    }
    Ok(margin)
}

/// Margin of `Phi_G >= eta / 3` for a verified `(d, eta, eps)`-expander.
pub fn check_expander_conductance(
    g: &Graph,
    eta: f64,
    exact_max_n: usize,
) -> Result<f64, SpectralError> {
    let phi = match conductance(g, exact_max_n)? {
        Conductance::Exact { value, .. } => value,
        Conductance::Bounds { .. } => {
            return Err(SpectralError::TooLarge {
                n: g.n(),
                cap: exact_max_n,
            })
        }
    };
    let margin = phi - eta / 3.0;
    if margin < -1e-12 {
        return Err(SpectralError::BoundViolated(format!(
            "Phi_G = {phi} < eta/3 = {}",
            eta / 3.0
        )));
    }
    Ok(margin)
}

/// Per-pair mixing deviation report for `M^k` on a connected bipartite graph.
#[derive(Debug)]
pub struct MixingReport {
    pub k: usize,
    pub lambda2: f64,
    /// Worst `|entry - stationary|` over all pairs.
    pub max_deviation: f64,
    /// Worst `deviation - bound`; non-positive when the bound holds.
    pub max_excess: f64,
    pub worst_pair: (usize, usize),
    /// Largest magnitude of an entry that parity forces to zero.
    pub max_parity_leak: f64,
}

/// Entrywise rows of the deviation data for CSV dumps: `(v, u, actual,
/// stationary, bound)`.
pub fn mixing_rows(
    g: &Graph,
    k: usize,
) -> Result<Vec<(usize, usize, f64, f64, f64)>, SpectralError> {
    let (rows, _) = mixing_internal(g, k)?;
    Ok(rows)
}

pub fn mixing_deviation(g: &Graph, k: usize) -> Result<MixingReport, SpectralError> {
    let (_, report) = mixing_internal(g, k)?;
    if report.max_excess > 0.0 {
        return Err(SpectralError::BoundViolated(format!(
            "pair {:?} deviates {} beyond the mixing bound at k = {k}",
            report.worst_pair, report.max_excess
        )));
    }
    if report.max_parity_leak > 1e-12 {
        return Err(SpectralError::BoundViolated(format!(
            "parity-forced zero entry has magnitude {}",
            report.max_parity_leak
        )));
    }
    Ok(report)
}

/// Reports for every `k` in `1..=k_max`, sharing one incremental power chain.
pub fn mixing_deviation_sweep(g: &Graph, k_max: usize) -> Result<Vec<MixingReport>, SpectralError> {
    let ctx = MixingCtx::new(g)?;
    let mut power = ctx.wm.transition.clone();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            power = &power * &ctx.wm.transition;
        }
        let (_, report) = ctx.evaluate(&power, k, false);
        out.push(report);
    }
    Ok(out)
}

struct MixingCtx {
    wm: WalkMatrices,
    bip: Bipartition,
    lambda2: f64,
    two_m: usize,
}

impl MixingCtx {
    fn new(g: &Graph) -> Result<Self, SpectralError> {
        let bip = g.bipartition().map_err(|e| match e {
            crate::graph::GraphError::OddCycle(_) => SpectralError::NotBipartite,
            _ => SpectralError::Disconnected,
        })?;
        let wm = walk_matrices(g)?;
        let spec = spectrum(g)?;
        Ok(MixingCtx {
            wm,
            bip,
            lambda2: spec.lambda2,
            two_m: 2 * g.m(),
        })
    }

    fn evaluate(
        &self,
        power: &DMatrix<f64>,
        k: usize,
        collect_rows: bool,
    ) -> (Vec<(usize, usize, f64, f64, f64)>, MixingReport) {
        let n = self.wm.degrees.len();
        // The middle-eigenvalue bound; for n = 2 there are no middle
        // eigenvalues and lambda2 = -1, so clamp at zero.
        let rate = self.lambda2.max(0.0).powi(k as i32);
        let mut rows = Vec::new();
        let mut max_deviation: f64 = 0.0;
        let mut max_excess = f64::NEG_INFINITY;
        let mut worst_pair = (0, 0);
        let mut max_parity_leak: f64 = 0.0;
        for v in 0..n {
            for u in 0..n {
                let sign_exp = k + usize::from(self.bip.in_x(v)) + usize::from(self.bip.in_x(u));
                let parity_zero = sign_exp % 2 == 1;
                let stationary = if parity_zero {
                    0.0
                } else {
                    2.0 * self.wm.degrees[u] as f64 / self.two_m as f64
                };
                let actual = power[(v, u)];
                if parity_zero {
                    max_parity_leak = max_parity_leak.max(actual.abs());
                }
                let bound =
                    (self.wm.degrees[u] as f64 / self.wm.degrees[v] as f64).sqrt() * rate + 1e-8;
                let dev = (actual - stationary).abs();
                if dev > max_deviation {
                    max_deviation = dev;
                }
                if dev - bound > max_excess {
                    max_excess = dev - bound;
                    worst_pair = (v, u);
                }
                if collect_rows {
                    rows.push((v, u, actual, stationary, bound));
                }
            }
        }
        (
            rows,
            MixingReport {
                k,
                lambda2: self.lambda2,
                max_deviation,
                max_excess,
                worst_pair,
                max_parity_leak,
            },
        )
    }
}

fn mixing_internal(
    g: &Graph,
    k: usize,
) -> Result<(Vec<(usize, usize, f64, f64, f64)>, MixingReport), SpectralError> {
    if k == 0 {
        return Err(SpectralError::BadParam("k must be at least 1".into()));
    }
    let ctx = MixingCtx::new(g)?;
    let power = matrix_power(&ctx.wm.transition, k);
    Ok(ctx.evaluate(&power, k, true))
}

/// `m^k` by repeated squaring.
pub fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    assert!(k >= 1);
    let mut result: Option<DMatrix<f64>> = None;
    let mut base = m.clone();
    let mut e = k;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    result.unwrap()
}

#[derive(Debug)]
pub struct MixingRateReport {
    pub k: usize,
    /// `sqrt(n) (1 - eta^2/72)^k + 1e-8`.
    pub bound: f64,
    /// Largest `|hom_{x,y}(P_k)/sum_z hom_{x,z}(P_k) - d(y)/e(G)|`.
    pub max_deviation: f64,
    /// `bound - max_deviation`.
    pub min_slack: f64,
}

/// Checks the walk-distribution mixing bound using exact walk counts: for all
/// same-side pairs, the k-step arrival ratio is within
/// `sqrt(n) (1 - eta^2/72)^k` of `d(y)/e(G)`.
pub fn mixing_rate_check(
    g: &Graph,
    table: &WalkTable,
    eta: f64,
    k: usize,
) -> Result<MixingRateReport, SpectralError> {
    if k % 2 != 0 || k == 0 {
        return Err(SpectralError::BadParam(
            "k must be even and positive".into(),
        ));
    }
    if table.k() < k {
        return Err(SpectralError::BadParam(format!(
            "walk table only covers k <= {}",
            table.k()
        )));
    }
    let bip = g.bipartition().map_err(|e| match e {
        crate::graph::GraphError::OddCycle(_) => SpectralError::NotBipartite,
        _ => SpectralError::Disconnected,
    })?;
    let n = g.n();
    let bound = (n as f64).sqrt() * (1.0 - eta * eta / 72.0).powi(k as i32) + 1e-8;
    let mut max_deviation: f64 = 0.0;
    for &x in &bip.x {
        let mut total = BigUint::zero();
        for z in 0..n {
            total += table.paths(k, x, z);
        }
        if total.is_zero() {
            continue;
        }
        for &y in &bip.x {
            let ratio = big_ratio_to_f64(table.paths(k, x, y), &total);
            let target = g.degree(y) as f64 / g.m() as f64;
            let deviation = (ratio - target).abs();
            if deviation > max_deviation {
                max_deviation = deviation;
            }
            if deviation > bound {
                return Err(SpectralError::BoundViolated(format!(
                    "pair ({x}, {y}) violates the walk mixing bound at k = {k}"
                )));
            }
        }
    }
    Ok(MixingRateReport {
        k,
        bound,
        max_deviation,
        min_slack: bound - max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, complete_bipartite, cycle, random_graph};
    use crate::walkcount::count_paths;

    #[test]
    fn walk_matrix_shapes() {
        let k2 = complete(2);
        let wm = walk_matrices(&k2).unwrap();
        assert_eq!(wm.transition[(0, 1)], 1.0);
        assert_eq!(wm.transition[(1, 0)], 1.0);
        assert_eq!(wm.transition[(0, 0)], 0.0);

        // C_4 is 2-regular: all nonzero entries 1/2.
        let wm = walk_matrices(&cycle(4)).unwrap();
        for (u, v) in cycle(4).edges() {
            assert_eq!(wm.transition[(u, v)], 0.5);
        }

        // Star: centre row has 1/3 entries, leaf rows a single 1.
        let star = complete_bipartite(1, 3);
        let wm = walk_matrices(&star).unwrap();
        for u in 1..4 {
            assert_eq!(wm.transition[(0, u)], 1.0 / 3.0);
            assert_eq!(wm.transition[(u, 0)], 1.0);
        }

        let lonely = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            walk_matrices(&lonely),
            Err(SpectralError::IsolatedVertex(2))
        ));
    }

    #[test]
    fn row_stochastic_and_conjugacy() {
        let g = random_graph(24, 0.4, 11);
        let wm = walk_matrices(&g).unwrap();
        for v in 0..g.n() {
            let s: f64 = wm.transition.row(v).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // M = D^{1/2} N D^{-1/2} entrywise.
        for v in 0..g.n() {
            for u in 0..g.n() {
                let conj =
                    wm.symmetric[(v, u)] * (wm.degrees[u] as f64 / wm.degrees[v] as f64).sqrt();
                assert!((conj - wm.transition[(v, u)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectrum_of_small_graphs() {
        let s = spectrum(&cycle(4)).unwrap();
        let expect = [1.0, 0.0, 0.0, -1.0];
        for (a, b) in s.lambda.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-9, "{:?}", s.lambda);
        }
        assert!(s.lambda2.abs() < 1e-9);

        let s = spectrum(&complete_bipartite(3, 3)).unwrap();
        assert!((s.lambda[0] - 1.0).abs() < 1e-9);
        assert!(s.lambda2.abs() < 1e-9);
        assert!((s.lambda[5] + 1.0).abs() < 1e-9);

        let s = spectrum(&cycle(8)).unwrap();
        assert!((s.lambda2 - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn bipartite_spectrum_is_symmetric() {
        for seed in 0..10 {
            let g = crate::generators::random_bipartite(6, 5, 0.7, seed);
            if !g.is_connected() {
                continue;
            }
            let s = spectrum(&g).unwrap();
            let n = s.lambda.len();
            for i in 0..n {
                assert!(
                    (s.lambda[i] + s.lambda[n - 1 - i]).abs() < 1e-8,
                    "{:?}",
                    s.lambda
                );
            }
        }
    }

    #[test]
    fn exact_conductance_examples() {
        match conductance(&cycle(4), 22).unwrap() {
            Conductance::Exact { value, minimizer } => {
                assert!((value - 1.0).abs() < 1e-12);
                // Minimizer is an adjacent pair.
                assert_eq!(minimizer.len(), 2);
                assert!(cycle(4).has_edge(minimizer[0], minimizer[1]));
            }
            other => panic!("expected exact, got {other:?}"),
        }
        let k2 = complete(2);
        assert!((conductance(&k2, 22).unwrap().exact_value().unwrap() - 2.0).abs() < 1e-12);
        let k4 = complete(4);
        assert!((conductance(&k4, 22).unwrap().exact_value().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_bounds_bracket_exact_value() {
        for seed in [3, 5, 9] {
            let g = random_graph(18, 0.4, seed);
            if !g.is_connected() {
                continue;
            }
            let exact = conductance(&g, 22).unwrap().exact_value().unwrap();
            match conductance(&g, 4).unwrap() {
                Conductance::Bounds { lower, upper, .. } => {
                    assert!(lower <= exact + 1e-9, "lower {lower} vs exact {exact}");
                    assert!(upper >= exact - 1e-9, "upper {upper} vs exact {exact}");
                }
                other => panic!("expected bounds, got {other:?}"),
            }
        }
    }

    #[test]
    fn eigen_conductance_margin_examples() {
        // C_4: 1 - 1/8 - 0 = 0.875.
        let m = check_eigen_conductance_bound(&cycle(4), 22).unwrap();
        assert!((m - 0.875).abs() < 1e-9);
        // K_2: lambda2 = -1, Phi = 2, margin = 1 - 0.5 + 1 = 1.5.
        let m = check_eigen_conductance_bound(&complete(2), 22).unwrap();
        assert!((m - 1.5).abs() < 1e-9);
        // C_8 margin is non-negative.
        assert!(check_eigen_conductance_bound(&cycle(8), 22).unwrap() >= 0.0);
    }

    #[test]
    fn mixing_deviation_small_cases() {
        // K_{2,2}, k = 2: same-side entry is exactly 1/2 = stationary.
        let g = complete_bipartite(2, 2);
        let report = mixing_deviation(&g, 2).unwrap();
        assert!(report.max_excess <= 0.0);
        let rows = mixing_rows(&g, 2).unwrap();
        let entry = rows.iter().find(|r| (r.0, r.1) == (0, 1)).unwrap();
        assert!((entry.2 - 0.5).abs() < 1e-12); //two-step walk to the other side vertex... parts are {0,1},{2,3}
        assert!((entry.3 - 0.5).abs() < 1e-12);

        // C_4 with odd k: same-side entries are exactly zero.
        let report = mixing_deviation(&cycle(4), 3).unwrap();
        assert!(report.max_parity_leak <= 1e-12);

        // C_8, k = 20: deviation within cos(pi/4)^20.
        let report = mixing_deviation(&cycle(8), 20).unwrap();
        assert!(report.max_deviation <= (std::f64::consts::PI / 4.0).cos().powi(20) + 1e-8);
    }

    #[test]
    fn mixing_rate_check_on_complete_bipartite() {
        let g = complete_bipartite(4, 4);
        let table = count_paths(&g, 2);
        // K_{4,4} is a (4, eta, 1/2)-expander for decent eta; use eta = 0.25.
        let report = mixing_rate_check(&g, &table, 0.25, 2).unwrap();
        assert!(report.min_slack >= 0.0);
        // The same-side arrival distribution is exactly uniform here.
        assert!(report.max_deviation < 1e-12);
        // The distribution is exactly uniform on the same side.
        let rows = mixing_rows(&g, 2).unwrap();
        let entry = rows.iter().find(|r| (r.0, r.1) == (0, 1)).unwrap();
        assert!((entry.2 - entry.3).abs() < 1e-12);
    }

    #[test]
    fn matrix_powers_stay_row_stochastic() {
        let g = random_graph(20, 0.4, 8);
        let wm = walk_matrices(&g).unwrap();
        let mut power = wm.transition.clone();
        for k in 1..=64 {
            if k > 1 {
                power = &power * &wm.transition;
            }
            for v in 0..g.n() {
                let s: f64 = power.row(v).iter().sum();
                assert!((s - 1.0).abs() <= 1e-9 * k as f64, "k = {k}, row {v}: {s}");
            }
        }
    }

    #[test]
    fn mixing_rate_over_growing_k() {
        // The bound decays geometrically and the measured deviation is
        // non-increasing over even k, staying under the bound throughout.
        // (The slack itself need not be monotone: both sides shrink, and
        // once the deviation is negligible the bound's own decay dominates.)
        let g = crate::generators::random_bipartite(6, 6, 0.8, 3);
        assert!(g.is_connected());
        let table = count_paths(&g, 8);
        let mut prev_bound = f64::INFINITY;
        let mut prev_dev = f64::INFINITY;
        for k in [2usize, 4, 6, 8] {
            let report = mixing_rate_check(&g, &table, 0.2, k).unwrap();
            assert!(report.min_slack >= 0.0);
            assert!(report.bound < prev_bound);
            assert!(
                report.max_deviation <= prev_dev + 1e-12,
                "deviation grew at k = {k}"
            );
            prev_bound = report.bound;
            prev_dev = report.max_deviation;
        }
    }

    #[test]
    fn matrix_power_matches_naive() {
        let g = random_graph(10, 0.5, 4);
        let wm = walk_matrices(&g).unwrap();
        let mut naive = wm.transition.clone();
        for _ in 1..7 {
            naive = &naive * &wm.transition;
        }
        let fast = matrix_power(&wm.transition, 7);
        assert!((&naive - &fast).abs().max() < 1e-12);
    }
}
