//! Parameter formulas, desk-scale overrides and reproducible seed derivation.
//!
//! All logarithms are base 2. The formula values grow far beyond anything a
//! desk-scale run can use, so every pipeline accepts relaxed values; reports
//! carry both so each deviation from the formulas stays visible.

use serde::{Deserialize, Serialize};

/// Splitmix64 step; the basis of all derived seeds.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a stage seed from a root seed, a stage name, and indices.
/// Documented scheme: fold the stage bytes and indices into a splitmix64
/// chain. Distinct stages and indices give independent streams.
pub fn derive_seed(root: u64, stage: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ 0x5139_8ee1_87d2_94a1);
    for b in stage.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

fn binom2(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

fn smallest_even_at_least(x: f64) -> u64 {
    let mut k = x.ceil().max(2.0) as u64;
    if k % 2 == 1 {
        k += 1;
    }
    k
}

/// The formula values for a given `(n, eps, m)` and optional blow-up factor.
/// These are the reference regime; desk runs override them and record both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceParams {
    pub n: usize,
    pub eps: f64,
    pub m: usize,
    pub r: Option<usize>,
    /// eta = eps / (2 log n)
    pub eta: f64,
    /// ell = 4 log n / eta
    pub ell: f64,
    /// smallest even integer >= 2^9 log n / eta^2
    pub k: u64,
    /// L = 2^10 log n / eta^2
    pub big_l: f64,
    /// s = 2 C(m,2) k
    pub s: u64,
    /// p = 8m
    pub p: u64,
    /// q = 256 ell
    pub q: f64,
    /// edge threshold n (log n)^60 of the rainbow subdivision density regime
    pub main_edge_threshold: f64,
    /// true when the threshold exceeds C(n, 2), i.e. no graph on n vertices
    /// can satisfy it
    pub main_threshold_infeasible: bool,
    /// degree threshold 10^7 (log n)^3 for almost-regular expander extraction
    pub regular_expander_d_min: f64,
    /// rooted-subdivision degree threshold at mu = 1:
    /// 2^135 m^8 (log n)^7 / eta^14
    pub rooted_d_coeff: f64,
    /// blow-up edge threshold n^(2 - 1/r) (log n)^(60/r), when r is given
    pub blowup_edge_threshold: Option<f64>,
}

/// Computes the reference parameter sheet. Pure arithmetic, no graph needed.
pub fn reference_params(n: usize, eps: f64, m: usize, r: Option<usize>) -> ReferenceParams {
    assert!(n >= 2, "n must be at least 2");
    let log_n = (n as f64).log2();
    let eta = eps / (2.0 * log_n);
    let ell = 4.0 * log_n / eta;
    let k = smallest_even_at_least(2f64.powi(9) * log_n / (eta * eta));
    let big_l = 2f64.powi(10) * log_n / (eta * eta);
    let s = 2 * binom2(m as u64) * k;
    let p = 8 * m as u64;
    let q = 256.0 * ell;
    let main_edge_threshold = n as f64 * log_n.powi(60);
    let max_edges = n as f64 * (n as f64 - 1.0) / 2.0;
    let rooted_d_coeff = 2f64.powi(135) * (m as f64).powi(8) * log_n.powi(7) / eta.powi(14);
    let blowup_edge_threshold =
        r.map(|r| (n as f64).powf(2.0 - 1.0 / r as f64) * log_n.powf(60.0 / r as f64));
    ReferenceParams {
        n,
        eps,
        m,
        r,
        eta,
        ell,
        k,
        big_l,
        s,
        p,
        q,
        main_edge_threshold,
        main_threshold_infeasible: main_edge_threshold > max_edges,
        regular_expander_d_min: 1e7 * log_n.powi(3),
        rooted_d_coeff,
        blowup_edge_threshold,
    }
}

/// The parameters a pipeline actually runs with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineParams {
    pub eps: f64,
    pub k: usize,
    pub s: usize,
    pub ell: usize,
    pub big_l: usize,
    pub q: usize,
    /// Monte-Carlo samples per good-pair estimate.
    pub mc_samples: usize,
    /// Sampling rounds before a theta search gives up.
    pub max_rounds: usize,
    /// Reference-formula thresholds are not enforced when set.
    pub relaxed: bool,
    /// Skip the regularization step when max degree / average degree is
    /// already at most this (relaxed mode only).
    pub mu_cap: f64,
}

impl PipelineParams {
    /// Desk-scale defaults for an m-clique search; well inside every fixture
    /// this crate ships.
    pub fn desk(m: usize) -> Self {
        let _ = m;
        PipelineParams {
            eps: 0.5,
            k: 4,
            s: 2,
            ell: 2,
            big_l: 2 * (2 + 1) + 4,
            q: 8,
            mc_samples: 400,
            max_rounds: 600,
            relaxed: true,
            mu_cap: 4.0,
        }
    }

    /// Scales the formula values by `scale`, clamping to usable minimums.
    /// `scale = 1` reproduces the formulas (and will not terminate at desk
    /// sizes; that is the point of recording both).
    pub fn scaled(reference: &ReferenceParams, scale: f64) -> Self {
        let k = smallest_even_at_least(reference.k as f64 * scale) as usize;
        let ell = (reference.ell * scale).ceil().max(1.0) as usize;
        let s = ((reference.s as f64 * scale).ceil().max(2.0)) as usize;
        let big_l = ((reference.big_l * scale).ceil() as usize).max(2 * (ell + 1) + k);
        let q = (reference.q * scale).ceil().max(1.0) as usize;
        PipelineParams {
            eps: reference.eps,
            k,
            s,
            ell,
            big_l,
            q,
            mc_samples: 400,
            max_rounds: 600,
            relaxed: scale < 1.0,
            mu_cap: 4.0,
        }
    }
}

/// Both sides of the story: formula values, the values used, and the scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSheet {
    pub reference: ReferenceParams,
    pub used: PipelineParams,
    pub scale: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_separates_stages() {
        let a = derive_seed(7, "theta", &[0, 1]);
        let b = derive_seed(7, "theta", &[0, 2]);
        let c = derive_seed(7, "reach", &[0, 1]);
        let again = derive_seed(7, "theta", &[0, 1]);
        assert_eq!(a, again);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn formulas_at_a_power_of_two() {
        // n = 2^20: log n = 20, eta = eps / 40.
        let p = reference_params(1 << 20, 0.5, 3, None);
        assert!((p.eta - 0.5 / 40.0).abs() < 1e-12);
        assert!((p.ell - 4.0 * 20.0 / p.eta).abs() < 1e-9);
        let expect_k = (2f64.powi(9) * 20.0 / (p.eta * p.eta)).ceil();
        assert!(p.k as f64 >= expect_k && (p.k as f64) < expect_k + 2.0);
        assert_eq!(p.k % 2, 0);
        assert_eq!(p.s, 2 * 3 * p.k);
        assert_eq!(p.p, 24);

        // n (log n)^60 exceeds C(n, 2) at n = 2^20.
        assert!(p.main_threshold_infeasible);
    }

    #[test]
    fn eta_is_monotone_in_eps() {
        let lo = reference_params(1024, 0.25, 3, None);
        let hi = reference_params(1024, 0.5, 3, None);
        assert!(hi.eta > lo.eta);
    }

    #[test]
    fn scaled_params_respect_floors() {
        let p = reference_params(512, 0.5, 3, None);
        let used = PipelineParams::scaled(&p, 1e-6);
        assert!(used.k >= 2 && used.k % 2 == 0);
        assert!(used.ell >= 1);
        assert!(used.big_l >= 2 * (used.ell + 1) + used.k);
        assert!(used.relaxed);
    }
}
