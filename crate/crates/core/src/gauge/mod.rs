//! Gauge construction: from per-ball optimal weights to a weight function
//! `ρ` on the hierarchy, its potential `π`, and the quasi-metric
//! `θ(x, y) = π(c_α(x, y))`, with empirical checks of the hypotheses the
//! construction is meant to satisfy.

mod metric;
mod stages;
mod verify;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::math::powf;
use crate::modulus::SolverOptions;
use crate::nerve::NerveGraph;
use crate::Executor;

pub use metric::{center, Center, GaugeMetric, ThetaRow};
pub use stages::{
    attenuate, child_sums, harnack_fix, lift_to_tau, merge_optimal_sigma, normalize_h4, optimal_sigma, potential_of,
    two_neighborhood_regularize, HarnackOutcome, Merged, Normalized, SigmaStage,
};
pub use verify::{
    check_bounds, check_ratios, check_telescoping, verify_hypotheses, verify_regularity, BoundsCheck, HypothesisInput,
    HypothesisReport, LengthCheck, RatioCheck, RegularityReport, TelescopingCheck,
};

/// One value per element, level by level; level 0 holds the root.
pub type Levels = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeOptions {
    pub p: f64,
    pub alpha: f64,
    /// Annulus ratio of the per-ball families.
    pub l: f64,
    /// Fixed `η₀`; disables the halving ladder.
    pub eta0_override: Option<f64>,
    pub eta0_start: f64,
    pub max_attempts: usize,
    pub h3_pairs: usize,
    pub regularity_samples: usize,
    pub regularity_bound: f64,
    pub qm_triples: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            p: 2.0,
            alpha: 2.0,
            l: 2.0,
            eta0_override: None,
            eta0_start: 0.5,
            max_attempts: 12,
            h3_pairs: 10_000,
            regularity_samples: 2_000,
            regularity_bound: 1e3,
            qm_triples: 2_000,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub eta0: f64,
    /// `None` when the attempt produced the reported gauge.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub p: f64,
    pub alpha: f64,
    pub l: f64,
    pub eta0: f64,
    /// `(2 M₃)^{-1}` with `M₃ = 2^{p+1} M₂⁴`.
    pub eta0_theory: f64,
    pub attempts: Vec<Attempt>,
    /// Largest child count.
    pub m1: usize,
    /// Largest two-hop neighborhood in one level, the vertex included.
    pub m2: usize,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub harnack_k: f64,
    pub k0_target: f64,
    /// Overlap constant of the merged weights per level.
    pub overlap: Vec<usize>,
    /// Attenuation factor applied to each level of `σ`.
    pub scales: Vec<f64>,
    pub raised: Vec<usize>,
    pub above_neighbors: usize,
    pub center_fallbacks: usize,
    pub clamped: usize,
    pub min_omega: f64,
    /// `σ ≤ τ ≤ τ̃` held pointwise.
    pub stages_monotone: bool,
    pub k_qm: f64,
    pub hypotheses: HypothesisReport,
    pub regularity: RegularityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    pub sigma: Levels,
    pub tau: Levels,
    pub tilde: Levels,
    pub rho_hat: Levels,
    pub rho: Levels,
    pub pi: Levels,
    pub report: GaugeReport,
}

/// Largest `|V_2(B)|` over all levels.
pub fn two_hop_bound(nerve: &NerveGraph, levels: usize) -> usize {
    let mut best = 1;
    let mut mark: Vec<usize> = Vec::new();
    for n in 0..levels {
        let g = nerve.level(n);
        mark.clear();
        mark.resize(g.vertex_count(), usize::MAX);
        for v in 0..g.vertex_count() {
            let mut count = 0;
            let mut visit = |u: usize, count: &mut usize| {
                if mark[u] != v {
                    mark[u] = v;
                    *count += 1;
                }
            };
            visit(v, &mut count);
            for &u in g.neighbors(v) {
                visit(u as usize, &mut count);
                for &w in g.neighbors(u as usize) {
                    visit(w as usize, &mut count);
                }
            }
            best = best.max(count);
        }
    }
    best
}

fn below(a: &Levels, b: &Levels) -> bool {
    a.iter().zip(b).skip(1).all(|(x, y)| x.iter().zip(y).all(|(u, v)| *u <= *v * (1.0 + 1e-12)))
}

struct Built {
    sigma: Levels,
    tau: Levels,
    tilde: Levels,
    fixed: HarnackOutcome,
    normalized: Normalized,
    scales: Vec<f64>,
    eta_minus: f64,
}

fn build_at(h: &Hierarchy, sigma: &Levels, p: f64, eta0: f64, m1: usize) -> Result<Built> {
    let g = &h.genealogy;
    let eta_minus = powf(eta0 / m1 as f64, 1.0 / p);
    if !(eta_minus > 0.0 && eta_minus <= 0.5) {
        return Err(Error::Precondition {
            op: "gauge_builder::build",
            msg: format!("η₋ = {eta_minus} from η₀ = {eta0} leaves no room for η₊ = 1 − η₋"),
        });
    }
    let (sigma, scales) = attenuate(sigma, g, p, eta0);
    let tau = lift_to_tau(&sigma, p, eta_minus);
    let tilde = two_neighborhood_regularize(&tau, &h.nerve);
    let fixed = harnack_fix(&tilde, g, &h.nerve, 1.0 / eta_minus)?;
    let normalized = normalize_h4(&fixed.rho_hat, h, p, eta_minus, 1.0 - eta_minus)?;
    Ok(Built { sigma, tau, tilde, fixed, normalized, scales, eta_minus })
}

/// Runs the full pipeline at exponent `opts.p`.
///
/// Without an override, `η₀` starts at `opts.eta0_start` and is halved
/// whenever a stage reports a precondition or pipeline failure.
pub fn build_gauge<E: Executor>(h: &Hierarchy, opts: &GaugeOptions, exec: &E) -> Result<Gauge> {
    const OP: &str = "gauge_builder::build";
    let p = opts.p;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter { op: OP, msg: format!("p = {p} must be at least 1") });
    }
    if !(opts.l >= 1.0) {
        return Err(Error::Parameter { op: OP, msg: format!("L = {} must be at least 1", opts.l) });
    }
    if h.n_max() < 1 {
        return Err(Error::Precondition { op: OP, msg: "hierarchy has no level below the root".to_string() });
    }
    let stage = optimal_sigma(h, p, opts.l, &opts.solver, exec)?;
    let m1 = h.genealogy.max_children.iter().copied().max().unwrap_or(1).max(1);
    let m2 = two_hop_bound(&h.nerve, h.n_max() + 1);
    let m3 = powf(2.0, p + 1.0) * powf(m2 as f64, 4.0);
    let eta0_theory = 1.0 / (2.0 * m3);

    let mut attempts = Vec::new();
    let mut eta0 = opts.eta0_override.unwrap_or(opts.eta0_start);
    let tries = if opts.eta0_override.is_some() { 1 } else { opts.max_attempts.max(1) };
    let mut built = None;
    for _ in 0..tries {
        match build_at(h, &stage.values, p, eta0, m1) {
            Ok(b) => {
                attempts.push(Attempt { eta0, error: None });
                built = Some(b);
                break;
            }
            Err(e @ (Error::Precondition { .. } | Error::Pipeline { .. })) => {
                attempts.push(Attempt { eta0, error: Some(e.to_string()) });
                eta0 *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    let Some(b) = built else {
        return Err(Error::Pipeline {
            op: OP,
            msg: format!("no η₀ down to {} produced a gauge; last: {}", eta0 * 2.0, attempts.last().and_then(|a| a.error.clone()).unwrap_or_default()),
        });
    };
    let eta0 = attempts.last().map(|a| a.eta0).unwrap_or(eta0);

    let eta_minus = b.eta_minus;
    let eta_plus = 1.0 - eta_minus;
    let harnack_k = 1.0 / eta_minus;
    let rho = b.normalized.rho.clone();
    let pi = potential_of(&rho, &h.genealogy);
    let metric = GaugeMetric::new(h, &pi, opts.alpha)?;
    let k0_target = harnack_k * harnack_k;
    let hypotheses = verify_hypotheses(
        h,
        &metric,
        &HypothesisInput { rho: &rho, pi: &pi, p, eta_minus, eta_plus, k0_target, alpha: opts.alpha, pairs: opts.h3_pairs, seed: opts.seed },
    );
    let regularity = verify_regularity(h, &metric, &pi, p, opts.regularity_samples, opts.seed, opts.regularity_bound, hypotheses.h4.k2);
    let k_qm = metric.quasi_metric_constant(opts.qm_triples, opts.seed);
    let stages_monotone = below(&b.sigma, &b.tau) && below(&b.tau, &b.tilde);

    let report = GaugeReport {
        p,
        alpha: opts.alpha,
        l: opts.l,
        eta0,
        eta0_theory,
        attempts,
        m1,
        m2,
        eta_minus,
        eta_plus,
        harnack_k,
        k0_target,
        overlap: stage.overlap,
        scales: b.scales,
        raised: b.fixed.raised.clone(),
        above_neighbors: b.fixed.above_neighbors,
        center_fallbacks: b.normalized.fallbacks,
        clamped: b.normalized.clamped,
        min_omega: b.normalized.min_omega,
        stages_monotone,
        k_qm,
        hypotheses,
        regularity,
    };
    Ok(Gauge { sigma: b.sigma, tau: b.tau, tilde: b.tilde, rho_hat: b.fixed.rho_hat, rho, pi, report })
}

/// Constant weights `ρ ≡ c` below the root.
pub fn constant_weights(h: &Hierarchy, c: f64) -> Levels {
    let mut out = vec![vec![1.0]];
    for n in 1..=h.n_max() {
        out.push(vec![c; h.covering.level(n).len()]);
    }
    out
}
