//! Moduli aggregated over base elements into curves `k ↦ M_{p,k}`, the
//! critical exponent bracket and the structural checks on those curves.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::math::{exp, ln};
use crate::modulus::{solve_modulus, PathFamily, SolverOptions, Status};
use crate::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Ring,
    /// Chains at level `i + k` whose centers span at least `delta`.
    LargeScale { delta: f64 },
}

impl Variant {
    pub fn label(&self) -> String {
        match self {
            Variant::Standard => String::from("standard"),
            Variant::Ring => String::from("ring"),
            Variant::LargeScale { delta } => format!("large_scale({delta})"),
        }
    }
}

/// Sup over the base elements of one base level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSup {
    pub base_level: usize,
    pub sup: f64,
    /// Base element attaining the sup; `None` when every family is empty.
    pub argmax: Option<usize>,
    pub families: usize,
    pub empty: usize,
    /// Solves that stopped before reaching the tolerance.
    pub unconverged: usize,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub k: usize,
    pub value: f64,
    pub levels: Vec<LevelSup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub p: f64,
    pub l: f64,
    pub variant: Variant,
    pub base_levels: Vec<usize>,
    pub entries: Vec<CurveEntry>,
}

impl ModulusCurve {
    pub fn value(&self, k: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.value)
    }
}

/// Base levels `0..=i_max` that leave room for `k_max` further levels.
pub fn auto_base_levels(h: &Hierarchy, k_max: usize, i_max: usize) -> Result<Vec<usize>> {
    if k_max > h.n_max() {
        return Err(Error::Precondition {
            op: "critical_exponent::auto_base_levels",
            msg: format!("k_max = {k_max} needs hierarchy depth {k_max}, built to {}", h.n_max()),
        });
    }
    Ok((0..=i_max.min(h.n_max() - k_max)).collect())
}

/// `M_{p,k}` for `k` in `k_min..=k_max`: the largest modulus over every
/// element of every listed base level.
#[allow(clippy::too_many_arguments)]
pub fn modulus_curve<E: Executor>(
    h: &Hierarchy,
    p: f64,
    l: f64,
    k_range: (usize, usize),
    base_levels: &[usize],
    variant: Variant,
    opts: &SolverOptions,
    exec: &E,
) -> Result<ModulusCurve> {
    const OP: &str = "critical_exponent::modulus_curve";
    let (k_min, k_max) = k_range;
    if k_min > k_max || base_levels.is_empty() {
        return Err(Error::Argument { op: OP, msg: format!("empty range k = {k_min}..={k_max} or no base levels") });
    }
    let deepest = base_levels.iter().max().unwrap() + k_max;
    if deepest > h.n_max() {
        return Err(Error::Precondition {
            op: OP,
            msg: format!("base level {} + k = {k_max} needs hierarchy depth {deepest}, built to {}", deepest - k_max, h.n_max()),
        });
    }
    let mut levels = base_levels.to_vec();
    levels.sort_unstable();
    levels.dedup();

    let mut jobs = Vec::new();
    for k in k_min..=k_max {
        for &i in &levels {
            match variant {
                Variant::LargeScale { .. } => jobs.push((k, i, 0)),
                _ => (0..h.covering.level(i).len()).for_each(|b| jobs.push((k, i, b))),
            }
        }
    }
    let outcomes = exec.map(jobs.clone(), |(k, i, b)| -> Result<(f64, f64, Status)> {
        let family = match variant {
            Variant::Standard => PathFamily::annulus(h, i, b, k, l)?,
            Variant::Ring => PathFamily::ring(h, i, b, k, l)?,
            Variant::LargeScale { delta } => PathFamily::large_scale(h, i + k, delta)?,
        };
        let r = solve_modulus(&family, p, opts)?;
        Ok((r.value, r.dual_gap, r.status))
    });

    let mut entries: Vec<CurveEntry> = Vec::new();
    for (&(k, i, b), outcome) in jobs.iter().zip(outcomes) {
        let (value, gap, status) = outcome?;
        if entries.last().map_or(true, |e| e.k != k) {
            entries.push(CurveEntry { k, value: 0.0, levels: Vec::new() });
        }
        let entry = entries.last_mut().unwrap();
        if entry.levels.last().map_or(true, |s| s.base_level != i) {
            entry.levels.push(LevelSup { base_level: i, sup: 0.0, argmax: None, families: 0, empty: 0, unconverged: 0, max_gap: 0.0 });
        }
        let s = entry.levels.last_mut().unwrap();
        s.families += 1;
        match status {
            Status::EmptyFamily => s.empty += 1,
            Status::Converged => {}
            Status::IterationCap | Status::Stalled => s.unconverged += 1,
        }
        s.max_gap = s.max_gap.max(gap);
        if status != Status::EmptyFamily && (s.argmax.is_none() || value > s.sup) {
            s.sup = value;
            s.argmax = Some(b);
        }
        entry.value = entry.value.max(s.sup);
    }
    Ok(ModulusCurve { p, l, variant, base_levels: levels, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Supercritical,
    Subcritical,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRule {
    /// Per-step rate at or below which the curve counts as decaying.
    pub decay_threshold: f64,
    /// `M_{p,k_max}` below this counts as decayed regardless of rate.
    pub absolute_floor: f64,
    /// A non-decaying curve must stay above this on the window.
    pub subcritical_floor: f64,
    /// Number of largest `k` used for the rate fit.
    pub window: usize,
}

impl Default for DecayRule {
    fn default() -> Self {
        DecayRule { decay_threshold: 0.9, absolute_floor: 1e-3, subcritical_floor: 0.1, window: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub regime: Regime,
    /// Fitted geometric rate of `M_{p,k}` per step of `k` over the window;
    /// 0 when the window contains a zero.
    pub rate: f64,
    pub last: f64,
    pub window_min: f64,
    pub below_floor: bool,
    pub curve: ModulusCurve,
}

/// Least-squares geometric rate of the last `window` entries.
pub fn fitted_rate(curve: &ModulusCurve, window: usize) -> f64 {
    let n = curve.entries.len();
    let tail = &curve.entries[n - window.clamp(1, n)..];
    if tail.iter().any(|e| !(e.value > 0.0)) {
        return 0.0;
    }
    if tail.len() < 2 {
        return 1.0;
    }
    let m = tail.len() as f64;
    let kx: Vec<f64> = tail.iter().map(|e| e.k as f64).collect();
    let ly: Vec<f64> = tail.iter().map(|e| ln(e.value)).collect();
    let (mx, my) = (kx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in kx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    exp(num / den)
}

pub fn classify(curve: ModulusCurve, rule: &DecayRule) -> Probe {
    let n = curve.entries.len();
    let tail = &curve.entries[n - rule.window.clamp(1, n)..];
    let rate = fitted_rate(&curve, rule.window);
    let last = curve.entries[n - 1].value;
    let window_min = tail.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let below_floor = last < rule.absolute_floor;
    let regime = if rate <= rule.decay_threshold || below_floor {
        Regime::Supercritical
    } else if rate >= 1.0 && window_min > rule.subcritical_floor {
        Regime::Subcritical
    } else {
        Regime::Inconclusive
    };
    Probe { p: curve.p, regime, rate, last, window_min, below_floor, curve }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Search {
    /// Bisection starting from `[p_lo, p_hi]`, stopping at bracket width
    /// `width` or after `max_probes` curves.
    Bisection { p_lo: f64, p_hi: f64, width: f64, max_probes: usize },
    Grid { ps: Vec<f64> },
}

impl Default for Search {
    fn default() -> Self {
        Search::Bisection { p_lo: 0.5, p_hi: 4.0, width: 0.05, max_probes: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub l: f64,
    pub k_range: (usize, usize),
    pub base_levels: Vec<usize>,
    pub variant: Variant,
    pub rule: DecayRule,
    pub search: Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub q_lo: f64,
    pub q_hi: f64,
    pub a: f64,
    pub lambda: f64,
    pub params: ExponentParams,
    /// Probes in evaluation order.
    pub probes: Vec<Probe>,
    /// Subcritical probes above a supercritical one, if any.
    pub inconsistent: Vec<f64>,
}

/// Brackets the exponent at which the curves switch from bounded below to
/// geometric decay.
pub fn estimate_qn<E: Executor>(
    h: &Hierarchy,
    lambda: f64,
    params: &ExponentParams,
    opts: &SolverOptions,
    exec: &E,
) -> Result<ExponentEstimate> {
    const OP: &str = "critical_exponent::estimate_qn";
    let probe = |p: f64| -> Result<Probe> {
        let curve = modulus_curve(h, p, params.l, params.k_range, &params.base_levels, params.variant, opts, exec)?;
        Ok(classify(curve, &params.rule))
    };
    let mut probes: Vec<Probe> = Vec::new();
    match &params.search {
        Search::Grid { ps } => {
            if ps.is_empty() {
                return Err(Error::Argument { op: OP, msg: String::from("empty p grid") });
            }
            for &p in ps {
                probes.push(probe(p)?);
            }
        }
        &Search::Bisection { p_lo, p_hi, width, max_probes } => {
            if !(p_lo > 0.0 && p_lo < p_hi && width > 0.0) || max_probes < 2 {
                return Err(Error::Argument {
                    op: OP,
                    msg: format!("bisection needs 0 < p_lo < p_hi, positive width and two probes; got [{p_lo}, {p_hi}], {width}, {max_probes}"),
                });
            }
            probes.push(probe(p_lo)?);
            probes.push(probe(p_hi)?);
            while probes.len() < max_probes {
                let Some(p) = next_probe(&probes, width) else { break };
                probes.push(probe(p)?);
            }
        }
    }
    if probes.iter().all(|pr| pr.regime == Regime::Inconclusive) {
        return Err(Error::Inconclusive {
            op: OP,
            msg: format!("no probed p decayed or stayed bounded below over k = {}..={}; increase k_max", params.k_range.0, params.k_range.1),
        });
    }
    let (q_lo, q_hi) = bracket(&probes);
    let inconsistent = probes.iter().filter(|pr| pr.regime == Regime::Subcritical && pr.p > q_hi).map(|pr| pr.p).collect();
    Ok(ExponentEstimate { q_lo, q_hi, a: h.covering.a, lambda, params: params.clone(), probes, inconsistent })
}

/// `q_hi` is the smallest supercritical probe (infinite if none) and `q_lo`
/// the largest subcritical probe below it (0 if none).
fn bracket(probes: &[Probe]) -> (f64, f64) {
    let q_hi = probes.iter().filter(|pr| pr.regime == Regime::Supercritical).map(|pr| pr.p).fold(f64::INFINITY, f64::min);
    let q_lo = probes
        .iter()
        .filter(|pr| pr.regime == Regime::Subcritical && pr.p < q_hi)
        .map(|pr| pr.p)
        .fold(0.0, f64::max);
    (q_lo, q_hi)
}

fn next_probe(probes: &[Probe], width: f64) -> Option<f64> {
    let (q_lo, q_hi) = bracket(probes);
    if q_hi == f64::INFINITY {
        let top = probes.iter().map(|pr| pr.p).fold(0.0, f64::max);
        return Some(2.0 * top);
    }
    if q_hi - q_lo <= width {
        return None;
    }
    if q_lo == 0.0 && !probes.iter().any(|pr| pr.p < q_hi) {
        return Some(q_hi / 2.0);
    }
    // Inconclusive probes split the bracket; refine the outer gaps.
    let mut inner: Vec<f64> = probes.iter().filter(|pr| pr.p > q_lo && pr.p < q_hi).map(|pr| pr.p).collect();
    inner.sort_by(f64::total_cmp);
    let (first, last) = match (inner.first(), inner.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Some((q_lo + q_hi) / 2.0),
    };
    let resolution = width / 4.0;
    let gaps = [(first - q_lo, (q_lo + first) / 2.0), (q_hi - last, (last + q_hi) / 2.0)];
    let (gap, mid) = if gaps[0].0 >= gaps[1].0 { gaps[0] } else { gaps[1] };
    (gap > resolution).then_some(mid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submultiplicativity {
    /// Largest `M_{k+l} / (M'_k · M_l)` over pairs with nonzero denominators.
    pub constant: Option<f64>,
    /// `(k, l, ratio)` for every valid pair.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Largest relative deviation of a ratio from the median ratio.
    pub spread: Option<f64>,
    pub note: Option<String>,
}

pub fn check_submultiplicativity(standard: &ModulusCurve, ring: &ModulusCurve) -> Result<Submultiplicativity> {
    const OP: &str = "critical_exponent::check_submultiplicativity";
    if standard.p != ring.p || standard.l != ring.l || standard.variant != Variant::Standard || ring.variant != Variant::Ring {
        return Err(Error::Argument { op: OP, msg: String::from("needs a standard and a ring curve at the same p and L") });
    }
    let mut pairs = Vec::new();
    for e in &standard.entries {
        for k in 1..e.k {
            let l = e.k - k;
            let (Some(ring_k), Some(m_l)) = (ring.value(k), standard.value(l)) else { continue };
            let den = ring_k * m_l;
            if den > 0.0 {
                pairs.push((k, l, e.value / den));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(Submultiplicativity {
            constant: None,
            pairs,
            spread: None,
            note: Some(String::from("no pair (k, l) with nonzero denominator; the check is vacuous")),
        });
    }
    let constant = pairs.iter().map(|x| x.2).fold(0.0, f64::max);
    let mut ratios: Vec<f64> = pairs.iter().map(|x| x.2).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 { ratios[n / 2] } else { (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0 };
    let spread = if median > 0.0 { Some(ratios.iter().map(|r| (r / median - 1.0).abs()).fold(0.0, f64::max)) } else { None };
    Ok(Submultiplicativity { constant: Some(constant), pairs, spread, note: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    /// `(k, large_scale, ring)` at common `k`.
    pub rows: Vec<(usize, f64, f64)>,
    pub holds: bool,
}

/// Compares a large-scale curve against a ring curve at common `k`.
pub fn check_large_scale_domination(large: &ModulusCurve, ring: &ModulusCurve, tol: f64) -> Domination {
    let rows: Vec<(usize, f64, f64)> =
        large.entries.iter().filter_map(|e| ring.value(e.k).map(|r| (e.k, e.value, r))).collect();
    let holds = rows.iter().all(|&(_, x, r)| x <= r + tol * r.max(1.0));
    Domination { rows, holds }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LIndependence {
    pub shift: usize,
    pub constant: f64,
}

/// Smallest shift `l` with `M_{l+k}(L) <= M_k(L')` on the common range, and
/// the constant `max_k M_{l+k}(L) / M_k(L')` for it. When no shift reaches 1
/// the shift with the smallest constant is returned.
pub fn check_l_independence(curve_l: &ModulusCurve, curve_lp: &ModulusCurve, tol: f64) -> Result<LIndependence> {
    const OP: &str = "critical_exponent::check_l_independence";
    if curve_l.p != curve_lp.p || !(curve_l.l > 1.0 && curve_l.l <= curve_lp.l) {
        return Err(Error::Argument { op: OP, msg: format!("needs 1 < L <= L' at one p, got {} and {}", curve_l.l, curve_lp.l) });
    }
    let mut best: Option<LIndependence> = None;
    let span = curve_l.entries.len();
    for shift in 0..span {
        let mut constant: f64 = 0.0;
        let mut compared = false;
        for e in &curve_lp.entries {
            let Some(num) = curve_l.value(e.k + shift) else { continue };
            compared = true;
            if num == 0.0 {
                continue;
            }
            constant = if e.value > 0.0 { constant.max(num / e.value) } else { f64::INFINITY };
        }
        if !compared {
            break;
        }
        let found = LIndependence { shift, constant };
        if constant <= 1.0 + tol {
            return Ok(found);
        }
        if best.map_or(true, |b| constant < b.constant) {
            best = Some(found);
        }
    }
    Ok(best.unwrap_or(LIndependence { shift: 0, constant: f64::INFINITY }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub p: f64,
    pub min_value: f64,
    pub floor: f64,
    pub holds: bool,
    pub note: Option<String>,
}

/// `min_k M_{p,k}` against `floor`.
pub fn positivity_at_critical(curve: &ModulusCurve, floor: f64) -> Positivity {
    let min_value = curve.entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let empty = curve.entries.iter().all(|e| e.levels.iter().all(|s| s.empty == s.families));
    let note = if empty {
        Some(String::from("every family is empty; the check is vacuous"))
    } else if min_value < floor {
        Some(format!("curve decays below {floor} at p = {}", curve.p))
    } else {
        None
    };
    Positivity { p: curve.p, min_value, floor, holds: empty || min_value >= floor, note }
}

/// Largest `M_{q,k} − M_{p,k}` over common `k` for curves sorted by `p`.
pub fn p_monotonicity_violation(curves: &[ModulusCurve]) -> f64 {
    pairwise_excess(curves, |c| c.p)
}

/// Largest `M_k(L') − M_k(L)` over common `k` for curves sorted by `L`.
pub fn l_monotonicity_violation(curves: &[ModulusCurve]) -> f64 {
    pairwise_excess(curves, |c| c.l)
}

fn pairwise_excess(curves: &[ModulusCurve], key: impl Fn(&ModulusCurve) -> f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for a in curves {
        for b in curves {
            if key(a) < key(b) {
                for e in &b.entries {
                    if let Some(v) = a.value(e.k) {
                        worst = worst.max(e.value - v);
                    }
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{make_space, Generator};
    use crate::Sequential;

    use alloc::vec;
    fn curve(p: f64, values: &[f64]) -> ModulusCurve {
        ModulusCurve {
            p,
            l: 2.0,
            variant: Variant::Standard,
            base_levels: vec![0],
            entries: values.iter().enumerate().map(|(i, &v)| CurveEntry { k: i + 1, value: v, levels: Vec::new() }).collect(),
        }
    }

    #[test]
    fn rate_of_geometric_sequence() {
        let c = curve(2.0, &[1.0, 0.5, 0.25, 0.125]);
        assert!((fitted_rate(&c, 3) - 0.5).abs() < 1e-12);
        assert_eq!(fitted_rate(&curve(2.0, &[1.0, 0.0, 0.0]), 3), 0.0);
        assert_eq!(classify(c, &DecayRule::default()).regime, Regime::Supercritical);
        assert_eq!(classify(curve(1.0, &[2.0, 2.0, 2.0]), &DecayRule::default()).regime, Regime::Subcritical);
        assert_eq!(classify(curve(1.0, &[2.0, 1.9, 1.85]), &DecayRule::default()).regime, Regime::Inconclusive);
    }

    #[test]
    fn identical_curves_need_no_shift() {
        let c = curve(2.0, &[3.0, 2.0, 1.0]);
        let r = check_l_independence(&c, &c, 1e-9).unwrap();
        assert_eq!((r.shift, r.constant), (0, 1.0));
    }

    #[test]
    fn cantor_families_are_empty_beyond_first_step() {
        let s = make_space(&Generator::cantor(), 5).unwrap();
        let h = Hierarchy::build(s, 3.0, 3.0, 4).unwrap();
        let c = modulus_curve(&h, 2.0, 2.0, (2, 4), &[0], Variant::Standard, &SolverOptions::default(), &Sequential).unwrap();
        for e in &c.entries {
            assert_eq!(e.value, 0.0);
            assert!(e.levels.iter().all(|s| s.empty == s.families));
        }
        let sub = check_submultiplicativity(&c, &ModulusCurve { variant: Variant::Ring, ..c.clone() }).unwrap();
        assert!(sub.constant.is_none() && sub.note.is_some());
        assert!(positivity_at_critical(&c, 0.1).holds);
    }

    #[test]
    fn subunit_exponents_stay_above_one() {
        let s = make_space(&Generator::Interval, 7).unwrap();
        let h = Hierarchy::build(s, 2.0, 3.0, 6).unwrap();
        let c = modulus_curve(&h, 0.5, 2.0, (1, 3), &[3], Variant::Standard, &SolverOptions::default(), &Sequential).unwrap();
        for e in &c.entries {
            assert!(e.levels[0].empty < e.levels[0].families);
            assert!(e.value >= 1.0, "k = {}: {}", e.k, e.value);
        }
    }

    #[test]
    fn shallow_hierarchy_is_rejected() {
        let s = make_space(&Generator::Interval, 4).unwrap();
        let h = Hierarchy::build(s, 2.0, 3.0, 3).unwrap();
        let err = modulus_curve(&h, 2.0, 2.0, (1, 3), &[1], Variant::Standard, &SolverOptions::default(), &Sequential).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
    }
}
