use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use confdim_core::covering::CoveringOptions;
use confdim_core::exponent::{
    auto_base_levels, estimate_qn, modulus_curve, DecayRule, ExponentEstimate, ExponentParams, ModulusCurve, Regime, Search,
    Variant,
};
use confdim_core::gauge::{build_gauge, GaugeOptions, GaugeReport};
use confdim_core::modulus::SolverOptions;
use confdim_core::nerve::{check_graph_properties, sample_hyperbolicity, Compliance, PropertyReport};
use confdim_core::space::{estimate_doubling, estimate_uniform_perfectness, make_space_capped};
use confdim_core::{deepest_level, Generator, Hierarchy, MetricSpace};

use crate::config::{ExperimentConfig, SearchName, VariantName};
use crate::format::{curves_csv, float17, write_file, write_json};
use crate::{CliError, ErrorPayload, Pool};

/// Version of the `report.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SpaceStats,
    Covering,
    NerveCheck,
    Modulus,
    Exponent,
    Gauge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SpaceStats => "space-stats",
            Command::Covering => "covering",
            Command::NerveCheck => "nerve-check",
            Command::Modulus => "modulus",
            Command::Exponent => "exponent",
            Command::Gauge => "gauge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    status: &'static str,
    config: &'a ExperimentConfig,
    result: Option<T>,
    error: Option<ErrorPayload>,
}

#[derive(Serialize)]
struct SpaceStats {
    generator: String,
    depth: usize,
    points: usize,
    dimension: usize,
    exponent: f64,
    diameter: f64,
    resolution: f64,
    doubling: f64,
    uniform_perfectness: f64,
}

#[derive(Serialize)]
struct LevelStats {
    level: usize,
    radius: f64,
    elements: usize,
    max_children: usize,
}

#[derive(Serialize)]
struct CoveringStats {
    a: f64,
    kappa: f64,
    n_max: usize,
    levels: Vec<LevelStats>,
    compliance: Compliance,
}

#[derive(Serialize)]
struct NerveLevel {
    level: usize,
    vertices: usize,
    edges: usize,
    max_degree: usize,
}

#[derive(Serialize)]
struct NerveStats {
    lambda: f64,
    levels: Vec<NerveLevel>,
    z_vertices: usize,
    z_edges: usize,
    hyperbolicity_delta: f64,
    properties: PropertyReport,
    compliance: Compliance,
}

#[derive(Serialize)]
struct CurveSummary {
    p: f64,
    #[serde(rename = "L")]
    l: f64,
    variant: String,
    base_levels: Vec<usize>,
    k: Vec<usize>,
    values: Vec<f64>,
    empty_families: usize,
    unconverged: usize,
}

#[derive(Serialize)]
struct ProbeSummary {
    p: f64,
    regime: Regime,
    rate: f64,
    last: f64,
}

#[derive(Serialize)]
struct ExponentSummary {
    q_lo: f64,
    q_hi: f64,
    width: f64,
    probes: Vec<ProbeSummary>,
    inconsistent: Vec<f64>,
}

#[derive(Serialize)]
struct GaugeSummary {
    p: f64,
    eta0: f64,
    eta_minus: f64,
    eta_plus: f64,
    k0: f64,
    k1: f64,
    k2: f64,
    telescoping_error: f64,
    k_qm: f64,
    regularity_spread: f64,
    h1: bool,
    h2: bool,
    h3: bool,
    h4: bool,
    regular: bool,
}

fn summarize(c: &ModulusCurve) -> CurveSummary {
    CurveSummary {
        p: c.p,
        l: c.l,
        variant: c.variant.label(),
        base_levels: c.base_levels.clone(),
        k: c.entries.iter().map(|e| e.k).collect(),
        values: c.entries.iter().map(|e| e.value).collect(),
        empty_families: c.entries.iter().flat_map(|e| &e.levels).map(|l| l.empty).sum(),
        unconverged: c.entries.iter().flat_map(|e| &e.levels).map(|l| l.unconverged).sum(),
    }
}

/// Steps `k` at which every family of the curve was empty.
fn empty_steps(c: &ModulusCurve) -> Vec<usize> {
    c.entries.iter().filter(|e| e.levels.iter().all(|l| l.empty == l.families)).map(|e| e.k).collect()
}

fn build_space(cfg: &ExperimentConfig) -> Result<MetricSpace, CliError> {
    let mut generator: Generator = cfg.space.generator.parse()?;
    if let Some(eps) = cfg.space.snowflake_eps {
        generator = generator.snowflaked(eps);
    }
    Ok(make_space_capped(&generator, cfg.space.depth, cfg.space.max_points)?)
}

fn build_hierarchy(cfg: &ExperimentConfig, space: MetricSpace) -> Result<Hierarchy, CliError> {
    let h = &cfg.hierarchy;
    let n_max = h.n_max.unwrap_or_else(|| deepest_level(&space, h.a, h.resolution_margin));
    let opts = CoveringOptions { resolution_margin: h.resolution_margin };
    Ok(Hierarchy::build_with(space, h.a, h.lambda, n_max, opts)?)
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions { tol: cfg.modulus.tol, max_iter: cfg.modulus.max_iter, cuts_per_round: cfg.modulus.cuts_per_round }
}

fn variant(cfg: &ExperimentConfig) -> Variant {
    match cfg.modulus.variant {
        VariantName::Standard => Variant::Standard,
        VariantName::Ring => Variant::Ring,
        VariantName::LargeScale => Variant::LargeScale { delta: cfg.modulus.delta.unwrap_or(1.0 / (6.0 * cfg.modulus.l)) },
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { op: "cli::write_report", msg: format!("{}: {e}", dir.display()) })
}

/// Runs one subcommand and writes its files into `cfg.output`.
///
/// `report.json` is written on failure too, carrying the error payload.
pub fn execute(command: Command, cfg: &ExperimentConfig, pool: &Pool) -> Result<Outcome, CliError> {
    cfg.validate()?;
    create_dir(&cfg.output)?;
    let report_path = cfg.output.join("report.json");
    let mut files = Vec::new();
    let mut summary = String::new();
    let result = match command {
        Command::SpaceStats => space_stats(cfg, &mut summary).map(to_value),
        Command::Covering => covering(cfg, &mut summary).map(to_value),
        Command::NerveCheck => nerve_check(cfg, &mut summary).map(to_value),
        Command::Modulus => modulus(cfg, pool, &mut files, &mut summary).map(to_value),
        Command::Exponent => exponent(cfg, pool, &mut files, &mut summary).map(to_value),
        Command::Gauge => gauge(cfg, pool, &mut files, &mut summary).map(to_value),
    };
    let result = result.and_then(|r| r);
    let (status, result, error) = match result {
        Ok(v) => ("ok", Some(v), None),
        Err(e) => ("error", None, Some(e)),
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: command.name(),
        status,
        config: cfg,
        result,
        error: error.as_ref().map(CliError::payload),
    };
    write_json(&report_path, &report)?;
    files.push(report_path);
    match error {
        Some(e) => Err(e),
        None => Ok(Outcome { files, summary }),
    }
}

fn to_value<T: Serialize>(v: T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Io { op: "cli::encode_json", msg: e.to_string() })
}

fn space_stats(cfg: &ExperimentConfig, out: &mut String) -> Result<SpaceStats, CliError> {
    let space = build_space(cfg)?;
    let stats = SpaceStats {
        generator: space.generator().to_string(),
        depth: space.depth(),
        points: space.len(),
        dimension: space.dim(),
        exponent: space.exponent(),
        diameter: space.diameter(),
        resolution: space.resolution(),
        doubling: estimate_doubling(&space, cfg.stats.samples, cfg.seed),
        uniform_perfectness: estimate_uniform_perfectness(&space, cfg.stats.samples, cfg.seed),
    };
    let _ = writeln!(out, "space        {} depth {} ({} points in R^{})", stats.generator, stats.depth, stats.points, stats.dimension);
    let _ = writeln!(out, "diameter     {}", float17(stats.diameter));
    let _ = writeln!(out, "resolution   {}", float17(stats.resolution));
    let _ = writeln!(out, "doubling     {}  ({} samples)", stats.doubling, cfg.stats.samples);
    let _ = writeln!(out, "perfectness  {}", stats.uniform_perfectness);
    Ok(stats)
}

fn covering(cfg: &ExperimentConfig, out: &mut String) -> Result<CoveringStats, CliError> {
    let h = build_hierarchy(cfg, build_space(cfg)?)?;
    let levels = (0..=h.n_max())
        .map(|n| LevelStats {
            level: n,
            radius: h.radius(n),
            elements: h.covering.level(n).len(),
            max_children: h.genealogy.max_children.get(n).copied().unwrap_or(0),
        })
        .collect::<Vec<_>>();
    let _ = writeln!(out, "covering     a = {}, kappa = {}, n_max = {}", h.covering.a, h.kappa(), h.n_max());
    for l in &levels {
        let _ = writeln!(out, "  level {:>2}   r = {:<24} {:>7} elements, max {} children", l.level, float17(l.radius), l.elements, l.max_children);
    }
    let c = h.nerve.compliance.clone();
    let _ = writeln!(out, "compliance   a ≥ {} {}", c.required_a, if c.satisfied { "met" } else { "not met (structural properties checked empirically)" });
    Ok(CoveringStats { a: h.covering.a, kappa: h.kappa(), n_max: h.n_max(), levels, compliance: c })
}

fn nerve_check(cfg: &ExperimentConfig, out: &mut String) -> Result<NerveStats, CliError> {
    let h = build_hierarchy(cfg, build_space(cfg)?)?;
    let top = cfg.stats.property_level.unwrap_or(h.n_max()).min(h.n_max());
    let properties = check_graph_properties(&h.space, &h.nerve, &h.covering, &h.genealogy, top);
    let z = h.nerve.z_graph();
    let delta = sample_hyperbolicity(&h.nerve, cfg.stats.hyperbolicity_samples, cfg.seed)?;
    let levels = (0..=h.n_max())
        .map(|n| {
            let g = h.nerve.level(n);
            NerveLevel { level: n, vertices: g.vertex_count(), edges: g.edge_count(), max_degree: g.max_degree() }
        })
        .collect();
    let _ = writeln!(out, "nerve        lambda = {}, {} vertices, {} edges in Z_d", h.nerve.lambda, z.vertex_count(), z.edge_count());
    for item in &properties.items {
        let _ = writeln!(out, "  {:<6} {:>9} checked, {:>6} violated", item.item, item.applicable, item.violated);
    }
    let _ = writeln!(out, "compliant    {} (levels ≤ {top})", properties.compliant);
    let _ = writeln!(out, "delta        {} ({} samples)", float17(delta), cfg.stats.hyperbolicity_samples);
    Ok(NerveStats {
        lambda: h.nerve.lambda,
        levels,
        z_vertices: z.vertex_count(),
        z_edges: z.edge_count(),
        hyperbolicity_delta: delta,
        properties,
        compliance: h.nerve.compliance.clone(),
    })
}

fn modulus(cfg: &ExperimentConfig, pool: &Pool, files: &mut Vec<PathBuf>, out: &mut String) -> Result<Vec<CurveSummary>, CliError> {
    let h = build_hierarchy(cfg, build_space(cfg)?)?;
    let m = &cfg.modulus;
    let base_levels = match &m.base_levels {
        Some(b) => b.clone(),
        None => auto_base_levels(&h, m.k_max, usize::MAX)?,
    };
    let opts = solver(cfg);
    let mut curves = Vec::new();
    for &p in &m.p {
        curves.push(modulus_curve(&h, p, m.l, (m.k_min, m.k_max), &base_levels, variant(cfg), &opts, pool)?);
    }
    let path = cfg.output.join("modulus_curves.csv");
    write_file(&path, curves_csv(&curves)?.as_bytes())?;
    files.push(path);
    let _ = writeln!(out, "modulus      L = {}, {}, base levels {:?}", m.l, variant(cfg).label(), base_levels);
    for c in &curves {
        let vals: Vec<String> = c.entries.iter().map(|e| format!("k={} {:.6e}", e.k, e.value)).collect();
        let _ = writeln!(out, "  p = {:<6} {}", c.p, vals.join("  "));
    }
    if let Some(c) = curves.first() {
        let empty = empty_steps(c);
        if !empty.is_empty() {
            let _ = writeln!(out, "  note: every family is empty at k = {empty:?}");
        }
    }
    Ok(curves.iter().map(summarize).collect())
}

fn exponent(cfg: &ExperimentConfig, pool: &Pool, files: &mut Vec<PathBuf>, out: &mut String) -> Result<ExponentSummary, CliError> {
    let h = build_hierarchy(cfg, build_space(cfg)?)?;
    let e = &cfg.exponent;
    let base_levels = match &e.base_levels {
        Some(b) => b.clone(),
        None => auto_base_levels(&h, e.k_max, e.i_max.unwrap_or(usize::MAX))?,
    };
    let search = match e.search {
        SearchName::Bisection => Search::Bisection { p_lo: e.p_lo, p_hi: e.p_hi, width: e.width, max_probes: e.max_probes },
        SearchName::Grid => Search::Grid { ps: e.p_grid.clone() },
    };
    let params = ExponentParams {
        l: cfg.modulus.l,
        k_range: (e.k_min, e.k_max),
        base_levels,
        variant: variant(cfg),
        rule: DecayRule {
            decay_threshold: e.decay_threshold,
            absolute_floor: e.absolute_floor,
            subcritical_floor: e.subcritical_floor,
            window: e.window,
        },
        search,
    };
    let est: ExponentEstimate = estimate_qn(&h, cfg.hierarchy.lambda, &params, &solver(cfg), pool)?;
    let path = cfg.output.join("exponent.json");
    write_json(&path, &est)?;
    files.push(path);
    let curves: Vec<ModulusCurve> = est.probes.iter().map(|p| p.curve.clone()).collect();
    let path = cfg.output.join("modulus_curves.csv");
    write_file(&path, curves_csv(&curves)?.as_bytes())?;
    files.push(path);
    let _ = writeln!(out, "exponent     bracket [{}, {}]  width {}", est.q_lo, est.q_hi, est.q_hi - est.q_lo);
    let _ = writeln!(out, "             k = {}..={}, base levels {:?}, L = {}", e.k_min, e.k_max, params.base_levels, params.l);
    for p in &est.probes {
        let _ = writeln!(out, "  p = {:<10.6} {:<13} rate {:.4}  M_kmax {:.6e}", p.p, format!("{:?}", p.regime), p.rate, p.last);
    }
    if let Some(p) = est.probes.first() {
        let empty = empty_steps(&p.curve);
        if !empty.is_empty() {
            let _ = writeln!(out, "  note: every family is empty at k = {empty:?}; zero moduli there come from the geometry or from shallow base levels");
        }
    }
    if !est.inconsistent.is_empty() {
        let _ = writeln!(out, "  warning: subcritical above a supercritical probe at {:?}", est.inconsistent);
    }
    Ok(ExponentSummary {
        q_lo: est.q_lo,
        q_hi: est.q_hi,
        width: est.q_hi - est.q_lo,
        probes: est.probes.iter().map(|p| ProbeSummary { p: p.p, regime: p.regime, rate: p.rate, last: p.last }).collect(),
        inconsistent: est.inconsistent.clone(),
    })
}

fn gauge(cfg: &ExperimentConfig, pool: &Pool, files: &mut Vec<PathBuf>, out: &mut String) -> Result<GaugeSummary, CliError> {
    let h = build_hierarchy(cfg, build_space(cfg)?)?;
    let g = &cfg.gauge;
    let opts = GaugeOptions {
        p: g.p,
        alpha: g.alpha,
        l: g.l,
        eta0_override: g.eta0_override,
        eta0_start: g.eta0_start,
        max_attempts: g.max_attempts,
        h3_pairs: g.h3_pairs,
        regularity_samples: g.regularity_samples,
        regularity_bound: g.regularity_bound,
        qm_triples: g.qm_triples,
        seed: cfg.seed,
        solver: solver(cfg),
    };
    let report: GaugeReport = build_gauge(&h, &opts, pool)?.report;
    let path = cfg.output.join("gauge_report.json");
    write_json(&path, &report)?;
    files.push(path);
    let hy = &report.hypotheses;
    let mark = |b: bool| if b { "pass" } else { "FAIL" };
    let _ = writeln!(out, "gauge        p = {}, alpha = {}, eta0 = {} after {} attempt(s)", report.p, report.alpha, report.eta0, report.attempts.len());
    let _ = writeln!(out, "  H1 {}  eta in [{:.6}, {:.6}]", mark(hy.h1.passed), hy.h1.min, hy.h1.max);
    let _ = writeln!(out, "  H2 {}  K0 = {:.6} (target {:.6})", mark(hy.h2.passed), hy.h2.k0, hy.h2.target);
    let _ = writeln!(out, "  H3 {}  K1 = {:.6} on {} pairs", mark(hy.h3.passed), hy.h3.k1, hy.h3.pairs);
    let _ = writeln!(out, "  H4 {}  K2 = {:.17}, telescoping error {:.3e}", mark(hy.h4.passed), hy.h4.k2, hy.h4.max_error);
    let _ = writeln!(out, "  regularity {}  spread {:.4} (bound {})", mark(report.regularity.passed), report.regularity.spread, report.regularity.bound);
    let _ = writeln!(out, "  quasi-metric constant {:.6}", report.k_qm);
    Ok(GaugeSummary {
        p: report.p,
        eta0: report.eta0,
        eta_minus: report.eta_minus,
        eta_plus: report.eta_plus,
        k0: hy.h2.k0,
        k1: hy.h3.k1,
        k2: hy.h4.k2,
        telescoping_error: hy.h4.max_error,
        k_qm: report.k_qm,
        regularity_spread: report.regularity.spread,
        h1: hy.h1.passed,
        h2: hy.h2.passed,
        h3: hy.h3.passed,
        h4: hy.h4.passed,
        regular: report.regularity.passed,
    })
}
