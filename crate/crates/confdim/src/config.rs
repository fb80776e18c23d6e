//! Experiment configuration: a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Where reports go; not part of the recorded experiment.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    pub space: SpaceConfig,
    pub hierarchy: HierarchyConfig,
    pub stats: StatsConfig,
    pub modulus: ModulusConfig,
    pub exponent: ExponentConfig,
    pub gauge: GaugeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    /// Generator name as accepted by the core parser, e.g. `cantor(1/3)`.
    pub generator: String,
    pub depth: usize,
    pub snowflake_eps: Option<f64>,
    /// Refuse to build clouds above this many points.
    pub max_points: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    pub a: f64,
    pub lambda: f64,
    /// Only `"net"` (maximal separated nets, κ = 2) is implemented.
    pub kappa_policy: String,
    /// Deepest level; defaults to the finest the resolution admits.
    pub n_max: Option<usize>,
    pub resolution_margin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub samples: usize,
    /// Deepest level for the exhaustive nerve property scan.
    pub property_level: Option<usize>,
    pub hyperbolicity_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Standard,
    Ring,
    LargeScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulusConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub p: Vec<f64>,
    pub k_min: usize,
    pub k_max: usize,
    /// Defaults to every level leaving room for `k_max`.
    pub base_levels: Option<Vec<usize>>,
    pub variant: VariantName,
    /// Separation for the large-scale variant; defaults to `1/(6L)`.
    pub delta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub cuts_per_round: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SearchName {
    Bisection,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Defaults to every level leaving room for `k_max`, capped at `i_max`.
    pub base_levels: Option<Vec<usize>>,
    pub i_max: Option<usize>,
    pub decay_threshold: f64,
    pub absolute_floor: f64,
    pub subcritical_floor: f64,
    pub window: usize,
    pub search: SearchName,
    pub p_lo: f64,
    pub p_hi: f64,
    pub width: f64,
    pub max_probes: usize,
    pub p_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeConfig {
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub eta0_override: Option<f64>,
    pub eta0_start: f64,
    pub max_attempts: usize,
    pub h3_pairs: usize,
    pub regularity_samples: usize,
    pub regularity_bound: f64,
    pub qm_triples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output: PathBuf::from("confdim-out"),
            space: SpaceConfig::default(),
            hierarchy: HierarchyConfig::default(),
            stats: StatsConfig::default(),
            modulus: ModulusConfig::default(),
            exponent: ExponentConfig::default(),
            gauge: GaugeConfig::default(),
        }
    }
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig { generator: "interval".into(), depth: 6, snowflake_eps: None, max_points: 1 << 20 }
    }
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig { a: 2.0, lambda: 3.0, kappa_policy: "net".into(), n_max: None, resolution_margin: 0 }
    }
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { samples: 1_000, property_level: Some(3), hyperbolicity_samples: 1_000 }
    }
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig {
            l: 2.0,
            p: vec![2.0],
            k_min: 1,
            k_max: 3,
            base_levels: None,
            variant: VariantName::Standard,
            delta: None,
            tol: 1e-6,
            max_iter: 10_000,
            cuts_per_round: 16,
        }
    }
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            k_min: 1,
            k_max: 4,
            base_levels: None,
            i_max: None,
            decay_threshold: 0.9,
            absolute_floor: 1e-3,
            subcritical_floor: 0.1,
            window: 3,
            search: SearchName::Bisection,
            p_lo: 0.5,
            p_hi: 4.0,
            width: 0.05,
            max_probes: 16,
            p_grid: Vec::new(),
        }
    }
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
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
        }
    }
}

fn invalid(msg: String) -> CliError {
    CliError::Config { op: "cli::validate_config", msg }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive and finite")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { op: "cli::load_config", msg: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config { op: "cli::load_config", msg: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let h = &self.hierarchy;
        if !(h.a > 1.0 && h.a.is_finite()) {
            return Err(invalid(format!("hierarchy.a = {} must exceed 1", h.a)));
        }
        if !(h.lambda >= 1.0 && h.lambda.is_finite()) {
            return Err(invalid(format!("hierarchy.lambda = {} must be at least 1", h.lambda)));
        }
        if h.kappa_policy != "net" {
            return Err(invalid(format!("hierarchy.kappa_policy = {:?}; only \"net\" is supported", h.kappa_policy)));
        }
        if let Some(eps) = self.space.snowflake_eps {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(invalid(format!("space.snowflake_eps = {eps} outside (0, 1]")));
            }
        }
        let m = &self.modulus;
        if !(m.l >= 1.0 && m.l.is_finite()) {
            return Err(invalid(format!("modulus.L = {} must be at least 1", m.l)));
        }
        if m.p.is_empty() || m.p.iter().any(|&p| !(p >= 1.0 && p.is_finite())) {
            return Err(invalid(format!("modulus.p = {:?} must be a nonempty list of values ≥ 1", m.p)));
        }
        if m.k_min < 1 || m.k_min > m.k_max {
            return Err(invalid(format!("modulus k range {}..={} is empty or starts below 1", m.k_min, m.k_max)));
        }
        positive("modulus.tol", m.tol)?;
        if let Some(d) = m.delta {
            positive("modulus.delta", d)?;
        }
        let e = &self.exponent;
        if e.k_min < 1 || e.k_min > e.k_max {
            return Err(invalid(format!("exponent k range {}..={} is empty or starts below 1", e.k_min, e.k_max)));
        }
        if !(e.decay_threshold > 0.0 && e.decay_threshold < 1.0) {
            return Err(invalid(format!("exponent.decay_threshold = {} outside (0, 1)", e.decay_threshold)));
        }
        positive("exponent.absolute_floor", e.absolute_floor)?;
        if e.window < 2 {
            return Err(invalid(format!("exponent.window = {} must be at least 2", e.window)));
        }
        match e.search {
            SearchName::Bisection => {
                positive("exponent.p_lo", e.p_lo)?;
                positive("exponent.width", e.width)?;
                if !(e.p_hi > e.p_lo) || e.max_probes < 2 {
                    return Err(invalid(format!(
                        "bisection needs p_lo < p_hi and at least two probes, got [{}, {}] with {}",
                        e.p_lo, e.p_hi, e.max_probes
                    )));
                }
            }
            SearchName::Grid => {
                if e.p_grid.is_empty() || e.p_grid.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                    return Err(invalid(format!("exponent.p_grid = {:?} must be a nonempty list of positive values", e.p_grid)));
                }
            }
        }
        let g = &self.gauge;
        if !(g.p >= 1.0 && g.p.is_finite()) {
            return Err(invalid(format!("gauge.p = {} must be at least 1", g.p)));
        }
        if !(g.alpha >= 2.0 && g.alpha.is_finite()) {
            return Err(invalid(format!("gauge.alpha = {} must be at least 2", g.alpha)));
        }
        if !(g.l >= 1.0 && g.l.is_finite()) {
            return Err(invalid(format!("gauge.L = {} must be at least 1", g.l)));
        }
        if let Some(eta) = g.eta0_override {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(invalid(format!("gauge.eta0_override = {eta} outside (0, 1)")));
            }
        }
        if !(g.eta0_start > 0.0 && g.eta0_start < 1.0) || g.max_attempts == 0 {
            return Err(invalid(format!("gauge.eta0_start = {} outside (0, 1) or no attempts allowed", g.eta0_start)));
        }
        positive("gauge.regularity_bound", g.regularity_bound)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::parse("sed = 1"), Err(CliError::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("[gauge]\nbeta = 2"), Err(CliError::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("[extra]\n"), Err(CliError::Config { .. })));
    }

    #[test]
    fn sections_parse() {
        let c = ExperimentConfig::parse(
            "seed = 7\n[space]\ngenerator = \"cantor\"\ndepth = 5\n[hierarchy]\na = 3\nn_max = 4\n[modulus]\nL = 3\np = [1.5, 2]\nvariant = \"ring\"\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.space.generator, "cantor");
        assert_eq!(c.hierarchy.n_max, Some(4));
        assert_eq!(c.modulus.l, 3.0);
        assert_eq!(c.modulus.p, vec![1.5, 2.0]);
        assert_eq!(c.modulus.variant, VariantName::Ring);
        c.validate().unwrap();
    }

    #[test]
    fn out_of_range_values_fail_validation() {
        let mut c = ExperimentConfig::default();
        c.gauge.alpha = 1.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.hierarchy.a = 1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.exponent.k_min = 5;
        assert!(c.validate().is_err());
    }
}
