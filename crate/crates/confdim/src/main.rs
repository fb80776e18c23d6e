use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use confdim::config::{SearchName, VariantName};
use confdim::format::to_json;
use confdim::{execute, Command, ExperimentConfig, Pool};

/// Estimate Ahlfors-regular conformal dimension through combinatorial moduli.
///
/// Settings come from an optional TOML file; flags override it. The worker
/// count is read from CONFDIM_WORKERS.
#[derive(Parser)]
#[command(name = "confdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Point count, diameter, resolution, doubling and perfectness estimates.
    SpaceStats(Flags),
    /// Covering hierarchy level sizes and scale compliance.
    Covering(Flags),
    /// Nerve sizes, structural property scan and hyperbolicity sample.
    NerveCheck(Flags),
    /// Modulus curves M_{p,k} for the listed exponents.
    Modulus(Flags),
    /// Bracket for the critical exponent.
    Exponent(Flags),
    /// Build and verify a gauge at one exponent.
    Gauge(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Generator: interval, cantor, cantor(r), cantor_cross_interval,
    /// sierpinski_carpet, sierpinski_gasket.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    snowflake_eps: Option<f64>,
    #[arg(long)]
    max_points: Option<u64>,
    /// Scale ratio between levels.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    resolution_margin: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    property_level: Option<usize>,
    /// Exponent(s): the modulus p list, the exponent grid, or the gauge p.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Annulus ratio.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Single scale step (sets both ends of the k range).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    kmin: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    base_levels: Option<Vec<usize>>,
    #[arg(long)]
    i_max: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<VariantName>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    search: Option<SearchName>,
    #[arg(long)]
    p_lo: Option<f64>,
    #[arg(long)]
    p_hi: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    max_probes: Option<usize>,
    #[arg(long)]
    decay_threshold: Option<f64>,
    #[arg(long)]
    absolute_floor: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta0: Option<f64>,
    /// Point pairs for the sampled length check.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    regularity_samples: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Flags {
    fn apply(self, command: Command, cfg: &mut ExperimentConfig) {
        set(&mut cfg.output, self.out);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.space.generator, self.space);
        set(&mut cfg.space.depth, self.depth);
        set(&mut cfg.space.max_points, self.max_points);
        if self.snowflake_eps.is_some() {
            cfg.space.snowflake_eps = self.snowflake_eps;
        }
        set(&mut cfg.hierarchy.a, self.a);
        set(&mut cfg.hierarchy.lambda, self.lambda);
        if self.n_max.is_some() {
            cfg.hierarchy.n_max = self.n_max;
        }
        set(&mut cfg.hierarchy.resolution_margin, self.resolution_margin);
        set(&mut cfg.stats.samples, self.samples);
        if self.property_level.is_some() {
            cfg.stats.property_level = self.property_level;
        }
        set(&mut cfg.modulus.variant, self.variant);
        if self.delta.is_some() {
            cfg.modulus.delta = self.delta;
        }
        set(&mut cfg.modulus.tol, self.tol);
        set(&mut cfg.modulus.max_iter, self.max_iter);
        let e = &mut cfg.exponent;
        if self.i_max.is_some() {
            e.i_max = self.i_max;
        }
        set(&mut e.search, self.search);
        set(&mut e.p_lo, self.p_lo);
        set(&mut e.p_hi, self.p_hi);
        set(&mut e.width, self.width);
        set(&mut e.max_probes, self.max_probes);
        set(&mut e.decay_threshold, self.decay_threshold);
        set(&mut e.absolute_floor, self.absolute_floor);
        let g = &mut cfg.gauge;
        set(&mut g.alpha, self.alpha);
        if self.eta0.is_some() {
            g.eta0_override = self.eta0;
        }
        set(&mut g.h3_pairs, self.pairs);
        set(&mut g.regularity_samples, self.regularity_samples);
        let (kmin, kmax) = (self.k.or(self.kmin), self.k.or(self.kmax));
        match command {
            Command::Gauge => {
                set(&mut cfg.gauge.l, self.l);
                if let Some(p) = self.p.and_then(|p| p.first().copied()) {
                    cfg.gauge.p = p;
                }
            }
            Command::Exponent => {
                set(&mut cfg.modulus.l, self.l);
                set(&mut cfg.exponent.k_min, kmin);
                set(&mut cfg.exponent.k_max, kmax);
                if let Some(b) = self.base_levels {
                    cfg.exponent.base_levels = Some(b);
                }
                if let Some(ps) = self.p {
                    cfg.exponent.p_grid = ps;
                    cfg.exponent.search = SearchName::Grid;
                }
            }
            _ => {
                set(&mut cfg.modulus.l, self.l);
                set(&mut cfg.modulus.k_min, kmin);
                set(&mut cfg.modulus.k_max, kmax);
                if let Some(b) = self.base_levels {
                    cfg.modulus.base_levels = Some(b);
                }
                set(&mut cfg.modulus.p, self.p);
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::SpaceStats(f) => (Command::SpaceStats, f),
        Sub::Covering(f) => (Command::Covering, f),
        Sub::NerveCheck(f) => (Command::NerveCheck, f),
        Sub::Modulus(f) => (Command::Modulus, f),
        Sub::Exponent(f) => (Command::Exponent, f),
        Sub::Gauge(f) => (Command::Gauge, f),
    };
    let result = (|| {
        let mut cfg = match &flags.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        flags.apply(command, &mut cfg);
        let pool = Pool::from_env()?;
        execute(command, &cfg, &pool)
    })();
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            let names: Vec<String> = outcome.files.iter().map(|f| f.display().to_string()).collect();
            println!("wrote        {}", names.join(", "));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Ok(json) = to_json(&e.payload()) {
                eprint!("{json}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
