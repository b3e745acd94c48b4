//! `xsb`: run one experiment, write `<stem>.csv` and `<stem>.json`.
//!
//! Every subcommand accepts `--config <file.toml>`; explicit flags win
//! over file keys.  Exit codes: 0 for a completed run (even one whose
//! iteration did not converge), 2 for config mistakes, 3 for impossible
//! lattice geometries, 1 for everything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xsb_cli::{list_presets, run_config, CliError, ExperimentConfig, ExperimentKind, ParamsSection};
use xsb_core::lattice::{DomainKind, GeometrySpec, Sign};

#[derive(Parser)]
#[command(
    name = "xsb",
    version,
    about = "lattice experiments for dispersive space-time norms"
)]
struct Cli {
    /// Worker threads; the XSB_WORKERS variable is honored when absent.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory the report files land in.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survey weighted norms over a random ensemble.
    Norm(NormArgs),
    /// Cross-check the pairwise multiplier against its brute-force twin.
    BilinearCheck(BilinearArgs),
    /// Search for large inequality quotients on one registered case.
    Quotient(QuotientArgs),
    /// Fit the growth of a concentration family's quotient.
    Counterexample(CounterexampleArgs),
    /// Run a local Picard solve on random rough data.
    Solve(SolveArgs),
    /// Run a named preset from the catalog.
    Preset(PresetArgs),
    /// Print the preset catalog.
    ListPresets,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output stem for <stem>.csv and <stem>.json.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct GeometryArgs {
    /// torus_1d, torus_2d, torus_3d or line_1d.
    #[arg(long)]
    domain: Option<String>,
    /// Spatial modes per axis (even).
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    xi_spacing: Option<f64>,
    /// Tau rows (even).
    #[arg(long)]
    tau_count: Option<usize>,
    #[arg(long)]
    tau_spacing: Option<f64>,
}

impl GeometryArgs {
    fn any(&self) -> bool {
        self.domain.is_some()
            || self.modes.is_some()
            || self.xi_spacing.is_some()
            || self.tau_count.is_some()
            || self.tau_spacing.is_some()
    }

    /// Fold the flags into the configured geometry.  A fresh `--domain`
    /// restarts from that domain's default spec so stale spacings from an
    /// unrelated domain never leak through.
    fn merge(&self, existing: Option<GeometrySpec>) -> Result<Option<GeometrySpec>, CliError> {
        if !self.any() {
            return Ok(existing);
        }
        let domain = match &self.domain {
            Some(name) => Some(parse_domain(name)?),
            None => None,
        };
        let mut spec = match (&existing, domain) {
            (Some(g), None) => g.clone(),
            (Some(g), Some(d)) if g.domain_kind == d => g.clone(),
            (_, Some(d)) => xsb_cli::default_geometry_spec(d),
            (None, None) => {
                return Err(CliError::Config(
                    "geometry overrides need --domain or a [geometry] section".into(),
                ))
            }
        };
        if let Some(v) = self.modes {
            spec.modes_per_axis = v;
        }
        if let Some(v) = self.xi_spacing {
            spec.xi_spacing = v;
        }
        if let Some(v) = self.tau_count {
            spec.tau_count = v;
        }
        if let Some(v) = self.tau_spacing {
            spec.tau_spacing = v;
        }
        Ok(Some(spec))
    }
}

fn parse_domain(name: &str) -> Result<DomainKind, CliError> {
    match name {
        "torus_1d" => Ok(DomainKind::Torus1d),
        "torus_2d" => Ok(DomainKind::Torus2d),
        "torus_3d" => Ok(DomainKind::Torus3d),
        "line_1d" => Ok(DomainKind::Line1d),
        other => Err(CliError::Config(format!(
            "unknown domain `{other}` (expected torus_1d, torus_2d, torus_3d or line_1d)"
        ))),
    }
}

fn parse_sign(name: &str) -> Result<Sign, CliError> {
    match name {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        other => Err(CliError::Config(format!(
            "unknown sign `{other}` (expected + or -)"
        ))),
    }
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Regularity weight exponent.
    #[arg(long)]
    s: Option<f64>,
    /// Modulation weight exponent.
    #[arg(long)]
    b: Option<f64>,
    /// Weight branch, + or -.
    #[arg(long)]
    sign: Option<String>,
    /// Spectral decay of the sampled ensemble.
    #[arg(long)]
    alpha: Option<f64>,
    /// Ensemble size.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct BilinearArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// i_minus, j_minus, i_plus or j_plus.
    #[arg(long)]
    symbol: Option<String>,
    /// Symbol exponent.
    #[arg(long)]
    s: Option<f64>,
    /// Number of random pairs.
    #[arg(long)]
    pairs: Option<usize>,
}

#[derive(Args)]
struct QuotientArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Case id; `xsb list-presets` names them all.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    bprime: Option<f64>,
    /// Random candidates per point.
    #[arg(long)]
    samples: Option<usize>,
    /// Greedy sharpening steps per candidate.
    #[arg(long)]
    climb_steps: Option<usize>,
    /// Tau refinement factor (at least 2) for a stability recheck.
    #[arg(long)]
    refine: Option<usize>,
    /// Comma-separated regularity sweep overriding --s.
    #[arg(long, value_delimiter = ',')]
    s_list: Option<Vec<f64>>,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Family id; `xsb list-presets` names them all.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    bprime: Option<f64>,
    /// Comma-separated concentration ladder, e.g. 4,8,16,32.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Plain power of the nonlinearity.
    #[arg(long)]
    plain: Option<usize>,
    /// Conjugate power of the nonlinearity.
    #[arg(long)]
    conjugated: Option<usize>,
    #[arg(long)]
    coeff_re: Option<f64>,
    #[arg(long)]
    coeff_im: Option<f64>,
    /// Half-length of the time interval.
    #[arg(long)]
    t_half: Option<f64>,
    /// Time slices per half-interval.
    #[arg(long)]
    time_steps: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Data regularity and convergence metric.
    #[arg(long)]
    sobolev_index: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Extra spectral decay of the data.
    #[arg(long)]
    excess: Option<f64>,
    /// Perturbation size for a stability probe.
    #[arg(long)]
    lipschitz_delta: Option<f64>,
    #[arg(long)]
    lipschitz_trials: Option<usize>,
    /// Halve t_half up to this many times until the iteration contracts.
    #[arg(long)]
    halvings: Option<usize>,
}

#[derive(Args)]
struct PresetArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Preset id from `xsb list-presets`.
    name: Option<String>,
}

fn load_base(
    config: &Option<PathBuf>,
    kind: ExperimentKind,
) -> Result<ExperimentConfig, CliError> {
    let Some(path) = config else {
        return Ok(ExperimentConfig::empty(kind));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if cfg.kind != kind {
        return Err(CliError::Config(format!(
            "config kind `{}` does not match subcommand `{}`",
            cfg.kind.name(),
            kind.name()
        )));
    }
    Ok(cfg)
}

fn apply_common(cfg: &mut ExperimentConfig, common: &CommonArgs) {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(output) = &common.output {
        cfg.output = Some(output.clone());
    }
}

fn merge_params(
    existing: Option<ParamsSection>,
    s: Option<f64>,
    b: Option<f64>,
    bprime: Option<f64>,
) -> Option<ParamsSection> {
    if s.is_none() && b.is_none() && bprime.is_none() {
        return existing;
    }
    let mut params = existing.unwrap_or_default();
    if let Some(v) = s {
        params.s = Some(v);
    }
    if let Some(v) = b {
        params.b = Some(v);
    }
    if let Some(v) = bprime {
        params.bprime = v;
    }
    Some(params)
}

fn assemble(command: &Command) -> Result<ExperimentConfig, CliError> {
    match command {
        Command::Norm(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::Norm)?;
            apply_common(&mut cfg, &args.common);
            cfg.geometry = args.geometry.merge(cfg.geometry.take())?;
            let mut sec = cfg.norm.take().unwrap_or_default();
            if let Some(v) = args.s {
                sec.s = Some(v);
            }
            if let Some(v) = args.b {
                sec.b = Some(v);
            }
            if let Some(name) = &args.sign {
                sec.sign = parse_sign(name)?;
            }
            if let Some(v) = args.alpha {
                sec.alpha = v;
            }
            if let Some(v) = args.count {
                sec.count = v;
            }
            cfg.norm = Some(sec);
            Ok(cfg)
        }
        Command::BilinearCheck(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::BilinearCheck)?;
            apply_common(&mut cfg, &args.common);
            cfg.geometry = args.geometry.merge(cfg.geometry.take())?;
            let mut sec = cfg.bilinear.take().unwrap_or_default();
            if let Some(name) = &args.symbol {
                sec.symbol = name.clone();
            }
            if let Some(v) = args.s {
                sec.s = v;
            }
            if let Some(v) = args.pairs {
                sec.pairs = v;
            }
            cfg.bilinear = Some(sec);
            Ok(cfg)
        }
        Command::Quotient(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::Quotient)?;
            apply_common(&mut cfg, &args.common);
            cfg.geometry = args.geometry.merge(cfg.geometry.take())?;
            cfg.params = merge_params(cfg.params.take(), args.s, args.b, args.bprime);
            let mut sec = cfg.quotient.take().unwrap_or_default();
            if let Some(case) = &args.case {
                sec.case = Some(case.clone());
            }
            if let Some(v) = args.samples {
                sec.samples = v;
            }
            if let Some(v) = args.climb_steps {
                sec.climb_steps = v;
            }
            if let Some(v) = args.refine {
                sec.refine = Some(v);
            }
            if let Some(list) = &args.s_list {
                sec.s_list = list.clone();
            }
            cfg.quotient = Some(sec);
            Ok(cfg)
        }
        Command::Counterexample(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::Counterexample)?;
            apply_common(&mut cfg, &args.common);
            cfg.params = merge_params(cfg.params.take(), args.s, args.b, args.bprime);
            let mut sec = cfg.counterexample.take().unwrap_or_default();
            if let Some(family) = &args.family {
                sec.family = Some(family.clone());
            }
            if let Some(list) = &args.n {
                sec.n = list.clone();
            }
            cfg.counterexample = Some(sec);
            Ok(cfg)
        }
        Command::Solve(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::Solve)?;
            apply_common(&mut cfg, &args.common);
            cfg.geometry = args.geometry.merge(cfg.geometry.take())?;
            let mut sec = cfg.solve.take().unwrap_or_default();
            if let Some(v) = args.plain {
                sec.plain = Some(v);
            }
            if let Some(v) = args.conjugated {
                sec.conjugated = Some(v);
            }
            if let Some(v) = args.coeff_re {
                sec.coefficient[0] = v;
            }
            if let Some(v) = args.coeff_im {
                sec.coefficient[1] = v;
            }
            if let Some(v) = args.t_half {
                sec.t_half = Some(v);
            }
            if let Some(v) = args.time_steps {
                sec.time_steps = Some(v);
            }
            if let Some(v) = args.max_iters {
                sec.max_iters = v;
            }
            if let Some(v) = args.residual_tol {
                sec.residual_tol = v;
            }
            if let Some(v) = args.sobolev_index {
                sec.sobolev_index = Some(v);
            }
            if let Some(v) = args.amplitude {
                sec.amplitude = v;
            }
            if let Some(v) = args.excess {
                sec.excess = v;
            }
            if let Some(v) = args.lipschitz_delta {
                sec.lipschitz_delta = Some(v);
            }
            if let Some(v) = args.lipschitz_trials {
                sec.lipschitz_trials = v;
            }
            if let Some(v) = args.halvings {
                sec.halvings = Some(v);
            }
            cfg.solve = Some(sec);
            Ok(cfg)
        }
        Command::Preset(args) => {
            let mut cfg = load_base(&args.common.config, ExperimentKind::Preset)?;
            apply_common(&mut cfg, &args.common);
            let mut sec = cfg.preset.take().unwrap_or_default();
            if let Some(name) = &args.name {
                sec.name = Some(name.clone());
            }
            cfg.preset = Some(sec);
            Ok(cfg)
        }
        Command::ListPresets => unreachable!("handled before assembly"),
    }
}

fn configure_workers(flag: Option<usize>) -> Result<(), CliError> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("XSB_WORKERS") {
            Ok(text) => Some(text.parse::<usize>().map_err(|_| {
                CliError::Config(format!("XSB_WORKERS must be a positive integer, got `{text}`"))
            })?),
            Err(_) => None,
        },
    };
    let Some(workers) = requested else {
        return Ok(());
    };
    if workers == 0 {
        return Err(CliError::Config("worker count must be positive".into()));
    }
    // A second global-pool initialization in the same process is harmless;
    // the first one wins.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_workers(cli.workers)?;
    if matches!(cli.command, Command::ListPresets) {
        print!("{}", list_presets());
        return Ok(());
    }
    let cfg = assemble(&cli.command)?;
    let artifacts = run_config(&cfg, &cli.out_dir)?;
    println!("wrote {}", artifacts.csv_path.display());
    println!("wrote {}", artifacts.json_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
