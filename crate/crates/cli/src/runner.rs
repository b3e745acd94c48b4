//! Resolution and execution of experiment configs.
//!
//! Each kind resolves its sections (filling documented defaults), runs,
//! and emits a CSV table plus a JSON sidecar carrying the tool version,
//! the seed, the resolved config and kind-specific diagnostics.  Exit
//! codes separate config mistakes (2) from lattice-construction mistakes
//! (3) and runtime failures (1); a completed run reports code 0 even when
//! the iteration it describes did not converge.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use xsb_core::bilinear::{apply_bilinear, apply_bilinear_oracle, BilinearSymbol};
use xsb_core::counterexamples::{find_family, fit_growth, verify_lower_bound};
use xsb_core::estimates::{
    maximize_quotient, random_ensemble, refinement_study, Params, QuotientReport, SearchBudget,
};
use xsb_core::lattice::{DomainKind, FrequencyField, GeometrySpec, LatticeGeometry, Sign, Site};
use xsb_core::norms::{l2_norm, xsb_norm, WeightSpec};
use xsb_core::report::{
    format_float, growth_rows, quotient_row, render_csv, solve_row, SolveSummary,
    GROWTH_COLUMNS, QUOTIENT_COLUMNS, SOLVE_COLUMNS,
};
use xsb_core::solver::{
    halve_until_contracting, lipschitz_probe, persistence_probe, rough_data, solve_local,
    NonlinearitySpec, RoughDataSpec, SolveConfig,
};
use xsb_core::CoreError;

use crate::config::{ExperimentConfig, ExperimentKind, ParamsSection};
use crate::presets::{find_any_case, find_preset};

/// Failure modes of a run, ranked by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or incomplete experiment description; exit 2.
    Config(String),
    /// Error raised by the core library; lattice-construction problems
    /// exit 3, everything else 1.
    Core(CoreError),
    /// Filesystem trouble; exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_geometry() => 3,
            CliError::Core(_) => 1,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Default lattice for a domain: band wide enough for the free paraboloid
/// with a few rows to spare, sized so debug builds stay responsive.
pub fn default_geometry_spec(domain: DomainKind) -> GeometrySpec {
    let (modes_per_axis, xi_spacing, tau_count, tau_spacing) = match domain {
        DomainKind::Torus1d => (16, 1.0, 64, 2.5),
        DomainKind::Torus2d => (8, 1.0, 36, 2.0),
        DomainKind::Torus3d => (6, 1.0, 32, 2.0),
        DomainKind::Line1d => (32, 0.25, 32, 5.0),
    };
    GeometrySpec {
        domain_kind: domain,
        modes_per_axis,
        xi_spacing,
        tau_count,
        tau_spacing,
    }
}

/// Finer tau sampling than the survey default, so multiplier deviations
/// are probed across more modulation levels.
fn bilinear_default_spec() -> GeometrySpec {
    GeometrySpec {
        domain_kind: DomainKind::Torus1d,
        modes_per_axis: 8,
        xi_spacing: 1.0,
        tau_count: 40,
        tau_spacing: 2.0,
    }
}

fn resolve_geometry(
    configured: Option<&GeometrySpec>,
    fallback: GeometrySpec,
) -> Result<(LatticeGeometry, GeometrySpec)> {
    let spec = configured.cloned().unwrap_or(fallback);
    let geometry = spec.build()?;
    Ok((geometry, spec))
}

fn resolve_params(section: Option<&ParamsSection>) -> Result<Params> {
    let sec = section.cloned().unwrap_or_default();
    let s = sec
        .s
        .ok_or_else(|| CliError::Config("params.s is required (--s)".into()))?;
    let b = sec
        .b
        .ok_or_else(|| CliError::Config("params.b is required (--b)".into()))?;
    Ok(Params::new(s, b, sec.bprime))
}

fn sign_name(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

/// Everything a finished run hands to the report writer.
struct Outcome {
    resolved: ExperimentConfig,
    preset: Option<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    fingerprints: Vec<String>,
    results: serde_json::Value,
}

/// Paths and row count of the written reports.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub rows: usize,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool_version: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    config: &'a ExperimentConfig,
    fingerprints: &'a [String],
    results: &'a serde_json::Value,
}

/// Run one experiment and write `<stem>.csv` and `<stem>.json` under
/// `out_dir`.  Byte-identical inputs produce byte-identical files.
pub fn run_config(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let outcome = dispatch(cfg, 0)?;
    let stem = outcome
        .resolved
        .output
        .clone()
        .unwrap_or_else(|| default_stem(outcome.resolved.kind).to_owned());
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    let csv = render_csv(&outcome.columns, &outcome.rows);
    let sidecar = Sidecar {
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: outcome.resolved.seed,
        preset: outcome.preset,
        config: &outcome.resolved,
        fingerprints: &outcome.fingerprints,
        results: &outcome.results,
    };
    let mut json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::Io(format!("sidecar serialization: {e}")))?;
    json.push('\n');
    for path in [&csv_path, &json_path] {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
        }
    }
    fs::write(&csv_path, csv.as_bytes())
        .map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    fs::write(&json_path, json.as_bytes())
        .map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
    Ok(RunArtifacts {
        csv_path,
        json_path,
        rows: outcome.rows.len(),
    })
}

fn default_stem(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Norm => "norm-report",
        ExperimentKind::BilinearCheck => "bilinear-report",
        ExperimentKind::Quotient => "quotient-report",
        ExperimentKind::Counterexample => "growth-report",
        ExperimentKind::Solve => "solve-report",
        ExperimentKind::Preset => "preset-report",
    }
}

fn check_sections(cfg: &ExperimentConfig) -> Result<()> {
    let allowed: &[&str] = match cfg.kind {
        ExperimentKind::Norm => &["geometry", "norm"],
        ExperimentKind::BilinearCheck => &["geometry", "bilinear"],
        ExperimentKind::Quotient => &["geometry", "params", "quotient"],
        ExperimentKind::Counterexample => &["params", "counterexample"],
        ExperimentKind::Solve => &["geometry", "solve"],
        ExperimentKind::Preset => &["preset"],
    };
    let present = [
        ("geometry", cfg.geometry.is_some()),
        ("params", cfg.params.is_some()),
        ("norm", cfg.norm.is_some()),
        ("bilinear", cfg.bilinear.is_some()),
        ("quotient", cfg.quotient.is_some()),
        ("counterexample", cfg.counterexample.is_some()),
        ("solve", cfg.solve.is_some()),
        ("preset", cfg.preset.is_some()),
    ];
    for (name, is_present) in present {
        if is_present && !allowed.contains(&name) {
            return Err(CliError::Config(format!(
                "section [{name}] does not apply to kind `{}`",
                cfg.kind.name()
            )));
        }
    }
    Ok(())
}

fn dispatch(cfg: &ExperimentConfig, depth: usize) -> Result<Outcome> {
    check_sections(cfg)?;
    match cfg.kind {
        ExperimentKind::Preset => {
            if depth > 0 {
                return Err(CliError::Config("presets cannot nest".into()));
            }
            let name = cfg
                .preset
                .as_ref()
                .and_then(|p| p.name.clone())
                .ok_or_else(|| CliError::Config("preset.name is required".into()))?;
            let preset = find_preset(&name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset `{name}`; run `xsb list-presets` for the catalog"
                ))
            })?;
            let resolved = preset.resolve(cfg.seed, cfg.output.clone());
            let mut outcome = dispatch(&resolved, depth + 1)?;
            outcome.preset = Some(name);
            Ok(outcome)
        }
        ExperimentKind::Norm => run_norm(cfg),
        ExperimentKind::BilinearCheck => run_bilinear(cfg),
        ExperimentKind::Quotient => run_quotient(cfg),
        ExperimentKind::Counterexample => run_counterexample(cfg),
        ExperimentKind::Solve => run_solve(cfg),
    }
}

const NORM_COLUMNS: [&str; 8] = [
    "field_index",
    "s",
    "b",
    "sign",
    "l2_norm",
    "xsb_norm",
    "fingerprint",
    "seed",
];

fn run_norm(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut sec = cfg.norm.clone().unwrap_or_default();
    let s = sec
        .s
        .ok_or_else(|| CliError::Config("norm.s is required (--s)".into()))?;
    let b = sec
        .b
        .ok_or_else(|| CliError::Config("norm.b is required (--b)".into()))?;
    if sec.count == 0 {
        return Err(CliError::Config("norm.count must be positive".into()));
    }
    let (geometry, spec) = resolve_geometry(
        cfg.geometry.as_ref(),
        default_geometry_spec(DomainKind::Torus1d),
    )?;
    let fields = random_ensemble(&geometry, sec.alpha, sec.sign, sec.count, cfg.seed)?;
    let weight = WeightSpec::new(s, b, sec.sign);
    let fingerprint = geometry.fingerprint();
    let mut rows = Vec::with_capacity(fields.len());
    let mut norms = Vec::with_capacity(fields.len());
    for (i, field) in fields.iter().enumerate() {
        let xsb = xsb_norm(field, &weight);
        norms.push(xsb);
        rows.push(vec![
            i.to_string(),
            format_float(s),
            format_float(b),
            sign_name(sec.sign).to_owned(),
            format_float(l2_norm(field)),
            format_float(xsb),
            fingerprint.clone(),
            cfg.seed.to_string(),
        ]);
    }
    sec.s = Some(s);
    sec.b = Some(b);
    let mut resolved = cfg.clone();
    resolved.norm = Some(sec);
    resolved.geometry = Some(spec);
    let results = json!({
        "max_xsb_norm": norms.iter().cloned().fold(0.0f64, f64::max),
    });
    Ok(Outcome {
        resolved,
        preset: None,
        columns: NORM_COLUMNS.to_vec(),
        rows,
        fingerprints: vec![fingerprint],
        results,
    })
}

const BILINEAR_COLUMNS: [&str; 6] = [
    "pair_index",
    "symbol",
    "s",
    "relative_deviation",
    "fingerprint",
    "seed",
];

fn parse_symbol(name: &str, s: f64) -> Result<BilinearSymbol> {
    match name {
        "i_minus" => Ok(BilinearSymbol::i_minus(s)),
        "j_minus" => Ok(BilinearSymbol::j_minus(s)),
        "i_plus" => Ok(BilinearSymbol::i_plus(s)),
        "j_plus" => Ok(BilinearSymbol::j_plus(s)),
        other => Err(CliError::Config(format!(
            "unknown symbol `{other}` (expected i_minus, j_minus, i_plus or j_plus)"
        ))),
    }
}

/// L2 distance between two fields on the same lattice.
fn l2_diff(x: &FrequencyField, y: &FrequencyField) -> f64 {
    let mut entries: BTreeMap<(i32, i32, i32, i32), Complex64> = BTreeMap::new();
    x.for_each_nonzero(|site: Site, c| {
        *entries
            .entry((site.xi[0], site.xi[1], site.xi[2], site.tau))
            .or_insert(Complex64::new(0.0, 0.0)) += c;
    });
    y.for_each_nonzero(|site: Site, c| {
        *entries
            .entry((site.xi[0], site.xi[1], site.xi[2], site.tau))
            .or_insert(Complex64::new(0.0, 0.0)) -= c;
    });
    let w = x.geometry().measure_weight();
    (entries.values().map(|c| c.norm_sqr()).sum::<f64>() * w).sqrt()
}

fn run_bilinear(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sec = cfg.bilinear.clone().unwrap_or_default();
    if sec.pairs == 0 {
        return Err(CliError::Config("bilinear.pairs must be positive".into()));
    }
    let symbol = parse_symbol(&sec.symbol, sec.s)?;
    let (geometry, spec) = resolve_geometry(cfg.geometry.as_ref(), bilinear_default_spec())?;
    let fields = random_ensemble(&geometry, 1.0, Sign::Plus, 2 * sec.pairs, cfg.seed)?;
    let fingerprint = geometry.fingerprint();
    let mut rows = Vec::with_capacity(sec.pairs);
    let mut worst = 0.0f64;
    for i in 0..sec.pairs {
        let fast = apply_bilinear(&symbol, &fields[2 * i], &fields[2 * i + 1])?;
        let slow = apply_bilinear_oracle(&symbol, &fields[2 * i], &fields[2 * i + 1])?;
        let scale = l2_norm(&fast).max(f64::MIN_POSITIVE);
        let relative = l2_diff(&fast, &slow) / scale;
        worst = worst.max(relative);
        rows.push(vec![
            i.to_string(),
            sec.symbol.clone(),
            format_float(sec.s),
            format_float(relative),
            fingerprint.clone(),
            cfg.seed.to_string(),
        ]);
    }
    let mut resolved = cfg.clone();
    resolved.bilinear = Some(sec);
    resolved.geometry = Some(spec);
    let results = json!({ "max_relative_deviation": worst });
    Ok(Outcome {
        resolved,
        preset: None,
        columns: BILINEAR_COLUMNS.to_vec(),
        rows,
        fingerprints: vec![fingerprint],
        results,
    })
}

fn run_quotient(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut sec = cfg.quotient.clone().unwrap_or_default();
    let id = sec
        .case
        .clone()
        .ok_or_else(|| CliError::Config("quotient.case is required (--case)".into()))?;
    let case = find_any_case(&id)
        .ok_or_else(|| CliError::Config(format!("unknown case `{id}`")))?;
    if sec.samples == 0 {
        return Err(CliError::Config("quotient.samples must be positive".into()));
    }
    if let Some(factor) = sec.refine {
        if factor < 2 {
            return Err(CliError::Config(format!(
                "quotient.refine must be at least 2, got {factor}"
            )));
        }
    }
    let base = resolve_params(cfg.params.as_ref())?;
    let points: Vec<Params> = if sec.s_list.is_empty() {
        vec![base]
    } else {
        sec.s_list
            .iter()
            .map(|&s| Params::new(s, base.b, base.bprime))
            .collect()
    };
    let (geometry, spec) =
        resolve_geometry(cfg.geometry.as_ref(), default_geometry_spec(case.domain))?;
    let budget = SearchBudget {
        samples: sec.samples,
        climb_steps: sec.climb_steps,
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut reports: Vec<QuotientReport> = Vec::with_capacity(points.len());
    let mut admissible = Vec::with_capacity(points.len());
    for point in &points {
        let report = match sec.refine {
            Some(factor) => refinement_study(&case, point, &geometry, factor, &budget, cfg.seed)?,
            None => maximize_quotient(&case, point, &geometry, &budget, cfg.seed)?,
        };
        admissible.push((case.admissible)(point));
        rows.push(quotient_row(&report));
        reports.push(report);
    }
    sec.case = Some(id);
    let mut resolved = cfg.clone();
    resolved.quotient = Some(sec);
    resolved.geometry = Some(spec);
    let fingerprints = vec![geometry.fingerprint()];
    let results = json!({
        "anchor": case.anchor,
        "admissible": admissible,
        "reports": reports,
    });
    Ok(Outcome {
        resolved,
        preset: None,
        columns: QUOTIENT_COLUMNS.to_vec(),
        rows,
        fingerprints,
        results,
    })
}

fn run_counterexample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sec = cfg.counterexample.clone().unwrap_or_default();
    let id = sec
        .family
        .clone()
        .ok_or_else(|| CliError::Config("counterexample.family is required (--family)".into()))?;
    let family = find_family(&id)
        .ok_or_else(|| CliError::Config(format!("unknown family `{id}`")))?;
    if sec.n.len() < 3 || sec.n.windows(2).any(|w| w[0] >= w[1]) || sec.n[0] == 0 {
        return Err(CliError::Config(
            "counterexample.n needs at least 3 strictly increasing positive entries".into(),
        ));
    }
    let params = resolve_params(cfg.params.as_ref())?;
    let report = fit_growth(&family, &params, &sec.n)?;
    let rows = growth_rows(&report, cfg.seed);
    let bounds: Vec<serde_json::Value> = sec
        .n
        .iter()
        .map(|&n| match verify_lower_bound(&family, &params, n) {
            Ok((lhs, bound)) => json!({ "n": n, "lhs": lhs, "bound": bound }),
            Err(e) => json!({ "n": n, "error": e.to_string() }),
        })
        .collect();
    let mut resolved = cfg.clone();
    resolved.counterexample = Some(sec);
    let fingerprints = report.fingerprints.clone();
    let results = json!({
        "note": family.note,
        "target_case": family.target_case,
        "report": report,
        "lower_bounds": bounds,
    });
    Ok(Outcome {
        resolved,
        preset: None,
        columns: GROWTH_COLUMNS.to_vec(),
        rows,
        fingerprints,
        results,
    })
}

fn run_solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sec = cfg.solve.clone().unwrap_or_default();
    let plain = sec
        .plain
        .ok_or_else(|| CliError::Config("solve.plain is required (--plain)".into()))?;
    let conjugated = sec
        .conjugated
        .ok_or_else(|| CliError::Config("solve.conjugated is required (--conjugated)".into()))?;
    let t_half = sec
        .t_half
        .ok_or_else(|| CliError::Config("solve.t_half is required (--t-half)".into()))?;
    let time_steps = sec
        .time_steps
        .ok_or_else(|| CliError::Config("solve.time_steps is required (--time-steps)".into()))?;
    let sobolev_index = sec.sobolev_index.ok_or_else(|| {
        CliError::Config("solve.sobolev_index is required (--sobolev-index)".into())
    })?;
    let nonlinearity = NonlinearitySpec::new(
        plain,
        conjugated,
        Complex64::new(sec.coefficient[0], sec.coefficient[1]),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let (geometry, spec) = resolve_geometry(
        cfg.geometry.as_ref(),
        default_geometry_spec(DomainKind::Torus1d),
    )?;
    let data = rough_data(
        &geometry,
        &RoughDataSpec {
            s: sobolev_index,
            excess: sec.excess,
            amplitude: sec.amplitude,
            seed: cfg.seed,
        },
    )?;
    let mut solve_cfg = SolveConfig {
        geometry: geometry.clone(),
        t_half,
        time_steps,
        max_iters: sec.max_iters,
        residual_tol: sec.residual_tol,
        sobolev_index,
    };
    let result = match sec.halvings {
        Some(budget) => {
            let (t, result) = halve_until_contracting(&data, &nonlinearity, &solve_cfg, budget)?;
            solve_cfg.t_half = t;
            result
        }
        None => solve_local(&data, &nonlinearity, &solve_cfg)?,
    };
    let (max_jump, max_growth) = persistence_probe(&result);
    let lipschitz = match sec.lipschitz_delta {
        Some(delta) if result.converged => Some(lipschitz_probe(
            &data,
            delta,
            &nonlinearity,
            &solve_cfg,
            sec.lipschitz_trials,
            cfg.seed,
        )?),
        _ => None,
    };
    let summary = SolveSummary {
        nonlinearity: nonlinearity.label(),
        s: sobolev_index,
        amplitude: sec.amplitude,
        t_half: solve_cfg.t_half,
        steps: time_steps,
        iters: result.iterations(),
        converged: result.converged,
        final_residual: result.final_residual(),
        max_growth,
        lipschitz_quotient: lipschitz.as_ref().map(|p| p.quotient),
        fingerprint: geometry.fingerprint(),
        seed: cfg.seed,
    };
    let rows = vec![solve_row(&summary)];
    let mut resolved = cfg.clone();
    resolved.solve = Some(sec.clone());
    resolved.geometry = Some(spec);
    let lipschitz_note = match (sec.lipschitz_delta, result.converged) {
        (Some(_), false) => Some("skipped: base solve did not converge"),
        _ => None,
    };
    let results = json!({
        "converged": result.converged,
        "residuals": result.residuals,
        "contraction_ratio": result.contraction_ratio(),
        "t_half_used": solve_cfg.t_half,
        "max_jump": max_jump,
        "max_growth": max_growth,
        "lipschitz": lipschitz,
        "lipschitz_note": lipschitz_note,
    });
    Ok(Outcome {
        resolved,
        preset: None,
        columns: SOLVE_COLUMNS.to_vec(),
        rows,
        fingerprints: vec![geometry.fingerprint()],
        results,
    })
}
