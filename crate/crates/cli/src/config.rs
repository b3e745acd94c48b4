//! Declarative experiment descriptions.
//!
//! A config is one `kind` plus the section that kind reads; unknown keys
//! are rejected so typos fail loudly instead of silently running the
//! defaults.  Scalar fields that have no safe default are `Option` here
//! and checked at resolution time, which lets the binary assemble the
//! same struct from flags alone.

use serde::{Deserialize, Serialize};
use xsb_core::lattice::{GeometrySpec, Sign};

/// Seed used when a config does not pin one.
pub const DEFAULT_SEED: u64 = 7;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Norm,
    BilinearCheck,
    Quotient,
    Counterexample,
    Solve,
    Preset,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Norm => "norm",
            ExperimentKind::BilinearCheck => "bilinear-check",
            ExperimentKind::Quotient => "quotient",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Preset => "preset",
        }
    }
}

/// The `(s, b, b')` triple as written in config files.  `s` and `b` are
/// mandatory where the section is read; `b'` defaults to zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub s: Option<f64>,
    pub b: Option<f64>,
    #[serde(default)]
    pub bprime: f64,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_count() -> usize {
    4
}

fn default_sign() -> Sign {
    Sign::Plus
}

/// Weighted-norm survey over a random ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    pub s: Option<f64>,
    pub b: Option<f64>,
    #[serde(default = "default_sign")]
    pub sign: Sign,
    /// Spectral decay exponent of the sampled ensemble.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

impl Default for NormSection {
    fn default() -> NormSection {
        NormSection {
            s: None,
            b: None,
            sign: default_sign(),
            alpha: default_alpha(),
            count: default_count(),
        }
    }
}

fn default_symbol() -> String {
    "i_minus".to_owned()
}

fn default_symbol_exponent() -> f64 {
    0.5
}

fn default_pairs() -> usize {
    4
}

/// Cross-check of the pairwise multiplier against its brute-force twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSection {
    /// One of `i_minus`, `j_minus`, `i_plus`, `j_plus`.
    #[serde(default = "default_symbol")]
    pub symbol: String,
    #[serde(default = "default_symbol_exponent")]
    pub s: f64,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

impl Default for BilinearSection {
    fn default() -> BilinearSection {
        BilinearSection {
            symbol: default_symbol(),
            s: default_symbol_exponent(),
            pairs: default_pairs(),
        }
    }
}

fn default_samples() -> usize {
    64
}

/// Randomized quotient search for one registered inequality case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotientSection {
    pub case: Option<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub climb_steps: usize,
    /// Tau-refinement factor; when set every point is re-searched on the
    /// refined grid and the ratio lands in the report.
    #[serde(default)]
    pub refine: Option<usize>,
    /// Additional regularity values swept with `b`, `b'` held fixed; when
    /// empty the single `[params]` point runs.
    #[serde(default)]
    pub s_list: Vec<f64>,
}

impl Default for QuotientSection {
    fn default() -> QuotientSection {
        QuotientSection {
            case: None,
            samples: default_samples(),
            climb_steps: 0,
            refine: None,
            s_list: Vec::new(),
        }
    }
}

fn default_n_list() -> Vec<u32> {
    vec![4, 8, 16]
}

/// Concentration growth fit for one counterexample family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub family: Option<String>,
    #[serde(default = "default_n_list")]
    pub n: Vec<u32>,
}

impl Default for CounterexampleSection {
    fn default() -> CounterexampleSection {
        CounterexampleSection {
            family: None,
            n: default_n_list(),
        }
    }
}

fn default_coefficient() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_max_iters() -> usize {
    40
}

fn default_tol() -> f64 {
    1e-9
}

fn default_amplitude() -> f64 {
    0.1
}

fn default_excess() -> f64 {
    0.5
}

fn default_trials() -> usize {
    2
}

/// Local Picard solve on random rough data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// Plain power of the nonlinearity.
    pub plain: Option<usize>,
    /// Conjugate power of the nonlinearity.
    pub conjugated: Option<usize>,
    /// Coupling constant as `[re, im]`.
    #[serde(default = "default_coefficient")]
    pub coefficient: [f64; 2],
    pub t_half: Option<f64>,
    pub time_steps: Option<usize>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub residual_tol: f64,
    /// Regularity of the data and of the convergence metric.
    pub sobolev_index: Option<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Extra spectral decay beyond the scaling of `sobolev_index`.
    #[serde(default = "default_excess")]
    pub excess: f64,
    /// When set, perturb the data by this size and by half of it and
    /// report the worse distance quotient.
    #[serde(default)]
    pub lipschitz_delta: Option<f64>,
    #[serde(default = "default_trials")]
    pub lipschitz_trials: usize,
    /// When set, halve `t_half` up to this many times until the iteration
    /// contracts with ratio at most one half.
    #[serde(default)]
    pub halvings: Option<usize>,
}

impl Default for SolveSection {
    fn default() -> SolveSection {
        SolveSection {
            plain: None,
            conjugated: None,
            coefficient: default_coefficient(),
            t_half: None,
            time_steps: None,
            max_iters: default_max_iters(),
            residual_tol: default_tol(),
            sobolev_index: None,
            amplitude: default_amplitude(),
            excess: default_excess(),
            lipschitz_delta: None,
            lipschitz_trials: default_trials(),
            halvings: None,
        }
    }
}

/// Named bundle of one of the other kinds with curated parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSection {
    pub name: Option<String>,
}

/// A complete experiment description, as read from a TOML file or
/// assembled from command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output stem; reports land at `<stem>.csv` and `<stem>.json` under
    /// the output directory.
    #[serde(default)]
    pub output: Option<String>,
    /// Lattice override; each kind falls back to a domain-appropriate
    /// default when absent.
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    #[serde(default)]
    pub params: Option<ParamsSection>,
    #[serde(default)]
    pub norm: Option<NormSection>,
    #[serde(default)]
    pub bilinear: Option<BilinearSection>,
    #[serde(default)]
    pub quotient: Option<QuotientSection>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default)]
    pub solve: Option<SolveSection>,
    #[serde(default)]
    pub preset: Option<PresetSection>,
}

impl ExperimentConfig {
    /// Bare config of the given kind: default seed, no sections.
    pub fn empty(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            seed: DEFAULT_SEED,
            output: None,
            geometry: None,
            params: None,
            norm: None,
            bilinear: None,
            quotient: None,
            counterexample: None,
            solve: None,
            preset: None,
        }
    }
}
