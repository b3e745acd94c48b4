//! Case registry and randomized quotient harness for the multilinear
//! space-time inequalities.
//!
//! Every inequality is data: a left-hand norm, a combiner, and a list of
//! factor templates, all parameterized by `(s, b, b')`.  The harness
//! evaluates the quotient LHS / RHS on explicit fields, searches for
//! large quotients over random ensembles, and rechecks the maximum under
//! tau-grid refinement.  Reported maxima are lower bounds on the true
//! operator quotient; nothing here certifies a supremum.

mod registry;

pub use registry::registry;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::counterexamples::{fit_growth, CounterexampleFamily, GrowthReport};
use crate::error::CoreError;
use crate::lattice::{
    conjugate_field, gaussian_field, inverse_transform, DomainKind, FrequencyField,
    LatticeGeometry, Sign,
};
use crate::norms::{
    apply_modulation, apply_potential, mixed_norm, xsb_norm, MixedNormSpec, PotentialKind,
    WeightSpec,
};
use crate::bilinear::{apply_bilinear, product_convolution, BilinearSymbol};
use crate::Result;

/// The three scalar knobs every case is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub s: f64,
    pub b: f64,
    pub bprime: f64,
}

impl Params {
    pub fn new(s: f64, b: f64, bprime: f64) -> Params {
        Params { s, b, bprime }
    }
}

/// Multiplier applied to a factor before it enters the product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PreOp {
    /// Inhomogeneous potential of the given order.
    Bessel(f64),
    /// Homogeneous potential; rejects negative order on zero-frequency mass.
    Riesz(f64),
    /// Dispersive-distance multiplier of the given exponent and branch.
    Modulation(f64, Sign),
}

impl PreOp {
    fn apply(&self, field: &FrequencyField) -> Result<FrequencyField> {
        match *self {
            PreOp::Bessel(sigma) => apply_potential(field, sigma, PotentialKind::Bessel),
            PreOp::Riesz(sigma) => apply_potential(field, sigma, PotentialKind::Riesz),
            PreOp::Modulation(b, sign) => Ok(apply_modulation(field, b, sign)),
        }
    }
}

/// One factor slot: how the input field is normed on the right-hand side
/// and how it enters the left-hand product.
///
/// The weight applies to the field exactly as passed; `conjugated` means
/// the field is conjugated on its way INTO the product (after pre_ops),
/// never inside its own norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub conjugated: bool,
    pub weight: WeightSpec,
    pub pre_ops: Vec<PreOp>,
}

impl FactorSpec {
    pub fn plain(conjugated: bool, weight: WeightSpec) -> FactorSpec {
        FactorSpec {
            conjugated,
            weight,
            pre_ops: Vec::new(),
        }
    }
}

/// How the factor entries combine into the left-hand object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Combiner {
    /// Plain pointwise product of all entries.
    PointwiseProduct,
    /// Two named entries feed the ordered slots of a bilinear multiplier.
    Bilinear {
        symbol: BilinearSymbol,
        left: usize,
        right: usize,
    },
}

/// Which norm measures the combined object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LhsKind {
    Xsb(WeightSpec),
    Mixed(MixedNormSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhsSpec {
    pub kind: LhsKind,
    pub combiner: Combiner,
}

/// A case instantiated at concrete parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseShape {
    pub lhs: LhsSpec,
    pub factors: Vec<FactorSpec>,
}

impl CaseShape {
    fn validate(&self) -> Result<()> {
        if let Combiner::Bilinear { left, right, .. } = &self.lhs.combiner {
            let n = self.factors.len();
            if *left >= n || *right >= n || left == right {
                return Err(CoreError::InvalidInput(format!(
                    "bilinear combiner slots ({left}, {right}) invalid for {n} factors"
                )));
            }
        }
        Ok(())
    }
}

/// One registered inequality: an id, the lattice domain it is stated on,
/// a one-line anchor describing the statement, a builder producing the
/// concrete shape at given parameters, and the admissible region of
/// parameter space (transcribed hypotheses, open bounds kept strict).
#[derive(Clone)]
pub struct EstimateCase {
    pub id: &'static str,
    pub arity: usize,
    pub domain: DomainKind,
    pub anchor: &'static str,
    pub build: fn(&Params) -> CaseShape,
    pub admissible: fn(&Params) -> bool,
}

impl std::fmt::Debug for EstimateCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EstimateCase")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Find a registered case by id.
pub fn find_case(id: &str) -> Option<EstimateCase> {
    registry().into_iter().find(|c| c.id == id)
}

fn densify(field: &FrequencyField) -> FrequencyField {
    if field.is_dense() {
        return field.clone();
    }
    let mut out = FrequencyField::zeros_dense(field.geometry());
    field.for_each_nonzero(|site, c| out.set(site, c));
    out
}

/// Quotient of a concrete shape on explicit fields.  The left side is
/// the norm of the true function product (convolution scaled back to the
/// transform convention); the right side is the product of the factor
/// norms on the fields exactly as passed.
pub fn evaluate_shape_quotient(shape: &CaseShape, fields: &[&FrequencyField]) -> Result<f64> {
    shape.validate()?;
    if fields.is_empty() {
        return Err(CoreError::InvalidInput("no fields supplied".into()));
    }
    if fields.len() != shape.factors.len() {
        return Err(CoreError::InvalidInput(format!(
            "expected {} fields, got {}",
            shape.factors.len(),
            fields.len()
        )));
    }
    let geom = fields[0].geometry().clone();
    for f in &fields[1..] {
        geom.check_same(f.geometry())?;
    }

    let mut rhs = 1.0f64;
    for (field, factor) in fields.iter().zip(&shape.factors) {
        rhs *= xsb_norm(field, &factor.weight);
    }
    if rhs == 0.0 || !rhs.is_finite() {
        return Err(CoreError::UndefinedQuotient);
    }

    let mut entries: Vec<FrequencyField> = Vec::with_capacity(fields.len());
    for (field, factor) in fields.iter().zip(&shape.factors) {
        let mut entry = (*field).clone();
        for op in &factor.pre_ops {
            entry = op.apply(&entry)?;
        }
        if factor.conjugated {
            entry = conjugate_field(&entry);
        }
        entries.push(entry);
    }

    let n = geom.dims() as i32;
    let two_pi = 2.0 * std::f64::consts::PI;
    let combined = match &shape.lhs.combiner {
        Combiner::PointwiseProduct => {
            let refs: Vec<&FrequencyField> = entries.iter().collect();
            let conv = product_convolution(&refs)?;
            let scale = two_pi.powf(-((entries.len() as f64 - 1.0) * (n as f64 + 1.0) / 2.0));
            conv.scale(Complex64::new(scale, 0.0))
        }
        Combiner::Bilinear {
            symbol,
            left,
            right,
        } => {
            let out = apply_bilinear(symbol, &entries[*left], &entries[*right])?;
            let scale = two_pi.powf(-(n as f64 + 1.0) / 2.0);
            out.scale(Complex64::new(scale, 0.0))
        }
    };

    let lhs = match &shape.lhs.kind {
        LhsKind::Xsb(weight) => xsb_norm(&combined, weight),
        LhsKind::Mixed(spec) => mixed_norm(&inverse_transform(&densify(&combined))?, spec)?,
    };
    Ok(lhs / rhs)
}

/// The mirror shape: every dispersive weight (left norm, factor norms,
/// modulation pre-ops) switches branch.  Mixed norms and bilinear symbols
/// see only moduli of space or space-time frequencies and stay put.
/// Evaluating the mirror on conjugated fields reproduces the original
/// quotient exactly.
pub fn flip_case_signs(shape: &CaseShape) -> CaseShape {
    let mut out = shape.clone();
    if let LhsKind::Xsb(w) = &mut out.lhs.kind {
        *w = w.flipped();
    }
    for factor in &mut out.factors {
        factor.weight = factor.weight.flipped();
        for op in &mut factor.pre_ops {
            if let PreOp::Modulation(_, sign) = op {
                *sign = sign.flip();
            }
        }
    }
    out
}

/// Quotient of a registered case at given parameters.
pub fn evaluate_quotient(
    case: &EstimateCase,
    params: &Params,
    fields: &[&FrequencyField],
) -> Result<f64> {
    if fields.is_empty() {
        return Err(CoreError::InvalidInput("no fields supplied".into()));
    }
    let domain = fields[0].geometry().domain();
    if domain != case.domain {
        return Err(CoreError::InvalidInput(format!(
            "case {} is stated on {}, got fields on {}",
            case.id,
            case.domain.name(),
            domain.name()
        )));
    }
    let shape = (case.build)(params);
    evaluate_shape_quotient(&shape, fields)
}

/// Stateless stream split: one seed, many independent substreams.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random fields with coefficients
/// `g * <xi>^{-alpha} * <tau +- |xi|^2>^{-1}`, `g` iid complex standard
/// normal, the branch chosen by `sign`.  Deterministic in the seed.
pub fn random_ensemble(
    geometry: &LatticeGeometry,
    alpha: f64,
    sign: Sign,
    count: usize,
    seed: u64,
) -> Result<Vec<FrequencyField>> {
    if !(alpha >= 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "ensemble decay must be nonnegative, got {alpha}"
        )));
    }
    let envelope = WeightSpec::new(-alpha, -1.0, sign);
    Ok((0..count)
        .map(|i| {
            let g = geometry.clone();
            let env = envelope;
            gaussian_field(geometry, mix_seed(seed, i as u64), move |site| {
                env.value(&g, site)
            })
        })
        .collect())
}

/// Search effort: how many random candidates, then how many coordinate
/// perturbation steps on the best one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub samples: usize,
    pub climb_steps: usize,
}

impl Default for SearchBudget {
    fn default() -> SearchBudget {
        SearchBudget {
            samples: 64,
            climb_steps: 0,
        }
    }
}

/// Outcome of a quotient search on one case at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub case_id: String,
    pub params: Params,
    pub fingerprint: String,
    pub samples: usize,
    pub max_quotient: f64,
    pub argmax_seed: u64,
    /// max at tau-refined grid / max at base grid, when both were run.
    pub refinement_ratio: Option<f64>,
    pub seed: u64,
}

const ENSEMBLE_ALPHA: f64 = 1.0;

fn candidate_fields(
    geometry: &LatticeGeometry,
    candidate_seed: u64,
    shape: &CaseShape,
) -> Vec<FrequencyField> {
    shape
        .factors
        .iter()
        .enumerate()
        .map(|(i, factor)| {
            let env = WeightSpec::new(-ENSEMBLE_ALPHA, -1.0, factor.weight.sign);
            let g = geometry.clone();
            gaussian_field(geometry, mix_seed(candidate_seed, i as u64), move |site| {
                env.value(&g, site)
            })
        })
        .collect()
}

/// Random search plus a deterministic multiplicative coordinate climb.
/// `budget.samples == 0` still evaluates the single seeded candidate.
/// The reported maximum never decreases over the climb by construction.
pub fn maximize_quotient(
    case: &EstimateCase,
    params: &Params,
    geometry: &LatticeGeometry,
    budget: &SearchBudget,
    seed: u64,
) -> Result<QuotientReport> {
    if geometry.domain() != case.domain {
        return Err(CoreError::InvalidInput(format!(
            "case {} is stated on {}, got geometry on {}",
            case.id,
            case.domain.name(),
            geometry.domain().name()
        )));
    }
    let shape = (case.build)(params);
    shape.validate()?;

    let candidates = budget.samples.max(1);
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    // per-candidate seeds keep the result independent of thread count
    let evals: Vec<f64> = {
        use rayon::prelude::*;
        (0..candidates)
            .into_par_iter()
            .map(|cand| {
                let fields =
                    candidate_fields(geometry, mix_seed(seed, cand as u64), &shape);
                let refs: Vec<&FrequencyField> = fields.iter().collect();
                evaluate_shape_quotient(&shape, &refs).unwrap_or(0.0)
            })
            .collect()
    };
    for (idx, q) in evals.iter().enumerate() {
        if *q > best {
            best = *q;
            best_idx = idx;
        }
    }
    let argmax_seed = mix_seed(seed, best_idx as u64);

    if budget.climb_steps > 0 {
        let mut fields = candidate_fields(geometry, argmax_seed, &shape);
        let sites: Vec<crate::lattice::Site> = {
            // perturbable coordinates: nonzero coefficients of each field
            // share the symmetric band, so enumerate it once
            let mut v = Vec::new();
            let g = geometry;
            for flat in 0..g.site_count() {
                let s = g.site_at(flat);
                if g.in_symmetric_band(&s) {
                    v.push(s);
                }
            }
            v
        };
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(mix_seed(seed, u64::MAX));
        for step in 0..budget.climb_steps {
            let slot = step % fields.len();
            let site = sites[rng.gen_range(0..sites.len())];
            let current = fields[slot].get(&site);
            if current == Complex64::new(0.0, 0.0) {
                continue;
            }
            for scale in [1.25, 0.8] {
                let saved = fields[slot].get(&site);
                fields[slot].set(site, saved * scale);
                let refs: Vec<&FrequencyField> = fields.iter().collect();
                let q = evaluate_shape_quotient(&shape, &refs).unwrap_or(0.0);
                if q > best {
                    best = q;
                } else {
                    fields[slot].set(site, saved);
                }
            }
        }
    }

    Ok(QuotientReport {
        case_id: case.id.to_string(),
        params: *params,
        fingerprint: geometry.fingerprint(),
        samples: candidates,
        max_quotient: best,
        argmax_seed,
        refinement_ratio: None,
        seed,
    })
}

/// The same search run at the base grid and once more with the tau band
/// extended by the given factor; the ratio of the two maxima lands in
/// `refinement_ratio`.
pub fn refinement_study(
    case: &EstimateCase,
    params: &Params,
    geometry: &LatticeGeometry,
    refine_factor: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Result<QuotientReport> {
    let mut base = maximize_quotient(case, params, geometry, budget, seed)?;
    let refined_geom = geometry.refine_tau(refine_factor)?;
    let refined = maximize_quotient(case, params, &refined_geom, budget, seed)?;
    if base.max_quotient > 0.0 {
        base.refinement_ratio = Some(refined.max_quotient / base.max_quotient);
    }
    Ok(base)
}

/// Growth probe for a parameter point outside the admissible region:
/// delegates to the counterexample machinery so every estimate report can
/// pair with its failure certificate.
pub fn inadmissible_probe(
    case: &EstimateCase,
    params: &Params,
    family: &CounterexampleFamily,
    n_list: &[u32],
) -> Result<GrowthReport> {
    if family.target_case != case.id {
        return Err(CoreError::InvalidInput(format!(
            "family {} targets case {}, not {}",
            family.id, family.target_case, case.id
        )));
    }
    fit_growth(family, params, n_list)
}

#[cfg(test)]
mod tests;
