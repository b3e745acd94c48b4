//! Concentrated mode families whose inequality quotients grow with a
//! predictable power of the frequency parameter `n`.
//!
//! Each family describes the WEIGHTED transforms directly: its members
//! `f_i` are nonnegative indicator bumps, the probed case's factor fields
//! are recovered by dividing `f_i` by the factor weight (the opposite
//! branch when the slot is conjugated), and the quotient is
//!
//! ```text
//!   || w_lhs . (f_1/w_1) * ... * (f_m/w_m) ||_2  /  prod_i ||f_i||_2
//! ```
//!
//! with `*` the measure-weighted convolution.  Member mass is independent
//! of `n` by construction, so the quotient's log-log slope in `n` is the
//! growth rate of the probed inequality's constant.  Every family also
//! carries an analytic lower-bound certificate for the numerator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bilinear::product_convolution;
use crate::error::CoreError;
use crate::estimates::{find_case, LhsKind, Params};
use crate::lattice::{DomainKind, FrequencyField, LatticeGeometry, Site};
use crate::norms::{l2_norm, xsb_norm, WeightSpec};
use crate::Result;

/// Width (in units of 1) of every indicator bump, on both sides of its
/// center.  Torus bumps are closed intervals in tau; line windows are
/// half-open in both variables so their site count is exact.
const BUMP_HALF_WIDTH: f64 = 1.0;

/// Calibration slack for the one family whose lower-bound constant is
/// fitted numerically rather than counted exactly.
const CALIBRATION_SLACK: f64 = 0.8;
const CALIBRATION_N: u32 = 4;

#[derive(Debug, Clone, Copy)]
enum FamilyKind {
    /// Single-frequency bumps on a torus: member `i` sits at spatial
    /// frequency `n * xi_dir[i]` and fills the closed tau interval of
    /// radius 1 around `tau_mul[i] * n^2`.
    TorusBumps {
        xi_dirs: &'static [[i64; 3]],
        tau_mul: &'static [i64],
    },
    /// Thickened windows on the line: two plain factors on
    /// `[n-1, n+1)`, two conjugated ones on `[-n-1, -n+1)`, each filling
    /// the half-open dispersive window of its own frequency.
    LineWindows,
}

/// A growth family aimed at one registered case.
#[derive(Debug, Clone)]
pub struct CounterexampleFamily {
    pub id: &'static str,
    pub target_case: &'static str,
    pub arity: usize,
    pub domain: DomainKind,
    /// One-line description of the concentration mechanism.
    pub note: &'static str,
    /// Exponent the quotient is expected to grow with, as a function of
    /// the probed parameters.
    pub predicted_slope: fn(&Params) -> f64,
    kind: FamilyKind,
}

fn slope_ex41(p: &Params) -> f64 {
    -p.s
}
fn slope_ex42f(p: &Params) -> f64 {
    -3.0 * p.s + 2.0 * p.bprime
}
fn slope_ex42g(p: &Params) -> f64 {
    -3.0 * p.s - 2.0 * p.b
}
fn slope_minus_2s(p: &Params) -> f64 {
    -2.0 * p.s
}
fn slope_ex53(p: &Params) -> f64 {
    -4.0 * p.s - 0.5
}

/// All growth families, fixed order.
pub fn families() -> Vec<CounterexampleFamily> {
    vec![
        CounterexampleFamily {
            id: "ex41",
            target_case: "ex41-target",
            arity: 2,
            domain: DomainKind::Torus2d,
            note: "free bumps at orthogonal frequencies (n,0) and (0,n); growth n^-s",
            predicted_slope: slope_ex41,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[1, 0, 0], [0, 1, 0]],
                tau_mul: &[-1, -1],
            },
        },
        CounterexampleFamily {
            id: "ex42f",
            target_case: "ex42-target",
            arity: 3,
            domain: DomainKind::Torus1d,
            note: "resonant triple (n, n, -2n) on the opposite dispersive surface; growth n^(-3s+2b')",
            predicted_slope: slope_ex42f,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[1, 0, 0], [1, 0, 0], [-2, 0, 0]],
                tau_mul: &[1, 1, 4],
            },
        },
        CounterexampleFamily {
            id: "ex42g",
            target_case: "ex42-target",
            arity: 3,
            domain: DomainKind::Torus1d,
            note: "triple (n, n, -2n) with one factor displaced off the surface; growth n^(-3s-2b)",
            predicted_slope: slope_ex42g,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[1, 0, 0], [1, 0, 0], [-2, 0, 0]],
                tau_mul: &[-5, 1, 4],
            },
        },
        CounterexampleFamily {
            id: "ex51",
            target_case: "ex51-target",
            arity: 4,
            domain: DomainKind::Torus1d,
            note: "quartic recombination (2n, 2n, -n, 0) landing back on the surface at 3n; growth n^-2s",
            predicted_slope: slope_minus_2s,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[2, 0, 0], [2, 0, 0], [-1, 0, 0], [0, 0, 0]],
                tau_mul: &[-4, -4, -1, 0],
            },
        },
        CounterexampleFamily {
            id: "ex51tri",
            target_case: "ex51tri-target",
            arity: 3,
            domain: DomainKind::Torus1d,
            note: "cubic recombination (2n, 2n, -n) landing back on the surface at 3n; growth n^-2s",
            predicted_slope: slope_minus_2s,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[2, 0, 0], [2, 0, 0], [-1, 0, 0]],
                tau_mul: &[-4, -4, -1],
            },
        },
        CounterexampleFamily {
            id: "ex52",
            target_case: "ex52-target",
            arity: 4,
            domain: DomainKind::Torus1d,
            note: "opposite bumps at +-n cancelling to frequency zero; growth n^-2s",
            predicted_slope: slope_minus_2s,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[1, 0, 0], [-1, 0, 0], [0, 0, 0], [0, 0, 0]],
                tau_mul: &[-1, 1, 0, 0],
            },
        },
        CounterexampleFamily {
            id: "ex52tri",
            target_case: "ex52tri-target",
            arity: 3,
            domain: DomainKind::Torus1d,
            note: "cubic variant of the +-n cancellation; growth n^-2s",
            predicted_slope: slope_minus_2s,
            kind: FamilyKind::TorusBumps {
                xi_dirs: &[[1, 0, 0], [-1, 0, 0], [0, 0, 0]],
                tau_mul: &[-1, 1, 0],
            },
        },
        CounterexampleFamily {
            id: "ex53",
            target_case: "ex53-target",
            arity: 4,
            domain: DomainKind::Line1d,
            note: "thickened windows at +-n; near-total cancellation leaves a measure-1/n resonant set, growth n^(-4s-1/2)",
            predicted_slope: slope_ex53,
            kind: FamilyKind::LineWindows,
        },
    ]
}

/// Find a family by id.
pub fn find_family(id: &str) -> Option<CounterexampleFamily> {
    families().into_iter().find(|f| f.id == id)
}

/// Tau-grid steps per unit length, or an error when the spacing does not
/// divide the bump width.
fn steps_per_unit(geometry: &LatticeGeometry) -> Result<i64> {
    let inv = 1.0 / geometry.tau_spacing();
    if (inv - inv.round()).abs() > 1e-12 {
        return Err(CoreError::UnresolvableSupport(format!(
            "bump supports need a tau spacing dividing 1, got {}",
            geometry.tau_spacing()
        )));
    }
    Ok(inv.round() as i64)
}

/// The xi spacing the line family uses at a given concentration: coarse
/// for small n, then 1/n so the measure-1/n resonant output is resolved.
fn line_xi_spacing(n: u32) -> f64 {
    if n <= 4 {
        0.25
    } else {
        1.0 / n as f64
    }
}

/// Smallest comfortable lattice for a family at concentration `n`:
/// supports and the recombined output sit strictly inside the band, and
/// the tau extent clears the spatial band's maximal `|xi|^2` as the
/// geometry constructor demands.
pub fn default_geometry(family: &CounterexampleFamily, n: u32) -> Result<LatticeGeometry> {
    let tau_spacing = 0.5;
    match family.kind {
        FamilyKind::TorusBumps { xi_dirs, tau_mul } => {
            let n = n as i64;
            let mut max_xi = 0i64;
            let mut sum_xi = [0i64; 3];
            let mut max_tau = 0i64;
            let mut sum_tau = 0i64;
            for (dir, mul) in xi_dirs.iter().zip(tau_mul) {
                for d in 0..3 {
                    max_xi = max_xi.max((dir[d] * n).abs());
                    sum_xi[d] += dir[d] * n;
                }
                max_tau = max_tau.max((mul * n * n).abs());
                sum_tau += mul * n * n;
            }
            for d in 0..3 {
                max_xi = max_xi.max(sum_xi[d].abs());
            }
            max_tau = max_tau.max(sum_tau.abs());
            let modes = (2 * (max_xi + 2)) as usize;
            let dims = family.domain.dims() as f64;
            let max_xi_abs2 = dims * (modes as f64 / 2.0).powi(2);
            let tau_required = (max_tau as f64 + 3.0).max(max_xi_abs2 + 1.0);
            let tau_count = 2 * (tau_required / tau_spacing).ceil() as usize;
            LatticeGeometry::new(family.domain, modes, 1.0, tau_count, tau_spacing)
        }
        FamilyKind::LineWindows => {
            let dxi = line_xi_spacing(n);
            let modes = 2 * (((n as f64 + 2.0) / dxi).ceil() as usize + 1);
            let max_xi_abs2 = (modes as f64 / 2.0 * dxi).powi(2);
            let tau_required = ((n as f64 + 1.0).powi(2) + 3.0).max(max_xi_abs2 + 1.0);
            let tau_count = 2 * (tau_required / tau_spacing).ceil() as usize;
            LatticeGeometry::new(family.domain, modes, dxi, tau_count, tau_spacing)
        }
    }
}

fn support_error(family: &CounterexampleFamily, n: u32, what: &str) -> CoreError {
    let hint = default_geometry(family, n)
        .map(|g| format!("e.g. {}", g.fingerprint()))
        .unwrap_or_else(|e| format!("(no adequate lattice: {e})"));
    CoreError::UnresolvableSupport(format!(
        "family {} at n={} needs {what}; {hint}",
        family.id, n
    ))
}

/// One member bump of a family on an explicit lattice.
///
/// Every coefficient is 1; weights enter only when the member is divided
/// down to a factor field.  Errors name an adequate lattice when the
/// supplied one cannot hold the support (or the recombined output).
pub fn build_family_member(
    family: &CounterexampleFamily,
    geometry: &LatticeGeometry,
    n: u32,
    index: usize,
) -> Result<FrequencyField> {
    if index >= family.arity {
        return Err(CoreError::InvalidInput(format!(
            "family {} has {} members, asked for index {}",
            family.id, family.arity, index
        )));
    }
    if geometry.domain() != family.domain {
        return Err(CoreError::InvalidInput(format!(
            "family {} lives on {}, got {}",
            family.id,
            family.domain.name(),
            geometry.domain().name()
        )));
    }
    let steps = steps_per_unit(geometry)?;
    let mut field = FrequencyField::zeros_sparse(geometry);
    match family.kind {
        FamilyKind::TorusBumps { xi_dirs, tau_mul } => {
            let n = n as i64;
            let dir = xi_dirs[index];
            let center_tau = tau_mul[index] * n * n;
            let mut xi = [0i32; 3];
            for d in 0..3 {
                let v = dir[d] * n;
                if v.abs() > i32::MAX as i64 {
                    return Err(support_error(family, n as u32, "a wider spatial band"));
                }
                xi[d] = v as i32;
            }
            for j in -steps..=steps {
                let site = Site {
                    xi,
                    tau: (center_tau * steps + j) as i32,
                };
                if !geometry.in_symmetric_band(&site) {
                    return Err(support_error(
                        family,
                        n as u32,
                        "a band holding its bumps and their recombination",
                    ));
                }
                field.set(site, Complex64::new(1.0, 0.0));
            }
        }
        FamilyKind::LineWindows => {
            let dxi = geometry.xi_spacing();
            let inv = 1.0 / dxi;
            if (inv - inv.round()).abs() > 1e-9 {
                return Err(CoreError::UnresolvableSupport(format!(
                    "line windows need a xi spacing dividing 1, got {dxi}"
                )));
            }
            let inv = inv.round() as i64;
            let conjugated = index >= 2;
            let center = if conjugated { -(n as i64) } else { n as i64 };
            // half-open window [center-1, center+1) in xi
            for k in (center - 1) * inv..(center + 1) * inv {
                let xi_val = k as f64 * dxi;
                // dispersive window center: -xi^2 plain, +xi^2 conjugated
                let tau_center = if conjugated {
                    xi_val * xi_val
                } else {
                    -xi_val * xi_val
                };
                let j_lo = ((tau_center - BUMP_HALF_WIDTH) * steps as f64).ceil() as i64;
                let j_hi = ((tau_center + BUMP_HALF_WIDTH) * steps as f64).ceil() as i64;
                for j in j_lo..j_hi {
                    let site = Site {
                        xi: [k as i32, 0, 0],
                        tau: j as i32,
                    };
                    if !geometry.in_symmetric_band(&site) {
                        return Err(support_error(
                            family,
                            n,
                            "a band holding its windows and their dispersive heights",
                        ));
                    }
                    field.set(site, Complex64::new(1.0, 0.0));
                }
            }
        }
    }
    Ok(field)
}

/// All members of a family on one lattice.
pub fn family_members(
    family: &CounterexampleFamily,
    geometry: &LatticeGeometry,
    n: u32,
) -> Result<Vec<FrequencyField>> {
    (0..family.arity)
        .map(|i| build_family_member(family, geometry, n, i))
        .collect()
}

/// The divisor turning member `i` into the probed factor field: the
/// factor's weight, on the opposite branch when the slot is conjugated
/// (the member then describes the conjugated factor's transform).
fn member_divisors(family: &CounterexampleFamily, params: &Params) -> Result<Vec<WeightSpec>> {
    let case = find_case(family.target_case).ok_or_else(|| {
        CoreError::InvalidInput(format!(
            "family {} targets unknown case {}",
            family.id, family.target_case
        ))
    })?;
    let shape = (case.build)(params);
    if shape.factors.len() != family.arity {
        return Err(CoreError::InvalidInput(format!(
            "family {} arity {} does not match case {}",
            family.id, family.arity, case.id
        )));
    }
    Ok(shape
        .factors
        .iter()
        .map(|f| {
            if f.conjugated {
                f.weight.flipped()
            } else {
                f.weight
            }
        })
        .collect())
}

fn lhs_weight(family: &CounterexampleFamily, params: &Params) -> Result<WeightSpec> {
    let case = find_case(family.target_case).ok_or_else(|| {
        CoreError::InvalidInput(format!(
            "family {} targets unknown case {}",
            family.id, family.target_case
        ))
    })?;
    match (case.build)(params).lhs.kind {
        LhsKind::Xsb(w) => Ok(w),
        LhsKind::Mixed(_) => Err(CoreError::InvalidOperation(format!(
            "growth target {} is not measured in a weighted L2 norm",
            case.id
        ))),
    }
}

fn weighted_numerator(
    family: &CounterexampleFamily,
    params: &Params,
    geometry: &LatticeGeometry,
    n: u32,
) -> Result<(Vec<FrequencyField>, FrequencyField, f64)> {
    let members = family_members(family, geometry, n)?;
    let divisors = member_divisors(family, params)?;
    let entries: Vec<FrequencyField> = members
        .iter()
        .zip(&divisors)
        .map(|(m, w)| m.map_coeffs(|site, c| c / w.value(geometry, site)))
        .collect();
    let refs: Vec<&FrequencyField> = entries.iter().collect();
    let conv = product_convolution(&refs)?;
    let lhs = xsb_norm(&conv, &lhs_weight(family, params)?);
    Ok((members, conv, lhs))
}

/// Quotient of the target case on the family at concentration `n`, in the
/// weighted-function formulation.
pub fn family_quotient(
    family: &CounterexampleFamily,
    params: &Params,
    geometry: &LatticeGeometry,
    n: u32,
) -> Result<f64> {
    let (members, _, lhs) = weighted_numerator(family, params, geometry, n)?;
    let mut rhs = 1.0;
    for m in &members {
        rhs *= l2_norm(m);
    }
    if rhs == 0.0 || !rhs.is_finite() {
        return Err(CoreError::UndefinedQuotient);
    }
    Ok(lhs / rhs)
}

/// Number of integer tuples `(j_1..j_m)` with every `|j_i| <= k` summing
/// to `target`.
fn tau_decomposition_count(m: usize, k: i64, target: i64) -> f64 {
    if m == 0 {
        return if target == 0 { 1.0 } else { 0.0 };
    }
    let mut acc = 0.0;
    for j in -k..=k {
        acc += tau_decomposition_count(m - 1, k, target - j);
    }
    acc
}

/// Analytic lower bound for the weighted numerator at concentration `n`.
///
/// Torus families: the convolution is a single spatial column; at tau
/// offset `j` from the recombined center it is at least
/// `W^{m-1} * count(j) * prod_i min(entry_i)`, counted exactly.  The line
/// family's constant is instead calibrated once at a fixed small `n`
/// (slacked by `CALIBRATION_SLACK`) and transported along the predicted
/// `<n>^{-4s}` scaling of its entries.
fn analytic_lower_bound(
    family: &CounterexampleFamily,
    params: &Params,
    geometry: &LatticeGeometry,
    n: u32,
) -> Result<f64> {
    let steps = steps_per_unit(geometry)?;
    let w = geometry.measure_weight();
    let lhs_w = lhs_weight(family, params)?;
    match family.kind {
        FamilyKind::TorusBumps { xi_dirs, tau_mul } => {
            let members = family_members(family, geometry, n)?;
            let divisors = member_divisors(family, params)?;
            let mut min_product = 1.0f64;
            for (m, d) in members.iter().zip(&divisors) {
                let mut max_divisor = 0.0f64;
                m.for_each_nonzero(|site, _| {
                    max_divisor = max_divisor.max(d.value(geometry, &site));
                });
                min_product /= max_divisor;
            }
            let n = n as i64;
            let mut xi = [0i32; 3];
            let mut tau_center = 0i64;
            for (dir, mul) in xi_dirs.iter().zip(tau_mul) {
                for d in 0..3 {
                    xi[d] += (dir[d] * n) as i32;
                }
                tau_center += mul * n * n;
            }
            let m = family.arity;
            let mut bound_sq = 0.0;
            for j in -steps..=steps {
                let count = tau_decomposition_count(m, steps, j);
                let site = Site {
                    xi,
                    tau: (tau_center * steps + j) as i32,
                };
                let value =
                    w.powi(m as i32 - 1) * count * min_product * lhs_w.value(geometry, &site);
                bound_sq += value * value * w;
            }
            Ok(bound_sq.sqrt())
        }
        FamilyKind::LineWindows => {
            if n == 0 {
                return Err(CoreError::InvalidInput(
                    "line-window lower bound needs n >= 1".into(),
                ));
            }
            // scale of the entries: each of the four windows sits at
            // distance ~n from the origin
            let entry_scale = |nn: u32| {
                let b = (1.0 + (nn as f64) * (nn as f64)).sqrt();
                b.powf(-4.0 * params.s)
            };
            let cal_geom = default_geometry(family, CALIBRATION_N)?;
            let (_, cal_conv, _) = weighted_numerator(family, params, &cal_geom, CALIBRATION_N)?;
            let cal_floor = resonant_floor(&cal_conv, &cal_geom, CALIBRATION_N)?;
            let c = CALIBRATION_SLACK * cal_floor / entry_scale(CALIBRATION_N);
            let conv_floor = c * entry_scale(n);
            let dxi = geometry.xi_spacing();
            let inv = (1.0 / dxi).round() as i64;
            let k_max = inv / (2 * n as i64);
            let mut bound_sq = 0.0;
            for k in -k_max..=k_max {
                for j in -steps..=steps {
                    let site = Site {
                        xi: [k as i32, 0, 0],
                        tau: j as i32,
                    };
                    let value = conv_floor * lhs_w.value(geometry, &site);
                    bound_sq += value * value * w;
                }
            }
            Ok(bound_sq.sqrt())
        }
    }
}

/// Smallest convolution value over the resonant output set
/// `|2 n xi| <= 1`, `|tau| <= 1` of the line family.
fn resonant_floor(conv: &FrequencyField, geometry: &LatticeGeometry, n: u32) -> Result<f64> {
    let steps = steps_per_unit(geometry)?;
    let inv = (1.0 / geometry.xi_spacing()).round() as i64;
    let k_max = inv / (2 * n as i64);
    let mut floor = f64::INFINITY;
    for k in -k_max..=k_max {
        for j in -steps..=steps {
            let site = Site {
                xi: [k as i32, 0, 0],
                tau: j as i32,
            };
            let v = conv.get(&site).re;
            floor = floor.min(v);
        }
    }
    if !floor.is_finite() || floor <= 0.0 {
        return Err(CoreError::ProbeAborted(format!(
            "resonant output set empty or massless at n={n}"
        )));
    }
    Ok(floor)
}

/// Check the numerator against the family's analytic lower bound on its
/// default lattice.  Returns `(numerator, bound)`; errs when the
/// certificate fails.
pub fn verify_lower_bound(
    family: &CounterexampleFamily,
    params: &Params,
    n: u32,
) -> Result<(f64, f64)> {
    let geometry = default_geometry(family, n)?;
    let (_, _, lhs) = weighted_numerator(family, params, &geometry, n)?;
    let bound = analytic_lower_bound(family, params, &geometry, n)?;
    if !(bound > 0.0) {
        return Err(CoreError::ProbeAborted(format!(
            "vacuous lower bound {bound} for family {} at n={n}",
            family.id
        )));
    }
    if lhs < bound * (1.0 - 1e-9) {
        return Err(CoreError::ProbeAborted(format!(
            "lower bound failed for family {} at n={n}: numerator {lhs} < bound {bound}",
            family.id
        )));
    }
    Ok((lhs, bound))
}

/// Growth fit of one family: quotients on the default lattices over
/// `n_list`, least-squares slope of `ln q` against `ln n`, and the
/// comparison with the predicted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub family_id: String,
    pub params: Params,
    pub n_values: Vec<u32>,
    pub quotients: Vec<f64>,
    pub log_quotients: Vec<f64>,
    /// Geometry fingerprint used at each n.
    pub fingerprints: Vec<String>,
    pub fitted_slope: f64,
    /// Root-mean-square deviation of `ln q` from the fitted line.
    pub residual: f64,
    pub predicted_slope: f64,
    /// fitted minus predicted.
    pub margin: f64,
}

/// Measure the family's growth exponent over at least three increasing
/// concentrations.
pub fn fit_growth(
    family: &CounterexampleFamily,
    params: &Params,
    n_list: &[u32],
) -> Result<GrowthReport> {
    if n_list.len() < 3 {
        return Err(CoreError::InvalidInput(format!(
            "growth fit needs at least 3 concentrations, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] < 1 {
        return Err(CoreError::InvalidInput(
            "concentrations must be strictly increasing and at least 1".into(),
        ));
    }
    let mut quotients = Vec::with_capacity(n_list.len());
    let mut fingerprints = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let geometry = default_geometry(family, n)?;
        let q = family_quotient(family, params, &geometry, n)?;
        if !(q > 0.0) || !q.is_finite() {
            return Err(CoreError::ProbeAborted(format!(
                "family {} quotient degenerate at n={n}: {q}",
                family.id
            )));
        }
        quotients.push(q);
        fingerprints.push(geometry.fingerprint());
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = quotients.iter().map(|q| q.ln()).collect();
    let len = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / len;
    let y_mean = ys.iter().sum::<f64>() / len;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let fitted_slope = sxy / sxx;
    let intercept = y_mean - fitted_slope * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (fitted_slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / len)
        .sqrt();
    let predicted_slope = (family.predicted_slope)(params);
    Ok(GrowthReport {
        family_id: family.id.to_string(),
        params: *params,
        n_values: n_list.to_vec(),
        quotients,
        log_quotients: ys,
        fingerprints,
        fitted_slope,
        residual,
        predicted_slope,
        margin: fitted_slope - predicted_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn violating_params(id: &str) -> Params {
        match id {
            "ex41" => Params::new(-0.25, 0.55, -0.3),
            "ex42f" => Params::new(-0.5, 0.55, 0.0),
            "ex42g" => Params::new(-0.5, 0.55, -0.2),
            "ex51" | "ex51tri" => Params::new(-0.3, 0.55, -0.45),
            "ex52" | "ex52tri" => Params::new(-0.25, 0.55, -0.45),
            "ex53" => Params::new(-0.25, 0.55, -0.3),
            _ => unreachable!(),
        }
    }

    fn brute_convolution(
        geometry: &LatticeGeometry,
        inputs: &[&FrequencyField],
    ) -> BTreeMap<Site, Complex64> {
        let entry_lists: Vec<Vec<(Site, Complex64)>> =
            inputs.iter().map(|f| f.nonzero_entries()).collect();
        let mut acc: BTreeMap<[i64; 4], Complex64> = BTreeMap::new();
        let mut stack = vec![(0usize, [0i64; 4], Complex64::new(1.0, 0.0))];
        while let Some((depth, key, value)) = stack.pop() {
            if depth == entry_lists.len() {
                *acc.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
                continue;
            }
            for (site, c) in &entry_lists[depth] {
                let mut next = key;
                for d in 0..3 {
                    next[d] += site.xi[d] as i64;
                }
                next[3] += site.tau as i64;
                stack.push((depth + 1, next, value * c));
            }
        }
        let weight = geometry.measure_weight().powi(inputs.len() as i32 - 1);
        let mut out = BTreeMap::new();
        for (key, value) in acc {
            if key.iter().any(|&k| k.abs() > i32::MAX as i64) {
                continue;
            }
            let site = Site {
                xi: [key[0] as i32, key[1] as i32, key[2] as i32],
                tau: key[3] as i32,
            };
            if geometry.in_symmetric_band(&site) && value != Complex64::new(0.0, 0.0) {
                out.insert(site, value * weight);
            }
        }
        out
    }

    fn assert_matches_brute(family_id: &str, n: u32) {
        let family = find_family(family_id).unwrap();
        let params = violating_params(family_id);
        let geometry = default_geometry(&family, n).unwrap();
        let members = family_members(&family, &geometry, n).unwrap();
        let divisors = member_divisors(&family, &params).unwrap();
        let entries: Vec<FrequencyField> = members
            .iter()
            .zip(&divisors)
            .map(|(m, w)| m.map_coeffs(|site, c| c / w.value(&geometry, site)))
            .collect();
        let refs: Vec<&FrequencyField> = entries.iter().collect();
        let conv = product_convolution(&refs).unwrap();
        let brute = brute_convolution(&geometry, &refs);
        let mut count = 0usize;
        conv.for_each_nonzero(|site, c| {
            let expect = brute
                .get(&site)
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0));
            assert_relative_eq!(c.re, expect.re, max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(c.im, expect.im, max_relative = 1e-12, epsilon = 1e-14);
            count += 1;
        });
        assert_eq!(count, brute.len(), "support mismatch for {family_id}");
    }

    #[test]
    fn convolutions_match_brute_force_at_small_n() {
        assert_matches_brute("ex41", 2);
        assert_matches_brute("ex42f", 2);
        assert_matches_brute("ex53", 2);
    }

    #[test]
    fn member_mass_does_not_depend_on_n() {
        for family in families() {
            let norms_at = |n: u32| -> Vec<f64> {
                let geometry = default_geometry(&family, n).unwrap();
                family_members(&family, &geometry, n)
                    .unwrap()
                    .iter()
                    .map(l2_norm)
                    .collect()
            };
            let small = norms_at(4);
            let large = norms_at(16);
            for (a, b) in small.iter().zip(&large) {
                assert!(
                    (a / b - 1.0).abs() <= 0.01,
                    "family {}: member mass drifted from {a} to {b}",
                    family.id
                );
            }
        }
    }

    #[test]
    fn degenerate_families_coincide_at_n_zero() {
        let ex42f = find_family("ex42f").unwrap();
        let ex42g = find_family("ex42g").unwrap();
        let geometry = default_geometry(&ex42f, 0).unwrap();
        for i in 0..3 {
            let f = build_family_member(&ex42f, &geometry, 0, i).unwrap();
            let g = build_family_member(&ex42g, &geometry, 0, i).unwrap();
            assert_eq!(f.nonzero_entries(), g.nonzero_entries());
        }
        let tri_a = find_family("ex51tri").unwrap();
        let tri_b = find_family("ex52tri").unwrap();
        let geometry = default_geometry(&tri_a, 0).unwrap();
        for i in 0..3 {
            let a = build_family_member(&tri_a, &geometry, 0, i).unwrap();
            let b = build_family_member(&tri_b, &geometry, 0, i).unwrap();
            assert_eq!(a.nonzero_entries(), b.nonzero_entries());
        }
    }

    #[test]
    fn positive_regularity_flips_growth_to_decay() {
        let family = find_family("ex41").unwrap();
        let params = Params::new(0.25, 0.55, -0.3);
        let report = fit_growth(&family, &params, &[4, 8, 16]).unwrap();
        assert!(
            (report.fitted_slope + 0.25).abs() <= 0.1,
            "expected decay -0.25, fitted {}",
            report.fitted_slope
        );
    }

    #[test]
    fn torus_growth_matches_predictions() {
        for id in ["ex42f", "ex51"] {
            let family = find_family(id).unwrap();
            let params = violating_params(id);
            let report = fit_growth(&family, &params, &[4, 8, 16, 32]).unwrap();
            assert!(
                report.margin.abs() <= 0.1,
                "{id}: fitted {} vs predicted {}",
                report.fitted_slope,
                report.predicted_slope
            );
            assert_eq!(report.fingerprints.len(), 4);
        }
    }

    #[test]
    fn lower_bounds_certify_small_concentrations() {
        for family in families() {
            let params = violating_params(family.id);
            for n in [2, 4] {
                let (lhs, bound) = verify_lower_bound(&family, &params, n)
                    .unwrap_or_else(|e| panic!("family {} n={n}: {e}", family.id));
                assert!(lhs >= bound * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn undersized_lattices_are_rejected_with_guidance() {
        let family = find_family("ex42f").unwrap();
        let geometry = LatticeGeometry::new(DomainKind::Torus1d, 8, 1.0, 40, 1.0).unwrap();
        let err = build_family_member(&family, &geometry, 4, 2).unwrap_err();
        match err {
            CoreError::UnresolvableSupport(msg) => {
                assert!(msg.contains("e.g."), "no guidance in: {msg}")
            }
            other => panic!("expected unresolvable support, got {other}"),
        }
    }

    #[test]
    fn growth_fit_rejects_short_or_unsorted_lists() {
        let family = find_family("ex42f").unwrap();
        let params = violating_params("ex42f");
        assert!(matches!(
            fit_growth(&family, &params, &[4, 8]),
            Err(CoreError::InvalidInput(_))
        ));
        assert!(matches!(
            fit_growth(&family, &params, &[8, 4, 16]),
            Err(CoreError::InvalidInput(_))
        ));
    }

    #[test]
    fn quotients_are_positive_on_default_lattices()  {
        for family in families() {
            let params = violating_params(family.id);
            for n in [1u32, 2, 5] {
                let geometry = default_geometry(&family, n).unwrap();
                let q = family_quotient(&family, &params, &geometry, n).unwrap();
                assert!(q.is_finite() && q > 0.0, "family {} n={n}", family.id);
            }
        }
    }
}
