//! Weighted space-time norms, multiplier helpers and the duality pairing.
//!
//! The central object is the dispersive-weighted norm
//!
//! ```text
//! |f|_{s,b,+-} = ( sum_w  w(site) * <xi>^{2s} <tau +- |xi|^2>^{2b} |F|^2 )^{1/2}
//! ```
//!
//! with `<x> = (1 + x^2)^{1/2}` and `w` the lattice measure weight.  The
//! sign selects which free paraboloid the modulation weight is centred on;
//! conjugating a field swaps the signs isometrically.
//!
//! Restriction-style norms over a time interval are represented by a
//! cutoff proxy (multiply by a time window, then take the full norm), not
//! by an infimum over extensions; the proxy is an upper bound for the
//! restriction norm and is what every probe in the crate reports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::lattice::{
    fft_axis, time_forward_transform, time_inverse_transform, FrequencyField, LatticeGeometry,
    Sign, Site, SpatialField,
};
use crate::Result;

/// Japanese bracket `<x> = sqrt(1 + x^2)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Parameters of a dispersive weight `<xi>^s <tau +- |xi|^2>^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub s: f64,
    pub b: f64,
    pub sign: Sign,
}

impl WeightSpec {
    pub fn new(s: f64, b: f64, sign: Sign) -> WeightSpec {
        WeightSpec { s, b, sign }
    }

    /// Same weight on the opposite paraboloid.
    pub fn flipped(self) -> WeightSpec {
        WeightSpec {
            sign: self.sign.flip(),
            ..self
        }
    }

    /// Weight value at a site.
    pub fn value(&self, geometry: &LatticeGeometry, site: &Site) -> f64 {
        let xi_sq = geometry.xi_abs2(&site.xi);
        let tau = geometry.tau_value(site.tau);
        let modulation = tau + self.sign.as_f64() * xi_sq;
        bracket(xi_sq.sqrt()).powf(self.s) * bracket(modulation).powf(self.b)
    }
}

/// Weighted norm of a coefficient field.  Works on dense and sparse
/// storage alike; zero coefficients contribute nothing.
pub fn xsb_norm(field: &FrequencyField, weight: &WeightSpec) -> f64 {
    let g = field.geometry();
    let mut acc = 0.0;
    field.for_each_nonzero(|site, c| {
        let w = weight.value(g, &site);
        acc += w * w * c.norm_sqr();
    });
    (acc * g.measure_weight()).sqrt()
}

/// Plain weighted L2 norm (`s = b = 0`).
pub fn l2_norm(field: &FrequencyField) -> f64 {
    xsb_norm(field, &WeightSpec::new(0.0, 0.0, Sign::Plus))
}

/// Mixed Lebesgue norm `| J^sigma u |_{L^p_t L^q_x}` of a physical field.
/// `p` or `q` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
}

impl MixedNormSpec {
    pub fn new(p: f64, q: f64, sigma: f64) -> MixedNormSpec {
        MixedNormSpec { p, q, sigma }
    }

    pub fn l2t_hs(sigma: f64) -> MixedNormSpec {
        MixedNormSpec::new(2.0, 2.0, sigma)
    }
}

fn check_exponent(e: f64, name: &str) -> Result<()> {
    if e.is_infinite() && e > 0.0 || e.is_finite() && e > 0.0 {
        Ok(())
    } else {
        Err(CoreError::InvalidInput(format!(
            "{name} must be positive or +infinity, got {e}"
        )))
    }
}

/// Evaluate a mixed norm by direct quadrature: the inner `L^q_x` per time
/// slice (weight `dx^n`), then `L^p_t` over slices (weight `dt`), with the
/// Bessel smoothing `J^sigma = <xi>^sigma` applied spatially first.
pub fn mixed_norm(field: &SpatialField, spec: &MixedNormSpec) -> Result<f64> {
    check_exponent(spec.p, "p")?;
    check_exponent(spec.q, "q")?;
    let g = field.geometry().clone();
    let mut values = field.values().to_vec();
    if spec.sigma != 0.0 {
        // per-slice J^sigma: spatial transform, multiply, transform back
        let extents = g.extents();
        for axis in 0..g.dims() {
            fft_axis(&mut values, &extents, axis, true);
        }
        for flat in 0..values.len() {
            let site = g.site_at(flat);
            let w = bracket(g.xi_abs2(&site.xi).sqrt()).powf(spec.sigma);
            values[flat] *= w;
        }
        for axis in 0..g.dims() {
            fft_axis(&mut values, &extents, axis, false);
        }
        let scale = 1.0 / g.spatial_site_count() as f64;
        for v in &mut values {
            *v *= scale;
        }
    }
    let k = g.tau_count();
    let spatial_count = g.spatial_site_count();
    let dxn = g.dx().powi(g.dims() as i32);
    let mut slice_norms = Vec::with_capacity(k);
    for j in 0..k {
        let mut acc = 0.0f64;
        let mut max = 0.0f64;
        for sp in 0..spatial_count {
            let a = values[sp * k + j].norm();
            if spec.q.is_finite() {
                acc += a.powf(spec.q);
            } else {
                max = max.max(a);
            }
        }
        slice_norms.push(if spec.q.is_finite() {
            (acc * dxn).powf(1.0 / spec.q)
        } else {
            max
        });
    }
    if spec.p.is_finite() {
        let dt = g.dt();
        let acc: f64 = slice_norms.iter().map(|v| v.powf(spec.p)).sum();
        Ok((acc * dt).powf(1.0 / spec.p))
    } else {
        Ok(slice_norms.into_iter().fold(0.0, f64::max))
    }
}

/// Spatial multiplier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `<xi>^sigma`, smooth everywhere.
    Bessel,
    /// `|xi|^sigma`; negative exponents are singular at the origin.
    Riesz,
}

/// Multiply a field by `<xi>^sigma` or `|xi|^sigma`.
///
/// The Riesz symbol with `sigma > 0` vanishes at `xi = 0` (continuous
/// extension); with `sigma = 0` it is the identity; with `sigma < 0` any
/// nonzero mass on the `xi = 0` row is an error.
pub fn apply_potential(
    field: &FrequencyField,
    sigma: f64,
    kind: PotentialKind,
) -> Result<FrequencyField> {
    let g = field.geometry().clone();
    if kind == PotentialKind::Riesz && sigma < 0.0 {
        let mut mass = 0.0;
        field.for_each_nonzero(|site, c| {
            if site.xi.iter().take(g.dims()).all(|&k| k == 0) {
                mass += c.norm();
            }
        });
        if mass > 0.0 {
            return Err(CoreError::SingularSymbol(format!(
                "|xi|^{sigma} with nonzero mass {mass:e} on the xi = 0 row"
            )));
        }
    }
    Ok(field.map_coeffs(|site, c| {
        let r = g.xi_abs2(&site.xi).sqrt();
        let m = match kind {
            PotentialKind::Bessel => bracket(r).powf(sigma),
            PotentialKind::Riesz => {
                if sigma == 0.0 {
                    1.0
                } else if r == 0.0 {
                    0.0
                } else {
                    r.powf(sigma)
                }
            }
        };
        c * m
    }))
}

/// Multiply a field by the modulation weight `<tau +- |xi|^2>^b`.
pub fn apply_modulation(field: &FrequencyField, b: f64, sign: Sign) -> FrequencyField {
    let g = field.geometry().clone();
    field.map_coeffs(|site, c| {
        let m = g.tau_value(site.tau) + sign.as_f64() * g.xi_abs2(&site.xi);
        c * bracket(m).powf(b)
    })
}

/// Time cutoff profiles for the restriction-norm proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    /// Indicator of `|t| <= T`.
    Sharp,
    /// Smooth bump: 1 on `|t| <= T/2`, 0 for `|t| >= T`, with the
    /// standard `exp(-1/r)` transition in between.
    SmoothBump,
}

fn smooth_step(r: f64) -> f64 {
    // C-infinity step: 0 for r <= 0, 1 for r >= 1.
    let eta = |r: f64| if r > 0.0 { (-1.0 / r).exp() } else { 0.0 };
    let a = eta(r);
    let b = eta(1.0 - r);
    a / (a + b)
}

/// Cutoff value at time `t` for half-width `t_half`.
pub fn cutoff_value(kind: CutoffKind, t_half: f64, t: f64) -> f64 {
    let a = t.abs();
    match kind {
        CutoffKind::Sharp => {
            if a <= t_half {
                1.0
            } else {
                0.0
            }
        }
        CutoffKind::SmoothBump => {
            if a <= t_half / 2.0 {
                1.0
            } else if a >= t_half {
                0.0
            } else {
                smooth_step((t_half - a) / (t_half / 2.0))
            }
        }
    }
}

/// Upper-bound proxy for the time-restricted norm: multiply the field by a
/// time cutoff of half-width `t_half` and take the full weighted norm.
///
/// `t_half` must satisfy `0 < t_half <= pi / dtau` (the half-width of the
/// physical time window).  At the upper end with a sharp cutoff the proxy
/// degenerates to the plain norm.  Dense fields only.
pub fn restricted_norm_proxy(
    field: &FrequencyField,
    weight: &WeightSpec,
    kind: CutoffKind,
    t_half: f64,
) -> Result<f64> {
    let g = field.geometry().clone();
    let window = std::f64::consts::PI / g.tau_spacing();
    if !(t_half > 0.0) || t_half > window + 1e-12 {
        return Err(CoreError::InvalidInput(format!(
            "cutoff half-width {t_half} outside (0, {window}]"
        )));
    }
    let mut series = time_inverse_transform(field)?;
    // scale each time slice; slices live tau-fastest
    let k = g.tau_count();
    for (flat, v) in series.data_mut().iter_mut().enumerate() {
        let j = crate::lattice::signed_index((flat % k) as i32, k as i32);
        *v *= cutoff_value(kind, t_half, g.t_value(j));
    }
    Ok(xsb_norm(&time_forward_transform(&series), weight))
}

/// Sesquilinear duality pairing `sum w * F * conj(G)`.
///
/// With respect to this pairing the dual weight of `(s, b)` is
/// `(-s, -b)` on the same paraboloid: Cauchy-Schwarz in the weighted
/// spaces is sharp exactly when `G = <xi>^{2s} <tau +- |xi|^2>^{2b} F`.
pub fn duality_pairing(f: &FrequencyField, g: &FrequencyField) -> Result<Complex64> {
    f.geometry().check_same(g.geometry())?;
    let mut acc = Complex64::new(0.0, 0.0);
    // iterate the sparser operand for efficiency; the sum is the same
    if !f.is_dense() || g.is_dense() {
        f.for_each_nonzero(|site, c| acc += c * g.get(&site).conj());
    } else {
        g.for_each_nonzero(|site, c| acc += f.get(&site) * c.conj());
    }
    Ok(acc * f.geometry().measure_weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{conjugate_field, gaussian_field, DomainKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn torus_unit_weight() -> LatticeGeometry {
        // M = 8, dtau = 1, K = 132: measure weight exactly 1
        LatticeGeometry::new(DomainKind::Torus1d, 8, 1.0, 132, 1.0).unwrap()
    }

    #[test]
    fn spike_norm_closed_form() {
        let g = torus_unit_weight();
        let mut f = FrequencyField::zeros_dense(&g);
        f.set(Site::new_1d(3, -5), c(1.0, 0.0));
        let w = WeightSpec::new(-0.7, 0.55, Sign::Plus);
        // <3>^s <(-5) + 9>^b
        let expected = bracket(3.0).powf(-0.7) * bracket(4.0).powf(0.55);
        assert!((xsb_norm(&f, &w) - expected).abs() < 1e-14 * expected);
        let wm = WeightSpec::new(-0.7, 0.55, Sign::Minus);
        let expected_m = bracket(3.0).powf(-0.7) * bracket(-14.0).powf(0.55);
        assert!((xsb_norm(&f, &wm) - expected_m).abs() < 1e-14 * expected_m);
    }

    #[test]
    fn zero_weight_is_l2_for_both_signs() {
        let g = torus_unit_weight();
        let f = gaussian_field(&g, 5, |_| 1.0);
        let p = xsb_norm(&f, &WeightSpec::new(0.0, 0.0, Sign::Plus));
        let m = xsb_norm(&f, &WeightSpec::new(0.0, 0.0, Sign::Minus));
        assert_eq!(p, m);
        assert!((p - l2_norm(&f)).abs() == 0.0);
    }

    #[test]
    fn norm_homogeneity_and_monotonicity() {
        let g = torus_unit_weight();
        let f = gaussian_field(&g, 17, |_| 1.0);
        let w = WeightSpec::new(0.3, 0.4, Sign::Plus);
        let lam = c(-1.25, 2.0);
        let scaled = f.scale(lam);
        let a = xsb_norm(&scaled, &w);
        let b = lam.norm() * xsb_norm(&f, &w);
        assert!((a - b).abs() < 1e-12 * b);
        // brackets are >= 1, so raising either exponent can only grow the norm
        let bigger = xsb_norm(&f, &WeightSpec::new(0.5, 0.4, Sign::Plus));
        assert!(bigger >= a / lam.norm());
        let bigger_b = xsb_norm(&f, &WeightSpec::new(0.3, 0.9, Sign::Plus));
        assert!(bigger_b >= a / lam.norm());
    }

    #[test]
    fn conjugation_swaps_weight_sign() {
        let g = torus_unit_weight();
        let f = gaussian_field(&g, 23, |_| 1.0);
        for &(s, b) in &[(-0.5, -0.6), (-0.5, 0.6), (0.0, 0.0), (0.5, 0.6), (0.5, -0.6)] {
            let plus = WeightSpec::new(s, b, Sign::Plus);
            let lhs = xsb_norm(&conjugate_field(&f), &plus);
            let rhs = xsb_norm(&f, &plus.flipped());
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300),
                "s={s} b={b}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn mixed_norm_against_direct_sums() {
        let g = LatticeGeometry::new(DomainKind::Torus1d, 8, 1.0, 8, 17.0).unwrap();
        let hat = gaussian_field(&g, 31, |_| 1.0);
        let u = crate::lattice::inverse_transform(&hat).unwrap();
        // independent direct summation for (p, q) = (4, 2), sigma = 0
        let k = g.tau_count();
        let dxn = g.dx();
        let dt = g.dt();
        let mut acc_p = 0.0;
        for j in 0..k {
            let mut s2 = 0.0;
            for sp in 0..g.spatial_site_count() {
                s2 += u.values()[sp * k + j].norm_sqr();
            }
            acc_p += (s2 * dxn).powf(2.0) ;
        }
        let oracle = (acc_p * dt).powf(0.25);
        let got = mixed_norm(&u, &MixedNormSpec::new(4.0, 2.0, 0.0)).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle);
        // p = q = 2, sigma = 0 must equal the L2 norm
        let l2 = mixed_norm(&u, &MixedNormSpec::new(2.0, 2.0, 0.0)).unwrap();
        assert!((l2 - u.l2_norm()).abs() < 1e-12 * l2);
        // p = infinity: max slice L2
        let linf = mixed_norm(&u, &MixedNormSpec::new(f64::INFINITY, 2.0, 0.0)).unwrap();
        let mut best: f64 = 0.0;
        for j in 0..k {
            let mut s2 = 0.0;
            for sp in 0..g.spatial_site_count() {
                s2 += u.values()[sp * k + j].norm_sqr();
            }
            best = best.max((s2 * dxn).sqrt());
        }
        assert!((linf - best).abs() < 1e-12 * best.max(1e-300));
    }

    #[test]
    fn mixed_norm_sigma_matches_bessel_on_l2() {
        // For p = q = 2 the smoothing commutes with Plancherel:
        // |J^sigma u|_{L2} = |<xi>^sigma hat u|_{L2}.
        let g = LatticeGeometry::new(DomainKind::Torus1d, 8, 1.0, 8, 17.0).unwrap();
        let hat = gaussian_field(&g, 37, |_| 1.0);
        let u = crate::lattice::inverse_transform(&hat).unwrap();
        let via_mixed = mixed_norm(&u, &MixedNormSpec::new(2.0, 2.0, 0.8)).unwrap();
        let weighted = apply_potential(&hat, 0.8, PotentialKind::Bessel).unwrap();
        let via_weight = l2_norm(&weighted);
        assert!((via_mixed - via_weight).abs() < 1e-10 * via_weight);
    }

    #[test]
    fn potential_and_modulation_multipliers() {
        let g = torus_unit_weight();
        let mut f = FrequencyField::zeros_dense(&g);
        f.set(Site::new_1d(2, 7), c(1.0, -1.0));
        let bes = apply_potential(&f, -1.3, PotentialKind::Bessel).unwrap();
        let expect = c(1.0, -1.0) * bracket(2.0).powf(-1.3);
        assert!((bes.get(&Site::new_1d(2, 7)) - expect).norm() < 1e-15);
        let rz = apply_potential(&f, 0.5, PotentialKind::Riesz).unwrap();
        assert!((rz.get(&Site::new_1d(2, 7)) - c(1.0, -1.0) * 2.0f64.sqrt()).norm() < 1e-15);
        // composing the modulation multiplier then the plain norm equals
        // carrying b in the weight
        let rand = gaussian_field(&g, 41, |_| 1.0);
        let modded = apply_modulation(&rand, 0.45, Sign::Minus);
        let a = xsb_norm(&modded, &WeightSpec::new(0.2, 0.0, Sign::Minus));
        let b = xsb_norm(&rand, &WeightSpec::new(0.2, 0.45, Sign::Minus));
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn riesz_negative_exponent_rejects_origin_mass() {
        let g = torus_unit_weight();
        let mut f = FrequencyField::zeros_dense(&g);
        f.set(Site::new_1d(0, 3), c(0.5, 0.0));
        let err = apply_potential(&f, -0.5, PotentialKind::Riesz);
        assert!(matches!(err, Err(CoreError::SingularSymbol(_))));
        // zero origin row: fine, and the origin row stays zero
        let mut ok = FrequencyField::zeros_dense(&g);
        ok.set(Site::new_1d(1, 3), c(0.5, 0.0));
        assert!(apply_potential(&ok, -0.5, PotentialKind::Riesz).is_ok());
    }

    #[test]
    fn proxy_at_full_window_sharp_is_plain_norm() {
        let g = torus_unit_weight();
        let f = gaussian_field(&g, 53, |_| 1.0);
        let w = WeightSpec::new(0.1, 0.3, Sign::Plus);
        let window = std::f64::consts::PI / g.tau_spacing();
        let proxy = restricted_norm_proxy(&f, &w, CutoffKind::Sharp, window).unwrap();
        let full = xsb_norm(&f, &w);
        assert!((proxy - full).abs() < 1e-10 * full);
        // T beyond the window or nonpositive is rejected
        assert!(restricted_norm_proxy(&f, &w, CutoffKind::Sharp, window * 1.5).is_err());
        assert!(restricted_norm_proxy(&f, &w, CutoffKind::Sharp, 0.0).is_err());
    }

    #[test]
    fn proxy_monotone_in_window_at_b_zero() {
        // At b = 0 the proxy is a plain weighted L2 norm in time, so a
        // larger sharp window can only add mass.  For b > 0 monotonicity
        // is only empirical; violations are recorded, not asserted.
        let g = torus_unit_weight();
        let w0 = WeightSpec::new(0.2, 0.0, Sign::Plus);
        let wb = WeightSpec::new(0.2, 0.6, Sign::Plus);
        let window = std::f64::consts::PI / g.tau_spacing();
        let mut violations = 0;
        for seed in 0..10u64 {
            let f = gaussian_field(&g, 100 + seed, |_| 1.0);
            let small = restricted_norm_proxy(&f, &w0, CutoffKind::Sharp, window / 4.0).unwrap();
            let large = restricted_norm_proxy(&f, &w0, CutoffKind::Sharp, window / 2.0).unwrap();
            assert!(small <= large * (1.0 + 1e-12));
            let sb = restricted_norm_proxy(&f, &wb, CutoffKind::Sharp, window / 4.0).unwrap();
            let lb = restricted_norm_proxy(&f, &wb, CutoffKind::Sharp, window / 2.0).unwrap();
            if sb > lb {
                violations += 1;
            }
        }
        println!("sharp-cutoff proxy monotonicity violations at b=0.6: {violations}/10");
    }

    #[test]
    fn smooth_bump_shape() {
        assert_eq!(cutoff_value(CutoffKind::SmoothBump, 2.0, 0.5), 1.0);
        assert_eq!(cutoff_value(CutoffKind::SmoothBump, 2.0, 2.5), 0.0);
        let mid = cutoff_value(CutoffKind::SmoothBump, 2.0, 1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // symmetric
        assert_eq!(
            cutoff_value(CutoffKind::SmoothBump, 2.0, 1.3),
            cutoff_value(CutoffKind::SmoothBump, 2.0, -1.3)
        );
    }

    #[test]
    fn duality_cauchy_schwarz_and_saturation() {
        let g = torus_unit_weight();
        let f = gaussian_field(&g, 61, |_| 1.0);
        let h = gaussian_field(&g, 62, |_| 1.0);
        let w = WeightSpec::new(0.4, 0.35, Sign::Plus);
        let dual = WeightSpec::new(-0.4, -0.35, Sign::Plus);
        let pair = duality_pairing(&f, &h).unwrap();
        assert!(pair.norm() <= xsb_norm(&f, &w) * xsb_norm(&h, &dual) * (1.0 + 1e-12));
        // saturating pair: G = weight^2 * F
        let sat = f.map_coeffs(|site, c| {
            let wv = w.value(&g, site);
            c * (wv * wv)
        });
        let p = duality_pairing(&f, &sat).unwrap();
        let bound = xsb_norm(&f, &w) * xsb_norm(&sat, &dual);
        assert!((p.norm() - bound).abs() < 1e-10 * bound);
    }

    #[test]
    fn pairing_requires_same_geometry() {
        let a = torus_unit_weight();
        let b = LatticeGeometry::new(DomainKind::Torus1d, 16, 1.0, 140, 1.0).unwrap();
        let fa = FrequencyField::zeros_dense(&a);
        let fb = FrequencyField::zeros_dense(&b);
        assert!(matches!(
            duality_pairing(&fa, &fb),
            Err(CoreError::GeometryMismatch { .. })
        ));
    }
}
