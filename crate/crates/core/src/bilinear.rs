//! Bilinear frequency multipliers and the exact free-pair identity.
//!
//! The operators here act on pairs of coefficient fields as twisted
//! convolutions: the output at `(xi, tau)` sums over exact splittings
//! `xi1 + xi2 = xi`, `tau1 + tau2 = tau` with a real symbol depending on
//! `xi1 - xi2` (minus family) or `xi1 + 2 xi2` (plus family).  Because the
//! symbol couples to the difference while the convolution fixes the sum,
//! no FFT factorization exists; the quadratic pair loop is intentional
//! and sized for desk-scale lattices.
//!
//! Convolution pairs whose index sum leaves the symmetric band are
//! dropped (zero padding), never wrapped: wrapping would alias the
//! dispersive relation `tau +- |xi|^2`.  Outputs therefore live on sites
//! whose negatives are representable, which keeps conjugation and
//! adjointness bookkeeping exact for fields without Nyquist-row mass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::lattice::{
    conjugate_field, fft_axis, FrequencyField, LatticeGeometry, Site, SpatialSpectrum,
};
use crate::norms::duality_pairing;
use crate::Result;

/// Which linear combination of the two input frequencies feeds the symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolFamily {
    /// `xi1 - xi2`; symmetric under swapping the inputs.
    Minus,
    /// `xi1 + 2 xi2`; genuinely ordered.
    Plus,
}

/// Homogeneous (`|.|^s`) or smoothed (`<.>^s`) radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BracketKind {
    Abs,
    Japanese,
}

/// Real symbol `profile(combination)^s` for the twisted convolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearSymbol {
    pub family: SymbolFamily,
    pub bracket: BracketKind,
    pub s: f64,
}

impl BilinearSymbol {
    pub fn new(family: SymbolFamily, bracket: BracketKind, s: f64) -> BilinearSymbol {
        BilinearSymbol { family, bracket, s }
    }

    pub fn i_minus(s: f64) -> BilinearSymbol {
        BilinearSymbol::new(SymbolFamily::Minus, BracketKind::Abs, s)
    }

    pub fn j_minus(s: f64) -> BilinearSymbol {
        BilinearSymbol::new(SymbolFamily::Minus, BracketKind::Japanese, s)
    }

    pub fn i_plus(s: f64) -> BilinearSymbol {
        BilinearSymbol::new(SymbolFamily::Plus, BracketKind::Abs, s)
    }

    pub fn j_plus(s: f64) -> BilinearSymbol {
        BilinearSymbol::new(SymbolFamily::Plus, BracketKind::Japanese, s)
    }

    /// Physical length of the symbol's frequency combination.
    fn argument(&self, geometry: &LatticeGeometry, k1: &[i32; 3], k2: &[i32; 3]) -> f64 {
        let mut acc = 0.0;
        for d in 0..geometry.dims() {
            let c = match self.family {
                SymbolFamily::Minus => (k1[d] - k2[d]) as f64,
                SymbolFamily::Plus => (k1[d] + 2 * k2[d]) as f64,
            } * geometry.xi_spacing();
            acc += c * c;
        }
        acc.sqrt()
    }

    /// Symbol value at an input pair.  `None` marks the genuinely
    /// singular configuration (`|.|^s`, `s < 0`, vanishing argument);
    /// nonnegative powers extend continuously (`|0|^0 = 1`, `|0|^s = 0`
    /// for `s > 0`).
    pub fn value(
        &self,
        geometry: &LatticeGeometry,
        k1: &[i32; 3],
        k2: &[i32; 3],
    ) -> Option<f64> {
        let r = self.argument(geometry, k1, k2);
        match self.bracket {
            BracketKind::Japanese => Some((1.0 + r * r).sqrt().powf(self.s)),
            BracketKind::Abs => {
                if r > 0.0 {
                    Some(r.powf(self.s))
                } else if self.s > 0.0 {
                    Some(0.0)
                } else if self.s == 0.0 {
                    Some(1.0)
                } else {
                    None
                }
            }
        }
    }
}

fn singular_pair_error(sym: &BilinearSymbol, s1: &Site, s2: &Site) -> CoreError {
    CoreError::SingularSymbol(format!(
        "|.|^{} symbol hits its zero set with nonzero mass at xi1={:?} xi2={:?}",
        sym.s, s1.xi, s2.xi
    ))
}

/// Twisted convolution `out(k) = w * sum_{k1+k2=k} symbol(k1,k2) f(k1) g(k2)`
/// over exact (unwrapped) index sums; `w` is the lattice measure weight.
/// Output sites outside the symmetric band are dropped.
///
/// With the unit symbol this is the measure-weighted convolution, which
/// relates to the transform of the pointwise product by the fixed factor
/// `(2 pi)^{(n+1)/2}` of the unitary convention (see the product test).
pub fn apply_bilinear(
    sym: &BilinearSymbol,
    f: &FrequencyField,
    g: &FrequencyField,
) -> Result<FrequencyField> {
    let geom = f.geometry().clone();
    geom.check_same(g.geometry())?;
    let sparse_out = !f.is_dense() && !g.is_dense();
    let mut out = if sparse_out {
        FrequencyField::zeros_sparse(&geom)
    } else {
        FrequencyField::zeros_dense(&geom)
    };
    let fe = f.nonzero_entries();
    let ge = g.nonzero_entries();
    let w = geom.measure_weight();
    for (s1, c1) in &fe {
        for (s2, c2) in &ge {
            let site = Site {
                xi: [
                    s1.xi[0] + s2.xi[0],
                    s1.xi[1] + s2.xi[1],
                    s1.xi[2] + s2.xi[2],
                ],
                tau: s1.tau + s2.tau,
            };
            if !geom.in_symmetric_band(&site) {
                continue;
            }
            match sym.value(&geom, &s1.xi, &s2.xi) {
                Some(m) => {
                    if m != 0.0 {
                        out.add_assign_at(site, c1 * c2 * (w * m));
                    }
                }
                None => return Err(singular_pair_error(sym, s1, s2)),
            }
        }
    }
    Ok(out)
}

/// Reference path: the same contract as [`apply_bilinear`], written as the
/// naive loop over all output and input band sites with no skipping of
/// stored zeros.  Test use only.
pub fn apply_bilinear_oracle(
    sym: &BilinearSymbol,
    f: &FrequencyField,
    g: &FrequencyField,
) -> Result<FrequencyField> {
    let geom = f.geometry().clone();
    geom.check_same(g.geometry())?;
    let mut out = FrequencyField::zeros_dense(&geom);
    let w = geom.measure_weight();
    let zero = Complex64::new(0.0, 0.0);
    for flat_out in 0..geom.site_count() {
        let target = geom.site_at(flat_out);
        if !geom.in_symmetric_band(&target) {
            continue;
        }
        let mut acc = zero;
        for flat1 in 0..geom.site_count() {
            let s1 = geom.site_at(flat1);
            let s2 = Site {
                xi: [
                    target.xi[0] - s1.xi[0],
                    target.xi[1] - s1.xi[1],
                    target.xi[2] - s1.xi[2],
                ],
                tau: target.tau - s1.tau,
            };
            if !geom.in_band(&s2) {
                continue;
            }
            let c1 = f.get(&s1);
            let c2 = g.get(&s2);
            match sym.value(&geom, &s1.xi, &s2.xi) {
                Some(m) => acc += c1 * c2 * (w * m),
                None => {
                    if c1 != zero && c2 != zero {
                        return Err(singular_pair_error(sym, &s1, &s2));
                    }
                }
            }
        }
        if acc != zero {
            out.set(target, acc);
        }
    }
    Ok(out)
}

/// Measure-weighted m-linear convolution: the lattice Riemann sum
///
/// `out(site) = W^{m-1} * sum_{site_1 + ... + site_m = site} prod_i c_i(site_i)`
///
/// with `W` the cell measure.  Index sums run in unbounded integer space
/// and the result is truncated to the symmetric band only at the end, so
/// nothing wraps and intermediate pair products are never clipped.  When
/// every input is sparse the fold stays sparse; otherwise each factor is
/// zero-padded to `m` times its extent per axis and the product is taken
/// through forward FFTs, one inverse FFT, and a single `1/sites` scale.
///
/// For band-confined supports this equals
/// `(2 pi)^{(m-1)(n+1)/2} * F(prod_i u_i)`.
pub fn product_convolution(inputs: &[&FrequencyField]) -> Result<FrequencyField> {
    let first = match inputs.first() {
        Some(f) => *f,
        None => {
            return Err(CoreError::InvalidInput(
                "product_convolution needs at least one factor".into(),
            ))
        }
    };
    let geom = first.geometry().clone();
    for other in &inputs[1..] {
        geom.check_same(other.geometry())?;
    }
    if inputs.len() == 1 {
        // Degenerate fold: W^0 times the field, band truncation still applies.
        let mut out = if first.is_dense() {
            FrequencyField::zeros_dense(&geom)
        } else {
            FrequencyField::zeros_sparse(&geom)
        };
        first.for_each_nonzero(|site, c| {
            if geom.in_symmetric_band(&site) {
                out.set(site, c);
            }
        });
        return Ok(out);
    }
    if inputs.iter().all(|f| !f.is_dense()) {
        sparse_product_convolution(&geom, inputs)
    } else {
        dense_product_convolution(&geom, inputs)
    }
}

fn sparse_product_convolution(
    geom: &LatticeGeometry,
    inputs: &[&FrequencyField],
) -> Result<FrequencyField> {
    use std::collections::BTreeMap;
    let zero = Complex64::new(0.0, 0.0);
    let mut acc: BTreeMap<[i64; 4], Complex64> = BTreeMap::new();
    inputs[0].for_each_nonzero(|site, c| {
        acc.insert(site_key(&site), c);
    });
    for field in &inputs[1..] {
        let entries = field.nonzero_entries();
        let mut next: BTreeMap<[i64; 4], Complex64> = BTreeMap::new();
        for (key, c1) in &acc {
            for (site2, c2) in &entries {
                let k2 = site_key(site2);
                let sum = [key[0] + k2[0], key[1] + k2[1], key[2] + k2[2], key[3] + k2[3]];
                *next.entry(sum).or_insert(zero) += c1 * c2;
            }
        }
        acc = next;
    }
    let weight = geom.measure_weight().powi(inputs.len() as i32 - 1);
    let dims = geom.dims();
    let xi_cap = geom.modes_per_axis() as i64 / 2 - 1;
    let tau_cap = geom.tau_count() as i64 / 2 - 1;
    let mut out = FrequencyField::zeros_sparse(geom);
    for (key, c) in acc {
        if c == zero {
            continue;
        }
        let in_band = (0..3).all(|d| {
            if d < dims {
                key[d].abs() <= xi_cap
            } else {
                key[d] == 0
            }
        }) && key[3].abs() <= tau_cap;
        if in_band {
            let site = Site {
                xi: [key[0] as i32, key[1] as i32, key[2] as i32],
                tau: key[3] as i32,
            };
            out.set(site, c * weight);
        }
    }
    Ok(out)
}

fn site_key(site: &Site) -> [i64; 4] {
    [
        i64::from(site.xi[0]),
        i64::from(site.xi[1]),
        i64::from(site.xi[2]),
        i64::from(site.tau),
    ]
}

fn dense_product_convolution(
    geom: &LatticeGeometry,
    inputs: &[&FrequencyField],
) -> Result<FrequencyField> {
    let m = inputs.len();
    let extents = geom.extents();
    let padded: Vec<usize> = extents.iter().map(|&e| e * m).collect();
    let padded_sites: usize = padded.iter().product();
    let axes = padded.len();

    let mut spectra: Option<Vec<Complex64>> = None;
    for field in inputs {
        let mut arr = vec![Complex64::new(0.0, 0.0); padded_sites];
        field.for_each_nonzero(|site, c| {
            let mut flat = 0usize;
            for (axis, &pad) in padded.iter().enumerate() {
                let (idx, ext) = if axis + 1 == axes {
                    (site.tau, extents[axis] as i32)
                } else {
                    (site.xi[axis], extents[axis] as i32)
                };
                let pos = (idx + ext / 2) as usize;
                flat = flat * pad + pos;
            }
            arr[flat] = c;
        });
        for axis in 0..axes {
            fft_axis(&mut arr, &padded, axis, true);
        }
        match spectra.as_mut() {
            None => spectra = Some(arr),
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(arr.iter()) {
                    *a *= b;
                }
            }
        }
    }
    let mut arr = spectra.expect("at least two factors");
    for axis in 0..axes {
        fft_axis(&mut arr, &padded, axis, false);
    }
    let norm = 1.0 / padded_sites as f64;
    let weight = geom.measure_weight().powi(m as i32 - 1) * norm;

    let mut out = FrequencyField::zeros_dense(geom);
    let total = geom.site_count();
    for flat in 0..total {
        let site = geom.site_at(flat);
        if !geom.in_symmetric_band(&site) {
            continue;
        }
        let mut pflat = 0usize;
        for (axis, &pad) in padded.iter().enumerate() {
            let (idx, ext) = if axis + 1 == axes {
                (site.tau, extents[axis] as i32)
            } else {
                (site.xi[axis], extents[axis] as i32)
            };
            // Index sums live at offset m*ext/2 in the padded array.
            let pos = (idx + (m as i32) * ext / 2) as usize;
            pflat = pflat * pad + pos;
        }
        let v = arr[pflat] * weight;
        if v != Complex64::new(0.0, 0.0) {
            out.set(site, v);
        }
    }
    Ok(out)
}

/// Both sides of the smoothed-symbol adjoint relation: pairing the
/// minus-family output `J^s_-(u, v)` against `w` equals pairing `v`
/// against the plus-family output `J^s_+(w, conj u)`.
pub fn adjoint_check(
    s: f64,
    u: &FrequencyField,
    v: &FrequencyField,
    w: &FrequencyField,
) -> Result<(Complex64, Complex64)> {
    let lhs = duality_pairing(&apply_bilinear(&BilinearSymbol::j_minus(s), u, v)?, w)?;
    let rhs = duality_pairing(
        v,
        &apply_bilinear(&BilinearSymbol::j_plus(s), w, &conjugate_field(u))?,
    )?;
    Ok((lhs, rhs))
}

/// Both sides of the conjugation covariance of the minus family:
/// `J^s_-(conj u, conj v)` against `conj(J^s_-(u, v))`.
pub fn conjugation_identity_check(
    s: f64,
    u: &FrequencyField,
    v: &FrequencyField,
) -> Result<(FrequencyField, FrequencyField)> {
    let sym = BilinearSymbol::j_minus(s);
    let lhs = apply_bilinear(&sym, &conjugate_field(u), &conjugate_field(v))?;
    let rhs = conjugate_field(&apply_bilinear(&sym, u, v)?);
    Ok((lhs, rhs))
}

/// Spatial Gaussian mode profile `amp * exp(-(xi-center)^2 / (2 width^2))`,
/// truncated beyond eight widths.  One space dimension.
pub fn gaussian_wave_packet(
    geometry: &LatticeGeometry,
    center: f64,
    width: f64,
    amplitude: f64,
) -> SpatialSpectrum {
    assert_eq!(geometry.dims(), 1, "wave packets are one-dimensional");
    assert!(width > 0.0);
    let mut spec = SpatialSpectrum::zeros(geometry);
    for k in geometry.xi_index_range() {
        let xi = geometry.xi_value(k);
        let z = (xi - center) / width;
        if z.abs() > 8.0 {
            continue;
        }
        spec.set_mode(
            [k, 0, 0],
            Complex64::new(amplitude * (-0.5 * z * z).exp(), 0.0),
        );
    }
    spec
}

/// Constant relating the free-pair quadrature to its closed form under
/// this crate's unitary transform convention.
///
/// Derivation sketch: with `u_j(t)` the free flows, Plancherel in `x` and
/// the `(2 pi)^{-1/2}` product-transform factor turn the space-time square
/// integral into a triple frequency sum against `int exp(-i t omega) dt`.
/// As the window grows that integral concentrates on `omega = 0`, whose
/// simple roots (the pair and its exchange) each carry a Jacobian
/// `1 / (2 |xi1 - xi2|)` cancelling the squared `|xi1 - xi2|^{1/2}`
/// symbol; collecting factors leaves exactly `1/2`.
pub const FREE_PAIR_CONSTANT: f64 = 0.5;

/// Quadrature and closed form of the free-pair identity:
///
/// `lhs = | I^{1/2}_-(flow of u1, flow of u2) |^2` over space and the time
/// window `[-t_max, t_max]`, by trapezoid quadrature;
/// `rhs = FREE_PAIR_CONSTANT * (|u1|^2 |u2|^2 + R)` with `R` the exchange
/// term, a double frequency sum.  The two agree as the window grows, up
/// to truncation and lattice-resonance error.
///
/// Requires one space dimension and mode supports whose pairwise sums
/// stay inside the symmetric band (else an aliasing error).
pub fn free_solution_identity(
    u1: &SpatialSpectrum,
    u2: &SpatialSpectrum,
    t_max: f64,
) -> Result<(f64, f64)> {
    let geom = u1.geometry().clone();
    geom.check_same(u2.geometry())?;
    if geom.dims() != 1 {
        return Err(CoreError::InvalidInput(
            "free-pair identity needs one space dimension".into(),
        ));
    }
    if !(t_max > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "time window must be positive, got {t_max}"
        )));
    }
    let modes1 = collect_modes(u1);
    let modes2 = collect_modes(u2);
    if modes1.is_empty() || modes2.is_empty() {
        return Ok((0.0, 0.0));
    }
    let max1 = modes1.iter().map(|m| m.k.abs()).max().unwrap();
    let max2 = modes2.iter().map(|m| m.k.abs()).max().unwrap();
    let half = geom.modes_per_axis() as i32 / 2;
    if max1 + max2 > half - 1 {
        return Err(CoreError::Aliasing(format!(
            "mode supports reach index sum {} beyond the symmetric half-band {}",
            max1 + max2,
            half - 1
        )));
    }
    let dxi = geom.xi_spacing();

    // pair table: compact output slot, coupling coefficient, mode indices
    let offset = (max1 + max2) as usize;
    let slots = 2 * offset + 1;
    let scale = dxi / (2.0 * std::f64::consts::PI).sqrt();
    let mut pairs = Vec::with_capacity(modes1.len() * modes2.len());
    for (i1, m1) in modes1.iter().enumerate() {
        for (i2, m2) in modes2.iter().enumerate() {
            let sym = (dxi * (m1.k - m2.k) as f64).abs().sqrt();
            pairs.push(Pair {
                slot: (m1.k + m2.k + offset as i32) as u32,
                coeff: m1.c * m2.c * (sym * scale),
                i1: i1 as u32,
                i2: i2 as u32,
            });
        }
    }

    // trapezoid over [-t_max, t_max]; step resolves the fastest phase
    let omega_max = dxi * dxi * ((max1 * max1 + max2 * max2) as f64);
    let step = 0.1 / (1.0 + omega_max);
    let n_steps = ((2.0 * t_max / step).ceil() as usize).max(2);
    let h = 2.0 * t_max / n_steps as f64;
    let mut phase1 = vec![Complex64::new(0.0, 0.0); modes1.len()];
    let mut phase2 = vec![Complex64::new(0.0, 0.0); modes2.len()];
    let mut slot_acc = vec![Complex64::new(0.0, 0.0); slots];
    let mut lhs = 0.0;
    for j in 0..=n_steps {
        let t = -t_max + h * j as f64;
        for (p, m) in phase1.iter_mut().zip(&modes1) {
            *p = Complex64::from_polar(1.0, -t * m.xi_sq);
        }
        for (p, m) in phase2.iter_mut().zip(&modes2) {
            *p = Complex64::from_polar(1.0, -t * m.xi_sq);
        }
        slot_acc.fill(Complex64::new(0.0, 0.0));
        for p in &pairs {
            slot_acc[p.slot as usize] += p.coeff * phase1[p.i1 as usize] * phase2[p.i2 as usize];
        }
        let spatial_sq: f64 = slot_acc.iter().map(|c| c.norm_sqr()).sum::<f64>() * dxi;
        let wgt = if j == 0 || j == n_steps { 0.5 } else { 1.0 };
        lhs += wgt * h * spatial_sq;
    }

    // closed form: product of squared norms plus the exchange double sum
    let p1: f64 = modes1.iter().map(|m| m.c.norm_sqr()).sum::<f64>() * dxi;
    let p2: f64 = modes2.iter().map(|m| m.c.norm_sqr()).sum::<f64>() * dxi;
    let mut exchange = Complex64::new(0.0, 0.0);
    for m1 in &modes1 {
        let other = u2.get_mode(&[m1.k, 0, 0]);
        if other == Complex64::new(0.0, 0.0) {
            continue;
        }
        for m2 in &modes2 {
            exchange += m1.c * other.conj() * m2.c * u1.get_mode(&[m2.k, 0, 0]).conj();
        }
    }
    let rhs = FREE_PAIR_CONSTANT * (p1 * p2 + dxi * dxi * exchange.re);
    Ok((lhs, rhs))
}

struct Mode {
    k: i32,
    xi_sq: f64,
    c: Complex64,
}

struct Pair {
    slot: u32,
    coeff: Complex64,
    i1: u32,
    i2: u32,
}

fn collect_modes(spec: &SpatialSpectrum) -> Vec<Mode> {
    let geom = spec.geometry();
    let mut out = Vec::new();
    for k in geom.xi_index_range() {
        let c = spec.get_mode(&[k, 0, 0]);
        if c != Complex64::new(0.0, 0.0) {
            let xi = geom.xi_value(k);
            out.push(Mode {
                k,
                xi_sq: xi * xi,
                c,
            });
        }
    }
    out
}
