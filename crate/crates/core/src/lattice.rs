//! Discrete space-time frequency lattices and coefficient fields.
//!
//! A geometry couples a spatial frequency grid (per-axis signed indices
//! `-M/2 .. M/2-1`, spacing `dxi`) with a temporal frequency grid (signed
//! indices `-K/2 .. K/2-1`, spacing `dtau`).  Periodic domains use unit
//! spacing so that xi ranges over integers; the line domain approximates R
//! by a periodic box of period `2*pi/dxi`.
//!
//! The dual physical grid is fixed by the same data: `M` points of spacing
//! `dx = 2*pi/(M*dxi)` per spatial axis and `K` time points of spacing
//! `dt = 2*pi/(K*dtau)`, both centred at the origin.  The transform pair
//! uses the angular kernel `exp(-i(xi.x + tau t))` scaled so that
//!
//! ```text
//! sum |coeff|^2 * measure_weight  ==  sum |value|^2 * cell_volume
//! ```
//!
//! holds to machine precision (`measure_weight = dxi^n * dtau`,
//! `cell_volume = dx^n * dt`).  With this convention the multiplier
//! `tau + |xi|^2` vanishes exactly on the discrete free-evolution
//! paraboloid, which every weighted norm in the crate relies on.
//!
//! Fields exist in two storage forms.  Dense fields hold a coefficient for
//! every lattice site and support transforms; sparse fields hold a finite
//! set of populated sites and are used for the concentrated mode families,
//! whose adequate lattices are far too large to materialise.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::Result;

/// Sign of the dispersive weight `tau +/- |xi|^2` (and of the free
/// evolution it annihilates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// +1.0 or -1.0.
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Supported spatial domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    #[serde(rename = "torus_1d")]
    Torus1d,
    #[serde(rename = "torus_2d")]
    Torus2d,
    #[serde(rename = "torus_3d")]
    Torus3d,
    #[serde(rename = "line_1d")]
    Line1d,
}

impl DomainKind {
    /// Number of spatial dimensions.
    pub fn dims(self) -> usize {
        match self {
            DomainKind::Torus1d | DomainKind::Line1d => 1,
            DomainKind::Torus2d => 2,
            DomainKind::Torus3d => 3,
        }
    }

    pub fn is_periodic(self) -> bool {
        !matches!(self, DomainKind::Line1d)
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Torus1d => "torus_1d",
            DomainKind::Torus2d => "torus_2d",
            DomainKind::Torus3d => "torus_3d",
            DomainKind::Line1d => "line_1d",
        }
    }
}

/// Serializable geometry description (the config-file form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub domain_kind: DomainKind,
    pub modes_per_axis: usize,
    pub xi_spacing: f64,
    pub tau_count: usize,
    pub tau_spacing: f64,
}

impl GeometrySpec {
    pub fn build(&self) -> Result<LatticeGeometry> {
        LatticeGeometry::new(
            self.domain_kind,
            self.modes_per_axis,
            self.xi_spacing,
            self.tau_count,
            self.tau_spacing,
        )
    }
}

/// A validated space-time frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    domain: DomainKind,
    modes_per_axis: usize,
    xi_spacing: f64,
    tau_count: usize,
    tau_spacing: f64,
    measure_weight: f64,
}

impl LatticeGeometry {
    /// Construction rules: even positive extents; unit xi spacing on tori
    /// and spacing at most 1/4 on the line; the tau band must reach past
    /// every representable `|xi|^2` so the free paraboloid fits.
    pub fn new(
        domain: DomainKind,
        modes_per_axis: usize,
        xi_spacing: f64,
        tau_count: usize,
        tau_spacing: f64,
    ) -> Result<LatticeGeometry> {
        if modes_per_axis < 2 || modes_per_axis % 2 != 0 {
            return Err(CoreError::InvalidGeometry(format!(
                "modes_per_axis must be even and >= 2, got {modes_per_axis}"
            )));
        }
        if tau_count < 2 || tau_count % 2 != 0 {
            return Err(CoreError::InvalidGeometry(format!(
                "tau_count must be even and >= 2, got {tau_count}"
            )));
        }
        if !(xi_spacing > 0.0) || !xi_spacing.is_finite() {
            return Err(CoreError::InvalidGeometry(format!(
                "xi_spacing must be positive and finite, got {xi_spacing}"
            )));
        }
        if !(tau_spacing > 0.0) || !tau_spacing.is_finite() {
            return Err(CoreError::InvalidGeometry(format!(
                "tau_spacing must be positive and finite, got {tau_spacing}"
            )));
        }
        if domain.is_periodic() && xi_spacing != 1.0 {
            return Err(CoreError::InvalidGeometry(format!(
                "periodic domains use unit xi_spacing, got {xi_spacing}"
            )));
        }
        if !domain.is_periodic() && xi_spacing > 0.25 {
            return Err(CoreError::InvalidGeometry(format!(
                "line domain needs xi_spacing <= 0.25, got {xi_spacing}"
            )));
        }
        let geom = LatticeGeometry {
            domain,
            modes_per_axis,
            xi_spacing,
            tau_count,
            tau_spacing,
            measure_weight: xi_spacing.powi(domain.dims() as i32) * tau_spacing,
        };
        let tau_max = geom.tau_max();
        let xi_sq = geom.max_xi_abs2();
        if tau_max <= xi_sq {
            return Err(CoreError::InvalidGeometry(format!(
                "tau band [-{tau_max}, {tau_max}) does not reach past max |xi|^2 = {xi_sq}; \
                 increase tau_count or tau_spacing"
            )));
        }
        Ok(geom)
    }

    /// Smallest tau_spacing (as a round value) making `new` accept the
    /// given extents: the band must clear `max |xi|^2` with a 5% margin.
    pub fn adequate_tau_spacing(
        domain: DomainKind,
        modes_per_axis: usize,
        xi_spacing: f64,
        tau_count: usize,
    ) -> f64 {
        let half = modes_per_axis as f64 / 2.0 * xi_spacing;
        let xi_sq = domain.dims() as f64 * half * half;
        (2.1 * xi_sq.max(1.0)) / tau_count as f64
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn xi_spacing(&self) -> f64 {
        self.xi_spacing
    }

    pub fn tau_count(&self) -> usize {
        self.tau_count
    }

    pub fn tau_spacing(&self) -> f64 {
        self.tau_spacing
    }

    /// Quadrature weight of one lattice cell, `dxi^n * dtau`.
    pub fn measure_weight(&self) -> f64 {
        self.measure_weight
    }

    /// Extents `[M, .., M, K]` of the storage array (spatial axes then tau).
    pub fn extents(&self) -> Vec<usize> {
        let mut e = vec![self.modes_per_axis; self.dims()];
        e.push(self.tau_count);
        e
    }

    /// Total number of lattice sites.
    pub fn site_count(&self) -> usize {
        self.modes_per_axis.pow(self.dims() as u32) * self.tau_count
    }

    /// Spatial sites only (`M^n`).
    pub fn spatial_site_count(&self) -> usize {
        self.modes_per_axis.pow(self.dims() as u32)
    }

    /// Largest representable `|xi|^2` (attained at the most negative corner).
    pub fn max_xi_abs2(&self) -> f64 {
        let half = self.modes_per_axis as f64 / 2.0 * self.xi_spacing;
        self.dims() as f64 * half * half
    }

    /// Upper edge of the tau band, `K/2 * dtau`.
    pub fn tau_max(&self) -> f64 {
        self.tau_count as f64 / 2.0 * self.tau_spacing
    }

    /// Physical space step `2*pi/(M*dxi)`.
    pub fn dx(&self) -> f64 {
        2.0 * PI / (self.modes_per_axis as f64 * self.xi_spacing)
    }

    /// Physical time step `2*pi/(K*dtau)`.
    pub fn dt(&self) -> f64 {
        2.0 * PI / (self.tau_count as f64 * self.tau_spacing)
    }

    /// Volume of one physical cell, `dx^n * dt`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dims() as i32) * self.dt()
    }

    pub fn xi_value(&self, index: i32) -> f64 {
        index as f64 * self.xi_spacing
    }

    pub fn tau_value(&self, index: i32) -> f64 {
        index as f64 * self.tau_spacing
    }

    pub fn x_value(&self, index: i32) -> f64 {
        index as f64 * self.dx()
    }

    pub fn t_value(&self, index: i32) -> f64 {
        index as f64 * self.dt()
    }

    /// `|xi|^2` for a site's spatial index vector.
    pub fn xi_abs2(&self, xi: &[i32; 3]) -> f64 {
        let mut s = 0.0;
        for &k in xi.iter().take(self.dims()) {
            let v = self.xi_value(k);
            s += v * v;
        }
        s
    }

    /// Signed index ranges: spatial `-M/2 .. M/2-1`, tau `-K/2 .. K/2-1`.
    pub fn xi_index_range(&self) -> std::ops::Range<i32> {
        let h = self.modes_per_axis as i32 / 2;
        -h..h
    }

    pub fn tau_index_range(&self) -> std::ops::Range<i32> {
        let h = self.tau_count as i32 / 2;
        -h..h
    }

    /// True when every coordinate lies in the representable band.
    pub fn in_band(&self, site: &Site) -> bool {
        let xr = self.xi_index_range();
        let tr = self.tau_index_range();
        site.xi
            .iter()
            .take(self.dims())
            .all(|k| xr.contains(k))
            && tr.contains(&site.tau)
            && site.xi.iter().skip(self.dims()).all(|&k| k == 0)
    }

    /// True when the site avoids every Nyquist row (`-M/2`, `-K/2`), i.e.
    /// sits where negation maps band to band.
    pub fn in_symmetric_band(&self, site: &Site) -> bool {
        let xh = self.modes_per_axis as i32 / 2;
        let th = self.tau_count as i32 / 2;
        self.in_band(site)
            && site.xi.iter().take(self.dims()).all(|&k| k != -xh)
            && site.tau != -th
    }

    /// Flat storage index of an in-band site (spatial-major, tau fastest).
    pub fn flat_index(&self, site: &Site) -> usize {
        debug_assert!(self.in_band(site));
        let m = self.modes_per_axis;
        let mut idx = 0usize;
        for &k in site.xi.iter().take(self.dims()) {
            idx = idx * m + (k.rem_euclid(m as i32)) as usize;
        }
        idx * self.tau_count + (site.tau.rem_euclid(self.tau_count as i32)) as usize
    }

    /// Site of a flat storage index.
    pub fn site_at(&self, mut flat: usize) -> Site {
        let k = self.tau_count;
        let m = self.modes_per_axis as i32;
        let tau = signed_index((flat % k) as i32, self.tau_count as i32);
        flat /= k;
        let mut xi = [0i32; 3];
        for d in (0..self.dims()).rev() {
            xi[d] = signed_index((flat % self.modes_per_axis) as i32, m);
            flat /= self.modes_per_axis;
        }
        Site { xi, tau }
    }

    /// Negate a signed index with Nyquist fixed (the band's unpaired row
    /// maps to itself).
    pub fn negate_xi(&self, k: i32) -> i32 {
        let h = self.modes_per_axis as i32 / 2;
        if k == -h {
            k
        } else {
            -k
        }
    }

    pub fn negate_tau(&self, j: i32) -> i32 {
        let h = self.tau_count as i32 / 2;
        if j == -h {
            j
        } else {
            -j
        }
    }

    pub fn negate_site(&self, site: &Site) -> Site {
        let mut xi = [0i32; 3];
        for d in 0..self.dims() {
            xi[d] = self.negate_xi(site.xi[d]);
        }
        Site {
            xi,
            tau: self.negate_tau(site.tau),
        }
    }

    /// Same lattice with `factor` times as many tau sites at unchanged
    /// spacing: the dispersive band grows, the physical time step shrinks,
    /// the time window stays put.  This is the refinement used in every
    /// stability study.
    pub fn refine_tau(&self, factor: usize) -> Result<LatticeGeometry> {
        LatticeGeometry::new(
            self.domain,
            self.modes_per_axis,
            self.xi_spacing,
            self.tau_count * factor,
            self.tau_spacing,
        )
    }

    /// Short stable description used in reports and mismatch errors.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}[M={} dxi={} K={} dtau={}]",
            self.domain.name(),
            self.modes_per_axis,
            self.xi_spacing,
            self.tau_count,
            self.tau_spacing
        )
    }

    pub fn spec(&self) -> GeometrySpec {
        GeometrySpec {
            domain_kind: self.domain,
            modes_per_axis: self.modes_per_axis,
            xi_spacing: self.xi_spacing,
            tau_count: self.tau_count,
            tau_spacing: self.tau_spacing,
        }
    }

    pub(crate) fn check_same(&self, other: &LatticeGeometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GeometryMismatch {
                left: self.fingerprint(),
                right: other.fingerprint(),
            })
        }
    }
}

/// Map a storage index `p in 0..L` to its signed frequency index.
pub fn signed_index(p: i32, extent: i32) -> i32 {
    if p < extent / 2 {
        p
    } else {
        p - extent
    }
}

/// One lattice site: signed spatial indices (unused axes zero) and a
/// signed tau index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Site {
    pub xi: [i32; 3],
    pub tau: i32,
}

impl Site {
    pub fn new_1d(xi: i32, tau: i32) -> Site {
        Site {
            xi: [xi, 0, 0],
            tau,
        }
    }

    pub fn new_2d(xi0: i32, xi1: i32, tau: i32) -> Site {
        Site {
            xi: [xi0, xi1, 0],
            tau,
        }
    }

    pub fn new_3d(xi0: i32, xi1: i32, xi2: i32, tau: i32) -> Site {
        Site {
            xi: [xi0, xi1, xi2],
            tau,
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<Complex64>),
    Sparse(BTreeMap<Site, Complex64>),
}

/// A coefficient field over a lattice geometry.
///
/// Dense fields store every site and admit transforms; sparse fields store
/// a finite populated set (deterministically ordered) and admit all
/// sitewise operations, norms and convolutions.  Coefficients that are
/// exactly zero carry no mass anywhere in the crate.
#[derive(Debug, Clone)]
pub struct FrequencyField {
    geometry: LatticeGeometry,
    storage: Storage,
}

impl FrequencyField {
    pub fn zeros_dense(geometry: &LatticeGeometry) -> FrequencyField {
        FrequencyField {
            geometry: geometry.clone(),
            storage: Storage::Dense(vec![Complex64::new(0.0, 0.0); geometry.site_count()]),
        }
    }

    pub fn zeros_sparse(geometry: &LatticeGeometry) -> FrequencyField {
        FrequencyField {
            geometry: geometry.clone(),
            storage: Storage::Sparse(BTreeMap::new()),
        }
    }

    pub fn from_dense(geometry: &LatticeGeometry, coeffs: Vec<Complex64>) -> Result<FrequencyField> {
        if coeffs.len() != geometry.site_count() {
            return Err(CoreError::InvalidOperation(format!(
                "dense coefficient vector has {} entries, geometry has {} sites",
                coeffs.len(),
                geometry.site_count()
            )));
        }
        Ok(FrequencyField {
            geometry: geometry.clone(),
            storage: Storage::Dense(coeffs),
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of stored (not necessarily nonzero) entries.
    pub fn stored_len(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse(m) => m.len(),
        }
    }

    pub fn get(&self, site: &Site) -> Complex64 {
        if !self.geometry.in_band(site) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.storage {
            Storage::Dense(v) => v[self.geometry.flat_index(site)],
            Storage::Sparse(m) => m.get(site).copied().unwrap_or(Complex64::new(0.0, 0.0)),
        }
    }

    /// Write a coefficient.  Panics on out-of-band sites: callers own the
    /// band checks.
    pub fn set(&mut self, site: Site, value: Complex64) {
        assert!(
            self.geometry.in_band(&site),
            "site {:?} outside band of {}",
            site,
            self.geometry.fingerprint()
        );
        match &mut self.storage {
            Storage::Dense(v) => {
                let idx = self.geometry.flat_index(&site);
                v[idx] = value;
            }
            Storage::Sparse(m) => {
                if value == Complex64::new(0.0, 0.0) {
                    m.remove(&site);
                } else {
                    m.insert(site, value);
                }
            }
        }
    }

    pub fn add_assign_at(&mut self, site: Site, value: Complex64) {
        let cur = self.get(&site);
        self.set(site, cur + value);
    }

    /// Visit every populated site with a nonzero coefficient, in a
    /// deterministic order (storage order for dense, site order for sparse).
    pub fn for_each_nonzero(&self, mut f: impl FnMut(Site, Complex64)) {
        match &self.storage {
            Storage::Dense(v) => {
                for (flat, &c) in v.iter().enumerate() {
                    if c != Complex64::new(0.0, 0.0) {
                        f(self.geometry.site_at(flat), c);
                    }
                }
            }
            Storage::Sparse(m) => {
                for (&site, &c) in m {
                    if c != Complex64::new(0.0, 0.0) {
                        f(site, c);
                    }
                }
            }
        }
    }

    /// Collect the nonzero entries.
    pub fn nonzero_entries(&self) -> Vec<(Site, Complex64)> {
        let mut out = Vec::new();
        self.for_each_nonzero(|s, c| out.push((s, c)));
        out
    }

    /// Sitewise map preserving the storage kind.
    pub fn map_coeffs(&self, mut f: impl FnMut(&Site, Complex64) -> Complex64) -> FrequencyField {
        match &self.storage {
            Storage::Dense(v) => {
                let mut out = Vec::with_capacity(v.len());
                for (flat, &c) in v.iter().enumerate() {
                    let site = self.geometry.site_at(flat);
                    out.push(f(&site, c));
                }
                FrequencyField {
                    geometry: self.geometry.clone(),
                    storage: Storage::Dense(out),
                }
            }
            Storage::Sparse(m) => {
                let mut out = BTreeMap::new();
                for (&site, &c) in m {
                    let v = f(&site, c);
                    if v != Complex64::new(0.0, 0.0) {
                        out.insert(site, v);
                    }
                }
                FrequencyField {
                    geometry: self.geometry.clone(),
                    storage: Storage::Sparse(out),
                }
            }
        }
    }

    /// Dense coefficient slice, or an error for sparse fields.
    pub fn dense_coeffs(&self) -> Result<&[Complex64]> {
        match &self.storage {
            Storage::Dense(v) => Ok(v),
            Storage::Sparse(_) => Err(CoreError::InvalidOperation(
                "operation requires a dense field".into(),
            )),
        }
    }

    /// Linear combination `self + scale * other` (matching geometries and
    /// storage kinds; dense wins when mixed).
    pub fn axpy(&self, scale: Complex64, other: &FrequencyField) -> Result<FrequencyField> {
        self.geometry.check_same(&other.geometry)?;
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut out = a.clone();
                for (&site, &c) in b {
                    let v = out.get(&site).copied().unwrap_or(Complex64::new(0.0, 0.0))
                        + scale * c;
                    if v == Complex64::new(0.0, 0.0) {
                        out.remove(&site);
                    } else {
                        out.insert(site, v);
                    }
                }
                Ok(FrequencyField {
                    geometry: self.geometry.clone(),
                    storage: Storage::Sparse(out),
                })
            }
            _ => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.geometry.site_count()];
                self.for_each_nonzero(|s, c| out[self.geometry.flat_index(&s)] += c);
                other.for_each_nonzero(|s, c| out[self.geometry.flat_index(&s)] += scale * c);
                FrequencyField::from_dense(&self.geometry, out)
            }
        }
    }

    pub fn scale(&self, factor: Complex64) -> FrequencyField {
        self.map_coeffs(|_, c| factor * c)
    }
}

/// A physical-space field on the dual grid (values at `x_a`, `t_j`).
#[derive(Debug, Clone)]
pub struct SpatialField {
    geometry: LatticeGeometry,
    values: Vec<Complex64>,
}

impl SpatialField {
    pub fn from_values(geometry: &LatticeGeometry, values: Vec<Complex64>) -> Result<SpatialField> {
        if values.len() != geometry.site_count() {
            return Err(CoreError::InvalidOperation(format!(
                "value vector has {} entries, geometry has {} sites",
                values.len(),
                geometry.site_count()
            )));
        }
        Ok(SpatialField {
            geometry: geometry.clone(),
            values,
        })
    }

    /// Build from a function of (x, t); `x` has `dims()` meaningful entries.
    pub fn from_fn(
        geometry: &LatticeGeometry,
        mut f: impl FnMut(&[f64; 3], f64) -> Complex64,
    ) -> SpatialField {
        let mut values = vec![Complex64::new(0.0, 0.0); geometry.site_count()];
        for (flat, v) in values.iter_mut().enumerate() {
            let site = geometry.site_at(flat);
            let mut x = [0.0; 3];
            for d in 0..geometry.dims() {
                x[d] = geometry.x_value(site.xi[d]);
            }
            *v = f(&x, geometry.t_value(site.tau));
        }
        SpatialField {
            geometry: geometry.clone(),
            values,
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Discrete L2 norm with the physical cell volume.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.geometry.cell_volume();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }
}

/// Spatial-only Fourier coefficients (one time slice, or initial data).
#[derive(Debug, Clone)]
pub struct SpatialSpectrum {
    geometry: LatticeGeometry,
    coeffs: Vec<Complex64>,
}

impl SpatialSpectrum {
    pub fn zeros(geometry: &LatticeGeometry) -> SpatialSpectrum {
        SpatialSpectrum {
            geometry: geometry.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); geometry.spatial_site_count()],
        }
    }

    pub fn from_coeffs(geometry: &LatticeGeometry, coeffs: Vec<Complex64>) -> Result<SpatialSpectrum> {
        if coeffs.len() != geometry.spatial_site_count() {
            return Err(CoreError::InvalidOperation(format!(
                "spatial coefficient vector has {} entries, expected {}",
                coeffs.len(),
                geometry.spatial_site_count()
            )));
        }
        Ok(SpatialSpectrum {
            geometry: geometry.clone(),
            coeffs,
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Signed spatial index vector of a flat spatial position.
    pub fn xi_of_flat(&self, mut flat: usize) -> [i32; 3] {
        let m = self.geometry.modes_per_axis();
        let mut xi = [0i32; 3];
        for d in (0..self.geometry.dims()).rev() {
            xi[d] = signed_index((flat % m) as i32, m as i32);
            flat /= m;
        }
        xi
    }

    pub fn set_mode(&mut self, xi: [i32; 3], value: Complex64) {
        assert!(self.geometry.in_band(&Site { xi, tau: 0 }));
        let flat = self.flat_of_xi(&xi);
        self.coeffs[flat] = value;
    }

    /// Coefficient of mode `xi`; zero outside the band.
    pub fn get_mode(&self, xi: &[i32; 3]) -> Complex64 {
        if self.geometry.in_band(&Site { xi: *xi, tau: 0 }) {
            self.coeffs[self.flat_of_xi(xi)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn flat_of_xi(&self, xi: &[i32; 3]) -> usize {
        let m = self.geometry.modes_per_axis();
        let mut idx = 0usize;
        for &k in xi.iter().take(self.geometry.dims()) {
            idx = idx * m + (k.rem_euclid(m as i32)) as usize;
        }
        idx
    }

    /// Weighted Sobolev norm `(sum dxi^n <xi>^{2s} |c|^2)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let w = self
            .geometry
            .xi_spacing()
            .powi(self.geometry.dims() as i32);
        let mut acc = 0.0;
        for (flat, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let xi = self.xi_of_flat(flat);
            let b = 1.0 + self.geometry.xi_abs2(&xi);
            acc += b.powf(s) * c.norm_sqr();
        }
        (acc * w).sqrt()
    }
}

/// Time-indexed spatial spectra on the geometry's own time grid
/// (`K` slices at `t_j = j * dt`, stored tau-fastest like a field).
#[derive(Debug, Clone)]
pub struct SliceSeries {
    geometry: LatticeGeometry,
    data: Vec<Complex64>,
}

impl SliceSeries {
    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Coefficient of spatial mode `xi` at time index `j`.
    pub fn get(&self, xi: &[i32; 3], j: i32) -> Complex64 {
        let site = Site { xi: *xi, tau: j };
        self.data[self.geometry.flat_index(&site)]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Build a series from raw tau-fastest storage.
    pub(crate) fn from_data(geometry: &LatticeGeometry, data: Vec<Complex64>) -> SliceSeries {
        assert_eq!(data.len(), geometry.site_count());
        SliceSeries {
            geometry: geometry.clone(),
            data,
        }
    }

    /// Spatial L2 norm (with `dxi^n` weights) of one time slice.
    pub fn slice_l2(&self, j: i32) -> f64 {
        let g = &self.geometry;
        let w = g.xi_spacing().powi(g.dims() as i32);
        let k = g.tau_count();
        let jj = (j.rem_euclid(k as i32)) as usize;
        let mut acc = 0.0;
        for spatial in 0..g.spatial_site_count() {
            acc += self.data[spatial * k + jj].norm_sqr();
        }
        (acc * w).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Run an unscaled FFT along one axis of a flat row-major array.
/// `forward` selects the `exp(-2*pi*i*pq/L)` kernel.  Because the kernel is
/// L-periodic in both indices, arrays stored in wrap-around (signed index
/// mod L) order transform correctly with no shifting.
pub(crate) fn fft_axis(data: &mut [Complex64], extents: &[usize], axis: usize, forward: bool) {
    let ext = extents[axis];
    if ext == 1 {
        return;
    }
    let stride: usize = extents[axis + 1..].iter().product();
    let block = stride * ext;
    let total = data.len();
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(ext)
    } else {
        planner.plan_fft_inverse(ext)
    };
    let mut lane = vec![Complex64::new(0.0, 0.0); ext];
    let mut base = 0;
    while base < total {
        for off in 0..stride {
            for (t, slot) in lane.iter_mut().enumerate() {
                *slot = data[base + off + t * stride];
            }
            fft.process(&mut lane);
            for (t, slot) in lane.iter().enumerate() {
                data[base + off + t * stride] = *slot;
            }
        }
        base += block;
    }
}

/// Forward transform: physical values to frequency coefficients.
///
/// Coefficients are the Riemann sums
/// `cell_volume / (2 pi)^{(n+1)/2} * sum u(x,t) exp(-i(xi.x + tau t))`,
/// making the pair unitary between the weighted l2 spaces:
/// `sum |coeff|^2 * measure_weight == sum |value|^2 * cell_volume`.
pub fn forward_transform(field: &SpatialField) -> FrequencyField {
    let g = field.geometry().clone();
    let mut data = field.values().to_vec();
    let extents = g.extents();
    for axis in 0..extents.len() {
        fft_axis(&mut data, &extents, axis, true);
    }
    let n = g.dims() as i32;
    let scale = g.cell_volume() / (2.0 * PI).powf((n as f64 + 1.0) / 2.0);
    for v in &mut data {
        *v *= scale;
    }
    FrequencyField {
        geometry: g,
        storage: Storage::Dense(data),
    }
}

/// Inverse transform: frequency coefficients to physical values.
/// Requires a dense field.
pub fn inverse_transform(field: &FrequencyField) -> Result<SpatialField> {
    let g = field.geometry().clone();
    let mut data = field.dense_coeffs()?.to_vec();
    let extents = g.extents();
    for axis in 0..extents.len() {
        fft_axis(&mut data, &extents, axis, false);
    }
    let n = g.dims() as i32;
    let scale = g.measure_weight() / (2.0 * PI).powf((n as f64 + 1.0) / 2.0);
    for v in &mut data {
        *v *= scale;
    }
    SpatialField::from_values(&g, data)
}

/// Transform a slice series along its time axis only, producing the
/// space-time frequency field of the modulated mode amplitudes.
pub fn time_forward_transform(series: &SliceSeries) -> FrequencyField {
    let g = series.geometry.clone();
    let mut data = series.data.clone();
    let extents = g.extents();
    let tau_axis = extents.len() - 1;
    fft_axis(&mut data, &extents, tau_axis, true);
    let scale = g.dt() / (2.0 * PI).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    FrequencyField {
        geometry: g,
        storage: Storage::Dense(data),
    }
}

/// Inverse of [`time_forward_transform`].
pub fn time_inverse_transform(field: &FrequencyField) -> Result<SliceSeries> {
    let g = field.geometry().clone();
    let mut data = field.dense_coeffs()?.to_vec();
    let extents = g.extents();
    let tau_axis = extents.len() - 1;
    fft_axis(&mut data, &extents, tau_axis, false);
    let scale = g.tau_spacing() / (2.0 * PI).sqrt();
    for v in &mut data {
        *v *= scale;
    }
    Ok(SliceSeries { geometry: g, data })
}

/// Coefficient field of the complex conjugate:
/// `out(xi, tau) = conj(in(-xi, -tau))`.
///
/// Negation maps the band to itself with the Nyquist rows (`-M/2`, `-K/2`)
/// as fixed points, so the map is an exact involution and an isometry for
/// every sign-flipped weight.  Fields produced by the crate's generators
/// leave the Nyquist rows empty; only on those rows does the discrete
/// conjugate differ from the continuum one.
pub fn conjugate_field(field: &FrequencyField) -> FrequencyField {
    let g = field.geometry().clone();
    match &field.storage {
        Storage::Dense(v) => {
            let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
            for (flat, slot) in out.iter_mut().enumerate() {
                let site = g.site_at(flat);
                let src = g.negate_site(&site);
                *slot = v[g.flat_index(&src)].conj();
            }
            FrequencyField {
                geometry: g,
                storage: Storage::Dense(out),
            }
        }
        Storage::Sparse(m) => {
            let mut out = BTreeMap::new();
            for (site, &c) in m {
                out.insert(g.negate_site(site), c.conj());
            }
            FrequencyField {
                geometry: g,
                storage: Storage::Sparse(out),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random fields
// ---------------------------------------------------------------------------

/// Complex standard normal (unit second absolute moment).
pub(crate) fn complex_normal(rng: &mut ChaCha12Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / 2.0f64.sqrt()
}

/// Dense random field `g * envelope(site)` with iid complex standard
/// normal `g`, deterministic in the seed.  Nyquist rows are left zero so
/// conjugation and adjoint identities hold exactly on every draw.
pub fn gaussian_field(
    geometry: &LatticeGeometry,
    seed: u64,
    mut envelope: impl FnMut(&Site) -> f64,
) -> FrequencyField {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = vec![Complex64::new(0.0, 0.0); geometry.site_count()];
    for (flat, slot) in data.iter_mut().enumerate() {
        let site = geometry.site_at(flat);
        if !geometry.in_symmetric_band(&site) {
            continue;
        }
        let g = complex_normal(&mut rng);
        let e = envelope(&site);
        if e != 0.0 {
            *slot = g * e;
        }
    }
    FrequencyField {
        geometry: geometry.clone(),
        storage: Storage::Dense(data),
    }
}

// ---------------------------------------------------------------------------
// Free evolution
// ---------------------------------------------------------------------------

/// Mode amplitudes of the free group: slice `t` holds
/// `exp(sign * -i |xi|^2 t) * u0(xi)`, so with `Sign::Plus` the result is
/// the flow whose space-time transform concentrates where
/// `tau + |xi|^2 = 0`.
pub fn free_evolution_slices(u0: &SpatialSpectrum, sign: Sign) -> SliceSeries {
    let g = u0.geometry().clone();
    let k = g.tau_count();
    let mut data = vec![Complex64::new(0.0, 0.0); g.site_count()];
    for (spatial, &c) in u0.coeffs().iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let xi = u0.xi_of_flat(spatial);
        let om = g.xi_abs2(&xi) * sign.as_f64();
        for p in 0..k {
            let t = g.t_value(signed_index(p as i32, k as i32));
            let phase = Complex64::from_polar(1.0, -om * t);
            data[spatial * k + p] = c * phase;
        }
    }
    SliceSeries { geometry: g, data }
}

/// Space-time frequency field of the free evolution (time transform of
/// [`free_evolution_slices`]).
pub fn free_evolution(u0: &SpatialSpectrum, sign: Sign) -> FrequencyField {
    time_forward_transform(&free_evolution_slices(u0, sign))
}
