//! Local-in-time pseudospectral solver for the semilinear Schrodinger
//! equation `u_t = i Lap u + N(u, conj u)` by Picard iteration on the
//! Duhamel integral, plus probes for contraction, Sobolev persistence,
//! and data-to-solution stability.
//!
//! A trajectory is a time-indexed vector of spatial spectra on its own
//! uniform grid `t_j = j * dt`, `j = -S..S`; the lattice's tau axis plays
//! no role here except in the optional space-time diagnostic.  The time
//! integral is a cumulative trapezoid on the integrating-factor form, so
//! the free flow is reproduced exactly and each iterate is the literal
//! fixed-point map applied to the previous one.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::estimates::mix_seed;
use crate::lattice::{
    fft_axis, time_forward_transform, FrequencyField, LatticeGeometry, SliceSeries,
    SpatialSpectrum,
};
use crate::norms::{restricted_norm_proxy, CutoffKind, WeightSpec};
use crate::Result;

/// Pointwise nonlinearity `coefficient * u^plain * conj(u)^conjugated`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub plain: usize,
    pub conjugated: usize,
    pub coefficient: Complex64,
}

impl NonlinearitySpec {
    /// Total degree must be 2, 3, or 4.
    pub fn new(plain: usize, conjugated: usize, coefficient: Complex64) -> Result<NonlinearitySpec> {
        let degree = plain + conjugated;
        if !(2..=4).contains(&degree) {
            return Err(CoreError::InvalidInput(format!(
                "nonlinearity degree {degree} outside 2..=4"
            )));
        }
        Ok(NonlinearitySpec {
            plain,
            conjugated,
            coefficient,
        })
    }

    pub fn degree(&self) -> usize {
        self.plain + self.conjugated
    }

    /// Compact structure label, e.g. `u3`, `ub2`, `u2ub2`.
    pub fn label(&self) -> String {
        match (self.plain, self.conjugated) {
            (p, 0) => format!("u{p}"),
            (0, c) => format!("ub{c}"),
            (p, c) => format!("u{p}ub{c}"),
        }
    }
}

/// Random initial data with spectral envelope `<xi>^{-(s + n/2 + excess)}`:
/// lies in every Sobolev space below `s + excess`, at every truncation,
/// with independent complex-normal mode amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughDataSpec {
    pub s: f64,
    pub excess: f64,
    pub amplitude: f64,
    pub seed: u64,
}

/// Draw the rough data on a lattice.  Deterministic in the seed; the
/// spatial Nyquist rows stay empty so conjugation acts cleanly.
pub fn rough_data(geometry: &LatticeGeometry, spec: &RoughDataSpec) -> Result<SpatialSpectrum> {
    if !(spec.excess > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "rough data needs a positive excess, got {}",
            spec.excess
        )));
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(spec.seed);
    let normal = StandardNormal;
    let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Complex64 {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        Complex64::new(re, im) / 2.0f64.sqrt()
    };
    let decay = spec.s + geometry.dims() as f64 / 2.0 + spec.excess;
    let half = geometry.modes_per_axis() as i32 / 2;
    let mut out = SpatialSpectrum::zeros(geometry);
    for flat in 0..geometry.spatial_site_count() {
        let g = draw(&mut rng);
        let xi = out.xi_of_flat(flat);
        if xi.iter().take(geometry.dims()).any(|&k| k == -half) {
            continue;
        }
        let envelope = (1.0 + geometry.xi_abs2(&xi)).powf(-decay / 2.0);
        out.coeffs_mut()[flat] = spec.amplitude * envelope * g;
    }
    Ok(out)
}

/// Solve parameters: time interval `[-t_half, t_half]` with `time_steps`
/// subdivisions per side, iteration budget, and the Sobolev index the
/// residuals and traces are measured in.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub geometry: LatticeGeometry,
    pub t_half: f64,
    pub time_steps: usize,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub sobolev_index: f64,
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t_half > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "time half-width must be positive, got {}",
                self.t_half
            )));
        }
        if !(self.residual_tol > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "residual tolerance must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.time_steps == 0 || self.max_iters == 0 {
            return Err(CoreError::InvalidInput(
                "time_steps and max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Time-indexed spatial spectra on the uniform grid `t_j = j * dt`,
/// `j = -S..S`, slice `S` being `t = 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t_half: f64,
    slices: Vec<SpatialSpectrum>,
}

impl Trajectory {
    pub fn geometry(&self) -> &LatticeGeometry {
        self.slices[0].geometry()
    }

    pub fn t_half(&self) -> f64 {
        self.t_half
    }

    /// Subdivisions per side; the slice count is `2 * half_steps + 1`.
    pub fn half_steps(&self) -> usize {
        (self.slices.len() - 1) / 2
    }

    pub fn dt(&self) -> f64 {
        self.t_half / self.half_steps() as f64
    }

    /// Time of storage offset `a` (0 is `-t_half`).
    pub fn time_of(&self, a: usize) -> f64 {
        (a as f64 - self.half_steps() as f64) * self.dt()
    }

    pub fn slices(&self) -> &[SpatialSpectrum] {
        &self.slices
    }

    /// Slice at signed time index `j` in `-S..=S`.
    pub fn slice(&self, j: i32) -> &SpatialSpectrum {
        let s = self.half_steps() as i32;
        assert!(j.abs() <= s, "time index {j} outside -{s}..={s}");
        &self.slices[(j + s) as usize]
    }

    /// Largest per-slice Sobolev distance to another trajectory.
    pub fn hs_distance(&self, other: &Trajectory, s: f64) -> f64 {
        assert_eq!(self.slices.len(), other.slices.len());
        let mut worst = 0.0f64;
        for (a, b) in self.slices.iter().zip(&other.slices) {
            let mut diff = a.clone();
            for (v, w) in diff.coeffs_mut().iter_mut().zip(b.coeffs()) {
                *v -= w;
            }
            worst = worst.max(diff.sobolev_norm(s));
        }
        worst
    }

    /// Per-slice Sobolev norms, in time order.
    pub fn hs_trace(&self, s: f64) -> Vec<f64> {
        self.slices.iter().map(|sp| sp.sobolev_norm(s)).collect()
    }
}

/// `|xi|^2` for every flat spatial index.
fn xi2_table(geometry: &LatticeGeometry) -> Vec<f64> {
    let probe = SpatialSpectrum::zeros(geometry);
    (0..geometry.spatial_site_count())
        .map(|flat| geometry.xi_abs2(&probe.xi_of_flat(flat)))
        .collect()
}

/// Free evolution of `u0` on the config's time grid: each mode rotates by
/// `exp(-i t |xi|^2)`.
pub fn free_trajectory(u0: &SpatialSpectrum, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    u0.geometry().check_same(&cfg.geometry)?;
    let s = cfg.time_steps;
    let dt = cfg.t_half / s as f64;
    let xi2 = xi2_table(&cfg.geometry);
    let slices = (0..2 * s + 1)
        .map(|a| {
            let t = (a as f64 - s as f64) * dt;
            let mut slice = u0.clone();
            for (v, &q) in slice.coeffs_mut().iter_mut().zip(&xi2) {
                *v *= Complex64::new(0.0, -t * q).exp();
            }
            slice
        })
        .collect();
    Ok(Trajectory {
        t_half: cfg.t_half,
        slices,
    })
}

/// Smallest even padded extent avoiding aliasing of a degree-`m` product
/// back into the retained band.
fn padded_extent(modes: usize, degree: usize) -> usize {
    let p = ((degree + 1) * modes).div_ceil(2);
    p + p % 2
}

/// Evaluate the nonlinearity of one slice in physical space on a padded
/// grid, then project back to the retained band.  Exact for band-limited
/// input: the product is a trigonometric polynomial and the padding keeps
/// its aliases out of the band.
fn nonlinear_slice(slice: &SpatialSpectrum, spec: &NonlinearitySpec) -> SpatialSpectrum {
    let g = slice.geometry();
    let n = g.dims();
    let modes = g.modes_per_axis();
    let pad = padded_extent(modes, spec.degree());
    let extents = vec![pad; n];
    let total: usize = extents.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let embed = |xi: &[i32; 3]| -> usize {
        let mut idx = 0usize;
        for &k in xi.iter().take(n) {
            idx = idx * pad + k.rem_euclid(pad as i32) as usize;
        }
        idx
    };
    for (flat, &c) in slice.coeffs().iter().enumerate() {
        data[embed(&slice.xi_of_flat(flat))] = c;
    }
    for axis in 0..n {
        fft_axis(&mut data, &extents, axis, false);
    }
    for v in &mut data {
        let u = *v;
        let mut p = spec.coefficient;
        for _ in 0..spec.plain {
            p *= u;
        }
        for _ in 0..spec.conjugated {
            p *= u.conj();
        }
        *v = p;
    }
    for axis in 0..n {
        fft_axis(&mut data, &extents, axis, true);
    }
    let scale = 1.0 / total as f64;
    let mut out = SpatialSpectrum::zeros(g);
    for flat in 0..g.spatial_site_count() {
        let xi = out.xi_of_flat(flat);
        out.coeffs_mut()[flat] = data[embed(&xi)] * scale;
    }
    out
}

/// One fixed-point application: evaluate the nonlinearity along
/// `u_curr`, integrate it on the integrating-factor side by cumulative
/// trapezoid from `t = 0` outward, and add the free evolution of `u0`.
pub fn picard_step(
    u_curr: &Trajectory,
    u0: &SpatialSpectrum,
    spec: &NonlinearitySpec,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    u0.geometry().check_same(&cfg.geometry)?;
    u_curr.geometry().check_same(&cfg.geometry)?;
    if u_curr.half_steps() != cfg.time_steps {
        return Err(CoreError::InvalidInput(format!(
            "trajectory has {} steps per side, config wants {}",
            u_curr.half_steps(),
            cfg.time_steps
        )));
    }
    if spec.coefficient == Complex64::new(0.0, 0.0) {
        return free_trajectory(u0, cfg);
    }
    let s = cfg.time_steps;
    let dt = cfg.t_half / s as f64;
    let xi2 = xi2_table(&cfg.geometry);
    let spatial = cfg.geometry.spatial_site_count();
    // integrand on the integrating-factor side: exp(i t |xi|^2) N(u(t))
    let integrand: Vec<Vec<Complex64>> = u_curr
        .slices
        .par_iter()
        .enumerate()
        .map(|(a, slice)| {
            let t = (a as f64 - s as f64) * dt;
            let nl = nonlinear_slice(slice, spec);
            let mut row = nl.coeffs().to_vec();
            for (v, &q) in row.iter_mut().zip(&xi2) {
                *v *= Complex64::new(0.0, t * q).exp();
            }
            row
        })
        .collect();
    // cumulative trapezoid away from the center slice
    let center = s;
    let zero_row = vec![Complex64::new(0.0, 0.0); spatial];
    let mut cumulative = vec![zero_row.clone(); 2 * s + 1];
    let mut acc = zero_row.clone();
    for a in center + 1..2 * s + 1 {
        for k in 0..spatial {
            acc[k] += (integrand[a - 1][k] + integrand[a][k]) * (dt / 2.0);
        }
        cumulative[a] = acc.clone();
    }
    let mut acc = zero_row;
    for a in (0..center).rev() {
        for k in 0..spatial {
            acc[k] -= (integrand[a][k] + integrand[a + 1][k]) * (dt / 2.0);
        }
        cumulative[a] = acc.clone();
    }
    // undo the integrating factor and add the free part
    let slices = cumulative
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            let t = (a as f64 - s as f64) * dt;
            let mut slice = SpatialSpectrum::zeros(&cfg.geometry);
            for (k, (v, &q)) in row.iter().zip(&xi2).enumerate() {
                let phase = Complex64::new(0.0, -t * q).exp();
                slice.coeffs_mut()[k] = phase * (u0.coeffs()[k] + v);
            }
            slice
        })
        .collect();
    Ok(Trajectory {
        t_half: cfg.t_half,
        slices,
    })
}

/// Outcome of a Picard solve.  Divergence is data, not an error: a run
/// that stops converging is returned with its diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    /// Largest per-slice Sobolev distance between successive iterates.
    pub residuals: Vec<f64>,
    /// Per-slice Sobolev norms of the final trajectory, in time order.
    pub hs_trace: Vec<f64>,
    pub converged: bool,
    /// Index the residuals and trace are measured in.
    pub sobolev_index: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// Largest ratio of successive residuals; 0 when fewer than two.
    pub fn contraction_ratio(&self) -> f64 {
        let mut worst = 0.0f64;
        for pair in self.residuals.windows(2) {
            if pair[0] == 0.0 {
                continue;
            }
            worst = worst.max(pair[1] / pair[0]);
        }
        worst
    }
}

/// Iterate the fixed-point map from the free trajectory until the
/// residual drops below tolerance, the iteration budget runs out, or the
/// residual grows three times in a row (divergence).
pub fn solve_local(
    u0: &SpatialSpectrum,
    spec: &NonlinearitySpec,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let mut current = free_trajectory(u0, cfg)?;
    let mut residuals = Vec::new();
    let mut growth_streak = 0usize;
    for _ in 0..cfg.max_iters {
        let next = picard_step(&current, u0, spec, cfg)?;
        let r = next.hs_distance(&current, cfg.sobolev_index);
        current = next;
        let grew = match residuals.last() {
            Some(&last) => !(r <= last),
            None => false,
        };
        let finite = r.is_finite();
        residuals.push(r);
        if !finite {
            break;
        }
        if r < cfg.residual_tol {
            break;
        }
        growth_streak = if grew { growth_streak + 1 } else { 0 };
        if growth_streak >= 3 {
            break;
        }
    }
    let converged = residuals
        .last()
        .map(|&r| r < cfg.residual_tol)
        .unwrap_or(false);
    let hs_trace = current.hs_trace(cfg.sobolev_index);
    Ok(SolveResult {
        trajectory: current,
        residuals,
        hs_trace,
        converged,
        sobolev_index: cfg.sobolev_index,
    })
}

/// Continuity and growth proxies of a solved trajectory:
/// `max_jump` is the largest adjacent-slice Sobolev distance and
/// `max_growth` the largest trace value over the initial norm.  Zero
/// data reports growth 1 by convention (nothing can grow).
pub fn persistence_probe(result: &SolveResult) -> (f64, f64) {
    let s = result.sobolev_index;
    let slices = result.trajectory.slices();
    let mut max_jump = 0.0f64;
    for pair in slices.windows(2) {
        let mut diff = pair[1].clone();
        for (v, w) in diff.coeffs_mut().iter_mut().zip(pair[0].coeffs()) {
            *v -= w;
        }
        max_jump = max_jump.max(diff.sobolev_norm(s));
    }
    let base = slices[result.trajectory.half_steps()].sobolev_norm(s);
    let peak = result.hs_trace.iter().cloned().fold(0.0f64, f64::max);
    let max_growth = if base == 0.0 { 1.0 } else { peak / base };
    (max_jump, max_growth)
}

/// Data-to-solution stability quotients at perturbation sizes `delta`
/// and `delta / 2`, maximized over random perturbation directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    pub quotient: f64,
    pub quotient_half: f64,
}

/// Probe the data-to-solution map: perturb `u0` by `delta` (relative to
/// its own Sobolev norm) in `trials` random directions, solve each, and
/// report the worst trajectory-distance over data-distance quotient,
/// then the same at half the size.  Any non-converged solve aborts.
pub fn lipschitz_probe(
    u0: &SpatialSpectrum,
    delta: f64,
    spec: &NonlinearitySpec,
    cfg: &SolveConfig,
    trials: usize,
    seed: u64,
) -> Result<LipschitzProbe> {
    if !(delta > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "perturbation size must be positive, got {delta}"
        )));
    }
    if trials == 0 {
        return Err(CoreError::InvalidInput("lipschitz probe needs trials >= 1".into()));
    }
    cfg.validate()?;
    let base = solve_local(u0, spec, cfg)?;
    if !base.converged {
        return Err(CoreError::ProbeAborted(format!(
            "base solve did not converge (final residual {})",
            base.final_residual()
        )));
    }
    let base_norm = u0.sobolev_norm(cfg.sobolev_index);
    let scale = if base_norm > 0.0 { base_norm } else { 1.0 };
    let run = |size: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for trial in 0..trials {
            let direction = rough_data(
                &cfg.geometry,
                &RoughDataSpec {
                    s: cfg.sobolev_index,
                    excess: 0.5,
                    amplitude: 1.0,
                    seed: mix_seed(seed, trial as u64),
                },
            )?;
            let dir_norm = direction.sobolev_norm(cfg.sobolev_index);
            let mut perturbed = u0.clone();
            for (v, w) in perturbed.coeffs_mut().iter_mut().zip(direction.coeffs()) {
                *v += w * (size * scale / dir_norm);
            }
            let mut diff = perturbed.clone();
            for (v, w) in diff.coeffs_mut().iter_mut().zip(u0.coeffs()) {
                *v -= w;
            }
            let denom = diff.sobolev_norm(cfg.sobolev_index);
            if denom == 0.0 {
                return Err(CoreError::InvalidInput(
                    "perturbed data coincides with the base data".into(),
                ));
            }
            let solved = solve_local(&perturbed, spec, cfg)?;
            if !solved.converged {
                return Err(CoreError::ProbeAborted(format!(
                    "perturbed solve (trial {trial}, size {size}) did not converge"
                )));
            }
            let dist = solved
                .trajectory
                .hs_distance(&base.trajectory, cfg.sobolev_index);
            worst = worst.max(dist / denom);
        }
        Ok(worst)
    };
    Ok(LipschitzProbe {
        quotient: run(delta)?,
        quotient_half: run(delta / 2.0)?,
    })
}

/// Halve the time half-width until the solve converges with geometric
/// residual decay (ratio at most 1/2).  Returns the found half-width and
/// its result.
pub fn halve_until_contracting(
    u0: &SpatialSpectrum,
    spec: &NonlinearitySpec,
    cfg: &SolveConfig,
    max_halvings: usize,
) -> Result<(f64, SolveResult)> {
    let mut t = cfg.t_half;
    for _ in 0..=max_halvings {
        let mut attempt = cfg.clone();
        attempt.t_half = t;
        let result = solve_local(u0, spec, &attempt)?;
        if result.converged && result.contraction_ratio() <= 0.5 {
            return Ok((t, result));
        }
        t /= 2.0;
    }
    Err(CoreError::ProbeAborted(format!(
        "no contracting half-width found down to {t} after {max_halvings} halvings"
    )))
}

/// Space-time spectrum of a trajectory on a matching diagnostic lattice
/// (same spatial axes, tau axis tuned so its dual time grid is the
/// trajectory's own).  The slice at `+t_half` is dropped: the periodic
/// grid holds `2 * half_steps` slices and the diagnostic cutoff vanishes
/// there anyway.
pub fn trajectory_spectrum(trajectory: &Trajectory) -> Result<FrequencyField> {
    let g = trajectory.geometry();
    let s = trajectory.half_steps();
    let dt = trajectory.dt();
    let tau_count = 2 * s;
    let tau_spacing = 2.0 * std::f64::consts::PI / (tau_count as f64 * dt);
    let diag = LatticeGeometry::new(
        g.domain(),
        g.modes_per_axis(),
        g.xi_spacing(),
        tau_count,
        tau_spacing,
    )?;
    let spatial = diag.spatial_site_count();
    let mut data = vec![Complex64::new(0.0, 0.0); diag.site_count()];
    for j in -(s as i32)..s as i32 {
        let slice = trajectory.slice(j);
        let wrapped = j.rem_euclid(tau_count as i32) as usize;
        for flat in 0..spatial {
            data[flat * tau_count + wrapped] = slice.coeffs()[flat];
        }
    }
    let series = SliceSeries::from_data(&diag, data);
    Ok(time_forward_transform(&series))
}

/// Weighted space-time norm of the smoothly time-cut trajectory: the
/// restriction-norm proxy of [`trajectory_spectrum`] with the bump of
/// half-width `t_half`.
pub fn xsb_diagnostic(trajectory: &Trajectory, weight: &WeightSpec) -> Result<f64> {
    let field = trajectory_spectrum(trajectory)?;
    restricted_norm_proxy(&field, weight, CutoffKind::SmoothBump, trajectory.t_half())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainKind;
    use crate::lattice::Sign;
    use approx::assert_relative_eq;

    fn torus(modes: usize) -> LatticeGeometry {
        let max_xi2 = (modes as f64 / 2.0).powi(2);
        let tau_spacing = 2.5;
        let tau_count = 2 * ((max_xi2 + 1.0) / tau_spacing).ceil() as usize + 2;
        LatticeGeometry::new(DomainKind::Torus1d, modes, 1.0, tau_count, tau_spacing).unwrap()
    }

    fn config(geometry: &LatticeGeometry, t_half: f64, steps: usize) -> SolveConfig {
        SolveConfig {
            geometry: geometry.clone(),
            t_half,
            time_steps: steps,
            max_iters: 40,
            residual_tol: 1e-10,
            sobolev_index: 0.0,
        }
    }

    fn one_mode(geometry: &LatticeGeometry, k: i32, a: Complex64) -> SpatialSpectrum {
        let mut u0 = SpatialSpectrum::zeros(geometry);
        u0.set_mode([k, 0, 0], a);
        u0
    }

    #[test]
    fn zero_nonlinearity_reproduces_the_free_flow_exactly() {
        let g = torus(16);
        let cfg = config(&g, 0.5, 32);
        let u0 = rough_data(
            &g,
            &RoughDataSpec {
                s: 0.5,
                excess: 0.5,
                amplitude: 1.0,
                seed: 7,
            },
        )
        .unwrap();
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(0.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations(), 1);
        let free = free_trajectory(&u0, &cfg).unwrap();
        assert!(result.trajectory.hs_distance(&free, 0.0) < 1e-14);
        let first = result.hs_trace[0];
        for v in &result.hs_trace {
            assert_relative_eq!(*v, first, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_flow_is_linear_in_the_data() {
        let g = torus(16);
        let cfg = config(&g, 0.5, 16);
        let u0 = one_mode(&g, 3, Complex64::new(0.4, -0.2));
        let lambda = Complex64::new(2.0, -1.0);
        let mut scaled = u0.clone();
        for v in scaled.coeffs_mut() {
            *v *= lambda;
        }
        let a = free_trajectory(&u0, &cfg).unwrap();
        let b = free_trajectory(&scaled, &cfg).unwrap();
        for (sa, sb) in a.slices().iter().zip(b.slices()) {
            for (x, y) in sa.coeffs().iter().zip(sb.coeffs()) {
                assert!((x * lambda - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn one_mode_first_correction_matches_the_closed_form() {
        // data a at mode k, nonlinearity conj(u)^2: the first iterate's
        // correction lives at mode -2k with coefficient
        //   conj(a)^2 (exp(2 i k^2 t) - exp(-4 i k^2 t)) / (6 i k^2).
        let g = torus(8);
        let k = 1i32;
        let a = Complex64::new(0.8, 0.3);
        let cfg = config(&g, 0.1, 1024);
        let u0 = one_mode(&g, k, a);
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let free = free_trajectory(&u0, &cfg).unwrap();
        let next = picard_step(&free, &u0, &spec, &cfg).unwrap();
        let kk = (k * k) as f64;
        for j in [-1024i32, -600, -154, 0, 246, 1024] {
            let t = j as f64 * cfg.t_half / 1024.0;
            let slice = next.slice(j);
            let expected = a.conj().powu(2)
                * ((Complex64::new(0.0, 2.0 * kk * t).exp()
                    - Complex64::new(0.0, -4.0 * kk * t).exp())
                    / Complex64::new(0.0, 6.0 * kk));
            let got = slice.get_mode(&[-2 * k, 0, 0]);
            assert!(
                (got - expected).norm() < 1e-8,
                "t={t}: got {got}, expected {expected}"
            );
            let free_mode = slice.get_mode(&[k, 0, 0]);
            let free_expected = a * Complex64::new(0.0, -kk * t).exp();
            assert!((free_mode - free_expected).norm() < 1e-12);
            for m in -4..4 {
                if m != k && m != -2 * k {
                    assert!(slice.get_mode(&[m, 0, 0]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn quadratic_correction_scales_with_amplitude_squared() {
        let g = torus(8);
        let cfg = config(&g, 0.25, 64);
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let correction_norm = |amp: f64| {
            let u0 = one_mode(&g, 1, Complex64::new(amp, 0.0));
            let free = free_trajectory(&u0, &cfg).unwrap();
            let next = picard_step(&free, &u0, &spec, &cfg).unwrap();
            next.hs_distance(&free, 0.0)
        };
        let lo = correction_norm(0.01);
        let hi = correction_norm(0.1);
        let slope = (hi / lo).ln() / 10.0f64.ln();
        assert!(
            (slope - 2.0).abs() < 0.05,
            "amplitude exponent {slope} is not 2"
        );
    }

    #[test]
    fn small_interval_solves_contract_geometrically() {
        let g = torus(16);
        let cfg = config(&g, 0.25, 64);
        let u0 = one_mode(&g, 1, Complex64::new(0.5, 0.2));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(result.converged, "residuals {:?}", result.residuals);
        assert!(
            result.contraction_ratio() <= 0.5,
            "ratio {} too large",
            result.contraction_ratio()
        );
    }

    #[test]
    fn imaginary_coupling_mirrors_time_reversal() {
        // purely imaginary coefficient and Hermitian-symmetric data:
        // u(-t) is the spatial conjugate of u(t), i.e.
        // spectrum(-t)(xi) = conj(spectrum(t)(-xi)).
        let g = torus(16);
        let cfg = config(&g, 0.25, 64);
        let mut u0 = SpatialSpectrum::zeros(&g);
        u0.set_mode([1, 0, 0], Complex64::new(0.4, 0.0));
        u0.set_mode([-1, 0, 0], Complex64::new(0.4, 0.0));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(0.0, 1.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(result.converged);
        for j in 0..=64i32 {
            let fwd = result.trajectory.slice(j);
            let bwd = result.trajectory.slice(-j);
            for m in -8..8 {
                let lhs = bwd.get_mode(&[m, 0, 0]);
                let rhs = fwd.get_mode(&[-m, 0, 0]).conj();
                assert!(
                    (lhs - rhs).norm() < 1e-8,
                    "j={j} m={m}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn converged_trajectories_are_fixed_points() {
        let g = torus(16);
        let cfg = config(&g, 0.25, 64);
        let u0 = one_mode(&g, 1, Complex64::new(0.5, 0.2));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(result.converged);
        let moved = picard_step(&result.trajectory, &u0, &spec, &cfg).unwrap();
        assert!(moved.hs_distance(&result.trajectory, cfg.sobolev_index) < cfg.residual_tol);
    }

    #[test]
    fn doubling_the_band_barely_moves_a_smooth_solution() {
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let solve_with = |modes: usize| {
            let g = torus(modes);
            let cfg = config(&g, 0.2, 64);
            let u0 = one_mode(&g, 1, Complex64::new(0.15, 0.1));
            solve_local(&u0, &spec, &cfg).unwrap()
        };
        let coarse = solve_with(8);
        let fine = solve_with(16);
        let mut worst = 0.0f64;
        for (a, b) in coarse
            .trajectory
            .slices()
            .iter()
            .zip(fine.trajectory.slices())
        {
            let mut acc = 0.0;
            for m in -4i32..4 {
                let d = a.get_mode(&[m, 0, 0]) - b.get_mode(&[m, 0, 0]);
                let w = (1.0 + (m * m) as f64).powf(0.5);
                acc += w * d.norm_sqr();
            }
            worst = worst.max(acc.sqrt());
        }
        assert!(worst < 1e-6, "band doubling moved the solution by {worst}");
    }

    #[test]
    fn divergence_is_reported_with_diagnostics_not_thrown() {
        let g = torus(16);
        let mut cfg = config(&g, 0.5, 32);
        cfg.max_iters = 12;
        let u0 = one_mode(&g, 1, Complex64::new(40.0, 0.0));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(!result.converged);
        assert!(result.residuals.len() <= cfg.max_iters);
        assert!(result.residuals.len() >= 2);
    }

    #[test]
    fn persistence_probe_conventions() {
        let g = torus(16);
        let cfg = config(&g, 0.5, 32);
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let zero = SpatialSpectrum::zeros(&g);
        let (jump, growth) = persistence_probe(&solve_local(&zero, &spec, &cfg).unwrap());
        assert_eq!(jump, 0.0);
        assert_eq!(growth, 1.0);
        let u0 = one_mode(&g, 2, Complex64::new(0.7, 0.1));
        let free_spec = NonlinearitySpec::new(0, 2, Complex64::new(0.0, 0.0)).unwrap();
        let (_, growth) = persistence_probe(&solve_local(&u0, &free_spec, &cfg).unwrap());
        assert_relative_eq!(growth, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn free_flow_lipschitz_quotient_is_one() {
        let g = torus(16);
        let cfg = config(&g, 0.5, 32);
        let u0 = one_mode(&g, 1, Complex64::new(0.5, 0.0));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(0.0, 0.0)).unwrap();
        let probe = lipschitz_probe(&u0, 0.1, &spec, &cfg, 3, 11).unwrap();
        assert_relative_eq!(probe.quotient, 1.0, max_relative = 1e-12);
        assert_relative_eq!(probe.quotient_half, 1.0, max_relative = 1e-12);
        assert!(matches!(
            lipschitz_probe(&u0, 0.0, &spec, &cfg, 3, 11),
            Err(CoreError::InvalidInput(_))
        ));
    }

    #[test]
    fn rough_data_is_seeded_and_nyquist_free() {
        let g = torus(16);
        let spec = RoughDataSpec {
            s: -0.3,
            excess: 0.5,
            amplitude: 2.0,
            seed: 99,
        };
        let a = rough_data(&g, &spec).unwrap();
        let b = rough_data(&g, &spec).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert!(a.sobolev_norm(0.0) > 0.0);
        assert_eq!(a.get_mode(&[-8, 0, 0]), Complex64::new(0.0, 0.0));
        let c = rough_data(
            &g,
            &RoughDataSpec {
                seed: 100,
                ..spec
            },
        )
        .unwrap();
        assert_ne!(a.coeffs(), c.coeffs());
        assert!(matches!(
            rough_data(&g, &RoughDataSpec { excess: 0.0, ..spec }),
            Err(CoreError::InvalidInput(_))
        ));
    }

    #[test]
    fn halving_finds_a_contracting_interval() {
        let g = torus(16);
        let mut cfg = config(&g, 4.0, 64);
        cfg.max_iters = 15;
        let u0 = one_mode(&g, 1, Complex64::new(0.8, 0.0));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let (t, result) = halve_until_contracting(&u0, &spec, &cfg, 8).unwrap();
        assert!(t < 4.0);
        assert!(result.converged);
        assert!(result.contraction_ratio() <= 0.5);
    }

    #[test]
    fn rough_cubic_solve_converges_below_zero_regularity() {
        let g = torus(16);
        let mut cfg = config(&g, 0.1, 32);
        cfg.sobolev_index = -0.3;
        let u0 = rough_data(
            &g,
            &RoughDataSpec {
                s: -0.3,
                excess: 0.5,
                amplitude: 0.1,
                seed: 5,
            },
        )
        .unwrap();
        let spec = NonlinearitySpec::new(0, 3, Complex64::new(1.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        assert!(result.converged, "residuals {:?}", result.residuals);
    }

    #[test]
    fn spacetime_diagnostic_is_finite_and_seed_stable() {
        let g = torus(16);
        let cfg = config(&g, 0.2, 64);
        let u0 = one_mode(&g, 1, Complex64::new(0.5, 0.2));
        let spec = NonlinearitySpec::new(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let result = solve_local(&u0, &spec, &cfg).unwrap();
        let weight = WeightSpec::new(0.0, 0.3, Sign::Plus);
        let a = xsb_diagnostic(&result.trajectory, &weight).unwrap();
        let b = xsb_diagnostic(&result.trajectory, &weight).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn nonlinearity_spec_validates_degree_and_labels() {
        assert!(NonlinearitySpec::new(1, 0, Complex64::new(1.0, 0.0)).is_err());
        assert!(NonlinearitySpec::new(3, 2, Complex64::new(1.0, 0.0)).is_err());
        let spec = NonlinearitySpec::new(2, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(spec.label(), "u2ub2");
        assert_eq!(
            NonlinearitySpec::new(0, 3, Complex64::new(1.0, 0.0))
                .unwrap()
                .label(),
            "ub3"
        );
        assert_eq!(
            NonlinearitySpec::new(3, 0, Complex64::new(1.0, 0.0))
                .unwrap()
                .label(),
            "u3"
        );
    }
}
