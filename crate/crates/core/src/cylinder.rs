//! Zonal functions on the cylinder `C = R × S^{N-1}`, sampled on a periodic `t`-grid.
//!
//! A function is stored as profiles `φ_i(t_k)` against orthonormal zonal
//! harmonics `Y_i`, so `v(t, θ) = Σ_i φ_i(t) Y_i(θ)` and
//! `‖v‖²_{H¹} = Σ_i ∫ φ_i'² + τ_i φ_i² dt`. The `H¹` form is evaluated
//! spectrally; `L^{p+1}` uses the trapezoid rule in `t` and Gauss-Legendre in
//! the polar angle.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremals::{psi_norms, ExtremalProfile};
use crate::params::CknParams;
use crate::specfun::{polar_quadrature, sphere_area, zonal_harmonic};
use crate::spectrum::Eigenfunction;

/// Periodic grid `t_k = -T + k h`, `h = 2T/M`, `k = 0..M`, plus the polar rule size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    pub half_width: f64,
    pub nodes: usize,
    pub angle_nodes: usize,
}

impl CylinderGrid {
    pub fn new(half_width: f64, nodes: usize, angle_nodes: usize) -> Result<Self> {
        if !(half_width > 0.0) || nodes < 16 || !nodes.is_multiple_of(2) || angle_nodes < 2 {
            return Err(Error::Config(format!(
                "cylinder grid needs T > 0, an even node count >= 16 and >= 2 angle nodes \
                 (T = {half_width}, M = {nodes}, angles = {angle_nodes})"
            )));
        }
        Ok(CylinderGrid { half_width, nodes, angle_nodes })
    }

    /// `T = max(60/γ, 40/(a_c-a))`, at least 4096 nodes with `γh <= 0.03`, 64 angle nodes.
    pub fn default_for(params: &CknParams) -> Self {
        Self::widened(params, 0.0)
    }

    /// Default grid with `extra` added to the half-width at unchanged resolution.
    pub fn widened(params: &CknParams, extra: f64) -> Self {
        let t = (60.0 / params.gamma).max(40.0 / params.delta()) + extra.abs();
        let needed = (2.0 * t * params.gamma / 0.03).ceil() as usize;
        let nodes = needed.max(4096).next_multiple_of(2);
        CylinderGrid { half_width: t, nodes, angle_nodes: 64 }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.nodes as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes).map(|k| self.t(k)).collect()
    }
}

/// A zonal function: profile per harmonic degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    pub params: CknParams,
    pub grid: CylinderGrid,
    pub modes: BTreeMap<u32, Vec<f64>>,
}

impl CylinderFunction {
    pub fn mode(&self, degree: u32) -> Option<&[f64]> {
        self.modes.get(&degree).map(Vec::as_slice)
    }

    pub fn with_mode(mut self, degree: u32, profile: Vec<f64>) -> Result<Self> {
        if profile.len() != self.grid.nodes {
            return Err(Error::GridMismatch(format!(
                "profile has {} samples, grid has {}",
                profile.len(),
                self.grid.nodes
            )));
        }
        self.modes.insert(degree, profile);
        Ok(self)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.modes.values_mut().for_each(|v| v.iter_mut().for_each(|x| *x *= c));
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.params != other.params {
            return Err(Error::GridMismatch("functions live on different grids or parameter points".into()));
        }
        Ok(())
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (deg, prof) in &other.modes {
            let slot = out.modes.entry(*deg).or_insert_with(|| vec![0.0; prof.len()]);
            slot.iter_mut().zip(prof).for_each(|(a, b)| *a += c * b);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn is_mode0_only(&self) -> bool {
        self.modes.iter().all(|(d, v)| *d == 0 || v.iter().all(|x| *x == 0.0))
    }

    /// Coordinate dot product over shared modes.
    pub fn euclid_dot(&self, other: &Self) -> f64 {
        self.modes
            .iter()
            .filter_map(|(d, a)| other.modes.get(d).map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()))
            .sum()
    }
}

/// Projection of `v` onto the manifold `{c Ψ_s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldProjection {
    pub shift: f64,
    pub scalar: f64,
    /// `⟨v, Ψ_s^p⟩_{L²}` at the optimal shift.
    pub overlap: f64,
    pub distance_sq: f64,
    pub norm_sq: f64,
    /// The scan maximum sat on the edge of the search window.
    pub edge: bool,
}

/// Discretization of `H¹(C)` on a fixed grid and parameter point.
pub struct CylinderSpace {
    params: CknParams,
    grid: CylinderGrid,
    profile: ExtremalProfile,
    area: f64,
    psi_lp1_pow: f64,
    c_inv: f64,
    thetas: Vec<f64>,
    angle_weights: Vec<f64>,
    omega_sq: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    // Ψ^p sampled at wrapped offsets j h, j in [-M/2, M/2), and its spectrum.
    psi_pow_spectrum: Vec<Complex64>,
}

impl std::fmt::Debug for CylinderSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderSpace").field("params", &self.params).field("grid", &self.grid).finish()
    }
}

impl CylinderSpace {
    pub fn new(params: &CknParams, grid: CylinderGrid) -> Result<Self> {
        let grid = CylinderGrid::new(grid.half_width, grid.nodes, grid.angle_nodes)?;
        let m = grid.nodes;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let h = grid.spacing();
        let omega_sq = (0..m)
            .map(|k| {
                let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                let w = 2.0 * PI * kk / (m as f64 * h);
                w * w
            })
            .collect();
        let profile = ExtremalProfile::new(params);
        let area = sphere_area(params.n);
        let (thetas, angle_weights) = polar_quadrature(params.n, grid.angle_nodes);
        let root = area.sqrt();
        let mut g: Vec<Complex64> = (0..m)
            .map(|j| {
                let jj = if j < m / 2 { j as f64 } else { j as f64 - m as f64 };
                Complex64::new(root * profile.psi_pow(jj * h, params.p), 0.0)
            })
            .collect();
        fft.process(&mut g);
        let norms = psi_norms(params);
        Ok(CylinderSpace {
            params: *params,
            grid,
            profile,
            area,
            psi_lp1_pow: norms.lp1_pow,
            c_inv: norms.lp1_pow.powf((params.p - 1.0) / (params.p + 1.0)),
            thetas,
            angle_weights,
            omega_sq,
            fft,
            ifft,
            psi_pow_spectrum: g,
        })
    }

    pub fn default_for(params: &CknParams) -> Self {
        Self::new(params, CylinderGrid::default_for(params)).expect("default grid is valid")
    }

    pub fn params(&self) -> &CknParams {
        &self.params
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn profile(&self) -> &ExtremalProfile {
        &self.profile
    }

    pub fn sphere_area(&self) -> f64 {
        self.area
    }

    /// `‖Ψ‖^{p+1}_{p+1} = ‖Ψ‖²_{H¹}`, closed form.
    pub fn psi_lp1_pow(&self) -> f64 {
        self.psi_lp1_pow
    }

    /// `C^{-1} = ‖Ψ‖^{p-1}_{p+1}`.
    pub fn c_inv(&self) -> f64 {
        self.c_inv
    }

    fn check(&self, v: &CylinderFunction) -> Result<()> {
        if v.grid != self.grid || v.params != self.params {
            return Err(Error::GridMismatch("function does not belong to this cylinder space".into()));
        }
        Ok(())
    }

    pub fn zero(&self) -> CylinderFunction {
        CylinderFunction { params: self.params, grid: self.grid, modes: BTreeMap::new() }
    }

    /// Degree-`i` function with profile `f(t)` against the orthonormal harmonic.
    pub fn from_profile<F: Fn(f64) -> f64>(&self, degree: u32, f: F) -> CylinderFunction {
        let prof = (0..self.grid.nodes).map(|k| f(self.grid.t(k))).collect();
        let mut v = self.zero();
        v.modes.insert(degree, prof);
        v
    }

    /// Radial function `f(t)`, constant on the sphere.
    pub fn radial<F: Fn(f64) -> f64>(&self, f: F) -> CylinderFunction {
        let root = self.area.sqrt();
        self.from_profile(0, |t| root * f(t))
    }

    /// `f(t) x_N`.
    pub fn degree_one<F: Fn(f64) -> f64>(&self, f: F) -> CylinderFunction {
        let c = (self.area / f64::from(self.params.n)).sqrt();
        self.from_profile(1, |t| c * f(t))
    }

    pub fn psi(&self) -> CylinderFunction {
        self.psi_shifted(0.0)
    }

    /// `Ψ_s = Ψ(· - s)`.
    pub fn psi_shifted(&self, s: f64) -> CylinderFunction {
        let prof = self.profile;
        self.radial(move |t| prof.psi(t - s))
    }

    pub fn psi_prime(&self) -> CylinderFunction {
        let prof = self.profile;
        self.radial(move |t| prof.psi_prime(t))
    }

    pub fn rho_02(&self) -> CylinderFunction {
        let f = Eigenfunction::new(&self.params, 0, 2);
        self.radial(|t| f.value(t))
    }

    /// `ρ_{1,0} = cosh(γt)^{-√τ_1/γ} x_N`.
    pub fn rho_10(&self) -> CylinderFunction {
        let f = Eigenfunction::new(&self.params, 1, 0);
        self.degree_one(|t| f.value(t))
    }

    fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.ifft.process(&mut buf);
        let m = self.grid.nodes as f64;
        buf.iter().map(|c| c.re / m).collect()
    }

    /// `K φ = F^{-1}[(ω² + τ_i) F φ]`, so `‖φ‖²_{H¹} = h φ·Kφ`.
    pub fn apply_stiffness(&self, degree: u32, x: &[f64]) -> Vec<f64> {
        let tau = self.params.tau(degree);
        let mut s = self.spectrum(x);
        s.iter_mut().zip(&self.omega_sq).for_each(|(c, w)| *c *= w + tau);
        self.inverse_real(s)
    }

    /// `K^{-1} φ`.
    pub fn apply_inverse_stiffness(&self, degree: u32, x: &[f64]) -> Vec<f64> {
        let tau = self.params.tau(degree);
        let mut s = self.spectrum(x);
        s.iter_mut().zip(&self.omega_sq).for_each(|(c, w)| *c /= w + tau);
        self.inverse_real(s)
    }

    fn mode_inner(&self, degree: u32, a: &[f64], b: &[f64]) -> f64 {
        let tau = self.params.tau(degree);
        let sa = self.spectrum(a);
        let sb = self.spectrum(b);
        let sum: f64 = sa
            .iter()
            .zip(&sb)
            .zip(&self.omega_sq)
            .map(|((x, y), w)| (w + tau) * (x.re * y.re + x.im * y.im))
            .sum();
        sum * self.grid.spacing() / self.grid.nodes as f64
    }

    pub fn h1_inner(&self, u: &CylinderFunction, v: &CylinderFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(u
            .modes
            .iter()
            .filter_map(|(d, a)| v.modes.get(d).map(|b| self.mode_inner(*d, a, b)))
            .sum())
    }

    pub fn h1_norm_sq(&self, v: &CylinderFunction) -> Result<f64> {
        self.h1_inner(v, v)
    }

    /// `‖v‖^{p+1}_{p+1}`.
    pub fn lp1_pow(&self, v: &CylinderFunction) -> Result<f64> {
        self.lp1_pow_impl(v, false).map(|(s, _)| s)
    }

    pub fn lp1_norm(&self, v: &CylinderFunction) -> Result<f64> {
        Ok(self.lp1_pow(v)?.powf(1.0 / (self.params.p + 1.0)))
    }

    /// `‖v‖^{p+1}_{p+1}` and its gradient with respect to the profile samples.
    pub fn lp1_pow_with_gradient(&self, v: &CylinderFunction) -> Result<(f64, CylinderFunction)> {
        self.lp1_pow_impl(v, true).map(|(s, g)| (s, g.expect("gradient requested")))
    }

    fn lp1_pow_impl(&self, v: &CylinderFunction, want_grad: bool) -> Result<(f64, Option<CylinderFunction>)> {
        self.check(v)?;
        let p = self.params.p;
        let h = self.grid.spacing();
        let m = self.grid.nodes;
        if v.is_mode0_only() {
            // Y_0 = |S|^{-1/2}: the angular integral is exact.
            let c = self.area.powf(0.5 * (1.0 - p));
            let zero = vec![0.0; m];
            let phi = v.mode(0).unwrap_or(&zero);
            let s = c * h * phi.iter().map(|x| x.abs().powf(p + 1.0)).sum::<f64>();
            let grad = want_grad.then(|| {
                let g = phi.iter().map(|&x| c * h * (p + 1.0) * x.abs().powf(p - 1.0) * x).collect();
                let mut out = self.zero();
                out.modes.insert(0, g);
                for d in v.modes.keys().filter(|d| **d != 0) {
                    out.modes.insert(*d, vec![0.0; m]);
                }
                out
            });
            return Ok((s, grad));
        }
        let degrees: Vec<u32> = v.modes.keys().copied().collect();
        let ys: Vec<Vec<f64>> = degrees
            .iter()
            .map(|&d| self.thetas.iter().map(|&th| zonal_harmonic(self.params.n, d, th)).collect())
            .collect();
        let profiles: Vec<&Vec<f64>> = degrees.iter().map(|d| &v.modes[d]).collect();
        let mut grads: Vec<Vec<f64>> = if want_grad { vec![vec![0.0; m]; degrees.len()] } else { Vec::new() };
        let mut total = 0.0;
        for k in 0..m {
            for (q, &w) in self.angle_weights.iter().enumerate() {
                let u: f64 = profiles.iter().zip(&ys).map(|(pr, y)| pr[k] * y[q]).sum();
                let au = u.abs();
                if au == 0.0 {
                    continue;
                }
                let pw = au.powf(p - 1.0);
                total += w * pw * au * au;
                if want_grad {
                    let dv = h * (p + 1.0) * w * pw * u;
                    for (g, y) in grads.iter_mut().zip(&ys) {
                        g[k] += dv * y[q];
                    }
                }
            }
        }
        let grad = want_grad.then(|| {
            let mut out = self.zero();
            for (d, g) in degrees.iter().zip(grads) {
                out.modes.insert(*d, g);
            }
            out
        });
        Ok((h * total, grad))
    }

    /// `⟨v, Ψ_s^p⟩_{L²(C)}`; only the radial mode contributes.
    pub fn overlap(&self, v: &CylinderFunction, s: f64) -> Result<f64> {
        self.check(v)?;
        let Some(phi) = v.mode(0) else { return Ok(0.0) };
        let root = self.area.sqrt();
        let p = self.params.p;
        let sum: f64 = phi
            .iter()
            .enumerate()
            .map(|(k, x)| x * self.profile.psi_pow(self.grid.t(k) - s, p))
            .sum();
        Ok(root * self.grid.spacing() * sum)
    }

    /// `d/ds ⟨v, Ψ_s^p⟩ = -p ⟨v, Ψ_s^{p-1} Ψ'(· - s)⟩`.
    pub fn overlap_derivative(&self, v: &CylinderFunction, s: f64) -> Result<f64> {
        self.check(v)?;
        let Some(phi) = v.mode(0) else { return Ok(0.0) };
        let p = self.params.p;
        let sum: f64 = phi
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let t = self.grid.t(k) - s;
                x * self.profile.psi_pow(t, p - 1.0) * self.profile.psi_prime(t)
            })
            .sum();
        Ok(-p * self.area.sqrt() * self.grid.spacing() * sum)
    }

    /// Overlap at every grid shift `s = m h`, `m in [-M/2, M/2)`, by one FFT correlation.
    pub fn overlap_scan(&self, v: &CylinderFunction) -> Result<Vec<(f64, f64)>> {
        self.check(v)?;
        let m = self.grid.nodes;
        let h = self.grid.spacing();
        let Some(phi) = v.mode(0) else {
            return Ok((0..m).map(|j| ((j as f64 - (m / 2) as f64) * h, 0.0)).collect());
        };
        // Re-centre so index 0 is t = 0.
        let centred: Vec<f64> = (0..m).map(|j| phi[(j + m / 2) % m]).collect();
        let mut spec = self.spectrum(&centred);
        spec.iter_mut().zip(&self.psi_pow_spectrum).for_each(|(a, g)| *a *= g.conj());
        let corr = self.inverse_real(spec);
        Ok((0..m)
            .map(|i| {
                let j = (i + m / 2) % m;
                let shift = if j < m / 2 { j as f64 } else { j as f64 - m as f64 };
                (shift * h, h * corr[j])
            })
            .collect())
    }

    /// `dist²(v, Y) = ‖v‖²_{H¹} - sup_s ⟨v, Ψ_s^p⟩² / ‖Ψ‖^{p+1}_{p+1}`, searching `s ∈ [-T/2, T/2]`.
    pub fn distance_to_manifold(&self, v: &CylinderFunction) -> Result<ManifoldProjection> {
        let norm_sq = self.h1_norm_sq(v)?;
        let scan = self.overlap_scan(v)?;
        let limit = 0.5 * self.grid.half_width;
        let window: Vec<&(f64, f64)> = scan.iter().filter(|(s, _)| s.abs() <= limit).collect();
        let (idx, _) = window
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))
            .expect("window is never empty");
        let edge = idx == 0 || idx + 1 == window.len();
        let h = self.grid.spacing();
        let centre = window[idx].0;
        let sign = window[idx].1.signum();
        let slope = |s: f64| -> Result<f64> { Ok(sign * self.overlap_derivative(v, s)?) };
        let (lo, hi) = (centre - h, centre + h);
        let shift = if slope(lo)? > 0.0 && slope(hi)? < 0.0 {
            bisect_decreasing(&slope, lo, hi, 1e-12)?
        } else {
            let objective = |s: f64| -> Result<f64> { Ok(self.overlap(v, s)?.abs()) };
            golden_max(&objective, lo, hi, 1e-10)?.0
        };
        let overlap = self.overlap(v, shift)?;
        let m = self.psi_lp1_pow;
        Ok(ManifoldProjection {
            shift,
            scalar: overlap / m,
            overlap,
            distance_sq: norm_sq - overlap * overlap / m,
            norm_sq,
            edge,
        })
    }

    /// Remove the `H¹` components along `Ψ` and `Ψ'`.
    pub fn m_perp_project(&self, v: &CylinderFunction) -> Result<CylinderFunction> {
        self.check(v)?;
        let mut out = v.clone();
        let psi = self.psi();
        let dpsi = self.psi_prime();
        let pp = self.h1_norm_sq(&psi)?;
        let d_on_p = self.h1_inner(&dpsi, &psi)? / pp;
        let dpsi = dpsi.axpy(-d_on_p, &psi)?;
        let dd = self.h1_norm_sq(&dpsi)?;
        for (b, bb) in [(&psi, pp), (&dpsi, dd)] {
            let c = self.h1_inner(&out, b)? / bb;
            out = out.axpy(-c, b)?;
        }
        Ok(out)
    }
}

// Root of a function that is positive at `a` and negative at `b`.
fn bisect_decreasing<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    while b - a > tol * (1.0 + a.abs().max(b.abs())) {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if !fm.is_finite() {
            return Err(Error::Convergence(format!("overlap slope is not finite at s = {m}")));
        }
        if fm > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            let x = 0.5 * (a + b);
            let fx = f(x)?;
            if !fx.is_finite() {
                break;
            }
            return Ok((x, fx));
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Err(Error::Convergence(format!("golden-section search stalled on [{a}, {b}]")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn space(n: u32, a: f64, b: f64) -> CylinderSpace {
        CylinderSpace::default_for(&make_params(n, a, b).unwrap())
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn psi_norms_on_grid() {
        for (n, a, b) in [(4, 0.0, 0.5), (3, 0.1, 0.4), (2, -1.0, -0.2), (5, -0.5, 0.2)] {
            let sp = space(n, a, b);
            let psi = sp.psi();
            assert!(rel(sp.lp1_pow(&psi).unwrap(), sp.psi_lp1_pow()) < 1e-12);
            assert!(rel(sp.h1_norm_sq(&psi).unwrap(), sp.psi_lp1_pow()) < 1e-12);
            let dp = sp.psi_prime();
            let c = sp.h1_inner(&psi, &dp).unwrap();
            assert!(c.abs() < 1e-10 * sp.psi_lp1_pow());
        }
    }

    #[test]
    fn general_quadrature_agrees_with_mode0_shortcut() {
        let sp = space(4, 0.0, 0.3);
        let psi = sp.psi();
        let with_zero_mode1 = psi.clone().with_mode(1, vec![0.0; sp.grid().nodes]).unwrap();
        let mut forced = with_zero_mode1.clone();
        forced.modes.get_mut(&1).unwrap()[0] = 1e-300;
        let a = sp.lp1_pow(&psi).unwrap();
        let b = sp.lp1_pow(&forced).unwrap();
        assert!(rel(b, a) < 1e-12);
    }

    #[test]
    fn mode1_lp1_matches_separated_integral() {
        // ‖f x_N‖^{p+1} = ∫|f|^{p+1} dt · ∫|x_N|^{p+1} dσ
        let sp = space(3, 0.1, 0.4);
        let p = sp.params().p;
        let g = sp.params().gamma;
        let f = |t: f64| (g * t).cosh().recip().powf(1.3);
        let v = sp.degree_one(f);
        let h = sp.grid().spacing();
        let line: f64 = sp.grid().times().iter().map(|&t| f(t).powf(p + 1.0)).sum::<f64>() * h;
        // ∫_{S²} |cos θ|^{q} = 4π/(q+1)
        let ang = 4.0 * PI / (p + 2.0);
        assert!(rel(sp.lp1_pow(&v).unwrap(), line * ang) < 1e-6);
        // reflection θ -> π - θ flips the sign only
        assert!(rel(sp.lp1_pow(&v.scaled(-1.0)).unwrap(), sp.lp1_pow(&v).unwrap()) < 1e-14);
    }

    #[test]
    fn lp1_gradient_matches_differences() {
        let sp = space(4, 0.0, 0.3);
        let v = sp.psi().add(&sp.rho_10().scaled(0.3)).unwrap();
        let (s0, g) = sp.lp1_pow_with_gradient(&v).unwrap();
        let dir = sp.radial(|t| (-t * t / 50.0).exp()).add(&sp.degree_one(|t| (-(t - 1.0).powi(2) / 30.0).exp())).unwrap();
        let e = 1e-6;
        let fd = (sp.lp1_pow(&v.axpy(e, &dir).unwrap()).unwrap() - sp.lp1_pow(&v.axpy(-e, &dir).unwrap()).unwrap()) / (2.0 * e);
        assert!(rel(g.euclid_dot(&dir), fd) < 1e-6, "{} {fd} {s0}", g.euclid_dot(&dir));
    }

    #[test]
    fn stiffness_roundtrip() {
        let sp = space(4, 0.0, 0.5);
        let x: Vec<f64> = sp.grid().times().iter().map(|t| (-(t * t) / 40.0).exp()).collect();
        let y = sp.apply_inverse_stiffness(1, &sp.apply_stiffness(1, &x));
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn distance_of_manifold_points() {
        let sp = space(4, 0.0, 0.5);
        let psi = sp.psi();
        let d = sp.distance_to_manifold(&psi).unwrap();
        assert!(d.distance_sq.abs() < 1e-8 * d.norm_sq);
        assert!(d.shift.abs() < 1e-8);
        assert!((d.scalar - 1.0).abs() < 1e-10);
        let v = sp.psi_shifted(2.0).scaled(3.0);
        let d = sp.distance_to_manifold(&v).unwrap();
        assert!(d.distance_sq.abs() < 1e-8 * d.norm_sq);
        assert!((d.shift - 2.0).abs() < 1e-6, "{}", d.shift);
        assert!((d.scalar - 3.0).abs() < 1e-9);
        let d = sp.distance_to_manifold(&psi.scaled(-2.0)).unwrap();
        assert!(d.distance_sq.abs() < 1e-8 * d.norm_sq);
    }

    #[test]
    fn distance_of_gap_perturbation() {
        let sp = space(4, 0.0, 0.5);
        let rho = sp.rho_02();
        let eps = 1e-3;
        let v = sp.psi().axpy(eps, &rho).unwrap();
        let d = sp.distance_to_manifold(&v).unwrap();
        let want = eps * eps * sp.h1_norm_sq(&rho).unwrap();
        assert!(rel(d.distance_sq, want) < 1e-2, "{} {want}", d.distance_sq);
    }

    #[test]
    fn scan_matches_direct_overlap() {
        let sp = space(3, 0.1, 0.4);
        let v = sp.psi().add(&sp.psi_shifted(5.0)).unwrap();
        let scan = sp.overlap_scan(&v).unwrap();
        for &(s, o) in scan.iter().step_by(97) {
            if s.abs() < 0.5 * sp.grid().half_width {
                assert!((o - sp.overlap(&v, s).unwrap()).abs() < 1e-10 * sp.psi_lp1_pow());
            }
        }
    }

    #[test]
    fn overlap_f_symmetric_with_max_at_zero() {
        let sp = space(4, 0.0, 0.5);
        let psi = sp.psi();
        let f0 = sp.overlap(&psi, 0.0).unwrap();
        assert!(rel(f0, sp.psi_lp1_pow()) < 1e-12);
        for &s in &[0.5, 1.5, 4.0] {
            let a = sp.overlap(&psi, s).unwrap();
            assert!(rel(a, sp.overlap(&psi, -s).unwrap()) < 1e-12);
            assert!(a < f0);
        }
    }

    #[test]
    fn projection() {
        let sp = space(4, 0.0, 0.5);
        let psi = sp.psi();
        let z = sp.m_perp_project(&psi).unwrap();
        assert!(sp.h1_norm_sq(&z).unwrap() < 1e-20 * sp.psi_lp1_pow());
        let rho = sp.rho_02();
        let r = sp.m_perp_project(&rho).unwrap();
        let diff = r.axpy(-1.0, &rho).unwrap();
        assert!(sp.h1_norm_sq(&diff).unwrap() < 1e-16 * sp.h1_norm_sq(&rho).unwrap());
        let w = sp.radial(|t| (-(t - 1.0).powi(2) / 9.0).exp()).add(&sp.rho_10()).unwrap();
        let pw = sp.m_perp_project(&w).unwrap();
        let ppw = sp.m_perp_project(&pw).unwrap();
        let nrm = sp.h1_norm_sq(&pw).unwrap();
        assert!(sp.h1_inner(&pw, &psi).unwrap().abs() < 1e-10 * (nrm * sp.psi_lp1_pow()).sqrt());
        assert!(sp.h1_inner(&pw, &sp.psi_prime()).unwrap().abs() < 1e-10 * nrm.sqrt() * sp.h1_norm_sq(&sp.psi_prime()).unwrap().sqrt());
        assert!(sp.h1_norm_sq(&ppw.axpy(-1.0, &pw).unwrap()).unwrap() < 1e-24 * nrm);
    }

    #[test]
    fn grid_mismatch() {
        let sp = space(4, 0.0, 0.5);
        let other = space(4, 0.0, 0.4);
        assert!(matches!(sp.h1_norm_sq(&other.psi()), Err(Error::GridMismatch(_))));
        assert!(CylinderGrid::new(10.0, 15, 8).is_err());
    }
}
