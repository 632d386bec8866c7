//! Finite-difference eigensolver for `(-∂² + τ_i) φ = λ β sech²(γt) φ` on `[-T, T]`
//! with Dirichlet ends, independent of the closed-form spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremals::{sech_pow, ExtremalProfile};
use crate::params::CknParams;
use crate::spectrum::{spectral_gap, Eigenfunction};

/// Uniform grid `t_k = -T + k h`, `h = 2T/(M-1)`, `k = 0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self> {
        if !(half_width > 0.0) || nodes < 5 {
            return Err(Error::Config(format!("grid needs T > 0 and at least 5 nodes (T = {half_width}, M = {nodes})")));
        }
        Ok(GridSpec { half_width, nodes })
    }

    /// `T = 30/min(γ, a_c-a)`, with `h` resolving degree-`imax` eigenfunctions.
    pub fn default_for(params: &CknParams, imax: u32) -> Self {
        let rate = params.gamma.min(params.delta());
        let t = 30.0 / rate;
        let fastest = params.gamma.max(params.tau(imax).sqrt());
        let h = 0.02 / fastest;
        let nodes = ((2.0 * t / h).ceil() as usize + 1).max(2001);
        GridSpec { half_width: t, nodes }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes as f64 - 1.0)
    }

    /// Same window, spacing halved.
    pub fn refined(&self) -> Self {
        GridSpec { half_width: self.half_width, nodes: 2 * self.nodes - 1 }
    }

    fn interior(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (1..self.nodes - 1).map(move |k| -self.half_width + k as f64 * h)
    }
}

struct Pencil {
    diag: Vec<f64>,
    off: f64,
    weight: Vec<f64>,
}

impl Pencil {
    fn new(params: &CknParams, degree: u32, grid: &GridSpec) -> Self {
        let h = grid.spacing();
        let tau = params.tau(degree);
        let n = grid.nodes - 2;
        let diag = vec![2.0 / (h * h) + tau; n];
        let weight = grid
            .interior()
            .map(|t| params.beta * sech_pow(params.gamma * t, 2.0))
            .collect();
        Pencil { diag, off: -1.0 / (h * h), weight }
    }

    /// Number of eigenvalues below `lambda`: negative pivots of `A - λB`.
    fn inertia(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let mut count = 0;
        let mut d = 1.0;
        for (k, (&a, &w)) in self.diag.iter().zip(&self.weight).enumerate() {
            let mut dk = a - lambda * w;
            if k > 0 {
                dk -= e2 / d;
            }
            if dk == 0.0 {
                dk = -f64::EPSILON * (a.abs() + lambda.abs() * w);
            }
            if dk < 0.0 {
                count += 1;
            }
            d = dk;
        }
        count
    }

    fn kth(&self, k: usize) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, 1e3);
        if self.inertia(hi) <= k {
            return Err(Error::Convergence(format!("eigenvalue {k} not bracketed in (0, 1e3)")));
        }
        while hi - lo > 1e-13 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.inertia(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Solve `A x = y` (A is symmetric positive definite tridiagonal).
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let mut c = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = self.off / denom;
        z[0] = y[0] / denom;
        for k in 1..n {
            denom = self.diag[k] - self.off * c[k - 1];
            c[k] = self.off / denom;
            z[k] = (y[k] - self.off * z[k - 1]) / denom;
        }
        for k in (0..n - 1).rev() {
            z[k] -= c[k] * z[k + 1];
        }
        z
    }

    fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut v = self.diag[k] * x[k];
                if k > 0 {
                    v += self.off * x[k - 1];
                }
                if k + 1 < n {
                    v += self.off * x[k + 1];
                }
                v
            })
            .collect()
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 || count > 6 {
        return Err(Error::Config(format!("eigenvalue count must be in 1..=6 (got {count})")));
    }
    Ok(())
}

/// Smallest `count` eigenvalues of the discretized pencil, by inertia bisection.
pub fn generalized_eigenvalues(params: &CknParams, degree: u32, count: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    check_count(count)?;
    let pencil = Pencil::new(params, degree, grid);
    (0..count).map(|k| pencil.kth(k)).collect()
}

/// Eigenvalues of `A - λB` below `lambda` on the given grid.
pub fn inertia_count(params: &CknParams, degree: u32, grid: &GridSpec, lambda: f64) -> usize {
    Pencil::new(params, degree, grid).inertia(lambda)
}

/// Romberg extrapolation over `h`, `h/2`, `h/4` of [`generalized_eigenvalues`];
/// the `O(h²)` and `O(h⁴)` error terms cancel.
pub fn extrapolated_eigenvalues(params: &CknParams, degree: u32, count: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    let g1 = grid.refined();
    let g2 = g1.refined();
    let l0 = generalized_eigenvalues(params, degree, count, grid)?;
    let l1 = generalized_eigenvalues(params, degree, count, &g1)?;
    let l2 = generalized_eigenvalues(params, degree, count, &g2)?;
    Ok((0..count)
        .map(|k| {
            let r1 = (4.0 * l1[k] - l0[k]) / 3.0;
            let r2 = (4.0 * l2[k] - l1[k]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    /// Minimum of `1 - β∫sech²ρ²/‖ρ‖²_{H¹}` over the discretized `M^⊥`.
    pub minimum: f64,
    /// Degree of the minimizing mode.
    pub mode: u32,
    pub mode0_minimum: f64,
    pub mode1_minimum: f64,
    pub lambda_star: f64,
    /// `H¹` cosine between the minimizer and the closed-form eigenfunction of the winning mode.
    pub cosine: f64,
    pub iterations: usize,
}

struct ConstrainedMin {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
}

// Projected inverse iteration for the largest eigenvalue of A^{-1}B on the
// A-orthogonal complement of `constraints`.
fn constrained_min(pencil: &Pencil, start: Vec<f64>, constraints: &[Vec<f64>]) -> Result<ConstrainedMin> {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    // A-orthonormalize the constraints (Gram-Schmidt).
    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for c in constraints {
        let mut v = c.clone();
        for (b, ab) in &basis {
            let coef = dot(&v, ab);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= coef * y);
        }
        let av = pencil.apply_a(&v);
        let nrm = dot(&v, &av).sqrt();
        basis.push((v.iter().map(|x| x / nrm).collect(), av.iter().map(|x| x / nrm).collect()));
    }
    let project = |x: &mut Vec<f64>| {
        for (b, ab) in &basis {
            let coef = dot(x, ab);
            x.iter_mut().zip(b).for_each(|(v, y)| *v -= coef * y);
        }
    };
    let mut x = start;
    project(&mut x);
    let mut prev = f64::NAN;
    for it in 1..=50_000 {
        let bx: Vec<f64> = x.iter().zip(&pencil.weight).map(|(a, w)| a * w).collect();
        let mut y = pencil.solve(&bx);
        project(&mut y);
        let ay = pencil.apply_a(&y);
        let a_norm = dot(&y, &ay);
        let by: f64 = y.iter().zip(&pencil.weight).map(|(a, w)| a * a * w).sum();
        let value = 1.0 - by / a_norm;
        let s = 1.0 / a_norm.sqrt();
        x = y.iter().map(|v| v * s).collect();
        if (value - prev).abs() < 1e-15 {
            return Ok(ConstrainedMin { value, vector: x, iterations: it });
        }
        prev = value;
    }
    Err(Error::Convergence("projected inverse iteration did not settle".into()))
}

/// Discretized spectral gap: minimize the linearized Rayleigh quotient over
/// mode-0 functions `H¹`-orthogonal to `Ψ`, `Ψ'` and over mode-1 functions.
pub fn rayleigh_gap_check(params: &CknParams, grid: &GridSpec) -> Result<RayleighReport> {
    let ts: Vec<f64> = grid.interior().collect();
    let prof = ExtremalProfile::new(params);
    let g = params.gamma;
    let start: Vec<f64> = ts.iter().map(|&t| (-(g * t / 3.0).powi(2)).exp() * (1.0 + 0.3 * g * t)).collect();

    let p0 = Pencil::new(params, 0, grid);
    let psi: Vec<f64> = ts.iter().map(|&t| prof.psi(t)).collect();
    let dpsi: Vec<f64> = ts.iter().map(|&t| prof.psi_prime(t)).collect();
    let m0 = constrained_min(&p0, start.clone(), &[psi, dpsi])?;

    let p1 = Pencil::new(params, 1, grid);
    let m1 = constrained_min(&p1, start, &[])?;

    let (mode, best, pencil, reference) = if m1.value < m0.value {
        (1, &m1, &p1, Eigenfunction::new(params, 1, 0))
    } else {
        (0, &m0, &p0, Eigenfunction::new(params, 0, 2))
    };
    let r: Vec<f64> = ts.iter().map(|&t| reference.value(t)).collect();
    let ar = pencil.apply_a(&r);
    let num: f64 = best.vector.iter().zip(&ar).map(|(a, b)| a * b).sum();
    let rr: f64 = r.iter().zip(&ar).map(|(a, b)| a * b).sum();
    let av = pencil.apply_a(&best.vector);
    let vv: f64 = best.vector.iter().zip(&av).map(|(a, b)| a * b).sum();
    Ok(RayleighReport {
        minimum: best.value,
        mode,
        mode0_minimum: m0.value,
        mode1_minimum: m1.value,
        lambda_star: spectral_gap(params).lambda_star,
        cosine: num.abs() / (rr * vv).sqrt(),
        iterations: m0.iterations + m1.iterations,
    })
}
