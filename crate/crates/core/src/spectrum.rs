//! Spectrum of the linearization at `Ψ`.
//!
//! On degree-`i` zonal modes the eigenvalue problem
//! `-Δ_C ρ + (a_c-a)² ρ = λ p Ψ^{p-1} ρ` reduces to
//! `-φ'' + τ_i φ = λ β sech²(γt) φ`, a Pöschl-Teller problem with
//! eigenvalues `λ_{i,j} = γ²/(4β) ((2j + 1 + 2√τ_i/γ)² - 1)` and
//! eigenfunctions `sech(γt)^ν P_j^{(ν,ν)}(tanh γt)`, `ν = √τ_i/γ`.

use serde::{Deserialize, Serialize};

use crate::extremals::{sech_pow, ExtremalProfile};
use crate::params::{CknParams, Region, RegionClass};
use crate::specfun::{jacobi_coefficients, polar_quadrature, sphere_area, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub i: u32,
    pub j: u32,
    pub tau: f64,
    pub lambda: f64,
    /// Dimension of the degree-`i` spherical harmonics on `S^{N-1}`.
    pub multiplicity: u64,
}

/// Number of linearly independent spherical harmonics of degree `i` on `S^{N-1}`.
pub fn multiplicity(n: u32, i: u32) -> u64 {
    if n == 2 {
        return if i == 0 { 1 } else { 2 };
    }
    let choose = |m: u64, k: u64| -> u64 { (1..=k).fold(1u64, |acc, r| acc * (m + 1 - r) / r) };
    let (nn, ii) = (u64::from(n), u64::from(i));
    let low = if ii >= 2 { choose(nn + ii - 3, ii - 2) } else { 0 };
    choose(nn + ii - 1, ii) - low
}

pub fn eigenvalue_closed(params: &CknParams, i: u32, j: u32) -> SpectralPoint {
    let tau = params.tau(i);
    let g = params.gamma;
    let x = 2.0 * f64::from(j) + 1.0 + 2.0 * tau.sqrt() / g;
    SpectralPoint {
        i,
        j,
        tau,
        lambda: g * g / (4.0 * params.beta) * (x * x - 1.0),
        multiplicity: multiplicity(params.n, i),
    }
}

/// Relative residual of `(γ²/4)(-(2j+1) + √(1 + 4λβ/γ²))² = τ_i`.
pub fn solvability_residual(params: &CknParams, i: u32, j: u32, lambda: f64) -> f64 {
    let g2 = params.gamma * params.gamma;
    let root = (1.0 + 4.0 * lambda * params.beta / g2).sqrt();
    let lhs = 0.25 * g2 * (root - (2.0 * f64::from(j) + 1.0)).powi(2);
    let tau = params.tau(i);
    (lhs - tau).abs() / tau
}

/// `λ_{i,j}` for `i <= imax`, `j <= jmax`, row-major in `i`.
pub fn spectrum_table(params: &CknParams, imax: u32, jmax: u32) -> Vec<SpectralPoint> {
    (0..=imax)
        .flat_map(|i| (0..=jmax).map(move |j| (i, j)))
        .map(|(i, j)| eigenvalue_closed(params, i, j))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `g_N(a) = √(1/4 + (N-1)/(4(a_c-a)²)) - 1/2`.
    pub g: f64,
    /// `h_{N,a}(b) = (1+a-b)/(N - 2(1+a-b))`.
    pub h: f64,
    pub ratio: f64,
}

/// `g/h > 1 ⟺ λ_{0,2} < λ_{1,1}` and `g/h > 2 ⟺ λ_{0,2} < λ_{1,0}`.
pub fn comparison_functions(params: &CknParams) -> Comparison {
    let nf = f64::from(params.n);
    let d = params.delta();
    let k = 1.0 + params.a - params.b;
    let g = (0.25 + (nf - 1.0) / (4.0 * d * d)).sqrt() - 0.5;
    let h = k / (nf - 2.0 * k);
    Comparison { g, h, ratio: g / h }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapWinner {
    Lambda02,
    Lambda10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub region: RegionClass,
    pub lambda_star: f64,
    pub winner: GapWinner,
    pub lambda_02: f64,
    pub lambda_11: f64,
    pub lambda_10: f64,
    /// `1 - 1/λ` of the winning eigenvalue, straight from the eigenvalue formula.
    pub lambda_star_raw: f64,
    /// `2(p-1)/(3p-1)`.
    pub lambda_star_mode0: f64,
    /// `(√τ_1(√τ_1+γ) - β)/(√τ_1(√τ_1+γ))`, vanishing on `b = b_FS(a)`.
    pub lambda_star_mode1: f64,
    /// `(2q - (p-2)(p+1) + (p-1)√(1+q))/(2 + 2q + (p-1)√(1+q))`, `q = (N-1)/(a_c-a)²`.
    /// Differs from `lambda_star_mode1` by `2p` in the numerator and does not vanish on `b_FS`.
    pub lambda_star_mode1_statement: f64,
    pub q: f64,
}

pub fn spectral_gap(params: &CknParams) -> GapReport {
    let region = params.classify();
    let p = params.p;
    let l02 = eigenvalue_closed(params, 0, 2).lambda;
    let l11 = eigenvalue_closed(params, 1, 1).lambda;
    let l10 = eigenvalue_closed(params, 1, 0).lambda;
    let s = params.tau(1).sqrt();
    let ss = s * (s + params.gamma);
    let mode1 = (ss - params.beta) / ss;
    let q = (f64::from(params.n) - 1.0) / params.delta().powi(2);
    let r = (1.0 + q).sqrt();
    let statement = (2.0 * q - (p - 2.0) * (p + 1.0) + (p - 1.0) * r) / (2.0 + 2.0 * q + (p - 1.0) * r);
    let mode0 = 2.0 * (p - 1.0) / (3.0 * p - 1.0);
    let (winner, lambda_star, raw) = match region.region {
        Region::Remaining => (GapWinner::Lambda10, mode1, 1.0 - 1.0 / l10),
        _ => (GapWinner::Lambda02, mode0, 1.0 - 1.0 / l02),
    };
    GapReport {
        region,
        lambda_star,
        winner,
        lambda_02: l02,
        lambda_11: l11,
        lambda_10: l10,
        lambda_star_raw: raw,
        lambda_star_mode0: mode0,
        lambda_star_mode1: mode1,
        lambda_star_mode1_statement: statement,
        q,
    }
}

/// Degree-`i`, level-`j` radial eigenfunction `sech(γt)^ν P_j^{(ν,ν)}(tanh γt)`,
/// times `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub i: u32,
    pub j: u32,
    pub nu: f64,
    pub gamma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub scale: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
}

fn poly_eval(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * y + v)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| k as f64 * v).collect()
}

// -ν y P + (1 - y²) P'
fn poly_step(c: &[f64], nu: f64) -> Vec<f64> {
    let d = poly_derivative(c);
    let mut out = vec![0.0; c.len() + 1];
    for (k, &v) in c.iter().enumerate() {
        out[k + 1] -= nu * v;
    }
    for (k, &v) in d.iter().enumerate() {
        out[k] += v;
        out[k + 2] -= v;
    }
    out
}

impl Eigenfunction {
    pub fn new(params: &CknParams, i: u32, j: u32) -> Self {
        let sp = eigenvalue_closed(params, i, j);
        let nu = sp.tau.sqrt() / params.gamma;
        let p = jacobi_coefficients(j, nu);
        let q = poly_step(&p, nu);
        let r = poly_step(&q, nu);
        Eigenfunction { i, j, nu, gamma: params.gamma, tau: sp.tau, lambda: sp.lambda, scale: 1.0, p, q, r }
    }

    /// Rescaled to unit `∫ φ'² + τ φ² dt`.
    pub fn normalized(params: &CknParams, i: u32, j: u32) -> Self {
        let mut f = Self::new(params, i, j);
        f.scale = 1.0 / f.h1_norm_sq_1d().sqrt();
        f
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = self.gamma * t;
        self.scale * sech_pow(x, self.nu) * poly_eval(&self.p, x.tanh())
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = self.gamma * t;
        self.scale * self.gamma * sech_pow(x, self.nu) * poly_eval(&self.q, x.tanh())
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        let x = self.gamma * t;
        self.scale * self.gamma * self.gamma * sech_pow(x, self.nu) * poly_eval(&self.r, x.tanh())
    }

    /// `∫_R φ'² + τ φ² dt` by adaptive quadrature.
    pub fn h1_norm_sq_1d(&self) -> f64 {
        let spec = QuadratureSpec::for_decay(2.0 * self.nu * self.gamma);
        spec.integrate_line(|t| self.derivative(t).powi(2) + self.tau * self.value(t).powi(2))
            .expect("eigenfunction decays exponentially")
    }
}

/// Radial eigenfunction value, unit `H¹` norm on the line.
pub fn eigenfunction(params: &CknParams, i: u32, j: u32, t: f64) -> f64 {
    Eigenfunction::normalized(params, i, j).value(t)
}

/// `ρ_{0,2}(t) = p cosh(γt)^{-2/(p-1)} (4(p+1) - (6p+2) sech²(γt)) / (4(p-1)²)`.
pub fn rho_02(params: &CknParams, t: f64) -> f64 {
    let p = params.p;
    let x = params.gamma * t;
    p * sech_pow(x, 2.0 / (p - 1.0)) * (4.0 * (p + 1.0) - (6.0 * p + 2.0) * sech_pow(x, 2.0))
        / (4.0 * (p - 1.0).powi(2))
}

/// `ρ_{1,0}(t, θ) = cosh(γt)^{-√τ_1/γ} cos θ`, with `cos θ = x_N` on the sphere.
pub fn rho_10(params: &CknParams, t: f64, polar_angle: f64) -> f64 {
    sech_pow(params.gamma * t, params.tau(1).sqrt() / params.gamma) * polar_angle.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub rho02_psi: f64,
    pub rho02_psi_prime: f64,
    /// `∫_S x_N dσ`, which kills every mode-0 pairing with `ρ_{1,0}`.
    pub rho10_mode0: f64,
    pub rho02_norm: f64,
    pub psi_norm: f64,
    pub psi_prime_norm: f64,
    /// Largest of the normalized inner products.
    pub worst_relative: f64,
}

/// `H¹(C)` pairings of `ρ_{0,2}` with `Ψ` and `Ψ'`, and of `ρ_{1,0}` with mode-0 functions.
pub fn orthogonality_check(params: &CknParams) -> OrthogonalityReport {
    let prof = ExtremalProfile::new(params);
    let rho = Eigenfunction::new(params, 0, 2);
    let area = sphere_area(params.n);
    let d2 = params.delta().powi(2);
    let base = QuadratureSpec::for_decay(2.0 * params.delta());
    // Cancelling integrands need an absolute tolerance tied to the norms.
    let pair = |f: &dyn Fn(f64) -> (f64, f64), g: &dyn Fn(f64) -> (f64, f64), scale: f64| {
        let spec = QuadratureSpec { abs_tol: (1e-14 * scale / area).max(1e-300), ..base };
        area * spec
            .integrate_line(|t| {
                let (a, da) = f(t);
                let (b, db) = g(t);
                da * db + d2 * a * b
            })
            .expect("integrands decay exponentially")
    };
    let r = |t: f64| (rho.value(t), rho.derivative(t));
    let ps = |t: f64| (prof.psi(t), prof.psi_prime(t));
    let dps = |t: f64| (prof.psi_prime(t), prof.psi_second(t));
    let rho02_norm = pair(&r, &r, 0.0).sqrt();
    let psi_norm = pair(&ps, &ps, 0.0).sqrt();
    let psi_prime_norm = pair(&dps, &dps, 0.0).sqrt();
    let rho02_psi = pair(&r, &ps, rho02_norm * psi_norm);
    let rho02_psi_prime = pair(&r, &dps, rho02_norm * psi_prime_norm);
    let (th, w) = polar_quadrature(params.n, 64);
    let rho10_mode0: f64 = th.iter().zip(&w).map(|(t, w)| w * t.cos()).sum();
    let worst_relative = (rho02_psi.abs() / (rho02_norm * psi_norm))
        .max(rho02_psi_prime.abs() / (rho02_norm * psi_prime_norm))
        .max(rho10_mode0.abs() / area);
    OrthogonalityReport {
        rho02_psi,
        rho02_psi_prime,
        rho10_mode0,
        rho02_norm,
        psi_norm,
        psi_prime_norm,
        worst_relative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{felli_schneider, make_params};
    use crate::specfun::jacobi_polynomial;

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs().max(1e-300)
    }

    fn pts() -> Vec<CknParams> {
        [(4, 0.0, 0.5), (4, 0.0, 0.3), (4, 0.5, 0.6), (3, 0.1, 0.4), (5, -0.5, 0.2), (2, -1.0, -0.2), (6, 1.5, 1.6)]
            .iter()
            .map(|&(n, a, b)| make_params(n, a, b).unwrap())
            .collect()
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(3, 0), 1);
        assert_eq!(multiplicity(3, 1), 3);
        assert_eq!(multiplicity(3, 2), 5);
        assert_eq!(multiplicity(4, 2), 9);
        assert_eq!(multiplicity(2, 3), 2);
        assert_eq!(multiplicity(5, 1), 5);
    }

    #[test]
    fn exact_low_eigenvalues() {
        for prm in pts() {
            let p = prm.p;
            assert!(rel(eigenvalue_closed(&prm, 0, 1).lambda, 1.0) < 1e-13);
            assert!(rel(eigenvalue_closed(&prm, 0, 0).lambda, 1.0 / p) < 1e-13);
            assert!(rel(eigenvalue_closed(&prm, 0, 2).lambda, (3.0 * p - 1.0) / (p + 1.0)) < 1e-13);
            for i in 0..4 {
                for j in 0..4 {
                    let l = eigenvalue_closed(&prm, i, j).lambda;
                    assert!(solvability_residual(&prm, i, j, l) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn example_values() {
        let prm = make_params(4, 0.0, 0.3).unwrap();
        let g = spectral_gap(&prm);
        assert!(rel(g.lambda_10, 858.0 / 540.0) < 1e-13);
        assert!(rel(g.lambda_02, 1.7) < 1e-13);
        assert!(rel(g.lambda_star, 318.0 / 858.0) < 1e-13);
        assert_eq!(g.winner, GapWinner::Lambda10);
        let g = spectral_gap(&make_params(4, 0.0, 0.5).unwrap());
        assert!(rel(g.lambda_star, 1.0 / 3.0) < 1e-14);
        assert!(rel(g.lambda_star_raw, 1.0 / 3.0) < 1e-13);
    }

    #[test]
    fn lambda_10_tends_to_one_on_fs_curve() {
        let b = felli_schneider(4, -0.3).unwrap();
        let prm = make_params(4, -0.3, b + 1e-9).unwrap();
        assert!((eigenvalue_closed(&prm, 1, 0).lambda - 1.0).abs() < 1e-8);
    }

    #[test]
    fn statement_branch_differs_by_2p() {
        // The variant third branch at (4, 0, 0) gives 1/2 where the gap vanishes.
        let p = 3.0f64;
        let q = 3.0f64;
        let r = (1.0 + q).sqrt();
        let den = 2.0 + 2.0 * q + (p - 1.0) * r;
        assert!(((2.0 * q - (p - 2.0) * (p + 1.0) + (p - 1.0) * r) / den - 0.5).abs() < 1e-15);
        assert!(((2.0 + 2.0 * q - p * (p + 1.0) + (p - 1.0) * r) / den).abs() < 1e-15);
        for prm in pts() {
            let g = spectral_gap(&prm);
            let r = (1.0 + g.q).sqrt();
            let den = 2.0 + 2.0 * g.q + (prm.p - 1.0) * r;
            assert!((g.lambda_star_mode1_statement - g.lambda_star_mode1 - 2.0 * prm.p / den).abs() < 1e-13);
        }
    }

    #[test]
    fn comparison_ratio_brackets() {
        let b = felli_schneider(4, -0.3).unwrap();
        let c = comparison_functions(&make_params(4, -0.3, b + 1e-12 * 2.0).unwrap());
        assert!((c.ratio - 1.0).abs() < 1e-10);
        let cc = crate::params::curve_constants(4);
        let a = 0.1;
        let c = comparison_functions(&make_params(4, a, cc.b_fs_star(a)).unwrap());
        assert!((c.ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenfunction_matches_jacobi_and_ode() {
        for prm in pts() {
            for i in 0..3 {
                for j in 0..4 {
                    let f = Eigenfunction::new(&prm, i, j);
                    for k in 0..100 {
                        let t = (f64::from(k) - 50.0) * 0.08 / prm.gamma;
                        let y = (prm.gamma * t).tanh();
                        let direct = sech_pow(prm.gamma * t, f.nu) * jacobi_polynomial(j, f.nu, y);
                        assert!((f.value(t) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
                        let res = -f.second_derivative(t) + f.tau * f.value(t)
                            - f.lambda * prm.beta * sech_pow(prm.gamma * t, 2.0) * f.value(t);
                        let scale = f.tau * (1.0 + f.value(t).abs());
                        assert!(res.abs() < 1e-9 * scale.max(1.0), "{prm:?} i={i} j={j} t={t} res={res}");
                    }
                }
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let prm = make_params(3, 0.1, 0.4).unwrap();
        let f = Eigenfunction::new(&prm, 1, 2);
        let h = 1e-5;
        for &t in &[-2.0, 0.3, 1.7] {
            let d1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            let d2 = (f.derivative(t + h) - f.derivative(t - h)) / (2.0 * h);
            assert!((f.derivative(t) - d1).abs() < 1e-8);
            assert!((f.second_derivative(t) - d2).abs() < 1e-7);
        }
    }

    #[test]
    fn rho_02_closed_forms_agree() {
        for prm in pts() {
            let f = Eigenfunction::new(&prm, 0, 2);
            for k in 0..100 {
                let t = (f64::from(k) - 50.0) * 0.1 / prm.gamma;
                let e = rho_02(&prm, t);
                assert!((f.value(t) - e).abs() < 1e-12 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn rho_10_is_mode_one_eigenfunction() {
        let prm = make_params(4, 0.0, 0.3).unwrap();
        let f = Eigenfunction::new(&prm, 1, 0);
        for &t in &[-1.0, 0.0, 2.5] {
            assert!((rho_10(&prm, t, 0.0) - f.value(t)).abs() < 1e-15);
            assert!((rho_10(&prm, t, std::f64::consts::PI - 0.3) + rho_10(&prm, t, 0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn eigenfunctions_bounded_by_psi() {
        for prm in pts() {
            let prof = ExtremalProfile::new(&prm);
            for (i, j) in [(0, 2), (1, 0), (1, 1), (2, 0)] {
                let f = Eigenfunction::new(&prm, i, j);
                let ratios: Vec<f64> = (0..200)
                    .map(|k| {
                        let t = (f64::from(k) - 100.0) * 0.2 / prm.gamma;
                        f.value(t).abs() / prof.psi(t)
                    })
                    .collect();
                let k_max = ratios.iter().cloned().fold(0.0, f64::max);
                assert!(k_max.is_finite() && k_max < 1e6, "{prm:?} {i} {j} {k_max}");
            }
        }
    }

    #[test]
    fn normalized_has_unit_norm() {
        let prm = make_params(4, 0.0, 0.5).unwrap();
        let f = Eigenfunction::normalized(&prm, 0, 2);
        assert!((f.h1_norm_sq_1d() - 1.0).abs() < 1e-12);
        assert!((eigenfunction(&prm, 0, 2, 0.4) - f.value(0.4)).abs() < 1e-15);
    }

    #[test]
    fn orthogonality() {
        for prm in pts() {
            let r = orthogonality_check(&prm);
            assert!(r.worst_relative < 1e-8, "{prm:?} {r:?}");
        }
    }
}
