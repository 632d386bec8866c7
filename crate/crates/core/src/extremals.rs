//! The radial extremal `W` on `R^N`, its cylinder profile `Ψ`, and the optimal constant.
//!
//! Under the Emden-Fowler change of variables `t = -ln|x|`,
//! `v(t, θ) = |x|^{a_c - a} u(x)`, the extremal becomes
//! `Ψ(t) = A cosh(γt)^{-2/(p-1)}` with `A = ((p+1)(a_c-a)²/2)^{1/(p-1)}`,
//! the positive even solution of `-Ψ'' + (a_c-a)² Ψ = Ψ^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CknParams;
use crate::specfun::{beta, gamma, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalProfile {
    pub params: CknParams,
    pub amplitude: f64,
    /// Equal to `γ`.
    pub decay_rate: f64,
    /// `2/(p-1)`.
    pub power: f64,
}

impl ExtremalProfile {
    pub fn new(params: &CknParams) -> Self {
        let d = params.delta();
        let p = params.p;
        ExtremalProfile {
            params: *params,
            amplitude: (0.5 * (p + 1.0) * d * d).powf(1.0 / (p - 1.0)),
            decay_rate: params.gamma,
            power: 2.0 / (p - 1.0),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        self.amplitude * sech_pow(self.decay_rate * t, self.power)
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        let x = self.decay_rate * t;
        -self.amplitude * self.power * self.decay_rate * sech_pow(x, self.power) * x.tanh()
    }

    pub fn psi_second(&self, t: f64) -> f64 {
        let x = self.decay_rate * t;
        let q = self.power;
        let s2 = sech_pow(x, 2.0);
        self.amplitude * q * self.decay_rate.powi(2) * sech_pow(x, q) * (q - (q + 1.0) * s2)
    }

    /// `Ψ_s(t) = Ψ(t - s)`.
    pub fn psi_shift(&self, t: f64, s: f64) -> f64 {
        self.psi(t - s)
    }

    /// `Ψ(t)^p`, computed without forming `Ψ` first so the tails do not underflow early.
    pub fn psi_pow(&self, t: f64, e: f64) -> f64 {
        self.amplitude.powf(e) * sech_pow(self.decay_rate * t, self.power * e)
    }
}

/// `cosh(x)^{-c}`, stable for large `|x|`.
pub fn sech_pow(x: f64, c: f64) -> f64 {
    let ax = x.abs();
    if ax < 20.0 {
        ax.cosh().powf(-c)
    } else {
        // cosh x = e^x (1 + e^{-2x}) / 2
        (c * (std::f64::consts::LN_2 - ax) - c * (-2.0 * ax).exp().ln_1p()).exp()
    }
}

pub fn psi(params: &CknParams, t: f64) -> f64 {
    ExtremalProfile::new(params).psi(t)
}

pub fn psi_prime(params: &CknParams, t: f64) -> f64 {
    ExtremalProfile::new(params).psi_prime(t)
}

pub fn psi_shift(params: &CknParams, t: f64, s: f64) -> f64 {
    ExtremalProfile::new(params).psi_shift(t, s)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and non-negative (r = {r})")));
    }
    Ok(())
}

fn w_constant(params: &CknParams) -> f64 {
    let d = params.delta();
    (2.0 * (params.p + 1.0) * d * d).powf(1.0 / (params.p - 1.0))
}

/// `W(r) = (2(p+1)(a_c-a)²)^{1/(p-1)} (1 + r^{(a_c-a)(p-1)})^{-2/(p-1)}`.
pub fn bubble_w(params: &CknParams, r: f64) -> Result<f64> {
    check_radius(r)?;
    let p = params.p;
    let u = r.powf(2.0 * params.gamma);
    Ok(w_constant(params) * (1.0 + u).powf(-2.0 / (p - 1.0)))
}

/// `dW/dr`.
pub fn bubble_w_prime(params: &CknParams, r: f64) -> Result<f64> {
    check_radius(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let p = params.p;
    let g2 = 2.0 * params.gamma;
    let u = r.powf(g2);
    let q = 2.0 / (p - 1.0);
    Ok(-w_constant(params) * q * (1.0 + u).powf(-q - 1.0) * g2 * u / r)
}

/// Dilation generator `V = ∇W·x + (a_c - a) W`, radial form.
pub fn generator_v(params: &CknParams, r: f64) -> Result<f64> {
    Ok(r * bubble_w_prime(params, r)? + params.delta() * bubble_w(params, r)?)
}

/// Radial Emden-Fowler map `(r, u(r)) -> (t, r^{a_c-a} u(r))` with `t = -ln r`.
pub fn emden_fowler(params: &CknParams, r: f64, value: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("Emden-Fowler needs r > 0 (r = {r})")));
    }
    Ok((-r.ln(), r.powf(params.delta()) * value))
}

/// Inverse of [`emden_fowler`].
pub fn emden_fowler_inverse(params: &CknParams, t: f64, value: f64) -> (f64, f64) {
    let r = (-t).exp();
    (r, value * (params.delta() * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiNorms {
    /// `‖Ψ‖²_{H¹(C)}`.
    pub h1_sq: f64,
    /// `‖Ψ‖_{L^{p+1}(C)}`.
    pub lp1: f64,
    /// `‖Ψ‖^{p+1}_{L^{p+1}(C)}`, equal to `h1_sq`.
    pub lp1_pow: f64,
}

/// `‖Ψ‖^{p+1}_{p+1} = A^{p+1} |S^{N-1}| B((p+1)/(p-1), 1/2) / γ = ‖Ψ‖²_{H¹}`.
pub fn psi_norms(params: &CknParams) -> PsiNorms {
    let prof = ExtremalProfile::new(params);
    let p = params.p;
    let m = prof.amplitude.powf(p + 1.0) * sphere_area(params.n) * beta((p + 1.0) / (p - 1.0), 0.5)
        / params.gamma;
    PsiNorms { h1_sq: m, lp1: m.powf(1.0 / (p + 1.0)), lp1_pow: m }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalConstant {
    /// `C^{-1} = ‖Ψ‖²_{H¹} / ‖Ψ‖²_{p+1} = ‖Ψ‖^{p-1}_{p+1}`.
    pub c_inv: f64,
    /// The closed form without a surface-area factor.
    pub c_inv_closed_form: f64,
    pub ratio: f64,
    /// `ln(ratio) / ln|S^{N-1}|`; equal to `(p-1)/(p+1)` when the two differ by a pure sphere factor.
    pub sphere_exponent: f64,
}

pub fn optimal_constant(params: &CknParams) -> OptimalConstant {
    let p = params.p;
    let d = params.delta();
    let m = psi_norms(params).lp1_pow;
    let c_inv = m.powf((p - 1.0) / (p + 1.0));
    let inner = 2.0 * std::f64::consts::PI.sqrt() * gamma((p + 1.0) / (p - 1.0))
        / ((p - 1.0) * gamma((3.0 * p + 1.0) / (2.0 * (p - 1.0))));
    let closed = 0.5 * (p + 1.0) * d.powf((p + 3.0) / (p + 1.0)) * inner.powf((p - 1.0) / (p + 1.0));
    let ratio = c_inv / closed;
    OptimalConstant {
        c_inv,
        c_inv_closed_form: closed,
        ratio,
        sphere_exponent: ratio.ln() / sphere_area(params.n).ln(),
    }
}
