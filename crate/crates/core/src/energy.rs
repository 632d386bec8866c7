//! Expansion coefficients of the Bianchi-Egnell quotient near the manifold and the
//! resulting upper bounds on `c_BE`.

use serde::{Deserialize, Serialize};

use crate::cylinder::{CylinderGrid, CylinderSpace};
use crate::error::{Error, Result};
use crate::extremals::{psi_norms, ExtremalProfile};
use crate::minimizer::{quotient, QuotientReport};
use crate::params::{curve_constants, CknParams, Region, RegionClass};
use crate::specfun::{beta, sphere_moments, QuadratureSpec};
use crate::spectrum::spectral_gap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectiveBound {
    TwoBubble,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `2 - 2^{2/(p+1)}`.
    pub bound_two_bubble: f64,
    /// `2 - 2^{1/(p+1)}`, the variant exponent.
    pub bound_two_bubble_statement: f64,
    pub bound_gap: f64,
    pub effective_bound: f64,
    pub effective: EffectiveBound,
    pub region: RegionClass,
}

pub fn bounds(params: &CknParams) -> BoundsReport {
    let p = params.p;
    let gap = spectral_gap(params);
    let two = 2.0 - 2f64.powf(2.0 / (p + 1.0));
    let (effective_bound, effective) =
        if two < gap.lambda_star { (two, EffectiveBound::TwoBubble) } else { (gap.lambda_star, EffectiveBound::Gap) };
    BoundsReport {
        bound_two_bubble: two,
        bound_two_bubble_statement: 2.0 - 2f64.powf(1.0 / (p + 1.0)),
        bound_gap: gap.lambda_star,
        effective_bound,
        effective,
        region: gap.region,
    }
}

/// `⟨Ψ^{p-2}, ρ_{0,2}³⟩_{L²(C)}` in closed form:
/// `2(p+1)p³ / (γ(7p-3)(5p-1)(p-1)⁶) · A^{p-2} |S^{N-1}| B((p+1)/(p-1), 1/2) · (p⁴ - 6p² + 8p - 3)`.
pub fn third_order_coefficient(params: &CknParams) -> f64 {
    third_order_with_beta_index(params, (params.p + 1.0) / (params.p - 1.0))
}

/// Variant with the Beta index `(p+2)/(p-1)`.
pub fn third_order_coefficient_alt(params: &CknParams) -> f64 {
    third_order_with_beta_index(params, (params.p + 2.0) / (params.p - 1.0))
}

fn third_order_with_beta_index(params: &CknParams, index: f64) -> f64 {
    let p = params.p;
    let amp = ExtremalProfile::new(params).amplitude;
    let quartic = p.powi(4) - 6.0 * p * p + 8.0 * p - 3.0;
    2.0 * (p + 1.0) * p.powi(3) / (params.gamma * (7.0 * p - 3.0) * (5.0 * p - 1.0) * (p - 1.0).powi(6))
        * amp.powf(p - 2.0)
        * sphere_moments(params.n).area
        * beta(index, 0.5)
        * quartic
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A0Report {
    /// `|S^{N-1}| A^{p+1} ∫ cosh(γt)^{-2p/(p-1)} e^{2γt/(p-1)} dt`, by quadrature.
    pub a0: f64,
    /// Closed form of the same, `|S| A^{p+1} 2^{(p+1)/(p-1)} (p-1) / (γ(p+1))`.
    pub a0_closed: f64,
    /// `∫Ψ^p Ψ_s ~ a0_effective · e^{-2γs/(p-1)}`; carries the `2^{2/(p-1)}` from `cosh x ~ e^{|x|}/2`.
    pub a0_effective: f64,
    /// `(2 - 2^{2/(p+1)} - Q(Ψ+Ψ_s)) e^{2γs/(p-1)} -> 2(2^{2/(p+1)} - 1) a0_effective / ‖Ψ‖^{p+1}_{p+1}`.
    pub deficit_coefficient: f64,
    /// Alternative coefficient `2 A_0 C^{2/(p-1)}`, with `C = 1/‖Ψ‖^{p-1}_{p+1}`.
    pub deficit_coefficient_alt: f64,
}

pub fn a0_coefficient(params: &CknParams) -> Result<A0Report> {
    let p = params.p;
    let g = params.gamma;
    let amp = ExtremalProfile::new(params).amplitude;
    let area = sphere_moments(params.n).area;
    let alpha = 2.0 * p / (p - 1.0);
    let c = 2.0 / (p - 1.0);
    // cosh^{-α}(x) e^{cx} ~ 2^α e^{-(α-c)|x|} on the right; α - c = 2.
    let spec = QuadratureSpec::for_decay(g * (alpha - c).min(alpha + c));
    let line = spec.integrate_line(|t| {
        let x = g * t;
        (c * x - alpha * (x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2)).exp()
    })?;
    let a0 = area * amp.powf(p + 1.0) * line;
    let a0_closed = area * amp.powf(p + 1.0) * 2f64.powf(alpha - 1.0) * (p - 1.0) / ((p + 1.0) * g);
    let m = psi_norms(params).lp1_pow;
    let a0_effective = 2f64.powf(c) * a0;
    let c_const = 1.0 / m.powf((p - 1.0) / (p + 1.0));
    Ok(A0Report {
        a0,
        a0_closed,
        a0_effective,
        deficit_coefficient: 2.0 * (2f64.powf(2.0 / (p + 1.0)) - 1.0) * a0_effective / m,
        deficit_coefficient_alt: 2.0 * a0 * c_const.powf(2.0 / (p - 1.0)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBubbleReport {
    pub s: f64,
    pub quotient: QuotientReport,
    pub bound: f64,
    /// `2 - 2^{2/(p+1)} - deficit_coefficient · e^{-2γs/(p-1)}`.
    pub predicted: f64,
    /// `2 - 2^{2/(p+1)} - 2A_0C^{2/(p-1)} e^{-2γs/(p-1)}`.
    pub predicted_alt: f64,
    /// `(bound - Q) e^{2γs/(p-1)}`.
    pub scaled_deficit: f64,
    pub a0: A0Report,
    /// `dist²(Ψ+Ψ_s, Y) / ‖Ψ‖²_{H¹}`.
    pub distance_ratio: f64,
    /// `(‖Ψ+Ψ_s‖²_{H¹} - 2‖Ψ‖²_{H¹}) e^{2γs/(p-1)} / 2`, tending to `a0_effective`.
    pub scaled_norm_excess: f64,
}

/// `Q(Ψ + Ψ_s)` on a grid widened by `s`.
pub fn two_bubble_quotient(params: &CknParams, s: f64) -> Result<TwoBubbleReport> {
    let base = CylinderGrid::default_for(params);
    if !(s > 0.0) || s > base.half_width {
        return Err(Error::Domain(format!(
            "two-bubble separation must lie in (0, {}] to fit the grid (s = {s})",
            base.half_width
        )));
    }
    let space = CylinderSpace::new(params, CylinderGrid::widened(params, s))?;
    let v = space.psi().add(&space.psi_shifted(s))?;
    let q = quotient(&space, &v)?;
    let p = params.p;
    let a0 = a0_coefficient(params)?;
    let bound = 2.0 - 2f64.powf(2.0 / (p + 1.0));
    let decay = (-2.0 * params.gamma * s / (p - 1.0)).exp();
    let m = space.psi_lp1_pow();
    Ok(TwoBubbleReport {
        s,
        bound,
        predicted: bound - a0.deficit_coefficient * decay,
        predicted_alt: bound - a0.deficit_coefficient_alt * decay,
        scaled_deficit: (bound - q.value) / decay,
        distance_ratio: q.distance_sq / m,
        scaled_norm_excess: (q.norm_sq - 2.0 * m) / (2.0 * decay),
        quotient: q,
        a0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPerturbationReport {
    pub eps: f64,
    pub quotient: QuotientReport,
    pub lambda_star: f64,
    /// `(p(p-1)/3) ⟨Ψ^{p-2}, ρ³⟩ / ‖ρ‖²_{H¹}`: `Q = λ* - slope·ε + O(ε²)`.
    pub slope: f64,
    pub predicted: f64,
    pub rho_norm_sq: f64,
}

/// `Q(Ψ + ε ρ_{0,2})`.
pub fn gap_perturbation_quotient(params: &CknParams, eps: f64) -> Result<GapPerturbationReport> {
    gap_perturbation_on(&CylinderSpace::default_for(params), eps)
}

pub fn gap_perturbation_on(space: &CylinderSpace, eps: f64) -> Result<GapPerturbationReport> {
    let params = space.params();
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::Domain(format!("eps must lie in (0, 0.2] (eps = {eps})")));
    }
    let rho = space.rho_02();
    let v = space.psi().axpy(eps, &rho)?;
    let q = quotient(space, &v)?;
    let rho_norm_sq = space.h1_norm_sq(&rho)?;
    let p = params.p;
    let slope = p * (p - 1.0) / 3.0 * third_order_coefficient(params) / rho_norm_sq;
    let lambda_star = 2.0 * (p - 1.0) / (3.0 * p - 1.0);
    Ok(GapPerturbationReport { eps, lambda_star, slope, predicted: lambda_star - slope * eps, rho_norm_sq, quotient: q })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthOrderMoments {
    /// `⟨Ψ^{p-3}, ρ_{1,0}⁴⟩_{L²(C)}` with `ρ_{1,0} = cosh(γt)^{-√τ_1/γ} x_N`.
    pub m4: f64,
    /// `⟨Ψ^{p-1}, ρ_{1,0}²⟩_{L²(C)}`.
    pub m2: f64,
    /// `‖Ψ‖^{p+1}_{p+1}`.
    pub psi_lp1_pow: f64,
}

pub fn fourth_order_moments(params: &CknParams) -> FourthOrderMoments {
    let p = params.p;
    let g = params.gamma;
    let nu = params.tau(1).sqrt() / g;
    let amp = ExtremalProfile::new(params).amplitude;
    let sm = sphere_moments(params.n);
    FourthOrderMoments {
        m4: amp.powf(p - 3.0) * sm.fourth * beta((p - 3.0) / (p - 1.0) + 2.0 * nu, 0.5) / g,
        m2: amp.powf(p - 1.0) * sm.second * beta(1.0 + nu, 0.5) / g,
        psi_lp1_pow: psi_norms(params).lp1_pow,
    }
}

/// `Ẑ = p(p-1)(p-2)/12 · m4 - (p-1)p² m2² / (4‖Ψ‖^{p+1}_{p+1})`, so that
/// `Q(Ψ + ε ρ_{1,0}) = λ* - Ẑ ε² / ‖ρ_{1,0}‖² + o(ε²)`.
pub fn zhat_from_moments(p: f64, m: &FourthOrderMoments) -> f64 {
    p * (p - 1.0) * (p - 2.0) / 12.0 * m.m4 - (p - 1.0) * p * p * m.m2 * m.m2 / (4.0 * m.psi_lp1_pow)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZhatReport {
    /// Closed form, regular at `p = 2`.
    pub value: f64,
    /// `c · [(p-2) B_1 - p (N+2)/N · B_2²/B_3]` with `c` the reduced prefactor.
    pub prefactor_reduced: f64,
    pub bracket_reduced: f64,
    /// Variant with `D_N = (N+2)|S^{N-1}|/N` in the bracket and a pole at `p = 2` (`None` there).
    pub value_alt: Option<f64>,
    pub at_p2: bool,
}

pub fn zhat(params: &CknParams) -> ZhatReport {
    let p = params.p;
    let nf = f64::from(params.n);
    let d = params.delta();
    let sm = sphere_moments(params.n);
    let nu = params.tau(1).sqrt() / params.gamma;
    let b1 = beta((p - 3.0) / (p - 1.0) + 2.0 * nu, 0.5);
    let b2 = beta(1.0 + nu, 0.5);
    let b3 = beta((p + 1.0) / (p - 1.0), 0.5);
    let c = d.powf((p - 5.0) / (p - 1.0)) * p * sm.area / (2.0 * nf * (nf + 2.0))
        * (0.5 * (p + 1.0)).powf((p - 3.0) / (p - 1.0));
    let bracket = (p - 2.0) * b1 - p * (nf + 2.0) / nf * b2 * b2 / b3;
    let at_p2 = (p - 2.0).abs() < 1e-12;
    let value_alt =
        (!at_p2).then(|| c * (p - 2.0) * (b1 - p * sm.d_n * b2 * b2 / ((p - 2.0) * b3)));
    ZhatReport { value: c * bracket, prefactor_reduced: c, bracket_reduced: bracket, value_alt, at_p2 }
}

/// `f̄(p) = -2D p⁴ - 2(4D-5)(2q-1)p³ - (17(2q-1) + 2D(8q-5))p² - 7(2q-1)p + 2(2q-1)`.
pub fn fbar_raw(p: f64, q_star: f64, d_n: f64) -> f64 {
    let r = 2.0 * q_star - 1.0;
    -2.0 * d_n * p.powi(4) - 2.0 * (4.0 * d_n - 5.0) * r * p.powi(3) - (17.0 * r + 2.0 * d_n * (8.0 * q_star - 5.0)) * p * p
        - 7.0 * r * p
        + 2.0 * r
}

/// `q*(a) = √(1 + (N-1)/(a_c-a)²)`.
pub fn q_star(params: &CknParams) -> f64 {
    (1.0 + (f64::from(params.n) - 1.0) / params.delta().powi(2)).sqrt()
}

pub fn fbar(params: &CknParams, p: f64) -> f64 {
    fbar_raw(p, q_star(params), sphere_moments(params.n).d_n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub region: RegionClass,
    pub q_star: f64,
    pub a_c_star2: f64,
    pub a_c_star3: f64,
    pub b_fs_star2: f64,
    /// `p > 2`, i.e. `b < b_FS**(a)`.
    pub p_above_two: bool,
    pub fbar: f64,
    pub zhat: ZhatReport,
    pub zhat_negative: bool,
}

pub fn sign_report(params: &CknParams) -> SignReport {
    let curves = curve_constants(params.n);
    let z = zhat(params);
    SignReport {
        region: params.classify(),
        q_star: q_star(params),
        a_c_star2: curves.a_c_star2,
        a_c_star3: curves.a_c_star3,
        b_fs_star2: curves.b_fs_star2(params.a),
        p_above_two: params.p > 2.0,
        fbar: fbar(params, params.p),
        zhat: z,
        zhat_negative: z.value < 0.0,
    }
}

/// Whether `Ẑ` carries a sign claim at this point.
pub fn in_remaining(params: &CknParams) -> bool {
    params.classify().region == Region::Remaining
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use crate::specfun::{polar_quadrature, QuadratureSpec};
    use crate::spectrum::{rho_02, Eigenfunction};

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn bounds_case_ii() {
        let b = bounds(&make_params(4, 0.0, 0.5).unwrap());
        assert!((b.bound_gap - 1.0 / 3.0).abs() < 1e-15);
        assert!((b.bound_two_bubble - (2.0 - 2f64.powf(0.75))).abs() < 1e-15);
        assert_eq!(b.effective, EffectiveBound::TwoBubble);
        assert!(b.bound_two_bubble_statement > b.bound_two_bubble);
    }

    #[test]
    fn third_order_quartic_and_quadrature() {
        let q = |p: f64| p.powi(4) - 6.0 * p * p + 8.0 * p - 3.0;
        assert_eq!(q(3.0), 48.0);
        assert_eq!(q(1.0), 0.0);
        for (n, a, b) in [(4, 0.0, 0.5), (3, 0.1, 0.4), (4, 0.5, 0.6)] {
            let prm = make_params(n, a, b).unwrap();
            let prof = ExtremalProfile::new(&prm);
            let area = sphere_moments(n).area;
            let spec = QuadratureSpec::for_decay(prm.delta() * (prm.p + 1.0));
            let direct = area
                * spec
                    .integrate_line(|t| prof.psi_pow(t, prm.p - 2.0) * rho_02(&prm, t).powi(3))
                    .unwrap();
            assert!(rel(third_order_coefficient(&prm), direct) < 1e-10, "{prm:?}");
        }
        let prm = make_params(4, 0.0, 0.5).unwrap();
        assert!((third_order_coefficient(&prm) - 286.903).abs() < 1e-3);
        assert!((third_order_coefficient_alt(&prm) - 242.6).abs() < 0.1);
    }

    #[test]
    fn a0_closed_form() {
        for (n, a, b) in [(4, 0.0, 0.5), (3, 0.1, 0.4), (2, -1.0, -0.2)] {
            let r = a0_coefficient(&make_params(n, a, b).unwrap()).unwrap();
            assert!(rel(r.a0, r.a0_closed) < 1e-10);
        }
    }

    #[test]
    fn overlap_of_distant_bubbles() {
        let prm = make_params(3, 0.1, 0.4).unwrap();
        let r = a0_coefficient(&prm).unwrap();
        let sp = CylinderSpace::default_for(&prm);
        let s = 14.0 / prm.gamma;
        let i = sp.overlap(&sp.psi_shifted(s), 0.0).unwrap();
        let ratio = i / (r.a0_effective * (-2.0 * prm.gamma * s / (prm.p - 1.0)).exp());
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn moments_match_two_dimensional_quadrature() {
        let prm = make_params(4, 0.0, 0.3).unwrap();
        let prof = ExtremalProfile::new(&prm);
        let f = Eigenfunction::new(&prm, 1, 0);
        let (th, w) = polar_quadrature(4, 64);
        let spec = QuadratureSpec::for_decay(2.0 * prm.tau(1).sqrt());
        let ang = |k: i32| th.iter().zip(&w).map(|(t, w)| w * t.cos().powi(k)).sum::<f64>();
        let m4 = spec.integrate_line(|t| prof.psi_pow(t, prm.p - 3.0) * f.value(t).powi(4)).unwrap() * ang(4);
        let m2 = spec.integrate_line(|t| prof.psi_pow(t, prm.p - 1.0) * f.value(t).powi(2)).unwrap() * ang(2);
        let m = fourth_order_moments(&prm);
        assert!(rel(m.m4, m4) < 1e-10 && rel(m.m2, m2) < 1e-10);
        assert!(rel(zhat(&prm).value, zhat_from_moments(prm.p, &m)) < 1e-10);
    }

    #[test]
    fn zhat_regular_through_p2() {
        let c = curve_constants(4);
        let a = -0.3;
        let b2 = c.b_fs_star2(a);
        let at = zhat(&make_params(4, a, b2).unwrap());
        assert!(at.at_p2 && at.value_alt.is_none());
        let lo = zhat(&make_params(4, a, b2 - 1e-6).unwrap()).value;
        let hi = zhat(&make_params(4, a, b2 + 1e-6).unwrap()).value;
        assert!(rel(at.value, 0.5 * (lo + hi)) < 1e-4);
        assert!(at.value < 0.0);
    }

    #[test]
    fn fbar_negative() {
        for i in 1..=40 {
            let p = 1.0 + 3.0 * f64::from(i) / 40.0;
            for &q in &[1.5, 1.8, 2.0, 3.0] {
                for &d in &[std::f64::consts::PI, 10.0, 40.0] {
                    assert!(fbar_raw(p, q, d) < 0.0);
                }
            }
        }
    }

    #[test]
    fn gap_perturbation_small_eps() {
        let prm = make_params(4, 0.0, 0.5).unwrap();
        let r = gap_perturbation_quotient(&prm, 0.01).unwrap();
        assert!(r.quotient.value < 1.0 / 3.0);
        assert!((r.quotient.value - r.predicted).abs() < 0.1 * r.slope * 0.01);
    }
}
