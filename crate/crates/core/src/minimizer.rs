//! Descent on the Bianchi-Egnell quotient
//! `Q(v) = (‖v‖²_{H¹} - C^{-1}‖v‖²_{p+1}) / dist²(v, Y)` over discretized cylinder functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinder::{CylinderFunction, CylinderSpace, ManifoldProjection};
use crate::energy::{bounds, BoundsReport};
use crate::error::{Error, Result};
use crate::params::CknParams;
use crate::spectrum::{spectral_gap, GapWinner};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Start {
    /// `Ψ + ε ρ`, with `ρ` the gap minimizer (`ρ_{0,2}` or `ρ_{1,0}`).
    GapPerturbation { eps: f64 },
    /// `Ψ + Ψ_s`.
    TwoBubble { s: f64 },
    /// `Ψ` plus smooth noise orthogonal to `Ψ, Ψ'`.
    Random { seed: u64 },
}

impl Start {
    pub fn label(&self) -> String {
        match self {
            Start::GapPerturbation { eps } => format!("gap(eps={eps})"),
            Start::TwoBubble { s } => format!("two_bubble(s={s})"),
            Start::Random { seed } => format!("random(seed={seed})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub initial: f64,
    pub grow: f64,
    pub shrink: f64,
    pub max: f64,
    pub min: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { initial: 1.0, grow: 2.0, shrink: 0.5, max: 1e3, min: 1e-12, sufficient_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub modes: Vec<u32>,
    pub start: Start,
    pub step: StepSchedule,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Steps landing at `dist² < projection_tol · ‖v‖²` are rejected.
    pub projection_tol: f64,
    /// `‖noise‖_{H¹} / ‖Ψ‖_{H¹}` for random starts.
    pub noise: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            modes: vec![0, 1],
            start: Start::GapPerturbation { eps: 0.05 },
            step: StepSchedule::default(),
            max_iter: 200,
            grad_tol: 1e-7,
            projection_tol: 1e-8,
            noise: 0.2,
        }
    }
}

impl MinimizeConfig {
    pub fn with_start(start: Start) -> Self {
        MinimizeConfig { start, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.modes.iter().any(|d| *d > 1) {
            return Err(Error::Config("mode set must be a non-empty subset of {0, 1}".into()));
        }
        match self.start {
            Start::GapPerturbation { eps } if !(eps > 0.0 && eps <= 0.2) => {
                return Err(Error::Config(format!("eps must lie in (0, 0.2] (eps = {eps})")));
            }
            Start::TwoBubble { s } if !(s.is_finite() && s > 0.0) => {
                return Err(Error::Config(format!("two-bubble separation must be positive (s = {s})")));
            }
            _ => {}
        }
        let st = &self.step;
        let positive = [st.initial, st.max, st.min, st.sufficient_decrease, self.grad_tol, self.projection_tol, self.noise];
        if self.max_iter < 1 || positive.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Config("iterations must be >= 1 and tolerances, steps and noise > 0".into()));
        }
        if !(st.shrink > 0.0 && st.shrink < 1.0 && st.grow >= 1.0 && st.min <= st.initial && st.initial <= st.max) {
            return Err(Error::Config("step schedule needs 0 < shrink < 1 <= grow and min <= initial <= max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub value: f64,
    pub numerator: f64,
    pub distance_sq: f64,
    pub norm_sq: f64,
    /// Optimal shift `s*` of the nearest bubble `c* Ψ_{s*}`.
    pub shift: f64,
    pub scalar: f64,
    pub bounds: BoundsReport,
    pub iterations: usize,
    pub grad_norm: f64,
    pub trace: Vec<(usize, f64)>,
    pub start: Option<String>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    value: f64,
    numerator: f64,
    lp1_pow: f64,
    proj: ManifoldProjection,
}

fn evaluate(space: &CylinderSpace, v: &CylinderFunction, tol: f64) -> Result<Eval> {
    let proj = space.distance_to_manifold(v)?;
    if !(proj.distance_sq > tol * proj.norm_sq) {
        return Err(Error::OnManifold { dist_sq: proj.distance_sq, norm_sq: proj.norm_sq });
    }
    let p = space.params().p;
    let lp1_pow = space.lp1_pow(v)?;
    let numerator = proj.norm_sq - space.c_inv() * lp1_pow.powf(2.0 / (p + 1.0));
    Ok(Eval { value: numerator / proj.distance_sq, numerator, lp1_pow, proj })
}

fn report(space: &CylinderSpace, e: &Eval) -> QuotientReport {
    QuotientReport {
        value: e.value,
        numerator: e.numerator,
        distance_sq: e.proj.distance_sq,
        norm_sq: e.proj.norm_sq,
        shift: e.proj.shift,
        scalar: e.proj.scalar,
        bounds: bounds(space.params()),
        iterations: 0,
        grad_norm: 0.0,
        trace: vec![(0, e.value)],
        start: None,
        converged: false,
    }
}

/// `Q(v)`; fails with `OnManifold` when `dist² <= 1e-10 ‖v‖²`.
pub fn quotient(space: &CylinderSpace, v: &CylinderFunction) -> Result<QuotientReport> {
    Ok(report(space, &evaluate(space, v, 1e-10)?))
}

/// `2h Kφ_i` per mode: coordinate gradient of `‖v‖²_{H¹}`.
fn norm_gradient(space: &CylinderSpace, v: &CylinderFunction) -> CylinderFunction {
    let h = space.grid().spacing();
    let mut out = space.zero();
    for (d, phi) in &v.modes {
        let k: Vec<f64> = space.apply_stiffness(*d, phi).into_iter().map(|x| 2.0 * h * x).collect();
        out.modes.insert(*d, k);
    }
    out
}

/// Coordinate gradient of the numerator `‖v‖²_{H¹} - C^{-1}‖v‖²_{p+1}`.
pub fn numerator_gradient(space: &CylinderSpace, v: &CylinderFunction) -> Result<(f64, CylinderFunction)> {
    let p = space.params().p;
    let g = norm_gradient(space, v);
    let (lp, glp) = space.lp1_pow_with_gradient(v)?;
    let c = space.c_inv() * 2.0 / (p + 1.0) * lp.powf((1.0 - p) / (p + 1.0));
    let value = space.h1_norm_sq(v)? - space.c_inv() * lp.powf(2.0 / (p + 1.0));
    Ok((value, g.axpy(-c, &glp)?))
}

fn gradient_at(space: &CylinderSpace, v: &CylinderFunction, e: &Eval) -> Result<CylinderFunction> {
    let p = space.params().p;
    let h = space.grid().spacing();
    let g_norm = norm_gradient(space, v);
    let (_, glp) = space.lp1_pow_with_gradient(v)?;
    let c = space.c_inv() * 2.0 / (p + 1.0) * e.lp1_pow.powf((1.0 - p) / (p + 1.0));
    let g_num = g_norm.axpy(-c, &glp)?;
    // Envelope: d/dv [O(s*)²/M] = 2 O(s*) ∇O(s*) / M with s* frozen.
    let prof = *space.profile();
    let w = 2.0 * e.proj.overlap / space.psi_lp1_pow() * h;
    let s = e.proj.shift;
    let overlap_grad = space.radial(move |t| prof.psi_pow(t - s, p)).scaled(w);
    let g_dist = g_norm.axpy(-1.0, &overlap_grad)?;
    Ok(g_num.axpy(-e.value, &g_dist)?.scaled(1.0 / e.proj.distance_sq))
}

/// `Q(v)` and its coordinate gradient.
pub fn quotient_gradient(space: &CylinderSpace, v: &CylinderFunction) -> Result<(QuotientReport, CylinderFunction)> {
    let e = evaluate(space, v, 1e-10)?;
    let g = gradient_at(space, v, &e)?;
    Ok((report(space, &e), g))
}

fn restrict_modes(space: &CylinderSpace, v: &CylinderFunction, modes: &[u32]) -> CylinderFunction {
    let mut out = space.zero();
    for d in modes {
        let prof = v.modes.get(d).cloned().unwrap_or_else(|| vec![0.0; space.grid().nodes]);
        out.modes.insert(*d, prof);
    }
    out
}

fn normalize(space: &CylinderSpace, v: &CylinderFunction) -> Result<CylinderFunction> {
    let n = space.lp1_norm(v)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain(format!("cannot normalize a function with ||v||_(p+1) = {n}")));
    }
    Ok(v.scaled(1.0 / n))
}

/// Smooth noise in the given modes, orthogonal to `Ψ, Ψ'` and scaled to `‖η‖_{H¹} = amplitude ‖Ψ‖_{H¹}`.
pub fn random_perturbation(space: &CylinderSpace, modes: &[u32], seed: u64, amplitude: f64) -> Result<CylinderFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = space.params().gamma;
    let mut out = space.zero();
    for d in modes {
        let white: Vec<f64> = (0..space.grid().nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let smooth = space.apply_inverse_stiffness(*d, &space.apply_inverse_stiffness(*d, &white));
        let prof = smooth
            .iter()
            .enumerate()
            .map(|(k, x)| x / (0.5 * g * space.grid().t(k)).cosh())
            .collect();
        out.modes.insert(*d, prof);
    }
    let out = space.m_perp_project(&out)?;
    let n = space.h1_norm_sq(&out)?.sqrt();
    Ok(out.scaled(amplitude * space.psi_lp1_pow().sqrt() / n))
}

/// The starting function of a recipe.
pub fn start_function(space: &CylinderSpace, config: &MinimizeConfig) -> Result<CylinderFunction> {
    config.validate()?;
    let psi = space.psi();
    match config.start {
        Start::GapPerturbation { eps } => {
            let params = space.params();
            let rho = match spectral_gap(params).winner {
                GapWinner::Lambda10 if config.modes.contains(&1) => space.rho_10(),
                _ => space.rho_02(),
            };
            psi.axpy(eps, &rho)
        }
        Start::TwoBubble { s } => {
            if s > 0.5 * space.grid().half_width {
                return Err(Error::Config(format!(
                    "two-bubble separation {s} exceeds half the grid half-width {}",
                    space.grid().half_width
                )));
            }
            psi.add(&space.psi_shifted(s))
        }
        Start::Random { seed } => psi.add(&random_perturbation(space, &config.modes, seed, config.noise)?),
    }
}

/// Preconditioned descent with backtracking, starting from `config.start`.
pub fn minimize_quotient(config: &MinimizeConfig, params: &CknParams) -> Result<QuotientReport> {
    let space = CylinderSpace::default_for(params);
    let v = start_function(&space, config)?;
    minimize_from(&space, config, &v)
}

/// Descent from an explicit starting function; `config.start` only labels the report.
pub fn minimize_from(space: &CylinderSpace, config: &MinimizeConfig, v0: &CylinderFunction) -> Result<QuotientReport> {
    config.validate()?;
    let h = space.grid().spacing();
    let tol = config.projection_tol;
    let mut v = normalize(space, &restrict_modes(space, v0, &config.modes))?;
    let mut e = evaluate(space, &v, tol)?;
    let mut trace = vec![(0, e.value)];
    let mut step = config.step.initial;
    let mut grad_norm = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iter {
        let g = gradient_at(space, &v, &e)?;
        let mut dir = space.zero();
        for (deg, gp) in &g.modes {
            let pre: Vec<f64> = space.apply_inverse_stiffness(*deg, gp).into_iter().map(|x| -x / h).collect();
            dir.modes.insert(*deg, pre);
        }
        let slope = g.euclid_dot(&dir);
        grad_norm = (-slope).max(0.0).sqrt();
        if grad_norm < config.grad_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        while step >= config.step.min {
            let trial = normalize(space, &v.axpy(step, &dir)?)?;
            match evaluate(space, &trial, tol) {
                Ok(te) if te.value <= e.value + config.step.sufficient_decrease * step * slope => {
                    accepted = Some((trial, te));
                    break;
                }
                Ok(_) | Err(Error::OnManifold { .. }) => step *= config.step.shrink,
                Err(err) => return Err(err),
            }
        }
        let Some((nv, ne)) = accepted else {
            if it == 0 {
                return Err(Error::NoDescent { grad_norm });
            }
            break;
        };
        v = nv;
        e = ne;
        iterations = it + 1;
        trace.push((iterations, e.value));
        step = (step * config.step.grow).min(config.step.max);
    }
    let mut out = report(space, &e);
    out.iterations = iterations;
    out.grad_norm = grad_norm;
    out.trace = trace;
    out.start = Some(config.start.label());
    out.converged = converged;
    Ok(out)
}

/// The recipe set: gap perturbations at three `ε`, two-bubble at `s ∈ {8, 10}/γ`, and `starts` random seeds.
pub fn recipes(params: &CknParams, starts: usize, seed: u64) -> Vec<Start> {
    let mut out: Vec<Start> = [0.05, 0.02, 0.005].into_iter().map(|eps| Start::GapPerturbation { eps }).collect();
    out.extend([8.0, 10.0].into_iter().map(|k| Start::TwoBubble { s: k / params.gamma }));
    out.extend((0..starts as u64).map(|i| Start::Random { seed: seed.wrapping_add(i) }));
    out
}

/// Multi-start estimate of `c_BE`: the lowest exit quotient over [`recipes`].
pub fn estimate_cbe(params: &CknParams, starts: usize, seed: u64) -> Result<QuotientReport> {
    estimate_cbe_with(params, starts, seed, &MinimizeConfig::default())
}

pub fn estimate_cbe_with(params: &CknParams, starts: usize, seed: u64, base: &MinimizeConfig) -> Result<QuotientReport> {
    let space = CylinderSpace::default_for(params);
    let runs: Vec<Result<QuotientReport>> = recipes(params, starts, seed)
        .into_par_iter()
        .map(|start| {
            let cfg = MinimizeConfig { start, ..base.clone() };
            minimize_from(&space, &cfg, &start_function(&space, &cfg)?)
        })
        .collect();
    let mut best: Option<QuotientReport> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = best.ok_or_else(|| first_err.expect("recipe set is never empty"))?;
    let limit = best.bounds.bound_gap.min(best.bounds.bound_two_bubble) + 1e-3;
    if !(best.value > 0.0 && best.value <= limit) {
        return Err(Error::Convergence(format!(
            "best quotient {} outside (0, {limit}] required by the proved bounds",
            best.value
        )));
    }
    Ok(best)
}
