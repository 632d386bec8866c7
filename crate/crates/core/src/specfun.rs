//! Special functions and quadrature.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gamma function. The Lanczos sum is evaluated on `[1, 2]` only and carried
/// elsewhere by the recurrence, which holds it near 1e-15 relative up to `x = 170`.
pub fn gamma(x: f64) -> f64 {
    if !(x > 0.0) || x > 171.0 {
        return statrs::function::gamma::gamma(x);
    }
    let mut x = x;
    let mut scale = 1.0;
    while x < 1.0 {
        scale /= x;
        x += 1.0;
    }
    while x > 2.0 {
        x -= 1.0;
        scale *= x;
    }
    scale * statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    if x > 0.0 && x < 100.0 {
        gamma(x).ln()
    } else {
        statrs::function::gamma::ln_gamma(x)
    }
}

/// Euler Beta function.
pub fn beta(x: f64, y: f64) -> f64 {
    if x + y < 140.0 {
        gamma(x) * gamma(y) / gamma(x + y)
    } else {
        (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
    }
}

/// `B(m, n)` via `B(m,n) = (m-1)/(m-1+n) B(m-1,n)`, down to `m` in `(1, 2]`.
pub fn beta_reduction(m: f64, n: f64) -> Result<f64> {
    if !(m > 1.0) || !(n > 0.0) || !m.is_finite() || !n.is_finite() {
        return Err(Error::Domain(format!("beta_reduction needs m > 1, n > 0 (m = {m}, n = {n})")));
    }
    let mut m = m;
    let mut factor = 1.0;
    while m > 2.0 {
        factor *= (m - 1.0) / (m - 1.0 + n);
        m -= 1.0;
    }
    Ok(factor * beta(m, n))
}

/// `∫_R cosh(s)^{-alpha} (cosh(s)^2 - 1)^{beta_exp} ds = B(alpha/2 - beta_exp, beta_exp + 1/2)`.
pub fn cosh_power_integral(alpha: f64, beta_exp: f64) -> Result<f64> {
    if !(alpha / 2.0 > beta_exp) || !(beta_exp > -0.5) {
        return Err(Error::Domain(format!(
            "cosh_power_integral needs alpha/2 > beta > -1/2 (alpha = {alpha}, beta = {beta_exp})"
        )));
    }
    Ok(beta(alpha / 2.0 - beta_exp, beta_exp + 0.5))
}

/// `∫_R cosh(γt)^{-c} dt = B(c/2, 1/2) / γ`.
pub fn sech_power_integral(c: f64, gamma_rate: f64) -> f64 {
    beta(0.5 * c, 0.5) / gamma_rate
}

/// Generalized binomial coefficient `C(x, k)` for real `x`.
pub fn binomial(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x - f64::from(i)) / f64::from(i + 1))
}

/// Jacobi polynomial `P_j^{(ν,ν)}(y)`, i.e.
/// `(-1)^j / (2^j j!) (1-y²)^{-ν} d^j/dy^j (1-y²)^{j+ν}`.
pub fn jacobi_polynomial(j: u32, exponent: f64, y: f64) -> f64 {
    jacobi_coefficients(j, exponent)
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * y + c)
}

/// `d/dy P_j^{(ν,ν)}(y) = (j + 2ν + 1)/2 · P_{j-1}^{(ν+1,ν+1)}(y)`.
pub fn jacobi_derivative(j: u32, exponent: f64, y: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    0.5 * (f64::from(j) + 2.0 * exponent + 1.0) * jacobi_polynomial(j - 1, exponent + 1.0, y)
}

/// Monomial coefficients of `P_j^{(ν,ν)}`, lowest degree first, from
/// `P = Σ_s C(j+ν, j-s) C(j+ν, s) ((y-1)/2)^s ((y+1)/2)^{j-s}`.
pub fn jacobi_coefficients(j: u32, exponent: f64) -> Vec<f64> {
    let n = j as usize;
    let top = f64::from(j) + exponent;
    let mut out = vec![0.0; n + 1];
    for s in 0..=j {
        let c = binomial(top, j - s) * binomial(top, s) / 2f64.powi(j as i32);
        // (y-1)^s (y+1)^{j-s}
        let mut poly = vec![1.0];
        for _ in 0..s {
            poly = mul_linear(&poly, -1.0);
        }
        for _ in s..j {
            poly = mul_linear(&poly, 1.0);
        }
        for (o, q) in out.iter_mut().zip(&poly) {
            *o += c * q;
        }
    }
    out
}

// poly * (y + r)
fn mul_linear(poly: &[f64], r: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (k, &c) in poly.iter().enumerate() {
        out[k] += r * c;
        out[k + 1] += c;
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tolerances and truncation for line integrals of exponentially decaying integrands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integrate over `[-half_width, half_width]`.
    pub half_width: f64,
    /// Maximum number of integrand evaluations.
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-13, half_width: 40.0, max_nodes: 200_000 }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, half_width: f64, max_nodes: usize) -> Result<Self> {
        let spec = QuadratureSpec { abs_tol, rel_tol, half_width, max_nodes };
        spec.validate()?;
        Ok(spec)
    }

    /// Window wide enough that an integrand bounded by `e^{-rate |t|}` drops below `1e-17` (relative).
    pub fn for_decay(rate: f64) -> Self {
        QuadratureSpec { half_width: 40.0 / rate, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Config("quadrature half-width must be positive".into()));
        }
        if self.max_nodes < 16 {
            return Err(Error::Config("quadrature node budget must be at least 16".into()));
        }
        Ok(())
    }

    /// `∫_{-T}^{T} f`.
    pub fn integrate_line<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.validate()?;
        let t = self.half_width;
        // Split at zero so symmetric peaks sit on a panel edge.
        let left = integrate_adaptive(&f, -t, 0.0, 0.5 * self.abs_tol, self.rel_tol, self.max_nodes / 2)?;
        let right = integrate_adaptive(&f, 0.0, t, 0.5 * self.abs_tol, self.rel_tol, self.max_nodes / 2)?;
        Ok(left + right)
    }
}

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx) + f(c + dx);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on `[a, b]`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let (v, e) = kronrod15(f, a, b);
    let (mut total, mut err) = (v, e);
    heap.push(Panel { a, b, value: v, err: e });
    let mut evals = 15;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if evals + 30 > max_evals {
            return Err(Error::Convergence(format!(
                "adaptive quadrature on [{a}, {b}] stopped at error {err:e} after {evals} evaluations"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod15(f, worst.a, m);
        let (v2, e2) = kronrod15(f, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, value: v2, err: e2 });
        if err < 0.0 || !err.is_finite() {
            err = heap.iter().map(|p| p.err).sum();
        }
    }
    // Re-sum to shed drift from the running updates.
    Ok(heap.iter().map(|p| p.value).sum())
}

/// `|S^{N-1}| = 2 π^{N/2} / Γ(N/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let h = 0.5 * f64::from(n);
    2.0 * PI.powf(h) / gamma(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMoments {
    pub area: f64,
    /// `∫_S θ_N² = |S|/N`.
    pub second: f64,
    /// `∫_S θ_N⁴ = 3|S|/(N(N+2))`.
    pub fourth: f64,
    /// `(N+2)|S|/N`.
    pub d_n: f64,
}

pub fn sphere_moments(n: u32) -> SphereMoments {
    let area = sphere_area(n);
    let nf = f64::from(n);
    SphereMoments {
        area,
        second: area / nf,
        fourth: 3.0 * area / (nf * (nf + 2.0)),
        d_n: (nf + 2.0) * area / nf,
    }
}

/// Zonal harmonic of degree `i` on `S^{N-1}`, orthonormal in `L²(S^{N-1})`,
/// as a function of the polar angle `θ ∈ [0, π]`.
pub fn zonal_harmonic(n: u32, degree: u32, theta: f64) -> f64 {
    zonal_norm(n, degree) * zonal_raw(n, degree, theta)
}

fn zonal_raw(n: u32, degree: u32, theta: f64) -> f64 {
    if n == 2 {
        return (f64::from(degree) * theta).cos();
    }
    let lam = 0.5 * (f64::from(n) - 2.0);
    let x = theta.cos();
    let (mut c0, mut c1) = (1.0, 2.0 * lam * x);
    if degree == 0 {
        return c0;
    }
    for k in 1..degree {
        let kf = f64::from(k);
        let c2 = (2.0 * x * (kf + lam) * c1 - (kf + 2.0 * lam - 1.0) * c0) / (kf + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

fn zonal_norm(n: u32, degree: u32) -> f64 {
    let i = f64::from(degree);
    let rim = sphere_area(n - 1);
    let sq = if n == 2 {
        if degree == 0 {
            2.0 * PI
        } else {
            PI
        }
    } else {
        let lam = 0.5 * (f64::from(n) - 2.0);
        let ln = (1.0 - 2.0 * lam) * 2f64.ln() + ln_gamma(i + 2.0 * lam)
            - ln_gamma(i + 1.0)
            - (i + lam).ln()
            - 2.0 * ln_gamma(lam);
        rim * PI * ln.exp()
    };
    1.0 / sq.sqrt()
}

/// Gauss-Legendre rule for `∫_{S^{N-1}} f(θ) dσ` with `f` zonal:
/// nodes in `θ ∈ (0, π)`, weights `|S^{N-2}| sin^{N-2}θ`.
pub fn polar_quadrature(n: u32, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes);
    let rim = sphere_area(n - 1);
    let half = 0.5 * PI;
    let thetas: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
    let weights = thetas
        .iter()
        .zip(&w)
        .map(|(&th, &wi)| rim * half * wi * th.sin().powi(n as i32 - 2))
        .collect();
    (thetas, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs().max(1e-300)
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.5;
        while x < 20.0 {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "{x}");
            x += 0.173;
        }
    }

    #[test]
    fn beta_examples() {
        assert!(rel(beta_reduction(2.0, 0.5).unwrap(), 4.0 / 3.0) < 1e-14);
        assert!(rel(beta_reduction(4.0, 0.5).unwrap(), 32.0 / 35.0) < 1e-14);
        assert!(beta_reduction(1.0, 0.5).is_err());
        assert!(beta_reduction(2.0, 0.0).is_err());
        assert!(rel(beta(200.0, 0.5), (ln_gamma(200.0) + ln_gamma(0.5) - ln_gamma(200.5)).exp()) < 1e-12);
    }

    #[test]
    fn cosh_power_examples() {
        assert!(rel(cosh_power_integral(2.0, 0.0).unwrap(), 2.0) < 1e-14);
        assert!(rel(cosh_power_integral(4.0, 0.0).unwrap(), 4.0 / 3.0) < 1e-14);
        assert!(cosh_power_integral(1.0, 0.5).is_err());
        assert!(cosh_power_integral(4.0, -0.5).is_err());
        let q = QuadratureSpec::for_decay(5.2 - 1.4)
            .integrate_line(|s: f64| s.cosh().powf(-5.2) * s.sinh().abs().powf(1.4))
            .unwrap();
        assert!(rel(cosh_power_integral(5.2, 0.7).unwrap(), q) < 1e-10);
    }

    #[test]
    fn jacobi_low_degrees() {
        for &nu in &[0.3, 1.0, 2.7] {
            for k in 0..5 {
                let y = -0.9 + 0.45 * f64::from(k);
                assert_eq!(jacobi_polynomial(0, nu, y), 1.0);
                assert!((jacobi_polynomial(1, nu, y) - (nu + 1.0) * y).abs() < 1e-14);
                // (ν+2)/4 ((2ν+3) y² - 1)
                let p2 = 0.25 * (nu + 2.0) * ((2.0 * nu + 3.0) * y * y - 1.0);
                assert!((jacobi_polynomial(2, nu, y) - p2).abs() < 1e-13);
            }
        }
        // Legendre case
        assert!((jacobi_polynomial(3, 0.0, 0.4) - 0.5 * (5.0 * 0.064 - 3.0 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn jacobi_derivative_matches_difference() {
        let h = 1e-5;
        for j in 1..5 {
            let y = 0.37;
            let fd = (jacobi_polynomial(j, 1.3, y + h) - jacobi_polynomial(j, 1.3, y - h)) / (2.0 * h);
            assert!((jacobi_derivative(j, 1.3, y) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!(rel(s, 2.0 / 19.0) < 1e-14);
        assert!(rel(w.iter().sum::<f64>(), 2.0) < 1e-15);
    }

    #[test]
    fn sphere_tables() {
        assert!(rel(sphere_moments(2).d_n, 4.0 * PI) < 1e-14);
        assert!(rel(sphere_moments(3).d_n, 20.0 * PI / 3.0) < 1e-14);
        assert!(rel(sphere_moments(4).d_n, 3.0 * PI * PI) < 1e-14);
        assert!(rel(sphere_moments(5).d_n, 56.0 * PI * PI / 15.0) < 1e-14);
        assert!(rel(sphere_area(3), 4.0 * PI) < 1e-14);
        assert!(rel(sphere_moments(3).second, 4.0 * PI / 3.0) < 1e-14);
        assert!(rel(sphere_area(1), 2.0) < 1e-14);
    }

    #[test]
    fn zonal_harmonics_orthonormal() {
        for n in 2..7u32 {
            let (th, w) = polar_quadrature(n, 48);
            assert!(rel(w.iter().sum::<f64>(), sphere_area(n)) < 1e-13);
            for i in 0..4 {
                for k in 0..4 {
                    let s: f64 = th
                        .iter()
                        .zip(&w)
                        .map(|(&t, &wt)| wt * zonal_harmonic(n, i, t) * zonal_harmonic(n, k, t))
                        .sum();
                    let want = if i == k { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12, "N={n} i={i} k={k} {s}");
                }
            }
            // degree one is sqrt(N/|S|) x_N
            let y1 = zonal_harmonic(n, 1, 0.4);
            assert!(rel(y1, (f64::from(n) / sphere_area(n)).sqrt() * 0.4f64.cos()) < 1e-13);
        }
    }
}
