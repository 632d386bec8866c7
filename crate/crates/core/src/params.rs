//! Parameter points `(N, a, b)`, the curves that split the admissible
//! region, and the region classification.
//!
//! A point is admissible when `N >= 2`, `a < a_c = (N-2)/2`, `b < a + 1` and
//! either
//!
//! 1. `a < 0` and `b_FS(a) < b`, or
//! 2. `0 <= a`, `a <= b` and `a + b > 0`.
//!
//! On the Felli-Schneider curve `b = b_FS(a)` (only reachable for `a < 0`)
//! the extremal is degenerate and every gap formula breaks down, so such
//! points are rejected with [`Error::DegenerateBoundary`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance to `b_FS(a)` below which a point counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Distance to a region boundary below which the point is flagged as a tie.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A validated parameter point together with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknParams {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    /// `(N - 2) / 2`.
    pub a_c: f64,
    /// `(N + 2(1+a-b)) / (N - 2(1+a-b))`.
    pub p: f64,
    /// `(p - 1)(a_c - a) / 2`, the decay rate of the cylinder profile.
    pub gamma: f64,
    /// `p(p + 1)(a_c - a)^2 / 2`, the depth of the linearized potential.
    pub beta: f64,
}

impl CknParams {
    /// `a_c - a`.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.a_c - self.a
    }

    /// Eigenvalue of `-Δ_S + (a_c - a)^2` on degree-`i` spherical harmonics.
    #[inline]
    pub fn tau(&self, degree: u32) -> f64 {
        let i = f64::from(degree);
        let d = self.delta();
        d * d + i * (f64::from(self.n) - 2.0 + i)
    }

    pub fn curves(&self) -> CurveConstants {
        curve_constants(self.n)
    }

    pub fn classify(&self) -> RegionClass {
        classify(self)
    }
}

/// Exponent `p` as a function of `(N, a, b)`, without any validation.
#[inline]
pub fn exponent_p(n: u32, a: f64, b: f64) -> f64 {
    let nf = f64::from(n);
    let k = 1.0 + a - b;
    (nf + 2.0 * k) / (nf - 2.0 * k)
}

/// Validate `(N, a, b)` and compute the derived constants.
pub fn make_params(n: u32, a: f64, b: f64) -> Result<CknParams> {
    if n < 2 {
        return Err(Error::Invalid(format!("N >= 2 violated (N = {n})")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Invalid("a and b must be finite".into()));
    }
    let a_c = (f64::from(n) - 2.0) / 2.0;
    if a >= a_c {
        return Err(Error::Invalid(format!("a < a_c violated (a = {a}, a_c = {a_c})")));
    }
    if b >= a + 1.0 {
        return Err(Error::Invalid(format!("b < a+1 violated (a = {a}, b = {b})")));
    }
    if a < 0.0 {
        let b_fs = fs_curve(n, a);
        let distance = (b - b_fs).abs();
        if distance < DEGENERACY_TOL {
            return Err(Error::DegenerateBoundary { b_fs, distance });
        }
        if b < b_fs {
            return Err(Error::Invalid(format!(
                "b > b_FS(a) violated (b = {b}, b_FS(a) = {b_fs}); extremals are non-radial there"
            )));
        }
    } else {
        if b < a {
            return Err(Error::Invalid(format!("a <= b violated (a = {a}, b = {b})")));
        }
        if a + b <= 0.0 {
            return Err(Error::Invalid(format!("a + b > 0 violated (a = {a}, b = {b})")));
        }
    }

    let p = exponent_p(n, a, b);
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Invalid(format!("p > 1 violated (p = {p})")));
    }
    let delta = a_c - a;
    Ok(CknParams {
        n,
        a,
        b,
        a_c,
        p,
        gamma: 0.5 * (p - 1.0) * delta,
        beta: 0.5 * p * (p + 1.0) * delta * delta,
    })
}

fn fs_curve(n: u32, a: f64) -> f64 {
    let nf = f64::from(n);
    let a_c = (nf - 2.0) / 2.0;
    let d = a_c - a;
    nf * d / (2.0 * (d * d + nf - 1.0).sqrt()) + a - a_c
}

/// The Felli-Schneider curve `b_FS(a)`.
pub fn felli_schneider(n: u32, a: f64) -> Result<f64> {
    let a_c = (f64::from(n) - 2.0) / 2.0;
    if n < 2 || !(a < a_c) {
        return Err(Error::Domain(format!("b_FS(a) needs a < a_c (a = {a}, a_c = {a_c})")));
    }
    Ok(fs_curve(n, a))
}

/// Dimension-dependent thresholds and the curves built from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConstants {
    pub n: u32,
    pub a_c: f64,
    /// `(1 - sqrt((N-1)/(2N))) a_c`: left of it the degree-one mode can win.
    pub a_c_star: f64,
    /// `a_c - 2 sqrt(N-1) / sqrt(5)`.
    pub a_c_star2: f64,
    /// `a_c - sqrt(N-1) / sqrt(3)`.
    pub a_c_star3: f64,
}

impl CurveConstants {
    fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn b_fs(&self, a: f64) -> f64 {
        fs_curve(self.n, a)
    }

    /// `b_FS*(a)`, where `λ_{0,2} = λ_{1,0}`.
    pub fn b_fs_star(&self, a: f64) -> f64 {
        let d = self.a_c - a;
        let nf = self.nf();
        d * nf / (d + (d * d + nf - 1.0).sqrt()) + a - self.a_c
    }

    /// `b_FS**(a) = a - a_c + N/3`, the line `p = 2`.
    pub fn b_fs_star2(&self, a: f64) -> f64 {
        a - self.a_c + self.nf() / 3.0
    }
}

pub fn curve_constants(n: u32) -> CurveConstants {
    let nf = f64::from(n);
    let a_c = (nf - 2.0) / 2.0;
    let s = (nf - 1.0).sqrt();
    CurveConstants {
        n,
        a_c,
        a_c_star: (1.0 - ((nf - 1.0) / (2.0 * nf)).sqrt()) * a_c,
        a_c_star2: a_c - 2.0 * s / 5f64.sqrt(),
        a_c_star3: a_c - s / 3f64.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `a_c* < a < a_c`, any admissible `b`.
    CaseI,
    /// `a <= a_c*` and `b_FS*(a) <= b < a + 1`.
    CaseII,
    /// `a < a_c*` and `b_FS(a) < b < b_FS*(a)`; the degree-one mode carries the gap.
    Remaining,
    DegenerateBoundary,
    Invalid,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::CaseI => "CaseI",
            Region::CaseII => "CaseII",
            Region::Remaining => "Remaining",
            Region::DegenerateBoundary => "DegenerateBoundary",
            Region::Invalid => "Invalid",
        }
    }

    /// Regions in which a minimizer is known to exist.
    pub fn has_minimizer(&self) -> bool {
        matches!(self, Region::CaseI | Region::CaseII)
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Region of a point with the curve values that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionClass {
    pub region: Region,
    pub a_c_star: f64,
    /// `None` when `a >= a_c`, where the curves are undefined.
    pub b_fs: Option<f64>,
    pub b_fs_star: Option<f64>,
    /// `a` equals `a_c*` within [`BOUNDARY_TOL`]; the CaseII branch of the gap was used.
    pub at_a_c_star: bool,
    /// `b` equals `b_FS*(a)` within [`BOUNDARY_TOL`]; both gap branches coincide.
    pub on_b_fs_star: bool,
    /// Violated condition for invalid points.
    pub reason: Option<String>,
}

/// Region of a valid point.
pub fn classify(params: &CknParams) -> RegionClass {
    let curves = params.curves();
    let a = params.a;
    let b_fs = curves.b_fs(a);
    let b_fs_star = curves.b_fs_star(a);
    let at_a_c_star = (a - curves.a_c_star).abs() <= BOUNDARY_TOL;
    let on_b_fs_star = (params.b - b_fs_star).abs() <= BOUNDARY_TOL;
    let region = if a > curves.a_c_star {
        Region::CaseI
    } else if params.b >= b_fs_star {
        Region::CaseII
    } else {
        Region::Remaining
    };
    RegionClass {
        region,
        a_c_star: curves.a_c_star,
        b_fs: Some(b_fs),
        b_fs_star: Some(b_fs_star),
        at_a_c_star,
        on_b_fs_star,
        reason: None,
    }
}

/// Total classification of an arbitrary `(N, a, b)`, including invalid and degenerate points.
pub fn region_of(n: u32, a: f64, b: f64) -> RegionClass {
    match make_params(n, a, b) {
        Ok(params) => classify(&params),
        Err(err) => {
            let curves = curve_constants(n.max(2));
            let defined = n >= 2 && a < curves.a_c;
            let region = match err {
                Error::DegenerateBoundary { .. } => Region::DegenerateBoundary,
                _ => Region::Invalid,
            };
            RegionClass {
                region,
                a_c_star: curves.a_c_star,
                b_fs: defined.then(|| curves.b_fs(a)),
                b_fs_star: defined.then(|| curves.b_fs_star(a)),
                at_a_c_star: false,
                on_b_fs_star: false,
                reason: Some(err.to_string()),
            }
        }
    }
}
