//! λ-mixtures of dilated Lévy measures and their integrability criteria.
//!
//! For a Borel measure λ on (0,∞), the λ-mixture of M is
//!
//! ```text
//! M^{(λ)}(A) = ∫₀^∞ (T_t M)(A) λ(dt) = ∫₀^∞ ∫ 1_A(tx) M(dx) λ(dt).
//! ```
//!
//! On Hilbert space the mixture is again a Lévy measure iff
//!
//! ```text
//! ∫₀^∞ [ t² ∫_{0<‖x‖≤1/t} ‖x‖² M(dx) + M({‖x‖ > 1/t}) ] λ(dt) < ∞,
//! ```
//!
//! with a first-moment variant that is sufficient (not necessary) on Banach
//! spaces. Point-mass mixings produce the exact finite combination
//! Σ cᵢ T_{tᵢ} M; continuous mixings stay lazy and integrate by nesting
//! (inner over M, outer over λ).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::levy_core::{LevyMeasure, ValidityReport};
use crate::linalg;
use crate::quad::{self, IntegrandValue, Quad, QuadTol};
use crate::specfun;

#[derive(Debug, Error)]
pub enum MixingError {
    #[error("mixture is not a Lévy spectral measure (criterion value {criterion})")]
    NotLevyMixture { criterion: f64 },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("alpha must lie in (0,2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("quadrature did not converge while {context}")]
    NonConvergedQuadrature { context: String },
    #[error("invalid mixing measure: {0}")]
    InvalidMixing(String),
}

/// Borel measure λ on (0, ∞), finite on every (a, ∞) with a > 0.
#[derive(Clone)]
pub enum MixingMeasure {
    /// Σ cᵢ δ_{tᵢ} with tᵢ > 0, cᵢ > 0.
    PointMasses(Vec<(f64, f64)>),
    /// e(dt) = e^{-t} dt.
    Exponential,
    /// ρ_α(dt) = t^{-α-1} e^{-t} dt, 0 < α < 2.
    RhoAlpha { alpha: f64 },
    /// Arbitrary nonnegative density on (t_min, t_max).
    GeneralDensity {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        t_min: f64,
        t_max: f64,
        label: String,
    },
}

impl fmt::Debug for MixingMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingMeasure::PointMasses(pm) => write!(f, "PointMasses({pm:?})"),
            MixingMeasure::Exponential => write!(f, "Exponential"),
            MixingMeasure::RhoAlpha { alpha } => write!(f, "RhoAlpha {{ alpha: {alpha} }}"),
            MixingMeasure::GeneralDensity { label, t_min, t_max, .. } => {
                write!(f, "GeneralDensity {{ label: {label:?}, support: ({t_min}, {t_max}) }}")
            }
        }
    }
}

impl MixingMeasure {
    /// Unit mass at t.
    pub fn delta(t: f64) -> Self {
        MixingMeasure::PointMasses(vec![(t, 1.0)])
    }

    pub fn rho_alpha(alpha: f64) -> Result<Self, MixingError> {
        if !(0.0 < alpha && alpha < 2.0) {
            return Err(MixingError::AlphaOutOfRange(alpha));
        }
        Ok(MixingMeasure::RhoAlpha { alpha })
    }

    pub fn density(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_min: f64,
        t_max: f64,
        label: impl Into<String>,
    ) -> Self {
        MixingMeasure::GeneralDensity {
            density: Arc::new(density),
            t_min,
            t_max,
            label: label.into(),
        }
    }

    /// Structural validity plus finiteness of Λ on (a, ∞) for
    /// a ∈ {1e-6, 1, 1e3}.
    pub fn validate(&self) -> Result<(), MixingError> {
        match self {
            MixingMeasure::PointMasses(pm) => {
                if pm.iter().any(|(t, c)| !(*t > 0.0) || !(*c > 0.0)) {
                    return Err(MixingError::InvalidMixing(
                        "point masses need t > 0 and mass > 0".into(),
                    ));
                }
            }
            MixingMeasure::Exponential => {}
            MixingMeasure::RhoAlpha { alpha } => {
                if !(0.0 < *alpha && *alpha < 2.0) {
                    return Err(MixingError::AlphaOutOfRange(*alpha));
                }
            }
            MixingMeasure::GeneralDensity { t_min, t_max, .. } => {
                if !(*t_min >= 0.0 && t_max > t_min) {
                    return Err(MixingError::InvalidMixing("bad density support".into()));
                }
            }
        }
        for a in [1e-6, 1.0, 1e3] {
            let tail = self.tail(a);
            if !tail.is_finite() {
                return Err(MixingError::InvalidMixing(format!(
                    "Λ({a}) is not finite"
                )));
            }
        }
        Ok(())
    }

    /// Tail function Λ(t) = λ({s > t}).
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            MixingMeasure::PointMasses(pm) => {
                pm.iter().filter(|(s, _)| *s > t).map(|(_, c)| c).sum()
            }
            MixingMeasure::Exponential => (-t).exp(),
            MixingMeasure::RhoAlpha { alpha } => {
                if t <= 0.0 {
                    f64::INFINITY
                } else {
                    specfun::upper_inc_gamma(-alpha, t)
                }
            }
            MixingMeasure::GeneralDensity { density, t_min, t_max, .. } => {
                let lo = t.max(*t_min);
                if lo >= *t_max {
                    return 0.0;
                }
                let d = density.clone();
                let q = quad::integrate_interval(&mut |s| d(s), lo, *t_max, QuadTol::INNER, &[]);
                if q.divergent {
                    f64::INFINITY
                } else {
                    q.value
                }
            }
        }
    }

    /// k-th moment ∫₀^∞ t^k λ(dt); returns ∞ when divergent.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            MixingMeasure::PointMasses(pm) => {
                pm.iter().map(|(t, c)| t.powi(k as i32) * c).sum()
            }
            // ∫ t^k e^{-t} dt = k!, kept exact in integer arithmetic.
            MixingMeasure::Exponential => (1..=k as u64).product::<u64>() as f64,
            MixingMeasure::RhoAlpha { alpha } => {
                if (k as f64) > *alpha {
                    specfun::gamma(k as f64 - alpha)
                } else {
                    f64::INFINITY
                }
            }
            MixingMeasure::GeneralDensity { density, t_min, t_max, .. } => {
                let d = density.clone();
                let q = quad::integrate_interval(
                    &mut |t: f64| t.powi(k as i32) * d(t),
                    *t_min,
                    *t_max,
                    QuadTol::INNER,
                    &[],
                );
                if q.divergent {
                    f64::INFINITY
                } else {
                    q.value
                }
            }
        }
    }

    /// ∫_{(0, b]} t^k λ(dt).
    pub fn lower_partial(&self, k: u32, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        match self {
            MixingMeasure::PointMasses(pm) => pm
                .iter()
                .filter(|(t, _)| *t <= b)
                .map(|(t, c)| t.powi(k as i32) * c)
                .sum(),
            MixingMeasure::Exponential => specfun::lower_inc_gamma(k as f64 + 1.0, b),
            MixingMeasure::RhoAlpha { alpha } => {
                let p = k as f64 - alpha;
                if p > 0.0 {
                    specfun::lower_inc_gamma(p, b)
                } else {
                    f64::INFINITY
                }
            }
            MixingMeasure::GeneralDensity { density, t_min, t_max, .. } => {
                let d = density.clone();
                let hi = b.min(*t_max);
                let q = quad::integrate_interval(
                    &mut |t: f64| t.powi(k as i32) * d(t),
                    *t_min,
                    hi,
                    QuadTol::INNER,
                    &[],
                );
                if q.divergent {
                    f64::INFINITY
                } else {
                    q.value
                }
            }
        }
    }

    /// ∫_{(b, ∞)} t^k λ(dt).
    pub fn upper_partial(&self, k: u32, b: f64) -> f64 {
        match self {
            MixingMeasure::PointMasses(pm) => pm
                .iter()
                .filter(|(t, _)| *t > b)
                .map(|(t, c)| t.powi(k as i32) * c)
                .sum(),
            MixingMeasure::Exponential => {
                if b <= 0.0 {
                    specfun::gamma(k as f64 + 1.0)
                } else {
                    specfun::upper_inc_gamma(k as f64 + 1.0, b)
                }
            }
            MixingMeasure::RhoAlpha { alpha } => {
                if b <= 0.0 {
                    self.moment(k)
                } else {
                    specfun::upper_inc_gamma(k as f64 - alpha, b)
                }
            }
            MixingMeasure::GeneralDensity { density, t_min, t_max, .. } => {
                let d = density.clone();
                let lo = b.max(*t_min);
                if lo >= *t_max {
                    return 0.0;
                }
                let q = quad::integrate_interval(
                    &mut |t: f64| t.powi(k as i32) * d(t),
                    lo,
                    *t_max,
                    QuadTol::INNER,
                    &[],
                );
                if q.divergent {
                    f64::INFINITY
                } else {
                    q.value
                }
            }
        }
    }

    /// ∫ f(t) λ(dt); exact for point masses, quadrature otherwise.
    pub fn integrate<T: IntegrandValue>(
        &self,
        tol: QuadTol,
        hints: &[f64],
        f: &dyn Fn(f64) -> T,
    ) -> Quad<T> {
        match self {
            MixingMeasure::PointMasses(pm) => {
                let mut acc = T::zero();
                for (t, c) in pm {
                    acc = acc.add(f(*t).scale(*c));
                }
                Quad::exact(acc)
            }
            MixingMeasure::Exponential => quad::integrate_interval(
                &mut |t: f64| f(t).scale((-t).exp()),
                0.0,
                f64::INFINITY,
                tol,
                hints,
            ),
            MixingMeasure::RhoAlpha { alpha } => {
                let a = *alpha;
                quad::integrate_interval(
                    &mut |t: f64| f(t).scale(t.powf(-a - 1.0) * (-t).exp()),
                    0.0,
                    f64::INFINITY,
                    tol,
                    hints,
                )
            }
            MixingMeasure::GeneralDensity { density, t_min, t_max, .. } => {
                let d = density.clone();
                quad::integrate_interval(
                    &mut |t: f64| f(t).scale(d(t)),
                    *t_min,
                    *t_max,
                    tol,
                    hints,
                )
            }
        }
    }

    /// ∫ min(1, t²) λ(dt) < ∞ — the λ-side necessary condition.
    pub fn min_one_t2_integrable(&self) -> bool {
        let v = self.lower_partial(2, 1.0) + self.tail(1.0);
        v.is_finite()
    }
}

/// Diagnostic for the mixture criterion.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureDiagnostic {
    pub is_levy: bool,
    /// Criterion integral; ∞ flags divergence.
    pub criterion_value: f64,
    pub breakdown: DiagnosticBreakdown,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticBreakdown {
    /// Whether λ integrates min(1, t²) — what a Gaussian component needs.
    pub gaussian_part_ok: bool,
    /// ∫ t² ∫_{0<‖x‖≤1/t} ‖x‖² M(dx) λ(dt).
    pub small_region: f64,
    /// ∫ M({‖x‖ > 1/t}) λ(dt).
    pub large_region: f64,
}

fn criterion(m: &LevyMeasure, lambda: &MixingMeasure, power: u32) -> MixtureDiagnostic {
    // Evaluated in the x-first (Fubini) form: exact partial λ-moments per
    // atom, quadrature over the radial profile otherwise.
    let small = m.integrate(QuadTol::OUTER, &[], &|x: &[f64]| {
        let r = linalg::norm(x);
        r.powi(power as i32) * lambda.lower_partial(power, 1.0 / r)
    });
    let large = m.integrate(QuadTol::OUTER, &[], &|x: &[f64]| {
        let r = linalg::norm(x);
        lambda.tail(1.0 / r)
    });
    let small_val = if small.divergent || !small.converged || small.value.is_nan() {
        f64::INFINITY
    } else {
        small.value
    };
    let large_val = if large.divergent || !large.converged || large.value.is_nan() {
        f64::INFINITY
    } else {
        large.value
    };
    let total = small_val + large_val;
    MixtureDiagnostic {
        is_levy: total.is_finite(),
        criterion_value: total,
        breakdown: DiagnosticBreakdown {
            gaussian_part_ok: lambda.min_one_t2_integrable(),
            small_region: small_val,
            large_region: large_val,
        },
    }
}

/// The iff criterion on Hilbert space (second moments).
pub fn check_mixture_integrability(m: &LevyMeasure, lambda: &MixingMeasure) -> MixtureDiagnostic {
    criterion(m, lambda, 2)
}

/// The first-moment criterion: sufficient on any Banach space, not
/// necessary.
pub fn banach_sufficient_check(m: &LevyMeasure, lambda: &MixingMeasure) -> MixtureDiagnostic {
    criterion(m, lambda, 1)
}

/// Build the λ-mixture M^{(λ)}. Point-mass mixings yield the exact finite
/// combination Σ cᵢ T_{tᵢ} M; continuous mixings yield a lazy wrapper.
pub fn mix(m: &LevyMeasure, lambda: &MixingMeasure) -> Result<LevyMeasure, MixingError> {
    let diag = check_mixture_integrability(m, lambda);
    if !diag.is_levy {
        return Err(MixingError::NotLevyMixture { criterion: diag.criterion_value });
    }
    Ok(mix_unchecked(m, lambda))
}

/// The mixture representation without the integrability gate.
pub fn mix_unchecked(m: &LevyMeasure, lambda: &MixingMeasure) -> LevyMeasure {
    match lambda {
        MixingMeasure::PointMasses(pm) => {
            if pm.len() == 1 && pm[0] == (1.0, 1.0) {
                return m.clone();
            }
            let parts = pm
                .iter()
                .map(|(t, c)| {
                    let dilated = if *t == 1.0 {
                        m.clone()
                    } else {
                        LevyMeasure::Dilated { inner: Box::new(m.clone()), scale: *t }
                    };
                    if *c == 1.0 {
                        dilated
                    } else {
                        LevyMeasure::Scaled { inner: Box::new(dilated), factor: *c }
                    }
                })
                .collect();
            LevyMeasure::Sum(parts)
        }
        _ => LevyMeasure::Mixture { inner: Box::new(m.clone()), mixing: Box::new(lambda.clone()) },
    }
}

/// Exponential-mixture criterion kernel
/// g(r) = 2r²[1 − e^{-1/r}(1 + 1/r)]; series fallback for large r avoids
/// the 1 − e^{-s}(1+s) cancellation.
pub fn g_exponential(r: f64) -> Result<f64, MixingError> {
    if !(r > 0.0) {
        return Err(MixingError::NonPositiveRadius(r));
    }
    if r > 1e4 {
        // 1 − e^{-s}(1+s) = Σ_{n≥2} (-1)^n (n-1)/n! sⁿ with s = 1/r.
        let s = 1.0 / r;
        let mut sum = 0.0;
        let mut s_pow = s * s; // sⁿ
        let mut fact = 2.0; // n!
        for n in 2..20 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * (n as f64 - 1.0) / fact * s_pow;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            s_pow *= s;
            fact *= n as f64 + 1.0;
        }
        return Ok(2.0 * r * r * sum);
    }
    let s = 1.0 / r;
    Ok(2.0 * r * r * (1.0 - (-s).exp() * (1.0 + s)))
}

/// ρ_α-mixture criterion kernel
/// h_α(r) = r² γ(2-α, 1/r) + Γ(-α, 1/r).
pub fn h_alpha(r: f64, alpha: f64) -> Result<f64, MixingError> {
    if !(r > 0.0) {
        return Err(MixingError::NonPositiveRadius(r));
    }
    if !(0.0 < alpha && alpha < 2.0) {
        return Err(MixingError::AlphaOutOfRange(alpha));
    }
    let inv = 1.0 / r;
    Ok(r * r * specfun::lower_inc_gamma(2.0 - alpha, inv) + specfun::upper_inc_gamma(-alpha, inv))
}

/// A spherical cap: directions u with ⟨u, center⟩ ≥ cos_min.
#[derive(Debug, Clone)]
pub struct Cap {
    pub center: Vec<f64>,
    pub cos_min: f64,
}

impl Cap {
    pub fn contains(&self, direction: &[f64]) -> bool {
        linalg::dot(direction, &self.center) >= self.cos_min
    }

    pub fn mirrored(&self) -> Cap {
        Cap { center: linalg::scale(&self.center, -1.0), cos_min: self.cos_min }
    }
}

/// Measurable direction set on the unit sphere: the full sphere or a finite
/// union of caps (in d = 1 the sphere is {-1, +1}).
#[derive(Debug, Clone)]
pub enum DirectionSet {
    FullSphere,
    Caps(Vec<Cap>),
}

impl DirectionSet {
    pub fn contains(&self, direction: &[f64]) -> bool {
        match self {
            DirectionSet::FullSphere => true,
            DirectionSet::Caps(caps) => caps.iter().any(|c| c.contains(direction)),
        }
    }

    pub fn mirrored(&self) -> DirectionSet {
        match self {
            DirectionSet::FullSphere => DirectionSet::FullSphere,
            DirectionSet::Caps(caps) => {
                DirectionSet::Caps(caps.iter().map(|c| c.mirrored()).collect())
            }
        }
    }

    /// The half-line direction {+1} or {-1} in d = 1.
    pub fn half_line(positive: bool) -> DirectionSet {
        DirectionSet::Caps(vec![Cap {
            center: vec![if positive { 1.0 } else { -1.0 }],
            cos_min: 0.5,
        }])
    }
}

/// Query for the Lévy spectral function L_M(D; r).
#[derive(Debug, Clone)]
pub struct SpectralFunctionQuery {
    pub directions: DirectionSet,
    pub radius: f64,
}

/// L_M(D; r) = M({x : x/‖x‖ ∈ D, ‖x‖ > r}).
pub fn levy_spectral_function(m: &LevyMeasure, query: &SpectralFunctionQuery) -> f64 {
    assert!(query.radius > 0.0, "spectral function needs r > 0");
    spectral(m, &query.directions, query.radius)
}

fn spectral(m: &LevyMeasure, d: &DirectionSet, r: f64) -> f64 {
    match m {
        LevyMeasure::Atoms(atoms) => atoms
            .iter()
            .filter(|a| {
                let rad = a.radius();
                rad > r && d.contains(&linalg::scale(&a.point, 1.0 / rad))
            })
            .map(|a| a.mass)
            .sum(),
        LevyMeasure::Radial { directions, family } => directions
            .iter()
            .filter(|(u, _)| d.contains(u))
            .map(|(_, w)| w * family.tail_mass(r))
            .sum(),
        LevyMeasure::Dilated { inner, scale } => {
            let set = if *scale > 0.0 { d.clone() } else { d.mirrored() };
            spectral(inner, &set, r / scale.abs())
        }
        LevyMeasure::Scaled { inner, factor } => factor * spectral(inner, d, r),
        LevyMeasure::Sum(parts) => parts.iter().map(|p| spectral(p, d, r)).sum(),
        LevyMeasure::Mixture { inner, mixing } => {
            if let Some(atoms) = inner.flatten_atoms() {
                // L_{M^{(λ)}}(D;r) = Σ_j m_j 1_D(u_j) Λ(r/‖x_j‖), exactly.
                return atoms
                    .iter()
                    .filter(|a| d.contains(&linalg::scale(&a.point, 1.0 / a.radius())))
                    .map(|a| a.mass * mixing.tail(r / a.radius()))
                    .sum();
            }
            let inner_ref = inner.as_ref();
            let q = mixing.integrate(QuadTol::OUTER, &[], &move |t: f64| {
                spectral(inner_ref, d, r / t)
            });
            if q.divergent {
                f64::INFINITY
            } else {
                q.value
            }
        }
    }
}

/// Check the Laplace-transform identity for the exponential mixture:
///
/// ```text
/// L_{M^{(e)}}(D; r) = r ∫₀^∞ L_M(D; s^{-1}) e^{-rs} ds,
/// ```
///
/// returning the maximum absolute discrepancy over `r_grid`. The left side
/// goes through `mix` + `levy_spectral_function`; the right side is an
/// independent quadrature of the Laplace integral.
pub fn verify_laplace_identity(
    m: &LevyMeasure,
    directions: &DirectionSet,
    r_grid: &[f64],
) -> Result<f64, MixingError> {
    let mixed = mix(m, &MixingMeasure::Exponential)?;
    let hints: Vec<f64> = m
        .atom_radii()
        .iter()
        .filter(|r| **r > 0.0)
        .map(|r| 1.0 / r)
        .collect();
    let mut worst: f64 = 0.0;
    for &r in r_grid {
        if !(r > 0.0) {
            return Err(MixingError::NonPositiveRadius(r));
        }
        let lhs = spectral(&mixed, directions, r);
        let rhs_quad = quad::integrate_interval(
            &mut |s: f64| spectral(m, directions, 1.0 / s) * (-r * s).exp(),
            0.0,
            f64::INFINITY,
            QuadTol::INNER,
            &hints,
        );
        if rhs_quad.divergent || !rhs_quad.converged {
            return Err(MixingError::NonConvergedQuadrature {
                context: format!("Laplace side of the spectral identity at r = {r}"),
            });
        }
        worst = worst.max((lhs - r * rhs_quad.value).abs());
    }
    Ok(worst)
}

/// Convenience wrapper: λ-side and measure-side necessary conditions that
/// must hold whenever the mixture passes the criterion.
pub fn necessity_consequences(m: &LevyMeasure, lambda: &MixingMeasure) -> (ValidityReport, bool) {
    (m.validate(), lambda.min_one_t2_integrable())
}
