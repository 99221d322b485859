//! Numerical free-probability transforms on the real line.
//!
//! For a finite measure μ on ℝ the Cauchy transform is
//! `G_μ(z) = ∫ (z − t)^{-1} μ(dt)` (Herglotz: Im G < 0 on the upper
//! half-plane), `F = 1/G`, and the Voiculescu transform is
//! `V_μ(z) = F^{-1}(z) − z` with `F^{-1}` computed by damped Newton
//! iteration. The bridge identity ties ⊞-infinite divisibility to the
//! image of the exponential-mixture map:
//!
//! ```text
//! (it)·V_ν((it)^{-1}) = log (K^{(e)}([a, σ², M]))^(t),   t ∈ ℝ,
//! ```
//!
//! with the right side evaluated through the closed-form free kernel.
//! Semicircle and Marchenko–Pastur densities are built in as the known
//! free counterparts of the Gaussian and compound-Poisson fixtures.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::integral_map::{self, MapError};
use crate::levy_core::{LevyMeasure, LevyTriplet};
use crate::linalg;
use crate::quad::{self, QuadTol};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("quadrature failure while {context}")]
    QuadratureFailure { context: String },
    #[error("Newton inversion of F diverged at z = {z} (|F(w)−z| = {residual:.3e})")]
    InversionDiverged { z: Complex64, residual: f64 },
    #[error("evaluation point must lie off the real axis")]
    RealAxisPoint,
    #[error(transparent)]
    Map(#[from] MapError),
}

/// An evaluation point strictly off the real axis. Construction enforces
/// |Im z| ≥ 1e-9; either half-plane is allowed (the lower one serves the
/// ℂ⁻ form of the free Lévy–Khintchine formula).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(z: Complex64) -> Result<Self, BridgeError> {
        if z.im.abs() < 1e-9 {
            return Err(BridgeError::RealAxisPoint);
        }
        Ok(HalfPlanePoint(z))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }

    pub fn upper(&self) -> bool {
        self.0.im > 0.0
    }
}

/// A finite Borel measure on the real line.
#[derive(Clone)]
pub enum RealMeasure {
    Atoms(Vec<(f64, f64)>),
    Density {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
        label: String,
    },
}

impl fmt::Debug for RealMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealMeasure::Atoms(a) => write!(f, "Atoms({a:?})"),
            RealMeasure::Density { label, support, .. } => {
                write!(f, "Density {{ label: {label:?}, support: {support:?} }}")
            }
        }
    }
}

impl RealMeasure {
    pub fn point_mass(t: f64) -> Self {
        RealMeasure::Atoms(vec![(t, 1.0)])
    }

    /// Semicircle law of radius `r` (variance r²/4): density
    /// `2/(π r²) √(r² − t²)` on [−r, r]. Radius 2 is the free analogue of
    /// the standard Gaussian.
    pub fn semicircle(radius: f64) -> Self {
        let r2 = radius * radius;
        RealMeasure::Density {
            density: Arc::new(move |t: f64| {
                let disc = r2 - t * t;
                if disc <= 0.0 {
                    0.0
                } else {
                    2.0 / (std::f64::consts::PI * r2) * disc.sqrt()
                }
            }),
            support: (-radius, radius),
            label: format!("semicircle(r={radius})"),
        }
    }

    /// Marchenko–Pastur (free Poisson) law with rate λ ≥ 1: density
    /// `√((b−t)(t−a)) / (2π t)` on [a, b], a = (1−√λ)², b = (1+√λ)².
    pub fn marchenko_pastur(rate: f64) -> Self {
        assert!(rate >= 1.0, "rates below 1 carry an atom at 0");
        let a = (1.0 - rate.sqrt()).powi(2);
        let b = (1.0 + rate.sqrt()).powi(2);
        RealMeasure::Density {
            density: Arc::new(move |t: f64| {
                let disc = (b - t) * (t - a);
                if disc <= 0.0 || t <= 0.0 {
                    0.0
                } else {
                    disc.sqrt() / (2.0 * std::f64::consts::PI * t)
                }
            }),
            support: (a, b),
            label: format!("marchenko_pastur(rate={rate})"),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            RealMeasure::Atoms(atoms) => atoms.iter().map(|(_, m)| m).sum(),
            RealMeasure::Density { density, support, .. } => {
                let d = density.clone();
                quad::integrate_interval(&mut |t| d(t), support.0, support.1, QuadTol::INNER, &[])
                    .value
            }
        }
    }
}

/// Cauchy transform with its quadrature-error estimate.
pub fn cauchy_with_error(mu: &RealMeasure, z: Complex64) -> Result<(Complex64, f64), BridgeError> {
    let z = HalfPlanePoint::new(z)?.z();
    match mu {
        RealMeasure::Atoms(atoms) => Ok((
            atoms
                .iter()
                .map(|(t, m)| Complex64::new(*m, 0.0) / (z - t))
                .sum(),
            0.0,
        )),
        RealMeasure::Density { density, support, .. } => {
            let d = density.clone();
            // Split where the kernel peaks (near Re z) so the panels see
            // smooth pieces; heavy tails beyond 10/|Im z| integrate to
            // nothing for our compactly supported fixtures.
            let hints = [z.re, z.re - z.im.abs(), z.re + z.im.abs()];
            let q = quad::adaptive_with_breakpoints(
                &mut |t: f64| d(t) / (z - t),
                support.0,
                support.1,
                QuadTol::INNER,
                &hints,
            );
            if !q.converged {
                return Err(BridgeError::QuadratureFailure {
                    context: format!("Cauchy transform at z = {z}"),
                });
            }
            Ok((q.value, q.error))
        }
    }
}

/// Cauchy transform G_μ(z) = ∫ (z − t)^{-1} μ(dt), Im z ≠ 0.
pub fn cauchy_transform(mu: &RealMeasure, z: Complex64) -> Result<Complex64, BridgeError> {
    Ok(cauchy_with_error(mu, z)?.0)
}

/// G'_μ(z) = −∫ (z − t)^{-2} μ(dt).
pub fn cauchy_derivative(mu: &RealMeasure, z: Complex64) -> Result<Complex64, BridgeError> {
    let z = HalfPlanePoint::new(z)?.z();
    match mu {
        RealMeasure::Atoms(atoms) => Ok(-atoms
            .iter()
            .map(|(t, m)| Complex64::new(*m, 0.0) / ((z - t) * (z - t)))
            .sum::<Complex64>()),
        RealMeasure::Density { density, support, .. } => {
            let d = density.clone();
            let hints = [z.re, z.re - z.im.abs(), z.re + z.im.abs()];
            let q = quad::adaptive_with_breakpoints(
                &mut |t: f64| -d(t) / ((z - t) * (z - t)),
                support.0,
                support.1,
                QuadTol::INNER,
                &hints,
            );
            if !q.converged {
                return Err(BridgeError::QuadratureFailure {
                    context: format!("Cauchy derivative at z = {z}"),
                });
            }
            Ok(q.value)
        }
    }
}

/// F_μ = 1/G_μ.
pub fn f_transform(mu: &RealMeasure, z: Complex64) -> Result<Complex64, BridgeError> {
    Ok(1.0 / cauchy_transform(mu, z)?)
}

/// F^{-1}(z) by damped Newton on w ↦ F(w) − z, seeded at w₀ = z. Iterates
/// that try to cross the real axis have their step halved; failure to
/// reach |F(w) − z| ≤ 1e-12 in 100 iterations reports the point as outside
/// the invertibility domain.
pub fn f_inverse(mu: &RealMeasure, z: Complex64) -> Result<Complex64, BridgeError> {
    let z = HalfPlanePoint::new(z)?.z();
    let side = z.im.signum();
    let mut w = z;
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        // A quadrature breakdown here means the iterate has been pushed
        // against the real axis — the point is outside the numerically
        // invertible region, so report divergence rather than a raw
        // quadrature error.
        let (g, g_err) = match cauchy_with_error(mu, w) {
            Ok(pair) => pair,
            Err(BridgeError::QuadratureFailure { .. }) => {
                return Err(BridgeError::InversionDiverged { z, residual })
            }
            Err(e) => return Err(e),
        };
        let f = 1.0 / g;
        let diff = f - z;
        residual = diff.norm();
        // F = 1/G inherits the quadrature error of G; the residual cannot
        // be driven below that floor.
        let floor = 1e-12f64.max(2.0 * g_err / g.norm_sqr());
        if residual <= floor {
            return Ok(w);
        }
        let gp = match cauchy_derivative(mu, w) {
            Ok(gp) => gp,
            Err(BridgeError::QuadratureFailure { .. }) => {
                return Err(BridgeError::InversionDiverged { z, residual })
            }
            Err(e) => return Err(e),
        };
        let fp = -gp / (g * g);
        if fp.norm() == 0.0 {
            break;
        }
        let mut step = diff / fp;
        let mut next = w - step;
        // Half-plane projection: refuse to cross (or graze) the real axis.
        let mut halvings = 0;
        while next.im * side <= 1e-9 && halvings < 60 {
            step *= 0.5;
            next = w - step;
            halvings += 1;
        }
        if halvings == 60 {
            break;
        }
        w = next;
    }
    Err(BridgeError::InversionDiverged { z, residual })
}

/// Voiculescu transform V_μ(z) = F^{-1}_μ(z) − z.
pub fn voiculescu_transform(mu: &RealMeasure, z: Complex64) -> Result<Complex64, BridgeError> {
    Ok(f_inverse(mu, z)? - z)
}

/// Right side of the free Lévy–Khintchine form evaluated from a classical
/// triple on ℝ:
///
/// ```text
/// z V_ν(z^{-1}) = a z + σ² z² + ∫ (1/(1 − zx) − 1 − zx·1_{|x|≤1}) M(dx).
/// ```
pub fn free_levy_khintchine(
    triplet: &LevyTriplet,
    z: Complex64,
) -> Result<Complex64, BridgeError> {
    assert_eq!(triplet.dim(), 1, "free Lévy–Khintchine form is one-dimensional");
    let a = triplet.shift()[0];
    let sigma2 = triplet.covariance()[(0, 0)];
    let jump = {
        let q = triplet
            .levy_measure()
            .integrate(QuadTol::INNER, &[1.0], &|x: &[f64]| {
                let xv = x[0];
                let mut kernel = 1.0 / (1.0 - z * xv) - 1.0;
                if xv.abs() <= 1.0 {
                    kernel -= z * xv;
                }
                kernel
            });
        if q.divergent || !q.converged {
            return Err(BridgeError::QuadratureFailure {
                context: format!("free Lévy–Khintchine integral at z = {z}"),
            });
        }
        q.value
    };
    Ok(a * z + sigma2 * z * z + jump)
}

/// Check the bridge identity over a real grid: compares
/// `(it)·V_ν((it)^{-1})` (free side, Newton inversion of F) against the
/// log of the free kernel CF of the classical triple, together with the
/// companion form `V_ν(it) = it·log(K^{(e)}μ)^(−1/t)`. The two forms probe
/// complementary parts of the invertibility domain (for the semicircle,
/// `(it)^{-1}` is attainable for t < 1 and `it` for t > 1), so a grid
/// point contributes whichever forms Newton can reach; a point where both
/// diverge propagates `InversionDiverged`. Returns the largest modulus
/// discrepancy seen.
pub fn bridge_check(
    triplet: &LevyTriplet,
    nu: &RealMeasure,
    t_grid: &[f64],
) -> Result<f64, BridgeError> {
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        if t == 0.0 {
            continue;
        }
        let it = Complex64::new(0.0, t);
        let mut reached = false;

        // (it)^{-1} = -i/t lies in the half-plane opposite to it.
        match voiculescu_transform(nu, 1.0 / it) {
            Ok(v) => {
                let classical = integral_map::free_log_cf(triplet, &[t])?;
                worst = worst.max((it * v - classical).norm());
                reached = true;
            }
            Err(BridgeError::InversionDiverged { .. }) => {}
            Err(e) => return Err(e),
        }
        match voiculescu_transform(nu, it) {
            Ok(v_it) => {
                let companion = it * integral_map::free_log_cf(triplet, &[-1.0 / t])?;
                worst = worst.max((v_it - companion).norm());
                reached = true;
            }
            Err(BridgeError::InversionDiverged { .. }) => {}
            Err(e) => return Err(e),
        }
        if !reached {
            return Err(BridgeError::InversionDiverged {
                z: 1.0 / it,
                residual: f64::INFINITY,
            });
        }
    }
    Ok(worst)
}

/// The compound-Poisson image form: for a finite measure m,
///
/// ```text
/// F_m(y) = log (K^{(e)}(e(m)))^(y) = G_m(y) − m(total)
///        = ∫ i⟨y,x⟩/(1 − i⟨y,x⟩) m(dx),
/// ```
///
/// where `G_m(y) = ∫ (1 − i⟨y,x⟩)^{-1} m(dx)`. Both forms are computed and
/// must agree to 1e-10; the direct integrand form is returned.
pub fn compound_poisson_f(m: &LevyMeasure, y: &[f64]) -> Result<Complex64, BridgeError> {
    let direct = m.integrate(QuadTol::INNER, &[], &|x: &[f64]| {
        let v = linalg::dot(y, x);
        Complex64::new(0.0, v) / Complex64::new(1.0, -v)
    });
    let g_form = m.integrate(QuadTol::INNER, &[], &|x: &[f64]| {
        let v = linalg::dot(y, x);
        1.0 / Complex64::new(1.0, -v)
    });
    let total = m.integrate(QuadTol::INNER, &[], &|_x: &[f64]| 1.0);
    if direct.divergent || !direct.converged || g_form.divergent || !g_form.converged {
        return Err(BridgeError::QuadratureFailure {
            context: format!("compound-Poisson form at y = {y:?}"),
        });
    }
    let via_g = g_form.value - total.value;
    assert!(
        (direct.value - via_g).norm() <= 1e-10 * (1.0 + direct.value.norm()),
        "G_m − m(total) route disagrees with the direct integrand: {} vs {}",
        direct.value,
        via_g
    );
    Ok(direct.value)
}
