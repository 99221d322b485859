//! Lévy triplets `[a, R, M]` on ℝ^d (d ≤ 3) and their exact algebra.
//!
//! A triplet determines an infinitely divisible law through its Lévy
//! exponent
//!
//! ```text
//! Φ(y) = i⟨y,a⟩ − ½⟨Ry,y⟩ + ∫ [e^{i⟨y,x⟩} − 1 − i⟨y,x⟩·1_{‖x‖≤1}] M(dx).
//! ```
//!
//! The truncation ball is fixed at ‖x‖ ≤ 1 (inclusive on the sphere) and no
//! alternative cutoff convention is supported, so shift vectors stay
//! bit-comparable across the crate.
//!
//! Lévy measures are kept symbolic: scaling `c·M` and dilation `T_c M`
//! wrap the measure instead of rewriting it, which makes convolution powers
//! and dilations exact and allocation-free at the measure level.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;
use crate::mixing::MixingMeasure;
use crate::quad::{self, IntegrandValue, Quad, QuadTol};
use crate::specfun;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Error)]
pub enum LevyError {
    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),
    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),
    #[error("quadrature did not converge while {context}")]
    NonConvergedQuadrature { context: String },
    #[error("convolution power must be nonnegative, got {0}")]
    NegativePower(f64),
    #[error("dilation scale must be nonzero")]
    ZeroScale,
}

/// A point mass of a Lévy measure: mass at a nonzero point of ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

impl Atom {
    pub fn new(point: Vec<f64>, mass: f64) -> Self {
        Atom { point, mass }
    }

    pub fn radius(&self) -> f64 {
        linalg::norm(&self.point)
    }
}

/// Radial density family for rotationally parametrised measures.
#[derive(Clone)]
pub enum RadialFamily {
    /// Density r^{-α-1} e^{-r} on (0, cutoff); `cutoff` may be ∞.
    PowerExp { alpha: f64, cutoff: f64 },
    /// Density r^{-α-1} on (r_min, r_max).
    Power { alpha: f64, r_min: f64, r_max: f64 },
    /// Density e^{-rate·r} on (0, ∞).
    Exp { rate: f64 },
    /// Arbitrary nonnegative density on (r_min, r_max).
    UserDensity {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        r_min: f64,
        r_max: f64,
        label: String,
    },
}

impl fmt::Debug for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFamily::PowerExp { alpha, cutoff } => {
                write!(f, "PowerExp {{ alpha: {alpha}, cutoff: {cutoff} }}")
            }
            RadialFamily::Power { alpha, r_min, r_max } => {
                write!(f, "Power {{ alpha: {alpha}, r_min: {r_min}, r_max: {r_max} }}")
            }
            RadialFamily::Exp { rate } => write!(f, "Exp {{ rate: {rate} }}"),
            RadialFamily::UserDensity { label, r_min, r_max, .. } => {
                write!(f, "UserDensity {{ label: {label:?}, r_min: {r_min}, r_max: {r_max} }}")
            }
        }
    }
}

impl RadialFamily {
    pub fn support(&self) -> (f64, f64) {
        match self {
            RadialFamily::PowerExp { cutoff, .. } => (0.0, *cutoff),
            RadialFamily::Power { r_min, r_max, .. } => (*r_min, *r_max),
            RadialFamily::Exp { .. } => (0.0, f64::INFINITY),
            RadialFamily::UserDensity { r_min, r_max, .. } => (*r_min, *r_max),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if r <= lo || r > hi {
            return 0.0;
        }
        match self {
            RadialFamily::PowerExp { alpha, .. } => r.powf(-alpha - 1.0) * (-r).exp(),
            RadialFamily::Power { alpha, .. } => r.powf(-alpha - 1.0),
            RadialFamily::Exp { rate } => (-rate * r).exp(),
            RadialFamily::UserDensity { density, .. } => density(r),
        }
    }

    /// Mass above `from`, i.e. ∫_{max(from,lo)}^{hi} ρ(r) dr, in closed form
    /// where the family admits one.
    pub fn tail_mass(&self, from: f64) -> f64 {
        let (lo, hi) = self.support();
        let a = from.max(lo);
        if a >= hi {
            return 0.0;
        }
        match self {
            RadialFamily::PowerExp { alpha, cutoff } => {
                if a <= 0.0 {
                    return f64::INFINITY;
                }
                let head = specfun::upper_inc_gamma(-alpha, a);
                let tail = if cutoff.is_finite() {
                    specfun::upper_inc_gamma(-alpha, *cutoff)
                } else {
                    0.0
                };
                head - tail
            }
            RadialFamily::Power { alpha, .. } => {
                if a <= 0.0 {
                    return f64::INFINITY;
                }
                if *alpha == 0.0 {
                    if hi.is_finite() {
                        (hi / a).ln()
                    } else {
                        f64::INFINITY
                    }
                } else if hi.is_finite() {
                    (a.powf(-alpha) - hi.powf(-alpha)) / alpha
                } else if *alpha > 0.0 {
                    a.powf(-alpha) / alpha
                } else {
                    f64::INFINITY
                }
            }
            RadialFamily::Exp { rate } => (-rate * a).exp() / rate,
            RadialFamily::UserDensity { density, .. } => {
                let d = density.clone();
                let q = quad::integrate_interval(
                    &mut |r: f64| d(r),
                    a,
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
}

/// A Lévy (spectral) measure on ℝ^d \ {0}.
#[derive(Debug, Clone)]
pub enum LevyMeasure {
    /// Finite collection of point masses.
    Atoms(Vec<Atom>),
    /// Σ_i w_i · (radial family along unit direction u_i).
    Radial { directions: Vec<(Vec<f64>, f64)>, family: RadialFamily },
    /// T_c M: the image of `inner` under x ↦ c·x, c ≠ 0.
    Dilated { inner: Box<LevyMeasure>, scale: f64 },
    /// c · M with c > 0.
    Scaled { inner: Box<LevyMeasure>, factor: f64 },
    /// Finite sum of measures.
    Sum(Vec<LevyMeasure>),
    /// λ-mixture ∫ (T_t M)(·) λ(dt); kept lazy, integrates by nesting.
    Mixture { inner: Box<LevyMeasure>, mixing: Box<MixingMeasure> },
}

/// Diagnostic from `validate_levy_measure`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidityReport {
    pub is_levy: bool,
    /// ∫_{0<‖x‖≤1} ‖x‖² M(dx); ∞ flags divergence.
    pub small_ball_integral: f64,
    /// M({‖x‖ > 1}); ∞ flags divergence.
    pub tail_mass: f64,
}

impl LevyMeasure {
    pub fn zero() -> Self {
        LevyMeasure::Atoms(Vec::new())
    }

    /// Single atom at `point` with mass `mass`.
    pub fn delta(point: Vec<f64>, mass: f64) -> Self {
        LevyMeasure::Atoms(vec![Atom::new(point, mass)])
    }

    /// Single atom on the line, at coordinate `x`.
    pub fn delta_1d(x: f64, mass: f64) -> Self {
        Self::delta(vec![x], mass)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Atoms(atoms) => atoms.is_empty(),
            LevyMeasure::Radial { directions, .. } => {
                directions.iter().all(|(_, w)| *w == 0.0)
            }
            LevyMeasure::Dilated { inner, .. } => inner.is_zero(),
            LevyMeasure::Scaled { inner, factor } => *factor == 0.0 || inner.is_zero(),
            LevyMeasure::Sum(parts) => parts.iter().all(|p| p.is_zero()),
            LevyMeasure::Mixture { inner, .. } => inner.is_zero(),
        }
    }

    /// Ambient dimension, if the measure pins one down.
    pub fn dim(&self) -> Option<usize> {
        match self {
            LevyMeasure::Atoms(atoms) => atoms.first().map(|a| a.point.len()),
            LevyMeasure::Radial { directions, .. } => directions.first().map(|(u, _)| u.len()),
            LevyMeasure::Dilated { inner, .. }
            | LevyMeasure::Scaled { inner, .. }
            | LevyMeasure::Mixture { inner, .. } => inner.dim(),
            LevyMeasure::Sum(parts) => parts.iter().find_map(|p| p.dim()),
        }
    }

    /// Structural well-formedness: nonnegative masses/weights, no atom at
    /// the origin, unit directions, consistent dimensions.
    pub fn check_structure(&self) -> Result<(), LevyError> {
        match self {
            LevyMeasure::Atoms(atoms) => {
                for a in atoms {
                    if a.point.is_empty() || a.point.len() > MAX_DIM {
                        return Err(LevyError::InvalidMeasure(format!(
                            "atom dimension {} outside 1..={MAX_DIM}",
                            a.point.len()
                        )));
                    }
                    if a.radius() == 0.0 {
                        return Err(LevyError::InvalidMeasure("atom at the origin".into()));
                    }
                    if !(a.mass > 0.0) {
                        return Err(LevyError::InvalidMeasure(format!(
                            "atom mass must be positive, got {}",
                            a.mass
                        )));
                    }
                    if a.point.len() != self.dim().unwrap_or(a.point.len()) {
                        return Err(LevyError::InvalidMeasure("mixed atom dimensions".into()));
                    }
                }
                Ok(())
            }
            LevyMeasure::Radial { directions, family } => {
                for (u, w) in directions {
                    if u.is_empty() || u.len() > MAX_DIM {
                        return Err(LevyError::InvalidMeasure("direction dimension".into()));
                    }
                    if (linalg::norm(u) - 1.0).abs() > 1e-9 {
                        return Err(LevyError::InvalidMeasure(format!(
                            "direction not unit length: {u:?}"
                        )));
                    }
                    if *w < 0.0 {
                        return Err(LevyError::InvalidMeasure("negative direction weight".into()));
                    }
                }
                let (lo, hi) = family.support();
                if !(lo >= 0.0 && hi > lo) {
                    return Err(LevyError::InvalidMeasure(format!(
                        "bad radial support ({lo}, {hi})"
                    )));
                }
                Ok(())
            }
            LevyMeasure::Dilated { inner, scale } => {
                if *scale == 0.0 {
                    return Err(LevyError::ZeroScale);
                }
                inner.check_structure()
            }
            LevyMeasure::Scaled { inner, factor } => {
                if *factor < 0.0 {
                    return Err(LevyError::InvalidMeasure("negative scaling factor".into()));
                }
                inner.check_structure()
            }
            LevyMeasure::Sum(parts) => parts.iter().try_for_each(|p| p.check_structure()),
            LevyMeasure::Mixture { inner, .. } => inner.check_structure(),
        }
    }

    /// Radii at which point masses sit, in the measure's own space; used as
    /// breakpoint hints by integrators downstream.
    pub fn atom_radii(&self) -> Vec<f64> {
        match self {
            LevyMeasure::Atoms(atoms) => atoms.iter().map(|a| a.radius()).collect(),
            LevyMeasure::Radial { .. } => Vec::new(),
            LevyMeasure::Dilated { inner, scale } => inner
                .atom_radii()
                .into_iter()
                .map(|r| r * scale.abs())
                .collect(),
            LevyMeasure::Scaled { inner, .. } => inner.atom_radii(),
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.atom_radii()).collect(),
            LevyMeasure::Mixture { .. } => Vec::new(),
        }
    }

    /// Resolve wrappers into a concrete atom list when the measure is
    /// purely atomic (mixtures by continuous λ are not).
    pub fn flatten_atoms(&self) -> Option<Vec<Atom>> {
        match self {
            LevyMeasure::Atoms(atoms) => Some(atoms.clone()),
            LevyMeasure::Radial { .. } | LevyMeasure::Mixture { .. } => None,
            LevyMeasure::Dilated { inner, scale } => Some(
                inner
                    .flatten_atoms()?
                    .into_iter()
                    .map(|a| Atom::new(linalg::scale(&a.point, *scale), a.mass))
                    .collect(),
            ),
            LevyMeasure::Scaled { inner, factor } => Some(
                inner
                    .flatten_atoms()?
                    .into_iter()
                    .map(|a| Atom::new(a.point, a.mass * factor))
                    .collect(),
            ),
            LevyMeasure::Sum(parts) => {
                let mut all = Vec::new();
                for p in parts {
                    all.extend(p.flatten_atoms()?);
                }
                Some(all)
            }
        }
    }

    /// ∫ f(x) M(dx). Exact for atoms, adaptive quadrature otherwise.
    /// `hints` are radii (in this measure's space) where `f` has kinks or
    /// jumps as a function of ‖x‖.
    pub fn integrate<T: IntegrandValue>(
        &self,
        tol: QuadTol,
        hints: &[f64],
        f: &dyn Fn(&[f64]) -> T,
    ) -> Quad<T> {
        match self {
            LevyMeasure::Atoms(atoms) => {
                let mut acc = T::zero();
                for a in atoms {
                    acc = acc.add(f(&a.point).scale(a.mass));
                }
                Quad::exact(acc)
            }
            LevyMeasure::Radial { directions, family } => {
                let (lo, hi) = family.support();
                let mut total = Quad::zero();
                for (u, w) in directions {
                    if *w == 0.0 {
                        continue;
                    }
                    let mut buf = [0.0f64; MAX_DIM];
                    let d = u.len();
                    let piece = quad::integrate_interval(
                        &mut |r: f64| {
                            for i in 0..d {
                                buf[i] = r * u[i];
                            }
                            f(&buf[..d]).scale(family.density(r))
                        },
                        lo,
                        hi,
                        tol,
                        hints,
                    );
                    total = total.combine(piece.scale(*w));
                    if total.divergent {
                        return total;
                    }
                }
                total
            }
            LevyMeasure::Dilated { inner, scale } => {
                let c = *scale;
                let inner_hints: Vec<f64> = hints.iter().map(|h| h / c.abs()).collect();
                inner.integrate(tol, &inner_hints, &move |x: &[f64]| {
                    let mut buf = [0.0f64; MAX_DIM];
                    for (i, xi) in x.iter().enumerate() {
                        buf[i] = c * xi;
                    }
                    f(&buf[..x.len()])
                })
            }
            LevyMeasure::Scaled { inner, factor } => {
                inner.integrate(tol, hints, f).scale(*factor)
            }
            LevyMeasure::Sum(parts) => {
                let mut total = Quad::zero();
                for p in parts {
                    total = total.combine(p.integrate(tol, hints, f));
                    if total.divergent {
                        return total;
                    }
                }
                total
            }
            LevyMeasure::Mixture { inner, mixing } => {
                // Fubini order fixed: inner over M, outer over λ. Outer
                // kinks appear where a hint radius crosses an atom radius.
                let mut outer_hints = Vec::new();
                for h in hints {
                    for r in inner.atom_radii() {
                        if r > 0.0 {
                            outer_hints.push(h / r);
                        }
                    }
                }
                let inner_ref = inner.as_ref();
                mixing.integrate(QuadTol::OUTER, &outer_hints, &move |t: f64| {
                    let inner_hints: Vec<f64> = hints.iter().map(|h| h / t).collect();
                    let q = inner_ref.integrate(tol, &inner_hints, &move |x: &[f64]| {
                        let mut buf = [0.0f64; MAX_DIM];
                        for (i, xi) in x.iter().enumerate() {
                            buf[i] = t * xi;
                        }
                        f(&buf[..x.len()])
                    });
                    q.value
                })
            }
        }
    }

    /// Membership test for the cone of Lévy spectral measures:
    /// M must integrate min(1, ‖x‖²).
    pub fn validate(&self) -> ValidityReport {
        if self.check_structure().is_err() {
            return ValidityReport {
                is_levy: false,
                small_ball_integral: f64::NAN,
                tail_mass: f64::NAN,
            };
        }
        let small = self.integrate(QuadTol::INNER, &[1.0], &|x: &[f64]| {
            let r = linalg::norm(x);
            if r <= 1.0 {
                r * r
            } else {
                0.0
            }
        });
        let tail = self.integrate(QuadTol::INNER, &[1.0], &|x: &[f64]| {
            if linalg::norm(x) > 1.0 {
                1.0
            } else {
                0.0
            }
        });
        let small_val = if small.divergent || !small.converged { f64::INFINITY } else { small.value };
        let tail_val = if tail.divergent || !tail.converged { f64::INFINITY } else { tail.value };
        ValidityReport {
            is_levy: small_val.is_finite() && tail_val.is_finite(),
            small_ball_integral: small_val,
            tail_mass: tail_val,
        }
    }

    /// M({‖x‖ ≥ from}); closed form per radial family where available.
    pub fn mass_above(&self, from: f64) -> f64 {
        match self {
            LevyMeasure::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.radius() >= from)
                .map(|a| a.mass)
                .sum(),
            LevyMeasure::Radial { directions, family } => {
                let w: f64 = directions.iter().map(|(_, w)| w).sum();
                w * family.tail_mass(from)
            }
            LevyMeasure::Dilated { inner, scale } => inner.mass_above(from / scale.abs()),
            LevyMeasure::Scaled { inner, factor } => factor * inner.mass_above(from),
            LevyMeasure::Sum(parts) => parts.iter().map(|p| p.mass_above(from)).sum(),
            LevyMeasure::Mixture { inner, mixing } => {
                let inner_ref = inner.as_ref();
                let q = mixing.integrate(QuadTol::OUTER, &[], &move |t: f64| {
                    inner_ref.mass_above(from / t)
                });
                if q.divergent {
                    f64::INFINITY
                } else {
                    q.value
                }
            }
        }
    }

    /// ∫_{lo < ‖x‖ ≤ hi} x M(dx) as a vector (components integrated
    /// separately; d ≤ 3 keeps this cheap).
    pub fn first_moment_shell(&self, lo: f64, hi: f64, dim: usize) -> (Vec<f64>, Quad<f64>) {
        let mut out = vec![0.0; dim];
        let mut status = Quad::exact(0.0);
        for i in 0..dim {
            let q = self.integrate(QuadTol::INNER, &[lo, hi], &move |x: &[f64]| {
                let r = linalg::norm(x);
                if r > lo && r <= hi {
                    x[i]
                } else {
                    0.0
                }
            });
            out[i] = q.value;
            status = status.combine(q.map(|_| 0.0));
        }
        (out, status)
    }
}

/// Value of the Lévy exponent at a point, with the integration residual.
#[derive(Debug, Clone)]
pub struct LevyExponentValue {
    pub value: Complex64,
    pub y: Vec<f64>,
    pub quadrature_error: f64,
}

/// Canonical parametrisation [a, R, M] of an infinitely divisible law.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    dim: usize,
    shift: Vec<f64>,
    covariance: DMatrix<f64>,
    levy_measure: LevyMeasure,
}

impl LevyTriplet {
    /// Construct with full validation (symmetry/PSD of R to 1e-12, measure
    /// membership in the Lévy cone by quadrature).
    pub fn new(
        shift: Vec<f64>,
        covariance: DMatrix<f64>,
        levy_measure: LevyMeasure,
    ) -> Result<Self, LevyError> {
        let t = Self::new_unchecked(shift, covariance, levy_measure)?;
        let report = t.levy_measure.validate();
        if !report.is_levy {
            return Err(LevyError::InvalidTriplet(format!(
                "measure is not a Lévy spectral measure: {report:?}"
            )));
        }
        Ok(t)
    }

    /// Construct with structural checks only; used where the measure is
    /// already known to be valid (e.g. outputs of the integral maps).
    pub fn new_unchecked(
        shift: Vec<f64>,
        covariance: DMatrix<f64>,
        levy_measure: LevyMeasure,
    ) -> Result<Self, LevyError> {
        let dim = shift.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(LevyError::InvalidTriplet(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(LevyError::InvalidTriplet("covariance shape mismatch".into()));
        }
        linalg::check_symmetric_psd(&covariance).map_err(LevyError::InvalidTriplet)?;
        if let Some(md) = levy_measure.dim() {
            if md != dim {
                return Err(LevyError::InvalidTriplet(format!(
                    "measure dimension {md} != triplet dimension {dim}"
                )));
            }
        }
        levy_measure.check_structure()?;
        Ok(LevyTriplet { dim, shift, covariance, levy_measure })
    }

    /// 1-d convenience constructor.
    pub fn new_1d(shift: f64, variance: f64, levy_measure: LevyMeasure) -> Result<Self, LevyError> {
        Self::new_unchecked(
            vec![shift],
            DMatrix::from_element(1, 1, variance),
            levy_measure,
        )
    }

    pub fn zero(dim: usize) -> Self {
        LevyTriplet {
            dim,
            shift: vec![0.0; dim],
            covariance: DMatrix::zeros(dim, dim),
            levy_measure: LevyMeasure::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn levy_measure(&self) -> &LevyMeasure {
        &self.levy_measure
    }

    pub fn is_pure_gaussian(&self) -> bool {
        self.levy_measure.is_zero()
    }

    /// The Lévy–Khintchine integrand at `x` for frequency `y`.
    fn lk_kernel(y: &[f64], x: &[f64]) -> Complex64 {
        let v = linalg::dot(y, x);
        let osc = Complex64::new(0.0, v).exp() - 1.0;
        if linalg::norm(x) <= 1.0 {
            osc - Complex64::new(0.0, v)
        } else {
            osc
        }
    }

    /// Evaluate the Lévy exponent Φ(y); exact summation for atoms, adaptive
    /// quadrature (rel 1e-10, abs 1e-12) for parametric radial families.
    pub fn levy_exponent(&self, y: &[f64]) -> Result<LevyExponentValue, LevyError> {
        if y.len() != self.dim {
            return Err(LevyError::InvalidTriplet(format!(
                "evaluation point dimension {} != {}",
                y.len(),
                self.dim
            )));
        }
        let linear = Complex64::new(0.0, linalg::dot(y, &self.shift));
        let gaussian = Complex64::new(-0.5 * linalg::quadratic_form(&self.covariance, y), 0.0);
        let jump = self
            .levy_measure
            .integrate(QuadTol::INNER, &[1.0], &|x: &[f64]| Self::lk_kernel(y, x));
        if jump.divergent || !jump.converged {
            return Err(LevyError::NonConvergedQuadrature {
                context: format!("evaluating the Lévy exponent at y = {y:?}"),
            });
        }
        Ok(LevyExponentValue {
            value: linear + gaussian + jump.value,
            y: y.to_vec(),
            quadrature_error: jump.error,
        })
    }

    /// Convolution power μ^{⋆c} = [c·a, c·R, c·M], c ≥ 0.
    pub fn convolution_power(&self, c: f64) -> Result<LevyTriplet, LevyError> {
        if c < 0.0 {
            return Err(LevyError::NegativePower(c));
        }
        if c == 0.0 {
            return Ok(LevyTriplet::zero(self.dim));
        }
        let measure = if self.levy_measure.is_zero() {
            LevyMeasure::zero()
        } else {
            LevyMeasure::Scaled { inner: Box::new(self.levy_measure.clone()), factor: c }
        };
        Ok(LevyTriplet {
            dim: self.dim,
            shift: linalg::scale(&self.shift, c),
            covariance: self.covariance.scale(c),
            levy_measure: measure,
        })
    }

    /// Dilation T_c μ = [a_c, c²R, T_c M] with the compensator correction
    /// a_c = c·a + c·∫ x [1_B(cx) − 1_B(x)] M(dx); the correction integral
    /// lives on the shell where the two indicators differ.
    pub fn dilate(&self, c: f64) -> Result<LevyTriplet, LevyError> {
        if c == 0.0 {
            return Err(LevyError::ZeroScale);
        }
        let mut shift = linalg::scale(&self.shift, c);
        if !self.levy_measure.is_zero() && c.abs() != 1.0 {
            let inv = 1.0 / c.abs();
            for i in 0..self.dim {
                let q = self.levy_measure.integrate(
                    QuadTol::INNER,
                    &[1.0, inv],
                    &move |x: &[f64]| {
                        let r = linalg::norm(x);
                        let sign = (if r * c.abs() <= 1.0 { 1.0 } else { 0.0 })
                            - (if r <= 1.0 { 1.0 } else { 0.0 });
                        sign * x[i]
                    },
                );
                if q.divergent || !q.converged {
                    return Err(LevyError::NonConvergedQuadrature {
                        context: "dilation shift correction".into(),
                    });
                }
                shift[i] += c * q.value;
            }
        }
        let measure = if self.levy_measure.is_zero() {
            LevyMeasure::zero()
        } else {
            LevyMeasure::Dilated { inner: Box::new(self.levy_measure.clone()), scale: c }
        };
        Ok(LevyTriplet {
            dim: self.dim,
            shift,
            covariance: self.covariance.scale(c * c),
            levy_measure: measure,
        })
    }
}

/// Free function mirroring `LevyMeasure::validate`.
pub fn validate_levy_measure(m: &LevyMeasure) -> ValidityReport {
    m.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_1d() -> Vec<(Vec<f64>, f64)> {
        vec![(vec![1.0], 1.0)]
    }

    #[test]
    fn exponent_of_empty_triplet_is_zero() {
        let t = LevyTriplet::zero(1);
        for &y in &[0.0, 1.0, -3.7] {
            let phi = t.levy_exponent(&[y]).unwrap();
            assert_eq!(phi.value, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn exponent_of_pure_shift() {
        let t = LevyTriplet::new_1d(1.0, 0.0, LevyMeasure::zero()).unwrap();
        let phi = t.levy_exponent(&[2.0]).unwrap();
        assert_relative_eq!(phi.value.im, 2.0, epsilon = 1e-15);
        assert_relative_eq!(phi.value.re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exponent_single_atom_matches_hand_computation() {
        // M = δ_{0.5} mass 1, y = 1: e^{0.5i} − 1 − 0.5i (atom inside the ball).
        let t = LevyTriplet::new_1d(0.0, 0.0, LevyMeasure::delta_1d(0.5, 1.0)).unwrap();
        let phi = t.levy_exponent(&[1.0]).unwrap();
        let expected = Complex64::new(0.0, 0.5).exp() - 1.0 - Complex64::new(0.0, 0.5);
        assert!((phi.value - expected).norm() < 1e-15);
        assert_eq!(phi.quadrature_error, 0.0);
    }

    #[test]
    fn exponent_radial_matches_atom_free_oracle() {
        // Exp(rate 1) radial measure on ℝ: ∫₀^∞ (e^{iyr}−1−iyr·1_{r≤1}) e^{-r} dr.
        let m = LevyMeasure::Radial {
            directions: unit_1d(),
            family: RadialFamily::Exp { rate: 1.0 },
        };
        let t = LevyTriplet::new_1d(0.0, 0.0, m).unwrap();
        let y = 1.5;
        let phi = t.levy_exponent(&[y]).unwrap();
        // Oracle by direct quadrature with a different decomposition.
        let osc = quad::integrate_interval(
            &mut |r: f64| (Complex64::new(0.0, y * r).exp() - 1.0) * (-r).exp(),
            0.0,
            f64::INFINITY,
            QuadTol::INNER,
            &[],
        );
        let comp = quad::adaptive(&mut |r: f64| r * (-r).exp(), 0.0, 1.0, QuadTol::INNER);
        let expected = osc.value - Complex64::new(0.0, y * comp.value);
        assert!((phi.value - expected).norm() < 1e-9);
    }

    #[test]
    fn convolution_power_scales_triplet() {
        let t = LevyTriplet::new_1d(1.5, 2.0, LevyMeasure::delta_1d(1.0, 3.0)).unwrap();
        let t2 = t.convolution_power(2.0).unwrap();
        assert_relative_eq!(t2.shift()[0], 3.0);
        assert_relative_eq!(t2.covariance()[(0, 0)], 4.0);
        let mass = t2.levy_measure().mass_above(0.5);
        assert_relative_eq!(mass, 6.0);
    }

    #[test]
    fn convolution_power_identity_and_zero() {
        let t = LevyTriplet::new_1d(1.5, 2.0, LevyMeasure::delta_1d(1.0, 3.0)).unwrap();
        let same = t.convolution_power(1.0).unwrap();
        let y = [0.7];
        assert!(
            (t.levy_exponent(&y).unwrap().value - same.levy_exponent(&y).unwrap().value).norm()
                < 1e-14
        );
        let zero = t.convolution_power(0.0).unwrap();
        assert_eq!(zero.levy_exponent(&y).unwrap().value, Complex64::new(0.0, 0.0));
        assert!(t.convolution_power(-1.0).is_err());
    }

    #[test]
    fn dilate_gaussian_scales_variance() {
        let t = LevyTriplet::new_1d(0.0, 2.0, LevyMeasure::zero()).unwrap();
        let d = t.dilate(3.0).unwrap();
        assert_relative_eq!(d.covariance()[(0, 0)], 18.0);
        assert_eq!(d.shift()[0], 0.0);
    }

    #[test]
    fn dilate_atom_crossing_the_ball() {
        // δ₂, c = 0.25: cx = 0.5 enters B while x = 2 is outside, so the
        // correction is 0.25·2·(1−0) = 0.5 and the measure becomes δ_{0.5}.
        let t = LevyTriplet::new_1d(0.0, 0.0, LevyMeasure::delta_1d(2.0, 1.0)).unwrap();
        let d = t.dilate(0.25).unwrap();
        assert_relative_eq!(d.shift()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(d.levy_measure().mass_above(0.49), 1.0);
        assert_relative_eq!(d.levy_measure().mass_above(0.51), 0.0);
    }

    #[test]
    fn dilation_is_cf_scaling() {
        // Φ_{T_c μ}(y) = Φ_μ(c y).
        let t = LevyTriplet::new_1d(0.3, 0.7, LevyMeasure::delta_1d(0.8, 2.0)).unwrap();
        for &c in &[0.25, 2.0, -1.5] {
            let d = t.dilate(c).unwrap();
            for &y in &[0.5, 1.0, 2.3] {
                let lhs = d.levy_exponent(&[y]).unwrap().value;
                let rhs = t.levy_exponent(&[c * y]).unwrap().value;
                assert!((lhs - rhs).norm() < 1e-9, "c={c} y={y}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn validate_atomic_measure() {
        // Atom on the sphere ‖x‖ = 1 belongs to the small-ball region.
        let report = LevyMeasure::delta_1d(1.0, 5.0).validate();
        assert!(report.is_levy);
        assert_relative_eq!(report.small_ball_integral, 5.0);
        assert_relative_eq!(report.tail_mass, 0.0);
    }

    #[test]
    fn validate_radial_alpha_one() {
        // Density r^{-2} on (0,1]: ∫₀¹ r²·r^{-2} dr = 1.
        let m = LevyMeasure::Radial {
            directions: unit_1d(),
            family: RadialFamily::Power { alpha: 1.0, r_min: 0.0, r_max: 1.0 },
        };
        let report = m.validate();
        assert!(report.is_levy);
        assert_relative_eq!(report.small_ball_integral, 1.0, max_relative = 1e-9);
        assert_relative_eq!(report.tail_mass, 0.0);
    }

    #[test]
    fn validate_divergent_radial() {
        // Density r^{-3} on (0,1]: ∫₀¹ r²·r^{-3} dr = ∫₀¹ r^{-1} dr diverges.
        let m = LevyMeasure::Radial {
            directions: unit_1d(),
            family: RadialFamily::Power { alpha: 2.0, r_min: 0.0, r_max: 1.0 },
        };
        let report = m.validate();
        assert!(!report.is_levy);
        assert!(report.small_ball_integral.is_infinite());
        assert_relative_eq!(report.tail_mass, 0.0);
    }

    #[test]
    fn rejects_atom_at_origin_and_negative_mass() {
        assert!(LevyMeasure::delta_1d(0.0, 1.0).check_structure().is_err());
        assert!(LevyMeasure::delta_1d(1.0, -1.0).check_structure().is_err());
    }

    #[test]
    fn rejects_non_psd_covariance() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(LevyTriplet::new_unchecked(vec![0.0, 0.0], r, LevyMeasure::zero()).is_err());
    }

    #[test]
    fn powerexp_tail_mass_closed_form() {
        let fam = RadialFamily::PowerExp { alpha: 0.5, cutoff: f64::INFINITY };
        let direct = quad::integrate_shells_up(
            &mut |r: f64| r.powf(-1.5) * (-r).exp(),
            0.3,
            QuadTol::INNER,
            &[],
        );
        assert_relative_eq!(fam.tail_mass(0.3), direct.value, max_relative = 1e-9);
    }

    #[test]
    fn flatten_atoms_through_wrappers() {
        let m = LevyMeasure::Scaled {
            inner: Box::new(LevyMeasure::Dilated {
                inner: Box::new(LevyMeasure::delta_1d(2.0, 1.0)),
                scale: -0.5,
            }),
            factor: 3.0,
        };
        let atoms = m.flatten_atoms().unwrap();
        assert_eq!(atoms.len(), 1);
        assert_relative_eq!(atoms[0].point[0], -1.0);
        assert_relative_eq!(atoms[0].mass, 3.0);
    }
}
