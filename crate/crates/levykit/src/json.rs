//! File-format DTOs shared between the library and the CLI.
//!
//! Triplet files:
//!
//! ```json
//! {
//!   "dim": 1,
//!   "shift": [0.0],
//!   "covariance": [[1.0]],
//!   "levy_measure": {
//!     "kind": "atoms",
//!     "atoms": [{"point": [1.0], "mass": 1.0}]
//!   }
//! }
//! ```
//!
//! Radial measures use `{"kind": "radial", "directions": [{"dir": [...],
//! "weight": w}], "family": {"type": "power_exp" | "power" | "exp", ...}}`.
//!
//! Mixing files:
//!
//! ```json
//! {"kind": "exponential"}
//! {"kind": "rho_alpha", "alpha": 0.5}
//! {"kind": "point_masses", "masses": [{"t": 1.0, "mass": 1.0}]}
//! {"kind": "density", "coeff": 1.0, "exponent": -3.0, "rate": 0.0,
//!  "t_min": 0.0, "t_max": null}
//! ```
//!
//! The density form encodes `coeff · t^exponent · e^{-rate·t}` on
//! (t_min, t_max]; `t_max: null` means ∞.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::levy_core::{Atom, LevyError, LevyMeasure, LevyTriplet, RadialFamily};
use crate::mixing::MixingMeasure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletSpec {
    pub dim: usize,
    pub shift: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub levy_measure: MeasureSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Atoms { atoms: Vec<AtomSpec> },
    Radial { directions: Vec<DirectionSpec>, family: FamilySpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionSpec {
    pub dir: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilySpec {
    /// r^{-alpha-1} e^{-r} on (0, cutoff); cutoff null = ∞.
    PowerExp { alpha: f64, cutoff: Option<f64> },
    /// r^{-alpha-1} on (r_min, r_max); r_max null = ∞.
    Power { alpha: f64, r_min: f64, r_max: Option<f64> },
    /// e^{-rate·r} on (0, ∞).
    Exp { rate: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingSpec {
    PointMasses { masses: Vec<PointMassSpec> },
    Exponential,
    RhoAlpha { alpha: f64 },
    Density {
        coeff: f64,
        exponent: f64,
        #[serde(default)]
        rate: f64,
        #[serde(default)]
        t_min: f64,
        #[serde(default)]
        t_max: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointMassSpec {
    pub t: f64,
    pub mass: f64,
}

impl MeasureSpec {
    pub fn to_measure(&self) -> Result<LevyMeasure, LevyError> {
        let m = match self {
            MeasureSpec::Atoms { atoms } => LevyMeasure::Atoms(
                atoms
                    .iter()
                    .map(|a| Atom::new(a.point.clone(), a.mass))
                    .collect(),
            ),
            MeasureSpec::Radial { directions, family } => LevyMeasure::Radial {
                directions: directions.iter().map(|d| (d.dir.clone(), d.weight)).collect(),
                family: match family {
                    FamilySpec::PowerExp { alpha, cutoff } => RadialFamily::PowerExp {
                        alpha: *alpha,
                        cutoff: cutoff.unwrap_or(f64::INFINITY),
                    },
                    FamilySpec::Power { alpha, r_min, r_max } => RadialFamily::Power {
                        alpha: *alpha,
                        r_min: *r_min,
                        r_max: r_max.unwrap_or(f64::INFINITY),
                    },
                    FamilySpec::Exp { rate } => RadialFamily::Exp { rate: *rate },
                },
            },
        };
        m.check_structure()?;
        Ok(m)
    }

    pub fn from_measure(m: &LevyMeasure) -> Option<MeasureSpec> {
        match m {
            LevyMeasure::Atoms(atoms) => Some(MeasureSpec::Atoms {
                atoms: atoms
                    .iter()
                    .map(|a| AtomSpec { point: a.point.clone(), mass: a.mass })
                    .collect(),
            }),
            LevyMeasure::Radial { directions, family } => {
                let family = match family {
                    RadialFamily::PowerExp { alpha, cutoff } => FamilySpec::PowerExp {
                        alpha: *alpha,
                        cutoff: if cutoff.is_finite() { Some(*cutoff) } else { None },
                    },
                    RadialFamily::Power { alpha, r_min, r_max } => FamilySpec::Power {
                        alpha: *alpha,
                        r_min: *r_min,
                        r_max: if r_max.is_finite() { Some(*r_max) } else { None },
                    },
                    RadialFamily::Exp { rate } => FamilySpec::Exp { rate: *rate },
                    RadialFamily::UserDensity { .. } => return None,
                };
                Some(MeasureSpec::Radial {
                    directions: directions
                        .iter()
                        .map(|(u, w)| DirectionSpec { dir: u.clone(), weight: *w })
                        .collect(),
                    family,
                })
            }
            _ => None,
        }
    }
}

impl TripletSpec {
    pub fn to_triplet(&self) -> Result<LevyTriplet, LevyError> {
        if self.shift.len() != self.dim || self.covariance.len() != self.dim {
            return Err(LevyError::InvalidTriplet(
                "dim does not match shift/covariance shapes".into(),
            ));
        }
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.covariance.iter().enumerate() {
            if row.len() != self.dim {
                return Err(LevyError::InvalidTriplet("ragged covariance".into()));
            }
            for (j, v) in row.iter().enumerate() {
                cov[(i, j)] = *v;
            }
        }
        LevyTriplet::new_unchecked(self.shift.clone(), cov, self.levy_measure.to_measure()?)
    }
}

impl MixingSpec {
    pub fn to_mixing(&self) -> Result<MixingMeasure, crate::mixing::MixingError> {
        let m = match self {
            MixingSpec::PointMasses { masses } => {
                MixingMeasure::PointMasses(masses.iter().map(|p| (p.t, p.mass)).collect())
            }
            MixingSpec::Exponential => MixingMeasure::Exponential,
            MixingSpec::RhoAlpha { alpha } => MixingMeasure::rho_alpha(*alpha)?,
            MixingSpec::Density { coeff, exponent, rate, t_min, t_max } => {
                let (c, p, q) = (*coeff, *exponent, *rate);
                MixingMeasure::density(
                    move |t: f64| c * t.powf(p) * (-q * t).exp(),
                    *t_min,
                    t_max.unwrap_or(f64::INFINITY),
                    format!("{c}·t^{p}·e^(-{q}t)"),
                )
            }
        };
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_roundtrip() {
        let text = r#"{
            "dim": 1,
            "shift": [0.5],
            "covariance": [[2.0]],
            "levy_measure": {"kind": "atoms", "atoms": [{"point": [1.0], "mass": 3.0}]}
        }"#;
        let spec: TripletSpec = serde_json::from_str(text).unwrap();
        let t = spec.to_triplet().unwrap();
        assert_eq!(t.dim(), 1);
        assert_eq!(t.shift()[0], 0.5);
        assert_eq!(t.covariance()[(0, 0)], 2.0);
        assert_eq!(t.levy_measure().mass_above(0.5), 3.0);
    }

    #[test]
    fn radial_family_parses() {
        let text = r#"{
            "kind": "radial",
            "directions": [{"dir": [1.0], "weight": 1.0}],
            "family": {"type": "power_exp", "alpha": 0.5, "cutoff": null}
        }"#;
        let spec: MeasureSpec = serde_json::from_str(text).unwrap();
        let m = spec.to_measure().unwrap();
        assert!(m.validate().is_levy);
    }

    #[test]
    fn mixing_variants_parse() {
        let exp: MixingSpec = serde_json::from_str(r#"{"kind": "exponential"}"#).unwrap();
        assert!(matches!(exp.to_mixing().unwrap(), MixingMeasure::Exponential));
        let rho: MixingSpec =
            serde_json::from_str(r#"{"kind": "rho_alpha", "alpha": 0.5}"#).unwrap();
        assert!(matches!(rho.to_mixing().unwrap(), MixingMeasure::RhoAlpha { .. }));
        let bad: MixingSpec =
            serde_json::from_str(r#"{"kind": "rho_alpha", "alpha": 2.5}"#).unwrap();
        assert!(bad.to_mixing().is_err());
        let dens: MixingSpec = serde_json::from_str(
            r#"{"kind": "density", "coeff": 1.0, "exponent": -3.0, "t_min": 1.0, "t_max": 100.0}"#,
        )
        .unwrap();
        let m = dens.to_mixing().unwrap();
        assert!((m.tail(1.0) - (0.5 - 0.5e-4)).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_triplet() {
        let text = r#"{
            "dim": 2,
            "shift": [0.0],
            "covariance": [[1.0]],
            "levy_measure": {"kind": "atoms", "atoms": []}
        }"#;
        let spec: TripletSpec = serde_json::from_str(text).unwrap();
        assert!(spec.to_triplet().is_err());
    }
}
