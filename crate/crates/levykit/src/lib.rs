//! Numerical toolkit for infinitely divisible laws on ℝ^d (d ≤ 3).
//!
//! The crate is organised around the Lévy–Khintchine triplet `[a, R, M]`:
//!
//! * [`levy_core`] — triplet data model and exact algebra: Lévy exponent
//!   evaluation, convolution powers `μ^{⋆c}`, dilations `T_c μ`, and
//!   Lévy-measure validity diagnostics.
//! * [`mixing`] — the λ-mixture `M^{(λ)}(A) = ∫ (T_t M)(A) λ(dt)` of a Lévy
//!   measure under a mixing measure on (0,∞), with the integrability
//!   criteria that decide when the mixture is again a Lévy measure, the
//!   Lévy spectral function and its Laplace-transform identity.
//! * [`integral_map`] — the random-integral mapping `K^{(λ)}` on the
//!   analytic side: existence conditions, transformed triplets,
//!   characteristic-function transport, the free-infinite-divisibility
//!   kernel, the tempered-stable specialisation, and Laplace-inversion
//!   inverse maps.
//! * [`free_bridge`] — Cauchy / F / Voiculescu transforms and the bridge
//!   identity connecting ⊞-infinitely divisible laws to the image of the
//!   exponential-mixture map.
//! * [`sampler`] — stochastic realisation: compound-Poisson simulation of
//!   Lévy increments, discretisation of `∫ t dY(Λ(t))`, tempered-stable
//!   sampling, the stable-limit experiment, and empirical CFs.
//!
//! Support modules: [`quad`] (adaptive Gauss–Kronrod panels with shell
//! decomposition and divergence detection), [`specfun`] (incomplete gamma
//! functions including negative parameters), [`laplace`] (Gaver–Stehfest
//! inversion), [`rng`] (counter-based splittable generator), [`json`]
//! (file-format DTOs shared with the CLI).

pub mod free_bridge;
pub mod integral_map;
pub mod json;
pub mod laplace;
pub mod levy_core;
pub mod linalg;
pub mod mixing;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod specfun;

pub use free_bridge::{BridgeError, HalfPlanePoint, RealMeasure};
pub use integral_map::{CharFn, ExistenceReport, MapError, MappedTriplet};
pub use levy_core::{Atom, LevyError, LevyExponentValue, LevyMeasure, LevyTriplet, RadialFamily};
pub use mixing::{Cap, DirectionSet, MixingMeasure, MixtureDiagnostic, SpectralFunctionQuery};
pub use sampler::{SampleBatch, SamplerError, SimulationScheme};

