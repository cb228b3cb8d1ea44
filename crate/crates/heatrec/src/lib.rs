//! Numerical toolkit for recovering the interior temperature `u(x0, t0)` of a
//! heat-conducting body from lateral Cauchy data: temperature and flux measured
//! on an accessible part `Γ` of the boundary over a finite time window, plus
//! initial data on a subregion `U`.
//!
//! Two limit formulas are implemented, both built on a special fundamental
//! solution `K_z` of the backward heat equation `∂_t v + Δv = 0` attached to a
//! large complex frequency `z = z(τ)`:
//!
//! * a Carleman-type formula, `u(x0,t0) = -lim_{τ→∞} I(τ)` with the test
//!   function `v = K_z(x - x0, t - t0)`, and
//! * the enclosure method, `u(x0,t0) = -(1/C) lim_{τ→∞} τ^μ e^{-Φ(x0,t0)} I(τ)`
//!   with `v` a space-time convolution of `K_z` over a cone `D` with vertex at
//!   the target, where `(μ, C)` are the cone's visibility constants.
//!
//! Here `I(τ)` is a functional of the measured data only,
//!
//! ```text
//! I(τ) = ∫_Γ {(∂v/∂ν + ρ v) u - h0 v} dS dt - ∫_U v(x,0) u(x,0) dx ,
//! ```
//!
//! and `Φ(x,t) = x·z - t (z·z)` is the probe phase. The real part of `Φ` grows
//! like `e^{+τ·(level)}` on one side of a space-time hyperplane and decays on
//! the other, so all kernel magnitudes are carried in log-domain
//! ([`space_time::PhasedComplex`]) and the large-`τ` assembly can switch to
//! arbitrary-precision arithmetic ([`highprec`]) when the predicted cancellation
//! exceeds what `f64` can resolve.

pub mod bessel;
pub mod caloric;
pub mod config;
pub mod driver;
pub mod faddeeva;
pub mod geometry;
pub mod highprec;
pub mod kernel;
pub mod oracle;
pub mod quad;
pub mod reconstruct;
pub mod space_time;
