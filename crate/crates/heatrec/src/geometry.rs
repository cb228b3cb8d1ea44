//! Space-time cones, the half-space admissibility check, and the visibility
//! constants (μ, C).
//!
//! The reconstruction formulas apply only when the measured sets dominate the
//! probe direction: writing `level(x,t) = (x,t)ᵀ·ω(c)`, the three conditions
//! are that `level` on `Ω×{T}`, on `(Ω∖U)×{0}`, and on the inaccessible part
//! `(∂Ω×(0,T))∖Γ` all stay strictly below `level(target)`.
//! [`validate_config`] returns the three margins (inf of
//! [`halfspace_margin`]) and rejects a scenario when any is ≤ 0.
//!
//! The enclosure method integrates the probe exponential over a cone `D` with
//! vertex at the target. For n = 1 this is the triangle
//!
//! ```text
//! P  = (x₀, t₀)
//! P₀ = (x₀ - (δ/c)√(1+c²) ω,  t₀)
//! P₁ = (x₀,  t₀ + δ√(1+c²))
//! ```
//!
//! whose non-vertex edge P₀P₁ lies on the plane `level = level(target) - δ`.
//! The cone is *visible* with exponent μ and constant C when
//! `τ^μ e^{-Φ(target)} ∫_D e^{Φ} ρ dq → C·ρ(target)`; for the n = 1 triangle
//! the numeric limit is `μ = 3`, `C = -(1+i)/(4c³)`, independent of δ (the
//! limit localizes at the vertex and sees only the opening angle). An
//! alternative printed closed form, `-(1+i)δ(1+c²)/(4c⁴)`, is δ-dependent and
//! disagrees with the numeric limit by the factor `c/(δ(1+c²))`; this module
//! reports both candidates and the toolkit treats the oracle-calibrated value
//! as operative (see the `oracle` module).

use thiserror::Error;

use num_complex::Complex64;

use crate::quad::GaussLegendre;
use crate::space_time::{halfspace_margin, ProbeDirection, SpaceTimePoint};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("only n = 1 scenarios are constructible end-to-end here (got n = {0})")]
    UnsupportedDimension(usize),
    #[error("target must lie strictly inside Omega x (0, T)")]
    TargetOutside,
    #[error("delta must be positive and keep the cone inside the domain")]
    BadDelta,
    #[error("final-time condition violated: margin {0:.6} <= 0 on Omega x {{T}}")]
    FinalTimeMargin(f64),
    #[error("initial-data condition violated: margin {0:.6} <= 0 on (Omega \\ U) x {{0}}")]
    InitialDataMargin(f64),
    #[error(
        "inaccessible-boundary condition violated: margin {0:.6} <= 0 on (dOmega x (0,T)) \\ Gamma"
    )]
    BoundaryMargin(f64),
}

/// The n = 1 scenario: interval domain, time horizon, accessible boundary
/// points, initial-data subinterval, and the interior target.
#[derive(Clone, Debug)]
pub struct ScenarioGeometry {
    /// Ω = (x_lo, x_hi)
    pub omega: (f64, f64),
    /// time horizon T
    pub t_end: f64,
    /// accessible boundary: which endpoints of Ω carry data (left, right)
    pub gamma_left: bool,
    pub gamma_right: bool,
    /// U = (u_lo, u_hi) ⊆ Ω, the initial-data subinterval
    pub u_interval: (f64, f64),
    /// reconstruction point (x₀, t₀)
    pub target: SpaceTimePoint,
}

impl ScenarioGeometry {
    /// The criterion scenario used throughout: Ω = (0,1), T = 2, Γ = {1},
    /// U = (0,1), target (0.5, 0.5).
    pub fn standard_1d() -> Self {
        Self {
            omega: (0.0, 1.0),
            t_end: 2.0,
            gamma_left: false,
            gamma_right: true,
            u_interval: (0.0, 1.0),
            target: SpaceTimePoint::xt(0.5, 0.5),
        }
    }

    fn check_shape(&self) -> Result<(), GeometryError> {
        let (lo, hi) = self.omega;
        let x0 = self.target.x.as_slice()[0];
        let t0 = self.target.t;
        if self.target.dim() != 1 {
            return Err(GeometryError::UnsupportedDimension(self.target.dim()));
        }
        if !(lo < hi && self.t_end > 0.0 && x0 > lo && x0 < hi && t0 > 0.0 && t0 < self.t_end) {
            return Err(GeometryError::TargetOutside);
        }
        Ok(())
    }
}

/// The three admissibility margins of a scenario under a probe.
#[derive(Clone, Copy, Debug)]
pub struct Margins {
    /// inf over Ω×{T}
    pub final_time: f64,
    /// inf over (Ω∖U)×{0}; +∞ when U covers Ω
    pub initial_data: f64,
    /// inf over the inaccessible boundary (∂Ω×(0,T))∖Γ; +∞ when Γ = ∂Ω
    pub boundary: f64,
}

impl Margins {
    pub fn min(&self) -> f64 {
        self.final_time.min(self.initial_data).min(self.boundary)
    }
}

/// Compute the three margins; the level function is affine, so each infimum
/// is attained at an interval endpoint and is evaluated exactly. Errors name
/// the violated condition.
pub fn validate_config(
    geom: &ScenarioGeometry,
    probe: &ProbeDirection,
) -> Result<Margins, GeometryError> {
    geom.check_shape()?;
    let (lo, hi) = geom.omega;
    let margin = |x: f64, t: f64| halfspace_margin(probe, &geom.target, &SpaceTimePoint::xt(x, t));

    // Omega x {T}: affine in x, min at an endpoint.
    let m_t = margin(lo, geom.t_end).min(margin(hi, geom.t_end));
    if m_t <= 0.0 {
        return Err(GeometryError::FinalTimeMargin(m_t));
    }

    // (Omega \ U) x {0}: at most two residual intervals.
    let (ulo, uhi) = geom.u_interval;
    let mut m_u = f64::INFINITY;
    if ulo > lo {
        m_u = m_u.min(margin(lo, 0.0).min(margin(ulo, 0.0)));
    }
    if uhi < hi {
        m_u = m_u.min(margin(uhi, 0.0).min(margin(hi, 0.0)));
    }
    if m_u <= 0.0 {
        return Err(GeometryError::InitialDataMargin(m_u));
    }

    // inaccessible boundary points over t in (0, T): the level is affine in
    // t, so the inf is at t -> 0 or t -> T.
    let mut m_g = f64::INFINITY;
    if !geom.gamma_left {
        m_g = m_g.min(margin(lo, 0.0).min(margin(lo, geom.t_end)));
    }
    if !geom.gamma_right {
        m_g = m_g.min(margin(hi, 0.0).min(margin(hi, geom.t_end)));
    }
    if m_g <= 0.0 {
        return Err(GeometryError::BoundaryMargin(m_g));
    }

    Ok(Margins { final_time: m_t, initial_data: m_u, boundary: m_g })
}

/// The space-time cone D (n = 1: a triangle with vertex at the target).
#[derive(Clone, Debug)]
pub struct ConeRegion {
    pub target: SpaceTimePoint,
    pub probe: ProbeDirection,
    pub delta: f64,
    /// vertices P, P₀, P₁ (vertex first)
    pub vertices: [SpaceTimePoint; 3],
}

/// Visibility exponent and constant of a cone.
#[derive(Clone, Copy, Debug)]
pub struct VisibilityConstant {
    pub mu: f64,
    pub c: Complex64,
}

/// Build the n = 1 triangle cone. `delta` is the depth of the bottom edge
/// below the target's level plane.
pub fn build_cone(
    target: &SpaceTimePoint,
    probe: &ProbeDirection,
    delta: f64,
) -> Result<ConeRegion, GeometryError> {
    if target.dim() != 1 {
        return Err(GeometryError::UnsupportedDimension(target.dim()));
    }
    if !(delta > 0.0) {
        return Err(GeometryError::BadDelta);
    }
    let c = probe.c();
    let w = probe.omega().as_slice()[0];
    let sq = (1.0 + c * c).sqrt();
    let x0 = target.x.as_slice()[0];
    let t0 = target.t;
    let p0 = SpaceTimePoint::xt(x0 - (delta / c) * sq * w, t0);
    let p1 = SpaceTimePoint::xt(x0, t0 + delta * sq);
    Ok(ConeRegion { target: *target, probe: *probe, delta, vertices: [*target, p0, p1] })
}

/// Default cone depth: 0.4 × min(admissibility margins, distance of the
/// target to the boundary of Ω×(0,T) in level units along the two cone
/// edges). Keeps the closed cone strictly inside the domain.
pub fn default_delta(geom: &ScenarioGeometry, probe: &ProbeDirection, margins: &Margins) -> f64 {
    let c = probe.c();
    let sq = (1.0 + c * c).sqrt();
    let x0 = geom.target.x.as_slice()[0];
    let t0 = geom.target.t;
    let w = probe.omega().as_slice()[0];
    // largest delta for which P0 stays inside Omega and P1 below T
    let dx = if w > 0.0 { x0 - geom.omega.0 } else { geom.omega.1 - x0 };
    let d_space = dx * c / sq;
    let d_time = (geom.t_end - t0) / sq;
    0.4 * margins.min().min(d_space).min(d_time)
}

impl ConeRegion {
    /// Signed area of the triangle.
    pub fn area(&self) -> f64 {
        let [p, p0, p1] = &self.vertices;
        0.5 * ((p0.x.as_slice()[0] - p.x.as_slice()[0]) * (p1.t - p.t)
            - (p1.x.as_slice()[0] - p.x.as_slice()[0]) * (p0.t - p.t))
            .abs()
    }

    /// Triangle vertices as (x, t) pairs, vertex first.
    pub fn xy(&self) -> [(f64, f64); 3] {
        let v = &self.vertices;
        [
            (v[0].x.as_slice()[0], v[0].t),
            (v[1].x.as_slice()[0], v[1].t),
            (v[2].x.as_slice()[0], v[2].t),
        ]
    }
}

/// Closed-form visibility constants for the n = 1 triangle: μ = 3 and the two
/// printed candidates. `c_vertex` (the δ-independent vertex-limit value,
/// confirmed by the numeric oracle) is the operative one; `c_delta_form` is
/// the alternative δ-dependent closed form, retained for the calibration
/// report. Their ratio is `c/(δ(1+c²))`.
pub fn analytic_constant(cone: &ConeRegion) -> (VisibilityConstant, VisibilityConstant) {
    let c = cone.probe.c();
    let d = cone.delta;
    let vertex = Complex64::new(-1.0, -1.0) / (4.0 * c * c * c);
    let delta_form = Complex64::new(-1.0, -1.0) * d * (1.0 + c * c) / (4.0 * c * c * c * c);
    (
        VisibilityConstant { mu: 3.0, c: vertex },
        VisibilityConstant { mu: 3.0, c: delta_form },
    )
}

/// Tensor Gauss–Legendre nodes over the triangle via the square-to-triangle
/// (Duffy) collapse: positive weights summing to the exact area.
pub fn cone_quadrature(cone: &ConeRegion, order: usize) -> Vec<(SpaceTimePoint, f64)> {
    let g = GaussLegendre::new(order);
    let [(px, pt), (ax, at), (bx, bt)] = cone.xy();
    let mut out = Vec::with_capacity(order * order);
    // map (u, v) in [0,1]^2 to P + u[(A-P) + v(B-A)], Jacobian 2·Area·u
    let e1 = (ax - px, at - pt);
    let e2 = (bx - ax, bt - at);
    let jac2 = ((ax - px) * (bt - pt) - (bx - px) * (at - pt)).abs();
    for (u, wu) in g.mapped(0.0, 1.0) {
        for (v, wv) in g.mapped(0.0, 1.0) {
            let x = px + u * (e1.0 + v * e2.0);
            let t = pt + u * (e1.1 + v * e2.1);
            out.push((SpaceTimePoint::xt(x, t), wu * wv * jac2 * u));
        }
    }
    out
}
