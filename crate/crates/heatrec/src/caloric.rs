//! Ground-truth heat-equation data: closed-form caloric fields, a 1-d
//! Crank–Nicolson forward solver with Robin boundary conditions, and trace
//! extraction onto the accessible boundary and the initial-data region.
//!
//! The analytic catalog (`constant`, `exponential`, `heat_kernel`,
//! `polynomial`) satisfies `∂_t u = Δu` identically, so reconstruction error
//! measured against these fields isolates the limit formula and the
//! quadrature, not any PDE discretization. The grid kind wraps the forward
//! solver's output with bilinear interpolation for end-to-end runs.
//!
//! Flux convention: `∂u/∂ν` always uses the *outward* normal. With the Robin
//! coefficient ρ the boundary data is `h₀ = ∂u/∂ν + ρu`; the default ρ ≡ 0
//! reduces the boundary functional to the Wronskian form
//! `(∂v/∂ν)u − (∂u/∂ν)v`.

use thiserror::Error;

use crate::geometry::ScenarioGeometry;
use crate::quad::GaussLegendre;
use crate::space_time::SpatialVec;

#[derive(Debug, Error, PartialEq)]
pub enum CaloricError {
    #[error("heat_kernel source time must be negative, got {0}")]
    SourceNotInPast(f64),
    #[error("forward solver requires Nx, Nt >= 8, got ({0}, {1})")]
    GridTooCoarse(usize, usize),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("grid field does not cover the requested point ({0}, {1})")]
    OutOfRange(f64, f64),
}

/// A solution of the heat equation on Ω×[0,T], with pointwise value and
/// gradient evaluators.
#[derive(Clone, Debug)]
pub enum CaloricField {
    /// u ≡ value
    Constant(f64),
    /// u = e^{a·x + |a|²t}
    Exponential { a: SpatialVec },
    /// u = (4π(t−t_s))^{−n/2} e^{−|x−x_s|²/(4(t−t_s))}, t_s < 0
    HeatKernel { x_s: SpatialVec, t_s: f64 },
    /// u = |x|² + 2nt
    Polynomial { dim: usize },
    /// bilinear interpolant of a forward-solver grid (n = 1)
    Grid(GridField),
}

impl CaloricField {
    pub fn constant(v: f64) -> Self {
        CaloricField::Constant(v)
    }

    pub fn exponential(a: SpatialVec) -> Self {
        CaloricField::Exponential { a }
    }

    pub fn heat_kernel(x_s: SpatialVec, t_s: f64) -> Result<Self, CaloricError> {
        if !(t_s < 0.0) {
            return Err(CaloricError::SourceNotInPast(t_s));
        }
        Ok(CaloricField::HeatKernel { x_s, t_s })
    }

    pub fn polynomial(dim: usize) -> Self {
        CaloricField::Polynomial { dim }
    }

    /// u(x, t)
    pub fn eval(&self, x: &SpatialVec, t: f64) -> f64 {
        match self {
            CaloricField::Constant(v) => *v,
            CaloricField::Exponential { a } => (a.dot(x) + a.dot(a) * t).exp(),
            CaloricField::HeatKernel { x_s, t_s } => {
                let n = x.dim() as f64;
                let dt = t - t_s;
                let d = x.sub(x_s);
                (4.0 * std::f64::consts::PI * dt).powf(-0.5 * n)
                    * (-d.dot(&d) / (4.0 * dt)).exp()
            }
            CaloricField::Polynomial { dim } => x.dot(x) + 2.0 * *dim as f64 * t,
            CaloricField::Grid(g) => g.eval(x.as_slice()[0], t),
        }
    }

    /// ∇u(x, t)
    pub fn grad(&self, x: &SpatialVec, t: f64) -> SpatialVec {
        match self {
            CaloricField::Constant(_) => SpatialVec::zeros(x.dim()),
            CaloricField::Exponential { a } => a.scale(self.eval(x, t)),
            CaloricField::HeatKernel { x_s, t_s } => {
                let dt = t - t_s;
                x.sub(x_s).scale(-self.eval(x, t) / (2.0 * dt))
            }
            CaloricField::Polynomial { .. } => x.scale(2.0),
            CaloricField::Grid(g) => SpatialVec::scalar(g.grad_x(x.as_slice()[0], t)),
        }
    }

    /// |∂_t u − Δu| by centered finite differences, relative to the local
    /// field scale. Analytic kinds should return ≤ 1e-6.
    pub fn residual_fd(&self, x: &SpatialVec, t: f64, h: f64) -> f64 {
        let ut = (self.eval(x, t + h) - self.eval(x, t - h)) / (2.0 * h);
        let mut lap = 0.0;
        for k in 0..x.dim() {
            let mut xp = *x;
            let mut xm = *x;
            xp.set(k, x.as_slice()[k] + h);
            xm.set(k, x.as_slice()[k] - h);
            lap += (self.eval(&xp, t) - 2.0 * self.eval(x, t) + self.eval(&xm, t)) / (h * h);
        }
        let scale = self.eval(x, t).abs().max(1.0);
        (ut - lap).abs() / scale
    }
}

/// Uniform space-time grid over [x_lo, x_hi]×[0, t_end] with row-major values
/// (time index outer, space index inner) and bilinear interpolation.
#[derive(Clone, Debug)]
pub struct GridField {
    pub x_lo: f64,
    pub x_hi: f64,
    pub t_end: f64,
    pub nx: usize,
    pub nt: usize,
    /// values[m * nx + i] = u(x_i, t_m)
    pub values: Vec<f64>,
}

impl GridField {
    fn hx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    fn ht(&self) -> f64 {
        self.t_end / (self.nt - 1) as f64
    }

    fn at(&self, i: usize, m: usize) -> f64 {
        self.values[m * self.nx + i]
    }

    /// Bilinear interpolation; clamps to the grid box.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let fx = ((x - self.x_lo) / self.hx()).clamp(0.0, (self.nx - 1) as f64);
        let ft = (t / self.ht()).clamp(0.0, (self.nt - 1) as f64);
        let i = (fx as usize).min(self.nx - 2);
        let m = (ft as usize).min(self.nt - 2);
        let ax = fx - i as f64;
        let at = ft - m as f64;
        (1.0 - at) * ((1.0 - ax) * self.at(i, m) + ax * self.at(i + 1, m))
            + at * ((1.0 - ax) * self.at(i, m + 1) + ax * self.at(i + 1, m + 1))
    }

    /// ∂u/∂x by 4th-order one-sided/centered differences in space, linearly
    /// interpolated between the two bracketing time levels (used for flux
    /// extraction).
    pub fn grad_x(&self, x: f64, t: f64) -> f64 {
        let h = self.hx();
        let ft = (t / self.ht()).clamp(0.0, (self.nt - 1) as f64);
        let m = (ft as usize).min(self.nt - 2);
        let at_frac = ft - m as f64;
        let i = ((((x - self.x_lo) / h).round() as usize).min(self.nx - 1)).max(0);
        let dx_level = |lvl: usize| {
            let u = |j: usize| self.at(j, lvl);
            if i >= 2 && i + 2 < self.nx {
                (u(i - 2) - 8.0 * u(i - 1) + 8.0 * u(i + 1) - u(i + 2)) / (12.0 * h)
            } else if i < 2 {
                // 4th-order forward difference
                (-25.0 * u(i) + 48.0 * u(i + 1) - 36.0 * u(i + 2) + 16.0 * u(i + 3)
                    - 3.0 * u(i + 4))
                    / (12.0 * h)
            } else {
                (25.0 * u(i) - 48.0 * u(i - 1) + 36.0 * u(i - 2) - 16.0 * u(i - 3)
                    + 3.0 * u(i - 4))
                    / (12.0 * h)
            }
        };
        (1.0 - at_frac) * dx_level(m) + at_frac * dx_level(m + 1)
    }

    /// Flat CSV serialization: one header line `nx,nt,x_lo,x_hi,t_end`
    /// followed by the row-major values, one time level per line.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{},{},{},{}\n", self.nx, self.nt, self.x_lo, self.x_hi, self.t_end);
        for m in 0..self.nt {
            let row: Vec<String> =
                (0..self.nx).map(|i| format!("{:.17e}", self.at(i, m))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// One boundary measurement: position, time, trace values, and the quadrature
/// weight that turns the sample list into an integral over Γ×(0,T).
#[derive(Clone, Copy, Debug)]
pub struct GammaSample {
    pub x: f64,
    pub t: f64,
    /// outward normal at x (n = 1: ±1)
    pub nu: f64,
    pub u: f64,
    /// ∂u/∂ν
    pub flux: f64,
    pub weight: f64,
}

/// One initial-data measurement on U×{0}.
#[derive(Clone, Copy, Debug)]
pub struct InitialSample {
    pub x: f64,
    pub u: f64,
    pub weight: f64,
}

/// The data the reconstruction formulas consume: lateral Cauchy data on
/// Γ×(0,T) and initial data on U, with quadrature weights, plus the Robin
/// coefficient ρ (so h₀ = flux + ρ·u is derivable per sample).
#[derive(Clone, Debug, Default)]
pub struct MeasurementSet {
    pub gamma_samples: Vec<GammaSample>,
    pub initial_samples: Vec<InitialSample>,
    /// constant Robin coefficient; 0 gives the pure Wronskian functional
    pub robin_rho: f64,
}

impl MeasurementSet {
    /// Additive noise hook: perturb u and flux samples in place. The caller
    /// supplies the perturbation per sample index (deterministic seeding is
    /// the caller's concern).
    pub fn perturb(&mut self, mut noise: impl FnMut(usize) -> (f64, f64)) {
        for (k, s) in self.gamma_samples.iter_mut().enumerate() {
            let (du, dflux) = noise(k);
            s.u += du;
            s.flux += dflux;
        }
    }
}

/// Quadrature resolution for trace extraction.
#[derive(Clone, Copy, Debug)]
pub struct TraceOrders {
    /// Gauss–Legendre order per time panel on Γ×(0,T)
    pub time_order: usize,
    /// number of equal time panels
    pub time_panels: usize,
    /// Gauss–Legendre order per panel on U
    pub space_order: usize,
    pub space_panels: usize,
}

impl Default for TraceOrders {
    fn default() -> Self {
        Self { time_order: 16, time_panels: 8, space_order: 16, space_panels: 4 }
    }
}

/// Sample a field on the accessible boundary and the initial-data interval.
/// Flux uses the field's gradient evaluator (analytic kinds) or one-sided
/// differences (grid kind) dotted with the outward normal.
pub fn extract_traces(
    field: &CaloricField,
    geom: &ScenarioGeometry,
    robin_rho: f64,
    orders: &TraceOrders,
) -> MeasurementSet {
    let gt = GaussLegendre::new(orders.time_order);
    let gx = GaussLegendre::new(orders.space_order);
    let mut set = MeasurementSet { robin_rho, ..Default::default() };

    let mut boundary = Vec::new();
    if geom.gamma_left {
        boundary.push((geom.omega.0, -1.0));
    }
    if geom.gamma_right {
        boundary.push((geom.omega.1, 1.0));
    }
    for (xb, nu) in boundary {
        let xv = SpatialVec::scalar(xb);
        for p in 0..orders.time_panels {
            let lo = geom.t_end * p as f64 / orders.time_panels as f64;
            let hi = geom.t_end * (p + 1) as f64 / orders.time_panels as f64;
            for (t, w) in gt.mapped(lo, hi) {
                set.gamma_samples.push(GammaSample {
                    x: xb,
                    t,
                    nu,
                    u: field.eval(&xv, t),
                    flux: nu * field.grad(&xv, t).as_slice()[0],
                    weight: w,
                });
            }
        }
    }

    let (ulo, uhi) = geom.u_interval;
    for p in 0..orders.space_panels {
        let lo = ulo + (uhi - ulo) * p as f64 / orders.space_panels as f64;
        let hi = ulo + (uhi - ulo) * (p + 1) as f64 / orders.space_panels as f64;
        for (x, w) in gx.mapped(lo, hi) {
            set.initial_samples.push(InitialSample {
                x,
                u: field.eval(&SpatialVec::scalar(x), 0.0),
                weight: w,
            });
        }
    }
    set
}

/// Crank–Nicolson solve of `∂_t u = ∂_x² u` on Ω×(0, T) with Robin data
/// `∂u/∂ν + ρu = h₀` at both endpoints, imposed through ghost points so the
/// boundary rows stay second-order. Unconditionally stable; `grid = (Nx, Nt)`
/// counts nodes including both ends.
pub fn solve_forward(
    geom: &ScenarioGeometry,
    initial: impl Fn(f64) -> f64,
    h0: impl Fn(f64, f64) -> f64,
    rho: impl Fn(f64, f64) -> f64,
    grid: (usize, usize),
) -> Result<CaloricField, CaloricError> {
    let (nx, nt) = grid;
    if nx < 8 || nt < 8 {
        return Err(CaloricError::GridTooCoarse(nx, nt));
    }
    let (x_lo, x_hi) = geom.omega;
    let hx = (x_hi - x_lo) / (nx - 1) as f64;
    let ht = geom.t_end / (nt - 1) as f64;
    let r = ht / (2.0 * hx * hx);

    let xs: Vec<f64> = (0..nx).map(|i| x_lo + i as f64 * hx).collect();
    let mut u: Vec<f64> = xs.iter().map(|&x| initial(x)).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(CaloricError::NonFinite("initial data"));
    }
    let mut values = Vec::with_capacity(nx * nt);
    values.extend_from_slice(&u);

    // Thomas-algorithm workspaces
    let mut diag = vec![0.0; nx];
    let mut rhs = vec![0.0; nx];
    let mut cp = vec![0.0; nx];

    for m in 1..nt {
        let t_old = (m - 1) as f64 * ht;
        let t_new = m as f64 * ht;

        // Laplacian with ghost elimination, at time level t with state w:
        //   interior: (w[i-1] - 2w[i] + w[i+1]) / hx²
        //   left:     (2w[1] - 2(1 + hx·ρ_l)w[0]) / hx² + 2 h0_l / hx
        //   right:    (2w[nx-2] - 2(1 + hx·ρ_r)w[nx-1]) / hx² + 2 h0_r / hx
        let lap = |w: &[f64], t: f64, out: &mut Vec<f64>| {
            out.clear();
            out.push(
                (2.0 * w[1] - 2.0 * (1.0 + hx * rho(x_lo, t)) * w[0]) / (hx * hx)
                    + 2.0 * h0(x_lo, t) / hx,
            );
            for i in 1..nx - 1 {
                out.push((w[i - 1] - 2.0 * w[i] + w[i + 1]) / (hx * hx));
            }
            out.push(
                (2.0 * w[nx - 2] - 2.0 * (1.0 + hx * rho(x_hi, t)) * w[nx - 1]) / (hx * hx)
                    + 2.0 * h0(x_hi, t) / hx,
            );
        };

        // rhs = u + (ht/2) L(u, t_old) + (ht/2)·(boundary source at t_new)
        let mut lap_old = Vec::with_capacity(nx);
        lap(&u, t_old, &mut lap_old);
        for i in 0..nx {
            rhs[i] = u[i] + 0.5 * ht * lap_old[i];
        }
        rhs[0] += ht * h0(x_lo, t_new) / hx;
        rhs[nx - 1] += ht * h0(x_hi, t_new) / hx;

        // (I - (ht/2) L_hom(t_new)) u_new = rhs; L_hom is the homogeneous
        // part of the ghost-eliminated Laplacian
        let rho_l = rho(x_lo, t_new);
        let rho_r = rho(x_hi, t_new);
        diag[0] = 1.0 + 2.0 * r * (1.0 + hx * rho_l);
        for d in diag.iter_mut().take(nx - 1).skip(1) {
            *d = 1.0 + 2.0 * r;
        }
        diag[nx - 1] = 1.0 + 2.0 * r * (1.0 + hx * rho_r);
        let sub = -r; // interior off-diagonals
        let sup0 = -2.0 * r; // boundary rows carry the doubled coupling
        // forward sweep
        cp[0] = sup0 / diag[0];
        rhs[0] /= diag[0];
        for i in 1..nx {
            let a = if i == nx - 1 { sup0 } else { sub };
            let c_above = if i == nx - 1 { 0.0 } else { sub };
            let denom = diag[i] - a * cp[i - 1];
            cp[i] = c_above / denom;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / denom;
        }
        // back substitution
        u[nx - 1] = rhs[nx - 1];
        for i in (0..nx - 1).rev() {
            u[i] = rhs[i] - cp[i] * u[i + 1];
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(CaloricError::NonFinite("time step"));
        }
        values.extend_from_slice(&u);
    }

    Ok(CaloricField::Grid(GridField {
        x_lo,
        x_hi,
        t_end: geom.t_end,
        nx,
        nt,
        values,
    }))
}
