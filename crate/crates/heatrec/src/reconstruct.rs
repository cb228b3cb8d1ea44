//! The boundary functional I(τ) and the two limit formulas that extract
//! u(x₀, t₀) from it: the Carleman-type pointwise formula (probe kernel
//! centered at the target) and the enclosure-method formula (probe kernel
//! smeared over a visible cone), plus the τ-sweep harness and the
//! integration-by-parts consistency check.
//!
//! Everything here is linear in the measured data:
//!
//! ```text
//! I(τ) = ∫_Γ {(∂v/∂ν + ρv)u − h₀ v} dS dt − ∫_U v(x,0) u(x,0) dx
//! ```
//!
//! with h₀ = ∂u/∂ν + ρu, so the Robin terms cancel and only the Wronskian
//! (∂v/∂ν)u − (∂u/∂ν)v survives for exact data.
//!
//! Carleman mode sets v(x,t) = K_z(x−x₀, t−t₀) and reconstructs
//! u(x₀,t₀) = −lim_{τ→∞} I(τ). Both Γ- and U-integrals grow like e^{O(τ)}
//! while their difference stays O(1), so estimates run through the
//! arbitrary-precision assembly in the `highprec` module.
//!
//! Enclosure mode sets v(p) = ∫_D K_z(p−q) e^{Φ(q)} dq over a cone D with
//! vertex at the target and reconstructs u(x₀,t₀) = −(1/C) lim τ^μ e^{−Φ₀} I(τ).
//! The cone integral is *not* quadratured directly at large τ — the integrand
//! oscillates at O(τ²) and cancels to e^{−Φ₀}-relative size e^{−τ·δ·…}.
//! Instead the radial kernel representation is substituted and the q-integral
//! done exactly: on each ξ-slice the integrand is a pure exponential of an
//! affine function of q, so its integral over a triangle is the second
//! divided difference of exp at the three vertex exponents,
//!
//! ```text
//! ∫_T e^{g(q)} dq = 2·Area(T) · dd2(g(P₁), g(P₂), g(P₃)),
//! ```
//!
//! leaving a single oscillatory ξ-integral with an explicit band-limit. The
//! in-plane slab |s − t_p| < w (where the ξ-band blows up) is handled by
//! direct quadrature with the closed-form kernel. All exponents carry the
//! −Φ₀ normalization so every magnitude stays O(1) in doubles; that makes
//! the whole enclosure path f64 until the Γ/U cancellation itself runs out
//! of mantissa (τ ≈ 20 in the standard scenario — the sweep's early-stopping
//! rule is what detects that onset).

use std::time::Instant;

use num_complex::Complex64;
use thiserror::Error;

use crate::caloric::{CaloricField, GammaSample, InitialSample, MeasurementSet};
use crate::geometry::{
    validate_config, ConeRegion, GeometryError, ScenarioGeometry, VisibilityConstant,
};
use crate::highprec::{CarlemanAssembly, HpField};
use crate::kernel::kernel_pair_1d;
use crate::quad::{pairwise_sum_complex, GaussLegendre};
use crate::space_time::{make_probe, SpatialVec};

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("probe too weak: need c^2 tau > 1, got c = {c}, tau = {tau}")]
    ProbeTooWeak { c: f64, tau: f64 },
    #[error("target within 1e-6 of the measured sets; kernel singularity would be grazed")]
    TargetTooClose,
    #[error("field kind has no high-precision evaluator (grid data); use the sampled estimator")]
    UnsupportedField,
    #[error("tau sweep needs at least one tau with c^2 tau > 1")]
    EmptySweep,
    #[error("taus must be strictly increasing")]
    TausNotIncreasing,
}

/// One reconstruction at a fixed τ.
#[derive(Clone, Copy, Debug)]
pub struct ReconstructionEstimate {
    pub tau: f64,
    pub estimate: Complex64,
    /// τ^μ |e^{−Φ₀}| for enclosure mode, 1 for Carleman mode
    pub phase_scale: f64,
    pub quad_error: f64,
}

/// One row of a τ-sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub tau: f64,
    pub estimate: Complex64,
    pub reference: Option<f64>,
    pub rel_error: Option<f64>,
    pub quad_error: f64,
    pub wall_ms: f64,
}

/// A τ-sweep with convergence diagnostics.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// least-squares slope of ln|rel error| vs τ (needs a reference and ≥ 2
    /// rows); expected negative, dominated by e^{−τ√(1+c²)·min margin}
    pub trend_slope: Option<f64>,
    /// index of the best stable row (smallest error, or smallest successive
    /// difference when no reference is known)
    pub best_row: Option<usize>,
    /// true when the sweep stopped before exhausting the τ schedule because
    /// successive estimates started diverging (quadrature-noise onset)
    pub stopped_early: bool,
}

impl SweepReport {
    /// CSV serialization. `wall_ms` is the only nondeterministic column;
    /// determinism comparisons strip it (timing cannot be reproducible).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "tau,re_estimate,im_estimate,reference,rel_error,quad_error,wall_ms\n",
        );
        for r in &self.rows {
            let reference = r.reference.map(|v| format!("{v:.17e}")).unwrap_or_default();
            let rel = r.rel_error.map(|v| format!("{v:.17e}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.1}\n",
                r.tau, r.estimate.re, r.estimate.im, reference, rel, r.quad_error, r.wall_ms
            ));
        }
        s
    }

    pub fn best_rel_error(&self) -> Option<f64> {
        self.best_row.and_then(|i| self.rows[i].rel_error)
    }
}

/// Assemble I(τ) from a measurement set and an evaluator for the probe
/// solution's traces: `v_gamma` returns (v, ∂v/∂x) at a boundary sample,
/// `v_init` returns v(x, 0). Pairwise-summed, so the result is independent of
/// how the sample lists were chunked.
pub fn assemble_i_tau(
    data: &MeasurementSet,
    mut v_gamma: impl FnMut(&GammaSample) -> (Complex64, Complex64),
    mut v_init: impl FnMut(&InitialSample) -> Complex64,
) -> Complex64 {
    let rho = data.robin_rho;
    let mut terms: Vec<Complex64> = Vec::with_capacity(data.gamma_samples.len());
    for s in &data.gamma_samples {
        let (v, vx) = v_gamma(s);
        let dv_nu = vx * s.nu;
        let h0 = s.flux + rho * s.u;
        terms.push(s.weight * ((dv_nu + rho * v) * s.u - h0 * v));
    }
    let gamma = pairwise_sum_complex(&terms);
    let mut terms_u: Vec<Complex64> = Vec::with_capacity(data.initial_samples.len());
    for s in &data.initial_samples {
        terms_u.push(s.weight * v_init(s) * s.u);
    }
    gamma - pairwise_sum_complex(&terms_u)
}

fn probe_params(c: f64, tau: f64) -> Result<(f64, f64), ReconstructError> {
    if c * c * tau <= 1.0 {
        return Err(ReconstructError::ProbeTooWeak { c, tau });
    }
    let a = c * tau;
    let bb = a * (1.0 - 1.0 / (c * c * tau)).sqrt();
    Ok((a, bb))
}

fn check_target_clearance(geom: &ScenarioGeometry) -> Result<(), ReconstructError> {
    let x0 = geom.target.x.as_slice()[0];
    let t0 = geom.target.t;
    let clearance = (x0 - geom.omega.0)
        .abs()
        .min((x0 - geom.omega.1).abs())
        .min(t0)
        .min(geom.t_end - t0);
    if clearance < 1e-6 {
        return Err(ReconstructError::TargetTooClose);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Carleman mode
// ---------------------------------------------------------------------------

/// Carleman estimate from a sampled [`MeasurementSet`] in plain doubles.
/// Valid while the Γ/U cancellation fits in an f64 mantissa (τ ≲ 16 in the
/// standard scenario); this is the path grid (forward-solver) data must take,
/// since grids have no high-precision evaluator. `quad_error` reflects only
/// the f64 cancellation bound — the measurement set's own sampling error is
/// the caller's.
pub fn carleman_estimate_sampled(
    data: &MeasurementSet,
    geom: &ScenarioGeometry,
    c: f64,
    tau: f64,
) -> Result<ReconstructionEstimate, ReconstructError> {
    let (a, bb) = probe_params(c, tau)?;
    check_target_clearance(geom)?;
    let x0 = geom.target.x.as_slice()[0];
    let t0 = geom.target.t;
    let mut mass = 0.0f64;
    let i_tau = assemble_i_tau(
        data,
        |s| {
            let (re_phi, k, dk) = kernel_pair_1d(a, bb, s.x - x0, s.t - t0);
            let e = re_phi.exp();
            mass += (s.weight * e * (dk.abs() * s.u.abs() + s.flux.abs() * k.abs())).abs();
            (Complex64::new(e * k, 0.0), Complex64::new(e * dk, 0.0))
        },
        |s| {
            let (re_phi, k, _) = kernel_pair_1d(a, bb, s.x - x0, -t0);
            Complex64::new(re_phi.exp() * k, 0.0)
        },
    );
    Ok(ReconstructionEstimate {
        tau,
        estimate: -i_tau,
        phase_scale: 1.0,
        quad_error: mass * 1e-15,
    })
}

/// Carleman sweeps for several fields over one τ schedule, sharing the
/// expensive per-τ kernel assembly across fields. Fields must be analytic
/// (constant / exponential / heat kernel). Margins are validated once with
/// the probe ω = +1.
pub fn carleman_sweep_fields(
    fields: &[(CaloricField, Option<f64>)],
    geom: &ScenarioGeometry,
    c: f64,
    taus: &[f64],
) -> Result<Vec<SweepReport>, ReconstructError> {
    let probe = make_probe(c, SpatialVec::scalar(1.0), None).expect("unit probe direction");
    validate_config(geom, &probe)?;
    check_target_clearance(geom)?;
    let hp_fields: Vec<HpField> = fields
        .iter()
        .map(|(f, _)| HpField::from_field(f).ok_or(ReconstructError::UnsupportedField))
        .collect::<Result<_, _>>()?;

    let mut per_field: Vec<Vec<(ReconstructionEstimate, f64)>> =
        vec![Vec::new(); fields.len()];
    for &tau in taus {
        probe_params(c, tau)?;
        let t_asm = Instant::now();
        let asm = CarlemanAssembly::new(geom, c, tau);
        let shared_ms = t_asm.elapsed().as_secs_f64() * 1e3 / fields.len() as f64;
        for (k, hf) in hp_fields.iter().enumerate() {
            let t_field = Instant::now();
            let (est, qerr) = asm.estimate(hf);
            let wall = shared_ms + t_field.elapsed().as_secs_f64() * 1e3;
            per_field[k].push((
                ReconstructionEstimate {
                    tau,
                    estimate: Complex64::new(est, 0.0),
                    phase_scale: 1.0,
                    quad_error: qerr,
                },
                wall,
            ));
        }
    }

    let mut reports = Vec::with_capacity(fields.len());
    for (k, rows) in per_field.into_iter().enumerate() {
        let mut iter = rows.into_iter();
        let report = tau_sweep(
            |_| {
                let (est, wall) = iter.next().expect("one precomputed row per tau");
                Ok((est, wall))
            },
            taus,
            fields[k].1,
        )?;
        reports.push(report);
    }
    Ok(reports)
}

/// Single-field Carleman estimate at one τ (convenience wrapper; for sweeps
/// over several fields prefer [`carleman_sweep_fields`], which shares the
/// kernel assembly).
pub fn carleman_estimate(
    field: &CaloricField,
    geom: &ScenarioGeometry,
    c: f64,
    tau: f64,
) -> Result<ReconstructionEstimate, ReconstructError> {
    probe_params(c, tau)?;
    check_target_clearance(geom)?;
    let hf = HpField::from_field(field).ok_or(ReconstructError::UnsupportedField)?;
    let asm = CarlemanAssembly::new(geom, c, tau);
    let (est, qerr) = asm.estimate(&hf);
    Ok(ReconstructionEstimate {
        tau,
        estimate: Complex64::new(est, 0.0),
        phase_scale: 1.0,
        quad_error: qerr,
    })
}

// ---------------------------------------------------------------------------
// Enclosure mode: stable exp divided differences
// ---------------------------------------------------------------------------

/// First divided difference of exp: (e^x − e^y)/(x − y), computed as
/// e^{(x+y)/2} sinhc((x−y)/2) so nearby arguments lose no digits.
fn dd1(x: Complex64, y: Complex64) -> Complex64 {
    let h = (x - y) / 2.0;
    let sc = if h.norm() < 1e-4 {
        1.0 + h * h / 6.0
    } else {
        h.sinh() / h
    };
    ((x + y) / 2.0).exp() * sc
}

/// Second divided difference of exp at three exponents: the value of
/// ∫_T e^{affine} over a triangle per unit (2·Area). Chooses the difference
/// pairing with the largest denominator; for clustered arguments falls back
/// to the symmetric series e^{ḡ} Σ h_k/(k+2)! in the centered power sums.
fn dd2(g1: Complex64, g2: Complex64, g3: Complex64) -> Complex64 {
    let gb = (g1 + g2 + g3) / 3.0;
    let spread = (g1 - gb).norm().max((g2 - gb).norm()).max((g3 - gb).norm());
    if spread < 0.02 {
        // complete homogeneous symmetric polynomials via Newton's identity
        let d = [g1 - gb, g2 - gb, g3 - gb];
        let mut p = [Complex64::new(0.0, 0.0); 7];
        for j in 1..7 {
            p[j] = d[0].powu(j as u32) + d[1].powu(j as u32) + d[2].powu(j as u32);
        }
        let mut h = [Complex64::new(0.0, 0.0); 7];
        h[0] = Complex64::new(1.0, 0.0);
        for k in 1..7 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += p[j] * h[k - j];
            }
            h[k] = acc / k as f64;
        }
        const FACT: [f64; 7] = [2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];
        let mut ser = Complex64::new(0.0, 0.0);
        for k in 0..7 {
            ser += h[k] / FACT[k];
        }
        return gb.exp() * ser;
    }
    let d13 = g1 - g3;
    let d21 = g2 - g1;
    let d32 = g3 - g2;
    let (a13, a21, a32) = (d13.norm(), d21.norm(), d32.norm());
    if a13 >= a21 && a13 >= a32 {
        (dd1(g1, g2) - dd1(g2, g3)) / d13
    } else if a21 >= a32 {
        (dd1(g2, g3) - dd1(g3, g1)) / d21
    } else {
        (dd1(g3, g1) - dd1(g1, g2)) / d32
    }
}

// ---------------------------------------------------------------------------
// Enclosure mode: polygon clipping against horizontal half-planes
// ---------------------------------------------------------------------------

type Pt = (f64, f64);

/// Clip a convex polygon against {s ≤ scut} (or ≥) and fan-triangulate the
/// result.
fn clip_tris(verts: &[Pt], scut: f64, keep_below: bool) -> Vec<[Pt; 3]> {
    let nv = verts.len();
    let mut res: Vec<Pt> = Vec::with_capacity(nv + 2);
    for i in 0..nv {
        let p0 = verts[i];
        let p1 = verts[(i + 1) % nv];
        let in0 = if keep_below { p0.1 <= scut } else { p0.1 >= scut };
        let in1 = if keep_below { p1.1 <= scut } else { p1.1 >= scut };
        if in0 {
            res.push(p0);
        }
        if in0 != in1 {
            let f = (scut - p0.1) / (p1.1 - p0.1);
            res.push((p0.0 + f * (p1.0 - p0.0), scut));
        }
    }
    if res.len() < 3 {
        return Vec::new();
    }
    (1..res.len() - 1)
        .map(|i| [res[0], res[i], res[i + 1]])
        .collect()
}

fn tri_area(t: &[Pt; 3]) -> f64 {
    0.5 * ((t[1].0 - t[0].0) * (t[2].1 - t[0].1) - (t[2].0 - t[0].0) * (t[1].1 - t[0].1)).abs()
}

/// y-interval cut out of a convex polygon by the horizontal line at height s.
fn slab_interval(verts: &[Pt], s: f64) -> Option<(f64, f64)> {
    let nv = verts.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..nv {
        let p0 = verts[i];
        let p1 = verts[(i + 1) % nv];
        if (p0.1 - s) * (p1.1 - s) <= 0.0 && p0.1 != p1.1 {
            let f = (s - p0.1) / (p1.1 - p0.1);
            if (0.0..=1.0).contains(&f) {
                let y = p0.0 + f * (p1.0 - p0.0);
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
    }
    (lo < hi).then_some((lo, hi))
}

// ---------------------------------------------------------------------------
// Enclosure mode: the smeared probe solution v and its x-derivative
// ---------------------------------------------------------------------------

/// Tunable resolution of the enclosure evaluator. Defaults reproduce the
/// values the implementation was calibrated with; they keep every truncation
/// at or below the e^{−λ} ≈ 2e-15 relative level.
#[derive(Clone, Copy, Debug)]
pub struct EnclosureConfig {
    /// slab half-width w = slab_lambda / bb²
    pub slab_lambda: f64,
    /// ξ-band extent: contributions beyond e^{−band_lambda} are truncated
    pub band_lambda: f64,
    pub xi_order: usize,
    pub slab_s_order: usize,
    pub slab_y_order: usize,
    /// Γ / U outer quadrature order
    pub trace_order: usize,
    /// order for the visibility moment M(τ)
    pub moment_order: usize,
}

impl Default for EnclosureConfig {
    fn default() -> Self {
        Self {
            slab_lambda: 40.0,
            band_lambda: 34.0,
            xi_order: 10,
            slab_s_order: 8,
            slab_y_order: 10,
            trace_order: 10,
            moment_order: 12,
        }
    }
}

/// The probe state for one (cone, τ): v(p) = e^{−Φ₀} ∫_D K_z(p−q) e^{Φ(q)} dq
/// and its x-derivative, all magnitudes normalized by e^{Φ₀} = e^{Φ(target)}.
pub struct EnclosureKernel {
    pub a: f64,
    pub bb: f64,
    pub z: Complex64,
    pub z2: Complex64,
    pub phi0: Complex64,
    /// slab half-width in t
    pub w: f64,
    verts: [Pt; 3],
    s_lo: f64,
    s_hi: f64,
    cfg: EnclosureConfig,
}

impl EnclosureKernel {
    pub fn new(
        cone: &ConeRegion,
        c: f64,
        tau: f64,
        cfg: EnclosureConfig,
    ) -> Result<Self, ReconstructError> {
        let (a, bb) = probe_params(c, tau)?;
        let z = Complex64::new(a, bb);
        let z2 = z * z;
        let x0 = cone.target.x.as_slice()[0];
        let t0 = cone.target.t;
        let phi0 = x0 * z - t0 * z2;
        let verts = cone.xy();
        let s_lo = verts.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let s_hi = verts.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            a,
            bb,
            z,
            z2,
            phi0,
            w: cfg.slab_lambda / (bb * bb),
            verts,
            s_lo,
            s_hi,
            cfg,
        })
    }

    /// (v, ∂v/∂x) at the point p = (xp, tp), scaled by e^{−Φ₀}.
    pub fn v_scaled(&self, xp: f64, tp: f64) -> (Complex64, Complex64) {
        let (a, bb, z, z2) = (self.a, self.bb, self.z, self.z2);
        let cfg = &self.cfg;
        let mut v = Complex64::new(0.0, 0.0);
        let mut vx = Complex64::new(0.0, 0.0);
        let gl = GaussLegendre::new(cfg.xi_order);

        // far regions: exact triangle integrals on each ξ-slice
        let s_a = tp - self.w;
        let s_b = tp + self.w;
        let regions = [
            (clip_tris(&self.verts, s_a, true), -1.0),
            (clip_tris(&self.verts, s_b, false), 1.0),
        ];
        for (tris, sign) in regions {
            if tris.is_empty() {
                continue;
            }
            let smin = tris.iter().flatten().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let smax = tris.iter().flatten().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let gap = (if sign < 0.0 { tp - smax } else { smin - tp }).max(self.w * 0.5);
            let (xi_min, xi_max) = if sign < 0.0 {
                let lo2 = (1.0 - cfg.band_lambda / (bb * bb * gap)).max(0.0);
                (lo2.sqrt(), 1.0)
            } else {
                (1.0, (1.0 + cfg.band_lambda / (bb * bb * gap)).sqrt())
            };
            let freq = tris
                .iter()
                .flatten()
                .map(|p| bb * ((xp - p.0).abs() + 2.0 * (tp - p.1).abs() * (a + bb)))
                .fold(0.0f64, f64::max);
            let span = xi_max - xi_min;
            let npan = 2usize.max((freq * span / std::f64::consts::PI) as usize + 1);
            for (lo, hi) in [(xi_min, xi_max), (-xi_max, -xi_min)] {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut accx = Complex64::new(0.0, 0.0);
                for p in 0..npan {
                    let plo = lo + (hi - lo) * p as f64 / npan as f64;
                    let phi = lo + (hi - lo) * (p + 1) as f64 / npan as f64;
                    for (xi, wxi) in gl.mapped(plo, phi) {
                        let zxi = Complex64::new(a, bb * xi);
                        let zxi2 = zxi * zxi;
                        let base = xp * zxi - tp * zxi2 - self.phi0;
                        let al = z - zxi;
                        let be = z2 - zxi2;
                        for t in &tris {
                            let g: Vec<Complex64> =
                                t.iter().map(|q| base + q.0 * al - q.1 * be).collect();
                            let e = 2.0 * tri_area(t) * dd2(g[0], g[1], g[2]);
                            acc += wxi * e;
                            accx += wxi * zxi * e;
                        }
                    }
                }
                v += sign * (bb / std::f64::consts::TAU) * acc;
                vx += sign * (bb / std::f64::consts::TAU) * accx;
            }
        }

        // in-plane slab: direct quadrature with the closed-form kernel
        let slo = self.s_lo.max(s_a);
        let shi = self.s_hi.min(s_b);
        if slo < shi {
            let freq_s = 2.0 * a * bb + self.z2.im.abs();
            let ns = 2usize.max((freq_s * (shi - slo) / std::f64::consts::PI) as usize + 2);
            let mut cuts: Vec<f64> = (0..=ns)
                .map(|p| slo + (shi - slo) * p as f64 / ns as f64)
                .collect();
            // when p sits over the cone in space and tp inside the slab, the
            // y-profile sharpens like a delta family of width √(4|tp−s|);
            // the s-integrand is then only C⁰ in √|s−tp| at s = tp and the
            // uniform panels must be geometrically graded toward it
            let y_min = self.verts.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let y_max = self.verts.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
            let near = xp > y_min - 0.1 && xp < y_max + 0.1;
            if near && tp > slo && tp < shi {
                let mut h = (shi - slo) / ns as f64;
                while h > 1e-13 {
                    h *= 0.5;
                    for s in [tp - h, tp + h] {
                        if s > slo && s < shi {
                            cuts.push(s);
                        }
                    }
                }
                cuts.push(tp);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
            }
            let gs = GaussLegendre::new(cfg.slab_s_order);
            let gy = GaussLegendre::new(cfg.slab_y_order);
            let ny = 1usize.max((2.0 * bb * 0.2 / std::f64::consts::PI) as usize + 1);
            for pair in cuts.windows(2) {
                let (plo, phi) = (pair[0], pair[1]);
                for (s, ws) in gs.mapped(plo, phi) {
                    let Some((yl, yr)) = slab_interval(&self.verts, s) else {
                        continue;
                    };
                    // same story in y: the kernel's delta family sharpens
                    // toward y = xp as s → tp, so grade the y panels onto xp
                    // whenever the spike can land inside the interval
                    let mut ycuts: Vec<f64> = (0..=ny)
                        .map(|q| yl + (yr - yl) * q as f64 / ny as f64)
                        .collect();
                    if near && xp > yl && xp < yr {
                        let mut h = (yr - yl) / ny as f64;
                        while h > 1e-12 {
                            h *= 0.5;
                            for y in [xp - h, xp + h] {
                                if y > yl && y < yr {
                                    ycuts.push(y);
                                }
                            }
                        }
                        ycuts.push(xp);
                        ycuts.sort_by(f64::total_cmp);
                        ycuts.dedup();
                    }
                    for ypair in ycuts.windows(2) {
                        for (y, wy) in gy.mapped(ypair[0], ypair[1]) {
                            let (re_phi, k, dk) = kernel_pair_1d(a, bb, xp - y, tp - s);
                            let ex = (y * z - s * z2 - self.phi0
                                + Complex64::new(re_phi, 0.0))
                            .exp();
                            v += ws * wy * ex * k;
                            vx += ws * wy * ex * dk;
                        }
                    }
                }
            }
        }
        (v, vx)
    }

    /// M(τ) = e^{−Φ₀} ∫_D e^{Φ(q)} dq by a slab scan — the per-τ visibility
    /// moment the oracle-free normalization divides by.
    pub fn moment(&self) -> Complex64 {
        let (z, z2) = (self.z, self.z2);
        let freq = (2.0 * self.a * self.bb + z2.im.abs()) * (self.s_hi - self.s_lo);
        let ns = 4usize.max((freq / std::f64::consts::PI) as usize + 2);
        let g = GaussLegendre::new(self.cfg.moment_order);
        let ny = 1usize.max((2.0 * self.bb * 0.2 / std::f64::consts::PI) as usize + 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..ns {
            let plo = self.s_lo + (self.s_hi - self.s_lo) * p as f64 / ns as f64;
            let phi = self.s_lo + (self.s_hi - self.s_lo) * (p + 1) as f64 / ns as f64;
            for (s, ws) in g.mapped(plo, phi) {
                let Some((yl, yr)) = slab_interval(&self.verts, s) else {
                    continue;
                };
                for q in 0..ny {
                    let qlo = yl + (yr - yl) * q as f64 / ny as f64;
                    let qhi = yl + (yr - yl) * (q + 1) as f64 / ny as f64;
                    for (y, wy) in g.mapped(qlo, qhi) {
                        acc += ws * wy * (y * z - s * z2 - self.phi0).exp();
                    }
                }
            }
        }
        acc
    }
}

/// How an enclosure estimate is normalized.
#[derive(Clone, Copy, Debug)]
pub enum EnclosureNormalization {
    /// divide by the per-τ moment M(τ) (exact, δ-independent; needs no fit)
    PerTauMoment,
    /// divide by C/τ^μ with (μ, C) from the visibility oracle or a closed
    /// form
    Calibrated(VisibilityConstant),
}

/// e^{−Φ₀}-scaled I(τ) for the enclosure probe, plus an a-priori error bound
/// from band truncation, panel truncation and f64 roundoff of the summed
/// magnitudes.
pub fn enclosure_i_scaled(
    field: &CaloricField,
    geom: &ScenarioGeometry,
    ek: &EnclosureKernel,
) -> (Complex64, f64) {
    let cfg = &ek.cfg;
    let gl = GaussLegendre::new(cfg.trace_order);
    let mut terms: Vec<Complex64> = Vec::new();
    let mut mass = 0.0f64;

    let mut boundary = Vec::new();
    if geom.gamma_left {
        boundary.push((geom.omega.0, -1.0));
    }
    if geom.gamma_right {
        boundary.push((geom.omega.1, 1.0));
    }
    let freq_t = 2.0 * ek.a * ek.bb;
    let npan = 8usize.max((freq_t * geom.t_end / std::f64::consts::TAU) as usize + 1);
    for (xb, nu) in boundary {
        let xv = SpatialVec::scalar(xb);
        for p in 0..npan {
            let lo = geom.t_end * p as f64 / npan as f64;
            let hi = geom.t_end * (p + 1) as f64 / npan as f64;
            for (t, wt) in gl.mapped(lo, hi) {
                let (v, vx) = ek.v_scaled(xb, t);
                let u = field.eval(&xv, t);
                let ux = field.grad(&xv, t).as_slice()[0];
                let term = wt * nu * (vx * u - ux * v);
                mass += term.norm();
                terms.push(term);
            }
        }
    }
    let i_gamma = pairwise_sum_complex(&terms);

    terms.clear();
    let (ulo, uhi) = geom.u_interval;
    let npan_u = 4usize.max((ek.bb * (uhi - ulo) / std::f64::consts::PI) as usize + 2);
    for p in 0..npan_u {
        let lo = ulo + (uhi - ulo) * p as f64 / npan_u as f64;
        let hi = ulo + (uhi - ulo) * (p + 1) as f64 / npan_u as f64;
        for (x, wx) in gl.mapped(lo, hi) {
            let (v, _) = ek.v_scaled(x, 0.0);
            let term = wx * v * field.eval(&SpatialVec::scalar(x), 0.0);
            mass += term.norm();
            terms.push(term);
        }
    }
    let i_u = pairwise_sum_complex(&terms);

    let n_total = (npan * cfg.trace_order + npan_u * cfg.trace_order) as f64;
    let panel_rel = (std::f64::consts::TAU / (4.0 * cfg.trace_order as f64))
        .powi(2 * cfg.trace_order as i32);
    // the roundoff constant is 1e-15, not ulp: each v evaluation carries its
    // own internal cancellation noise on top of the outer-sum roundoff
    let err = mass * ((-cfg.band_lambda).exp() + panel_rel + 1e-15 * n_total.sqrt());
    (i_gamma - i_u, err)
}

/// Enclosure-method estimate of u(x₀, t₀) at one τ.
pub fn enclosure_estimate(
    field: &CaloricField,
    geom: &ScenarioGeometry,
    cone: &ConeRegion,
    c: f64,
    tau: f64,
    norm: &EnclosureNormalization,
    cfg: EnclosureConfig,
) -> Result<ReconstructionEstimate, ReconstructError> {
    let ek = EnclosureKernel::new(cone, c, tau, cfg)?;
    let (i_scaled, i_err) = enclosure_i_scaled(field, geom, &ek);
    let (estimate, divisor) = match norm {
        EnclosureNormalization::PerTauMoment => {
            let m = ek.moment();
            (-i_scaled / m, m.norm())
        }
        EnclosureNormalization::Calibrated(k) => {
            let scale = tau.powf(k.mu);
            (-(i_scaled * scale) / k.c, k.c.norm() / scale)
        }
    };
    let mu = match norm {
        EnclosureNormalization::Calibrated(k) => k.mu,
        EnclosureNormalization::PerTauMoment => 3.0,
    };
    Ok(ReconstructionEstimate {
        tau,
        estimate,
        phase_scale: tau.powf(mu) * (-ek.phi0.re).exp(),
        quad_error: i_err / divisor,
    })
}

// ---------------------------------------------------------------------------
// τ-sweep harness
// ---------------------------------------------------------------------------

/// Run an estimator over an increasing τ schedule. Stops early when the
/// successive-estimate difference jumps by more than 3× — the onset of
/// noise amplification — and reports the best stable row.
pub fn tau_sweep(
    mut estimator: impl FnMut(f64) -> Result<(ReconstructionEstimate, f64), ReconstructError>,
    taus: &[f64],
    reference: Option<f64>,
) -> Result<SweepReport, ReconstructError> {
    if taus.is_empty() {
        return Err(ReconstructError::EmptySweep);
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ReconstructError::TausNotIncreasing);
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(taus.len());
    let mut stopped_early = false;
    let mut prev_diff: Option<f64> = None;
    for (k, &tau) in taus.iter().enumerate() {
        let (est, wall_ms) = estimator(tau)?;
        let rel_error = reference.map(|r| (est.estimate - r).norm() / r.abs().max(1e-300));
        rows.push(SweepRow {
            tau,
            estimate: est.estimate,
            reference,
            rel_error,
            quad_error: est.quad_error,
            wall_ms,
        });
        if k >= 1 {
            let diff = (rows[k].estimate - rows[k - 1].estimate).norm();
            if let Some(pd) = prev_diff {
                if diff > 3.0 * pd && pd > 0.0 && k + 1 < taus.len() {
                    stopped_early = true;
                    break;
                }
            }
            prev_diff = Some(diff);
        }
    }

    let best_row = if reference.is_some() {
        rows.iter()
            .enumerate()
            .filter_map(|(i, r)| r.rel_error.map(|e| (i, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    } else if rows.len() >= 2 {
        // smallest successive difference marks the most stable estimate
        (1..rows.len())
            .min_by(|&i, &j| {
                let di = (rows[i].estimate - rows[i - 1].estimate).norm();
                let dj = (rows[j].estimate - rows[j - 1].estimate).norm();
                di.total_cmp(&dj)
            })
    } else {
        None
    };

    let trend_slope = reference.and_then(|_| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.rel_error.map(|e| (r.tau, e.max(1e-17).ln())))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        (denom.abs() > 1e-12).then(|| (n * sxy - sx * sy) / denom)
    });

    Ok(SweepReport {
        rows,
        trend_slope,
        best_row,
        stopped_early,
    })
}

// ---------------------------------------------------------------------------
// Integration-by-parts consistency check
// ---------------------------------------------------------------------------

/// Residual of the two-sided identity
///
/// ```text
/// ∫₀ᵀ Σ_{∂Ω} (h₁ u − h₀ v) dt
///   = ∫₀ᵀ ∫_Ω f₁ u dx dt + ∫_Ω u(·,0)v(·,0) − ∫_Ω u(·,T)v(·,T)
/// ```
///
/// with h₁ = ∂v/∂ν + ρv, h₀ = ∂u/∂ν + ρu and f₁ = ∂_t v + Δv supplied
/// pointwise. For a caloric u and a backward-caloric v (f₁ ≡ 0) both sides
/// reduce to the Wronskian bookkeeping and the residual is pure quadrature
/// error. Note the pointwise f₁ cannot see a point source: when v is the
/// Carleman kernel its singular point must lie outside Ω̄ × [0, T].
pub fn ibp_residual(
    u_field: &CaloricField,
    v: &dyn Fn(f64, f64) -> f64,
    vx: &dyn Fn(f64, f64) -> f64,
    f1: &dyn Fn(f64, f64) -> f64,
    geom: &ScenarioGeometry,
    rho: f64,
    order: usize,
    panels: usize,
) -> f64 {
    let gl = GaussLegendre::new(order);
    let (xlo, xhi) = geom.omega;
    let t_end = geom.t_end;

    let mut lhs = 0.0;
    for (xb, nu) in [(xlo, -1.0), (xhi, 1.0)] {
        let xv = SpatialVec::scalar(xb);
        for p in 0..panels {
            let lo = t_end * p as f64 / panels as f64;
            let hi = t_end * (p + 1) as f64 / panels as f64;
            for (t, wt) in gl.mapped(lo, hi) {
                let u = u_field.eval(&xv, t);
                let ux = u_field.grad(&xv, t).as_slice()[0];
                let h1 = nu * vx(xb, t) + rho * v(xb, t);
                let h0 = nu * ux + rho * u;
                lhs += wt * (h1 * u - h0 * v(xb, t));
            }
        }
    }

    let mut rhs = 0.0;
    for p in 0..panels {
        let lo = xlo + (xhi - xlo) * p as f64 / panels as f64;
        let hi = xlo + (xhi - xlo) * (p + 1) as f64 / panels as f64;
        for (x, wx) in gl.mapped(lo, hi) {
            let xv = SpatialVec::scalar(x);
            rhs += wx * (u_field.eval(&xv, 0.0) * v(x, 0.0) - u_field.eval(&xv, t_end) * v(x, t_end));
            for q in 0..panels {
                let qlo = t_end * q as f64 / panels as f64;
                let qhi = t_end * (q + 1) as f64 / panels as f64;
                for (t, wt) in gl.mapped(qlo, qhi) {
                    rhs += wx * wt * f1(x, t) * u_field.eval(&xv, t);
                }
            }
        }
    }

    (lhs - rhs).abs()
}
