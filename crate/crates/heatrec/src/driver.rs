//! End-to-end experiment driver: turn a validated [`ExperimentConfig`] into a
//! [`SweepReport`].
//!
//! This is the single entry point shared by the command-line front end and the
//! C ABI. It owns the policy decisions that sit above the individual modules:
//! which estimator a config maps to, how synthetic data is manufactured for
//! grid-backed runs, and how the enclosure normalization constant is
//! calibrated from the visibility oracle.
//!
//! Calibration policy for the enclosure path: the exponent μ comes from a
//! high-τ geometric ladder, where the rotated-scan moments are cheap and the
//! power law is clean. The constant C, however, still carries O(1/τ)
//! corrections at the moderate τ an f64 sweep can reach, so it is measured
//! from the oracle moments at the sweep's own upper τ values. Both stages use
//! only the cone geometry — never the measured data — so the calibration is a
//! legitimate oracle, not a fit to the answer.

use std::time::Instant;

use num_complex::Complex64;
use thiserror::Error;

use crate::caloric::{extract_traces, solve_forward, CaloricError, CaloricField, TraceOrders};
use crate::config::{ConfigError, ExperimentConfig, FieldKind, Method};
use crate::geometry::{build_cone, default_delta, GeometryError, Margins, VisibilityConstant};
use crate::oracle::{visibility_limit_numeric, visibility_moment, OracleError};
use crate::reconstruct::{
    carleman_estimate, carleman_estimate_sampled, enclosure_estimate, tau_sweep,
    EnclosureConfig, EnclosureNormalization, ReconstructError, SweepReport,
};
use crate::space_time::SpatialVec;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Caloric(#[from] CaloricError),
    #[error("{0}")]
    Unsupported(String),
}

/// How the enclosure run was normalized, for reporting.
#[derive(Clone, Copy, Debug)]
pub struct EnclosureCalibration {
    /// cone depth actually used (config value or the default rule)
    pub delta: f64,
    /// fitted visibility exponent
    pub mu: f64,
    /// effective visibility constant at the sweep's upper τ values
    pub c_eff: Complex64,
    /// residual of the high-τ power-law fit
    pub fit_residual: f64,
}

/// A completed run: the sweep plus the context a front end wants to report.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: SweepReport,
    pub margins: Margins,
    /// present for enclosure runs only
    pub calibration: Option<EnclosureCalibration>,
}

/// splitmix64 step mapped to [-1, 1): the deterministic noise source for
/// `noise_amplitude` perturbations (seeded from `noise_seed`)
fn splitmix_unit(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z = z ^ (z >> 31);
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Run the reconstruction described by `cfg`. Rejects inadmissible scenarios
/// with the corresponding condition-naming error before any work is done.
pub fn run_reconstruction(cfg: &ExperimentConfig) -> Result<RunOutcome, DriverError> {
    let margins = cfg.validate()?;
    match cfg.method {
        Method::Carleman => Ok(RunOutcome {
            report: run_carleman(cfg)?,
            margins,
            calibration: None,
        }),
        Method::Enclosure => {
            let (report, calibration) = run_enclosure(cfg, &margins)?;
            Ok(RunOutcome {
                report,
                margins,
                calibration: Some(calibration),
            })
        }
    }
}

fn run_carleman(cfg: &ExperimentConfig) -> Result<SweepReport, DriverError> {
    let geom = cfg.geometry();
    let c = cfg.probe_c;
    let reference = cfg.reference_value();
    // grid-backed or noisy data has no arbitrary-precision evaluator; those
    // runs take the sampled f64 path, valid for the moderate τ it is used at
    let sampled = cfg.field == FieldKind::ForwardGrid || cfg.noise_amplitude > 0.0;
    if !sampled {
        let field = cfg.analytic_field().expect("analytic kind");
        return Ok(tau_sweep(
            |tau| {
                let t0 = Instant::now();
                let est = carleman_estimate(&field, &geom, c, tau)?;
                Ok((est, t0.elapsed().as_secs_f64() * 1e3))
            },
            &cfg.taus,
            reference,
        )?);
    }

    let field = match cfg.analytic_field() {
        Some(f) => f,
        None => {
            // manufacture data: forward-solve with the heat-kernel field's
            // initial trace and Robin data, then measure the grid
            let exact =
                CaloricField::heat_kernel(SpatialVec::scalar(cfg.field_x_s), cfg.field_t_s)?;
            let rho = cfg.robin_rho;
            let mid = 0.5 * (cfg.domain_lo + cfg.domain_hi);
            let h0 = |x: f64, t: f64| {
                let xv = SpatialVec::scalar(x);
                let nu = if x > mid { 1.0 } else { -1.0 };
                nu * exact.grad(&xv, t).as_slice()[0] + rho * exact.eval(&xv, t)
            };
            solve_forward(
                &geom,
                |x| exact.eval(&SpatialVec::scalar(x), 0.0),
                h0,
                |_, _| rho,
                (cfg.solver_nx, cfg.solver_nt),
            )?
        }
    };

    let mut noise_state = cfg.noise_seed.to_bits();
    Ok(tau_sweep(
        |tau| {
            let t0 = Instant::now();
            let a = c * tau;
            let bb = a * (1.0 - 1.0 / (c * c * tau)).max(0.0).sqrt();
            let orders = TraceOrders {
                time_order: 12,
                time_panels: 1 + (2.0 * a * bb * geom.t_end / std::f64::consts::PI) as usize,
                space_order: 12,
                space_panels: 1 + (bb / std::f64::consts::PI) as usize,
            };
            let mut data = extract_traces(&field, &geom, cfg.robin_rho, &orders);
            if cfg.noise_amplitude > 0.0 {
                let amp = cfg.noise_amplitude;
                data.perturb(|_| {
                    (
                        amp * splitmix_unit(&mut noise_state),
                        amp * splitmix_unit(&mut noise_state),
                    )
                });
            }
            let est = carleman_estimate_sampled(&data, &geom, c, tau)?;
            Ok((est, t0.elapsed().as_secs_f64() * 1e3))
        },
        &cfg.taus,
        reference,
    )?)
}

fn run_enclosure(
    cfg: &ExperimentConfig,
    margins: &Margins,
) -> Result<(SweepReport, EnclosureCalibration), DriverError> {
    let geom = cfg.geometry();
    let probe = cfg.probe();
    let c = cfg.probe_c;
    let delta = cfg
        .cone_delta
        .unwrap_or_else(|| default_delta(&geom, &probe, margins));
    let cone = build_cone(&geom.target, &probe, delta)?;

    let base = 50.0f64.max(*cfg.taus.last().unwrap());
    let ladder: Vec<f64> = (0..4).map(|k| base * (1 << k) as f64).collect();
    let fit = visibility_limit_numeric(&cone, &|_, _| 1.0, &ladder)?;
    let top = &cfg.taus[cfg.taus.len().saturating_sub(2)..];
    let c_eff = top
        .iter()
        .map(|&t| t.powf(fit.mu_fit) * visibility_moment(&cone, t, &|_, _| 1.0, 2))
        .sum::<Complex64>()
        / top.len() as f64;
    let calibration = EnclosureCalibration {
        delta,
        mu: fit.mu_fit,
        c_eff,
        fit_residual: fit.residual,
    };

    let field = cfg.analytic_field().ok_or_else(|| {
        DriverError::Unsupported("enclosure mode needs an analytic field spec".into())
    })?;
    let norm = EnclosureNormalization::Calibrated(VisibilityConstant {
        mu: fit.mu_fit,
        c: c_eff,
    });
    let report = tau_sweep(
        |tau| {
            let t0 = Instant::now();
            let est = enclosure_estimate(
                &field,
                &geom,
                &cone,
                c,
                tau,
                &norm,
                EnclosureConfig::default(),
            )?;
            Ok((est, t0.elapsed().as_secs_f64() * 1e3))
        },
        &cfg.taus,
        cfg.reference_value(),
    )?;
    Ok((report, calibration))
}
