//! Configuration-driven experiment runner: reconstructs interior temperature
//! values from (synthetic) lateral Cauchy data and writes CSV reports.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use heatrec::caloric::solve_forward;
use heatrec::config::{ExperimentConfig, Method};
use heatrec::driver::run_reconstruction;
use heatrec::geometry::{build_cone, default_delta};
use heatrec::kernel::kernel_pair_1d;
use heatrec::oracle::{calibration_report, visibility_limit_numeric};
use heatrec::reconstruct::SweepReport;
use heatrec::space_time::SpatialVec;

#[derive(Parser)]
#[command(
    name = "heatrec",
    about = "Interior temperature reconstruction from lateral Cauchy data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Carleman,
    Enclosure,
}

#[derive(Subcommand)]
enum Command {
    /// Run a τ-sweep reconstruction described by a config file
    Reconstruct {
        #[arg(long)]
        config: String,
        /// drop schedule entries above this τ
        #[arg(long)]
        tau_max: Option<f64>,
        /// override the config's method
        #[arg(long)]
        method: Option<MethodArg>,
        /// override the config's output path
        #[arg(long)]
        output: Option<String>,
    },
    /// Measure the cone visibility constants (μ, C) numerically
    VisibilityOracle {
        #[arg(long)]
        config: String,
        #[arg(long)]
        output: Option<String>,
    },
    /// Run the probe-kernel invariant suite
    VerifyKernel,
    /// Forward-solver convergence table against the separated exact solution
    ForwardSolve {
        #[arg(long)]
        config: String,
        #[arg(long)]
        output: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconstruct {
            config,
            tau_max,
            method,
            output,
        } => run_reconstruct(&config, tau_max, method, output),
        Command::VisibilityOracle { config, output } => run_oracle(&config, output),
        Command::VerifyKernel => run_verify_kernel(),
        Command::ForwardSolve { config, output } => run_forward(&config, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(config: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::load(config).map_err(|e| e.to_string())
}

/// splitmix64 mapped to [-1, 1): the deterministic sampler behind
/// `verify-kernel` — no external RNG dependency in the binary
fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z = z ^ (z >> 31);
    // uniform in [-1, 1)
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn run_reconstruct(
    config: &str,
    tau_max: Option<f64>,
    method: Option<MethodArg>,
    output: Option<String>,
) -> Result<(), String> {
    let mut cfg = load(config)?;
    if let Some(m) = method {
        cfg.method = match m {
            MethodArg::Carleman => Method::Carleman,
            MethodArg::Enclosure => Method::Enclosure,
        };
    }
    if let Some(t) = tau_max {
        cfg.taus.retain(|&tau| tau <= t);
    }
    if let Some(o) = output {
        cfg.output = o;
    }
    println!(
        "scenario: Omega=({},{}) T={} target=({},{})",
        cfg.domain_lo, cfg.domain_hi, cfg.t_end, cfg.target_x, cfg.target_t
    );
    let out = run_reconstruction(&cfg).map_err(|e| e.to_string())?;
    println!(
        "margins: final-time {:.6}, initial-data {:.6}, boundary {:.6}",
        out.margins.final_time, out.margins.initial_data, out.margins.boundary
    );
    if let Some(cal) = &out.calibration {
        println!(
            "cone: delta={:.6}; calibrated mu={:.4} (fit residual {:.2e}), effective C={:.6e}{:+.6e}i",
            cal.delta, cal.mu, cal.fit_residual, cal.c_eff.re, cal.c_eff.im
        );
    }

    std::fs::write(&cfg.output, out.report.to_csv())
        .map_err(|e| format!("cannot write {}: {e}", cfg.output))?;
    print_summary(&out.report, cfg.reference_value(), &cfg.output);
    Ok(())
}

fn print_summary(report: &SweepReport, reference: Option<f64>, output: &str) {
    for r in &report.rows {
        println!(
            "tau={:>6.1}  estimate={:+.9e}{:+.9e}i  quad_err={:.2e}{}",
            r.tau,
            r.estimate.re,
            r.estimate.im,
            r.quad_error,
            r.rel_error
                .map(|e| format!("  rel_error={e:.3e}"))
                .unwrap_or_default()
        );
    }
    if report.stopped_early {
        println!("sweep stopped early: successive estimates started diverging");
    }
    if let Some(slope) = report.trend_slope {
        println!("error trend slope (d ln err / d tau): {slope:.4}");
    }
    if let Some(best) = report.best_row {
        let r = &report.rows[best];
        println!(
            "best stable estimate: tau={} value={:+.9e}{:+.9e}i{}",
            r.tau,
            r.estimate.re,
            r.estimate.im,
            match (reference, r.rel_error) {
                (Some(v), Some(e)) => format!("  reference={v:.9e}  rel_error={e:.3e}"),
                _ => String::new(),
            }
        );
    }
    println!("wrote {output}");
}

fn run_oracle(config: &str, output: Option<String>) -> Result<(), String> {
    let cfg = load(config)?;
    let margins = cfg.validate().map_err(|e| e.to_string())?;
    let geom = cfg.geometry();
    let probe = cfg.probe();
    let delta = cfg
        .cone_delta
        .unwrap_or_else(|| default_delta(&geom, &probe, &margins));
    let cone = build_cone(&geom.target, &probe, delta).map_err(|e| e.to_string())?;
    let taus: Vec<f64> = if cfg.taus.len() >= 4 {
        cfg.taus.clone()
    } else {
        vec![50.0, 100.0, 200.0, 400.0]
    };
    let fit =
        visibility_limit_numeric(&cone, &|_, _| 1.0, &taus).map_err(|e| e.to_string())?;
    println!(
        "mu_fit = {:.6}; C_fit = {:.8e}{:+.8e}i; residual {:.3e}",
        fit.mu_fit, fit.c_fit.re, fit.c_fit.im, fit.residual
    );
    let out = output.unwrap_or_else(|| "visibility.csv".into());
    std::fs::write(&out, calibration_report(&cone, &fit))
        .map_err(|e| format!("cannot write {out}: {e}"))?;
    println!("wrote {out}");
    Ok(())
}

fn run_verify_kernel() -> Result<(), String> {
    // finite-difference backward-heat residual at random admissible points;
    // steps are 1e-3 of the local length scale 1/|b| and the residual is
    // measured against the local curvature magnitude |b|^2 |K|
    let mut state = 0x1234_5678_9abc_def0u64;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let tau = 2.0 + 38.0 * (0.5 + 0.5 * splitmix(&mut state));
        let c = 1.5 + splitmix(&mut state).abs();
        let a = c * tau;
        let bb = a * (1.0 - 1.0 / (c * c * tau)).sqrt();
        let xp = 1.2 * splitmix(&mut state);
        let tp = 0.8 * splitmix(&mut state);
        let hx = 1e-3 / bb;
        let ht = hx * hx;
        // keep the FD stencil away from the kernel's point source at (0,0)
        if tp.abs() < 20.0 * ht && xp.abs() < 20.0 * hx {
            continue;
        }
        let (e0, k0, _) = kernel_pair_1d(a, bb, xp, tp);
        let val = |x: f64, t: f64| {
            let (e, k, _) = kernel_pair_1d(a, bb, x, t);
            (e - e0).exp() * k
        };
        let kt = (val(xp, tp + ht) - val(xp, tp - ht)) / (2.0 * ht);
        let kxx = (val(xp + hx, tp) - 2.0 * k0 + val(xp - hx, tp)) / (hx * hx);
        let scale = (bb * bb * k0.abs()).max(kxx.abs() + kt.abs()).max(1e-12);
        worst = worst.max((kt + kxx).abs() / scale);
    }
    let pass_fd = worst < 1e-4;
    println!(
        "{} backward-heat FD residual: worst {:.2e} (tolerance 1e-4)",
        if pass_fd { "PASS" } else { "FAIL" },
        worst
    );

    // frozen spot values at z = i (a = 0, bb = 1), reducible by hand:
    // K(0,1) = -(1/2π) e ∫_{-1}^{1} e^{-(1-ξ²)} dξ, K(1,0) = -(1/π) sin 1
    let spot = |x: f64, t: f64| {
        let (e, k, _) = kernel_pair_1d(0.0, 1.0, x, t);
        e.exp() * k
    };
    let pairs = [
        ((0.0, 1.0), -0.46557651),
        ((1.0, 0.0), -(1.0f64).sin() / std::f64::consts::PI),
    ];
    let mut pass_spot = true;
    for ((x, t), want) in pairs {
        let v = spot(x, t);
        let ok = (v - want).abs() < 1e-7;
        pass_spot &= ok;
        println!(
            "{} spot value K({x},{t}; z=i): {v:.9} vs {want:.9}",
            if ok { "PASS" } else { "FAIL" }
        );
    }

    if pass_fd && pass_spot {
        Ok(())
    } else {
        Err("kernel invariant suite failed".into())
    }
}

fn run_forward(config: &str, output: Option<String>) -> Result<(), String> {
    let cfg = load(config)?;
    let geom = cfg.geometry();
    if geom.omega != (0.0, 1.0) {
        return Err("forward-solve convergence table requires Omega = (0, 1)".into());
    }
    let pi = std::f64::consts::PI;
    let exact = |x: f64, t: f64| (-pi * pi * t).exp() * (pi * x).sin();
    let flux = |x: f64, t: f64| {
        let nu = if x > 0.5 { 1.0 } else { -1.0 };
        nu * pi * (-pi * pi * t).exp() * (pi * x).cos()
    };
    let mut rows = String::from("nx,nt,max_error,ratio\n");
    let mut prev_err: Option<f64> = None;
    println!("{:>6} {:>7} {:>12} {:>7}", "nx", "nt", "max_error", "ratio");
    for level in 0..3 {
        let nx = (cfg.solver_nx - 1) * (1 << level) + 1;
        let nt = (cfg.solver_nt - 1) * (1 << level) + 1;
        let field = solve_forward(&geom, |x| (pi * x).sin(), flux, |_, _| 0.0, (nx, nt))
            .map_err(|e| e.to_string())?;
        let mut err = 0.0f64;
        for m in 0..nt {
            let t = geom.t_end * m as f64 / (nt - 1) as f64;
            for i in 0..nx {
                let x = i as f64 / (nx - 1) as f64;
                err = err.max((field.eval(&SpatialVec::scalar(x), t) - exact(x, t)).abs());
            }
        }
        let ratio = prev_err.map(|p| p / err);
        println!(
            "{nx:>6} {nt:>7} {err:>12.3e} {}",
            ratio.map(|r| format!("{r:>7.2}")).unwrap_or_else(|| "      -".into())
        );
        rows.push_str(&format!(
            "{nx},{nt},{err:.17e},{}\n",
            ratio.map(|r| format!("{r:.17e}")).unwrap_or_default()
        ));
        prev_err = Some(err);
    }
    if let Some(out) = output {
        std::fs::write(&out, rows).map_err(|e| format!("cannot write {out}: {e}"))?;
        println!("wrote {out}");
    }
    Ok(())
}
