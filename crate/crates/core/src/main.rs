use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use dce_mirror::coefficients::{diffusion_friction_residual, SignConvention};
use dce_mirror::env_kernels::{minus_prefactor_ratio, thermal_factor};
use dce_mirror::error::{Error, Result};
use dce_mirror::idf_response::{continuum_memory_kernel, impulse_response, runaway_pole, volterra_impulse};
use dce_mirror::io::{OutputDir, RunManifest};
use dce_mirror::mirror_kernels::mirror_time_kernels;
use dce_mirror::optics::{crossover_roots, f_factor, scattering_for_ratio};
use dce_mirror::params::{derive_scales, load_config, Config};
use dce_mirror::pipeline::Pipeline;
use dce_mirror::verify::verify_suite;
use dce_mirror::wigner_sim::{
    cat_state, decoherence_report, evolve, CatStateSpec, CoefficientSource, EvolveOptions, PhaseGrid, Sample, Stepper,
};

#[derive(Parser)]
#[command(name = "dce-mirror", version, about = "Open-system dynamics of a mirror coupled to a field through an internal oscillator")]
struct Cli {
    /// TOML config; natural-unit defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Accepted for scripting symmetry; the pipeline uses no random numbers.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BathArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CoeffsArg {
    Stationary,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialArg {
    Cat,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission and reflection of the mirror.
    Optics {
        /// Ω_p/ω₀; defaults to the value implied by the config.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Bath noise and dissipation kernels.
    Kernels {
        #[arg(long, value_enum, default_value = "minus")]
        bath: BathArg,
    },
    /// Internal-oscillator susceptibility and impulse response.
    Response,
    /// Stationary mirror noise and dissipation kernels.
    MirrorKernels,
    /// Time-dependent master-equation coefficients.
    Coefficients,
    /// Wigner-function evolution of a cat state.
    Evolve {
        #[arg(long, value_enum, default_value = "cat")]
        initial: InitialArg,
        /// Separation in position; default 4·sqrt(ħ/MΩ).
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        p0: f64,
        /// Packet width; default sqrt(ħ/MΩ).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value = "stationary")]
        coeffs: CoeffsArg,
        /// Evolution time; default t_max from the config.
        #[arg(long)]
        horizon: Option<f64>,
        /// Time step upper bound; default T_max/N_t.
        #[arg(long)]
        dt: Option<f64>,
        /// Record observables every this many steps.
        #[arg(long, default_value_t = 10)]
        cadence: usize,
        /// Choose ΔΩ₁² so that the stationary renormalized frequency equals Ω.
        #[arg(long)]
        counterterm: bool,
        /// Drop the ∂²ₓₚ term.
        #[arg(long)]
        no_cross_diffusion: bool,
        /// Write W(x, p) every this many recorded samples.
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Run every invariant check and print a pass/fail table.
    Verify,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optics { .. } => "optics",
            Command::Kernels { .. } => "kernels",
            Command::Response => "response",
            Command::MirrorKernels => "mirror-kernels",
            Command::Coefficients => "coefficients",
            Command::Evolve { .. } => "evolve",
            Command::Verify => "verify",
        }
    }
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Ok,
    CheckFailed(String),
}

fn load(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => load_config(&std::fs::read_to_string(p)?),
        None => Ok(Config::default()),
    }
}

fn optics(cfg: &Config, ratio: Option<f64>, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let w0 = cfg.params.idf_frequency;
    let plasma = match ratio {
        Some(r) if r > 0.0 => r * w0,
        Some(_) => return Err(Error::InvalidParam { field: "ratio".into(), reason: "must be positive".into() }),
        None => derive_scales(&cfg.params).plasma_frequency,
    };
    let roots = crossover_roots(w0, plasma, 1e3 * w0.max(plasma)).ok();
    let star = roots.as_ref().map(|r| r.omega_star());
    let top = (3.0 * w0).max(1.5 * star.unwrap_or(0.0));
    let n = 2048;
    out.csv(
        "optics.csv",
        &["omega_over_omega0", "transmittance", "reflectance", "f_factor"],
        (0..n).map(|k| {
            let w = (k as f64 + 0.5) * top / n as f64;
            let s = scattering_for_ratio(w, w0, plasma);
            vec![w / w0, s.transmittance(), s.reflectance(), f_factor(w, w0, plasma)]
        }),
    )?;
    out.json(
        "optics_summary.json",
        &serde_json::json!({
            "plasma_over_omega0": plasma / w0,
            "roots": roots.as_ref().map(|r| r.roots.clone()),
            "omega_star": star,
            "omega_star_over_omega0": star.map(|s| s / w0),
        }),
    )?;
    m.convention("plasma_frequency", "c λ² / (2 m ω₀²)");
    Ok(Outcome::Ok)
}

fn kernels(cfg: &Config, bath: BathArg, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let (p, g) = (&cfg.params, &cfg.grid);
    let (pair, tag) = match bath {
        BathArg::Plus => (dce_mirror::env_kernels::plus_bath_spectra(g, p), "plus"),
        BathArg::Minus => (dce_mirror::env_kernels::minus_bath_spectra(g, p), "minus"),
    };
    let w = &pair.noise.omega;
    out.csv(
        &format!("kernels_{tag}_spectra.csv"),
        &["omega", "nu", "mu_im", "z"],
        (0..w.len()).map(|k| {
            vec![w[k], pair.noise.values[k].re, pair.dissipation.values[k].im, thermal_factor(w[k], p).unwrap_or(f64::NAN)]
        }),
    )?;
    let times = g.times();
    let tk = pair.time_kernels(&times);
    out.csv(
        &format!("kernels_{tag}_time.csv"),
        &["t", "nu", "mu"],
        (0..times.len()).map(|j| vec![times[j], tk.noise[j], tk.dissipation[j]]),
    )?;
    let peak = pair.noise.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fdr = if peak > 0.0 { pair.fdr_residual / peak } else { 0.0 };
    out.json(
        &format!("kernels_{tag}_summary.json"),
        &serde_json::json!({
            "fdr_residual_relative": fdr,
            "noise_parity": tk.noise_parity,
            "dissipation_parity": tk.dissipation_parity,
            "imaginary_residue": tk.imaginary_residue,
        }),
    )?;
    m.convention("fourier", "f(ω) = ∫ e^{iωt} f(t) dt, inverse (1/2π) ∫ e^{−iωt}");
    m.convention("minus_prefactor_ratio", minus_prefactor_ratio(p));
    Ok(if fdr < 1e-14 { Outcome::Ok } else { Outcome::CheckFailed(format!("bath FDR residual {fdr:e}")) })
}

fn response(cfg: &Config, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let pl = Pipeline::build(cfg)?;
    let p = &cfg.params;
    let s = &pl.susceptibility;
    out.csv(
        "response_spectrum.csv",
        &["omega", "re_g", "im_g"],
        s.table.omega.iter().zip(&s.table.values).map(|(w, v)| vec![*w, v.re, v.im]),
    )?;
    let dt = 0.005;
    let n = (20.0 / p.idf_frequency / dt).round() as usize;
    let stride = 10;
    let times: Vec<f64> = (0..=n).step_by(stride).map(|j| j as f64 * dt).collect();
    let resp = impulse_response(s, &times);
    let ode = volterra_impulse(p, continuum_memory_kernel(p), dt, n);
    out.csv(
        "response_time.csv",
        &["t", "g_frequency_route", "g_integro_differential"],
        times.iter().enumerate().map(|(k, t)| vec![*t, resp.values[k], ode[k * stride]]),
    )?;
    let pole = runaway_pole(p);
    out.json(
        "response_summary.json",
        &serde_json::json!({
            "runaway_rate": pole.rate,
            "runaway_residue": pole.residue,
            "bromwich_shift": resp.bromwich_shift,
            "causality_defect": resp.causality_defect,
            "real_axis_acausality": resp.real_axis_acausality,
            "spectral_weight": s.spectral_weight(),
            "expected_spectral_weight": s.expected_spectral_weight(),
            "passivity_violation": s.passivity_violation,
        }),
    )?;
    m.convention("susceptibility", "1/(ω₀² − ω² + μ̃₋(ω)/m)");
    Ok(if resp.causality_defect < 1e-6 {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("causality defect {:e}", resp.causality_defect))
    })
}

fn mirror(cfg: &Config, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let pl = Pipeline::build(cfg)?;
    let mk = &pl.mirror;
    let w = &mk.noise().omega;
    out.csv(
        "mirror_spectra.csv",
        &["omega", "nu_m", "mu_m_im", "fdr_residual"],
        (0..w.len()).map(|k| vec![w[k], mk.noise().values[k].re, mk.dissipation().values[k].im, mk.fdr_profile[k]]),
    )?;
    let times = cfg.grid.times();
    let tk = mirror_time_kernels(mk, &times);
    out.csv(
        "mirror_time.csv",
        &["t", "nu_m", "mu_m"],
        (0..times.len()).map(|j| vec![times[j], tk.noise[j], tk.dissipation[j]]),
    )?;
    out.json(
        "mirror_summary.json",
        &serde_json::json!({
            "fdr_residual_in_band": mk.fdr_residual_in_band,
            "convergence": mk.convergence,
            "normalization": mk.normalization,
        }),
    )?;
    m.convention("mirror_prefactor", mk.normalization.prefactor);
    m.convention("literal_scaled_coupling_sq", mk.normalization.literal_scaled_coupling_sq);
    if !mk.convergence.converged {
        return Ok(Outcome::CheckFailed(format!(
            "mirror spectra not converged: shift {:e} > {:e}",
            mk.convergence.shift, mk.convergence.tolerance
        )));
    }
    Ok(if mk.fdr_residual_in_band < 1e-3 {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("mirror FDR residual {:e}", mk.fdr_residual_in_band))
    })
}

fn coefficients(cfg: &Config, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let pl = Pipeline::build(cfg)?;
    let tr = pl.traces()?;
    out.csv(
        "coefficients.csv",
        &["t", "gamma", "d_pp", "d_xp", "delta_omega2_sq", "omega_ren_sq"],
        (0..tr.times.len())
            .map(|j| vec![tr.times[j], tr.gamma[j], tr.d_pp[j], tr.d_xp[j], tr.delta_omega2_sq[j], tr.omega_ren_sq[j]]),
    )?;
    let residual = diffusion_friction_residual(&tr.stationary, &cfg.params)?;
    let signs = SignConvention::resolve(&tr.stationary);
    out.json(
        "coefficients_summary.json",
        &serde_json::json!({
            "stationary": tr.stationary,
            "diffusion_friction_residual": residual,
            "signs": signs,
            "frequency_shift_sq": tr.frequency_shift_sq,
            "effective_stationary": tr.wigner_stationary(&cfg.params),
        }),
    )?;
    m.convention("signs", signs);
    Ok(if residual < 1e-3 {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("D_PP/Gamma relation residual {residual:e}"))
    })
}

struct EvolveArgs {
    x0: Option<f64>,
    p0: f64,
    delta: Option<f64>,
    coeffs: CoeffsArg,
    horizon: Option<f64>,
    dt: Option<f64>,
    cadence: usize,
    counterterm: bool,
    cross_diffusion: bool,
    snapshots: Option<usize>,
}

fn evolve_cmd(cfg: &Config, a: &EvolveArgs, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let p = &cfg.params;
    let pl = Pipeline::build(cfg)?;
    let tr = pl.traces()?;
    let signs = SignConvention::resolve(&tr.stationary);
    let width = (p.hbar / (p.mirror_mass * p.trap_frequency)).sqrt();
    let spec = CatStateSpec { x0: a.x0.unwrap_or(4.0 * width), p0: a.p0, delta: a.delta.unwrap_or(width) };
    let grid = PhaseGrid::from_spec(&cfg.grid);
    let initial = cat_state(&spec, grid, p.hbar)?;
    let stationary = tr.wigner_stationary(p);
    let counter = if a.counterterm { p.trap_frequency.powi(2) - stationary.omega_ren_sq } else { 0.0 };
    let source = match a.coeffs {
        CoeffsArg::Stationary => {
            let mut c = stationary;
            c.omega_ren_sq += counter;
            CoefficientSource::Constant(c)
        }
        CoeffsArg::Trace => CoefficientSource::Trace { trace: &tr, params: p, shift_sq: counter },
    };
    let final_w2 = stationary.omega_ren_sq + counter;
    if final_w2 <= 0.0 {
        return Err(Error::Domain(format!(
            "stationary renormalized frequency squared is {final_w2:e} <= 0; pass --counterterm or set frequency_shift_sq"
        )));
    }
    m.convention("signs", signs);
    m.convention("counterterm_shift_sq", counter);
    m.convention("cross_diffusion", a.cross_diffusion);
    m.convention("coefficients", if a.coeffs == CoeffsArg::Stationary { "stationary" } else { "trace" });
    let horizon = a.horizon.unwrap_or(cfg.grid.t_max);
    // --dt is an upper bound; shrink it to the explicit-scheme limit of every
    // coefficient set the run will see.
    let stepper = Stepper::new(grid, p.mirror_mass);
    let mut dt = a.dt.unwrap_or(cfg.grid.dt());
    match &source {
        CoefficientSource::Constant(c) => dt = dt.min(stepper.stable_dt(c, 0.9)),
        CoefficientSource::Trace { trace, .. } => {
            for &t in trace.times.iter().filter(|&&t| t <= horizon) {
                let mut c = trace.wigner_at(p, t)?;
                if !a.cross_diffusion {
                    c.diffusion_xp = 0.0;
                }
                dt = dt.min(stepper.stable_dt(&c, 0.9));
            }
        }
    }
    m.convention("dt", dt);
    let options = EvolveOptions {
        dt,
        horizon,
        cadence: a.cadence,
        fringe: spec.fringe_wavevector(p.hbar),
        cross_diffusion: a.cross_diffusion,
        stop_below: None,
    };
    let mut snaps: Vec<(usize, dce_mirror::wigner_sim::WignerState)> = Vec::new();
    let mut count = 0usize;
    let every = a.snapshots;
    let result = evolve(&initial, source, p.mirror_mass, &options, &mut |s, _: &Sample| {
        if every.is_some_and(|k| k > 0 && count % k == 0) {
            snaps.push((count, s.clone()));
        }
        count += 1;
    });
    for (k, s) in &snaps {
        let g = s.grid;
        out.csv(
            &format!("wigner_{k:06}.csv"),
            &["x", "p", "w"],
            (0..g.n_x).flat_map(|i| (0..g.n_p).map(move |j| (i, j))).map(|(i, j)| vec![g.x(i), g.p(j), s.at(i, j)]),
        )?;
    }
    let run = result?;
    out.csv(
        "observables.csv",
        &["t", "norm", "mean_x", "mean_p", "var_x", "var_p", "cov_xp", "visibility", "lab_visibility", "negativity"],
        run.samples.iter().map(|s| {
            let o = &s.observables;
            vec![o.time, o.norm, o.mean_x, o.mean_p, o.var_x, o.var_p, o.cov_xp, s.visibility, s.lab_visibility, o.negativity]
        }),
    )?;
    let report = if spec.x0 > 0.0 {
        match decoherence_report(&run.samples, &tr, p, &spec) {
            Ok(r) => Some(serde_json::to_value(r)?),
            Err(e) => Some(serde_json::json!({ "unavailable": e.to_string() })),
        }
    } else {
        None
    };
    out.json(
        "evolve_summary.json",
        &serde_json::json!({
            "cat": spec,
            "steps": run.steps,
            "dt": run.dt,
            "indefinite_steps": run.indefinite_steps,
            "max_mass_change": run.max_mass_change,
            "norm_drift": run.norm_drift,
            "decoherence": report,
        }),
    )?;
    Ok(if run.norm_drift < 1e-5 {
        Outcome::Ok
    } else {
        Outcome::CheckFailed(format!("norm drift {:e}", run.norm_drift))
    })
}

fn verify(cfg: &Config, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    let report = verify_suite(cfg)?;
    print!("{}", report.table());
    out.json("verify.json", &report)?;
    m.convention("verify_all_passed", report.all_passed);
    Ok(if report.all_passed {
        Outcome::Ok
    } else {
        let failed: Vec<&str> = report.entries.iter().filter(|e| !e.passed).map(|e| e.name.as_str()).collect();
        Outcome::CheckFailed(format!("failed checks: {}", failed.join(", ")))
    })
}

fn dispatch(cli: &Cli, cfg: &Config, out: &mut OutputDir, m: &mut RunManifest) -> Result<Outcome> {
    match &cli.command {
        Command::Optics { ratio } => optics(cfg, *ratio, out, m),
        Command::Kernels { bath } => kernels(cfg, *bath, out, m),
        Command::Response => response(cfg, out, m),
        Command::MirrorKernels => mirror(cfg, out, m),
        Command::Coefficients => coefficients(cfg, out, m),
        Command::Evolve {
            initial: InitialArg::Cat,
            x0,
            p0,
            delta,
            coeffs,
            horizon,
            dt,
            cadence,
            counterterm,
            no_cross_diffusion,
            snapshots,
        } => {
            let a = EvolveArgs {
                x0: *x0,
                p0: *p0,
                delta: *delta,
                coeffs: *coeffs,
                horizon: *horizon,
                dt: *dt,
                cadence: *cadence,
                counterterm: *counterterm,
                cross_diffusion: !no_cross_diffusion,
                snapshots: *snapshots,
            };
            evolve_cmd(cfg, &a, out, m)
        }
        Command::Verify => verify(cfg, out, m),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut out = match OutputDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cfg = match load(cli.config.as_deref()).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let failed = serde_json::json!({
                "subcommand": cli.command.name(),
                "tool_version": env!("CARGO_PKG_VERSION"),
                "outputs": ["manifest.json"],
                "status": "error",
                "error": e.to_string(),
            });
            if let Err(w) = dce_mirror::io::write_json(&cli.out.join("manifest.json"), &failed) {
                eprintln!("error writing manifest: {w}");
            }
            return ExitCode::from(if e.is_usage() { 2 } else { 1 });
        }
    };
    let mut manifest = RunManifest::new(cli.command.name(), &cfg);
    let result = dispatch(&cli, &cfg, &mut out, &mut manifest);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let code = match &result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            manifest.status = "check_failed".into();
            manifest.error = Some(msg.clone());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            manifest.status = "error".into();
            manifest.error = Some(e.to_string());
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    };
    if let Err(e) = out.finish(manifest) {
        eprintln!("error writing manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
