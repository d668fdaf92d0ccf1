//! Pass/fail audit of the invariants of every stage for one config.

use serde::Serialize;

use crate::coefficients::{diffusion_friction_residual, CoefficientTrace, SignConvention, WignerCoefficients};
use crate::error::Result;
use crate::idf_response::{continuum_memory_kernel, impulse_response, volterra_impulse};
use crate::optics::{crossover_frequency, spectral_scan};
use crate::params::{derive_scales, Config};
use crate::pipeline::Pipeline;
use crate::wigner_sim::{evolve, gaussian_state, CoefficientSource, EvolveOptions, PhaseGrid};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyEntry {
    pub name: String,
    /// "identity" (exact relations), "convergence" (resolution-limited) or "stepper".
    pub category: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub entries: Vec<VerifyEntry>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn entry(&self, name: &str) -> Option<&VerifyEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<30} {:<12} {:>12} {:>12}  result\n", "check", "category", "measured", "tolerance");
        for e in &self.entries {
            s += &format!(
                "{:<30} {:<12} {:>12.3e} {:>12.3e}  {}\n",
                e.name,
                e.category,
                e.measured,
                e.tolerance,
                if e.passed { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

struct Entries(Vec<VerifyEntry>);

impl Entries {
    fn push(&mut self, name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) {
        self.0.push(VerifyEntry {
            name: name.into(),
            category: category(name),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: detail.into(),
        });
    }

    fn failed(&mut self, name: &str, tolerance: f64, err: impl std::fmt::Display) {
        self.0.push(VerifyEntry {
            name: name.into(),
            category: category(name),
            measured: f64::NAN,
            tolerance,
            passed: false,
            detail: err.to_string(),
        });
    }
}

fn category(name: &str) -> &'static str {
    match name {
        "response_vs_ode" | "mirror_convergence" | "route_gamma" | "route_d_pp" | "coefficient_traces" => "convergence",
        n if n.starts_with("wigner") => "stepper",
        _ => "identity",
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn optics(cfg: &Config, e: &mut Entries) {
    let p = &cfg.params;
    let scan = spectral_scan(&cfg.grid, p);
    let unitarity = scan
        .iter()
        .map(|s| (s.transmittance() + s.reflectance() - 1.0).abs())
        .fold(0.0, f64::max);
    e.push("optics_unitarity", unitarity, 1e-12, "max ||T|^2+|R|^2-1| over the frequency grid");
    let plasma = derive_scales(p).plasma_frequency;
    if plasma > 0.0 {
        match crossover_frequency(p, plasma, 1e3 * p.idf_frequency.max(plasma)) {
            Ok(r) => {
                let w = r.omega_star();
                let f = crate::optics::f_factor(w, p.idf_frequency, plasma);
                e.push("optics_crossover_root", (f * f - 1.0).abs(), 1e-9, format!("omega* = {w}"));
            }
            Err(err) => e.failed("optics_crossover_root", 1e-9, err),
        }
    }
}

fn baths(pl: &Pipeline, e: &mut Entries) {
    for (name, k) in [("bath_fdr_plus", &pl.plus), ("bath_fdr_minus", &pl.minus)] {
        let peak = k.noise.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let r = if peak > 0.0 { k.fdr_residual / peak } else { 0.0 };
        e.push(name, r, 1e-14, "max |nu - i z mu| / max |nu|");
    }
    let times: Vec<f64> = (0..64).map(|j| j as f64 * 0.37).collect();
    let tk = pl.minus.time_kernels(&times);
    e.push("bath_parity_minus", tk.noise_parity.max(tk.dissipation_parity), 1e-10, "nu even, mu odd in t");
}

fn response(pl: &Pipeline, e: &mut Entries) {
    let p = &pl.config.params;
    let s = &pl.susceptibility;
    let dt = 0.005;
    let n = (20.0 / p.idf_frequency / dt).round() as usize;
    let stride = 20;
    let times: Vec<f64> = (0..=n).step_by(stride).map(|j| j as f64 * dt).collect();
    let resp = impulse_response(s, &times);
    e.push("response_causality", resp.causality_defect, 1e-6, "max_{t<0}|G| / max_{t>0}|G|");
    let ode = volterra_impulse(p, continuum_memory_kernel(p), dt, n);
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &v) in resp.values.iter().enumerate() {
        let o = ode[k * stride];
        num += (v - o).powi(2);
        den += o * o;
    }
    e.push("response_vs_ode", (num / den).sqrt(), 0.01, "relative RMS over [0, 20/omega0]");
    e.push(
        "response_sum_rule",
        relative(s.spectral_weight(), s.expected_spectral_weight()),
        0.01,
        "int omega Im G",
    );
    e.push("response_passivity", s.passivity_violation, 1e-12, "max(0, -omega Im G)");
}

fn mirror(pl: &Pipeline, e: &mut Entries) {
    let mk = &pl.mirror;
    e.push("mirror_fdr", mk.fdr_residual_in_band, 1e-3, "in-band |nu_M - i z mu_M| / peak");
    e.push(
        "mirror_convergence",
        mk.convergence.shift,
        mk.convergence.tolerance,
        format!("N vs N/2 shift; peak-relative {:.3e}", mk.convergence.peak_relative_shift),
    );
    let p = &pl.config.params;
    if p.temperature == 0.0 {
        let (out, inside) = pl.pair_density.support_split(p.trap_frequency);
        let r = if inside > 0.0 { out / inside } else { out };
        e.push("mirror_pair_support", r, 1e-6, "weight outside 0 < omega' < Omega");
    }
}

fn coefficients(pl: &Pipeline, trace: &CoefficientTrace, e: &mut Entries) {
    let p = &pl.config.params;
    let s = trace.stationary;
    match diffusion_friction_residual(&s, p) {
        Ok(r) => e.push("diffusion_friction_relation", r, 1e-3, "|D_PP - M Omega z Gamma| / |D_PP|"),
        Err(err) => e.failed("diffusion_friction_relation", 1e-3, err),
    }
    let lag = 50.0 / p.trap_frequency;
    if lag > trace.horizon() * (1.0 + 1e-12) {
        e.failed("route_gamma", 0.02, format!("lag {lag} exceeds horizon {}", trace.horizon()));
        e.failed("route_d_pp", 0.02, format!("lag {lag} exceeds horizon {}", trace.horizon()));
    } else {
        let dt = trace.times[1] - trace.times[0];
        let j = ((lag / dt).round() as usize).min(trace.times.len() - 1);
        e.push("route_gamma", relative(trace.gamma[j], s.gamma), 0.02, "Gamma(50/Omega) vs spectral");
        e.push("route_d_pp", relative(trace.d_pp[j], s.d_pp), 0.02, "D_PP(50/Omega) vs spectral");
    }
    let signs = SignConvention::resolve(&s);
    let c = trace.wigner_stationary(p);
    e.push(
        "sign_diffusion_nonnegative",
        (-c.diffusion_pp).max(0.0),
        0.0,
        format!("sigma_nu = {}, sigma_mu = {}", signs.sigma_nu, signs.sigma_mu),
    );
}

fn wigner(cfg: &Config, e: &mut Entries) {
    let p = &cfg.params;
    let grid = PhaseGrid::from_spec(&cfg.grid);
    let delta = (p.hbar / (p.mirror_mass * p.trap_frequency)).sqrt();
    let s0 = match gaussian_state(grid, 2.0 * delta, 0.0, delta, p.hbar) {
        Ok(s) => s,
        Err(err) => return e.failed("wigner_period_return", 0.01, err),
    };
    let w2 = p.trap_frequency.powi(2);
    let opts = EvolveOptions {
        dt: cfg.grid.dt(),
        horizon: 2.0 * std::f64::consts::PI / p.trap_frequency,
        cadence: usize::MAX,
        fringe: [0.0, 0.0],
        cross_diffusion: true,
        stop_below: None,
    };
    match evolve(&s0, CoefficientSource::Constant(WignerCoefficients::hamiltonian(w2)), p.mirror_mass, &opts, &mut |_, _| {}) {
        Ok(out) => {
            let num: f64 = out.final_state.values.iter().zip(&s0.values).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = s0.values.iter().map(|b| b * b).sum();
            e.push("wigner_period_return", (num / den).sqrt(), 0.01, "relative RMS after one period");
            e.push("wigner_norm_drift", out.norm_drift, 1e-5, "over one period");
        }
        Err(err) => e.failed("wigner_period_return", 0.01, err),
    }
}

/// Run every check for `config`. Config errors are returned; physics failures
/// become failed entries.
pub fn verify_suite(config: &Config) -> Result<VerifyReport> {
    config.validate()?;
    let mut e = Entries(Vec::new());
    optics(config, &mut e);
    let pl = Pipeline::build(config)?;
    baths(&pl, &mut e);
    response(&pl, &mut e);
    mirror(&pl, &mut e);
    match pl.traces() {
        Ok(trace) => coefficients(&pl, &trace, &mut e),
        Err(err) => e.failed("coefficient_traces", 0.0, err),
    }
    wigner(config, &mut e);
    let all_passed = e.0.iter().all(|x| x.passed);
    Ok(VerifyReport { entries: e.0, all_passed })
}
