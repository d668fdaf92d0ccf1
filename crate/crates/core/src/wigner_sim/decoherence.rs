use serde::Serialize;

use super::evolve::{evolve, CoefficientSource, EvolveOptions, EvolveOutput, Sample};
use super::state::{cat_state, CatStateSpec, PhaseGrid};
use super::stepper::Stepper;
use crate::coefficients::{CoefficientTrace, WignerCoefficients};
use crate::env_kernels::thermal_factor;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// The visibility must fall below this for a fit to be reported.
pub const DECAY_FLOOR: f64 = 0.367_879_441_171_442_3;

#[derive(Debug, Clone, Serialize)]
pub struct DecoherenceReport {
    pub times: Vec<f64>,
    pub visibility: Vec<f64>,
    pub lab_visibility: Vec<f64>,
    pub negativity: Vec<f64>,
    pub fitted_t_xx: f64,
    /// Fringe decay time when p₀ > 0 (both diffusion channels act).
    pub fitted_t_xp: Option<f64>,
    pub predicted_t_xx: f64,
    pub predicted_t_xp: Option<f64>,
    pub relaxation_time: f64,
    pub fit_ratio: f64,
    pub t_xx_over_t_r: f64,
    /// ħΓ^s/(D_PP^s x₀²) = ħ/(MΩz(Ω)x₀²).
    pub predicted_ratio: f64,
}

/// Least-squares slope of ln V against t through the origin, using samples
/// up to the first one below `fit_floor`.
pub fn fit_decay_time(times: &[f64], visibility: &[f64], fit_floor: f64) -> Result<f64> {
    let min = visibility.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min <= DECAY_FLOOR) {
        return Err(Error::InsufficientDecay { floor: min, required: DECAY_FLOOR });
    }
    let t0 = times[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &v) in times.iter().zip(visibility) {
        if v < fit_floor || v <= 0.0 {
            break;
        }
        let dt = t - t0;
        num += dt * v.ln();
        den += dt * dt;
    }
    if den == 0.0 || num >= 0.0 {
        return Err(Error::InsufficientDecay { floor: min, required: DECAY_FLOOR });
    }
    Ok(-den / num)
}

pub fn decoherence_report(
    samples: &[Sample],
    trace: &CoefficientTrace,
    params: &PhysicalParams,
    spec: &CatStateSpec,
) -> Result<DecoherenceReport> {
    let times: Vec<f64> = samples.iter().map(|s| s.observables.time).collect();
    let visibility: Vec<f64> = samples.iter().map(|s| s.visibility).collect();
    let fitted = fit_decay_time(&times, &visibility, (-3.0f64).exp())?;
    let s = trace.stationary;
    let hbar = params.hbar;
    let x0sq = spec.x0 * spec.x0;
    let predicted_t_xx = hbar / (s.d_pp.abs() * x0sq);
    let relaxation_time = 1.0 / s.gamma.abs();
    let z = thermal_factor(params.trap_frequency, params)?;
    let d_xp = trace.d_xp.last().copied().unwrap_or(0.0);
    let xp = spec.p0 > 0.0;
    Ok(DecoherenceReport {
        lab_visibility: samples.iter().map(|s| s.lab_visibility).collect(),
        negativity: samples.iter().map(|s| s.observables.negativity).collect(),
        times,
        visibility,
        fitted_t_xx: fitted,
        fitted_t_xp: xp.then_some(fitted),
        predicted_t_xx,
        predicted_t_xp: xp.then(|| hbar / (d_xp.abs() * spec.x0 * spec.p0)),
        relaxation_time,
        fit_ratio: fitted / predicted_t_xx,
        t_xx_over_t_r: fitted / relaxation_time,
        predicted_ratio: hbar / (params.mirror_mass * params.trap_frequency * z * x0sq),
    })
}

#[derive(Debug, Clone)]
pub struct DecoherenceSettings {
    pub cross_diffusion: bool,
    /// Choose ΔΩ₁² so that Ω_ren² = Ω² in the stationary regime.
    pub counterterm: bool,
    /// Run length in units of the predicted t_XX.
    pub horizon_factor: f64,
    pub max_dt: f64,
}

impl Default for DecoherenceSettings {
    fn default() -> Self {
        Self {
            cross_diffusion: true,
            counterterm: true,
            horizon_factor: 8.0,
            max_dt: 0.0125,
        }
    }
}

/// Stationary coefficients as used by the decoherence runs.
pub fn stationary_coefficients(trace: &CoefficientTrace, params: &PhysicalParams, settings: &DecoherenceSettings) -> WignerCoefficients {
    let mut c = trace.wigner_stationary(params);
    if settings.counterterm {
        c.omega_ren_sq = params.trap_frequency.powi(2);
    }
    if !settings.cross_diffusion {
        c.diffusion_xp = 0.0;
    }
    c
}

/// Evolve a cat state with stationary coefficients until the fringe
/// visibility has decayed, then fit t_XX.
pub fn run_decoherence(
    trace: &CoefficientTrace,
    params: &PhysicalParams,
    grid: PhaseGrid,
    spec: &CatStateSpec,
    settings: &DecoherenceSettings,
) -> Result<(DecoherenceReport, EvolveOutput)> {
    let c = stationary_coefficients(trace, params, settings);
    let initial = cat_state(spec, grid, params.hbar)?;
    let stepper = Stepper::new(grid, params.mirror_mass);
    let predicted = params.hbar / (trace.stationary.d_pp.abs() * spec.x0 * spec.x0);
    let horizon = settings.horizon_factor * predicted;
    let dt = stepper.stable_dt(&c, 0.9).min(settings.max_dt).min(predicted / 20.0);
    let options = EvolveOptions {
        dt,
        horizon,
        cadence: ((predicted / 20.0) / dt).floor().max(1.0) as usize,
        fringe: spec.fringe_wavevector(params.hbar),
        cross_diffusion: settings.cross_diffusion,
        stop_below: Some((-4.0f64).exp()),
    };
    let out = evolve(&initial, CoefficientSource::Constant(c), params.mirror_mass, &options, &mut |_, _| {})?;
    let report = decoherence_report(&out.samples, trace, params, spec)?;
    Ok((report, out))
}
