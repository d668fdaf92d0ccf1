use serde::Serialize;

use super::observables::{characteristic, observables, Observables};
use super::state::WignerState;
use super::stepper::{mat_mul, Stepper};
use crate::coefficients::{CoefficientTrace, WignerCoefficients};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Where the per-step coefficients come from.
#[derive(Debug, Clone, Copy)]
pub enum CoefficientSource<'a> {
    Constant(WignerCoefficients),
    /// Linear interpolation in a trace; `shift_sq` is added to Ω_ren².
    Trace {
        trace: &'a CoefficientTrace,
        params: &'a PhysicalParams,
        shift_sq: f64,
    },
}

impl CoefficientSource<'_> {
    fn at(&self, t: f64, cross_diffusion: bool) -> Result<WignerCoefficients> {
        let mut c = match self {
            Self::Constant(c) => *c,
            Self::Trace { trace, params, shift_sq } => {
                let mut c = trace.wigner_at(params, t)?;
                c.omega_ren_sq += shift_sq;
                c
            }
        };
        if !cross_diffusion {
            c.diffusion_xp = 0.0;
        }
        Ok(c)
    }

    fn horizon(&self) -> f64 {
        match self {
            Self::Constant(_) => f64::INFINITY,
            Self::Trace { trace, .. } => trace.horizon(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Record a sample every `cadence` steps (and at the end).
    pub cadence: usize,
    /// Fringe wavevector (kₓ, kₚ) tracked along the linear characteristics.
    pub fringe: [f64; 2],
    pub cross_diffusion: bool,
    /// Stop once the tracked visibility drops below this value.
    pub stop_below: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub observables: Observables,
    /// |χ(k(t))| / |χ(k₀)|, with k(t) = Φ(t)^{−T} k₀.
    pub visibility: f64,
    /// Lab-frame momentum-marginal fringe amplitude, normalized to t = 0.
    pub lab_visibility: f64,
    pub boundary_mass: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub samples: Vec<Sample>,
    pub final_state: WignerState,
    pub steps: usize,
    pub dt: f64,
    pub indefinite_steps: usize,
    pub max_mass_change: f64,
    pub norm_drift: f64,
}

fn inverse_transpose(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[1][0] / det], [-m[0][1] / det, m[0][0] / det]]
}

/// Evolve `initial` to `options.horizon`. The step is shrunk so that an
/// integer number of steps lands exactly on the horizon.
pub fn evolve(
    initial: &WignerState,
    source: CoefficientSource<'_>,
    mirror_mass: f64,
    options: &EvolveOptions,
    observer: &mut dyn FnMut(&WignerState, &Sample),
) -> Result<EvolveOutput> {
    let horizon = options.horizon;
    if horizon > source.horizon() * (1.0 + 1e-12) {
        return Err(Error::LagRangeExceeded { lag: horizon, horizon: source.horizon() });
    }
    let steps = (horizon / options.dt).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let cadence = options.cadence.max(1);
    let mut stepper = Stepper::new(initial.grid, mirror_mass);
    let mut state = initial.clone();
    let norm0 = state.norm();
    let k0 = options.fringe;
    let chi0 = characteristic(&state, k0).norm();
    let lab0 = observables(&state, k0[1]).fringe_amplitude;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let mut phi = [[1.0, 0.0], [0.0, 1.0]];
    let mut samples = Vec::new();
    let mut record = |state: &WignerState, phi: &[[f64; 2]; 2], samples: &mut Vec<Sample>| {
        let m = inverse_transpose(phi);
        let k = [m[0][0] * k0[0] + m[0][1] * k0[1], m[1][0] * k0[0] + m[1][1] * k0[1]];
        let o = observables(state, k0[1]);
        let s = Sample {
            observables: o,
            visibility: ratio(characteristic(state, k).norm(), chi0),
            lab_visibility: ratio(o.fringe_amplitude, lab0),
            boundary_mass: state.boundary_mass(),
        };
        observer(state, &s);
        samples.push(s);
        s
    };
    record(&state, &phi, &mut samples);
    let (mut indefinite_steps, mut max_mass_change) = (0, 0.0f64);
    let mut done = 0;
    for n in 0..steps {
        let c = source.at((n as f64 + 0.5) * dt, options.cross_diffusion)?;
        let r = stepper.step(&mut state, &c, dt)?;
        phi = mat_mul(&stepper.step_map(&c, dt), &phi);
        indefinite_steps += r.indefinite as usize;
        max_mass_change = max_mass_change.max(r.mass_change);
        done = n + 1;
        let bm = state.boundary_mass();
        if bm > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryMass { mass: bm, limit: BOUNDARY_MASS_LIMIT });
        }
        if done % cadence == 0 || done == steps {
            let s = record(&state, &phi, &mut samples);
            if options.stop_below.is_some_and(|f| s.visibility < f) {
                break;
            }
        }
    }
    let norm_drift = (state.norm() - norm0).abs() / norm0;
    Ok(EvolveOutput {
        samples,
        final_state: state,
        steps: done,
        dt,
        indefinite_steps,
        max_mass_change,
        norm_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner_sim::state::{gaussian_state, PhaseGrid};

    #[test]
    fn coherent_state_returns_after_one_period() {
        let g = PhaseGrid::symmetric(15.0, 7.5, 128, 128);
        let s0 = gaussian_state(g, 3.0, 0.0, 2f64.sqrt(), 1.0).unwrap();
        let c = WignerCoefficients::hamiltonian(0.25);
        let opts = EvolveOptions {
            dt: 0.0125,
            horizon: 4.0 * std::f64::consts::PI,
            cadence: 100,
            fringe: [0.0, 0.0],
            cross_diffusion: true,
            stop_below: None,
        };
        let out = evolve(&s0, CoefficientSource::Constant(c), 1.0, &opts, &mut |_, _| {}).unwrap();
        let num: f64 = out.final_state.values.iter().zip(&s0.values).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = s0.values.iter().map(|b| b * b).sum();
        assert!((num / den).sqrt() < 1e-3);
        assert!(out.norm_drift < 1e-12);
    }

    #[test]
    fn trace_horizon_enforced() {
        let p = PhysicalParams::natural_default();
        let trace = CoefficientTrace {
            times: vec![0.0, 1.0],
            gamma: vec![0.0; 2],
            d_pp: vec![0.0; 2],
            d_xp: vec![0.0; 2],
            delta_omega2_sq: vec![0.0; 2],
            omega_ren_sq: vec![0.25; 2],
            frequency_shift_sq: 0.0,
            stationary: crate::coefficients::StationaryValues {
                gamma: 0.0,
                d_pp: 0.0,
                gamma_imaginary: 0.0,
                d_pp_imaginary: 0.0,
            },
        };
        let g = PhaseGrid::symmetric(15.0, 7.5, 16, 16);
        let s0 = gaussian_state(g, 0.0, 0.0, 2.0, 1.0).unwrap();
        let opts = EvolveOptions {
            dt: 0.1,
            horizon: 2.0,
            cadence: 1,
            fringe: [0.0, 0.0],
            cross_diffusion: true,
            stop_below: None,
        };
        let src = CoefficientSource::Trace { trace: &trace, params: &p, shift_sq: 0.0 };
        assert!(matches!(
            evolve(&s0, src, 1.0, &opts, &mut |_, _| {}),
            Err(Error::LagRangeExceeded { .. })
        ));
    }
}
