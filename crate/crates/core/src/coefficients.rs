//! Master-equation coefficients from the stationary mirror kernels.
//!
//! With lag τ = t − s and a switch-on at t₀ = 0:
//!
//!   D_PP(t)  = −ħ ∫₀ᵗ cos(Ωτ) K_ν(τ) dτ
//!   D_XP(t)  = (ħ/MΩ) ∫₀ᵗ sin(Ωτ) K_ν(τ) dτ
//!   Γ(t)     = (ħ/MΩ) ∫₀ᵗ sin(Ωτ) K_μ(τ) dτ
//!   ΔΩ₂²(t)  = −(2ħ/M) ∫₀ᵗ cos(Ωτ) K_μ(τ) dτ
//!
//! where K_ν, K_μ are the inverse transforms of ν̃_M, μ̃_M. The stationary
//! limits are D_PP^s = −(ħ/2)ν̃_M(Ω) and Γ^s = −i(ħ/2MΩ)μ̃_M(Ω).

use num_complex::Complex64;
use serde::Serialize;

use crate::env_kernels::{thermal_factor, TimeKernels};
use crate::error::{Error, Result};
use crate::mirror_kernels::{mirror_time_kernels, MirrorKernels};
use crate::params::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryValues {
    pub gamma: f64,
    pub d_pp: f64,
    /// Imaginary parts left after taking the real combination.
    pub gamma_imaginary: f64,
    pub d_pp_imaginary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTrace {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub d_pp: Vec<f64>,
    pub d_xp: Vec<f64>,
    pub delta_omega2_sq: Vec<f64>,
    /// Ω² + ΔΩ₁² + ΔΩ₂²(t), with raw signs.
    pub omega_ren_sq: Vec<f64>,
    pub frequency_shift_sq: f64,
    pub stationary: StationaryValues,
}

/// Global signs applied when the raw coefficients enter the Wigner equation.
/// σ_ν multiplies D_PP and D_XP, σ_μ multiplies Γ and ΔΩ₂².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignConvention {
    pub sigma_nu: f64,
    pub sigma_mu: f64,
}

impl SignConvention {
    /// Fix the signs operationally: −ħσ_νD_PP^s ≥ 0 (pure diffusion never
    /// lowers Var p) and σ_μΓ^s ≥ 0 (pure drift relaxes ⟨p⟩).
    pub fn resolve(stationary: &StationaryValues) -> Self {
        let sigma_nu = if stationary.d_pp > 0.0 { -1.0 } else { 1.0 };
        let sigma_mu = if stationary.gamma < 0.0 { -1.0 } else { 1.0 };
        Self { sigma_nu, sigma_mu }
    }
}

/// Coefficients as they enter ∂W/∂t, after the sign resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerCoefficients {
    /// Coefficient of ∂²_p W.
    pub diffusion_pp: f64,
    /// Coefficient of ∂²_{xp} W.
    pub diffusion_xp: f64,
    /// Coefficient of ∂_p(pW).
    pub drift: f64,
    pub omega_ren_sq: f64,
}

impl WignerCoefficients {
    pub fn hamiltonian(omega_sq: f64) -> Self {
        Self {
            diffusion_pp: 0.0,
            diffusion_xp: 0.0,
            drift: 0.0,
            omega_ren_sq: omega_sq,
        }
    }

    /// From raw master-equation values.
    pub fn from_raw(
        p: &PhysicalParams,
        signs: &SignConvention,
        d_pp: f64,
        d_xp: f64,
        gamma: f64,
        delta_omega2_sq: f64,
    ) -> Self {
        Self {
            diffusion_pp: -p.hbar * signs.sigma_nu * d_pp,
            diffusion_xp: p.hbar * signs.sigma_nu * d_xp,
            drift: 2.0 * signs.sigma_mu * gamma,
            omega_ren_sq: p.trap_frequency.powi(2) + p.frequency_shift_sq + signs.sigma_mu * delta_omega2_sq,
        }
    }
}

impl CoefficientTrace {
    pub fn signs(&self) -> SignConvention {
        SignConvention::resolve(&self.stationary)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Linear interpolation of the effective coefficients at time t.
    pub fn wigner_at(&self, p: &PhysicalParams, t: f64) -> Result<WignerCoefficients> {
        let horizon = self.horizon();
        if t > horizon * (1.0 + 1e-12) || t < 0.0 {
            return Err(Error::LagRangeExceeded { lag: t, horizon });
        }
        let dt = self.times[1] - self.times[0];
        let x = (t / dt).min((self.times.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.times.len() - 2);
        let f = x - i as f64;
        let lerp = |v: &[f64]| v[i] * (1.0 - f) + v[i + 1] * f;
        Ok(WignerCoefficients::from_raw(
            p,
            &self.signs(),
            lerp(&self.d_pp),
            lerp(&self.d_xp),
            lerp(&self.gamma),
            lerp(&self.delta_omega2_sq),
        ))
    }

    /// Effective coefficients from the stationary values; D_XP and ΔΩ₂² are
    /// taken from the end of the trace.
    pub fn wigner_stationary(&self, p: &PhysicalParams) -> WignerCoefficients {
        let last = self.times.len() - 1;
        WignerCoefficients::from_raw(
            p,
            &self.signs(),
            self.stationary.d_pp,
            self.d_xp[last],
            self.stationary.gamma,
            self.delta_omega2_sq[last],
        )
    }
}

/// D_PP^s and Γ^s by cubic interpolation of the spectra at Ω.
pub fn stationary_limits(mk: &MirrorKernels, p: &PhysicalParams) -> Result<StationaryValues> {
    let om = p.trap_frequency;
    let w = &mk.noise().omega;
    let (min, max) = (w[0], w[w.len() - 1]);
    let out = || Error::OutOfBand { omega: om, min, max };
    let nu = mk.noise().interpolate(om).ok_or_else(out)?;
    let mu = mk.dissipation().interpolate(om).ok_or_else(out)?;
    let d = -0.5 * p.hbar * nu;
    let g = Complex64::new(0.0, -1.0) * p.hbar / (2.0 * p.mirror_mass * om) * mu;
    Ok(StationaryValues {
        gamma: g.re,
        d_pp: d.re,
        gamma_imaginary: g.im,
        d_pp_imaginary: d.im,
    })
}

/// |D_PP^s − MΩz(Ω)Γ^s| / |D_PP^s|.
pub fn diffusion_friction_residual(s: &StationaryValues, p: &PhysicalParams) -> Result<f64> {
    let om = p.trap_frequency;
    let z = thermal_factor(om, p)?;
    if s.d_pp == 0.0 {
        return Ok(if s.gamma == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((s.d_pp - p.mirror_mass * om * z * s.gamma).abs() / s.d_pp.abs())
}

/// Cumulative trapezoid of f over a uniform grid.
fn cumulative(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for j in 1..f.len() {
        out[j] = out[j - 1] + 0.5 * dt * (f[j - 1] + f[j]);
    }
    out
}

/// Coefficient traces from lag kernels sampled at `kernels.times` (uniform,
/// starting at 0). `span` is t − t₀ and must not exceed the kernel horizon.
pub fn coefficient_traces_from_kernels(
    kernels: &TimeKernels,
    stationary: StationaryValues,
    p: &PhysicalParams,
    span: f64,
) -> Result<CoefficientTrace> {
    let horizon = *kernels.times.last().unwrap_or(&0.0);
    if span > horizon * (1.0 + 1e-12) {
        return Err(Error::LagRangeExceeded { lag: span, horizon });
    }
    let dt = kernels.times[1] - kernels.times[0];
    let n = ((span / dt).round() as usize + 1).min(kernels.times.len());
    let times = kernels.times[..n].to_vec();
    let om = p.trap_frequency;
    let (hb, mm) = (p.hbar, p.mirror_mass);
    let cos_nu: Vec<f64> = (0..n).map(|j| (om * times[j]).cos() * kernels.noise[j]).collect();
    let sin_nu: Vec<f64> = (0..n).map(|j| (om * times[j]).sin() * kernels.noise[j]).collect();
    let sin_mu: Vec<f64> = (0..n).map(|j| (om * times[j]).sin() * kernels.dissipation[j]).collect();
    let cos_mu: Vec<f64> = (0..n).map(|j| (om * times[j]).cos() * kernels.dissipation[j]).collect();
    let d_pp: Vec<f64> = cumulative(&cos_nu, dt).iter().map(|v| -hb * v).collect();
    let d_xp: Vec<f64> = cumulative(&sin_nu, dt).iter().map(|v| hb / (mm * om) * v).collect();
    let gamma: Vec<f64> = cumulative(&sin_mu, dt).iter().map(|v| hb / (mm * om) * v).collect();
    let delta_omega2_sq: Vec<f64> = cumulative(&cos_mu, dt).iter().map(|v| -2.0 * hb / mm * v).collect();
    let base = om * om + p.frequency_shift_sq;
    let omega_ren_sq = delta_omega2_sq.iter().map(|d| base + d).collect();
    Ok(CoefficientTrace {
        times,
        gamma,
        d_pp,
        d_xp,
        delta_omega2_sq,
        omega_ren_sq,
        frequency_shift_sq: p.frequency_shift_sq,
        stationary,
    })
}

/// Coefficient traces on the lag grid 0..=span with step `dt`.
pub fn coefficient_traces(mk: &MirrorKernels, p: &PhysicalParams, dt: f64, span: f64) -> Result<CoefficientTrace> {
    let n = (span / dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * dt).collect();
    let kernels = mirror_time_kernels(mk, &times);
    let stationary = stationary_limits(mk, p)?;
    coefficient_traces_from_kernels(&kernels, stationary, p, span)
}
