//! Noise and dissipation kernels of the two field baths.
//!
//! The (+) bath couples through mirror motion, the (−) bath drives the idf
//! directly. Spectra are analytic; time kernels are band-limited inverse
//! transforms over |ω| ≤ Λ.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{GridSpec, PhysicalParams};
use crate::spectral::SpectralTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bath {
    Plus,
    Minus,
    Mirror,
}

/// z(ω) = coth(ħω/2k_BT); sign(ω) at T = 0.
pub fn thermal_factor(omega: f64, p: &PhysicalParams) -> Result<f64> {
    if p.temperature == 0.0 {
        return Ok(sign(omega));
    }
    if omega == 0.0 {
        return Err(Error::Domain(
            "thermal factor is singular at omega = 0 for T > 0".into(),
        ));
    }
    Ok(coth(p.thermal_argument(omega)))
}

/// z(ω) for frequencies known to be nonzero (grid samples).
pub(crate) fn z(omega: f64, p: &PhysicalParams) -> f64 {
    thermal_factor(omega, p).unwrap_or(0.0)
}

/// ω·z(ω), continuous through ω = 0 where it equals 2k_BT/ħ.
pub fn omega_z(omega: f64, p: &PhysicalParams) -> f64 {
    if omega == 0.0 {
        return 2.0 * p.boltzmann * p.temperature / p.hbar;
    }
    omega * z(omega, p)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// ν̃₊(ω) = z(ω) ω/(4c).
pub fn plus_noise(omega: f64, p: &PhysicalParams) -> f64 {
    omega_z(omega, p) / (4.0 * p.light_speed)
}

/// μ̃₊(ω) = −iω/(4c).
pub fn plus_dissipation(omega: f64, p: &PhysicalParams) -> Complex64 {
    Complex64::new(0.0, -omega / (4.0 * p.light_speed))
}

/// Prefactor of the (−) spectra, λ²c³/2, as obtained from the continuum
/// limit of the discrete mode sums.
pub fn minus_prefactor(p: &PhysicalParams) -> f64 {
    0.5 * p.coupling * p.coupling * p.light_speed.powi(3)
}

/// ν̃₋(ω) = (λ²c³/2) z(ω)/ω.
pub fn minus_noise(omega: f64, p: &PhysicalParams) -> f64 {
    minus_prefactor(p) * z(omega, p) / omega
}

/// μ̃₋(ω) = −i(λ²c³/2)/ω, valid anywhere off the origin, including complex ω.
pub fn minus_dissipation(omega: Complex64, p: &PhysicalParams) -> Complex64 {
    Complex64::new(0.0, -minus_prefactor(p)) / omega
}

/// Matched noise and dissipation kernels for one bath.
#[derive(Debug, Clone, Serialize)]
pub struct KernelPair {
    pub bath: Bath,
    pub noise: SpectralTable,
    pub dissipation: SpectralTable,
    /// max_ω |ν̃ − i z μ̃|.
    pub fdr_residual: f64,
}

/// Time-domain kernels with parity audit.
#[derive(Debug, Clone, Serialize)]
pub struct TimeKernels {
    pub times: Vec<f64>,
    pub noise: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// max_t |ν(t) − ν(−t)| / max|ν|.
    pub noise_parity: f64,
    /// max_t |μ(t) + μ(−t)| / max|μ|.
    pub dissipation_parity: f64,
    /// Largest imaginary part produced by the inverse transform, relative.
    pub imaginary_residue: f64,
}

impl KernelPair {
    pub fn from_tables(bath: Bath, noise: SpectralTable, dissipation: SpectralTable, p: &PhysicalParams) -> Self {
        let fdr_residual = fdr_residual(&noise, &dissipation, p);
        Self {
            bath,
            noise,
            dissipation,
            fdr_residual,
        }
    }

    /// Band-limited ν(t), μ(t) with the (1/2π) inverse convention.
    pub fn time_kernels(&self, times: &[f64]) -> TimeKernels {
        time_kernels(&self.noise, &self.dissipation, times)
    }
}

pub fn fdr_residual(noise: &SpectralTable, dissipation: &SpectralTable, p: &PhysicalParams) -> f64 {
    noise
        .omega
        .iter()
        .zip(noise.values.iter().zip(&dissipation.values))
        .map(|(&w, (n, d))| (n - Complex64::new(0.0, z(w, p)) * d).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn time_kernels(noise: &SpectralTable, dissipation: &SpectralTable, times: &[f64]) -> TimeKernels {
    let mut both: Vec<f64> = times.iter().map(|t| -t).collect();
    both.extend_from_slice(times);
    let nu = noise.inverse_at(&both);
    let mu = dissipation.inverse_at(&both);
    let n = times.len();
    let peak = |v: &[Complex64]| v.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let nu_peak = peak(&nu);
    let mu_peak = peak(&mu);
    let mut noise_parity = 0.0f64;
    let mut dissipation_parity = 0.0f64;
    let mut imag = 0.0f64;
    for j in 0..n {
        noise_parity = noise_parity.max((nu[n + j] - nu[j]).norm() / nu_peak);
        dissipation_parity = dissipation_parity.max((mu[n + j] + mu[j]).norm() / mu_peak);
        imag = imag.max(nu[n + j].im.abs() / nu_peak).max(mu[n + j].im.abs() / mu_peak);
    }
    TimeKernels {
        times: times.to_vec(),
        noise: nu[n..].iter().map(|c| c.re).collect(),
        dissipation: mu[n..].iter().map(|c| c.re).collect(),
        noise_parity,
        dissipation_parity,
        imaginary_residue: imag,
    }
}

pub fn plus_bath_spectra(grid: &GridSpec, p: &PhysicalParams) -> KernelPair {
    let w = grid.frequencies();
    let noise = SpectralTable::from_fn(w.clone(), |w| Complex64::new(plus_noise(w, p), 0.0));
    let diss = SpectralTable::from_fn(w, |w| plus_dissipation(w, p));
    KernelPair::from_tables(Bath::Plus, noise, diss, p)
}

pub fn minus_bath_spectra(grid: &GridSpec, p: &PhysicalParams) -> KernelPair {
    let w = grid.frequencies();
    let noise = SpectralTable::from_fn(w.clone(), |w| Complex64::new(minus_noise(w, p), 0.0));
    let diss = SpectralTable::from_fn(w, |w| minus_dissipation(Complex64::new(w, 0.0), p));
    KernelPair::from_tables(Bath::Minus, noise, diss, p)
}

/// Ratio of the implemented (−) prefactor to the closed-form continuum
/// prefactor λ²c³/2. Equal to one: the discrete sum λ̄²/(2ωₙ) with the
/// density of states cL/2π and the (1/2π) inverse transform reproduce it.
pub fn minus_prefactor_ratio(p: &PhysicalParams) -> f64 {
    let lambda_bar_sq = 2.0 * p.light_speed.powi(2) * p.coupling.powi(2) / p.quantization_length;
    let dos = p.light_speed * p.quantization_length / (2.0 * PI);
    // 2π·𝒟·λ̄²/4 per unit z/ω
    let from_sum = 2.0 * PI * dos * lambda_bar_sq / 4.0;
    if minus_prefactor(p) == 0.0 {
        1.0
    } else {
        from_sum / minus_prefactor(p)
    }
}

/// Which correlator a mode sum evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKernel {
    PlusNoise,
    PlusDissipation,
    MinusNoise,
    MinusDissipation,
}

/// Direct finite-L sum over modes ω_n = 2πcn/L, n = 0..N_modes.
///
/// (+) sums: ν₊ = Σ (ωₙ/2c²) zₙ cos ωₙt, μ₊ = −Σ (ωₙ/2c²) sin ωₙt.
/// (−) sums: ν₋ = Σ (λ̄²/2ωₙ) zₙ cos ωₙt, μ₋ = −(λ̄²/2) Σ sin(ωₙt)/ωₙ.
/// The (−) sums skip the n = 0 zero mode. In natural units the (+) sums
/// approximate L times the (1/2π) inverse of the continuum spectra and the
/// (−) sums approximate it directly.
pub fn mode_sum_kernel(t: f64, kind: ModeKernel, p: &PhysicalParams, n_modes: usize) -> f64 {
    let c = p.light_speed;
    let spacing = 2.0 * PI * c / p.quantization_length;
    let lambda_bar_sq = 2.0 * c * c * p.coupling * p.coupling / p.quantization_length;
    let mut acc = 0.0;
    match kind {
        ModeKernel::PlusNoise => {
            for n in 0..=n_modes {
                let w = n as f64 * spacing;
                acc += omega_z(w, p) / (2.0 * c * c) * (w * t).cos();
            }
        }
        ModeKernel::PlusDissipation => {
            for n in 1..=n_modes {
                let w = n as f64 * spacing;
                acc -= w / (2.0 * c * c) * (w * t).sin();
            }
        }
        ModeKernel::MinusNoise => {
            for n in 1..=n_modes {
                let w = n as f64 * spacing;
                acc += lambda_bar_sq / (2.0 * w) * z(w, p) * (w * t).cos();
            }
        }
        ModeKernel::MinusDissipation => {
            for n in 1..=n_modes {
                let w = n as f64 * spacing;
                acc -= 0.5 * lambda_bar_sq * (w * t).sin() / w;
            }
        }
    }
    acc
}

/// Number of modes with ωₙ ≤ Λ.
pub fn modes_in_band(p: &PhysicalParams, cutoff: f64) -> usize {
    (cutoff * p.quantization_length / (2.0 * PI * p.light_speed)).floor() as usize
}

/// Closed forms of the band-limited continuum kernels at T = 0 (natural
/// scale: (1/2π) inverse, no factor L). Used as independent references.
pub mod continuum {
    use super::*;

    /// ν₊(0) = Λ²/(8πc) at T = 0.
    pub fn plus_noise_at_zero(p: &PhysicalParams, cutoff: f64) -> f64 {
        cutoff * cutoff / (8.0 * PI * p.light_speed)
    }

    /// μ₊(t) = −(1/4πc)(sin Λt/t² − Λ cos Λt/t).
    pub fn plus_dissipation(t: f64, p: &PhysicalParams, cutoff: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let i = (cutoff * t).sin() / (t * t) - cutoff * (cutoff * t).cos() / t;
        -i / (4.0 * PI * p.light_speed)
    }

    /// μ₋(t) = −(λ²c³/2π) Si(Λt).
    pub fn minus_dissipation(t: f64, p: &PhysicalParams, cutoff: f64) -> f64 {
        -minus_prefactor(p) / PI * sine_integral(cutoff * t)
    }
}

/// Si(x) = ∫₀ˣ sin(u)/u du by composite Gauss–Legendre quadrature.
pub fn sine_integral(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let sgn = x.signum();
    let x = x.abs();
    let panels = ((x / 0.5).ceil() as usize).max(1);
    let h = x / panels as f64;
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (xi, wi) in NODES.iter().zip(WEIGHTS) {
            let u = mid + 0.5 * h * xi;
            acc += wi * u.sin() / u;
        }
    }
    sgn * acc * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn warm(temp: f64) -> PhysicalParams {
        PhysicalParams {
            temperature: temp,
            ..PhysicalParams::natural_default()
        }
    }

    #[test]
    fn coth_of_one() {
        let p = warm(0.5);
        // ħω/(2k_BT) = 1 at ω = 1, T = 1/2
        assert!((thermal_factor(1.0, &p).unwrap() - 1.313_035_285_499_331_3).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_is_sign() {
        let p = warm(0.0);
        assert_eq!(thermal_factor(3.0, &p).unwrap(), 1.0);
        assert_eq!(thermal_factor(-3.0, &p).unwrap(), -1.0);
    }

    #[test]
    fn origin_is_a_domain_error_when_warm() {
        assert!(matches!(thermal_factor(0.0, &warm(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn high_temperature_laurent() {
        let p = warm(10.0);
        let w = 0.9; // ħω/2k_BT = 0.045
        let z = thermal_factor(w, &p).unwrap();
        let approx = 2.0 * p.temperature / w;
        assert!(((z - approx) / z).abs() < 0.01);
    }

    #[test]
    fn bath_fdrs_are_exact() {
        for temp in [0.0, 0.3, 5.0] {
            let p = warm(temp);
            let g = GridSpec::natural_default();
            assert!(plus_bath_spectra(&g, &p).fdr_residual < 1e-14);
            let minus = minus_bath_spectra(&g, &p);
            let scale = minus.noise.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(minus.fdr_residual <= 1e-14 * scale.max(1.0));
        }
    }

    #[test]
    fn zero_temperature_plus_noise_is_abs() {
        let p = warm(0.0);
        for w in [-3.5, -0.1, 0.2, 7.0] {
            assert_eq!(plus_noise(w, &p), w.abs() / 4.0);
        }
    }

    #[test]
    fn minus_dissipation_parity() {
        let p = PhysicalParams::natural_default();
        let g = GridSpec::natural_default();
        let k = minus_bath_spectra(&g, &p);
        let n = k.dissipation.len();
        for i in 0..n {
            let a = k.dissipation.values[i];
            let b = k.dissipation.values[n - 1 - i];
            // imaginary and odd: μ̃(−ω) = −μ̃(ω) = μ̃(ω)*
            assert!((b + a).norm() < 1e-15 * a.norm().max(1.0));
            assert!((b - a.conj()).norm() < 1e-15 * a.norm().max(1.0));
        }
    }

    #[test]
    fn prefactor_ratio_is_one() {
        let p = PhysicalParams::natural_default();
        assert!((minus_prefactor_ratio(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_time_kernels_parity_and_zero() {
        let p = warm(0.0);
        let g = GridSpec { n_omega: 512, ..GridSpec::natural_default() };
        let tk = plus_bath_spectra(&g, &p).time_kernels(&[0.0, 0.5, 1.3, 4.0]);
        assert!(tk.dissipation[0].abs() < 1e-12);
        assert!(tk.noise_parity < 1e-8);
        assert!(tk.dissipation_parity < 1e-8);
    }

    #[test]
    fn sine_integral_values() {
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-12);
        assert!((sine_integral(100.0) - 1.562_225_466_889_056_3).abs() < 1e-10);
    }

    #[test]
    fn plus_noise_mode_sum_at_origin() {
        let p = PhysicalParams { quantization_length: 2.0 * PI * 1000.0 / 20.0, ..warm(0.0) };
        let n = modes_in_band(&p, 20.0);
        let sum = mode_sum_kernel(0.0, ModeKernel::PlusNoise, &p, n);
        let cont = p.quantization_length * continuum::plus_noise_at_zero(&p, 20.0);
        assert!(((sum - cont) / cont).abs() < 0.01);
    }

    proptest::proptest! {
        #[test]
        fn thermal_factor_is_odd(w in 1e-3f64..50.0, temp in 1e-2f64..20.0) {
            let p = warm(temp);
            let a = thermal_factor(w, &p).unwrap();
            let b = thermal_factor(-w, &p).unwrap();
            proptest::prop_assert!((a + b).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn fdr_pointwise(w in -40.0f64..40.0, temp in 0.0f64..20.0) {
            proptest::prop_assume!(w.abs() > 1e-6);
            let p = warm(temp);
            let res_plus = (plus_noise(w, &p) - (Complex64::i() * z(w, &p) * plus_dissipation(w, &p)).re).abs();
            proptest::prop_assert!(res_plus <= 1e-14 * plus_noise(w, &p).abs().max(1.0));
            let wc = Complex64::new(w, 0.0);
            let res_minus = (minus_noise(w, &p) - (Complex64::i() * z(w, &p) * minus_dissipation(wc, &p)).re).abs();
            proptest::prop_assert!(res_minus <= 1e-14 * minus_noise(w, &p).abs().max(1.0));
        }
    }
}
