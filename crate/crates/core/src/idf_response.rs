//! The internal oscillator dressed by the (−) bath.
//!
//! With the memory kernel of the 1D continuum, the retarded susceptibility is
//! G̃(ω) = 1/(ω₀² − ω² − iγ/ω), γ = c³λ²/(2m). Its Laplace form
//! s/(s³ + ω₀²s − γ) has one real positive root y, so G(t) contains a growing
//! term A·e^{yt}. The time-domain response is therefore obtained on a
//! Bromwich line Im ω = η_B > y, which keeps it causal.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::env_kernels::{minus_dissipation, minus_prefactor, z, KernelPair};
use crate::error::{grid_err, Error, Result};
use crate::params::{derive_scales, GridSpec, PhysicalParams};
use crate::spectral::{inverse_transform, SpectralTable};

/// G̃ at a complex frequency: 1/(ω₀² − w² + μ̃₋(w)/m).
pub fn response_function(w: Complex64, p: &PhysicalParams) -> Complex64 {
    let w0 = p.idf_frequency;
    let den = Complex64::new(w0 * w0, 0.0) - w * w + memory_term(w, p);
    den.inv()
}

/// Fourier symbol of the retarded memory term, (2/m)·½μ̃₋(w).
fn memory_term(w: Complex64, p: &PhysicalParams) -> Complex64 {
    if p.coupling == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    minus_dissipation(w, p) / p.idf_mass
}

#[derive(Debug, Clone, Serialize)]
pub struct Susceptibility {
    pub table: SpectralTable,
    pub params: PhysicalParams,
    /// Retardation shift η used for the two-point extrapolation.
    pub eta: f64,
    pub reality_defect: f64,
    /// max over the band of max(0, −ω Im G̃); zero for a passive response.
    pub passivity_violation: f64,
}

/// Real root y of y(ω₀² + y²) = γ and the residue A = y/(3y² + ω₀²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunawayPole {
    pub rate: f64,
    pub residue: f64,
}

pub fn runaway_pole(p: &PhysicalParams) -> RunawayPole {
    let gamma = derive_scales(p).memory_strength;
    let w0sq = p.idf_frequency * p.idf_frequency;
    if gamma == 0.0 {
        return RunawayPole { rate: 0.0, residue: 0.0 };
    }
    // f(y) = y³ + ω₀²y − γ is monotone; bracket [0, max(γ/ω₀², γ^{1/3})].
    let mut lo = 0.0;
    let mut hi = (gamma / w0sq).min(gamma.cbrt());
    while hi * (w0sq + hi * hi) < gamma {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (w0sq + mid * mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    RunawayPole {
        rate: y,
        residue: y / (3.0 * y * y + w0sq),
    }
}

pub fn susceptibility(grid: &GridSpec, p: &PhysicalParams, minus: &KernelPair) -> Result<Susceptibility> {
    let omega = grid.frequencies();
    if minus.dissipation.omega != omega {
        return Err(grid_err("n_omega", "minus-bath kernels tabulated on a different grid"));
    }
    let eta = grid.retardation();
    let w0sq = p.idf_frequency * p.idf_frequency;
    let mut values = Vec::with_capacity(omega.len());
    for &w in &omega {
        let den = Complex64::new(w0sq - w * w, 0.0) + memory_term(Complex64::new(w, 0.0), p);
        if den.norm() < 1e-12 * w0sq {
            return Err(Error::ResonanceOnGrid {
                omega: w,
                denominator: den.norm(),
            });
        }
        let g1 = response_function(Complex64::new(w, eta), p);
        let g2 = response_function(Complex64::new(w, 2.0 * eta), p);
        values.push(2.0 * g1 - g2);
    }
    let table = SpectralTable { omega, values };
    let reality_defect = table.reality_defect();
    let passivity_violation = table
        .omega
        .iter()
        .zip(&table.values)
        .map(|(w, g)| (-(w * g.im)).max(0.0))
        .fold(0.0, f64::max);
    Ok(Susceptibility {
        table,
        params: *p,
        eta,
        reality_defect,
        passivity_violation,
    })
}

impl Susceptibility {
    /// ∫ ω Im G̃ dω over the band (midpoint rule).
    pub fn spectral_weight(&self) -> f64 {
        let dw = self.table.d_omega();
        self.table
            .omega
            .iter()
            .zip(&self.table.values)
            .map(|(w, g)| w * g.im * dw)
            .sum()
    }

    /// Expected value of [`spectral_weight`](Self::spectral_weight) for an
    /// unbounded band: π(1 − 2Ay). The runaway pole carries the deficit.
    pub fn expected_spectral_weight(&self) -> f64 {
        let r = runaway_pole(&self.params);
        PI * (1.0 - 2.0 * r.residue * r.rate)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpulseResponse {
    pub times: Vec<f64>,
    /// Causal G_q(t) from the Bromwich-line inversion.
    pub values: Vec<f64>,
    /// max_{t<0}|G(t)| / max_{t>0}|G(t)| on the Bromwich route.
    pub causality_defect: f64,
    /// Same ratio for the plain real-axis inverse of the tabulated G̃.
    pub real_axis_acausality: f64,
    pub bromwich_shift: f64,
    pub runaway: RunawayPole,
}

/// Inverse transform of G̃ at the requested times (t ≥ 0). Negative-time
/// mirrors are evaluated for the causality audit.
pub fn impulse_response(susc: &Susceptibility, times: &[f64]) -> ImpulseResponse {
    let p = &susc.params;
    let w0 = p.idf_frequency;
    let runaway = runaway_pole(p);
    let shift = runaway.rate + 0.1 * w0;
    let omega = &susc.table.omega;
    let remainder: Vec<Complex64> = omega
        .iter()
        .map(|&w| {
            let s = Complex64::new(w, shift);
            response_function(s, p) - (Complex64::new(w0 * w0, 0.0) - s * s).inv()
        })
        .collect();

    let mut all: Vec<f64> = times.iter().filter(|&&t| t > 0.0).map(|t| -t).collect();
    let n_neg = all.len();
    all.extend_from_slice(times);
    let rem_t = inverse_transform(omega, &remainder, &all);
    let bromwich = |t: f64, r: Complex64| -> f64 {
        let free = if t >= 0.0 { (w0 * t).sin() / w0 } else { 0.0 };
        free + (shift * t).exp() * r.re
    };
    let values: Vec<f64> = times
        .iter()
        .zip(&rem_t[n_neg..])
        .map(|(&t, &r)| bromwich(t, r))
        .collect();
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let defect = all[..n_neg]
        .iter()
        .zip(&rem_t[..n_neg])
        .map(|(&t, &r)| bromwich(t, r).abs())
        .fold(0.0, f64::max);

    let real_axis = susc.table.inverse_at(&all);
    let ra_peak = real_axis[n_neg..].iter().map(|c| c.re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let ra_neg = real_axis[..n_neg].iter().map(|c| c.re.abs()).fold(0.0, f64::max);

    ImpulseResponse {
        times: times.to_vec(),
        values,
        causality_defect: defect / peak,
        real_axis_acausality: ra_neg / ra_peak,
        bromwich_shift: shift,
        runaway,
    }
}

/// Direct integration of m G'' + mω₀²G + 2∫₀ᵗ μ(t−s)G(s)ds = 0 with
/// G(0) = 0, G'(0) = 1 (unit-mass impulse). Implicit trapezoidal rule for
/// the ODE, trapezoidal convolution for the memory; second order.
pub fn volterra_impulse(p: &PhysicalParams, kernel: impl Fn(f64) -> f64, dt: f64, n_steps: usize) -> Vec<f64> {
    let w0sq = p.idf_frequency * p.idf_frequency;
    let c = 2.0 / p.idf_mass;
    let mu: Vec<f64> = (0..=n_steps).map(|j| kernel(j as f64 * dt)).collect();
    let mut g = vec![0.0; n_steps + 1];
    let mut v = 1.0;
    // a_n = −ω₀²G_n − c·I_n, I_n = dt[½μ_n G_0 + Σ_{j=1}^{n−1} μ_{n−j}G_j + ½μ_0 G_n]
    let history = |g: &[f64], n: usize| -> f64 {
        let mut s = 0.5 * mu[n] * g[0];
        for j in 1..n {
            s += mu[n - j] * g[j];
        }
        s * dt
    };
    let mut a = -w0sq * g[0];
    for n in 0..n_steps {
        // a_{n+1} = −(ω₀² + c·dt·μ₀/2)·G_{n+1} − c·H_{n+1}
        let h_next = history(&g, n + 1);
        let k = w0sq + c * dt * 0.5 * mu[0];
        // G_{n+1} = G_n + dt/2 (v_n + v_{n+1}), v_{n+1} = v_n + dt/2 (a_n + a_{n+1})
        let rhs = g[n] + dt * v + 0.25 * dt * dt * (a - c * h_next);
        let g_next = rhs / (1.0 + 0.25 * dt * dt * k);
        let a_next = -k * g_next - c * h_next;
        v += 0.5 * dt * (a + a_next);
        g[n + 1] = g_next;
        a = a_next;
    }
    g
}

/// Continuum memory kernel of the (−) bath for τ ≥ 0: μ₋ = −λ²c³/4.
pub fn continuum_memory_kernel(p: &PhysicalParams) -> impl Fn(f64) -> f64 {
    let value = -0.5 * minus_prefactor(p);
    move |_tau| value
}

/// Band-limited memory kernel μ₋(τ) = −(λ²c³/2π) Si(Λτ).
pub fn band_limited_memory_kernel(p: &PhysicalParams, cutoff: f64) -> impl Fn(f64) -> f64 {
    let a = minus_prefactor(p) / PI;
    move |tau| -a * crate::env_kernels::sine_integral(cutoff * tau)
}

/// Closed-form solution of the equivalent third-order system with the
/// continuum kernel, by partial fractions over the three Laplace poles.
pub fn closed_form_impulse(p: &PhysicalParams, t: f64) -> f64 {
    let w0 = p.idf_frequency;
    let r = runaway_pole(p);
    if r.rate == 0.0 {
        return (w0 * t).sin() / w0;
    }
    let y = r.rate;
    // s³ + ω₀²s − γ = (s − y)(s² + ys + (y² + ω₀²))
    let b = y;
    let c = y * y + w0 * w0;
    let sigma = -0.5 * b;
    let wd = (c - 0.25 * b * b).sqrt();
    // s/((s−y)(s² + bs + c)) = A/(s−y) + (Bs + C)/(s² + bs + c),
    // B = −A, C = 1 − 2Ay.
    let a = r.residue;
    let bb = -a;
    let cc = 1.0 - 2.0 * a * y;
    let osc = (sigma * t).exp() * (bb * (wd * t).cos() + (cc + bb * sigma) / wd * (wd * t).sin());
    a * (y * t).exp() + osc
}

/// ⟨q_h(t) q_h(s)⟩ of the undamped thermal idf at lag Δt.
pub fn free_idf_correlator(dt: f64, p: &PhysicalParams) -> Complex64 {
    let w0 = p.idf_frequency;
    let amp = p.hbar / (2.0 * p.idf_mass * w0);
    Complex64::new(amp * z(w0, p) * (w0 * dt).cos(), -amp * (w0 * dt).sin())
}

/// C̃_q(ω) = ħ G̃(ω)[ν̃₋(ω) + iμ̃₋(ω)]G̃(−ω)/m², with G̃(−ω) = G̃(ω)*.
pub fn driven_correlator_spectrum(susc: &Susceptibility, minus: &KernelPair) -> SpectralTable {
    let p = &susc.params;
    let scale = p.hbar / (p.idf_mass * p.idf_mass);
    let values = susc
        .table
        .values
        .iter()
        .zip(minus.noise.values.iter().zip(&minus.dissipation.values))
        .map(|(g, (nu, mu))| g * (nu + Complex64::i() * mu) * g.conj() * scale)
        .collect();
    SpectralTable {
        omega: susc.table.omega.clone(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_kernels::minus_bath_spectra;

    fn setup(p: &PhysicalParams) -> (GridSpec, Susceptibility, KernelPair) {
        let g = GridSpec::natural_default();
        let minus = minus_bath_spectra(&g, p);
        let s = susceptibility(&g, p, &minus).unwrap();
        (g, s, minus)
    }

    #[test]
    fn runaway_root_solves_cubic() {
        let p = PhysicalParams::natural_default();
        let r = runaway_pole(&p);
        let y = r.rate;
        assert!((y * (1.0 + y * y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_axis_matches_closed_form() {
        let p = PhysicalParams::natural_default();
        let (_, s, _) = setup(&p);
        let gamma = derive_scales(&p).memory_strength;
        for (w, g) in s.table.omega.iter().zip(&s.table.values).step_by(97) {
            let exact = Complex64::new(1.0 - w * w, -gamma / w).inv();
            assert!((g - exact).norm() < 1e-8 * exact.norm(), "{w}");
        }
        assert!(s.reality_defect < 1e-12);
        assert_eq!(s.passivity_violation, 0.0);
    }

    #[test]
    fn decoupled_susceptibility_is_bare() {
        let p = PhysicalParams { coupling: 0.0, ..PhysicalParams::natural_default() };
        let g = GridSpec { n_omega: 2050, ..GridSpec::natural_default() };
        let minus = minus_bath_spectra(&g, &p);
        let s = susceptibility(&g, &p, &minus).unwrap();
        for (w, v) in s.table.omega.iter().zip(&s.table.values) {
            let bare = 1.0 / (1.0 - w * w);
            assert!((v - bare).norm() < 1e-5 * bare.abs().max(1.0), "{w}: {v} vs {bare}");
        }
    }

    #[test]
    fn weak_coupling_static_response() {
        let p = PhysicalParams { coupling: 1e-3, ..PhysicalParams::natural_default() };
        let (_, s, minus) = setup(&p);
        let k = s.table.len() / 2;
        let w = s.table.omega[k];
        let bound = (2.0 * minus.dissipation.values[k] / p.idf_mass).norm();
        let rel = (s.table.values[k] - 1.0).norm();
        // the bare ω² detuning adds to the coupling bound
        assert!(rel <= bound + w * w, "{rel} vs {bound} at {w}");
    }

    #[test]
    fn spectral_weight_sum_rule() {
        let p = PhysicalParams::natural_default();
        let (_, s, _) = setup(&p);
        let got = s.spectral_weight();
        let want = s.expected_spectral_weight();
        assert!(((got - want) / want).abs() < 0.01, "{got} vs {want}");
    }

    #[test]
    fn bromwich_route_matches_ode() {
        let p = PhysicalParams::natural_default();
        let (_, s, _) = setup(&p);
        let dt = 0.005;
        let n = 2000;
        let times: Vec<f64> = (0..=n).step_by(20).map(|j| j as f64 * dt).collect();
        let resp = impulse_response(&s, &times);
        let ode = volterra_impulse(&p, continuum_memory_kernel(&p), dt, n);
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &v) in resp.values.iter().enumerate() {
            let o = ode[k * 20];
            num += (v - o).powi(2);
            den += o * o;
        }
        assert!((num / den).sqrt() < 0.01, "{}", (num / den).sqrt());
        assert!(resp.causality_defect < 1e-6, "{}", resp.causality_defect);
    }

    #[test]
    fn ode_matches_partial_fractions() {
        let p = PhysicalParams::natural_default();
        let dt = 0.002;
        let ode = volterra_impulse(&p, continuum_memory_kernel(&p), dt, 5000);
        for j in (0..=5000).step_by(500) {
            let t = j as f64 * dt;
            let exact = closed_form_impulse(&p, t);
            assert!((ode[j] - exact).abs() < 1e-4 * exact.abs().max(1.0), "t={t}: {} vs {exact}", ode[j]);
        }
    }

    #[test]
    fn initial_slope_is_unity() {
        let p = PhysicalParams::natural_default();
        let (_, s, _) = setup(&p);
        let h = 0.01;
        let r = impulse_response(&s, &[0.0, h]);
        assert!(r.values[0].abs() < 0.05 * h);
        assert!(((r.values[1] - r.values[0]) / h - 1.0).abs() < 0.05);
    }

    #[test]
    fn oscillatory_part_decays() {
        // G minus its runaway term has a non-increasing envelope. The ODE
        // route cannot resolve this once e^{yt} dominates, so the verified
        // partial-fraction form is used.
        let p = PhysicalParams::natural_default();
        let r = runaway_pole(&p);
        let dt = 0.01;
        let period = (2.0 * PI / p.idf_frequency / dt) as usize;
        let osc: Vec<f64> = (0..6000)
            .map(|j| {
                let t = j as f64 * dt;
                closed_form_impulse(&p, t) - r.residue * (r.rate * t).exp()
            })
            .collect();
        let env: Vec<f64> = osc
            .chunks(period)
            .map(|c| c.iter().map(|v| v.abs()).fold(0.0, f64::max))
            .collect();
        for w in env[1..env.len() - 1].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-3), "{env:?}");
        }
    }

    #[test]
    fn decoupled_impulse_is_sine() {
        let p = PhysicalParams { coupling: 0.0, ..PhysicalParams::natural_default() };
        let (_, s, _) = setup(&p);
        let times: Vec<f64> = (0..=1000).map(|j| j as f64 * 0.01).collect();
        let r = impulse_response(&s, &times);
        let rms = (times
            .iter()
            .zip(&r.values)
            .map(|(t, v)| (v - t.sin()).powi(2))
            .sum::<f64>()
            / times.len() as f64)
            .sqrt();
        assert!(rms < 1e-4);
    }

    #[test]
    fn free_correlator_values() {
        let p = PhysicalParams { idf_mass: 2.0, idf_frequency: 1.5, ..PhysicalParams::natural_default() };
        let amp = 1.0 / (2.0 * 2.0 * 1.5);
        assert!((free_idf_correlator(0.0, &p) - Complex64::new(amp, 0.0)).norm() < 1e-15);
        let q = free_idf_correlator(PI / 3.0, &p);
        assert!((q.im + amp).abs() < 1e-15);
        let a = free_idf_correlator(0.7, &p);
        let b = free_idf_correlator(-0.7, &p);
        assert!((a.re - b.re).abs() < 1e-15 && (a.im + b.im).abs() < 1e-15);
    }

    #[test]
    fn driven_spectrum_structure() {
        let p = PhysicalParams::natural_default();
        let (_, s, minus) = setup(&p);
        let c = driven_correlator_spectrum(&s, &minus);
        let n = c.len();
        let peak = c.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..n / 2 {
            // T = 0: z + 1 vanishes on the negative side
            assert!(c.values[k].norm() < 1e-14 * peak);
            // symmetric part even
            let sym = |j: usize| 0.5 * (c.values[j] + c.values[n - 1 - j]);
            assert!((sym(k) - sym(n - 1 - k)).norm() < 1e-15);
        }
    }

    #[test]
    fn weak_coupling_spectrum_peaks_at_resonance() {
        let narrow = PhysicalParams { coupling: 0.2, ..PhysicalParams::natural_default() };
        let wide = PhysicalParams { coupling: 0.4, ..PhysicalParams::natural_default() };
        let width = |p: &PhysicalParams| {
            let (_, s, minus) = setup(p);
            let c = driven_correlator_spectrum(&s, &minus);
            let (kmax, vmax) = c
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| (k, v.re))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            assert!((c.omega[kmax] - 1.0).abs() < 0.03);
            c.values.iter().filter(|v| v.re > 0.5 * vmax).count()
        };
        assert!(width(&wide) > width(&narrow));
    }

    proptest::proptest! {
        #[test]
        fn response_is_real_in_time(a in -30.0f64..30.0, b in 0.01f64..5.0, lambda in 0.0f64..2.0) {
            let p = PhysicalParams { coupling: lambda, ..PhysicalParams::natural_default() };
            let g = response_function(Complex64::new(a, b), &p);
            let h = response_function(Complex64::new(-a, b), &p);
            proptest::prop_assert!((g - h.conj()).norm() <= 1e-12 * g.norm().max(1.0));
        }
    }
}
