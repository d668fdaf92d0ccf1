//! Stationary mirror spectra from the two-sideband pair-creation convolution.
//!
//! ν̃_M(ω) = ∫dω′/2π n(ω,ω′), μ̃_M(ω) = i∫dω′/2π m(ω,ω′) with
//!
//!   n = K[ν̃₊(ω−ω′)ν̃₋(ω′) − μ̃₊(ω−ω′)μ̃₋(ω′)]|G̃(ω′)|²
//!   m = −iK[μ̃₊(ω−ω′)ν̃₋(ω′) + ν̃₊(ω−ω′)μ̃₋(ω′)]|G̃(ω′)|²
//!
//! and K = 2c²λ²/m². The (+) sideband is hard band-limited to |ω−ω′| ≤ Λ,
//! so the output lives on the extended grid |ω| ≤ 2Λ. Rows are evaluated on
//! demand; a full table is O(N²) and only built when asked for.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::env_kernels::{
    minus_bath_spectra, plus_bath_spectra, plus_dissipation, plus_noise, time_kernels, z, Bath, KernelPair,
    TimeKernels,
};
use crate::error::{grid_err, Error, Result};
use crate::idf_response::{driven_correlator_spectrum, susceptibility, Susceptibility};
use crate::params::{GridSpec, PhysicalParams};
use crate::spectral::{inverse_transform, SpectralTable};

/// Largest in-band relative shift tolerated between N_ω and N_ω/2.
pub const CONVERGENCE_TOLERANCE: f64 = 0.01;

/// Pair-creation integrand over (ω, ω′); ω′ runs over the base grid.
#[derive(Debug, Clone)]
pub struct PairDensity {
    pub params: PhysicalParams,
    pub grid: GridSpec,
    /// Base-grid ω′ samples.
    pub omega_prime: Vec<f64>,
    /// ν̃₋(ω′)|G̃(ω′)|².
    noise_minus: Vec<f64>,
    /// Im μ̃₋(ω′)·|G̃(ω′)|² (μ̃₋ is imaginary).
    diss_minus: Vec<f64>,
    /// K = 2c²λ²/m².
    pub prefactor: f64,
}

/// One row n(ω,·), m(ω,·) with the quadrature weight of each ω′ cell.
#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub omega: f64,
    pub n: Vec<f64>,
    pub m: Vec<f64>,
    /// Fraction of the ω′ cell whose (+) sideband lies inside |ω−ω′| ≤ Λ.
    pub weight: Vec<f64>,
}

impl PairDensity {
    pub fn from_parts(
        grid: &GridSpec,
        p: &PhysicalParams,
        plus: &KernelPair,
        minus: &KernelPair,
        susc: &Susceptibility,
    ) -> Result<Self> {
        let w = grid.frequencies();
        if plus.noise.omega != w || minus.noise.omega != w || susc.table.omega != w {
            return Err(grid_err("n_omega", "pair density inputs are on different grids"));
        }
        let g2: Vec<f64> = susc.table.values.iter().map(|g| g.norm_sqr()).collect();
        let noise_minus = minus.noise.values.iter().zip(&g2).map(|(v, g)| v.re * g).collect();
        let diss_minus = minus.dissipation.values.iter().zip(&g2).map(|(v, g)| v.im * g).collect();
        Ok(Self {
            params: *p,
            grid: *grid,
            omega_prime: w,
            noise_minus,
            diss_minus,
            prefactor: 2.0 * p.light_speed.powi(2) * p.coupling.powi(2) / p.idf_mass.powi(2),
        })
    }

    /// Build bath kernels and susceptibility for `grid`, then the density.
    pub fn build(grid: &GridSpec, p: &PhysicalParams) -> Result<Self> {
        let plus = plus_bath_spectra(grid, p);
        let minus = minus_bath_spectra(grid, p);
        let susc = susceptibility(grid, p, &minus)?;
        Self::from_parts(grid, p, &plus, &minus, &susc)
    }

    fn d_omega(&self) -> f64 {
        self.grid.d_omega()
    }

    fn cell_weight(&self, w1: f64) -> f64 {
        let h = self.d_omega();
        let cut = self.grid.omega_cutoff;
        let lo = (w1 - 0.5 * h).max(-cut);
        let hi = (w1 + 0.5 * h).min(cut);
        ((hi - lo) / h).clamp(0.0, 1.0)
    }

    /// n(ω,ω′) and m(ω,ω′) for all ω′ at one output frequency.
    pub fn row(&self, omega: f64) -> PairRow {
        let p = &self.params;
        let len = self.omega_prime.len();
        let mut n = vec![0.0; len];
        let mut m = vec![0.0; len];
        let mut weight = vec![0.0; len];
        for k in 0..len {
            let w1 = omega - self.omega_prime[k];
            let wt = self.cell_weight(w1);
            if wt == 0.0 {
                continue;
            }
            let nu_p = plus_noise(w1, p);
            let mu_p = plus_dissipation(w1, p).im;
            let nu_m = self.noise_minus[k];
            let mu_m = self.diss_minus[k];
            // ν̃₊ν̃₋ − μ̃₊μ̃₋ with μ̃± = i·Im: −(i a)(i b) = +ab
            n[k] = self.prefactor * (nu_p * nu_m + mu_p * mu_m);
            // −i[(i a)ν̃₋ + ν̃₊(i b)] = a ν̃₋ + ν̃₊ b
            m[k] = self.prefactor * (mu_p * nu_m + nu_p * mu_m);
            weight[k] = wt;
        }
        PairRow { omega, n, m, weight }
    }

    /// (ν̃_M(ω), μ̃_M(ω)) by weighted midpoint quadrature over ω′.
    pub fn spectra_at(&self, omega: f64) -> (f64, Complex64) {
        let r = self.row(omega);
        let scale = self.d_omega() / (2.0 * std::f64::consts::PI);
        let mut nu = 0.0;
        let mut mu = 0.0;
        for k in 0..r.n.len() {
            nu += r.weight[k] * r.n[k];
            mu += r.weight[k] * r.m[k];
        }
        (nu * scale, Complex64::new(0.0, mu * scale))
    }

    /// Materialize rows for the requested output frequencies.
    pub fn table(&self, omegas: &[f64]) -> Vec<PairRow> {
        omegas.par_iter().map(|&w| self.row(w)).collect()
    }

    /// max_ω′ |n + z(ω)m| / max_ω′ |n| for one row.
    pub fn identity_residual(&self, omega: f64) -> f64 {
        let r = self.row(omega);
        let zw = z(omega, &self.params);
        let peak = r.n.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        r.n.iter()
            .zip(&r.m)
            .map(|(n, m)| (n + zw * m).abs())
            .fold(0.0, f64::max)
            / peak
    }

    /// Quadrature weight of |n| outside and inside 0 < ω′ < ω.
    pub fn support_split(&self, omega: f64) -> (f64, f64) {
        let r = self.row(omega);
        let (lo, hi) = if omega > 0.0 { (0.0, omega) } else { (omega, 0.0) };
        let mut inside = 0.0;
        let mut outside = 0.0;
        for k in 0..r.n.len() {
            let v = (r.weight[k] * r.n[k]).abs();
            let w = self.omega_prime[k];
            if w > lo && w < hi {
                inside += v;
            } else {
                outside += v;
            }
        }
        (outside, inside)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    /// max in-band |ν̃_N − ν̃_{N/2}| / max(|ν̃_N|, RESOLUTION_FLOOR·peak).
    pub shift: f64,
    /// max in-band |ν̃_N − ν̃_{N/2}| / peak.
    pub peak_relative_shift: f64,
    pub tolerance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Normalization {
    /// K = 2c²λ²/m² used in the spectra.
    pub prefactor: f64,
    /// λ̄² = 2c²λ²/L. Not applied to the coefficients; carried for audit.
    pub literal_scaled_coupling_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MirrorKernels {
    pub kernels: KernelPair,
    /// |ν̃_M − i z μ̃_M| / max|ν̃_M| per extended-grid sample.
    pub fdr_profile: Vec<f64>,
    /// Maximum of `fdr_profile` over |ω| ≤ Λ.
    pub fdr_residual_in_band: f64,
    pub convergence: Convergence,
    pub normalization: Normalization,
    pub grid: GridSpec,
}

impl MirrorKernels {
    pub fn noise(&self) -> &SpectralTable {
        &self.kernels.noise
    }

    pub fn dissipation(&self) -> &SpectralTable {
        &self.kernels.dissipation
    }
}

fn tabulate(pd: &PairDensity, omegas: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let vals: Vec<(f64, Complex64)> = omegas.par_iter().map(|&w| pd.spectra_at(w)).collect();
    let nu = vals.iter().map(|(n, _)| Complex64::new(*n, 0.0)).collect();
    let mu = vals.iter().map(|(_, m)| *m).collect();
    (nu, mu)
}

/// Values below this fraction of the in-band peak are compared against the
/// floor instead of themselves (the pair support 0 < ω′ < ω is unresolved
/// for ω of a few grid cells).
pub const RESOLUTION_FLOOR: f64 = 1e-3;

/// In-band shift of ν̃_M between the density's grid and half its resolution,
/// as (floored per-value, peak-relative).
pub fn convergence_shift(pd: &PairDensity, probes: &[f64], fine: &[f64]) -> Result<(f64, f64)> {
    let coarse_grid = pd.grid.with_n_omega(pd.grid.n_omega / 2);
    let coarse = PairDensity::build(&coarse_grid, &pd.params)?;
    let coarse_vals: Vec<f64> = probes.par_iter().map(|&w| coarse.spectra_at(w).0).collect();
    let peak = fine.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok((0.0, 0.0));
    }
    let floor = RESOLUTION_FLOOR * peak;
    let (mut per_value, mut absolute) = (0.0f64, 0.0f64);
    for (a, b) in fine.iter().zip(&coarse_vals) {
        let d = (a - b).abs();
        per_value = per_value.max(d / a.abs().max(floor));
        absolute = absolute.max(d);
    }
    Ok((per_value, absolute / peak))
}

/// Spectra on the extended grid with FDR audit and the N/2 convergence check.
pub fn mirror_spectra(pd: &PairDensity) -> Result<MirrorKernels> {
    let mk = mirror_spectra_unchecked(pd)?;
    if !mk.convergence.converged {
        return Err(Error::NotConverged {
            shift: mk.convergence.shift,
            tolerance: mk.convergence.tolerance,
        });
    }
    Ok(mk)
}

/// As [`mirror_spectra`] but returns unconverged spectra instead of failing.
pub fn mirror_spectra_unchecked(pd: &PairDensity) -> Result<MirrorKernels> {
    let omega = pd.grid.extended_frequencies();
    let (nu, mu) = tabulate(pd, &omega);
    let p = &pd.params;
    let cut = pd.grid.omega_cutoff;
    let peak = nu.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fdr_profile: Vec<f64> = omega
        .iter()
        .zip(nu.iter().zip(&mu))
        .map(|(&w, (n, m))| {
            if peak == 0.0 {
                0.0
            } else {
                (n - Complex64::new(0.0, z(w, p)) * m).norm() / peak
            }
        })
        .collect();
    let in_band: Vec<usize> = (0..omega.len()).filter(|&k| omega[k].abs() <= cut).collect();
    let fdr_residual_in_band = in_band.iter().map(|&k| fdr_profile[k]).fold(0.0, f64::max);

    let probes: Vec<f64> = in_band.iter().map(|&k| omega[k]).collect();
    let fine: Vec<f64> = in_band.iter().map(|&k| nu[k].re).collect();
    let (shift, peak_relative_shift) = convergence_shift(pd, &probes, &fine)?;

    let noise = SpectralTable { omega: omega.clone(), values: nu };
    let dissipation = SpectralTable { omega, values: mu };
    let kernels = KernelPair::from_tables(Bath::Mirror, noise, dissipation, p);
    Ok(MirrorKernels {
        kernels,
        fdr_profile,
        fdr_residual_in_band,
        convergence: Convergence {
            shift,
            peak_relative_shift,
            tolerance: CONVERGENCE_TOLERANCE,
            converged: shift <= CONVERGENCE_TOLERANCE,
        },
        normalization: Normalization {
            prefactor: pd.prefactor,
            literal_scaled_coupling_sq: crate::params::derive_scales(p).scaled_coupling_sq,
        },
        grid: pd.grid,
    })
}

/// Band-limited ν_M^s(t), μ_M^s(t) over the extended band.
pub fn mirror_time_kernels(mk: &MirrorKernels, times: &[f64]) -> TimeKernels {
    time_kernels(mk.noise(), mk.dissipation(), times)
}

/// Independent time-domain route: ν_M(t) = (2c²λ²/ħ)[ν₊(t)Re C_q(t) − μ₊(t)Im C_q(t)]
/// with the (+) kernels summed over the integer-offset grid of sideband
/// frequencies and C_q the driven idf correlator.
pub fn time_product_oracle(pd: &PairDensity, times: &[f64]) -> Result<Vec<f64>> {
    let p = &pd.params;
    let grid = &pd.grid;
    let minus = minus_bath_spectra(grid, p);
    let susc = susceptibility(grid, p, &minus)?;
    let cq = driven_correlator_spectrum(&susc, &minus).inverse_at(times);

    let h = grid.d_omega();
    let half = grid.n_omega / 2;
    let sideband: Vec<f64> = (0..=2 * half).map(|j| (j as f64 - half as f64) * h).collect();
    let edge = |j: usize| if j == 0 || j == 2 * half { 0.5 } else { 1.0 };
    let nu_plus: Vec<Complex64> = sideband
        .iter()
        .enumerate()
        .map(|(j, &w)| Complex64::new(edge(j) * plus_noise(w, p), 0.0))
        .collect();
    let mu_plus: Vec<Complex64> = sideband
        .iter()
        .enumerate()
        .map(|(j, &w)| edge(j) * plus_dissipation(w, p))
        .collect();
    let nu_t = inverse_transform(&sideband, &nu_plus, times);
    let mu_t = inverse_transform(&sideband, &mu_plus, times);
    let scale = 2.0 * p.light_speed.powi(2) * p.coupling.powi(2) / p.hbar;
    Ok((0..times.len())
        .map(|j| scale * (nu_t[j].re * cq[j].re - mu_t[j].re * cq[j].im))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridSpec {
        GridSpec {
            n_omega: 512,
            omega_cutoff: 10.0,
            n_t: 4000,
            t_max: 50.0,
            ..GridSpec::natural_default()
        }
    }

    #[test]
    fn identity_n_equals_minus_z_m() {
        for temp in [0.0, 0.2, 3.0] {
            let p = PhysicalParams { temperature: temp, ..PhysicalParams::natural_default() };
            let pd = PairDensity::build(&small_grid(), &p).unwrap();
            for w in [0.5 + 0.0195, -1.3 + 0.0195, 7.7] {
                let r = pd.identity_residual(w);
                assert!(r < 1e-10, "T={temp}, ω={w}: {r}");
            }
        }
    }

    #[test]
    fn zero_temperature_support() {
        let p = PhysicalParams::natural_default();
        let g = small_grid();
        let pd = PairDensity::build(&g, &p).unwrap();
        let (out, inside) = pd.support_split(p.trap_frequency);
        assert!(inside > 0.0);
        assert!(out <= 1e-6 * inside, "{out} vs {inside}");
    }

    #[test]
    fn sideband_relabeling_symmetry() {
        // Swapping the roles of ω′ and ω − ω′ changes which spectra enter; the
        // combined weight is reproduced when both sidebands are exchanged.
        let p = PhysicalParams::natural_default();
        let pd = PairDensity::build(&small_grid(), &p).unwrap();
        let w = 2.0 * pd.d_omega() * 20.0;
        let r = pd.row(w);
        for (k, &wp) in pd.omega_prime.iter().enumerate() {
            let w1 = w - wp;
            if r.weight[k] < 1.0 || w1.abs() > 9.0 {
                continue;
            }
            let direct = plus_noise(w1, &p) * pd.noise_minus[k] + plus_dissipation(w1, &p).im * pd.diss_minus[k];
            assert!((pd.prefactor * direct - r.n[k]).abs() <= 1e-14 * r.n[k].abs().max(1e-300));
        }
    }

    #[test]
    fn spectra_parity_and_fdr() {
        let p = PhysicalParams { temperature: 0.3, ..PhysicalParams::natural_default() };
        let pd = PairDensity::build(&small_grid(), &p).unwrap();
        let mk = mirror_spectra_unchecked(&pd).unwrap();
        let mu = mk.dissipation();
        let n = mu.len();
        let peak = mu.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..n {
            assert!(mu.values[k].re.abs() <= 1e-14 * peak);
            assert!((mu.values[k] + mu.values[n - 1 - k]).norm() <= 1e-12 * peak);
        }
        assert!(mk.fdr_residual_in_band < 1e-3);
    }

    #[test]
    fn time_kernels_match_product_oracle() {
        let p = PhysicalParams::natural_default();
        let g = small_grid();
        let pd = PairDensity::build(&g, &p).unwrap();
        let mk = mirror_spectra_unchecked(&pd).unwrap();
        let times: Vec<f64> = (0..200).map(|j| j as f64 * 0.05).collect();
        let tk = mirror_time_kernels(&mk, &times);
        let oracle = time_product_oracle(&pd, &times).unwrap();
        let num: f64 = tk.noise.iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = oracle.iter().map(|b| b * b).sum();
        assert!((num / den).sqrt() < 0.01);
        assert!(tk.noise[0] > 0.0);
        assert!(tk.noise_parity < 1e-8 && tk.dissipation_parity < 1e-8);
    }

    #[test]
    fn decoupled_spectra_vanish() {
        let p = PhysicalParams { coupling: 0.0, ..PhysicalParams::natural_default() };
        let pd = PairDensity::build(&small_grid(), &p).unwrap();
        let mk = mirror_spectra(&pd).unwrap();
        assert!(mk.noise().values.iter().all(|v| v.norm() == 0.0));
        assert!(mk.dissipation().values.iter().all(|v| v.norm() == 0.0));
    }
}
