//! Sampled spectra and the band-limited transforms between frequency and time.
//!
//! Convention: f̃(ω) = ∫ e^{iωt} f(t) dt, f(t) = (1/2π) ∫ e^{−iωt} f̃(ω) dω.
//! Inverse transforms are midpoint sums over a half-offset grid, i.e. the
//! band-limited integral over [−Λ, Λ].

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Complex samples of a function of frequency on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralTable {
    pub omega: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SpectralTable {
    pub fn from_fn(omega: Vec<f64>, f: impl Fn(f64) -> Complex64 + Sync) -> Self {
        let values = omega.par_iter().map(|&w| f(w)).collect();
        Self { omega, values }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn d_omega(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    /// (1/2π) Σ_k f̃(ω_k) e^{−iω_k t} dω at each requested time.
    pub fn inverse_at(&self, times: &[f64]) -> Vec<Complex64> {
        inverse_transform(&self.omega, &self.values, times)
    }

    /// max_k |f̃(−ω_k) − f̃(ω_k)*|, assuming a grid symmetric about zero.
    pub fn reality_defect(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|k| (self.values[n - 1 - k] - self.values[k].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation on the four nearest samples.
    pub fn interpolate(&self, w: f64) -> Option<Complex64> {
        cubic_interpolate(&self.omega, &self.values, w)
    }
}

pub fn inverse_transform(omega: &[f64], values: &[Complex64], times: &[f64]) -> Vec<Complex64> {
    let n = omega.len();
    if n == 0 {
        return vec![Complex64::new(0.0, 0.0); times.len()];
    }
    let dw = if n > 1 { omega[1] - omega[0] } else { 1.0 };
    let w0 = omega[0];
    times
        .par_iter()
        .map(|&t| {
            // Phase rotation by e^{−i dω t}, re-anchored every block to keep
            // rounding from accumulating.
            let step = Complex64::from_polar(1.0, -dw * t);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 0;
            while k < n {
                let end = (k + 256).min(n);
                let mut phase = Complex64::from_polar(1.0, -(w0 + k as f64 * dw) * t);
                for v in &values[k..end] {
                    acc += v * phase;
                    phase *= step;
                }
                k = end;
            }
            acc * (dw / (2.0 * PI))
        })
        .collect()
}

/// Exact discrete transform pair between a half-offset frequency grid of N
/// points and the N time samples t_j = (j − N/2)·2π/(N dω).
pub struct DftPair {
    pub d_omega: f64,
    pub omega: Vec<f64>,
    pub times: Vec<f64>,
}

impl DftPair {
    pub fn new(omega: &[f64]) -> Self {
        let n = omega.len();
        let d_omega = omega[1] - omega[0];
        let dt = 2.0 * PI / (n as f64 * d_omega);
        let times = (0..n).map(|j| (j as f64 - n as f64 / 2.0) * dt).collect();
        Self {
            d_omega,
            omega: omega.to_vec(),
            times,
        }
    }

    fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// f(t_j) = (dω/2π) Σ_k f̃_k e^{−iω_k t_j}.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        self.apply(spectrum, -1.0, self.d_omega / (2.0 * PI))
    }

    /// f̃_k = dt Σ_j f_j e^{iω_k t_j}.
    pub fn forward(&self, signal: &[Complex64]) -> Vec<Complex64> {
        self.apply_forward(signal)
    }

    fn apply(&self, spectrum: &[Complex64], sign: f64, scale: f64) -> Vec<Complex64> {
        // e^{sign·iω_k t_j} with ω_k = (k − N/2 + ½)dω, t_j = (j − N/2)dt and
        // dω·dt = 2π/N. Factor into twiddles around a plain DFT over k.
        let n = spectrum.len();
        let half = n as f64 / 2.0;
        let theta = 2.0 * PI / n as f64;
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, sign * theta * (k as f64) * (-half)))
            .collect();
        let mut planner = FftPlanner::new();
        if sign < 0.0 {
            planner.plan_fft_forward(n).process(&mut buf);
        } else {
            planner.plan_fft_inverse(n).process(&mut buf);
        }
        buf.iter()
            .enumerate()
            .map(|(j, v)| {
                let jj = j as f64 - half;
                let phase = sign * theta * (-half + 0.5) * jj;
                v * Complex64::from_polar(scale, phase)
            })
            .collect()
    }

    fn apply_forward(&self, signal: &[Complex64]) -> Vec<Complex64> {
        // e^{iω_k t_j}; the roles of k and j swap relative to `apply`.
        let n = signal.len();
        let half = n as f64 / 2.0;
        let theta = 2.0 * PI / n as f64;
        let mut buf: Vec<Complex64> = signal
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let jj = j as f64 - half;
                v * Complex64::from_polar(1.0, theta * (-half + 0.5) * jj)
            })
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(n).process(&mut buf);
        let dt = self.dt();
        buf.iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(dt, theta * (k as f64) * (-half)))
            .collect()
    }
}

/// Four-point Lagrange interpolation on a uniform grid.
pub fn cubic_interpolate<T>(x: &[f64], y: &[T], at: f64) -> Option<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = x.len();
    if n < 4 || at < x[0] || at > x[n - 1] {
        return None;
    }
    let h = x[1] - x[0];
    let i = (((at - x[0]) / h).floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = (at - x[i]) / h;
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    Some(y[i - 1] * w[0] + y[i] * w[1] + y[i + 1] * w[2] + y[i + 2] * w[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::half_offset_grid;

    #[test]
    fn inverse_of_flat_band_is_sinc() {
        let n = 512;
        let lambda = 10.0;
        let omega = half_offset_grid(n, 2.0 * lambda / n as f64);
        let ones = vec![Complex64::new(1.0, 0.0); n];
        let t = [0.0, 0.3, 1.1];
        let got = inverse_transform(&omega, &ones, &t);
        // midpoint rule of ∫cos(ωt) is exact up to O(dω²) corrections
        assert!((got[0].re - lambda / PI).abs() < 1e-12);
        for (g, &tt) in got.iter().zip(&t).skip(1) {
            let exact = (lambda * tt).sin() / (PI * tt);
            assert!((g.re - exact).abs() < 1e-3, "{} vs {exact}", g.re);
            assert!(g.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dft_pair_round_trips() {
        let n = 64;
        let omega = half_offset_grid(n, 0.25);
        let pair = DftPair::new(&omega);
        let spec: Vec<Complex64> = omega
            .iter()
            .map(|w| Complex64::new((-w * w).exp(), 0.1 * w))
            .collect();
        let sig = pair.inverse(&spec);
        let direct = inverse_transform(&omega, &spec, &pair.times);
        for (a, b) in sig.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = pair.forward(&sig);
        for (a, b) in back.iter().zip(&spec) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_interpolation_exact_for_cubics() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v * v - 2.0 * v).collect();
        let at = 2.3;
        let got = cubic_interpolate(&x, &y, at).unwrap();
        assert!((got - (at * at * at - 2.0 * at)).abs() < 1e-12);
        assert!(cubic_interpolate(&x, &y, 10.0).is_none());
    }

    proptest::proptest! {
        #[test]
        fn cubic_interpolation_is_exact_for_cubics(
            c in proptest::array::uniform4(-3.0f64..3.0),
            at in 0.0f64..1.0,
        ) {
            let x: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
            let f = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
            let got = cubic_interpolate(&x, &y, at).unwrap();
            proptest::prop_assert!((got - f(at)).abs() < 1e-12);
        }
    }
}
