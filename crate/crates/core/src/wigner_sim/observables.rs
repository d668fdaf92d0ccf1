use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::state::WignerState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub time: f64,
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    /// |∫ P(p) e^{ip·k} dp| of the momentum marginal at wavenumber k.
    pub fringe_amplitude: f64,
    /// ∫∫ max(0, −W).
    pub negativity: f64,
}

impl Observables {
    pub fn energy(&self, mass: f64, omega_sq: f64) -> f64 {
        (self.var_p + self.mean_p * self.mean_p) / (2.0 * mass)
            + 0.5 * mass * omega_sq * (self.var_x + self.mean_x * self.mean_x)
    }
}

/// Moments, negativity and momentum-marginal fringe amplitude at wavenumber `k_p`.
pub fn observables(s: &WignerState, k_p: f64) -> Observables {
    let g = s.grid;
    let area = g.cell_area();
    let (mut n, mut x1, mut p1, mut x2, mut p2, mut xp, mut neg) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..g.n_x {
        let x = g.x(i);
        for j in 0..g.n_p {
            let w = s.at(i, j);
            let p = g.p(j);
            n += w;
            x1 += w * x;
            p1 += w * p;
            x2 += w * x * x;
            p2 += w * p * p;
            xp += w * x * p;
            if w < 0.0 {
                neg -= w;
            }
        }
    }
    let (mx, mp) = (x1 / n, p1 / n);
    let (_, pm) = marginals(s);
    let fringe: Complex64 = pm
        .iter()
        .enumerate()
        .map(|(j, &m)| Complex64::from_polar(m, k_p * g.p(j)))
        .sum::<Complex64>()
        * g.dp();
    Observables {
        time: s.time,
        norm: n * area,
        mean_x: mx,
        mean_p: mp,
        var_x: x2 / n - mx * mx,
        var_p: p2 / n - mp * mp,
        cov_xp: xp / n - mx * mp,
        fringe_amplitude: fringe.norm(),
        negativity: neg * area,
    }
}

/// Position and momentum marginals ∫W dp, ∫W dx.
pub fn marginals(s: &WignerState) -> (Vec<f64>, Vec<f64>) {
    let g = s.grid;
    let px: Vec<f64> = (0..g.n_x).map(|i| (0..g.n_p).map(|j| s.at(i, j)).sum::<f64>() * g.dp()).collect();
    let pp: Vec<f64> = (0..g.n_p).map(|j| (0..g.n_x).map(|i| s.at(i, j)).sum::<f64>() * g.dx()).collect();
    (px, pp)
}

/// χ(k) = ∫∫ W e^{i(kₓx + kₚp)} dx dp.
pub fn characteristic(s: &WignerState, k: [f64; 2]) -> Complex64 {
    let g = s.grid;
    let ep: Vec<Complex64> = (0..g.n_p).map(|j| Complex64::from_polar(1.0, k[1] * g.p(j))).collect();
    let sum: Complex64 = (0..g.n_x)
        .into_par_iter()
        .map(|i| {
            let row = &s.values[i * g.n_p..(i + 1) * g.n_p];
            let r: Complex64 = row.iter().zip(&ep).map(|(&w, &e)| e * w).sum();
            r * Complex64::from_polar(1.0, k[0] * g.x(i))
        })
        .sum();
    sum * g.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::GridSpec;
    use crate::wigner_sim::state::{cat_state, gaussian_state, CatStateSpec, PhaseGrid};

    fn grid() -> PhaseGrid {
        PhaseGrid::from_spec(&GridSpec::natural_default())
    }

    #[test]
    fn gaussian_has_no_negativity() {
        let s = gaussian_state(grid(), 1.0, 0.5, 1.4, 1.0).unwrap();
        let o = observables(&s, 0.0);
        assert!(o.negativity < 1e-9);
        assert!((o.mean_x - 1.0).abs() < 1e-10 && (o.mean_p - 0.5).abs() < 1e-10);
        // Var x = δ²/2, Var p = ħ²/(2δ²).
        assert!((o.var_x - 0.98).abs() < 1e-8);
        assert!((o.var_p - 1.0 / (2.0 * 1.96)).abs() < 1e-8);
    }

    #[test]
    fn symmetric_cat_is_centred() {
        let spec = CatStateSpec { x0: 6.0, p0: 0.0, delta: 1.4 };
        let s = cat_state(&spec, grid(), 1.0).unwrap();
        let o = observables(&s, spec.x0);
        assert!(o.mean_x.abs() < 1e-12);
        assert!(o.negativity > 0.01);
        // Cross term carries half the Fourier weight at k = x₀/ħ.
        assert!((o.fringe_amplitude - 0.5).abs() < 0.01, "{}", o.fringe_amplitude);
    }

    #[test]
    fn characteristic_matches_marginal_projection() {
        let spec = CatStateSpec { x0: 5.0, p0: 0.0, delta: 1.4 };
        let s = cat_state(&spec, grid(), 1.0).unwrap();
        let o = observables(&s, spec.x0);
        let c = characteristic(&s, spec.fringe_wavevector(1.0));
        assert!((c.norm() - o.fringe_amplitude).abs() < 1e-12);
        assert!((characteristic(&s, [0.0, 0.0]).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_nonnegative_for_cat() {
        let s = cat_state(&CatStateSpec { x0: 6.0, p0: 1.0, delta: 1.4 }, grid(), 1.0).unwrap();
        let (a, b) = marginals(&s);
        assert!(a.iter().chain(&b).all(|&v| v > -1e-9));
    }
}
