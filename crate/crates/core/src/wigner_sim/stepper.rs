//! Strang-split stepper for
//!
//!   ∂W/∂t = −(p/M)∂ₓW + MΩ²x∂ₚW + a∂²ₚW + b∂²ₓₚW + g∂ₚ(pW)
//!
//! Hamiltonian half steps use exact Fourier shifts (periodic in both axes);
//! the dissipative part is one SSPRK3 step of conservative stencils with
//! zero flux at the momentum boundaries.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::state::{PhaseGrid, WignerState};
use crate::coefficients::WignerCoefficients;
use crate::error::{Error, Result};

pub const ADVECTION_CFL: f64 = 0.9;
pub const DIFFUSION_LIMIT: f64 = 0.45;
pub const DRIFT_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    /// The 2×2 diffusion matrix [[0, b/2], [b/2, a]] is not positive semidefinite.
    pub indefinite: bool,
    pub mass_change: f64,
}

struct AxisShift {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers in FFT order; Nyquist handled separately.
    k: Vec<f64>,
}

impl AxisShift {
    fn new(planner: &mut FftPlanner<f64>, n: usize, spacing: f64) -> Self {
        let base = 2.0 * std::f64::consts::PI / (n as f64 * spacing);
        let k = (0..n)
            .map(|m| {
                let m = m as i64;
                let s = if m <= n as i64 / 2 { m } else { m - n as i64 };
                s as f64 * base
            })
            .collect();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            k,
        }
    }

    /// row(y) ← row(y − s), band-limited and periodic.
    fn shift(&self, row: &mut [f64], s: f64, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        for (b, &r) in buf.iter_mut().zip(row.iter()) {
            *b = Complex64::new(r, 0.0);
        }
        self.fwd.process_with_scratch(buf, scratch);
        let nyq = self.n / 2;
        for (m, b) in buf.iter_mut().enumerate() {
            let phase = self.k[m] * s;
            *b *= if self.n % 2 == 0 && m == nyq {
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -phase)
            };
        }
        self.inv.process_with_scratch(buf, scratch);
        let norm = 1.0 / self.n as f64;
        for (r, b) in row.iter_mut().zip(buf.iter()) {
            *r = b.re * norm;
        }
    }

    fn scratch_len(&self) -> usize {
        self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())
    }

    /// Shift every row of a row-major block by `offset(row index)`.
    fn shift_rows(&self, data: &mut [f64], offset: impl Fn(usize) -> f64 + Sync) {
        let n = self.n;
        let sl = self.scratch_len();
        data.par_chunks_mut(n).enumerate().for_each_init(
            || (vec![Complex64::default(); n], vec![Complex64::default(); sl]),
            |(buf, scratch), (r, row)| self.shift(row, offset(r), buf, scratch),
        );
    }
}

pub struct Stepper {
    grid: PhaseGrid,
    mass: f64,
    x_axis: AxisShift,
    p_axis: AxisShift,
    transposed: Vec<f64>,
    stages: [Vec<f64>; 3],
}

fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(c, out)| {
        for (r, o) in out.iter_mut().enumerate() {
            *o = src[r * cols + c];
        }
    });
}

impl Stepper {
    pub fn new(grid: PhaseGrid, mirror_mass: f64) -> Self {
        let mut planner = FftPlanner::new();
        let x_axis = AxisShift::new(&mut planner, grid.n_x, grid.dx());
        let p_axis = AxisShift::new(&mut planner, grid.n_p, grid.dp());
        let n = grid.len();
        Self {
            grid,
            mass: mirror_mass,
            x_axis,
            p_axis,
            transposed: vec![0.0; n],
            stages: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Check the explicit-scheme bounds for step `dt`.
    pub fn check_stability(&self, c: &WignerCoefficients, dt: f64) -> Result<()> {
        let g = &self.grid;
        let (dx, dp) = (g.dx(), g.dp());
        let cfl = g.p_abs_max() * dt / (self.mass * dx);
        if !(cfl < ADVECTION_CFL) {
            return Err(Error::Stability { bound: "advection_cfl", value: cfl, limit: ADVECTION_CFL });
        }
        let diff = diffusion_radius(c, dx, dp) * dt;
        if !(diff < DIFFUSION_LIMIT) {
            return Err(Error::Stability { bound: "diffusion", value: diff, limit: DIFFUSION_LIMIT });
        }
        let drift = c.drift.abs() * dt * (1.0 + g.p_abs_max() / dp);
        if !(drift < DRIFT_CFL) {
            return Err(Error::Stability { bound: "drift_cfl", value: drift, limit: DRIFT_CFL });
        }
        Ok(())
    }

    /// Largest dt satisfying every bound, times `safety`.
    pub fn stable_dt(&self, c: &WignerCoefficients, safety: f64) -> f64 {
        let g = &self.grid;
        let (dx, dp) = (g.dx(), g.dp());
        let mut dt = ADVECTION_CFL * self.mass * dx / g.p_abs_max();
        let r = diffusion_radius(c, dx, dp);
        if r > 0.0 {
            dt = dt.min(DIFFUSION_LIMIT / r);
        }
        let d = c.drift.abs() * (1.0 + g.p_abs_max() / dp);
        if d > 0.0 {
            dt = dt.min(DRIFT_CFL / d);
        }
        dt * safety
    }

    fn shift_x(&mut self, values: &mut [f64], h: f64) {
        let (nx, np) = (self.grid.n_x, self.grid.n_p);
        let g = self.grid;
        let m = self.mass;
        transpose(values, &mut self.transposed, nx, np);
        self.x_axis.shift_rows(&mut self.transposed, |j| g.p(j) * h / m);
        transpose(&self.transposed, values, np, nx);
    }

    fn shift_p(&mut self, values: &mut [f64], h: f64, omega_sq: f64) {
        let g = self.grid;
        let m = self.mass;
        self.p_axis.shift_rows(values, |i| -m * omega_sq * g.x(i) * h);
    }

    /// Hamiltonian flow for time h: X(h/2) P(h) X(h/2).
    fn hamiltonian(&mut self, values: &mut [f64], h: f64, omega_sq: f64) {
        self.shift_x(values, 0.5 * h);
        if omega_sq != 0.0 {
            self.shift_p(values, h, omega_sq);
        }
        self.shift_x(values, 0.5 * h);
    }

    fn dissipative(&mut self, values: &mut [f64], c: &WignerCoefficients, dt: f64) {
        if c.diffusion_pp == 0.0 && c.diffusion_xp == 0.0 && c.drift == 0.0 {
            return;
        }
        let g = self.grid;
        let [k, u1, u2] = &mut self.stages;
        rhs(&g, c, values, k);
        par_zip(u1, values, k, |w, l| w + dt * l);
        rhs(&g, c, u1, k);
        par_zip3(u2, values, u1, k, |w, a, l| 0.75 * w + 0.25 * (a + dt * l));
        rhs(&g, c, u2, k);
        let tmp: &[f64] = u2;
        values
            .par_iter_mut()
            .zip(tmp.par_iter().zip(k.par_iter()))
            .for_each(|(w, (a, l))| *w = *w / 3.0 + 2.0 / 3.0 * (a + dt * l));
    }

    /// One step A(dt/2) B(dt) A(dt/2).
    pub fn step(&mut self, state: &mut WignerState, c: &WignerCoefficients, dt: f64) -> Result<StepReport> {
        self.check_stability(c, dt)?;
        let before = state.norm();
        let mut values = std::mem::take(&mut state.values);
        self.hamiltonian(&mut values, 0.5 * dt, c.omega_ren_sq);
        self.dissipative(&mut values, c, dt);
        self.hamiltonian(&mut values, 0.5 * dt, c.omega_ren_sq);
        state.values = values;
        state.time += dt;
        state.coefficients = *c;
        let after = state.norm();
        if !after.is_finite() {
            return Err(Error::Stability { bound: "finite_values", value: after, limit: f64::MAX });
        }
        Ok(StepReport {
            indefinite: c.diffusion_pp < 0.0 || c.diffusion_xp != 0.0,
            mass_change: (after - before).abs() / before.abs().max(f64::MIN_POSITIVE),
        })
    }

    /// Linear phase-space map z ↦ Φz applied by one step to the characteristics.
    pub fn step_map(&self, c: &WignerCoefficients, dt: f64) -> [[f64; 2]; 2] {
        let m = self.mass;
        let x = |h: f64| [[1.0, h / m], [0.0, 1.0]];
        let p = |h: f64| [[1.0, 0.0], [-m * c.omega_ren_sq * h, 1.0]];
        let half = mat_mul(&mat_mul(&x(0.25 * dt), &p(0.5 * dt)), &x(0.25 * dt));
        let drift = [[1.0, 0.0], [0.0, (-c.drift * dt).exp()]];
        mat_mul(&mat_mul(&half, &drift), &half)
    }
}

pub fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn diffusion_radius(c: &WignerCoefficients, dx: f64, dp: f64) -> f64 {
    let a = c.diffusion_pp / (dp * dp);
    let b = c.diffusion_xp / (2.0 * dx * dp);
    let half = 0.5 * a;
    (half.abs() + (half * half + b * b).sqrt()).abs()
}

fn par_zip(out: &mut [f64], a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync) {
    out.par_iter_mut()
        .zip(a.par_iter().zip(b.par_iter()))
        .for_each(|(o, (x, y))| *o = f(*x, *y));
}

fn par_zip3(out: &mut [f64], a: &[f64], b: &[f64], c: &[f64], f: impl Fn(f64, f64, f64) -> f64 + Sync) {
    out.par_iter_mut()
        .zip(a.par_iter().zip(b.par_iter().zip(c.par_iter())))
        .for_each(|(o, (x, (y, z)))| *o = f(*x, *y, *z));
}

/// a∂²ₚW + b∂²ₓₚW + g∂ₚ(pW); x periodic, zero flux in p.
fn rhs(g: &PhaseGrid, c: &WignerCoefficients, w: &[f64], out: &mut [f64]) {
    let (nx, np) = (g.n_x, g.n_p);
    let (dx, dp) = (g.dx(), g.dp());
    let a = c.diffusion_pp / (dp * dp);
    let b = c.diffusion_xp / (4.0 * dx * dp);
    let gd = c.drift / dp;
    out.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
        let cur = &w[i * np..(i + 1) * np];
        let up = &w[((i + 1) % nx) * np..][..np];
        let dn = &w[((i + nx - 1) % nx) * np..][..np];
        for j in 0..np {
            let wm = if j > 0 { cur[j - 1] } else { cur[j] };
            let wp = if j + 1 < np { cur[j + 1] } else { cur[j] };
            let mut v = a * (wp - 2.0 * cur[j] + wm);
            if b != 0.0 {
                let at = |r: &[f64], k: isize| if k < 0 || k >= np as isize { 0.0 } else { r[k as usize] };
                let jj = j as isize;
                v += b * (at(up, jj + 1) - at(up, jj - 1) - at(dn, jj + 1) + at(dn, jj - 1));
            }
            if gd != 0.0 {
                let flux_hi = if j + 1 < np {
                    (g.p(j) + 0.5 * dp) * 0.5 * (cur[j] + cur[j + 1])
                } else {
                    0.0
                };
                let flux_lo = if j > 0 {
                    (g.p(j) - 0.5 * dp) * 0.5 * (cur[j - 1] + cur[j])
                } else {
                    0.0
                };
                v += gd * (flux_hi - flux_lo);
            }
            row[j] = v;
        }
    });
}
