use serde::Serialize;

use crate::coefficients::WignerCoefficients;
use crate::error::{invalid, Error, Result};
use crate::params::GridSpec;

/// Cell-centred phase-space grid; x is the slow index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_x: usize,
    pub n_p: usize,
}

impl PhaseGrid {
    pub fn from_spec(g: &GridSpec) -> Self {
        Self {
            x_min: g.x_min,
            x_max: g.x_max,
            p_min: g.p_min,
            p_max: g.p_max,
            n_x: g.n_x,
            n_p: g.n_p,
        }
    }

    pub fn symmetric(x_half: f64, p_half: f64, n_x: usize, n_p: usize) -> Self {
        Self {
            x_min: -x_half,
            x_max: x_half,
            p_min: -p_half,
            p_max: p_half,
            n_x,
            n_p,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p(j)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn p_abs_max(&self) -> f64 {
        self.p_min.abs().max(self.p_max.abs())
    }

    pub fn x_abs_max(&self) -> f64 {
        self.x_min.abs().max(self.x_max.abs())
    }

    pub fn refined(&self) -> Self {
        Self {
            n_x: 2 * self.n_x,
            n_p: 2 * self.n_p,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerState {
    pub grid: PhaseGrid,
    /// W at cell centres, index i·n_p + j.
    pub values: Vec<f64>,
    pub time: f64,
    pub coefficients: WignerCoefficients,
}

impl WignerState {
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_x {
            let x = grid.x(i);
            for j in 0..grid.n_p {
                values.push(f(x, grid.p(j)));
            }
        }
        Self {
            grid,
            values,
            time: 0.0,
            coefficients: WignerCoefficients::hamiltonian(0.0),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p + j]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        self.values.iter_mut().for_each(|v| *v /= n);
    }

    /// Mass in the outermost cell ring.
    pub fn boundary_mass(&self) -> f64 {
        let (nx, np) = (self.grid.n_x, self.grid.n_p);
        let mut s = 0.0;
        for i in 0..nx {
            for j in 0..np {
                if i == 0 || j == 0 || i == nx - 1 || j == np - 1 {
                    s += self.values[i * np + j].abs();
                }
            }
        }
        s * self.grid.cell_area()
    }
}

/// Superposition of two minimum-uncertainty packets at ±(x₀/2, p₀/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatStateSpec {
    pub x0: f64,
    pub p0: f64,
    pub delta: f64,
}

impl CatStateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x0 >= 0.0) || !self.x0.is_finite() {
            return Err(invalid("x0", "must be >= 0"));
        }
        if !(self.p0 >= 0.0) || !self.p0.is_finite() {
            return Err(invalid("p0", "must be >= 0"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", "must be > 0"));
        }
        Ok(())
    }

    /// Fringe wavevector (k_x, k_p) of the interference term.
    pub fn fringe_wavevector(&self, hbar: f64) -> [f64; 2] {
        [-self.p0 / hbar, self.x0 / hbar]
    }
}

/// Wigner function of a packet with |φ|² ∝ exp(−(x−x_c)²/δ²).
pub fn packet(x: f64, p: f64, xc: f64, pc: f64, delta: f64, hbar: f64) -> f64 {
    let u = (x - xc) / delta;
    let v = (p - pc) * delta / hbar;
    (-(u * u) - v * v).exp() / (std::f64::consts::PI * hbar)
}

pub fn gaussian_state(grid: PhaseGrid, xc: f64, pc: f64, delta: f64, hbar: f64) -> Result<WignerState> {
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be > 0"));
    }
    let mut s = WignerState::from_fn(grid, |x, p| packet(x, p, xc, pc, delta, hbar));
    s.normalize();
    Ok(s)
}

pub fn cat_state(spec: &CatStateSpec, grid: PhaseGrid, hbar: f64) -> Result<WignerState> {
    spec.validate()?;
    let (dx, dp) = (grid.dx(), grid.dp());
    let d = spec.delta;
    if d < 2.0 * dx || hbar / d < 2.0 * dp {
        return Err(Error::UnderResolved(format!(
            "packet width {d} needs >= 2 cells in x (dx = {dx}) and p (dp = {dp})"
        )));
    }
    let tau = 2.0 * std::f64::consts::PI * hbar;
    if spec.x0 > 0.0 && tau / spec.x0 < 4.0 * dp {
        return Err(Error::UnderResolved(format!(
            "momentum fringe wavelength {} < 4 cells (dp = {dp})",
            tau / spec.x0
        )));
    }
    if spec.p0 > 0.0 && tau / spec.p0 < 4.0 * dx {
        return Err(Error::UnderResolved(format!(
            "position fringe wavelength {} < 4 cells (dx = {dx})",
            tau / spec.p0
        )));
    }
    let (hx, hp) = (0.5 * spec.x0, 0.5 * spec.p0);
    let mut s = WignerState::from_fn(grid, |x, p| {
        0.5 * (packet(x, p, hx, hp, d, hbar)
            + packet(x, p, -hx, -hp, d, hbar)
            + 2.0 * packet(x, p, 0.0, 0.0, d, hbar) * ((p * spec.x0 - spec.p0 * x) / hbar).cos())
    });
    s.normalize();
    Ok(s)
}
