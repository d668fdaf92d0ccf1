//! Static-mirror scattering: transmission, reflection and the crossover from
//! reflective to transparent behaviour.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{GridSpec, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringPoint {
    pub omega: f64,
    pub transmission: Complex64,
    pub reflection: Complex64,
}

impl ScatteringPoint {
    pub fn transmittance(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    pub fn reflectance(&self) -> f64 {
        self.reflection.norm_sqr()
    }
}

/// F(ω; ω₀, Ω_p) = (ω/Ω_p)(1 − (ω/ω₀)²).
pub fn f_factor(omega: f64, omega0: f64, plasma: f64) -> f64 {
    let r = omega / omega0;
    omega / plasma * (1.0 - r * r)
}

/// |T|² = F²/(1 + F²).
pub fn transmittance_from_f(f: f64) -> f64 {
    let f2 = f * f;
    f2 / (1.0 + f2)
}

/// |R|² = 1/(1 + F²).
pub fn reflectance_from_f(f: f64) -> f64 {
    1.0 / (1.0 + f * f)
}

pub fn scattering(omega: f64, p: &PhysicalParams) -> ScatteringPoint {
    let a = 2.0 * p.idf_mass * omega * (p.idf_frequency * p.idf_frequency - omega * omega);
    let b = p.coupling * p.coupling * p.light_speed;
    let den = Complex64::new(a, -b);
    let reflection = Complex64::new(0.0, b) / den;
    // T = 1 + R holds algebraically; computing T from its own numerator keeps
    // T(ω₀) = 0 exact.
    let transmission = Complex64::new(a, 0.0) / den;
    ScatteringPoint {
        omega,
        transmission,
        reflection,
    }
}

/// Scattering amplitudes in the Ω_p/ω₀ parametrisation, with m = c = 1 and
/// the coupling chosen to realise the requested plasma frequency.
pub fn scattering_for_ratio(omega: f64, omega0: f64, plasma: f64) -> ScatteringPoint {
    let p = PhysicalParams {
        idf_frequency: omega0,
        idf_mass: 1.0,
        light_speed: 1.0,
        coupling: (2.0 * plasma * omega0 * omega0).sqrt(),
        ..PhysicalParams::natural_default()
    };
    scattering(omega, &p)
}

/// Positive roots of F²(ω) = 1 below a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverRoots {
    /// All roots found, ascending.
    pub roots: Vec<f64>,
    /// Index into `roots` of ω*, the smallest root above ω₀.
    pub marked: usize,
}

impl CrossoverRoots {
    pub fn omega_star(&self) -> f64 {
        self.roots[self.marked]
    }
}

const SCAN_POINTS: usize = 20_000;

/// Solve F²(ω) = 1 by a geometric scan over [ω₀·10⁻³, cutoff] followed by
/// bisection on each bracketed sign change.
pub fn crossover_roots(omega0: f64, plasma: f64, cutoff: f64) -> Result<CrossoverRoots> {
    let g = |w: f64| {
        let f = f_factor(w, omega0, plasma);
        f * f - 1.0
    };
    let lo = omega0 * 1e-3;
    if !(cutoff > lo) || !(plasma > 0.0) {
        return Err(Error::BracketNotFound { cutoff });
    }
    let ratio = (cutoff / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut roots = Vec::new();
    let mut a = lo;
    let mut ga = g(a);
    for k in 1..SCAN_POINTS {
        let b = if k == SCAN_POINTS - 1 { cutoff } else { lo * ratio.powi(k as i32) };
        let gb = g(b);
        if gb == 0.0 {
            roots.push(b);
        } else if ga.signum() != gb.signum() && ga != 0.0 {
            roots.push(bisect(&g, a, b, ga));
        }
        a = b;
        ga = gb;
    }
    let marked = roots
        .iter()
        .position(|&w| w > omega0)
        .ok_or(Error::BracketNotFound { cutoff })?;
    Ok(CrossoverRoots { roots, marked })
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= 1e-15 * m {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// ω* for a parameter set, scanning up to `cutoff`.
pub fn crossover_frequency(p: &PhysicalParams, plasma: f64, cutoff: f64) -> Result<CrossoverRoots> {
    crossover_roots(p.idf_frequency, plasma, cutoff)
}

/// Scattering amplitudes at every grid frequency, ascending.
pub fn spectral_scan(grid: &GridSpec, p: &PhysicalParams) -> Vec<ScatteringPoint> {
    grid.frequencies().into_iter().map(|w| scattering(w, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_scales;

    #[test]
    fn f_factor_values() {
        assert_eq!(f_factor(1.0, 1.0, 3.0), 0.0);
        assert_eq!(f_factor(0.0, 1.0, 3.0), 0.0);
        assert_eq!(f_factor(2.0, 1.0, 1.0), -6.0);
    }

    #[test]
    fn perfect_reflection_at_resonance() {
        let p = PhysicalParams::natural_default();
        let s = scattering(p.idf_frequency, &p);
        assert!((s.reflection + 1.0).norm() < 1e-15);
        assert_eq!(s.transmission.norm(), 0.0);
    }

    #[test]
    fn transparent_at_high_frequency() {
        let s = scattering_for_ratio(1e4, 1.0, 1.0);
        assert!(1.0 - s.transmittance() < 1e-10);
    }

    #[test]
    fn zero_frequency_reflects() {
        let s = scattering(0.0, &PhysicalParams::natural_default());
        assert!((s.reflection + 1.0).norm() < 1e-15);
    }

    #[test]
    fn matches_f_factor_forms() {
        let p = PhysicalParams::natural_default();
        let plasma = derive_scales(&p).plasma_frequency;
        for k in 1..200 {
            let w = 0.037 * k as f64;
            let s = scattering(w, &p);
            let f = f_factor(w, p.idf_frequency, plasma);
            assert!((s.transmittance() - transmittance_from_f(f)).abs() < 1e-12);
            assert!((s.reflectance() - reflectance_from_f(f)).abs() < 1e-12);
        }
    }

    #[test]
    fn crossover_cubic_root() {
        let r = crossover_roots(1.0, 10.0, 100.0).unwrap();
        let w = r.omega_star();
        assert!((w * w * w - w - 10.0).abs() < 1e-8);
        assert!((w - 2.3089).abs() < 1e-4);
        let f = f_factor(w, 1.0, 10.0);
        assert!((f * f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_ratio_roots_are_half_transmitting() {
        let r = crossover_roots(1.0, 1.0, 100.0).unwrap();
        assert!(!r.roots.is_empty());
        for &w in &r.roots {
            let t2 = scattering_for_ratio(w, 1.0, 1.0).transmittance();
            assert!((t2 - 0.5).abs() < 1e-9, "w = {w}, |T|² = {t2}");
        }
    }

    #[test]
    fn missing_bracket_reported() {
        assert!(matches!(
            crossover_roots(1.0, 1e4, 5.0),
            Err(Error::BracketNotFound { .. })
        ));
    }

    #[test]
    fn scan_has_one_row_per_sample() {
        let g = GridSpec::natural_default();
        let rows = spectral_scan(&g, &PhysicalParams::natural_default());
        assert_eq!(rows.len(), g.n_omega);
        assert!(rows.windows(2).all(|w| w[0].omega < w[1].omega));
    }

    proptest::proptest! {
        #[test]
        fn unitarity_continuity_and_reality(w in -50.0f64..50.0, ratio in 0.01f64..100.0) {
            let s = scattering_for_ratio(w, 1.0, ratio);
            proptest::prop_assert!((s.transmittance() + s.reflectance() - 1.0).abs() < 1e-12);
            proptest::prop_assert!((Complex64::new(1.0, 0.0) + s.reflection - s.transmission).norm() < 1e-12);
            let m = scattering_for_ratio(-w, 1.0, ratio);
            proptest::prop_assert!((m.reflection - s.reflection.conj()).norm() < 1e-12);
            proptest::prop_assert!((m.transmission - s.transmission.conj()).norm() < 1e-12);
        }
    }
}
