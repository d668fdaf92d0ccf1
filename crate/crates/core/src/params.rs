//! Physical constants, derived scales and grid specifications.
//!
//! Everything downstream consumes a validated [`Config`]. The config file is a
//! flat TOML document; [`KEYS`] lists every accepted key.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{grid_err, invalid, Error, Result};

/// Model constants. Natural units (ħ = c = k_B = 1) are the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Mirror mass M.
    pub mirror_mass: f64,
    /// Trap frequency Ω of the mirror's mechanical motion.
    pub trap_frequency: f64,
    /// Mass m of the internal oscillator.
    pub idf_mass: f64,
    /// Frequency ω₀ of the internal oscillator.
    pub idf_frequency: f64,
    /// Bilinear idf-field coupling λ. Zero is the decoupled limit.
    pub coupling: f64,
    pub light_speed: f64,
    /// Quantization length L of the periodic box.
    pub quantization_length: f64,
    /// Temperature in energy units divided by k_B.
    pub temperature: f64,
    pub hbar: f64,
    pub boltzmann: f64,
    /// Static frequency shift ΔΩ₁². The correlator that defines it is not
    /// evaluated here, so it is an input (default 0).
    pub frequency_shift_sq: f64,
}

impl PhysicalParams {
    /// Natural units, Ω_p = ω₀ = 1, mirror trap at half the idf frequency.
    pub fn natural_default() -> Self {
        Self {
            mirror_mass: 1.0,
            trap_frequency: 0.5,
            idf_mass: 1.0,
            idf_frequency: 1.0,
            coupling: std::f64::consts::SQRT_2,
            light_speed: 1.0,
            quantization_length: 1000.0,
            temperature: 0.0,
            hbar: 1.0,
            boltzmann: 1.0,
            frequency_shift_sq: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("mirror_mass", self.mirror_mass),
            ("trap_frequency", self.trap_frequency),
            ("idf_mass", self.idf_mass),
            ("idf_frequency", self.idf_frequency),
            ("light_speed", self.light_speed),
            ("quantization_length", self.quantization_length),
            ("hbar", self.hbar),
            ("boltzmann", self.boltzmann),
        ];
        for (name, v) in strictly_positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(invalid("coupling", "coupling must be positive"));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(invalid("temperature", "must be >= 0"));
        }
        if !self.frequency_shift_sq.is_finite() {
            return Err(invalid("frequency_shift_sq", "must be finite"));
        }
        Ok(())
    }

    /// Thermal energy ratio ħω/(2 k_B T) at frequency `omega`.
    pub fn thermal_argument(&self, omega: f64) -> f64 {
        self.hbar * omega / (2.0 * self.boltzmann * self.temperature)
    }
}

/// Scales derived from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedScales {
    /// Ω_p = cλ²/(2mω₀²).
    pub plasma_frequency: f64,
    /// λ̄² = 2c²λ²/L.
    pub scaled_coupling_sq: f64,
    /// β = 1/(k_B T); infinite at T = 0.
    pub beta: f64,
    /// 𝒟 = cL/2π.
    pub density_of_states: f64,
    /// γ = c³λ²/(2m): strength of the constant memory kernel seen by the idf.
    pub memory_strength: f64,
}

pub fn derive_scales(p: &PhysicalParams) -> DerivedScales {
    let c = p.light_speed;
    let lam2 = p.coupling * p.coupling;
    DerivedScales {
        plasma_frequency: c * lam2 / (2.0 * p.idf_mass * p.idf_frequency * p.idf_frequency),
        scaled_coupling_sq: 2.0 * c * c * lam2 / p.quantization_length,
        beta: 1.0 / (p.boltzmann * p.temperature),
        density_of_states: c * p.quantization_length / (2.0 * PI),
        memory_strength: c * c * c * lam2 / (2.0 * p.idf_mass),
    }
}

/// Sampling of frequency, time and phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Band limit Λ.
    pub omega_cutoff: f64,
    /// Even number of frequency samples on [-Λ, Λ].
    pub n_omega: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_x: usize,
    pub n_p: usize,
    /// Imaginary shift η used to select the retarded branch. `None` picks
    /// the default (see [`GridSpec::retardation`]).
    pub retardation: Option<f64>,
}

/// Largest allowed Λ·dt; keeps the doubled mirror band 2Λ below Nyquist.
pub const NYQUIST_BOUND: f64 = PI / 2.0;

impl GridSpec {
    pub fn natural_default() -> Self {
        Self {
            omega_cutoff: 20.0,
            n_omega: 2048,
            t_max: 100.0,
            n_t: 8000,
            x_min: -15.0,
            x_max: 15.0,
            p_min: -7.5,
            p_max: 7.5,
            n_x: 256,
            n_p: 256,
            retardation: None,
        }
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * self.omega_cutoff / self.n_omega as f64
    }

    /// Half-offset symmetric frequency grid: ω_k = (k - N/2 + 1/2)·dω.
    /// Zero is never a sample.
    pub fn frequencies(&self) -> Vec<f64> {
        half_offset_grid(self.n_omega, self.d_omega())
    }

    /// Same spacing, twice the width: the support of pair-creation spectra.
    pub fn extended_frequencies(&self) -> Vec<f64> {
        half_offset_grid(2 * self.n_omega, self.d_omega())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_t as f64
    }

    /// Lags 0, dt, ..., t_max (n_t + 1 samples).
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_t).map(|j| j as f64 * dt).collect()
    }

    /// Retardation η. Default is Λ/10⁴, clamped to 10⁻³ of the smallest
    /// grid frequency so the two-point extrapolation stays accurate there.
    pub fn retardation(&self) -> f64 {
        self.retardation
            .unwrap_or_else(|| (self.omega_cutoff * 1e-4).min(0.5e-3 * self.d_omega()))
    }

    /// Same grid with `n_omega` scaled by `factor` (rounded to even).
    pub fn with_n_omega(&self, n_omega: usize) -> Self {
        Self { n_omega, ..*self }
    }

    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        if !self.omega_cutoff.is_finite() || self.omega_cutoff <= 0.0 {
            return Err(grid_err("omega_cutoff", "must be positive"));
        }
        if self.n_omega < 4 || self.n_omega % 2 != 0 {
            return Err(grid_err(
                "n_omega",
                format!("must be even and >= 4, got {}", self.n_omega),
            ));
        }
        if !self.t_max.is_finite() || self.t_max <= 0.0 {
            return Err(grid_err("t_max", "must be positive"));
        }
        if self.n_t < 2 {
            return Err(grid_err("n_t", "must be >= 2"));
        }
        if !(self.x_max > self.x_min) {
            return Err(grid_err("x_max", "must exceed x_min"));
        }
        if !(self.p_max > self.p_min) {
            return Err(grid_err("p_max", "must exceed p_min"));
        }
        if self.n_x < 8 {
            return Err(grid_err("n_x", "must be >= 8"));
        }
        if self.n_p < 8 {
            return Err(grid_err("n_p", "must be >= 8"));
        }
        if let Some(eta) = self.retardation {
            if !eta.is_finite() || eta <= 0.0 {
                return Err(grid_err("retardation", "must be positive"));
            }
        }
        let spacing = 2.0 * PI * params.light_speed / params.quantization_length;
        if spacing >= self.d_omega() {
            return Err(grid_err(
                "quantization_length",
                format!(
                    "mode spacing 2πc/L = {spacing:.4e} is not below the frequency step {:.4e}",
                    self.d_omega()
                ),
            ));
        }
        let nyquist = self.omega_cutoff * self.dt();
        if nyquist >= NYQUIST_BOUND {
            return Err(grid_err(
                "n_t",
                format!("Λ·T_max/N_t = {nyquist:.4} must stay below π/2"),
            ));
        }
        Ok(())
    }
}

pub(crate) fn half_offset_grid(n: usize, d_omega: f64) -> Vec<f64> {
    let half = n as f64 / 2.0;
    (0..n).map(|k| (k as f64 - half + 0.5) * d_omega).collect()
}

/// A validated parameter set plus grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Config {
    pub params: PhysicalParams,
    pub grid: GridSpec,
}

/// Every accepted config key, with whether it is required.
pub const KEYS: &[(&str, bool)] = &[
    ("mirror_mass", true),
    ("trap_frequency", true),
    ("idf_mass", true),
    ("idf_frequency", true),
    ("coupling", true),
    ("quantization_length", true),
    ("temperature", true),
    ("light_speed", false),
    ("hbar", false),
    ("boltzmann", false),
    ("frequency_shift_sq", false),
    ("omega_cutoff", false),
    ("n_omega", false),
    ("t_max", false),
    ("n_t", false),
    ("x_min", false),
    ("x_max", false),
    ("p_min", false),
    ("p_max", false),
    ("n_x", false),
    ("n_p", false),
    ("retardation", false),
];

impl Default for Config {
    fn default() -> Self {
        Self {
            params: PhysicalParams::natural_default(),
            grid: GridSpec::natural_default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate(&self.params)
    }

    /// Flat `key = value` TOML, reloadable by [`load_config`] bit-for-bit.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let g = &self.grid;
        let mut out = String::new();
        let mut f = |k: &str, v: f64| out.push_str(&format!("{k} = {v:?}\n"));
        f("mirror_mass", p.mirror_mass);
        f("trap_frequency", p.trap_frequency);
        f("idf_mass", p.idf_mass);
        f("idf_frequency", p.idf_frequency);
        f("coupling", p.coupling);
        f("light_speed", p.light_speed);
        f("quantization_length", p.quantization_length);
        f("temperature", p.temperature);
        f("hbar", p.hbar);
        f("boltzmann", p.boltzmann);
        f("frequency_shift_sq", p.frequency_shift_sq);
        f("omega_cutoff", g.omega_cutoff);
        f("t_max", g.t_max);
        f("x_min", g.x_min);
        f("x_max", g.x_max);
        f("p_min", g.p_min);
        f("p_max", g.p_max);
        if let Some(eta) = g.retardation {
            f("retardation", eta);
        }
        for (k, v) in [
            ("n_omega", g.n_omega),
            ("n_t", g.n_t),
            ("n_x", g.n_x),
            ("n_p", g.n_p),
        ] {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Parse and validate a flat TOML config document.
pub fn load_config(text: &str) -> Result<Config> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;

    let unknown: Vec<String> = table
        .keys()
        .filter(|k| !KEYS.iter().any(|(name, _)| name == k))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    for (name, required) in KEYS {
        if *required && !table.contains_key(*name) {
            return Err(Error::MissingKey(name.to_string()));
        }
    }

    let values: BTreeMap<&str, &toml::Value> = table.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let num = |key: &str, default: f64| -> Result<f64> {
        match values.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(f)) => Ok(*f),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(other) => Err(invalid(key, format!("expected a number, got {other}"))),
        }
    };
    let count = |key: &str, default: usize| -> Result<usize> {
        match values.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(other) => Err(grid_err(key, format!("expected a non-negative integer, got {other}"))),
        }
    };

    let dp = PhysicalParams::natural_default();
    let dg = GridSpec::natural_default();
    let params = PhysicalParams {
        mirror_mass: num("mirror_mass", dp.mirror_mass)?,
        trap_frequency: num("trap_frequency", dp.trap_frequency)?,
        idf_mass: num("idf_mass", dp.idf_mass)?,
        idf_frequency: num("idf_frequency", dp.idf_frequency)?,
        coupling: num("coupling", dp.coupling)?,
        light_speed: num("light_speed", dp.light_speed)?,
        quantization_length: num("quantization_length", dp.quantization_length)?,
        temperature: num("temperature", dp.temperature)?,
        hbar: num("hbar", dp.hbar)?,
        boltzmann: num("boltzmann", dp.boltzmann)?,
        frequency_shift_sq: num("frequency_shift_sq", dp.frequency_shift_sq)?,
    };
    let grid = GridSpec {
        omega_cutoff: num("omega_cutoff", dg.omega_cutoff)?,
        n_omega: count("n_omega", dg.n_omega)?,
        t_max: num("t_max", dg.t_max)?,
        n_t: count("n_t", dg.n_t)?,
        x_min: num("x_min", dg.x_min)?,
        x_max: num("x_max", dg.x_max)?,
        p_min: num("p_min", dg.p_min)?,
        p_max: num("p_max", dg.p_max)?,
        n_x: count("n_x", dg.n_x)?,
        n_p: count("n_p", dg.n_p)?,
        retardation: match values.get("retardation") {
            None => None,
            Some(_) => Some(num("retardation", 0.0)?),
        },
    };
    let config = Config { params, grid };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "mirror_mass = 1\ntrap_frequency = 1\nidf_mass = 1\nidf_frequency = 1\n\
        coupling = 1.4142135623730951\nlight_speed = 1\nquantization_length = 1000\n\
        temperature = 0\nhbar = 1\nboltzmann = 1\n";

    #[test]
    fn natural_units_document_gives_unit_plasma_frequency() {
        let cfg = load_config(BASE).unwrap();
        let s = derive_scales(&cfg.params);
        assert!((s.plasma_frequency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_coupling_rejected() {
        let text = BASE.replace("coupling = 1.4142135623730951", "coupling = -1");
        let err = load_config(&text).unwrap_err();
        assert!(err.to_string().contains("coupling must be positive"), "{err}");
    }

    #[test]
    fn odd_n_omega_names_the_field() {
        let err = load_config(&format!("{BASE}n_omega = 2047\n")).unwrap_err();
        assert!(err.to_string().contains("n_omega"), "{err}");
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = load_config(&format!("{BASE}bogus = 1\nalso_bogus = 2\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("also_bogus"), "{msg}");
    }

    #[test]
    fn missing_key_named() {
        let text = BASE.replace("temperature = 0\n", "");
        match load_config(&text) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "temperature"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_positive_mass_named() {
        let text = BASE.replace("idf_mass = 1", "idf_mass = 0");
        assert!(load_config(&text).unwrap_err().to_string().contains("idf_mass"));
    }

    #[test]
    fn short_box_fails_mode_spacing_check() {
        let text = BASE.replace("quantization_length = 1000", "quantization_length = 10");
        assert!(load_config(&text).unwrap_err().to_string().contains("quantization_length"));
    }

    #[test]
    fn coarse_time_grid_fails_nyquist() {
        let err = load_config(&format!("{BASE}n_t = 100\n")).unwrap_err();
        assert!(err.to_string().contains("n_t"), "{err}");
    }

    #[test]
    fn scaled_coupling() {
        let p = PhysicalParams {
            coupling: 1.0,
            light_speed: 1.0,
            quantization_length: 2.0,
            ..PhysicalParams::natural_default()
        };
        assert!((derive_scales(&p).scaled_coupling_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_of_states_by_hand() {
        let p = PhysicalParams::natural_default();
        // 1000 / (2π) evaluated independently
        let expected = 1000.0 / 6.283185307179586;
        assert!((derive_scales(&p).density_of_states - expected).abs() < 1e-12);
    }

    #[test]
    fn frequency_grid_is_symmetric_and_skips_zero() {
        let g = GridSpec::natural_default();
        let w = g.frequencies();
        assert_eq!(w.len(), g.n_omega);
        for k in 0..w.len() {
            assert_eq!(w[k], -w[w.len() - 1 - k]);
            assert!(w[k] != 0.0);
        }
    }

    proptest::proptest! {
        #[test]
        fn toml_round_trip_is_bit_identical(
            m in 1e-3f64..1e3, om in 1e-2f64..0.9, lam in 0.0f64..5.0, temp in 0.0f64..50.0,
            shift in -1.0f64..1.0,
        ) {
            let mut cfg = Config::default();
            cfg.params.mirror_mass = m;
            cfg.params.trap_frequency = om;
            cfg.params.coupling = lam;
            cfg.params.temperature = temp;
            cfg.params.frequency_shift_sq = shift;
            cfg.grid.retardation = Some(om * 1e-7);
            let back = load_config(&cfg.to_toml()).unwrap();
            proptest::prop_assert_eq!(back, cfg);
        }
    }
}
