//! The full chain from a validated config to coefficient traces.

use crate::coefficients::{coefficient_traces, CoefficientTrace};
use crate::env_kernels::{minus_bath_spectra, plus_bath_spectra, KernelPair};
use crate::error::Result;
use crate::idf_response::{susceptibility, Susceptibility};
use crate::mirror_kernels::{mirror_spectra_unchecked, MirrorKernels, PairDensity};
use crate::params::Config;

pub struct Pipeline {
    pub config: Config,
    pub plus: KernelPair,
    pub minus: KernelPair,
    pub susceptibility: Susceptibility,
    pub pair_density: PairDensity,
    pub mirror: MirrorKernels,
}

impl Pipeline {
    /// Bath spectra, susceptibility and mirror spectra. Mirror convergence is
    /// recorded, not enforced.
    pub fn build(config: &Config) -> Result<Self> {
        config.validate()?;
        let (p, g) = (&config.params, &config.grid);
        let plus = plus_bath_spectra(g, p);
        let minus = minus_bath_spectra(g, p);
        let susc = susceptibility(g, p, &minus)?;
        let pd = PairDensity::from_parts(g, p, &plus, &minus, &susc)?;
        let mirror = mirror_spectra_unchecked(&pd)?;
        Ok(Self {
            config: *config,
            plus,
            minus,
            susceptibility: susc,
            pair_density: pd,
            mirror,
        })
    }

    /// Coefficient traces over the configured lag horizon.
    pub fn traces(&self) -> Result<CoefficientTrace> {
        let g = &self.config.grid;
        coefficient_traces(&self.mirror, &self.config.params, g.dt(), g.t_max)
    }
}
