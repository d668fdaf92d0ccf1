use dce_mirror::coefficients::{coefficient_traces, diffusion_friction_residual, stationary_limits};
use dce_mirror::params::{Config, GridSpec, PhysicalParams};
use dce_mirror::pipeline::Pipeline;
use dce_mirror::verify::verify_suite;
use dce_mirror::wigner_sim::{
    evolve, gaussian_state, observables, stationary_coefficients, CoefficientSource, DecoherenceSettings,
    EvolveOptions, PhaseGrid, Stepper,
};

fn warm(t: f64) -> PhysicalParams {
    PhysicalParams { temperature: t, ..PhysicalParams::natural_default() }
}

#[test]
fn verify_passes_at_defaults() {
    let r = verify_suite(&Config::default()).unwrap();
    assert!(r.all_passed, "{}", r.table());
}

#[test]
fn coarse_frequency_grid_fails_only_resolution_checks() {
    let mut cfg = Config::default();
    cfg.grid = cfg.grid.with_n_omega(cfg.grid.n_omega / 8);
    let r = verify_suite(&cfg).unwrap();
    assert!(!r.all_passed);
    for e in r.entries.iter().filter(|e| !e.passed) {
        assert_eq!(e.category, "convergence", "{}", r.table());
    }
}

#[test]
fn thermal_momentum_variance_reaches_equilibrium() {
    let p = warm(5.0);
    let pl = Pipeline::build(&Config { params: p, grid: GridSpec::natural_default() }).unwrap();
    let trace = pl.traces().unwrap();
    let settings = DecoherenceSettings::default();
    let c = stationary_coefficients(&trace, &p, &settings);
    let grid = PhaseGrid::symmetric(32.0, 16.0, 128, 128);
    let delta = (p.hbar / (p.mirror_mass * p.trap_frequency)).sqrt();
    let s0 = gaussian_state(grid, 0.0, 0.0, delta, p.hbar).unwrap();
    let relax = 1.0 / trace.stationary.gamma.abs();
    let opts = EvolveOptions {
        dt: Stepper::new(grid, p.mirror_mass).stable_dt(&c, 0.9),
        horizon: 8.0 * relax,
        cadence: usize::MAX,
        fringe: [0.0, 0.0],
        cross_diffusion: true,
        stop_below: None,
    };
    let out = evolve(&s0, CoefficientSource::Constant(c), p.mirror_mass, &opts, &mut |_, _| {}).unwrap();
    let var_p = observables(&out.final_state, 0.0).var_p;
    let z = 1.0 / (p.hbar * p.trap_frequency / (2.0 * p.temperature)).tanh();
    let expected = p.hbar * p.mirror_mass * p.trap_frequency * z / 2.0;
    assert!((var_p / expected - 1.0).abs() < 0.1, "{var_p} vs {expected}");
}

#[test]
fn diffusion_friction_relation_holds_for_any_coupling() {
    for lambda in [0.5, 1.0, 2.0] {
        for t in [0.0, 5.0] {
            let p = PhysicalParams { coupling: lambda, ..warm(t) };
            let pl = Pipeline::build(&Config { params: p, grid: GridSpec::natural_default() }).unwrap();
            let s = stationary_limits(&pl.mirror, &p).unwrap();
            assert!(diffusion_friction_residual(&s, &p).unwrap() < 1e-3, "lambda {lambda}, T {t}");
        }
    }
}

#[test]
fn friction_is_insensitive_to_cutoff_but_cross_diffusion_is_not() {
    let p = PhysicalParams::natural_default();
    let mut out = Vec::new();
    for cut in [20.0, 40.0] {
        let g = GridSpec { omega_cutoff: cut, n_omega: (2048.0 * cut / 20.0) as usize, ..GridSpec::natural_default() };
        let pl = Pipeline::build(&Config { params: p, grid: g }).unwrap();
        let tr = coefficient_traces(&pl.mirror, &p, g.dt(), 50.0).unwrap();
        out.push((tr.stationary.gamma, *tr.d_xp.last().unwrap()));
    }
    let (g20, x20) = out[0];
    let (g40, x40) = out[1];
    assert!((g40 / g20 - 1.0).abs() < 0.01, "{g20} {g40}");
    assert!((x40 / x20 - 1.0).abs() > 0.1, "{x20} {x40}");
}
