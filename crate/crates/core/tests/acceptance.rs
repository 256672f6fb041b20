//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! with its measured values and wall time; the test fails if any does.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use starsync::dynamics::fock::{fock_oracle_evolve, FockConfig};
use starsync::dynamics::metrics::sync_metrics_for;
use starsync::dynamics::{
    all_positions, evolve_gaussian, init_state, make_dissipation, physical_mean, position_trajectory,
    time_grid, Frame, GaussianState, Preparation,
};
use starsync::modes::{analyze, NormalModes};
use starsync::sweep::{fit_power_law, frequency_sweep, protected_spread_at, scaling_fit, Spacing, SpreadSource, SweepSpec};
use starsync::{bogoliubov_map, build_canonical_transform, build_potential, exact_diagonalize, NetworkParams};

const OFFSETS: [f64; 3] = [0.9, 1.0, 1.1];

fn benchmark_base() -> NetworkParams {
    NetworkParams::new(1.0, vec![1.0, 0.2, 10.0, 1.0], vec![1.0, 1.0, 1.0]).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spectrum_convergence() -> Outcome {
    let spec = SweepSpec {
        g_min: 1.0,
        g_max: 100.0,
        steps: 50,
        offsets: OFFSETS.to_vec(),
        spacing: Spacing::Log,
    };
    let sweep = frequency_sweep(&benchmark_base(), &spec).unwrap();
    let tail: Vec<f64> = sweep.rows.iter().filter(|r| r.g >= 10.0).map(|r| r.spread_exact).collect();
    let monotone = tail.windows(2).all(|w| w[1] < w[0]);
    let (_, s10) = protected_spread_at(&benchmark_base(), 10.0, &OFFSETS).unwrap();
    let (_, s100) = protected_spread_at(&benchmark_base(), 100.0, &OFFSETS).unwrap();
    let ratio = s100 / s10;
    let ok = monotone && (ratio / 0.356 - 1.0).abs() <= 0.15;
    outcome(ok, format!("monotone={monotone} ratio={ratio:.4} (target 0.356 +/- 15%)"))
}

fn squeezing_exponent() -> Outcome {
    let spec = SweepSpec {
        g_min: 1.0,
        g_max: 100.0,
        steps: 50,
        offsets: OFFSETS.to_vec(),
        spacing: Spacing::Log,
    };
    let sweep = frequency_sweep(&benchmark_base(), &spec).unwrap();
    let fit = scaling_fit(&sweep, 20.0, SpreadSource::Exact).unwrap();
    let ok = (fit.exponent + 0.5).abs() <= 0.1;
    outcome(
        ok,
        format!("exponent={:.4} stderr={:.4} points={} (target -0.5 +/- 0.1)", fit.exponent, fit.stderr, fit.points),
    )
}

fn perturbation_order() -> Outcome {
    let base = build_potential(&sweep_network(10.0)).unwrap();
    let scales: Vec<f64> = (0..9).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let errors: Vec<f64> = scales
        .iter()
        .map(|&s| {
            let d = base.with_scaled_detuning(s);
            let modes = analyze(&d).unwrap();
            let exact = exact_diagonalize(&d).unwrap().aligned_to(&modes);
            modes
                .k_corr
                .iter()
                .zip(&exact.hooke)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let fit = fit_power_law(&scales, &errors).unwrap();
    let ok = (fit.exponent - 2.0).abs() <= 0.3;
    outcome(ok, format!("slope={:.4} (target 2.0 +/- 0.3)", fit.exponent))
}

fn sweep_network(g: f64) -> NetworkParams {
    starsync::sweep::network_at(&benchmark_base(), g, &OFFSETS).unwrap()
}

fn uniform_exactness() -> Outcome {
    let d = build_potential(&NetworkParams::uniform(5, 1.0, 10.0, 1.0).unwrap()).unwrap();
    let exact = exact_diagonalize(&d).unwrap();
    let expected = [1.0, 11.0, 11.0, 11.0, 11.0, 61.0];
    let exact_err = exact
        .eigenvalues
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let modes = analyze(&d).unwrap();
    let closed = [61.0, 1.0, 11.0, 11.0, 11.0, 11.0];
    let pert_err = modes.k_corr.iter().zip(closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = exact_err <= 1e-10 && pert_err <= 1e-10;
    outcome(ok, format!("exact_err={exact_err:.2e} perturbative_err={pert_err:.2e}"))
}

fn random_stable_network(rng: &mut StdRng) -> (NetworkParams, NormalModes) {
    loop {
        let n = rng.gen_range(2..=6);
        let hooke: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.2..5.0)).collect();
        let couplings: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..20.0)).collect();
        let params = NetworkParams::new(rng.gen_range(0.5..2.0), hooke, couplings).unwrap();
        let Ok(modes) = analyze(&build_potential(&params).unwrap()).and_then(|m| m.normal_modes()) else {
            continue;
        };
        if modes.check_stable().is_ok() {
            return (params, modes);
        }
    }
}

fn canonical_consistency() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut comm, mut bog) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (params, modes) = random_stable_network(&mut rng);
        let t = build_canonical_transform(&modes, &params).unwrap();
        comm = comm.max(t.commutation_residual());
        bog = bog.max(bogoliubov_map(&t).unwrap().symplectic_residual());
    }
    let ok = comm <= 1e-10 && bog <= 1e-10;
    outcome(ok, format!("commutation={comm:.2e} bogoliubov={bog:.2e} over 100 networks"))
}

fn protected_energy(state: &GaussianState, modes: &NormalModes) -> f64 {
    modes
        .protected_indices()
        .iter()
        .map(|&j| modes.freqs[j] * (state.occupation(j) + 0.5))
        .sum()
}

fn thermalization() -> Outcome {
    let params = NetworkParams::new(1.0, vec![1.0, 1.3, 0.8, 1.1], vec![4.0, 5.0, 6.0])
        .unwrap()
        .with_bath(0.5, 2.0)
        .unwrap();
    let modes = analyze(&build_potential(&params).unwrap()).unwrap().normal_modes().unwrap();
    let diss = make_dissipation(&modes, &params).unwrap();
    let preps: Vec<Preparation> = (0..modes.dim())
        .map(|j| Preparation::Coherent { re: 1.0 + 0.3 * j as f64, im: -0.2 })
        .collect();
    let state0 = init_state(&preps, Frame::Normal).unwrap();
    let t_end = 50.0 / diss.slowest_rate().unwrap();
    let end = evolve_gaussian(&state0, &diss, &modes, t_end).unwrap();
    let plus = modes.index_of(starsync::ModeLabel::Plus).unwrap();
    let minus = modes.index_of(starsync::ModeLabel::Minus).unwrap();
    let occ_err = (end.occupation(plus) - diss.nbar_plus)
        .abs()
        .max((end.occupation(minus) - diss.nbar_minus).abs());
    let e0 = protected_energy(&state0, &modes);
    let energy_err = time_grid(t_end, 101)
        .iter()
        .map(|&t| {
            let s = evolve_gaussian(&state0, &diss, &modes, t).unwrap();
            (protected_energy(&s, &modes) - e0).abs() / e0
        })
        .fold(0.0, f64::max);
    let ok = occ_err <= 1e-6 && energy_err <= 1e-10;
    outcome(ok, format!("occupation_err={occ_err:.2e} protected_energy_drift={energy_err:.2e}"))
}

fn oracle_equivalence() -> Outcome {
    let params = NetworkParams::new(1.0, vec![1.0, 1.2, 1.1], vec![1.0, 1.3])
        .unwrap()
        .with_bath(0.1, 0.0)
        .unwrap();
    let modes = analyze(&build_potential(&params).unwrap()).unwrap().normal_modes().unwrap();
    let diss = make_dissipation(&modes, &params).unwrap();
    let transform = build_canonical_transform(&modes, &params).unwrap();
    let preps = vec![Preparation::Coherent { re: 0.5, im: 0.0 }; modes.dim()];
    let times = time_grid(20.0, 201);
    let observables = all_positions(modes.dim());
    let gauss = position_trajectory(
        &init_state(&preps, Frame::Normal).unwrap(),
        &transform,
        &diss,
        &modes,
        &times,
        &observables,
    )
    .unwrap();
    let run = fock_oracle_evolve(&params, &modes, &diss, &preps, &times, &observables, &FockConfig::with_cutoff(8))
        .unwrap();
    let mut diff = 0.0f64;
    for obs in &observables {
        let label = obs.to_string();
        let (a, b) = (gauss.get(&label).unwrap(), run.trajectory.get(&label).unwrap());
        diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(diff, f64::max);
    }
    let ok = diff <= 1e-3 && run.max_trace_deviation < 1e-6;
    outcome(
        ok,
        format!("max_diff={diff:.2e} trace_deviation={:.2e} dim={}", run.max_trace_deviation, run.dim),
    )
}

/// Smallest and largest pairwise `|r|` of the outer positions over the last
/// quarter of `[0, 100 / gamma0]`, oscillators 1 and 2 displaced.
fn sync_correlations(g: f64) -> (f64, f64) {
    let gamma0 = 1.0;
    let params = sweep_network(g).with_bath(gamma0, 0.0).unwrap();
    let d = build_potential(&params).unwrap();
    let modes = exact_diagonalize(&d).unwrap().aligned_to(&analyze(&d).unwrap());
    let diss = make_dissipation(&modes, &params).unwrap();
    let transform = build_canonical_transform(&modes, &params).unwrap();
    let dim = params.dim();
    let mut x = vec![0.0; dim];
    x[0] = 1.0;
    x[1] = 1.0;
    let mut state0 = init_state(&vec![Preparation::Vacuum; dim], Frame::Physical).unwrap();
    state0.mean = physical_mean(&params, &x, &vec![0.0; dim]).unwrap();
    let times = time_grid(100.0 / gamma0, 4001);
    let observables = all_positions(3);
    let traj = position_trajectory(&state0, &transform, &diss, &modes, &times, &observables).unwrap();
    let labels: Vec<String> = observables.iter().map(|o| o.to_string()).collect();
    let m = sync_metrics_for(&traj, &labels, 0.25).unwrap();
    let max = m.pairs.iter().map(|p| p.correlation.abs()).fold(0.0, f64::max);
    (m.min_abs_correlation, max)
}

fn synchronization() -> Outcome {
    // The network counts as synchronized when every pair is locked, so both
    // couplings are judged by the weakest pair.
    let (strong, _) = sync_correlations(100.0);
    let (weak, weak_max) = sync_correlations(1.0);
    let ok = strong >= 0.99 && weak < 0.9;
    outcome(
        ok,
        format!("min|r|(g=100)={strong:.4} min|r|(g=1)={weak:.4} max|r|(g=1)={weak_max:.4}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("1 spectrum convergence", spectrum_convergence, Duration::from_secs(1)),
        ("2 squeezing exponent", squeezing_exponent, Duration::from_secs(1)),
        ("3 perturbation order", perturbation_order, Duration::from_secs(1)),
        ("4 uniform exactness", uniform_exactness, Duration::from_millis(100)),
        ("5 canonical consistency", canonical_consistency, Duration::from_secs(1)),
        ("6 thermalization", thermalization, Duration::from_secs(1)),
        ("7 oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("8 synchronization", synchronization, Duration::from_secs(5)),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        writeln!(
            out,
            "[{}] criterion {name}: {} time={:.3}s (limit {:.3}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        )
        .unwrap();
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
