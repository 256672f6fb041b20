//! Browser bindings. Every entry point takes and returns JSON text; failures
//! come back as `{"error": {"code", "message"}}`.

use serde::Deserialize;
use serde_json::{json, Value};
use starsync::dynamics::metrics::sync_metrics_for;
use starsync::dynamics::{
    all_positions, init_state, make_dissipation, physical_mean, position_trajectory, time_grid, Frame, Preparation,
};
use starsync::modes::analyze;
use starsync::sweep::{frequency_sweep, network_at, scaling_fit, Spacing, SpreadSource, SweepSpec};
use starsync::{build_canonical_transform, build_potential, exact_diagonalize, Error, NetworkParams};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Deserialize)]
struct Network {
    #[serde(default = "one")]
    mass: f64,
    hooke: Vec<f64>,
    couplings: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Network {
    fn params(&self) -> Result<NetworkParams, Error> {
        NetworkParams::new(self.mass, self.hooke.clone(), self.couplings.clone())
    }
}

#[derive(Deserialize)]
struct SweepRequest {
    network: Network,
    g_min: f64,
    g_max: f64,
    steps: usize,
    offsets: Vec<f64>,
}

#[derive(Deserialize)]
struct TrajectoryRequest {
    network: Network,
    /// Common coupling; the actual couplings are `g + offsets`.
    g: f64,
    offsets: Vec<f64>,
    gamma0: f64,
    /// Initial physical displacement of each oscillator.
    displacement: Vec<f64>,
    t_max: f64,
    samples: usize,
}

fn respond(result: Result<Value, Error>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": { "code": e.code(), "message": e.to_string() } }).to_string(),
    }
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| Error::parameter("request", e.to_string()))
}

pub fn spectrum_json(request: &str) -> String {
    respond((|| {
        let params = parse::<Network>(request)?.params()?;
        let decomp = build_potential(&params)?;
        let pert = analyze(&decomp)?;
        let exact = exact_diagonalize(&decomp)?.aligned_to(&pert);
        Ok(json!({
            "labels": exact.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "perturbative": pert.freqs,
            "exact": exact.freqs,
            "xi": decomp.xi,
            "regime_warning": pert.regime_warning,
            "theta_mix": pert.theta_mix,
        }))
    })())
}

pub fn sweep_json(request: &str) -> String {
    respond((|| {
        let req: SweepRequest = parse(request)?;
        let spec = SweepSpec {
            g_min: req.g_min,
            g_max: req.g_max,
            steps: req.steps,
            offsets: req.offsets,
            spacing: Spacing::Log,
        };
        let result = frequency_sweep(&req.network.params()?, &spec)?;
        let column = |i: usize| result.rows.iter().map(|r| r.exact[i]).collect::<Vec<_>>();
        let fit = scaling_fit(&result, (spec.g_min * spec.g_max).sqrt(), SpreadSource::Exact).ok();
        Ok(json!({
            "g": result.g_grid(),
            "labels": result.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "exact": (0..result.labels.len()).map(column).collect::<Vec<_>>(),
            "spread": result.rows.iter().map(|r| r.spread_exact).collect::<Vec<_>>(),
            "fit": fit,
        }))
    })())
}

pub fn trajectory_json(request: &str) -> String {
    respond((|| {
        let req: TrajectoryRequest = parse(request)?;
        let params = network_at(&req.network.params()?, req.g, &req.offsets)?.with_bath(req.gamma0, 0.0)?;
        let decomp = build_potential(&params)?;
        let modes = exact_diagonalize(&decomp)?.aligned_to(&analyze(&decomp)?);
        modes.check_stable()?;
        let diss = make_dissipation(&modes, &params)?;
        let transform = build_canonical_transform(&modes, &params)?;
        let dim = params.dim();
        let mut state = init_state(&vec![Preparation::Vacuum; dim], Frame::Physical)?;
        state.mean = physical_mean(&params, &req.displacement, &vec![0.0; dim])?;
        let times = time_grid(req.t_max, req.samples);
        let traj = position_trajectory(&state, &transform, &diss, &modes, &times, &all_positions(dim))?;
        let outer: Vec<String> = (1..=params.n()).map(|l| format!("x_{l}")).collect();
        let metrics = if outer.len() > 1 { sync_metrics_for(&traj, &outer, 0.25).ok() } else { None };
        Ok(json!({
            "t": traj.times,
            "labels": traj.labels,
            "series": traj.series,
            "metrics": metrics,
        }))
    })())
}

#[wasm_bindgen]
pub fn spectrum(request: &str) -> String {
    spectrum_json(request)
}

#[wasm_bindgen]
pub fn sweep(request: &str) -> String {
    sweep_json(request)
}

#[wasm_bindgen]
pub fn trajectory(request: &str) -> String {
    trajectory_json(request)
}
