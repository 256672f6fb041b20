//! Open-system dynamics in the normal-mode frame.
//!
//! Protected modes evolve unitarily; the two leaking modes each carry a
//! thermal dissipator. Gaussian moments close under this dynamics, so the
//! primary engine ([`gaussian`]) propagates means and covariances in closed
//! form. [`fock`] integrates the same master equation on a truncated number
//! basis and serves as an independent check.

pub mod fock;
pub mod gaussian;
pub mod metrics;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{thermal_occupation, NetworkParams};
use crate::modes::{ModeLabel, NormalModes};
use crate::transform::CanonicalTransform;

pub use fock::{fock_oracle_evolve, FockConfig, FockRun, Picture};
pub use gaussian::{evolve_gaussian, init_state, Frame, GaussianState, Preparation};
pub use metrics::{sync_metrics, SyncMetrics};

/// Rates and bath occupations of the two leaking modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationSpec {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub nbar_plus: f64,
    pub nbar_minus: f64,
}

impl DissipationSpec {
    pub fn closed() -> Self {
        DissipationSpec {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            nbar_plus: 0.0,
            nbar_minus: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("gamma_plus", self.gamma_plus),
            ("gamma_minus", self.gamma_minus),
            ("nbar_plus", self.nbar_plus),
            ("nbar_minus", self.nbar_minus),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::parameter(name, format!("must be finite and >= 0, got {x}")));
            }
        }
        Ok(())
    }

    /// Rate and bath occupation felt by a mode with the given label.
    pub fn channel(&self, label: ModeLabel) -> (f64, f64) {
        match label {
            ModeLabel::Plus => (self.gamma_plus, self.nbar_plus),
            ModeLabel::Minus => (self.gamma_minus, self.nbar_minus),
            ModeLabel::Zero(_) => (0.0, 0.0),
        }
    }

    /// Smallest non-zero leaking rate, if any.
    pub fn slowest_rate(&self) -> Option<f64> {
        [self.gamma_plus, self.gamma_minus]
            .into_iter()
            .filter(|g| *g > 0.0)
            .reduce(f64::min)
    }
}

/// Split the bath rate over the leaking modes, `gamma+ = gamma0 cos^2(theta)`
/// and `gamma- = gamma0 sin^2(theta)`, with Bose-Einstein occupations at the
/// mode frequencies.
pub fn make_dissipation(modes: &NormalModes, params: &NetworkParams) -> Result<DissipationSpec> {
    let (sin, cos) = modes.theta_mix.sin_cos();
    let freq = |label| {
        modes
            .index_of(label)
            .map(|i| modes.freqs[i])
            .ok_or_else(|| Error::Contract(format!("mode set has no {label} mode")))
    };
    let spec = DissipationSpec {
        gamma_plus: params.bath_rate * cos * cos,
        gamma_minus: params.bath_rate * sin * sin,
        nbar_plus: thermal_occupation(freq(ModeLabel::Plus)?, params.bath_temp)?,
        nbar_minus: thermal_occupation(freq(ModeLabel::Minus)?, params.bath_temp)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// An expectation value that can be recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Physical position of oscillator `l` (0 based; label `x_{l+1}`).
    Position(usize),
    /// Physical momentum of oscillator `l`.
    Momentum(usize),
    /// Occupation of a normal mode.
    Occupation(ModeLabel),
    /// Normal coordinate of a mode.
    NormalPosition(ModeLabel),
}

fn parse_mode(s: &str) -> Option<ModeLabel> {
    match s {
        "plus" => Some(ModeLabel::Plus),
        "minus" => Some(ModeLabel::Minus),
        _ => s
            .strip_prefix("zero_")
            .and_then(|j| j.parse().ok())
            .filter(|j| *j >= 1)
            .map(ModeLabel::Zero),
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::parameter("observables", format!("unknown observable `{s}`"));
        let index = |rest: &str| -> Result<usize> {
            match rest.parse::<usize>() {
                Ok(l) if l >= 1 => Ok(l - 1),
                _ => Err(bad()),
            }
        };
        if let Some(rest) = s.strip_prefix("x_") {
            index(rest).map(Observable::Position)
        } else if let Some(rest) = s.strip_prefix("p_") {
            index(rest).map(Observable::Momentum)
        } else if let Some(rest) = s.strip_prefix("n_") {
            parse_mode(rest).map(Observable::Occupation).ok_or_else(bad)
        } else if let Some(rest) = s.strip_prefix("xt_") {
            parse_mode(rest).map(Observable::NormalPosition).ok_or_else(bad)
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Position(l) => write!(f, "x_{}", l + 1),
            Observable::Momentum(l) => write!(f, "p_{}", l + 1),
            Observable::Occupation(m) => write!(f, "n_{m}"),
            Observable::NormalPosition(m) => write!(f, "xt_{m}"),
        }
    }
}

impl Observable {
    fn check(&self, modes: &NormalModes) -> Result<()> {
        let ok = match self {
            Observable::Position(l) | Observable::Momentum(l) => *l < modes.dim(),
            Observable::Occupation(m) | Observable::NormalPosition(m) => modes.index_of(*m).is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::parameter("observables", format!("`{self}` does not exist in this network")))
        }
    }
}

/// Positions of every physical oscillator, `x_1 .. x_{N+1}`.
pub fn all_positions(dim: usize) -> Vec<Observable> {
    (0..dim).map(Observable::Position).collect()
}

pub fn parse_observables(labels: &[String]) -> Result<Vec<Observable>> {
    labels.iter().map(|s| s.parse()).collect()
}

/// Time series of expectation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// One sequence per label, each as long as `times`.
    pub series: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>) -> Self {
        Trajectory {
            times,
            labels: Vec::new(),
            series: Vec::new(),
            metadata: serde_json::Map::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::Contract(format!(
                "series has {} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        self.labels.push(label.into());
        self.series.push(values);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.series[i].as_slice())
    }
}

pub(crate) fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Contract("time grid is empty".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Contract("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `samples` equally spaced times on `[0, t_max]`.
pub fn time_grid(t_max: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![0.0];
    }
    let dt = t_max / (samples - 1) as f64;
    (0..samples).map(|i| i as f64 * dt).collect()
}

/// Evaluate an observable on a Gaussian state given in the normal frame.
pub(crate) fn gaussian_observable(
    obs: Observable,
    state: &GaussianState,
    transform: &CanonicalTransform,
    modes: &NormalModes,
) -> f64 {
    match obs {
        Observable::Position(l) => transform.physical_position(&state.mean, l),
        Observable::Momentum(l) => transform.physical_momentum(&state.mean, l),
        Observable::Occupation(m) => state.occupation(modes.index_of(m).expect("checked label")),
        Observable::NormalPosition(m) => {
            let j = modes.index_of(m).expect("checked label");
            state.mean[2 * j] / (modes.mass * modes.freqs[j]).sqrt()
        }
    }
}

/// Expectation values along `times`, starting from `state0` (either frame).
///
/// Each time point is evaluated independently from the closed-form
/// propagator, so the result carries no integrator error. Physical means
/// include the momentum term and the damped leaking transients; once those
/// have decayed each `x_l(t)` is a superposition of protected modes only.
pub fn position_trajectory(
    state0: &GaussianState,
    transform: &CanonicalTransform,
    diss: &DissipationSpec,
    modes: &NormalModes,
    times: &[f64],
    observables: &[Observable],
) -> Result<Trajectory> {
    check_time_grid(times)?;
    for obs in observables {
        obs.check(modes)?;
    }
    let normal = state0.to_frame(Frame::Normal, transform)?;
    let mut values = vec![Vec::with_capacity(times.len()); observables.len()];
    for &t in times {
        let s = evolve_gaussian(&normal, diss, modes, t)?;
        for (slot, obs) in values.iter_mut().zip(observables) {
            slot.push(gaussian_observable(*obs, &s, transform, modes));
        }
    }
    let mut traj = Trajectory::new(times.to_vec());
    for (obs, v) in observables.iter().zip(values) {
        traj.push(obs.to_string(), v)?;
    }
    traj.metadata.insert("engine".into(), "gaussian".into());
    traj.metadata.insert("gamma_plus".into(), diss.gamma_plus.into());
    traj.metadata.insert("gamma_minus".into(), diss.gamma_minus.into());
    traj.metadata.insert("nbar_plus".into(), diss.nbar_plus.into());
    traj.metadata.insert("nbar_minus".into(), diss.nbar_minus.into());
    traj.metadata.insert(
        "normal_freqs".into(),
        serde_json::Value::from(modes.freqs.clone()),
    );
    Ok(traj)
}

/// Mean vector of interleaved quadratures from physical positions and
/// momenta, in the physical frame.
pub fn physical_mean(params: &NetworkParams, x: &[f64], p: &[f64]) -> Result<DVector<f64>> {
    let n = params.dim();
    if x.len() != n || p.len() != n {
        return Err(Error::parameter("mean", format!("expected {n} positions and momenta")));
    }
    let w = params.bare_frequencies();
    Ok(DVector::from_fn(2 * n, |i, _| {
        let l = i / 2;
        let scale = (params.mass * w[l]).sqrt();
        if i % 2 == 0 {
            x[l] * scale
        } else {
            p[l] / scale
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_potential;
    use crate::modes::analyze;
    use crate::transform::build_canonical_transform;
    use approx::assert_relative_eq;

    fn setup(params: &NetworkParams) -> (NormalModes, CanonicalTransform) {
        let modes = analyze(&build_potential(params).unwrap()).unwrap().normal_modes().unwrap();
        let t = build_canonical_transform(&modes, params).unwrap();
        (modes, t)
    }

    #[test]
    fn rate_split_three_oscillators() {
        let p = NetworkParams::uniform(2, 1.0, 1.0, 1.0).unwrap().with_bath(0.5, 0.0).unwrap();
        let (modes, _) = setup(&p);
        let d = make_dissipation(&modes, &p).unwrap();
        assert_relative_eq!(d.gamma_plus, 0.8 * 0.5, max_relative = 1e-14);
        assert_relative_eq!(d.gamma_minus, 0.2 * 0.5, max_relative = 1e-14);
        assert_eq!(d.nbar_plus, 0.0);
        assert_eq!(d.nbar_minus, 0.0);

        let p0 = p.clone().with_bath(0.0, 2.0).unwrap();
        let d = make_dissipation(&modes, &p0).unwrap();
        assert_eq!((d.gamma_plus, d.gamma_minus), (0.0, 0.0));
        assert!(d.nbar_plus > 0.0 && d.nbar_minus > d.nbar_plus);
    }

    #[test]
    fn observable_names_round_trip() {
        for s in ["x_1", "p_4", "n_plus", "n_minus", "n_zero_2", "xt_zero_1"] {
            let o: Observable = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        for s in ["x_0", "q_1", "n_zero_0", "n_foo", "x_"] {
            assert!(s.parse::<Observable>().is_err(), "{s}");
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let p = NetworkParams::uniform(2, 1.0, 1.0, 1.0).unwrap();
        let (modes, t) = setup(&p);
        let s = init_state(&[Preparation::Vacuum; 3], Frame::Normal).unwrap();
        let e = position_trajectory(&s, &t, &DissipationSpec::closed(), &modes, &[], &all_positions(3));
        assert!(matches!(e, Err(Error::Contract(_))));
    }

    #[test]
    fn vacuum_stays_at_rest() {
        let p = NetworkParams::new(1.0, vec![1.0, 0.5, 2.0, 1.0], vec![3.0, 3.2, 2.9]).unwrap().with_bath(0.3, 0.7).unwrap();
        let (modes, t) = setup(&p);
        let d = make_dissipation(&modes, &p).unwrap();
        let s = init_state(&[Preparation::Vacuum; 4], Frame::Physical).unwrap();
        let traj = position_trajectory(&s, &t, &d, &modes, &time_grid(10.0, 50), &all_positions(4)).unwrap();
        assert!(traj.series.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn single_protected_mode_is_a_cosine() {
        let p = NetworkParams::new(1.0, vec![1.0, 1.2, 0.9, 1.0], vec![8.0, 8.5, 9.0]).unwrap().with_bath(0.4, 0.0).unwrap();
        let (modes, t) = setup(&p);
        let d = make_dissipation(&modes, &p).unwrap();
        let j = modes.index_of(ModeLabel::Zero(2)).unwrap();
        let mut preps = vec![Preparation::Vacuum; 4];
        preps[j] = Preparation::Coherent { re: 0.8, im: 0.0 };
        let s = init_state(&preps, Frame::Normal).unwrap();
        let times = time_grid(30.0, 301);
        let traj = position_trajectory(&s, &t, &d, &modes, &times, &all_positions(4)).unwrap();
        let w = modes.freqs[j];
        let x0 = 2f64.sqrt() * 0.8 / (modes.mass * w).sqrt();
        for l in 0..4 {
            let series = traj.get(&format!("x_{}", l + 1)).unwrap();
            for (tt, x) in times.iter().zip(series) {
                let want = t.eps[(l, j)] * x0 * (w * tt).cos();
                assert!((x - want).abs() < 1e-10, "l={l} t={tt}");
            }
        }
    }

    #[test]
    fn leaking_excitation_dies_out() {
        let p = NetworkParams::uniform(3, 1.0, 2.0, 1.0).unwrap().with_bath(1.0, 0.0).unwrap();
        let (modes, t) = setup(&p);
        let d = make_dissipation(&modes, &p).unwrap();
        let preps = vec![
            Preparation::Coherent { re: 1.0, im: 0.0 },
            Preparation::Coherent { re: 0.0, im: 1.0 },
            Preparation::Vacuum,
            Preparation::Vacuum,
        ];
        let s = init_state(&preps, Frame::Normal).unwrap();
        let times = time_grid(200.0, 2001);
        let traj = position_trajectory(&s, &t, &d, &modes, &times, &all_positions(4)).unwrap();
        let slow = d.slowest_rate().unwrap();
        let amp: f64 = (0..4).map(|l| t.eps[(l, 0)].abs() + t.eps[(l, 1)].abs()).sum::<f64>() * 2.0;
        for (i, tt) in times.iter().enumerate() {
            let envelope = amp * (-slow * tt / 2.0).exp();
            for series in &traj.series {
                assert!(series[i].abs() <= envelope + 1e-12);
            }
        }
        assert!(traj.series.iter().all(|s| s.last().unwrap().abs() < 1e-3));
    }
}
