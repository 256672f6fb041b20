//! Density-matrix integration of the normal-mode master equation on a
//! truncated number basis.
//!
//! The Hamiltonian `sum_j w_j a_j^dag a_j` is diagonal in the product Fock
//! basis, and each leaking mode carries
//!
//! ```text
//! D rho = g (nb + 1) (a rho a^dag - {a^dag a, rho}/2) + g nb (a^dag rho a - {a a^dag, rho}/2)
//! ```
//!
//! Integration is fixed-step RK4. In the interaction picture only the
//! dissipators remain (they commute with the number-diagonal Hamiltonian);
//! the lab picture keeps the commutator and exists to cross-check that.
//! The step is halved until halving it once more changes no recorded
//! observable by more than the configured tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::gaussian::Preparation;
use crate::dynamics::{check_time_grid, DissipationSpec, Observable, Trajectory};
use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::modes::NormalModes;
use crate::transform::build_canonical_transform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Interaction,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Number of Fock levels kept per mode.
    pub cutoff: usize,
    /// Largest allowed Hilbert-space dimension.
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_picture")]
    pub picture: Picture,
    /// Allowed change of any observable when the step is halved.
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    /// Allowed deviation of the trace from one.
    #[serde(default = "default_trace_tol")]
    pub trace_tol: f64,
    /// Number of output times at which positivity of `rho` is checked.
    #[serde(default = "default_positivity_checks")]
    pub positivity_checks: usize,
}

fn default_max_dim() -> usize {
    10_000
}
fn default_picture() -> Picture {
    Picture::Interaction
}
fn default_step_tol() -> f64 {
    1e-8
}
fn default_trace_tol() -> f64 {
    1e-6
}
fn default_positivity_checks() -> usize {
    3
}

impl FockConfig {
    pub fn with_cutoff(cutoff: usize) -> Self {
        FockConfig {
            cutoff,
            max_dim: default_max_dim(),
            picture: default_picture(),
            step_tol: default_step_tol(),
            trace_tol: default_trace_tol(),
            positivity_checks: default_positivity_checks(),
        }
    }
}

/// Oracle output: expectation values plus integrator diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockRun {
    /// Requested observables plus `purity_protected`.
    pub trajectory: Trajectory,
    pub max_trace_deviation: f64,
    /// Smallest eigenvalue of `rho` over the positivity checkpoints.
    pub min_eigenvalue: f64,
    /// Step size that passed the halving check.
    pub dt: f64,
    /// Largest observable change between `dt` and `dt / 2`.
    pub step_change: f64,
    pub dim: usize,
}

struct Space {
    cutoff: usize,
    dim: usize,
    /// `occ[j][idx]`: occupation of mode `j` in basis state `idx`.
    occ: Vec<Vec<usize>>,
    stride: Vec<usize>,
    energy: Vec<f64>,
}

impl Space {
    fn new(modes: usize, cutoff: usize, freqs: &[f64]) -> Self {
        let dim = cutoff.pow(modes as u32);
        let stride: Vec<usize> = (0..modes).map(|j| cutoff.pow((modes - 1 - j) as u32)).collect();
        let occ: Vec<Vec<usize>> = (0..modes)
            .map(|j| (0..dim).map(|idx| (idx / stride[j]) % cutoff).collect())
            .collect();
        let energy = (0..dim)
            .map(|idx| (0..modes).map(|j| freqs[j] * occ[j][idx] as f64).sum())
            .collect();
        Space {
            cutoff,
            dim,
            occ,
            stride,
            energy,
        }
    }
}

struct Channel {
    mode: usize,
    down: f64,
    up: f64,
}

struct Generator<'a> {
    space: &'a Space,
    channels: Vec<Channel>,
    lab: bool,
}

impl Generator<'_> {
    /// `out = L(rho)`, row-major `dim x dim`.
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let sp = self.space;
        let d = sp.dim;
        let top = sp.cutoff - 1;
        for a in 0..d {
            for b in 0..d {
                let mut acc = if self.lab {
                    Complex64::new(0.0, -(sp.energy[a] - sp.energy[b])) * rho[a * d + b]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for ch in &self.channels {
                    let occ = &sp.occ[ch.mode];
                    let (na, nb) = (occ[a], occ[b]);
                    let s = sp.stride[ch.mode];
                    let r = rho[a * d + b];
                    if ch.down != 0.0 {
                        if na < top && nb < top {
                            let f = (((na + 1) * (nb + 1)) as f64).sqrt();
                            acc += ch.down * f * rho[(a + s) * d + (b + s)];
                        }
                        acc -= 0.5 * ch.down * (na + nb) as f64 * r;
                    }
                    if ch.up != 0.0 {
                        if na > 0 && nb > 0 {
                            let f = ((na * nb) as f64).sqrt();
                            acc += ch.up * f * rho[(a - s) * d + (b - s)];
                        }
                        // truncated a a^dag: n + 1 below the top level, 0 on it
                        let ma = if na < top { na + 1 } else { 0 };
                        let mb = if nb < top { nb + 1 } else { 0 };
                        acc -= 0.5 * ch.up * (ma + mb) as f64 * r;
                    }
                }
                out[a * d + b] = acc;
            }
        }
    }

    fn rk4_step(&self, rho: &mut [Complex64], dt: f64, work: &mut [Vec<Complex64>; 5]) {
        let n = rho.len();
        let [k1, k2, k3, k4, tmp] = work;
        self.apply(rho, k1);
        for i in 0..n {
            tmp[i] = rho[i] + 0.5 * dt * k1[i];
        }
        self.apply(tmp, k2);
        for i in 0..n {
            tmp[i] = rho[i] + 0.5 * dt * k2[i];
        }
        self.apply(tmp, k3);
        for i in 0..n {
            tmp[i] = rho[i] + dt * k3[i];
        }
        self.apply(tmp, k4);
        for i in 0..n {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn single_mode_rho(prep: &Preparation, cutoff: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); cutoff]; cutoff];
    match *prep {
        Preparation::Vacuum => m[0][0] = Complex64::new(1.0, 0.0),
        Preparation::Coherent { re, im } => {
            let alpha = Complex64::new(re, im);
            let mut amp = vec![Complex64::new(0.0, 0.0); cutoff];
            amp[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
            for n in 1..cutoff {
                amp[n] = amp[n - 1] * alpha / (n as f64).sqrt();
            }
            let norm: f64 = amp.iter().map(|c| c.norm_sqr()).sum();
            for i in 0..cutoff {
                for j in 0..cutoff {
                    m[i][j] = amp[i] * amp[j].conj() / norm;
                }
            }
        }
        Preparation::Thermal { nbar } => {
            if !(nbar >= 0.0) {
                return Err(Error::Domain(format!("thermal occupation must be >= 0, got {nbar}")));
            }
            let q = nbar / (nbar + 1.0);
            let weights: Vec<f64> = (0..cutoff).map(|n| q.powi(n as i32)).collect();
            let norm: f64 = weights.iter().sum();
            for n in 0..cutoff {
                m[n][n] = Complex64::new(weights[n] / norm, 0.0);
            }
        }
    }
    Ok(m)
}

struct Recorder<'a> {
    space: &'a Space,
    modes: &'a NormalModes,
    eps: DMatrix<f64>,
    protected: Vec<usize>,
}

impl Recorder<'_> {
    fn mean_a(&self, rho: &[Complex64], j: usize) -> Complex64 {
        let sp = self.space;
        let d = sp.dim;
        let s = sp.stride[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..d {
            let n = sp.occ[j][k];
            if n + 1 < sp.cutoff {
                acc += ((n + 1) as f64).sqrt() * rho[(k + s) * d + k];
            }
        }
        acc
    }

    fn occupation(&self, rho: &[Complex64], j: usize) -> f64 {
        let d = self.space.dim;
        (0..d).map(|k| self.space.occ[j][k] as f64 * rho[k * d + k].re).sum()
    }

    /// Purity of the reduced state of the protected modes.
    fn protected_purity(&self, rho: &[Complex64]) -> f64 {
        let sp = self.space;
        let d = sp.dim;
        if self.protected.is_empty() {
            return 1.0;
        }
        let key = |idx: usize| -> usize {
            self.protected
                .iter()
                .fold(0, |acc, &j| acc * sp.cutoff + sp.occ[j][idx])
        };
        let leak_key = |idx: usize| -> usize {
            (0..sp.occ.len())
                .filter(|j| !self.protected.contains(j))
                .fold(0, |acc, j| acc * sp.cutoff + sp.occ[j][idx])
        };
        let pd = sp.cutoff.pow(self.protected.len() as u32);
        let mut reduced = vec![Complex64::new(0.0, 0.0); pd * pd];
        let keys: Vec<(usize, usize)> = (0..d).map(|i| (key(i), leak_key(i))).collect();
        for a in 0..d {
            for b in 0..d {
                if keys[a].1 == keys[b].1 {
                    reduced[keys[a].0 * pd + keys[b].0] += rho[a * d + b];
                }
            }
        }
        reduced.iter().map(|c| c.norm_sqr()).sum()
    }

    fn record(&self, rho: &[Complex64], t: f64, picture: Picture, observables: &[Observable]) -> Vec<f64> {
        let n = self.modes.dim();
        let mut quad = vec![0.0; 2 * n];
        for j in 0..n {
            let mut a = self.mean_a(rho, j);
            if picture == Picture::Interaction {
                a *= Complex64::from_polar(1.0, -self.modes.freqs[j] * t);
            }
            quad[2 * j] = std::f64::consts::SQRT_2 * a.re;
            quad[2 * j + 1] = std::f64::consts::SQRT_2 * a.im;
        }
        let m = self.modes.mass;
        let mut out: Vec<f64> = observables
            .iter()
            .map(|obs| match *obs {
                Observable::Position(l) => (0..n)
                    .map(|j| self.eps[(l, j)] * quad[2 * j] / (m * self.modes.freqs[j]).sqrt())
                    .sum(),
                Observable::Momentum(l) => (0..n)
                    .map(|j| self.eps[(l, j)] * quad[2 * j + 1] * (m * self.modes.freqs[j]).sqrt())
                    .sum(),
                Observable::Occupation(label) => self.occupation(rho, self.modes.index_of(label).unwrap()),
                Observable::NormalPosition(label) => {
                    let j = self.modes.index_of(label).unwrap();
                    quad[2 * j] / (m * self.modes.freqs[j]).sqrt()
                }
            })
            .collect();
        out.push(self.protected_purity(rho));
        out
    }
}

fn trace(rho: &[Complex64], d: usize) -> f64 {
    (0..d).map(|k| rho[k * d + k].re).sum()
}

fn min_eigenvalue(rho: &[Complex64], d: usize) -> f64 {
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (rho[i * d + j] + rho[j * d + i].conj()));
    m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

struct RunOutput {
    values: Vec<Vec<f64>>,
    max_trace_deviation: f64,
    min_eigenvalue: f64,
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    gen: &Generator,
    rec: &Recorder,
    rho0: &[Complex64],
    times: &[f64],
    dt: f64,
    picture: Picture,
    observables: &[Observable],
    positivity_at: &[usize],
) -> RunOutput {
    let d = gen.space.dim;
    let mut rho = rho0.to_vec();
    let mut work: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); d * d]);
    let mut values = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut max_trace_deviation: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for (i, &target) in times.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / dt).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                gen.rk4_step(&mut rho, h, &mut work);
            }
        }
        t = target;
        max_trace_deviation = max_trace_deviation.max((trace(&rho, d) - 1.0).abs());
        if positivity_at.contains(&i) {
            min_eig = min_eig.min(min_eigenvalue(&rho, d));
        }
        values.push(rec.record(&rho, t, picture, observables));
    }
    RunOutput {
        values,
        max_trace_deviation,
        min_eigenvalue: min_eig,
    }
}

/// Integrate the master equation from a product of per-mode preparations
/// (given in the normal frame, ordered like `modes.labels`).
pub fn fock_oracle_evolve(
    params: &NetworkParams,
    modes: &NormalModes,
    diss: &DissipationSpec,
    preps: &[Preparation],
    times: &[f64],
    observables: &[Observable],
    config: &FockConfig,
) -> Result<FockRun> {
    check_time_grid(times)?;
    diss.validate()?;
    let n = modes.dim();
    if preps.len() != n {
        return Err(Error::parameter("initial_state", format!("expected {n} mode preparations, got {}", preps.len())));
    }
    if config.cutoff < 2 {
        return Err(Error::parameter("cutoff", "need at least two Fock levels per mode"));
    }
    let dim = (config.cutoff as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > config.max_dim as u128 {
        return Err(Error::Resource(format!(
            "Hilbert dimension {}^{} = {} exceeds the cap of {}",
            config.cutoff, n, dim, config.max_dim
        )));
    }
    for obs in observables {
        obs.check(modes)?;
    }
    let transform = build_canonical_transform(modes, params)?;

    let space = Space::new(n, config.cutoff, &modes.freqs);
    let d = space.dim;
    let channels = modes
        .labels
        .iter()
        .enumerate()
        .filter_map(|(j, &label)| {
            let (gamma, nbar) = diss.channel(label);
            (gamma > 0.0).then(|| Channel {
                mode: j,
                down: gamma * (nbar + 1.0),
                up: gamma * nbar,
            })
        })
        .collect::<Vec<_>>();
    let gen = Generator {
        space: &space,
        channels,
        lab: config.picture == Picture::Lab,
    };
    let rec = Recorder {
        space: &space,
        modes,
        eps: transform.eps.clone(),
        protected: modes.protected_indices(),
    };

    let singles = preps
        .iter()
        .map(|p| single_mode_rho(p, config.cutoff))
        .collect::<Result<Vec<_>>>()?;
    let mut rho0 = vec![Complex64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for b in 0..d {
            rho0[a * d + b] = (0..n).fold(Complex64::new(1.0, 0.0), |acc, j| {
                acc * singles[j][space.occ[j][a]][space.occ[j][b]]
            });
        }
    }

    // Initial step from the fastest rate in the generator.
    let gamma_max = [diss.gamma_plus, diss.gamma_minus]
        .iter()
        .map(|g| g * (config.cutoff as f64) * 2.0)
        .fold(0.0, f64::max);
    let spread = if gen.lab {
        space.energy.iter().cloned().fold(0.0, f64::max)
    } else {
        0.0
    };
    let rate = gamma_max + spread;
    let mut dt = if rate > 0.0 { 0.2 / rate } else { f64::INFINITY };
    let longest = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(times[0]))
        .fold(0.0, f64::max);
    dt = dt.min(longest.max(f64::MIN_POSITIVE));

    let checks: Vec<usize> = if config.positivity_checks == 0 {
        Vec::new()
    } else {
        let k = config.positivity_checks.min(times.len());
        (1..=k).map(|i| i * (times.len() - 1) / k).collect()
    };

    let mut coarse = integrate(&gen, &rec, &rho0, times, dt, config.picture, observables, &[]);
    for _ in 0..12 {
        let fine = integrate(&gen, &rec, &rho0, times, dt / 2.0, config.picture, observables, &checks);
        let change = coarse
            .values
            .iter()
            .zip(&fine.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        if change < config.step_tol {
            if fine.max_trace_deviation > config.trace_tol {
                return Err(Error::IntegrationAccuracy(format!(
                    "trace drifted by {:.3e}",
                    fine.max_trace_deviation
                )));
            }
            let mut trajectory = Trajectory::new(times.to_vec());
            let mut labels: Vec<String> = observables.iter().map(|o| o.to_string()).collect();
            labels.push("purity_protected".into());
            for (k, label) in labels.into_iter().enumerate() {
                trajectory.push(label, fine.values.iter().map(|row| row[k]).collect())?;
            }
            trajectory.metadata.insert("engine".into(), "fock".into());
            trajectory.metadata.insert("cutoff".into(), config.cutoff.into());
            trajectory.metadata.insert("dt".into(), (dt / 2.0).into());
            return Ok(FockRun {
                trajectory,
                max_trace_deviation: fine.max_trace_deviation,
                min_eigenvalue: fine.min_eigenvalue,
                dt: dt / 2.0,
                step_change: change,
                dim: d,
            });
        }
        dt /= 2.0;
        coarse = fine;
    }
    Err(Error::IntegrationAccuracy(
        "step halving did not converge to the requested tolerance".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{all_positions, make_dissipation};
    use crate::model::build_potential;
    use crate::modes::{analyze, ModeLabel};

    fn network() -> (NetworkParams, NormalModes, DissipationSpec) {
        let p = NetworkParams::new(1.0, vec![1.0, 1.1, 1.0], vec![2.0, 2.2])
            .unwrap()
            .with_bath(0.3, 0.4)
            .unwrap();
        let modes = analyze(&build_potential(&p).unwrap()).unwrap().normal_modes().unwrap();
        let d = make_dissipation(&modes, &p).unwrap();
        (p, modes, d)
    }

    #[test]
    fn dimension_cap() {
        let (p, modes, d) = network();
        let mut cfg = FockConfig::with_cutoff(30);
        cfg.max_dim = 10_000;
        let e = fock_oracle_evolve(&p, &modes, &d, &[Preparation::Vacuum; 3], &[0.0, 1.0], &[], &cfg);
        assert!(matches!(e, Err(Error::Resource(_))));
    }

    #[test]
    fn lab_and_interaction_agree() {
        let (p, modes, d) = network();
        let preps = [
            Preparation::Coherent { re: 0.3, im: 0.1 },
            Preparation::Thermal { nbar: 0.2 },
            Preparation::Coherent { re: -0.2, im: 0.0 },
        ];
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let mut obs = all_positions(3);
        obs.push(Observable::Occupation(ModeLabel::Plus));
        let mut cfg = FockConfig::with_cutoff(4);
        let inter = fock_oracle_evolve(&p, &modes, &d, &preps, &times, &obs, &cfg).unwrap();
        cfg.picture = Picture::Lab;
        let lab = fock_oracle_evolve(&p, &modes, &d, &preps, &times, &obs, &cfg).unwrap();
        for (a, b) in inter.trajectory.series.iter().zip(&lab.trajectory.series) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-7, "{x} vs {y}");
            }
        }
        assert!(inter.max_trace_deviation < 1e-10);
        assert!(inter.min_eigenvalue > -1e-8);
    }

    #[test]
    fn protected_purity_is_conserved() {
        let (p, modes, d) = network();
        let j = modes.index_of(ModeLabel::Zero(1)).unwrap();
        let mut preps = [Preparation::Vacuum; 3];
        preps[j] = Preparation::Coherent { re: 0.4, im: 0.0 };
        preps[0] = Preparation::Coherent { re: 0.4, im: 0.0 };
        let times: Vec<f64> = (0..=5).map(|i| i as f64).collect();
        let run = fock_oracle_evolve(&p, &modes, &d, &preps, &times, &[], &FockConfig::with_cutoff(5)).unwrap();
        let purity = run.trajectory.get("purity_protected").unwrap();
        assert!(purity.iter().all(|x| (x - purity[0]).abs() < 1e-9));
    }
}
