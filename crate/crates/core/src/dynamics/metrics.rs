//! Synchronization measures on expectation-value trajectories.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Minimum number of dominant periods a window must hold.
pub const MIN_PERIODS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub a: String,
    pub b: String,
    /// Pearson correlation over the window, in `[-1, 1]`.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncMetrics {
    pub window_start: f64,
    pub window_end: f64,
    pub signals: Vec<String>,
    /// Angular frequency of the spectral peak of each signal.
    pub dominant_freqs: Vec<f64>,
    pub pairs: Vec<PairCorrelation>,
    pub max_freq_difference: f64,
    /// Smallest `|correlation|` over all pairs. Anti-phase locking counts
    /// as locking.
    pub min_abs_correlation: f64,
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return if saa == sbb { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 8 {
        return Err(Error::Diagnostics(format!("window holds only {} samples", times.len())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uneven = times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt);
    if uneven {
        return Err(Error::Diagnostics("spectral analysis needs a uniform time grid".into()));
    }
    Ok(dt)
}

/// Hann-windowed power spectrum of a uniformly sampled signal (mean removed),
/// zero padded eightfold. Returns `(angular frequencies, power)` up to Nyquist.
pub fn power_spectrum(times: &[f64], values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = uniform_step(times)?;
    let n = values.len();
    let padded = (8 * n).next_power_of_two();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    buf.resize(padded, Complex::new(0.0, 0.0));
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(padded);
    fft.process(&mut buf);
    let half = padded / 2;
    let dw = 2.0 * std::f64::consts::PI / (padded as f64 * dt);
    let freqs = (0..=half).map(|k| k as f64 * dw).collect();
    let power = buf[..=half].iter().map(|c| c.norm_sqr()).collect();
    Ok((freqs, power))
}

/// Angular frequency of the strongest spectral peak, refined by a parabola
/// through the three bins around the maximum.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Result<f64> {
    let (freqs, power) = power_spectrum(times, values)?;
    let (k, _) = power
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
    if k == 0 || power[k] <= 0.0 {
        return Err(Error::Diagnostics("signal has no oscillating component".into()));
    }
    if k + 1 >= power.len() {
        return Ok(freqs[k]);
    }
    let (l, c, r) = (power[k - 1].sqrt(), power[k].sqrt(), power[k + 1].sqrt());
    let denom = l - 2.0 * c + r;
    let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    Ok(freqs[k] + shift * (freqs[1] - freqs[0]))
}

/// Pairwise correlations and dominant frequencies of the selected signals
/// over the last `window` fraction of the trajectory.
pub fn sync_metrics_for(traj: &Trajectory, labels: &[String], window: f64) -> Result<SyncMetrics> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::parameter("window", format!("must lie in (0, 1], got {window}")));
    }
    if labels.len() < 2 {
        return Err(Error::Diagnostics("need at least two signals".into()));
    }
    let n = traj.times.len();
    let start = ((1.0 - window) * (n - 1) as f64).floor() as usize;
    let times = &traj.times[start..];
    let span = times[times.len() - 1] - times[0];

    let mut signals = Vec::with_capacity(labels.len());
    for l in labels {
        let s = traj
            .get(l)
            .ok_or_else(|| Error::parameter("signals", format!("trajectory has no series `{l}`")))?;
        signals.push(&s[start..]);
    }
    let mut dominant = Vec::with_capacity(labels.len());
    for (l, s) in labels.iter().zip(&signals) {
        let w = dominant_frequency(times, s)?;
        let periods = span * w / (2.0 * std::f64::consts::PI);
        if periods < MIN_PERIODS {
            return Err(Error::Diagnostics(format!(
                "window of length {span:.4} holds only {periods:.2} periods of `{l}`"
            )));
        }
        dominant.push(w);
    }
    let mut pairs = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            pairs.push(PairCorrelation {
                a: labels[i].clone(),
                b: labels[j].clone(),
                correlation: pearson(signals[i], signals[j]),
            });
        }
    }
    let max_freq_difference = dominant.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - dominant.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_abs_correlation = pairs.iter().map(|p| p.correlation.abs()).fold(f64::INFINITY, f64::min);
    Ok(SyncMetrics {
        window_start: times[0],
        window_end: times[times.len() - 1],
        signals: labels.to_vec(),
        dominant_freqs: dominant,
        pairs,
        max_freq_difference,
        min_abs_correlation,
    })
}

/// [`sync_metrics_for`] over every physical position series `x_*`.
pub fn sync_metrics(traj: &Trajectory, window: f64) -> Result<SyncMetrics> {
    let labels: Vec<String> = traj.labels.iter().filter(|l| l.starts_with("x_")).cloned().collect();
    sync_metrics_for(traj, &labels, window)
}
