//! Gaussian states and their closed-form evolution.
//!
//! Quadratures are interleaved, `(X_1, P_1, X_2, P_2, ..)`, with
//! `a = (X + iP)/sqrt(2)`, so the vacuum covariance is `I/2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::DissipationSpec;
use crate::error::{Error, Result};
use crate::modes::NormalModes;
use crate::transform::CanonicalTransform;

/// Coordinates a state is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Bare oscillators, quadratures scaled by `sqrt(k_l / m)`.
    Physical,
    /// Normal modes, quadratures scaled by the normal frequencies.
    Normal,
}

/// Single-mode preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Preparation {
    Vacuum,
    /// Coherent state with amplitude `re + i im`.
    Coherent {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Thermal { nbar: f64 },
}

impl Preparation {
    fn validate(&self) -> Result<()> {
        match *self {
            Preparation::Vacuum => Ok(()),
            Preparation::Coherent { re, im } if re.is_finite() && im.is_finite() => Ok(()),
            Preparation::Coherent { .. } => Err(Error::Domain("coherent amplitude must be finite".into())),
            Preparation::Thermal { nbar } if nbar.is_finite() && nbar >= 0.0 => Ok(()),
            Preparation::Thermal { nbar } => Err(Error::Domain(format!("thermal occupation must be >= 0, got {nbar}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub frame: Frame,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Product state of independent single-mode preparations.
pub fn init_state(preps: &[Preparation], frame: Frame) -> Result<GaussianState> {
    let n = preps.len();
    let mut mean = DVector::zeros(2 * n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for (j, prep) in preps.iter().enumerate() {
        prep.validate()?;
        let (var, re, im) = match *prep {
            Preparation::Vacuum => (0.5, 0.0, 0.0),
            Preparation::Coherent { re, im } => (0.5, re, im),
            Preparation::Thermal { nbar } => (nbar + 0.5, 0.0, 0.0),
        };
        mean[2 * j] = std::f64::consts::SQRT_2 * re;
        mean[2 * j + 1] = std::f64::consts::SQRT_2 * im;
        cov[(2 * j, 2 * j)] = var;
        cov[(2 * j + 1, 2 * j + 1)] = var;
    }
    Ok(GaussianState { frame, mean, cov })
}

/// Standard symplectic form for interleaved quadratures.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for j in 0..modes {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

impl GaussianState {
    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    /// Mean occupation `<a^dag a>` of mode `j`.
    pub fn occupation(&self, j: usize) -> f64 {
        let (x, p) = (self.mean[2 * j], self.mean[2 * j + 1]);
        0.5 * (self.cov[(2 * j, 2 * j)] + self.cov[(2 * j + 1, 2 * j + 1)] + x * x + p * p) - 0.5
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + (i/2) Omega`;
    /// a physical state has it `>= 0`.
    pub fn uncertainty_margin(&self) -> f64 {
        let n = self.modes();
        let omega = symplectic_form(n);
        let h = DMatrix::from_fn(2 * n, 2 * n, |i, j| Complex64::new(self.cov[(i, j)], 0.5 * omega[(i, j)]));
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Symmetric covariance satisfying the uncertainty relation within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let asym = (&self.cov - self.cov.transpose()).amax();
        asym <= 1e-12 * self.cov.amax().max(1.0) && self.uncertainty_margin() >= -tol
    }

    /// Apply a linear symplectic map `r -> S r`.
    pub fn transformed(&self, s: &DMatrix<f64>, frame: Frame) -> GaussianState {
        GaussianState {
            frame,
            mean: s * &self.mean,
            cov: s * &self.cov * s.transpose(),
        }
    }

    pub fn to_frame(&self, frame: Frame, t: &CanonicalTransform) -> Result<GaussianState> {
        if self.modes() != t.dim() {
            return Err(Error::Contract(format!(
                "state has {} modes, transform has {}",
                self.modes(),
                t.dim()
            )));
        }
        Ok(match (self.frame, frame) {
            (a, b) if a == b => self.clone(),
            (Frame::Physical, Frame::Normal) => self.transformed(&t.quadrature_to_normal(), Frame::Normal),
            (Frame::Normal, Frame::Physical) => self.transformed(&t.quadrature_to_physical(), Frame::Physical),
            _ => unreachable!(),
        })
    }
}

/// Propagate a normal-frame state over a time `t`.
///
/// Each mode rotates at its own frequency. A leaking mode with rate `g` and
/// bath occupation `nb` shrinks its quadratures by `exp(-g t / 2)` and
/// relaxes its occupation as `nb + (n0 - nb) exp(-g t)`; protected modes are
/// left unitary. The propagator is `r -> K r` with `K` block diagonal,
/// `cov -> K cov K^T + diag((1 - exp(-g t)) (nb + 1/2))`.
pub fn evolve_gaussian(
    state0: &GaussianState,
    diss: &DissipationSpec,
    modes: &NormalModes,
    t: f64,
) -> Result<GaussianState> {
    if state0.frame != Frame::Normal {
        return Err(Error::Contract("evolution requires a state in the normal frame".into()));
    }
    if state0.modes() != modes.dim() {
        return Err(Error::Contract(format!(
            "state has {} modes, network has {}",
            state0.modes(),
            modes.dim()
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Contract(format!("evolution time must be >= 0, got {t}")));
    }
    diss.validate()?;
    let n = modes.dim();
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    let mut noise = DMatrix::zeros(2 * n, 2 * n);
    for (j, &label) in modes.labels.iter().enumerate() {
        let w = modes.freqs[j];
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Unstable(format!("mode {label} has frequency {w}")));
        }
        let (gamma, nbar) = diss.channel(label);
        let damp = (-0.5 * gamma * t).exp();
        let (sin, cos) = (w * t).sin_cos();
        k[(2 * j, 2 * j)] = damp * cos;
        k[(2 * j, 2 * j + 1)] = damp * sin;
        k[(2 * j + 1, 2 * j)] = -damp * sin;
        k[(2 * j + 1, 2 * j + 1)] = damp * cos;
        let added = -(-gamma * t).exp_m1() * (nbar + 0.5);
        noise[(2 * j, 2 * j)] = added;
        noise[(2 * j + 1, 2 * j + 1)] = added;
    }
    let mut cov = &k * &state0.cov * k.transpose() + noise;
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState {
        frame: Frame::Normal,
        mean: &k * &state0.mean,
        cov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeLabel;
    use approx::assert_relative_eq;

    fn toy_modes(freqs: &[f64]) -> NormalModes {
        let n = freqs.len();
        let mut labels = vec![ModeLabel::Plus, ModeLabel::Minus];
        labels.extend((1..n - 1).map(ModeLabel::Zero));
        NormalModes {
            labels,
            vectors: DMatrix::identity(n, n),
            hooke: freqs.iter().map(|w| w * w).collect(),
            freqs: freqs.to_vec(),
            mass: 1.0,
            theta_mix: 0.3,
        }
    }

    fn diss(gp: f64, gm: f64, np: f64, nm: f64) -> DissipationSpec {
        DissipationSpec {
            gamma_plus: gp,
            gamma_minus: gm,
            nbar_plus: np,
            nbar_minus: nm,
        }
    }

    #[test]
    fn preparations() {
        let s = init_state(&[Preparation::Vacuum; 3], Frame::Normal).unwrap();
        assert_eq!(s.mean, DVector::zeros(6));
        assert_eq!(s.cov, DMatrix::identity(6, 6) * 0.5);

        let s = init_state(&[Preparation::Vacuum, Preparation::Coherent { re: 0.7, im: 0.0 }], Frame::Physical).unwrap();
        assert_relative_eq!(s.mean[2], 2f64.sqrt() * 0.7);
        assert_eq!(s.cov, DMatrix::identity(4, 4) * 0.5);

        let s = init_state(&[Preparation::Thermal { nbar: 1.0 }], Frame::Normal).unwrap();
        assert_eq!(s.cov, DMatrix::identity(2, 2) * 1.5);
        assert_relative_eq!(s.occupation(0), 1.0);

        assert!(matches!(init_state(&[Preparation::Thermal { nbar: -0.1 }], Frame::Normal), Err(Error::Domain(_))));
    }

    #[test]
    fn full_period_returns() {
        let modes = toy_modes(&[2.0, 1.0, 3.0]);
        let s0 = GaussianState {
            frame: Frame::Normal,
            mean: DVector::from_vec(vec![0.3, -0.2, 1.0, 0.4, -0.5, 0.1]),
            cov: init_state(&[Preparation::Thermal { nbar: 0.3 }; 3], Frame::Normal).unwrap().cov,
        };
        let s = evolve_gaussian(&s0, &DissipationSpec::closed(), &modes, 2.0 * std::f64::consts::PI).unwrap();
        assert!((&s.mean - &s0.mean).amax() < 1e-10);
        assert!((&s.cov - &s0.cov).amax() < 1e-10);
    }

    #[test]
    fn leaking_relaxation() {
        let modes = toy_modes(&[2.0, 1.0, 1.5]);
        let d = diss(0.3, 0.1, 0.5, 0.0);
        let s0 = init_state(&[Preparation::Vacuum; 3], Frame::Normal).unwrap();
        for t in [0.0, 0.5, 2.0, 7.0] {
            let s = evolve_gaussian(&s0, &d, &modes, t).unwrap();
            assert_relative_eq!(s.occupation(0), 0.5 * (1.0 - (-0.3 * t).exp()), epsilon = 1e-14);
            assert!(s.occupation(1).abs() < 1e-14);
        }
    }

    #[test]
    fn frame_mismatch() {
        let modes = toy_modes(&[2.0, 1.0, 1.5]);
        let s0 = init_state(&[Preparation::Vacuum; 3], Frame::Physical).unwrap();
        assert!(matches!(evolve_gaussian(&s0, &DissipationSpec::closed(), &modes, 1.0), Err(Error::Contract(_))));
    }

    #[test]
    fn cross_covariance_decays_at_half_rate() {
        let modes = toy_modes(&[2.0, 1.0, 1.5]);
        let d = diss(0.4, 0.0, 0.0, 0.0);
        let mut s0 = init_state(&[Preparation::Vacuum; 3], Frame::Normal).unwrap();
        // correlate X_plus with X_zero
        s0.cov[(0, 4)] = 0.2;
        s0.cov[(4, 0)] = 0.2;
        let t = 3.0;
        let s = evolve_gaussian(&s0, &d, &modes, t).unwrap();
        let block = s.cov.view((0, 4), (2, 2));
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 0.2 * (-0.2 * t).exp(), max_relative = 1e-12);
    }

    #[test]
    fn invalid_state_detected() {
        let mut s = init_state(&[Preparation::Vacuum; 2], Frame::Normal).unwrap();
        assert!(s.is_valid(1e-9));
        s.cov *= 0.5;
        assert!(!s.is_valid(1e-9));
    }
}
