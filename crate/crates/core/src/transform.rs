//! Canonical transformation between physical and normal coordinates.
//!
//! Normal coordinates are `x~ = b x`, `p~ = c p`; the inverse maps are
//! `x = eps x~` and `p = eta p~`. With an orthogonal point transformation
//! `c = b` and both inverses are transposes.
//!
//! Quadratures are dimensionless, `X = sqrt(m w) x` and `P = p / sqrt(m w)`,
//! where `w` is the frequency attached to the coordinate in its own frame:
//! `sqrt(k_l / m)` for the physical oscillators and the normal-mode
//! frequency for normal coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::NetworkParams;
use crate::modes::{ModeLabel, NormalModes};

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTransform {
    /// Rows are normal-mode vectors: `x~_j = sum_l b[j,l] x_l`.
    pub b: DMatrix<f64>,
    /// Momentum analogue of `b`.
    pub c: DMatrix<f64>,
    /// `x_l = sum_j eps[l,j] x~_j`.
    pub eps: DMatrix<f64>,
    /// `p_l = sum_j eta[l,j] p~_j`.
    pub eta: DMatrix<f64>,
    pub freqs_physical: Vec<f64>,
    pub freqs_normal: Vec<f64>,
    pub labels: Vec<ModeLabel>,
    pub mass: f64,
}

impl CanonicalTransform {
    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Largest deviation from `sum_l b_l^(j) c_l^(j') = delta` and
    /// `sum_l eta_l^(j) eps_l^(j') = delta`.
    pub fn commutation_residual(&self) -> f64 {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let first = (&self.b * self.c.transpose() - &id).amax();
        let second = (&self.eta * self.eps.transpose() - &id).amax();
        first.max(second)
    }

    /// Largest deviation of `eps b` and `eta c` from the identity.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        (&self.eps * &self.b - &id).amax().max((&self.eta * &self.c - &id).amax())
    }

    pub fn to_normal(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.b * x
    }

    pub fn to_physical(&self, x_normal: &DVector<f64>) -> DVector<f64> {
        &self.eps * x_normal
    }

    pub fn normal_momenta(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.c * p
    }

    pub fn physical_momenta(&self, p_normal: &DVector<f64>) -> DVector<f64> {
        &self.eta * p_normal
    }

    /// Symplectic matrix taking interleaved physical quadratures
    /// `(X_1, P_1, X_2, P_2, ..)` to interleaved normal quadratures.
    pub fn quadrature_to_normal(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            let wj = self.freqs_normal[j];
            for k in 0..n {
                let wk = self.freqs_physical[k];
                s[(2 * j, 2 * k)] = self.b[(j, k)] * (wj / wk).sqrt();
                s[(2 * j + 1, 2 * k + 1)] = self.c[(j, k)] * (wk / wj).sqrt();
            }
        }
        s
    }

    /// Inverse of [`quadrature_to_normal`](Self::quadrature_to_normal).
    pub fn quadrature_to_physical(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for l in 0..n {
            let wl = self.freqs_physical[l];
            for j in 0..n {
                let wj = self.freqs_normal[j];
                s[(2 * l, 2 * j)] = self.eps[(l, j)] * (wl / wj).sqrt();
                s[(2 * l + 1, 2 * j + 1)] = self.eta[(l, j)] * (wj / wl).sqrt();
            }
        }
        s
    }

    /// Physical position `x_l` from a vector of interleaved normal quadratures.
    pub fn physical_position(&self, normal_quadratures: &DVector<f64>, l: usize) -> f64 {
        (0..self.dim())
            .map(|j| {
                let xj = normal_quadratures[2 * j] / (self.mass * self.freqs_normal[j]).sqrt();
                self.eps[(l, j)] * xj
            })
            .sum()
    }

    /// Physical momentum `p_l` from a vector of interleaved normal quadratures.
    pub fn physical_momentum(&self, normal_quadratures: &DVector<f64>, l: usize) -> f64 {
        (0..self.dim())
            .map(|j| {
                let pj = normal_quadratures[2 * j + 1] * (self.mass * self.freqs_normal[j]).sqrt();
                self.eta[(l, j)] * pj
            })
            .sum()
    }
}

/// Orthogonal point transformation onto the given normal modes.
pub fn build_canonical_transform(modes: &NormalModes, params: &NetworkParams) -> Result<CanonicalTransform> {
    params.validate()?;
    if modes.dim() != params.dim() {
        return Err(Error::Contract(format!(
            "normal modes span {} coordinates but the network has {}",
            modes.dim(),
            params.dim()
        )));
    }
    modes.check_stable()?;
    let b = modes.vectors.transpose();
    let c = b.clone();
    let eps = b.transpose();
    let eta = c.transpose();
    Ok(CanonicalTransform {
        b,
        c,
        eps,
        eta,
        freqs_physical: params.bare_frequencies(),
        freqs_normal: modes.freqs.clone(),
        labels: modes.labels.clone(),
        mass: params.mass,
    })
}

/// Ladder-operator map `a~_j = sum_k u[j,k] a_k + v[j,k] a_k^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovMap {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl BogoliubovMap {
    /// Largest violation of `u u^T - v v^T = I` and of the symmetry of `u v^T`.
    pub fn symplectic_residual(&self) -> f64 {
        let n = self.u.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let first = (&self.u * self.u.transpose() - &self.v * self.v.transpose() - id).amax();
        let uv = &self.u * self.v.transpose();
        let second = (&uv - uv.transpose()).amax();
        first.max(second)
    }
}

pub fn bogoliubov_map(t: &CanonicalTransform) -> Result<BogoliubovMap> {
    let bad = t
        .freqs_normal
        .iter()
        .chain(&t.freqs_physical)
        .find(|w| !(w.is_finite() && **w > 0.0));
    if let Some(w) = bad {
        return Err(Error::Domain(format!("Bogoliubov map needs positive frequencies, got {w}")));
    }
    let n = t.dim();
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let up = t.b[(j, k)] * (t.freqs_normal[j] / t.freqs_physical[k]).sqrt();
            let down = t.c[(j, k)] * (t.freqs_physical[k] / t.freqs_normal[j]).sqrt();
            u[(j, k)] = 0.5 * (up + down);
            v[(j, k)] = 0.5 * (up - down);
        }
    }
    Ok(BogoliubovMap { u, v })
}
