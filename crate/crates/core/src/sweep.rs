//! Coupling-strength scans of the normal-mode spectrum.
//!
//! Each grid point sets `g_i = g + offset_i`, so the offsets fix the
//! coupling inhomogeneity while the common part grows.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_potential, NetworkParams};
use crate::modes::{analyze, exact_diagonalize, match_by_overlap, ModeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub g_min: f64,
    pub g_max: f64,
    pub steps: usize,
    /// Per-oscillator coupling offsets.
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Log => (self.g_min.ln() + f * (self.g_max.ln() - self.g_min.ln())).exp(),
                    Spacing::Linear => self.g_min + f * (self.g_max - self.g_min),
                }
            })
            .collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.g_min.is_finite() && self.g_min > 0.0) {
            return Err(Error::parameter("sweep.g_min", format!("must be > 0, got {}", self.g_min)));
        }
        if !(self.g_max.is_finite() && self.g_max > self.g_min) {
            return Err(Error::parameter("sweep.g_max", "must exceed g_min"));
        }
        if self.steps < 2 {
            return Err(Error::parameter("sweep.steps", "need at least two grid points"));
        }
        if self.offsets.len() != n {
            return Err(Error::parameter(
                "sweep.offsets",
                format!("expected {n} offsets, got {}", self.offsets.len()),
            ));
        }
        Ok(())
    }
}

/// Copy of `base` with couplings `g + offset_i`.
pub fn network_at(base: &NetworkParams, g: f64, offsets: &[f64]) -> Result<NetworkParams> {
    let mut p = base.clone();
    p.couplings = offsets.iter().map(|o| g + o).collect();
    p.validate()?;
    Ok(p)
}

/// Spectrum at one grid point. Frequencies are listed in label order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub g: f64,
    pub g_av: f64,
    pub xi: Option<f64>,
    pub perturbative: Vec<f64>,
    /// Exact frequencies, tracked by eigenvector continuity.
    pub exact: Vec<f64>,
    pub spread_perturbative: f64,
    pub spread_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub labels: Vec<ModeLabel>,
    pub k_av: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn g_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.g).collect()
    }

    pub fn protected_columns(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_protected()).collect()
    }
}

/// Which spread a fit or a comparison refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadSource {
    Exact,
    Perturbative,
}

fn spread_of(freqs: &[f64], cols: &[usize]) -> f64 {
    if cols.len() < 2 {
        return 0.0;
    }
    let vals = cols.iter().map(|&c| freqs[c]);
    let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.fold(f64::INFINITY, f64::min);
    max - min
}

struct Point {
    g: f64,
    g_av: f64,
    xi: Option<f64>,
    perturbative: Vec<f64>,
    reference: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    mass: f64,
}

fn evaluate(base: &NetworkParams, g: f64, offsets: &[f64]) -> Result<Point> {
    let params = network_at(base, g, offsets)
        .map_err(|e| Error::parameter("sweep", format!("grid point g = {g}: {e}")))?;
    let decomp = build_potential(&params)?;
    let modes = analyze(&decomp)?;
    let exact = exact_diagonalize(&decomp)?;
    if let Some(bad) = exact.eigenvalues.iter().find(|&&k| k <= 0.0) {
        return Err(Error::Unstable(format!("grid point g = {g} has eigenvalue {bad}")));
    }
    Ok(Point {
        g,
        g_av: decomp.g_av,
        xi: decomp.xi,
        perturbative: modes.freqs.clone(),
        reference: modes.basis(),
        eigenvalues: exact.eigenvalues,
        eigenvectors: exact.eigenvectors,
        mass: params.mass,
    })
}

/// Perturbative and exact spectra along a coupling grid.
///
/// Exact modes are labelled at the grid point with the smallest `xi`, where
/// the perturbative vectors are most trustworthy, and the labels are carried
/// outwards by maximal eigenvector overlap with the neighbouring point.
pub fn frequency_sweep(base: &NetworkParams, spec: &SweepSpec) -> Result<SweepResult> {
    base.validate()?;
    spec.validate(base.n())?;
    let points = spec
        .grid()
        .into_iter()
        .map(|g| evaluate(base, g, &spec.offsets))
        .collect::<Result<Vec<_>>>()?;

    let labels = ModeLabel::ordered(base.n());
    let anchor = points
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let xa = a.1.xi.unwrap_or(f64::INFINITY);
            let xb = b.1.xi.unwrap_or(f64::INFINITY);
            xa.partial_cmp(&xb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);

    // tracked[i]: exact eigenvector columns in label order at point i
    let mut tracked: Vec<Option<(Vec<usize>, DMatrix<f64>)>> = vec![None; points.len()];
    let assign = |p: &Point, reference: &DMatrix<f64>| {
        let perm = match_by_overlap(reference, &p.eigenvectors);
        let mut cols = DMatrix::zeros(reference.nrows(), reference.ncols());
        for (slot, &idx) in perm.iter().enumerate() {
            let mut v = p.eigenvectors.column(idx).into_owned();
            if v.dot(&reference.column(slot)) < 0.0 {
                v.neg_mut();
            }
            cols.set_column(slot, &v);
        }
        (perm, cols)
    };
    tracked[anchor] = Some(assign(&points[anchor], &points[anchor].reference));
    for i in anchor + 1..points.len() {
        let prev = tracked[i - 1].as_ref().unwrap().1.clone();
        tracked[i] = Some(assign(&points[i], &prev));
    }
    for i in (0..anchor).rev() {
        let next = tracked[i + 1].as_ref().unwrap().1.clone();
        tracked[i] = Some(assign(&points[i], &next));
    }

    let protected: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_protected()).collect();
    let rows = points
        .iter()
        .zip(tracked)
        .map(|(p, t)| {
            let perm = t.unwrap().0;
            let exact: Vec<f64> = perm.iter().map(|&k| (p.eigenvalues[k] / p.mass).sqrt()).collect();
            SweepRow {
                g: p.g,
                g_av: p.g_av,
                xi: p.xi,
                spread_perturbative: spread_of(&p.perturbative, &protected),
                spread_exact: spread_of(&exact, &protected),
                perturbative: p.perturbative.clone(),
                exact,
            }
        })
        .collect();
    let decomp = build_potential(base)?;
    Ok(SweepResult {
        labels,
        k_av: decomp.k_av,
        rows,
    })
}

/// Protected-mode spread `(perturbative, exact)` at a single coupling value.
pub fn protected_spread_at(base: &NetworkParams, g: f64, offsets: &[f64]) -> Result<(f64, f64)> {
    let spec = SweepSpec {
        g_min: g,
        g_max: g * (1.0 + 1e-9),
        steps: 2,
        offsets: offsets.to_vec(),
        spacing: Spacing::Linear,
    };
    let r = frequency_sweep(base, &spec)?;
    Ok((r.rows[0].spread_perturbative, r.rows[0].spread_exact))
}

/// Power law `y = C x^exponent` fitted by least squares in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub stderr: f64,
    pub prefactor: f64,
    pub points: usize,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 points with positive spread, have {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        exponent: slope,
        stderr,
        prefactor: intercept.exp(),
        points: pts.len(),
    })
}

/// Exponent of the protected spread against `g_av + k_av` over grid points
/// with `g >= g_threshold`.
pub fn scaling_fit(result: &SweepResult, g_threshold: f64, source: SpreadSource) -> Result<ScalingFit> {
    let rows: Vec<&SweepRow> = result.rows.iter().filter(|r| r.g >= g_threshold).collect();
    let spread = |r: &SweepRow| match source {
        SpreadSource::Exact => r.spread_exact,
        SpreadSource::Perturbative => r.spread_perturbative,
    };
    if rows.iter().all(|r| spread(r) == 0.0) {
        return Err(Error::DegenerateFit("protected spread vanishes at every grid point".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.g_av + result.k_av).collect();
    let ys: Vec<f64> = rows.iter().map(|r| spread(r)).collect();
    fit_power_law(&xs, &ys)
}
