//! Normal modes of the star network.
//!
//! `G` has two singlet eigenvalues `G+ >= 0 >= G-` whose eigenvectors touch
//! the hub, and an `(N-1)`-fold zero eigenvalue whose eigenvectors do not.
//! The diagonal detuning `D` is then treated to first order: diagonal
//! elements on the singlets, and an exact diagonalization of `D` restricted
//! to the zero sector. Mode order everywhere is `(+, -, 0_1, .., 0_{N-1})`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PotentialDecomposition;

/// Above this value of `xi` the first-order spectrum is flagged as unreliable.
pub const XI_WARNING_THRESHOLD: f64 = 0.3;

/// Identity of a normal mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Upper leaking singlet.
    Plus,
    /// Lower leaking singlet.
    Minus,
    /// Protected mode, 1-based index within the zero sector.
    Zero(usize),
}

impl ModeLabel {
    pub fn is_protected(self) -> bool {
        matches!(self, ModeLabel::Zero(_))
    }

    /// Canonical ordering `(+, -, 0_1, ..)` for a network with `n` outer oscillators.
    pub fn ordered(n: usize) -> Vec<ModeLabel> {
        let mut labels = vec![ModeLabel::Plus, ModeLabel::Minus];
        labels.extend((1..n).map(ModeLabel::Zero));
        labels
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Plus => write!(f, "plus"),
            ModeLabel::Minus => write!(f, "minus"),
            ModeLabel::Zero(j) => write!(f, "zero_{j}"),
        }
    }
}

/// Eigensystem of `G` plus the first-order corrections induced by `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDecomposition {
    pub g_plus: f64,
    pub g_minus: f64,
    pub vec_plus: DVector<f64>,
    pub vec_minus: DVector<f64>,
    /// `(N+1) x (N-1)`, orthonormal columns with a zero hub component.
    pub zero_basis: DMatrix<f64>,
    /// Rotation diagonalizing `D` inside the zero sector. Identity until
    /// [`perturb_corrections`] runs.
    pub zero_rotation: DMatrix<f64>,
    pub dk_plus: f64,
    pub dk_minus: f64,
    pub dk_zero: Vec<f64>,
    /// Corrected Hooke constants in `(+, -, 0_1, ..)` order.
    pub k_corr: Vec<f64>,
    /// `sqrt(k / m)` per corrected constant; NaN when the constant is not positive.
    pub freqs: Vec<f64>,
    /// Mixing angle with `tan(theta) = -G- / G+`.
    pub theta_mix: f64,
    pub xi: Option<f64>,
    pub mass: f64,
    /// Whether the corrections from `D` have been applied.
    pub corrected: bool,
    /// Set when `xi` exceeds [`XI_WARNING_THRESHOLD`].
    pub regime_warning: bool,
}

impl ModeDecomposition {
    pub fn n(&self) -> usize {
        self.vec_plus.len() - 1
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        ModeLabel::ordered(self.n())
    }

    /// All mode vectors as columns in label order.
    pub fn basis(&self) -> DMatrix<f64> {
        let dim = self.vec_plus.len();
        let mut b = DMatrix::zeros(dim, dim);
        b.set_column(0, &self.vec_plus);
        b.set_column(1, &self.vec_minus);
        for j in 0..self.zero_basis.ncols() {
            b.set_column(j + 2, &self.zero_basis.column(j));
        }
        b
    }

    /// The perturbative frame used by the transform and dynamics modules.
    pub fn normal_modes(&self) -> Result<NormalModes> {
        if !self.corrected {
            return Err(Error::Contract(
                "normal modes need corrected Hooke constants; run perturb_corrections first".into(),
            ));
        }
        Ok(NormalModes {
            labels: self.labels(),
            vectors: self.basis(),
            hooke: self.k_corr.clone(),
            freqs: self.freqs.clone(),
            mass: self.mass,
            theta_mix: self.theta_mix,
        })
    }
}

/// A complete set of normal modes: orthonormal vectors (columns), their
/// Hooke constants and labels. Either the perturbative modes or the exact
/// eigenvectors aligned to them.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    pub labels: Vec<ModeLabel>,
    pub vectors: DMatrix<f64>,
    pub hooke: Vec<f64>,
    pub freqs: Vec<f64>,
    pub mass: f64,
    pub theta_mix: f64,
}

impl NormalModes {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: ModeLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn protected_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_protected()).collect()
    }

    pub fn check_stable(&self) -> Result<()> {
        for (label, &k) in self.labels.iter().zip(&self.hooke) {
            if !(k > 0.0) {
                return Err(Error::Unstable(format!(
                    "mode {label} has non-positive Hooke constant {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Exact eigendecomposition of `V`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, same order as `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// `sqrt(lambda / m)`, NaN for negative eigenvalues.
    pub freqs: Vec<f64>,
    pub mass: f64,
}

impl ExactSpectrum {
    /// Reorder the exact eigenvectors to follow the labels of `modes`,
    /// pairing each perturbative vector with the exact one of largest overlap.
    pub fn aligned_to(&self, modes: &ModeDecomposition) -> NormalModes {
        let reference = modes.basis();
        let perm = match_by_overlap(&reference, &self.eigenvectors);
        let dim = reference.ncols();
        let mut vectors = DMatrix::zeros(dim, dim);
        let mut hooke = Vec::with_capacity(dim);
        for (slot, &idx) in perm.iter().enumerate() {
            let mut v = self.eigenvectors.column(idx).into_owned();
            if v.dot(&reference.column(slot)) < 0.0 {
                v.neg_mut();
            }
            vectors.set_column(slot, &v);
            hooke.push(self.eigenvalues[idx]);
        }
        NormalModes {
            labels: modes.labels(),
            vectors,
            freqs: hooke.iter().map(|k| (k / self.mass).sqrt()).collect(),
            hooke,
            mass: self.mass,
            theta_mix: modes.theta_mix,
        }
    }

    /// Largest relative residual `|V v - lambda v| / |V|`.
    pub fn max_residual(&self, v: &DMatrix<f64>) -> f64 {
        let scale = v.amax().max(f64::MIN_POSITIVE);
        (0..self.eigenvalues.len())
            .map(|i| {
                let col = self.eigenvectors.column(i);
                (v * col - col * self.eigenvalues[i]).amax() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// For each column of `reference`, the index of the column of `candidates`
/// with the largest absolute overlap. Pairs are fixed greedily from the
/// strongest overlap down, so the result is a permutation.
pub fn match_by_overlap(reference: &DMatrix<f64>, candidates: &DMatrix<f64>) -> Vec<usize> {
    let overlaps = (reference.transpose() * candidates).abs();
    let n = reference.ncols();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|r| (0..candidates.ncols()).map(move |c| (r, c)))
        .collect();
    pairs.sort_by(|a, b| {
        overlaps[*b]
            .partial_cmp(&overlaps[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    });
    let mut assigned = vec![usize::MAX; n];
    let mut taken = vec![false; candidates.ncols()];
    for (r, c) in pairs {
        if assigned[r] == usize::MAX && !taken[c] {
            assigned[r] = c;
            taken[c] = true;
        }
    }
    assigned
}

/// Flip `v` so that its largest-magnitude component is positive. Among
/// components tied in magnitude the first one decides.
pub(crate) fn normalize_sign(v: &mut DVector<f64>) {
    let max = v.amax();
    if max == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-12)) {
        if *lead < 0.0 {
            v.neg_mut();
        }
    }
}

fn unit(mut v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    v /= norm;
    normalize_sign(&mut v);
    v
}

/// Closed-form roots `G+ >= G-` of `G^2 - Delta G - Lambda^2 = 0`, computed
/// without cancellation.
fn g_roots(delta: f64, lambda_sq: f64) -> (f64, f64) {
    let disc = (delta * delta + 4.0 * lambda_sq).sqrt();
    if delta >= 0.0 {
        let plus = 0.5 * (delta + disc);
        (plus, -lambda_sq / plus)
    } else {
        let minus = 0.5 * (delta - disc);
        (-lambda_sq / minus, minus)
    }
}

/// Orthonormal basis of the zero eigenspace of `G` built from a chain of
/// planar rotations. Column `j` is `cos(t_j) s_j + sin(t_j) e_{j+1}`, where
/// `s_j` is the unit vector along `(g_1, .., g_j)` and
/// `t_j = atan2(-|g_1..g_j|, g_{j+1})`.
pub fn zero_mode_chain(couplings: &[f64]) -> DMatrix<f64> {
    let n = couplings.len();
    let dim = n + 1;
    let mut basis = DMatrix::zeros(dim, n.saturating_sub(1));
    if n < 2 {
        return basis;
    }
    let mut s = DVector::<f64>::zeros(dim);
    s[0] = 1.0;
    let mut r = couplings[0].abs();
    for j in 0..n - 1 {
        let next = couplings[j + 1];
        let theta = (-r).atan2(next);
        let (sin, cos) = theta.sin_cos();
        let mut e = DVector::<f64>::zeros(dim);
        e[j + 1] = 1.0;
        let mut mode = &s * cos + &e * sin;
        normalize_sign(&mut mode);
        basis.set_column(j, &mode);
        s = &s * (-sin) + &e * cos;
        r = r.hypot(next);
    }
    basis
}

/// Closed-form eigensystem of `G`. The returned decomposition carries the
/// unperturbed constants `shift + G` until [`perturb_corrections`] fills in
/// the corrections.
pub fn g_eigensystem(decomp: &PotentialDecomposition) -> Result<ModeDecomposition> {
    let n = decomp.n();
    let dim = n + 1;
    if !(decomp.lambda_sq > 0.0) {
        return Err(Error::DegenerateNetwork);
    }
    let (g_plus, g_minus) = g_roots(decomp.delta, decomp.lambda_sq);

    let singlet = |root: f64| {
        let mut v = DVector::<f64>::zeros(dim);
        for j in 0..n {
            v[j] = -decomp.couplings[j] / root;
        }
        v[n] = 1.0;
        unit(v)
    };
    let vec_plus = singlet(g_plus);
    let vec_minus = singlet(g_minus);
    let zero_basis = zero_mode_chain(&decomp.couplings);

    let mut k_corr = vec![decomp.shift + g_plus, decomp.shift + g_minus];
    k_corr.extend(std::iter::repeat(decomp.shift).take(n - 1));
    let freqs = k_corr.iter().map(|k| (k / decomp.mass).sqrt()).collect();

    Ok(ModeDecomposition {
        g_plus,
        g_minus,
        vec_plus,
        vec_minus,
        zero_basis,
        zero_rotation: DMatrix::identity(n - 1, n - 1),
        dk_plus: 0.0,
        dk_minus: 0.0,
        dk_zero: vec![0.0; n - 1],
        k_corr,
        freqs,
        theta_mix: (-g_minus).atan2(g_plus),
        xi: decomp.xi,
        mass: decomp.mass,
        corrected: false,
        regime_warning: decomp.xi.map_or(false, |x| x > XI_WARNING_THRESHOLD),
    })
}

/// Symmetric eigendecomposition, ascending, with eigenvector signs fixed and
/// exact ties ordered lexicographically by eigenvector.
fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NonConvergence(format!("{n}x{n} symmetric eigenproblem")))?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| {
            let mut v = eig.eigenvectors.column(i).into_owned();
            normalize_sign(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= 1e-12 * scale {
            a.1.iter()
                .zip(b.1.iter())
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        } else {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal)
        }
    });
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// First-order corrections from `D`.
pub fn perturb_corrections(
    modes: &ModeDecomposition,
    decomp: &PotentialDecomposition,
) -> Result<ModeDecomposition> {
    let xi = match decomp.xi {
        Some(x) if x.is_finite() => x,
        _ => {
            return Err(Error::PerturbationInapplicable(
                "xi is undefined because the average coupling vanishes".into(),
            ))
        }
    };
    let d = &decomp.d_matrix;
    let dk_plus = modes.vec_plus.dot(&(d * &modes.vec_plus));
    let dk_minus = modes.vec_minus.dot(&(d * &modes.vec_minus));

    let restricted = modes.zero_basis.transpose() * d * &modes.zero_basis;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let (dk_zero, zero_rotation) = sorted_symmetric_eigen(&restricted)?;
    let mut zero_basis = &modes.zero_basis * &zero_rotation;
    for mut col in zero_basis.column_iter_mut() {
        let mut v = col.clone_owned();
        normalize_sign(&mut v);
        col.copy_from(&v);
    }

    let base = decomp.g_av + decomp.k_av;
    let mut k_corr = vec![base + modes.g_plus + dk_plus, base + modes.g_minus + dk_minus];
    k_corr.extend(dk_zero.iter().map(|dk| base + dk));
    let freqs = k_corr.iter().map(|k| (k / decomp.mass).sqrt()).collect();

    Ok(ModeDecomposition {
        zero_basis,
        zero_rotation,
        dk_plus,
        dk_minus,
        dk_zero,
        k_corr,
        freqs,
        xi: Some(xi),
        corrected: true,
        regime_warning: xi > XI_WARNING_THRESHOLD,
        ..modes.clone()
    })
}

/// Convenience: eigensystem of `G` followed by the corrections from `D`.
pub fn analyze(decomp: &PotentialDecomposition) -> Result<ModeDecomposition> {
    let modes = g_eigensystem(decomp)?;
    perturb_corrections(&modes, decomp)
}

/// Full symmetric eigendecomposition of `V`.
pub fn exact_diagonalize(decomp: &PotentialDecomposition) -> Result<ExactSpectrum> {
    let v = &decomp.v;
    let asym = (v - v.transpose()).amax();
    if asym > 1e-12 * v.amax() {
        return Err(Error::Contract(format!("potential matrix is not symmetric (|V - V^T| = {asym})")));
    }
    let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(v)?;
    let freqs = eigenvalues.iter().map(|k| (k / decomp.mass).sqrt()).collect();
    Ok(ExactSpectrum {
        eigenvalues,
        eigenvectors,
        freqs,
        mass: decomp.mass,
    })
}

/// Linearized protected-mode frequencies
/// `sqrt(base/m) * (1 + dk / (2 base))` with `base = g_av + k_av`.
pub fn squeezed_frequencies(mass: f64, k_av: f64, g_av: f64, dk_zero: &[f64]) -> Vec<f64> {
    let base = g_av + k_av;
    let centre = (base / mass).sqrt();
    dk_zero.iter().map(|dk| centre * (1.0 + dk / (2.0 * base))).collect()
}

fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Frequency spread of the protected multiplet, linearized and exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingEstimate {
    /// Common centre `sqrt((g_av + k_av)/m)`.
    pub centre: f64,
    pub approx_freqs: Vec<f64>,
    pub spread: f64,
    /// Exact frequencies of the modes matched to the protected labels.
    pub exact_freqs: Vec<f64>,
    pub exact_spread: f64,
    /// Fewer than two protected modes, so there is no spread to speak of.
    pub no_protected_pair: bool,
}

pub fn squeezing_estimate(
    modes: &ModeDecomposition,
    decomp: &PotentialDecomposition,
) -> Result<SqueezingEstimate> {
    if !modes.corrected {
        return Err(Error::Contract("squeezing estimate needs corrected modes".into()));
    }
    let approx_freqs = squeezed_frequencies(decomp.mass, decomp.k_av, decomp.g_av, &modes.dk_zero);
    let exact = exact_diagonalize(decomp)?.aligned_to(modes);
    let exact_freqs: Vec<f64> = exact.protected_indices().iter().map(|&i| exact.freqs[i]).collect();
    Ok(SqueezingEstimate {
        centre: ((decomp.g_av + decomp.k_av) / decomp.mass).sqrt(),
        spread: spread(&approx_freqs),
        exact_spread: spread(&exact_freqs),
        no_protected_pair: approx_freqs.len() < 2,
        approx_freqs,
        exact_freqs,
    })
}
