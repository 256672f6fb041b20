//! Network parameters and the decomposition of the potential matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a star network: `n` outer oscillators, each tied to a hub
/// (index `n`, zero based) that is in turn damped by a thermal bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Common mass of every oscillator.
    pub mass: f64,
    /// Hooke constants `k_1 .. k_{N+1}`; the last entry belongs to the hub.
    pub hooke: Vec<f64>,
    /// Spring constants `g_1 .. g_N` between each outer oscillator and the hub.
    pub couplings: Vec<f64>,
    /// Bare bath damping rate `gamma_0`.
    #[serde(default)]
    pub bath_rate: f64,
    /// Bath temperature.
    #[serde(default)]
    pub bath_temp: f64,
}

impl NetworkParams {
    pub fn new(mass: f64, hooke: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let p = NetworkParams {
            mass,
            hooke,
            couplings,
            bath_rate: 0.0,
            bath_temp: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bath(mut self, rate: f64, temp: f64) -> Result<Self> {
        self.bath_rate = rate;
        self.bath_temp = temp;
        self.validate()?;
        Ok(self)
    }

    /// Every outer oscillator identical: `k_i = k`, `g_i = g`.
    pub fn uniform(n: usize, k: f64, g: f64, mass: f64) -> Result<Self> {
        Self::new(mass, vec![k; n + 1], vec![g; n])
    }

    /// Number of outer oscillators `N`.
    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    /// Total number of oscillators, `N + 1`.
    pub fn dim(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.couplings.is_empty() {
            return Err(Error::parameter("couplings", "at least one outer oscillator is required"));
        }
        if self.hooke.len() != self.couplings.len() + 1 {
            return Err(Error::parameter(
                "hooke",
                format!(
                    "expected {} Hooke constants for {} outer oscillators, got {}",
                    self.couplings.len() + 1,
                    self.couplings.len(),
                    self.hooke.len()
                ),
            ));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::parameter("mass", format!("must be finite and > 0, got {}", self.mass)));
        }
        for (i, &k) in self.hooke.iter().enumerate() {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::parameter(
                    format!("hooke[{i}]"),
                    format!("must be finite and > 0, got {k}"),
                ));
            }
        }
        for (i, &g) in self.couplings.iter().enumerate() {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::parameter(
                    format!("couplings[{i}]"),
                    format!("must be finite and >= 0, got {g}"),
                ));
            }
        }
        if !(self.bath_rate.is_finite() && self.bath_rate >= 0.0) {
            return Err(Error::parameter("bath_rate", format!("must be >= 0, got {}", self.bath_rate)));
        }
        if !(self.bath_temp.is_finite() && self.bath_temp >= 0.0) {
            return Err(Error::parameter("bath_temp", format!("must be >= 0, got {}", self.bath_temp)));
        }
        Ok(())
    }

    /// Bare frequencies `sqrt(k_i / m)` of the uncoupled oscillators.
    pub fn bare_frequencies(&self) -> Vec<f64> {
        self.hooke.iter().map(|k| (k / self.mass).sqrt()).collect()
    }
}

/// `V = shift * I + G + D` together with the scalars that parametrize it.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialDecomposition {
    pub v: DMatrix<f64>,
    /// `k_av + g_av`
    pub shift: f64,
    pub g_matrix: DMatrix<f64>,
    pub d_matrix: DMatrix<f64>,
    pub k_av: f64,
    pub g_av: f64,
    /// `delta k_j = k_j - k_av`, length `N + 1`.
    pub delta_k: Vec<f64>,
    /// `delta g_j = g_j - g_av`, length `N`.
    pub delta_g: Vec<f64>,
    pub couplings: Vec<f64>,
    pub mass: f64,
    /// Hub entry of `G`: `delta k_{N+1} + (N - 1) g_av`.
    pub delta: f64,
    /// Sum of squared couplings.
    pub lambda_sq: f64,
    /// Perturbation strength `max_j (|dk_j| + |dg_j|) / g_av`; `None` when
    /// `g_av = 0` and the ratio is undefined.
    pub xi: Option<f64>,
}

impl PotentialDecomposition {
    pub fn n(&self) -> usize {
        self.couplings.len()
    }

    pub fn dim(&self) -> usize {
        self.couplings.len() + 1
    }

    /// Same `G` and shift with the detuning replaced by `s * D`.
    ///
    /// Used to probe the order of the perturbative spectrum.
    pub fn with_scaled_detuning(&self, s: f64) -> Self {
        let d_matrix = &self.d_matrix * s;
        let n = self.n();
        let v = DMatrix::identity(n + 1, n + 1) * self.shift + &self.g_matrix + &d_matrix;
        let xi = self.xi.map(|x| x * s.abs());
        PotentialDecomposition {
            v,
            d_matrix,
            xi,
            delta_k: self.delta_k.iter().map(|d| d * s).collect(),
            delta_g: self.delta_g.iter().map(|d| d * s).collect(),
            ..self.clone()
        }
    }

    /// Largest entrywise deviation of `V` from `shift * I + G + D`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.dim();
        let rebuilt = DMatrix::identity(n, n) * self.shift + &self.g_matrix + &self.d_matrix;
        (&self.v - rebuilt).amax()
    }
}

/// Assemble the potential matrix of the star network and split it.
pub fn build_potential(params: &NetworkParams) -> Result<PotentialDecomposition> {
    params.validate()?;
    let n = params.n();
    let dim = n + 1;
    let g = &params.couplings;
    let k = &params.hooke;

    let mut v = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        v[(i, i)] = k[i] + g[i];
        v[(i, n)] = -g[i];
        v[(n, i)] = -g[i];
    }
    let g_sum: f64 = g.iter().sum();
    v[(n, n)] = k[n] + g_sum;

    let g_av = g_sum / n as f64;
    let k_av = k.iter().sum::<f64>() / dim as f64;
    let delta_k: Vec<f64> = k.iter().map(|ki| ki - k_av).collect();
    let delta_g: Vec<f64> = g.iter().map(|gi| gi - g_av).collect();
    let delta = delta_k[n] + (n as f64 - 1.0) * g_av;
    let lambda_sq = g.iter().map(|x| x * x).sum();

    let mut g_matrix = DMatrix::<f64>::zeros(dim, dim);
    let mut d_matrix = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        g_matrix[(i, n)] = -g[i];
        g_matrix[(n, i)] = -g[i];
        d_matrix[(i, i)] = delta_k[i] + delta_g[i];
    }
    g_matrix[(n, n)] = delta;

    // D only carries the outer entries; the hub detuning lives in G.
    let xi = if g_av > 0.0 {
        let worst = (0..n)
            .map(|j| delta_k[j].abs() + delta_g[j].abs())
            .fold(0.0, f64::max);
        Some(worst / g_av)
    } else {
        None
    };

    Ok(PotentialDecomposition {
        v,
        shift: k_av + g_av,
        g_matrix,
        d_matrix,
        k_av,
        g_av,
        delta_k,
        delta_g,
        couplings: g.clone(),
        mass: params.mass,
        delta,
        lambda_sq,
        xi,
    })
}

/// Bose-Einstein occupation of a mode of frequency `omega` at temperature `temp`.
pub fn thermal_occupation(omega: f64, temp: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("thermal occupation needs omega > 0, got {omega}")));
    }
    if !(temp.is_finite() && temp >= 0.0) {
        return Err(Error::Domain(format!("temperature must be >= 0, got {temp}")));
    }
    if temp == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temp).exp_m1())
}
