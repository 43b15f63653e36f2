//! Expressibility and subspace-locking diagnostics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::simulator::{prepare_into, AnsatzSpec, LayerParams, BETA_MAX, GAMMA_MAX};
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 75;
pub const MIN_SAMPLES: usize = 1000;
pub const MIN_BINS: usize = 10;
pub const ASYMMETRIC_FIRST: f64 = -0.3;

/// Equal-width histogram of fidelities on `[0, 1]`; `F = 1` lands in the
/// last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub counts: Vec<u64>,
    pub samples: u64,
}

impl FidelityHistogram {
    pub fn from_fidelities(fidelities: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("histogram needs at least one bin"));
        }
        let mut counts = vec![0u64; bins];
        for &f in fidelities {
            if !(-1e-9..=1.0 + 1e-9).contains(&f) {
                return Err(Error::invalid(format!("fidelity {f} outside [0, 1]")));
            }
            let idx = ((f.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self { counts, samples: fidelities.len() as u64 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Edges `(k / B, (k + 1) / B)`.
    pub fn edges(&self, k: usize) -> (f64, f64) {
        let b = self.bins() as f64;
        (k as f64 / b, (k + 1) as f64 / b)
    }

    /// KL divergence from the Haar fidelity distribution of dimension `dim`.
    /// Empty bins contribute nothing.
    pub fn kl_divergence(&self, dim: f64) -> f64 {
        let masses = haar_bin_masses(dim, self.bins());
        let total = self.samples as f64;
        self.counts
            .iter()
            .zip(&masses)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &q)| {
                let p = c as f64 / total;
                p * (p / q.max(f64::MIN_POSITIVE)).ln()
            })
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let (a, b) = self.edges(k);
            out.push_str(&format!("{a},{b},{c}\n"));
        }
        out
    }
}

/// Haar mass of each bin for density `(N - 1)(1 - x)^{N - 2}`:
/// `(1 - a)^{N-1} - (1 - b)^{N-1}`.
pub fn haar_bin_masses(dim: f64, bins: usize) -> Vec<f64> {
    let cdf_tail = |x: f64| (1.0 - x).powf(dim - 1.0);
    (0..bins)
        .map(|k| {
            let a = k as f64 / bins as f64;
            let b = (k + 1) as f64 / bins as f64;
            cdf_tail(a) - cdf_tail(b)
        })
        .collect()
}

/// Effective Haar dimension `2^{n-1}` of the Z2-symmetric state space.
pub fn symmetric_dimension(n: usize) -> f64 {
    (1u64 << (n - 1)) as f64
}

/// Reference configuration with one flipped, weakened ion: `A_0 = -0.3`,
/// all others 1. It breaks the uniform-coupling symmetry and is highly
/// expressible.
pub fn asymmetric_hyperparameters(n: usize) -> Vec<f64> {
    let mut a = vec![1.0; n];
    if let Some(first) = a.first_mut() {
        *first = ASYMMETRIC_FIRST;
    }
    a
}

fn random_params(rng: &mut SeededRng, p: usize) -> LayerParams {
    let mut betas = Vec::with_capacity(p);
    let mut gammas = Vec::with_capacity(p);
    for _ in 0..p {
        betas.push(rng.uniform_in(0.0, BETA_MAX));
        gammas.push(rng.uniform_in(0.0, GAMMA_MAX));
    }
    LayerParams { betas, gammas }
}

/// Fidelities `|<psi(theta_1)|psi(theta_2)>|^2` for `samples` random pairs;
/// pair `s` draws both parameter sets from the stream `(seed, s)`.
pub fn sample_fidelities(spec: &AnsatzSpec, p: usize, samples: usize, seed: u64) -> Vec<f64> {
    (0..samples)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(a, b): &mut (Vec<Complex64>, Vec<Complex64>), s| {
                let mut rng = SeededRng::derived(seed, &[s as u64]);
                let first = random_params(&mut rng, p);
                let second = random_params(&mut rng, p);
                prepare_into(spec, &first, a);
                prepare_into(spec, &second, b);
                a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expressibility {
    pub kl: f64,
    pub histogram: FidelityHistogram,
}

/// KL divergence of the sampled fidelity distribution from Haar with
/// dimension `2^{n-1}`.
pub fn expressibility(spec: &AnsatzSpec, p: usize, samples: usize, bins: usize, seed: u64) -> Result<Expressibility> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} fidelity samples, got {samples}")));
    }
    if bins < MIN_BINS {
        return Err(Error::invalid(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    if p == 0 {
        return Err(Error::invalid("circuit depth must be positive"));
    }
    let fidelities = sample_fidelities(spec, p, samples, seed);
    let histogram = FidelityHistogram::from_fidelities(&fidelities, bins)?;
    let kl = histogram.kl_divergence(symmetric_dimension(spec.n()));
    Ok(Expressibility { kl, histogram })
}

pub fn expressibility_kl(spec: &AnsatzSpec, p: usize, samples: usize, bins: usize, seed: u64) -> Result<f64> {
    Ok(expressibility(spec, p, samples, bins, seed)?.kl)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularProfile {
    /// Descending.
    pub sigmas: Vec<f64>,
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
}

impl SingularProfile {
    /// `sigma_k / sigma_1` for 1-based `k`.
    pub fn ratio(&self, k: usize) -> f64 {
        self.sigmas[k - 1] / self.sigmas[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,sigma\n");
        for (k, s) in self.sigmas.iter().enumerate() {
            out.push_str(&format!("{},{s}\n", k + 1));
        }
        out
    }
}

/// Singular values of a stack of complex rows, descending.
///
/// One-sided Jacobi: pairs of rows are rotated until mutually orthogonal,
/// after which the row norms are the singular values. Unlike the Gram-matrix
/// route this keeps tiny singular values accurate to rounding relative to
/// `sigma_1` rather than its square root.
pub fn singular_values(rows: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let k = rows.len();
    let mut work: Vec<Vec<Complex64>> = rows.to_vec();
    if let Some(len) = work.first().map(Vec::len) {
        if work.iter().any(|r| r.len() != len) {
            return Err(Error::invalid("rows must have equal length"));
        }
    }
    let norm2 = |r: &[Complex64]| r.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let total: f64 = work.iter().map(|r| norm2(r)).sum();
    let mut converged = false;
    for _ in 0..MAX_SVD_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let (head, tail) = work.split_at_mut(j);
                let (a, b) = (&mut head[i], &mut tail[0]);
                let alpha = norm2(a);
                let beta = norm2(b);
                let gamma: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
                let g = gamma.norm();
                // Rows already at rounding level carry no direction worth fixing.
                if g <= SVD_TOL * (alpha * beta).sqrt() || alpha.min(beta) <= 1e-30 * total {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (xo, yo) = (*x, *y);
                    *x = xo * c - phase * yo * s;
                    *y = phase.conj() * xo * s + yo * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::invalid("singular value iteration did not converge"));
    }
    let mut sigmas: Vec<f64> = work.iter().map(|r| norm2(r).sqrt()).collect();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    Ok(sigmas)
}

const MAX_SVD_SWEEPS: usize = 60;
const SVD_TOL: f64 = 1e-14;

/// Stacks `k_states` states at random angles (state `k` from stream
/// `(seed, k)`) and returns their singular values.
pub fn singular_profile(spec: &AnsatzSpec, p: usize, k_states: usize, seed: u64) -> Result<SingularProfile> {
    if k_states == 0 || k_states > spec.dim() {
        return Err(Error::invalid(format!("K must lie in 1..={}, got {k_states}", spec.dim())));
    }
    let rows: Vec<Vec<Complex64>> = (0..k_states)
        .map(|k| {
            let mut rng = SeededRng::derived(seed, &[k as u64]);
            let params = random_params(&mut rng, p);
            let mut buf = Vec::new();
            prepare_into(spec, &params, &mut buf);
            buf
        })
        .collect();
    Ok(SingularProfile { sigmas: singular_values(&rows)?, k: k_states, p, n: spec.n(), seed })
}
