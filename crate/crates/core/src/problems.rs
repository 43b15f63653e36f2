//! Diagonal problem Hamiltonians.
//!
//! Basis index `z` encodes qubit `i` in bit `i` (little-endian). Bit value 0
//! maps to spin `s_i = +1`, bit value 1 to `s_i = -1`.

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::{Error, Result};

/// Spin of qubit `qubit` in basis state `z`.
#[inline]
pub fn spin(z: usize, qubit: usize) -> f64 {
    if (z >> qubit) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub ground_indices: Vec<usize>,
    pub degeneracy: usize,
}

/// Extremal energies and the degenerate ground space.
///
/// A basis state belongs to the ground space when its energy lies within
/// `1e-9 * max(1, |lambda_0|)` of the minimum.
pub fn spectrum_summary(energies: &[f64]) -> Result<SpectrumSummary> {
    if energies.is_empty() {
        return Err(Error::invalid("energy table is empty"));
    }
    let lambda_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * lambda_min.abs().max(1.0);
    let ground_indices: Vec<usize> = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e <= lambda_min + tol)
        .map(|(z, _)| z)
        .collect();
    Ok(SpectrumSummary { lambda_min, lambda_max, degeneracy: ground_indices.len(), ground_indices })
}

/// A cost Hamiltonian `H_P = sum_z C(z) |z><z|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    pub n: usize,
    pub energies: Vec<f64>,
    pub spectrum: SpectrumSummary,
}

impl DiagonalHamiltonian {
    pub fn from_energies(n: usize, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != 1usize << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: energies.len() });
        }
        let spectrum = spectrum_summary(&energies)?;
        Ok(Self { n, energies, spectrum })
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.lambda_max
    }

    pub fn ground_indices(&self) -> &[usize] {
        &self.spectrum.ground_indices
    }

    pub fn degeneracy(&self) -> usize {
        self.spectrum.degeneracy
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Same Hamiltonian with every energy shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let energies: Vec<f64> = self.energies.iter().map(|e| e + offset).collect();
        Self::from_energies(self.n, energies).expect("shift preserves dimensions")
    }

    /// Whether `C(z) == C(~z)` for every basis state.
    pub fn is_z2_symmetric(&self) -> bool {
        let mask = self.dim() - 1;
        (0..self.dim()).all(|z| self.energies[z] == self.energies[z ^ mask])
    }
}

/// Sherrington-Kirkpatrick couplings `K_ij ~ N(0, 1)`, stored for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkInstance {
    pub n: usize,
    pub seed: u64,
    pub couplings: Vec<(usize, usize, f64)>,
}

impl SkInstance {
    /// Draws couplings in lexicographic `(i, j)` order from the seeded stream.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        if !(2..=20).contains(&n) {
            return Err(Error::invalid(format!("SK instances need 2 <= n <= 20, got {n}")));
        }
        let mut rng = SeededRng::new(seed);
        let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                couplings.push((i, j, rng.standard_normal()));
            }
        }
        Ok(Self { n, seed, couplings })
    }

    /// `C(z) = n^{-1/2} sum_{i<j} K_ij s_i s_j`.
    pub fn hamiltonian(&self) -> Result<DiagonalHamiltonian> {
        let norm = 1.0 / (self.n as f64).sqrt();
        let energies = (0..1usize << self.n)
            .map(|z| {
                norm * self.couplings.iter().map(|&(i, j, k)| k * spin(z, i) * spin(z, j)).sum::<f64>()
            })
            .collect();
        DiagonalHamiltonian::from_energies(self.n, energies)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        if inst.couplings.iter().any(|&(i, j, _)| i >= j || j >= inst.n) {
            return Err(Error::invalid("couplings must satisfy i < j < n"));
        }
        Ok(inst)
    }
}

pub fn sk_hamiltonian(n: usize, seed: u64) -> Result<DiagonalHamiltonian> {
    SkInstance::generate(n, seed)?.hamiltonian()
}

/// `H_P = -(|0..0><0..0| + |1..1><1..1|)`: minimizing it maximizes the
/// overlap with the GHZ state for Z2-symmetric states.
pub fn ghz_prep_hamiltonian(n: usize) -> Result<DiagonalHamiltonian> {
    if n < 2 {
        return Err(Error::invalid("GHZ preparation needs at least 2 qubits"));
    }
    let dim = 1usize << n;
    let mut energies = vec![0.0; dim];
    energies[0] = -1.0;
    energies[dim - 1] = -1.0;
    DiagonalHamiltonian::from_energies(n, energies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_qubit_zz_energies() {
        let inst = SkInstance { n: 2, seed: 0, couplings: vec![(0, 1, 1.0)] };
        let h = inst.hamiltonian().unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(h.energies, vec![s, -s, -s, s]);
        assert_eq!(h.degeneracy(), 2);
    }

    #[test]
    fn sk_is_traceless_and_symmetric() {
        for seed in 0..5 {
            let h = sk_hamiltonian(7, seed).unwrap();
            assert!(h.energies.iter().sum::<f64>().abs() < 1e-9);
            assert!(h.is_z2_symmetric());
        }
    }

    #[test]
    fn sk_size_limits() {
        assert!(SkInstance::generate(1, 0).is_err());
        assert!(SkInstance::generate(21, 0).is_err());
    }

    #[test]
    fn ghz_spectrum() {
        let h = ghz_prep_hamiltonian(2).unwrap();
        assert_eq!(h.energies, vec![-1.0, 0.0, 0.0, -1.0]);
        for n in 2..9 {
            let h = ghz_prep_hamiltonian(n).unwrap();
            assert_eq!(h.lambda_min(), -1.0);
            assert_eq!(h.lambda_max(), 0.0);
            assert_eq!(h.degeneracy(), 2);
            assert!(h.is_z2_symmetric());
        }
        assert!(ghz_prep_hamiltonian(1).is_err());
    }

    #[test]
    fn flat_spectrum_is_fully_degenerate() {
        let s = spectrum_summary(&[0.0; 16]).unwrap();
        assert_eq!(s.degeneracy, 16);
        assert!(spectrum_summary(&[]).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = SkInstance::generate(5, 42).unwrap();
        let text = inst.to_json().unwrap();
        assert!(text.starts_with("{\"n\":5,\"seed\":42,\"couplings\":[[0,1,"));
        assert_eq!(SkInstance::from_json(&text).unwrap(), inst);
        assert!(SkInstance::from_json(r#"{"n":3,"seed":1,"couplings":[[1,0,0.5]]}"#).is_err());
    }
}
