//! Exact statevector simulation of ion-native and standard QAOA circuits.
//!
//! Both circuits start from `|+>^n` and apply `p` layers of a diagonal phase
//! `exp(-i gamma_k D)` followed by the transverse mixer `exp(-i beta_k sum_i X_i)`.
//! For the ion-native ansatz `D` is the Ising energy `sum_{i<j} J_ij s_i s_j`:
//! conjugating `exp(-i gamma sum J_ij X_i X_j)` with Hadamards on every qubit
//! turns it into the same exponential of `Z_i Z_j`. For standard QAOA `D` is
//! the problem Hamiltonian itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ionchain::{coupling_matrix, CouplingBase};
use crate::linalg::Matrix;
use crate::problems::{spin, DiagonalHamiltonian};
use crate::{Error, Result};

/// Upper bound of the mixer angle range, `beta in [0, pi/2)`.
pub const BETA_MAX: f64 = std::f64::consts::FRAC_PI_2;
/// Upper bound of the phase angle range, `gamma in [0, 2 pi)`.
pub const GAMMA_MAX: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    IonNative,
    StandardQaoa,
}

/// A fixed circuit family: the variant plus its diagonal phase generator.
#[derive(Debug, Clone)]
pub struct AnsatzSpec {
    variant: Variant,
    n: usize,
    couplings: Option<Matrix>,
    phase_table: Vec<f64>,
}

/// `E_z = sum_{i<j} J_ij s_i s_j` for all basis states.
///
/// Filled incrementally: the state with its highest set bit cleared has one
/// spin flipped from +1 to -1, which shifts the energy by
/// `-2 sum_{j != h} J_hj s_j`.
pub fn ising_phase_table(j: &Matrix) -> Vec<f64> {
    let n = j.rows();
    let dim = 1usize << n;
    let mut table = vec![0.0; dim];
    table[0] = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).map(|(a, b)| j[(a, b)]).sum();
    for z in 1..dim {
        let h = usize::BITS as usize - 1 - z.leading_zeros() as usize;
        let base = z ^ (1 << h);
        let field: f64 = (0..n).filter(|&q| q != h).map(|q| j[(h, q)] * spin(base, q)).sum();
        table[z] = table[base] - 2.0 * field;
    }
    table
}

impl AnsatzSpec {
    /// Ion-native ansatz driven by the coupling matrix `J` (rad/ms).
    pub fn ion_native(j: Matrix) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::DimensionMismatch { expected: j.rows(), found: j.cols() });
        }
        if j.asymmetry() > 1e-12 * j.max_abs().max(1.0) {
            return Err(Error::invalid("coupling matrix must be symmetric"));
        }
        let n = j.rows();
        if n == 0 || n > 24 {
            return Err(Error::invalid(format!("unsupported qubit count {n}")));
        }
        let phase_table = ising_phase_table(&j);
        Ok(Self { variant: Variant::IonNative, n, couplings: Some(j), phase_table })
    }

    /// Ion-native ansatz with hyperparameters `alpha * A`.
    pub fn ion_native_from_base(base: &CouplingBase, a: &[f64], alpha: f64) -> Result<Self> {
        let scaled: Vec<f64> = a.iter().map(|v| v * alpha).collect();
        Self::ion_native(coupling_matrix(base, &scaled)?)
    }

    /// Standard QAOA with phase separator `exp(-i gamma H_P)`.
    pub fn standard_qaoa(hamiltonian: &DiagonalHamiltonian) -> Self {
        Self {
            variant: Variant::StandardQaoa,
            n: hamiltonian.n,
            couplings: None,
            phase_table: hamiltonian.energies.clone(),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn couplings(&self) -> Option<&Matrix> {
        self.couplings.as_ref()
    }

    pub fn phase_table(&self) -> &[f64] {
        &self.phase_table
    }
}

/// Variational angles of a depth-`p` circuit.
///
/// The nominal domain is `beta in [0, pi/2)` and `gamma in [0, 2 pi)`;
/// optimizers work on the closed box, which is harmless since the state is
/// periodic in every `beta` with period `pi/2` up to a global phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl LayerParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.len() != gammas.len() {
            return Err(Error::DimensionMismatch { expected: betas.len(), found: gammas.len() });
        }
        Ok(Self { betas, gammas })
    }

    /// Reads `[beta_1, gamma_1, beta_2, gamma_2, ...]`.
    pub fn from_interleaved(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::invalid("interleaved parameter vector must have even length"));
        }
        Ok(Self {
            betas: x.iter().step_by(2).copied().collect(),
            gammas: x.iter().skip(1).step_by(2).copied().collect(),
        })
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.betas.iter().zip(&self.gammas).flat_map(|(&b, &g)| [b, g]).collect()
    }

    pub fn depth(&self) -> usize {
        self.betas.len()
    }

    pub fn in_domain(&self) -> bool {
        self.betas.iter().all(|b| (0.0..=BETA_MAX).contains(b))
            && self.gammas.iter().all(|g| (0.0..=GAMMA_MAX).contains(g))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn plus_state(n: usize) -> Self {
        let dim = 1usize << n;
        let a = 1.0 / (dim as f64).sqrt();
        Self { amplitudes: vec![Complex64::new(a, 0.0); dim] }
    }

    pub fn basis_state(n: usize, z: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[z] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies Pauli X to `qubit`.
    pub fn apply_x(&mut self, qubit: usize) {
        let bit = 1usize << qubit;
        for z in 0..self.dim() {
            if z & bit == 0 {
                self.amplitudes.swap(z, z | bit);
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn apply_phase(amps: &mut [Complex64], table: &[f64], gamma: f64) {
    for (a, &e) in amps.iter_mut().zip(table) {
        *a *= Complex64::cis(-gamma * e);
    }
}

/// `exp(-i beta X)` on every qubit.
fn apply_mixer(amps: &mut [Complex64], n: usize, beta: f64) {
    let (s, c) = beta.sin_cos();
    let mis = Complex64::new(0.0, -s);
    for q in 0..n {
        let bit = 1usize << q;
        for z in 0..amps.len() {
            if z & bit == 0 {
                let a = amps[z];
                let b = amps[z | bit];
                amps[z] = a * c + b * mis;
                amps[z | bit] = b * c + a * mis;
            }
        }
    }
}

/// Writes the depth-`p` state into `buffer` (resized as needed).
pub fn prepare_into(spec: &AnsatzSpec, params: &LayerParams, buffer: &mut Vec<Complex64>) {
    let dim = spec.dim();
    let a = 1.0 / (dim as f64).sqrt();
    buffer.clear();
    buffer.resize(dim, Complex64::new(a, 0.0));
    for (&beta, &gamma) in params.betas.iter().zip(&params.gammas) {
        apply_phase(buffer, &spec.phase_table, gamma);
        apply_mixer(buffer, spec.n, beta);
    }
}

pub fn prepare_state(spec: &AnsatzSpec, params: &LayerParams) -> Result<StateVector> {
    if params.betas.len() != params.gammas.len() {
        return Err(Error::DimensionMismatch { expected: params.betas.len(), found: params.gammas.len() });
    }
    let mut amplitudes = Vec::new();
    prepare_into(spec, params, &mut amplitudes);
    Ok(StateVector { amplitudes })
}

/// Ion-native state `prod_k [e^{-i beta_k H_x} H_+ e^{-i gamma_k H_I} H_+] |+>^n`.
pub fn ion_ansatz_state(spec: &AnsatzSpec, params: &LayerParams) -> Result<StateVector> {
    if spec.variant != Variant::IonNative {
        return Err(Error::invalid("ion_ansatz_state requires an ion-native spec"));
    }
    prepare_state(spec, params)
}

/// Standard QAOA state `prod_k [e^{-i beta_k H_x} e^{-i gamma_k H_P}] |+>^n`.
pub fn standard_qaoa_state(spec: &AnsatzSpec, params: &LayerParams) -> Result<StateVector> {
    if spec.variant != Variant::StandardQaoa {
        return Err(Error::invalid("standard_qaoa_state requires a standard QAOA spec"));
    }
    prepare_state(spec, params)
}

fn check_dims(state: &StateVector, hamiltonian: &DiagonalHamiltonian) -> Result<()> {
    if state.dim() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: state.dim() });
    }
    Ok(())
}

/// `<psi|H_P|psi>`.
pub fn energy(state: &StateVector, hamiltonian: &DiagonalHamiltonian) -> Result<f64> {
    check_dims(state, hamiltonian)?;
    Ok(expectation(&state.amplitudes, &hamiltonian.energies))
}

#[inline]
pub(crate) fn expectation(amps: &[Complex64], energies: &[f64]) -> f64 {
    amps.iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum()
}

/// Probability mass on the ground space of `H_P`.
pub fn ground_overlap(state: &StateVector, hamiltonian: &DiagonalHamiltonian) -> Result<f64> {
    check_dims(state, hamiltonian)?;
    Ok(hamiltonian.ground_indices().iter().map(|&z| state.amplitudes[z].norm_sqr()).sum())
}

/// Normalized approximation ratio `(lambda_max - e) / (lambda_max - lambda_0)`.
pub fn approx_ratio(e: f64, lambda_min: f64, lambda_max: f64) -> Result<f64> {
    if lambda_max <= lambda_min {
        return Err(Error::DegenerateSpectrum { value: lambda_min });
    }
    Ok((lambda_max - e) / (lambda_max - lambda_min))
}

/// Reusable energy evaluator for one `(ansatz, H_P)` pair.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator<'a> {
    spec: &'a AnsatzSpec,
    energies: &'a [f64],
    buffer: Vec<Complex64>,
}

impl<'a> EnergyEvaluator<'a> {
    pub fn new(spec: &'a AnsatzSpec, hamiltonian: &'a DiagonalHamiltonian) -> Result<Self> {
        if spec.dim() != hamiltonian.dim() {
            return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: spec.dim() });
        }
        Ok(Self { spec, energies: &hamiltonian.energies, buffer: Vec::with_capacity(spec.dim()) })
    }

    pub fn energy(&mut self, params: &LayerParams) -> f64 {
        prepare_into(self.spec, params, &mut self.buffer);
        expectation(&self.buffer, self.energies)
    }

    /// Energy for interleaved `[beta_1, gamma_1, ...]`.
    pub fn energy_interleaved(&mut self, x: &[f64]) -> f64 {
        let dim = self.spec.dim();
        let a = 1.0 / (dim as f64).sqrt();
        self.buffer.clear();
        self.buffer.resize(dim, Complex64::new(a, 0.0));
        for layer in x.chunks_exact(2) {
            apply_phase(&mut self.buffer, &self.spec.phase_table, layer[1]);
            apply_mixer(&mut self.buffer, self.spec.n, layer[0]);
        }
        expectation(&self.buffer, self.energies)
    }
}

/// Single-layer energy `E(beta, gamma; table)` without allocating a spec.
pub fn single_layer_energy(phase_table: &[f64], n: usize, energies: &[f64], beta: f64, gamma: f64, buffer: &mut Vec<Complex64>) -> f64 {
    let dim = 1usize << n;
    let a = 1.0 / (dim as f64).sqrt();
    buffer.clear();
    buffer.resize(dim, Complex64::new(a, 0.0));
    apply_phase(buffer, phase_table, gamma);
    apply_mixer(buffer, n, beta);
    expectation(buffer, energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{ghz_prep_hamiltonian, sk_hamiltonian};

    fn uniform_j(n: usize, v: f64) -> Matrix {
        Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { v })
    }

    #[test]
    fn ising_table_matches_direct_sum() {
        let n = 5;
        let j = Matrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { ((a + b) as f64 * 0.37).sin() + (a * b) as f64 * 0.01 });
        let table = ising_phase_table(&j);
        for (z, &value) in table.iter().enumerate() {
            let mut e = 0.0;
            for a in 0..n {
                for b in (a + 1)..n {
                    e += j[(a, b)] * spin(z, a) * spin(z, b);
                }
            }
            assert!((value - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gamma_keeps_plus_state() {
        let spec = AnsatzSpec::ion_native(uniform_j(4, 0.8)).unwrap();
        let params = LayerParams::new(vec![0.7], vec![0.0]).unwrap();
        let psi = ion_ansatz_state(&spec, &params).unwrap();
        assert!((psi.fidelity(&StateVector::plus_state(4)) - 1.0).abs() < 1e-12);

        let h = sk_hamiltonian(4, 1).unwrap();
        let spec = AnsatzSpec::standard_qaoa(&h);
        let psi = standard_qaoa_state(&spec, &params).unwrap();
        assert!((psi.fidelity(&StateVector::plus_state(4)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variant_mismatch_rejected() {
        let h = sk_hamiltonian(3, 1).unwrap();
        let spec = AnsatzSpec::standard_qaoa(&h);
        let params = LayerParams::new(vec![0.1], vec![0.2]).unwrap();
        assert!(ion_ansatz_state(&spec, &params).is_err());
        assert!(LayerParams::new(vec![0.1], vec![]).is_err());
    }

    #[test]
    fn energy_and_overlap_basics() {
        let h = sk_hamiltonian(5, 3).unwrap();
        let g = h.ground_indices()[0];
        let basis = StateVector::basis_state(5, g);
        assert!((energy(&basis, &h).unwrap() - h.lambda_min()).abs() < 1e-12);
        assert!((ground_overlap(&basis, &h).unwrap() - 1.0).abs() < 1e-12);
        assert!(energy(&StateVector::plus_state(5), &h).unwrap().abs() < 1e-12);

        let excited = (0..32).find(|z| !h.ground_indices().contains(z)).unwrap();
        assert_eq!(ground_overlap(&StateVector::basis_state(5, excited), &h).unwrap(), 0.0);
        assert!(energy(&StateVector::plus_state(4), &h).is_err());
    }

    #[test]
    fn ghz_state_has_unit_overlap() {
        let h = ghz_prep_hamiltonian(4).unwrap();
        let mut ghz = StateVector::basis_state(4, 0);
        ghz.amplitudes[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        ghz.amplitudes[15] = Complex64::new(0.5f64.sqrt(), 0.0);
        assert!((ground_overlap(&ghz, &h).unwrap() - 1.0).abs() < 1e-12);
        assert!((energy(&ghz, &h).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn approx_ratio_endpoints() {
        assert_eq!(approx_ratio(-2.0, -2.0, 3.0).unwrap(), 1.0);
        assert_eq!(approx_ratio(3.0, -2.0, 3.0).unwrap(), 0.0);
        assert_eq!(approx_ratio(0.5, -2.0, 3.0).unwrap(), 0.5);
        assert!(matches!(approx_ratio(0.0, 1.0, 1.0), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn interleaved_round_trip() {
        let p = LayerParams::new(vec![0.1, 0.2], vec![1.0, 2.0]).unwrap();
        assert_eq!(p.to_interleaved(), vec![0.1, 1.0, 0.2, 2.0]);
        assert_eq!(LayerParams::from_interleaved(&p.to_interleaved()).unwrap(), p);
    }

    #[test]
    fn evaluator_paths_agree() {
        let h = sk_hamiltonian(5, 9).unwrap();
        let spec = AnsatzSpec::ion_native(uniform_j(5, 0.6)).unwrap();
        let params = LayerParams::new(vec![0.3, 1.1], vec![0.8, 2.5]).unwrap();
        let direct = energy(&prepare_state(&spec, &params).unwrap(), &h).unwrap();
        let mut ev = EnergyEvaluator::new(&spec, &h).unwrap();
        assert_eq!(ev.energy(&params), direct);
        assert_eq!(ev.energy_interleaved(&params.to_interleaved()), direct);
        let mut buf = Vec::new();
        let one = single_layer_energy(spec.phase_table(), 5, &h.energies, 0.3, 0.8, &mut buf);
        assert_eq!(one, ev.energy_interleaved(&[0.3, 0.8]));
    }
}
