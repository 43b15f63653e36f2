//! Independent reference constructions shared by the integration tests.
//! Everything here uses dense `nalgebra` matrices and never calls the
//! crate's simulator.

#![allow(dead_code)]

use ionqaoa::linalg::Matrix;
use ionqaoa::rng::SeededRng;
use nalgebra::{Complex, DMatrix, DVector};

pub type C = Complex<f64>;

fn pauli_x() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)])
}

fn hadamard() -> DMatrix<C> {
    let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// `op` acting on `qubit` of an `n`-qubit register; qubit 0 is the least
/// significant bit of the basis index.
pub fn embed(op: &DMatrix<C>, qubit: usize, n: usize) -> DMatrix<C> {
    let mut out = DMatrix::<C>::identity(1, 1);
    for q in (0..n).rev() {
        let factor = if q == qubit { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// `exp(-i t H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C>, t: f64) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C::new(0.0, -t * l).exp()),
    ));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

pub fn mixer(n: usize) -> DMatrix<C> {
    let mut h = DMatrix::zeros(1 << n, 1 << n);
    for q in 0..n {
        h += embed(&pauli_x(), q, n);
    }
    h
}

/// `sum_{i<j} J_ij X_i X_j`.
pub fn xx_interaction(j: &Matrix) -> DMatrix<C> {
    let n = j.rows();
    let mut h = DMatrix::zeros(1 << n, 1 << n);
    for a in 0..n {
        for b in (a + 1)..n {
            let term = embed(&pauli_x(), a, n) * embed(&pauli_x(), b, n);
            h += term * C::new(j[(a, b)], 0.0);
        }
    }
    h
}

pub fn hadamard_all(n: usize) -> DMatrix<C> {
    let mut out = DMatrix::<C>::identity(1, 1);
    for _ in 0..n {
        out = out.kronecker(&hadamard());
    }
    out
}

pub fn plus_state(n: usize) -> DVector<C> {
    let dim = 1 << n;
    DVector::from_element(dim, C::new(1.0 / (dim as f64).sqrt(), 0.0))
}

/// `prod_k [exp(-i beta_k H_x) H_+ exp(-i gamma_k H_I) H_+] |+>`.
pub fn dense_ion_state(j: &Matrix, betas: &[f64], gammas: &[f64]) -> DVector<C> {
    let n = j.rows();
    let hx = mixer(n);
    let hi = xx_interaction(j);
    let hp = hadamard_all(n);
    let mut psi = plus_state(n);
    for (&b, &g) in betas.iter().zip(gammas) {
        psi = &hp * (expm_hermitian(&hi, g) * (&hp * psi));
        psi = expm_hermitian(&hx, b) * psi;
    }
    psi
}

/// `prod_k [exp(-i beta_k H_x) exp(-i gamma_k H_P)] |+>` with diagonal `H_P`.
pub fn dense_standard_state(energies: &[f64], betas: &[f64], gammas: &[f64]) -> DVector<C> {
    let n = energies.len().trailing_zeros() as usize;
    let hx = mixer(n);
    let hp = DMatrix::from_diagonal(&DVector::from_iterator(energies.len(), energies.iter().map(|&e| C::new(e, 0.0))));
    let mut psi = plus_state(n);
    for (&b, &g) in betas.iter().zip(gammas) {
        psi = expm_hermitian(&hp, g) * psi;
        psi = expm_hermitian(&hx, b) * psi;
    }
    psi
}

pub fn distance(a: &[num_complex::Complex64], b: &DVector<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.re - y.re).powi(2) + (x.im - y.im).powi(2)).sum::<f64>().sqrt()
}

/// Haar-random state of dimension `dim` from normalized complex Gaussians.
pub fn haar_state(rng: &mut SeededRng, dim: usize) -> Vec<C> {
    let v: Vec<C> = (0..dim).map(|_| C::new(rng.standard_normal(), rng.standard_normal())).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

pub fn fidelity(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
}
