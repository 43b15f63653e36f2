//! Linear ion chain: equilibrium positions, radial phonon modes,
//! Lamb-Dicke factors and the Ising coupling base.
//!
//! Positions are dimensionless (in units of the axial length scale
//! `l = (e^2 / (4 pi eps0 M omega_z^2))^(1/3)`); they minimize
//! `V(u) = sum_i u_i^2 + sum_{i != j} 1 / |u_i - u_j|`.
//! Radial modes come from the Hessian of the full potential in units of
//! `M omega_z^2`, and only the radial (x) branch is kept.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{
    AMU_KG, CA40_MASS_AMU, DEFAULT_DETUNING_OFFSET_HZ, DEFAULT_OMEGA_MAX_HZ, DEFAULT_OMEGA_X_HZ,
    DEFAULT_OMEGA_Z_HZ, DEFAULT_WAVELENGTH_M, HBAR, MS,
};
use crate::linalg::{cholesky_solve, symmetric_eigen, Matrix};
use crate::{Error, Result};

/// Physical trap and laser parameters. Frequencies are ordinary (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub n: usize,
    pub mass_amu: f64,
    pub omega_x_hz: f64,
    pub omega_z_hz: f64,
    pub wavelength_m: f64,
    pub detuning_offset_hz: f64,
    pub omega_max_hz: f64,
}

impl TrapConfig {
    /// 40Ca+ chain with 1 MHz radial / 0.15 MHz axial confinement,
    /// 729.15 nm beams detuned 1 kHz above the radial COM mode and 30 kHz
    /// maximal Rabi frequency.
    pub fn calcium(n: usize) -> Self {
        Self {
            n,
            mass_amu: CA40_MASS_AMU,
            omega_x_hz: DEFAULT_OMEGA_X_HZ,
            omega_z_hz: DEFAULT_OMEGA_Z_HZ,
            wavelength_m: DEFAULT_WAVELENGTH_M,
            detuning_offset_hz: DEFAULT_DETUNING_OFFSET_HZ,
            omega_max_hz: DEFAULT_OMEGA_MAX_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n == 0 {
            return Err(Error::invalid("ion count must be at least 1"));
        }
        if !(positive(self.omega_z_hz) && self.omega_x_hz.is_finite() && self.omega_x_hz > self.omega_z_hz) {
            return Err(Error::invalid("trap frequencies must satisfy omega_x > omega_z > 0"));
        }
        if !positive(self.mass_amu) {
            return Err(Error::invalid("ion mass must be positive"));
        }
        if !positive(self.wavelength_m) {
            return Err(Error::invalid("wavelength must be positive"));
        }
        if !positive(self.detuning_offset_hz) {
            return Err(Error::invalid("detuning offset must be positive"));
        }
        if !positive(self.omega_max_hz) {
            return Err(Error::invalid("maximal Rabi frequency must be positive"));
        }
        Ok(())
    }

    pub fn omega_x(&self) -> f64 {
        2.0 * PI * self.omega_x_hz
    }

    pub fn omega_z(&self) -> f64 {
        2.0 * PI * self.omega_z_hz
    }

    /// Beat-note detuning `mu = omega_x + 2 pi * offset`, rad/s.
    pub fn laser_detuning(&self) -> f64 {
        2.0 * PI * (self.omega_x_hz + self.detuning_offset_hz)
    }

    pub fn radial_ratio(&self) -> f64 {
        self.omega_x_hz / self.omega_z_hz
    }
}

/// Phonon spectrum of the radial modes, ordered by descending frequency so
/// that mode 0 is the center-of-mass mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhononData {
    pub positions: Vec<f64>,
    /// Angular frequencies, rad/s.
    pub frequencies: Vec<f64>,
    /// Column `m` is the unit participation vector of mode `m`.
    pub eigenvectors: Matrix,
    /// Entry `(i, m)` couples ion `i` to mode `m`.
    pub lamb_dicke: Matrix,
}

impl PhononData {
    pub fn compute(trap: &TrapConfig) -> Result<Self> {
        trap.validate()?;
        let positions = equilibrium_positions(trap.n)?;
        let matrix = mode_matrix(&positions, trap.radial_ratio())?;
        let modes = radial_modes(&matrix, trap.omega_z())?;
        let lamb_dicke = lamb_dicke(&modes, trap.wavelength_m, trap.mass_amu);
        Ok(Self {
            positions,
            frequencies: modes.frequencies,
            eigenvectors: modes.eigenvectors,
            lamb_dicke,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }
}

#[derive(Debug, Clone)]
pub struct RadialModes {
    pub frequencies: Vec<f64>,
    pub eigenvectors: Matrix,
}

const EQUILIBRIUM_TOL: f64 = 1e-12;
const EQUILIBRIUM_MAX_ITER: usize = 200;

fn potential(u: &[f64]) -> f64 {
    let mut v: f64 = u.iter().map(|x| x * x).sum();
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            v += 2.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

fn potential_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= 2.0 * d.signum() / (d * d);
            }
        }
    }
    g
}

fn potential_hessian(u: &[f64]) -> Matrix {
    let n = u.len();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 2.0;
        for j in 0..n {
            if i != j {
                let c = 4.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] = -c;
            }
        }
    }
    h
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn strictly_increasing(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Dimensionless equilibrium positions of an `n`-ion chain, ascending.
///
/// Damped Newton iteration on the gradient of the potential, started from an
/// evenly spaced chain whose spacing is twice the empirical minimal spacing
/// `2.018 / n^0.559`. Steps are halved until the potential decreases and the
/// ordering is preserved.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("ion count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let spacing = 2.0 * 2.018 / (n as f64).powf(0.559);
    let center = (n as f64 + 1.0) / 2.0;
    let mut u: Vec<f64> = (1..=n).map(|i| (i as f64 - center) * spacing).collect();
    let mut v = potential(&u);
    let mut g = potential_gradient(&u);

    for _ in 0..EQUILIBRIUM_MAX_ITER {
        if norm(&g) <= EQUILIBRIUM_TOL {
            break;
        }
        let h = potential_hessian(&u);
        let step = cholesky_solve(&h, &g)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x - t * s).collect();
            if strictly_increasing(&trial) {
                let vt = potential(&trial);
                let gt = potential_gradient(&trial);
                // Near the minimum V stalls at round-off; accept on gradient decrease.
                if vt < v || norm(&gt) < norm(&g) {
                    u = trial;
                    v = vt;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // The chain is mirror symmetric; averaging removes residual asymmetry.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let gs = potential_gradient(&sym);
    if norm(&gs) <= norm(&g) {
        u = sym;
        g = gs;
    }
    let grad_norm = norm(&g);
    if grad_norm > 1e-10 {
        return Err(Error::EquilibriumNotConverged { iterations: EQUILIBRIUM_MAX_ITER, grad_norm });
    }
    Ok(u)
}

/// Radial Hessian in units of `M omega_z^2`:
/// diagonal `r_x^2 - sum_{k != j} 1/|u_j - u_k|^3`, off-diagonal `+1/|u_i - u_j|^3`.
pub fn mode_matrix(u: &[f64], radial_ratio: f64) -> Result<Matrix> {
    let n = u.len();
    for i in 1..n {
        if !(u[i] > u[i - 1]) {
            return Err(Error::CoincidentPositions { first: i - 1, second: i });
        }
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = radial_ratio * radial_ratio;
        for j in 0..n {
            if i != j {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, i)] -= c;
                a[(i, j)] = c;
            }
        }
    }
    Ok(a)
}

/// Diagonalizes the radial mode matrix: `omega_m = sqrt(lambda_m) * omega_z`.
pub fn radial_modes(matrix: &Matrix, omega_z: f64) -> Result<RadialModes> {
    if matrix.asymmetry() > 1e-12 * matrix.max_abs().max(1.0) {
        return Err(Error::invalid("mode matrix is not symmetric"));
    }
    let eig = symmetric_eigen(matrix)?;
    if let Some((mode, &eigenvalue)) = eig.values.iter().enumerate().find(|(_, &l)| l <= 0.0) {
        return Err(Error::UnstableMode { mode, eigenvalue });
    }
    Ok(RadialModes {
        frequencies: eig.values.iter().map(|l| l.sqrt() * omega_z).collect(),
        eigenvectors: eig.vectors,
    })
}

/// `eta_i^m = (2 pi / lambda) sqrt(hbar / (2 M omega_m)) b_i^m`.
pub fn lamb_dicke(modes: &RadialModes, wavelength_m: f64, mass_amu: f64) -> Matrix {
    let dk = 2.0 * PI / wavelength_m;
    let mass = mass_amu * AMU_KG;
    let n = modes.frequencies.len();
    Matrix::from_fn(n, n, |i, m| {
        dk * (HBAR / (2.0 * mass * modes.frequencies[m])).sqrt() * modes.eigenvectors[(i, m)]
    })
}

/// Phonon-mediated part of the Ising couplings, `J_ij = Omega_i Omega_j C_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingBase {
    pub n: usize,
    pub omega_max_hz: f64,
    /// Row-major `n x n`, units of 1/(rad/s), zero diagonal.
    pub c: Vec<f64>,
}

impl CouplingBase {
    pub fn from_trap(trap: &TrapConfig) -> Result<Self> {
        let phonons = PhononData::compute(trap)?;
        coupling_base(&phonons, trap.laser_detuning(), trap.omega_max_hz)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n + j]
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn omega_max(&self) -> f64 {
        2.0 * PI * self.omega_max_hz
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let base: Self = serde_json::from_str(text)?;
        if base.c.len() != base.n * base.n {
            return Err(Error::DimensionMismatch { expected: base.n * base.n, found: base.c.len() });
        }
        Ok(base)
    }
}

/// `C_ij = sum_m eta_i^m eta_j^m omega_m / (mu^2 - omega_m^2)` for `i != j`.
pub fn coupling_base(phonons: &PhononData, mu: f64, omega_max_hz: f64) -> Result<CouplingBase> {
    let n = phonons.n();
    for (mode, &w) in phonons.frequencies.iter().enumerate() {
        if ((mu - w) / w).abs() <= 1e-6 {
            return Err(Error::Resonance { mode, detuning: mu, frequency: w });
        }
    }
    let weights: Vec<f64> = phonons.frequencies.iter().map(|&w| w / (mu * mu - w * w)).collect();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = (0..n)
                .map(|m| phonons.lamb_dicke[(i, m)] * phonons.lamb_dicke[(j, m)] * weights[m])
                .sum();
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    Ok(CouplingBase { n, omega_max_hz, c })
}

/// `J_ij = A_i A_j Omega_max^2 C_ij` in rad/ms, i.e. `2 pi x` the coupling
/// frequency in kHz.
pub fn coupling_matrix(base: &CouplingBase, a: &[f64]) -> Result<Matrix> {
    if a.len() != base.n {
        return Err(Error::DimensionMismatch { expected: base.n, found: a.len() });
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::HyperparameterDomain { index, value });
    }
    let scale = base.omega_max().powi(2) * MS;
    Ok(Matrix::from_fn(base.n, base.n, |i, j| a[i] * a[j] * scale * base.get(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ion_sits_at_center() {
        assert_eq!(equilibrium_positions(1).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_ions_rejected() {
        assert!(equilibrium_positions(0).is_err());
    }

    #[test]
    fn mode_matrix_single_ion() {
        let m = mode_matrix(&[0.0], 3.0).unwrap();
        assert_eq!(m.as_slice(), &[9.0]);
    }

    #[test]
    fn mode_matrix_two_ions_unit_separation() {
        let r = 2.5;
        let m = mode_matrix(&[-0.5, 0.5], r).unwrap();
        assert_eq!(m.as_slice(), &[r * r - 1.0, 1.0, 1.0, r * r - 1.0]);
    }

    #[test]
    fn mode_matrix_rejects_coincident_ions() {
        let err = mode_matrix(&[-1.0, 0.3, 0.3], 5.0).unwrap_err();
        assert!(matches!(err, Error::CoincidentPositions { first: 1, second: 2 }));
    }

    #[test]
    fn two_ion_radial_spectrum() {
        let r: f64 = 6.0;
        let m = mode_matrix(&[-0.5, 0.5], r).unwrap();
        let modes = radial_modes(&m, 1.0).unwrap();
        assert!((modes.frequencies[0] - r).abs() < 1e-12);
        assert!((modes.frequencies[1] - (r * r - 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unstable_chain_reported() {
        // A weak radial trap cannot hold a long linear chain.
        let u = equilibrium_positions(10).unwrap();
        let m = mode_matrix(&u, 1.5).unwrap();
        assert!(matches!(radial_modes(&m, 1.0), Err(Error::UnstableMode { .. })));
    }

    #[test]
    fn resonant_detuning_rejected() {
        let trap = TrapConfig::calcium(3);
        let ph = PhononData::compute(&trap).unwrap();
        let err = coupling_base(&ph, ph.frequencies[1] * (1.0 + 1e-8), 30e3).unwrap_err();
        assert!(matches!(err, Error::Resonance { mode: 1, .. }));
    }

    #[test]
    fn coupling_matrix_domain_checks() {
        let base = CouplingBase::from_trap(&TrapConfig::calcium(3)).unwrap();
        assert!(matches!(
            coupling_matrix(&base, &[0.2, 1.5, 0.0]),
            Err(Error::HyperparameterDomain { index: 1, .. })
        ));
        assert!(matches!(coupling_matrix(&base, &[0.2, 0.1]), Err(Error::DimensionMismatch { .. })));
        let zero = coupling_matrix(&base, &[0.0; 3]).unwrap();
        assert!(zero.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_trap_rejected() {
        let mut trap = TrapConfig::calcium(4);
        trap.omega_z_hz = 2.0e6;
        assert!(trap.validate().is_err());
        let mut trap = TrapConfig::calcium(4);
        trap.wavelength_m = 0.0;
        assert!(trap.validate().is_err());
    }

    #[test]
    fn coupling_base_json_round_trip() {
        let base = CouplingBase::from_trap(&TrapConfig::calcium(4)).unwrap();
        let text = base.to_json().unwrap();
        assert_eq!(CouplingBase::from_json(&text).unwrap(), base);
    }
}
