//! Physical constants and default trap parameters.
//!
//! CODATA 2018 values, pinned so that every build computes identical
//! Lamb-Dicke factors and coupling matrices.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Atomic mass unit, kg.
pub const AMU_KG: f64 = 1.660_539_066_60e-27;

/// Mass of a 40Ca+ ion in atomic mass units.
pub const CA40_MASS_AMU: f64 = 39.96;

/// Radial center-of-mass trap frequency, Hz.
pub const DEFAULT_OMEGA_X_HZ: f64 = 1.0e6;

/// Axial center-of-mass trap frequency, Hz.
pub const DEFAULT_OMEGA_Z_HZ: f64 = 0.15e6;

/// Laser wavelength, m.
pub const DEFAULT_WAVELENGTH_M: f64 = 729.15e-9;

/// Detuning of the bichromatic beat note above the radial COM mode, Hz.
pub const DEFAULT_DETUNING_OFFSET_HZ: f64 = 1.0e3;

/// Maximal Rabi frequency, Hz.
pub const DEFAULT_OMEGA_MAX_HZ: f64 = 30.0e3;

/// Seconds per millisecond. Couplings are angular frequencies in rad/ms
/// (a value `J` means `J / 2 pi` kHz) and phase angles `gamma` are
/// evolution times in ms, so `gamma * J` is a phase in radians.
pub const MS: f64 = 1.0e-3;
