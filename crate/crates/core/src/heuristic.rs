//! Problem-specific hyperparameter search for the ion-native ansatz.
//!
//! Two stages, both driven only by the single-layer energy
//! `E(beta, gamma, A) = <psi_1| H_P |psi_1>`:
//!
//! 1. [`bcd_search`]: block coordinate descent alternating between the
//!    variational pair `theta = (beta, gamma)` and the hyperparameters `A`,
//!    with random restarts.
//! 2. [`find_alpha`]: a uniform shrink `A -> alpha A`. Because the coupling
//!    matrix is quadratic in `A`, `E(beta, gamma, alpha A) = E(beta, alpha^2
//!    gamma, A)`; a smaller `alpha` stretches the landscape along `gamma`.
//!    The factor maximizes the fraction of grid cells whose energy lies below
//!    `level * E*`, subject to the rescaled minimum staying inside the grid.
//!
//! # Energy level orientation
//!
//! A cell counts when `E_ij < level * E*`. This selects near-minimum cells
//! only when `level < 1` for a negative minimum (traceless problems such as
//! SK, `level = 0.95`) and `level > 1` for a positive minimum (non-negative
//! costs such as the shifted GHZ-preparation cost `1 - g`, `level = 1.1`).
//! [`level_selects_minimum`] checks the pairing.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ionchain::{coupling_matrix, CouplingBase};
use crate::optimizers::{
    direction_set_minimize, grid_scan, grid_seeded_minimize, scalar_maximize, Bounds, DirectionSetSettings, GridScan,
    ScalarSearchSettings, INFEASIBLE,
};
use crate::problems::DiagonalHamiltonian;
use crate::rng::SeededRng;
use crate::simulator::{ising_phase_table, single_layer_energy, BETA_MAX, GAMMA_MAX};
use crate::{Error, Result};

/// Side of the grid used to seed every `theta` minimization.
pub const THETA_GRID: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcdConfig {
    pub k_max: usize,
    pub m_max: usize,
    /// Convergence threshold: a restart stops as soon as `E_k < eps`.
    pub eps: f64,
    /// Stagnation threshold on `|E_k - E_{k-1}|`.
    pub delta: f64,
    pub seed: u64,
}

impl BcdConfig {
    /// SK convention: `eps = 0.5 * lambda_0`.
    pub fn sk(lambda_min: f64, seed: u64) -> Self {
        Self { k_max: 50, m_max: 10, eps: 0.5 * lambda_min, delta: 1e-3, seed }
    }

    /// GHZ preparation: `eps = 0` on the non-negative cost `1 - g`, so every
    /// restart runs to stagnation and the best one wins.
    pub fn ghz(seed: u64) -> Self {
        Self { k_max: 50, m_max: 10, eps: 0.0, delta: 1e-3, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.m_max == 0 {
            return Err(Error::invalid("k_max and m_max must be at least 1"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("stagnation threshold delta must be positive"));
        }
        if !self.eps.is_finite() {
            return Err(Error::invalid("convergence threshold must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleConfig {
    pub grid_n: usize,
    pub level: f64,
    /// Largest allowed drift `|E* - E*_alpha|` of the grid minimum.
    pub tol: f64,
    pub alpha0: f64,
}

impl RescaleConfig {
    pub fn sk() -> Self {
        Self { grid_n: 20, level: 0.95, tol: 0.05, alpha0: 0.8 }
    }

    pub fn ghz() -> Self {
        Self { grid_n: 20, level: 1.1, tol: 0.05, alpha0: 0.8 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::invalid("rescale grid needs at least 2 points per axis"));
        }
        if !(self.level > 0.0) || !(self.tol > 0.0) {
            return Err(Error::invalid("level and tol must be positive"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::invalid("alpha0 must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Whether `E < level * e_star` picks cells near the minimum `e_star`.
pub fn level_selects_minimum(level: f64, e_star: f64) -> bool {
    (e_star < 0.0 && level < 1.0) || (e_star > 0.0 && level > 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `E_k < eps`: the search returns `A_k` immediately.
    Converged,
    /// `|E_k - E_{k-1}| < delta`: the restart ends.
    Stagnated,
    /// Neither: `A` is re-optimized at fixed `theta_k`.
    UpdatedA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub k: usize,
    pub energy: f64,
    pub theta: [f64; 2],
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOutcome {
    pub a_star: Vec<f64>,
    pub alpha_star: f64,
    pub best_energy: f64,
    pub n_evals_train: usize,
    pub n_evals_rescale: usize,
    pub restarts_used: usize,
    /// True when `E_k < eps` was reached, or when the selected restart ended
    /// at a fixed point (stagnation) instead of exhausting `k_max`.
    pub converged: bool,
    /// False when every probed `alpha` was infeasible and `alpha0` was kept.
    pub rescale_feasible: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

/// Block coordinate descent on an arbitrary single-layer energy
/// `energy(theta, A)` with `theta in [0, pi/2] x [0, 2 pi]`, `A in [-1, 1]^n`.
///
/// Restart `m` draws `A ~ U(-1, 1)^n` from the stream derived from
/// `(seed, m)`. Iteration `k` minimizes over `theta` (grid-seeded
/// quasi-Newton), then checks convergence, then stagnation, and only then
/// re-optimizes `A` with the direction-set method started at `A_k`. Each
/// finished restart stores `(E_k, A_k)` and the lowest stored pair is
/// returned. `alpha_star` is left at 1.
pub fn bcd_generic<E>(n: usize, mut energy: E, config: &BcdConfig) -> Result<HeuristicOutcome>
where
    E: FnMut(&[f64; 2], &[f64]) -> f64,
{
    config.validate()?;
    let a_bounds = Bounds::uniform(n, -1.0, 1.0)?;
    let mut evals = 0usize;
    let mut trace = Vec::new();
    let mut stored: Vec<(f64, Vec<f64>, bool)> = Vec::with_capacity(config.m_max);

    for restart in 0..config.m_max {
        let mut rng = SeededRng::derived(config.seed, &[restart as u64]);
        let mut a: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut e_prev = f64::INFINITY;
        let mut e_k = f64::INFINITY;
        let mut stagnated = false;

        for k in 1..=config.k_max {
            let theta_opt = grid_seeded_minimize(|x| energy(&[x[0], x[1]], &a), (0.0, BETA_MAX), (0.0, GAMMA_MAX), THETA_GRID)?;
            evals += theta_opt.n_evals;
            let theta = [theta_opt.x[0], theta_opt.x[1]];
            e_k = theta_opt.f;

            if e_k < config.eps {
                trace.push(TraceEntry { restart, k, energy: e_k, theta, branch: Branch::Converged });
                return Ok(HeuristicOutcome {
                    a_star: a,
                    alpha_star: 1.0,
                    best_energy: e_k,
                    n_evals_train: evals,
                    n_evals_rescale: 0,
                    restarts_used: restart + 1,
                    converged: true,
                    rescale_feasible: true,
                    trace,
                });
            }
            if (e_k - e_prev).abs() < config.delta {
                trace.push(TraceEntry { restart, k, energy: e_k, theta, branch: Branch::Stagnated });
                stagnated = true;
                break;
            }
            trace.push(TraceEntry { restart, k, energy: e_k, theta, branch: Branch::UpdatedA });
            if k == config.k_max {
                // The pair (E_k, A_k) is what gets stored; a further A update
                // could never be scored.
                break;
            }
            let a_opt = direction_set_minimize(|x| energy(&theta, x), &a, &a_bounds, DirectionSetSettings::default())?;
            evals += a_opt.n_evals;
            a = a_opt.x;
            e_prev = e_k;
        }
        stored.push((e_k, a, stagnated));
    }

    // First occurrence wins ties.
    let (best_idx, _) = stored
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, be), (i, (e, _, _))| if *e < be { (i, *e) } else { (bi, be) });
    let (best_energy, a_star, stagnated) = stored.swap_remove(best_idx);
    Ok(HeuristicOutcome {
        a_star,
        alpha_star: 1.0,
        best_energy,
        n_evals_train: evals,
        n_evals_rescale: 0,
        restarts_used: config.m_max,
        converged: stagnated,
        rescale_feasible: true,
        trace,
    })
}

/// Single-layer ion-native energy `E(theta, alpha A)` for `H_P`.
pub struct SingleLayerEnergy<'a> {
    hamiltonian: &'a DiagonalHamiltonian,
    base: &'a CouplingBase,
    buffer: Vec<Complex64>,
    cached_a: Vec<f64>,
    cached_table: Vec<f64>,
}

impl<'a> SingleLayerEnergy<'a> {
    pub fn new(hamiltonian: &'a DiagonalHamiltonian, base: &'a CouplingBase) -> Result<Self> {
        if hamiltonian.n != base.n {
            return Err(Error::DimensionMismatch { expected: base.n, found: hamiltonian.n });
        }
        Ok(Self { hamiltonian, base, buffer: Vec::new(), cached_a: Vec::new(), cached_table: Vec::new() })
    }

    fn table(&mut self, a: &[f64]) -> &[f64] {
        if self.cached_a != a {
            let clipped: Vec<f64> = a.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let j = coupling_matrix(self.base, &clipped).expect("dimensions checked at construction");
            self.cached_table = ising_phase_table(&j);
            self.cached_a = a.to_vec();
        }
        &self.cached_table
    }

    pub fn energy(&mut self, theta: &[f64; 2], a: &[f64]) -> f64 {
        self.table(a);
        single_layer_energy(&self.cached_table, self.hamiltonian.n, &self.hamiltonian.energies, theta[0], theta[1], &mut self.buffer)
    }
}

/// Runs the block coordinate descent on the ion-native single-layer energy.
pub fn bcd_search(hamiltonian: &DiagonalHamiltonian, base: &CouplingBase, config: &BcdConfig) -> Result<HeuristicOutcome> {
    let mut single = SingleLayerEnergy::new(hamiltonian, base)?;
    bcd_generic(hamiltonian.n, |theta, a| single.energy(theta, a), config)
}

/// Grid of `E(beta, gamma, alpha A)` over the given ranges.
pub fn single_layer_landscape(
    hamiltonian: &DiagonalHamiltonian,
    base: &CouplingBase,
    a: &[f64],
    alpha: f64,
    beta_range: (f64, f64),
    gamma_range: (f64, f64),
    grid_n: usize,
) -> Result<GridScan> {
    let scaled: Vec<f64> = a.iter().map(|v| alpha * v).collect();
    let table = ising_phase_table(&coupling_matrix(base, &scaled)?);
    let mut buffer = Vec::new();
    grid_scan(
        |x| single_layer_energy(&table, hamiltonian.n, &hamiltonian.energies, x[0], x[1], &mut buffer),
        beta_range,
        gamma_range,
        grid_n,
    )
}

/// Fraction value computed from a rescaled landscape grid: `-1` if the grid
/// minimum drifted from `e_star_ref` by more than `tol`, otherwise the
/// share of cells with `E_ij < level * E*_alpha`.
pub fn fraction_from_grid(scan: &GridScan, e_star_ref: f64, config: &RescaleConfig) -> f64 {
    if (e_star_ref - scan.min).abs() > config.tol {
        return INFEASIBLE;
    }
    let threshold = config.level * scan.min;
    let below = scan.values.as_slice().iter().filter(|&&e| e < threshold).count();
    below as f64 / scan.values.as_slice().len() as f64
}

/// `f(alpha)` for an arbitrary rescaled landscape `energy(beta, gamma, alpha)`.
/// Returns the value and the number of energy evaluations (`N^2`).
pub fn rescale_fraction_generic<E>(mut energy: E, alpha: f64, config: &RescaleConfig, e_star_ref: f64) -> Result<(f64, usize)>
where
    E: FnMut(f64, f64, f64) -> f64,
{
    let scan = grid_scan(|x| energy(x[0], x[1], alpha), (0.0, BETA_MAX), (0.0, GAMMA_MAX), config.grid_n)?;
    Ok((fraction_from_grid(&scan, e_star_ref, config), config.grid_n * config.grid_n))
}

/// `f(alpha)` on the ion-native single-layer landscape of `alpha A*`.
pub fn rescale_fraction(
    hamiltonian: &DiagonalHamiltonian,
    base: &CouplingBase,
    a_star: &[f64],
    alpha: f64,
    config: &RescaleConfig,
    e_star_ref: f64,
) -> Result<f64> {
    config.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("rescaling factor {alpha} outside (0, 1]")));
    }
    let scan = single_layer_landscape(hamiltonian, base, a_star, alpha, (0.0, BETA_MAX), (0.0, GAMMA_MAX), config.grid_n)?;
    Ok(fraction_from_grid(&scan, e_star_ref, config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub alpha: f64,
    pub fraction: f64,
    pub e_star_ref: f64,
    /// Energy evaluations, reference grid included.
    pub n_evals: usize,
    /// Number of `f(alpha)` evaluations.
    pub f_evals: usize,
    pub feasible: bool,
}

/// Maximizes `f(alpha)` for an arbitrary rescaled landscape.
pub fn find_alpha_generic<E>(mut energy: E, config: &RescaleConfig) -> Result<AlphaSearch>
where
    E: FnMut(f64, f64, f64) -> f64,
{
    config.validate()?;
    let reference = grid_scan(|x| energy(x[0], x[1], 1.0), (0.0, BETA_MAX), (0.0, GAMMA_MAX), config.grid_n)?;
    let e_star_ref = reference.min;
    let mut n_evals = config.grid_n * config.grid_n;
    let mut failure = None;
    let search = scalar_maximize(
        |alpha| match rescale_fraction_generic(&mut energy, alpha, config, e_star_ref) {
            Ok((v, used)) => {
                n_evals += used;
                v
            }
            Err(e) => {
                failure.get_or_insert(e);
                INFEASIBLE
            }
        },
        config.alpha0,
        ScalarSearchSettings::default(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(AlphaSearch {
        alpha: search.x[0],
        fraction: search.f,
        e_star_ref,
        n_evals,
        f_evals: search.n_evals,
        feasible: search.converged,
    })
}

/// Picks `alpha*` for the trained `A*`.
pub fn find_alpha(
    hamiltonian: &DiagonalHamiltonian,
    base: &CouplingBase,
    a_star: &[f64],
    config: &RescaleConfig,
) -> Result<AlphaSearch> {
    let n = hamiltonian.n;
    let mut cache: Option<(u64, Vec<f64>)> = None;
    let mut buffer = Vec::new();
    let mut failure = None;
    let result = find_alpha_generic(
        |beta, gamma, alpha| {
            if cache.as_ref().map(|(bits, _)| *bits) != Some(alpha.to_bits()) {
                let scaled: Vec<f64> = a_star.iter().map(|v| alpha * v).collect();
                match coupling_matrix(base, &scaled) {
                    Ok(j) => cache = Some((alpha.to_bits(), ising_phase_table(&j))),
                    Err(e) => {
                        failure.get_or_insert(e);
                        return f64::NAN;
                    }
                }
            }
            let table = &cache.as_ref().expect("filled above").1;
            single_layer_energy(table, n, &hamiltonian.energies, beta, gamma, &mut buffer)
        },
        config,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    result
}

/// Full heuristic: block coordinate descent followed by the rescaling search.
pub fn run_heuristic(
    hamiltonian: &DiagonalHamiltonian,
    base: &CouplingBase,
    bcd: &BcdConfig,
    rescale: &RescaleConfig,
) -> Result<HeuristicOutcome> {
    let mut outcome = bcd_search(hamiltonian, base, bcd)?;
    let alpha = find_alpha(hamiltonian, base, &outcome.a_star, rescale)?;
    outcome.alpha_star = alpha.alpha;
    outcome.n_evals_rescale = alpha.n_evals;
    outcome.rescale_feasible = alpha.feasible;
    Ok(outcome)
}

/// The rescaled configuration `alpha* A*`.
pub fn scaled_hyperparameters(outcome: &HeuristicOutcome) -> Vec<f64> {
    outcome.a_star.iter().map(|a| a * outcome.alpha_star).collect()
}

/// Angle grid for `gamma` compressed by `alpha^2`: `[0, 2 pi alpha^2)`.
pub fn compressed_gamma_range(alpha: f64) -> (f64, f64) {
    (0.0, 2.0 * PI * alpha * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn immediate_convergence_returns_first_a() {
        let cfg = BcdConfig { k_max: 50, m_max: 10, eps: 0.0, delta: 1e-3, seed: 5 };
        let out = bcd_generic(3, |t, _a| (t[0] - 0.5).powi(2) - 1.0, &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.restarts_used, 1);
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].branch, Branch::Converged);
        let mut rng = SeededRng::derived(5, &[0]);
        let a0: Vec<f64> = (0..3).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        assert_eq!(out.a_star, a0);
    }

    #[test]
    fn constant_in_a_stagnates_on_second_iteration() {
        let cfg = BcdConfig { k_max: 50, m_max: 3, eps: -10.0, delta: 1e-3, seed: 1 };
        let out = bcd_generic(2, |t, _a| (t[0] - 0.5).powi(2) + (t[1] - 1.0).powi(2), &cfg).unwrap();
        assert!(!out.trace.iter().any(|e| e.branch == Branch::Converged));
        for r in 0..3 {
            let entries: Vec<_> = out.trace.iter().filter(|e| e.restart == r).collect();
            assert_eq!(entries.len(), 2);
            assert_eq!(entries[0].branch, Branch::UpdatedA);
            assert_eq!(entries[1].branch, Branch::Stagnated);
            assert_eq!(entries[1].k, 2);
        }
        assert_eq!(out.restarts_used, 3);
    }

    #[test]
    fn best_restart_is_returned() {
        // Energy depends on A only through its first coordinate; restarts
        // start at different random A, and the A step drives A_0 -> 1.
        let cfg = BcdConfig { k_max: 2, m_max: 4, eps: -10.0, delta: 1e-12, seed: 9 };
        let out = bcd_generic(2, |t, a| (t[0] - 0.5).powi(2) - a[0], &cfg).unwrap();
        let finals: Vec<f64> = (0..4)
            .map(|r| out.trace.iter().rfind(|e| e.restart == r).unwrap().energy)
            .collect();
        assert!(finals.iter().all(|&e| out.best_energy <= e));
        assert!(!out.converged);
    }

    #[test]
    fn level_orientation() {
        assert!(level_selects_minimum(0.95, -2.0));
        assert!(level_selects_minimum(1.1, 0.3));
        assert!(!level_selects_minimum(1.1, -2.0));
        assert!(!level_selects_minimum(0.95, 0.3));
    }

    #[test]
    fn config_validation() {
        assert!(BcdConfig { k_max: 0, ..BcdConfig::sk(-1.0, 0) }.validate().is_err());
        assert!(BcdConfig { delta: 0.0, ..BcdConfig::sk(-1.0, 0) }.validate().is_err());
        assert!(RescaleConfig { grid_n: 1, ..RescaleConfig::sk() }.validate().is_err());
        assert!(RescaleConfig { alpha0: 0.0, ..RescaleConfig::sk() }.validate().is_err());
    }

    #[test]
    fn guard_branch_on_escaped_minimum() {
        // Minimum near gamma = 5; shrinking by alpha = 0.5 maps the grid onto
        // gamma' < pi / 2 and the minimum leaves the grid.
        let cfg = RescaleConfig::sk();
        let surface = |b: f64, g: f64| -((-(b - 0.7).powi(2) - (g - 5.0).powi(2)).exp());
        let landscape = |b: f64, g: f64, alpha: f64| surface(b, alpha * alpha * g);
        let (e_ref, _) = {
            let scan = grid_scan(|x| landscape(x[0], x[1], 1.0), (0.0, BETA_MAX), (0.0, GAMMA_MAX), 20).unwrap();
            (scan.min, ())
        };
        let (v, used) = rescale_fraction_generic(landscape, 0.5, &cfg, e_ref).unwrap();
        assert_eq!(v, INFEASIBLE);
        assert_eq!(used, 400);
        let (v1, _) = rescale_fraction_generic(landscape, 1.0, &cfg, e_ref).unwrap();
        assert!(v1 >= 0.0);
    }
}
