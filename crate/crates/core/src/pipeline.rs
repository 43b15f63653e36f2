//! Layerwise training, solve classification and multi-cycle campaigns.
//!
//! Random streams are split from one master seed with [`derive_seed`]:
//!
//! | stream                    | tags                                   |
//! |---------------------------|----------------------------------------|
//! | SK instance `i`           | `[TAG_INSTANCE, i]`                    |
//! | heuristic, cycle `c`      | `[TAG_HEURISTIC, i, c]`                |
//! | training, cycle `c`       | `[TAG_TRAINING, i, c]`                 |
//! | standard QAOA training    | `[TAG_STANDARD, i]`                    |
//!
//! Inside [`layerwise_train`], run `r` at depth `p` draws from
//! `SeededRng::derived(seed, &[r, p])`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::heuristic::{run_heuristic, scaled_hyperparameters, BcdConfig, HeuristicOutcome, RescaleConfig};
use crate::ionchain::CouplingBase;
use crate::optimizers::{quasi_newton_minimize, Bounds, QuasiNewtonSettings};
use crate::problems::{ghz_prep_hamiltonian, DiagonalHamiltonian, SkInstance};
use crate::rng::{derive_seed, SeededRng};
use crate::simulator::{
    approx_ratio, ground_overlap, prepare_state, AnsatzSpec, EnergyEvaluator, LayerParams, Variant, BETA_MAX, GAMMA_MAX,
};
use crate::{Error, Result};

pub const TAG_INSTANCE: u64 = 1;
pub const TAG_HEURISTIC: u64 = 2;
pub const TAG_TRAINING: u64 = 3;
pub const TAG_STANDARD: u64 = 4;

/// Overlap threshold above which an instance counts as solved.
pub const SOLVED_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerwiseConfig {
    pub p_max: usize,
    #[serde(default = "default_restarts")]
    pub restarts_per_step: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_restarts() -> usize {
    25
}

fn default_runs() -> usize {
    3
}

impl LayerwiseConfig {
    pub fn new(p_max: usize, seed: u64) -> Self {
        Self { p_max, restarts_per_step: default_restarts(), runs: default_runs(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_max == 0 || self.restarts_per_step == 0 || self.runs == 0 {
            return Err(Error::invalid("p_max, restarts_per_step and runs must be positive"));
        }
        Ok(())
    }
}

/// Best trained circuit at one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: usize,
    pub cycle: usize,
    pub variant: Variant,
    pub depth: usize,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub energy: f64,
    pub ratio: f64,
    pub overlap: f64,
    pub solved: bool,
    /// Cost evaluations spent on depths `1..=depth`, summed over all runs.
    pub n_evals: usize,
}

/// Trains `spec` depth by depth, `runs` times, and reports the best run per
/// depth. `instance` and `cycle` are left at 0 for the caller to fill in.
///
/// At depth `p` each run first optimizes only the new layer `(beta_p,
/// gamma_p)` from `restarts_per_step` uniform starts in the angle box, with
/// earlier layers frozen, keeps the best, then optimizes all `2p` angles
/// jointly from there.
pub fn layerwise_train(spec: &AnsatzSpec, hamiltonian: &DiagonalHamiltonian, config: &LayerwiseConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let mut evaluator = EnergyEvaluator::new(spec, hamiltonian)?;
    let pair_bounds = Bounds::new(vec![0.0, 0.0], vec![BETA_MAX, GAMMA_MAX])?;
    let settings = QuasiNewtonSettings::default();

    let mut params: Vec<Vec<f64>> = vec![Vec::new(); config.runs];
    let mut cumulative = 0usize;
    let mut records = Vec::with_capacity(config.p_max);

    for depth in 1..=config.p_max {
        let joint_bounds = Bounds::new(
            (0..depth).flat_map(|_| [0.0, 0.0]).collect(),
            (0..depth).flat_map(|_| [BETA_MAX, GAMMA_MAX]).collect(),
        )?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (run, frozen) in params.iter_mut().enumerate() {
            let mut rng = SeededRng::derived(config.seed, &[run as u64, depth as u64]);
            let mut layer_best: Option<(f64, Vec<f64>)> = None;
            let mut full = frozen.clone();
            full.extend([0.0, 0.0]);
            let head = full.len() - 2;
            for _ in 0..config.restarts_per_step {
                let start = [rng.uniform_in(0.0, BETA_MAX), rng.uniform_in(0.0, GAMMA_MAX)];
                let res = quasi_newton_minimize(
                    |x| {
                        full[head] = x[0];
                        full[head + 1] = x[1];
                        evaluator.energy_interleaved(&full)
                    },
                    &start,
                    &pair_bounds,
                    settings,
                )?;
                cumulative += res.n_evals;
                if layer_best.as_ref().is_none_or(|(f, _)| res.f < *f) {
                    layer_best = Some((res.f, res.x));
                }
            }
            let (_, layer) = layer_best.expect("restarts_per_step >= 1");
            full[head] = layer[0];
            full[head + 1] = layer[1];
            let joint = quasi_newton_minimize(|x| evaluator.energy_interleaved(x), &full, &joint_bounds, settings)?;
            cumulative += joint.n_evals;
            *frozen = joint.x.clone();
            if best.as_ref().is_none_or(|(f, _)| joint.f < *f) {
                best = Some((joint.f, joint.x));
            }
        }
        let (_, x) = best.expect("runs >= 1");
        records.push(evaluate_record(spec, hamiltonian, &x, cumulative)?);
    }
    Ok(records)
}

/// Recomputes energy, ratio and overlap from the stored angles.
pub fn evaluate_record(spec: &AnsatzSpec, hamiltonian: &DiagonalHamiltonian, x: &[f64], n_evals: usize) -> Result<RunRecord> {
    let params = LayerParams::from_interleaved(x)?;
    let state = prepare_state(spec, &params)?;
    let energy = crate::simulator::energy(&state, hamiltonian)?;
    let ratio = approx_ratio(energy, hamiltonian.lambda_min(), hamiltonian.lambda_max())?;
    let overlap = ground_overlap(&state, hamiltonian)?;
    Ok(RunRecord {
        instance: 0,
        cycle: 0,
        variant: spec.variant(),
        depth: params.depth(),
        betas: params.betas,
        gammas: params.gammas,
        energy,
        ratio,
        overlap,
        solved: overlap > SOLVED_THRESHOLD,
        n_evals,
    })
}

/// Heuristic followed by layerwise training of the rescaled ion-native ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAttempt {
    pub instance: usize,
    pub cycle: usize,
    pub heuristic: HeuristicOutcome,
    pub records: Vec<RunRecord>,
}

impl InstanceAttempt {
    /// Solved when the deepest trained circuit exceeds the overlap threshold.
    pub fn solved(&self) -> bool {
        self.records.last().is_some_and(|r| r.solved)
    }

    pub fn training_evals(&self) -> usize {
        self.records.last().map_or(0, |r| r.n_evals)
    }
}

/// Runs the heuristic on `heuristic_target` and trains against `hamiltonian`.
///
/// The two differ only for GHZ preparation, where the heuristic sees the
/// non-negative cost `1 - g` (see [`ghz_heuristic_target`]).
#[allow(clippy::too_many_arguments)]
pub fn solve_instance(
    hamiltonian: &DiagonalHamiltonian,
    heuristic_target: &DiagonalHamiltonian,
    base: &CouplingBase,
    bcd: &BcdConfig,
    rescale: &RescaleConfig,
    layerwise: &LayerwiseConfig,
    instance: usize,
    cycle: usize,
) -> Result<InstanceAttempt> {
    let heuristic = run_heuristic(heuristic_target, base, bcd, rescale)?;
    let spec = AnsatzSpec::ion_native_from_base(base, &scaled_hyperparameters(&heuristic), 1.0)?;
    let mut records = layerwise_train(&spec, hamiltonian, layerwise)?;
    for r in &mut records {
        r.instance = instance;
        r.cycle = cycle;
    }
    Ok(InstanceAttempt { instance, cycle, heuristic, records })
}

/// GHZ-preparation cost shifted to `1 - g >= 0`, the form on which the
/// heuristic's `eps = 0` and `level = 1.1` settings are meaningful.
pub fn ghz_heuristic_target(n: usize) -> Result<DiagonalHamiltonian> {
    Ok(ghz_prep_hamiltonian(n)?.shifted(1.0))
}

/// GHZ state preparation: heuristic plus layerwise training up to `p_max`.
/// Streams are tagged with `n` in the instance slot.
pub fn prepare_ghz(n: usize, base: &CouplingBase, p_max: usize, master_seed: u64) -> Result<InstanceAttempt> {
    let hamiltonian = ghz_prep_hamiltonian(n)?;
    let target = ghz_heuristic_target(n)?;
    let bcd = BcdConfig::ghz(derive_seed(master_seed, &[TAG_HEURISTIC, n as u64, 1]));
    let layerwise = LayerwiseConfig::new(p_max, derive_seed(master_seed, &[TAG_TRAINING, n as u64, 1]));
    solve_instance(&hamiltonian, &target, base, &bcd, &RescaleConfig::ghz(), &layerwise, n, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub n: usize,
    pub n_instances: usize,
    pub cycles: usize,
    /// Training depth; the solve check uses the deepest circuit.
    pub p_max: usize,
    pub master_seed: u64,
    pub k_max: usize,
    pub m_max: usize,
    pub delta: f64,
    pub rescale: RescaleConfig,
    pub restarts_per_step: usize,
    pub runs: usize,
}

impl CampaignConfig {
    /// Desk-scale SK campaign at `p = n`.
    pub fn desk(n: usize, master_seed: u64) -> Self {
        Self {
            n,
            n_instances: 20,
            cycles: 4,
            p_max: n,
            master_seed,
            k_max: 50,
            m_max: 10,
            delta: 1e-3,
            rescale: RescaleConfig::sk(),
            restarts_per_step: default_restarts(),
            runs: default_runs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0 || self.n_instances == 0 || self.p_max == 0 {
            return Err(Error::invalid("cycles, n_instances and p_max must be positive"));
        }
        if self.restarts_per_step == 0 || self.runs == 0 {
            return Err(Error::invalid("restarts_per_step and runs must be positive"));
        }
        self.rescale.validate()
    }

    pub fn instance_seed(&self, instance: usize) -> u64 {
        derive_seed(self.master_seed, &[TAG_INSTANCE, instance as u64])
    }

    pub fn instances(&self) -> Result<Vec<SkInstance>> {
        (0..self.n_instances).map(|i| SkInstance::generate(self.n, self.instance_seed(i))).collect()
    }

    fn bcd(&self, lambda_min: f64, instance: usize, cycle: usize) -> BcdConfig {
        BcdConfig {
            k_max: self.k_max,
            m_max: self.m_max,
            eps: 0.5 * lambda_min,
            delta: self.delta,
            seed: derive_seed(self.master_seed, &[TAG_HEURISTIC, instance as u64, cycle as u64]),
        }
    }

    fn layerwise(&self, instance: usize, cycle: usize) -> LayerwiseConfig {
        LayerwiseConfig {
            p_max: self.p_max,
            restarts_per_step: self.restarts_per_step,
            runs: self.runs,
            seed: derive_seed(self.master_seed, &[TAG_TRAINING, instance as u64, cycle as u64]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub n: usize,
    pub n_instances: usize,
    pub p_max: usize,
    /// Cumulative solved fraction after each cycle.
    pub per_cycle_solved: Vec<f64>,
    /// Fraction with `g > 0.5` at depth `p` (index `p - 1`), taken from each
    /// instance's last attempt.
    pub per_depth_solved: Vec<f64>,
    pub mean_heuristic_train_evals: f64,
    pub mean_heuristic_rescale_evals: f64,
    pub mean_training_evals: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    /// Every attempt, ordered by cycle then instance.
    pub attempts: Vec<InstanceAttempt>,
    pub summary: CampaignSummary,
}

impl CampaignResult {
    /// The last attempt of every instance, by instance index.
    pub fn final_attempts(&self) -> Vec<&InstanceAttempt> {
        let mut last: Vec<Option<&InstanceAttempt>> = vec![None; self.config.n_instances];
        for a in &self.attempts {
            last[a.instance] = Some(a);
        }
        last.into_iter().flatten().collect()
    }
}

/// SK campaign: each cycle reruns the heuristic and training on the
/// instances still unsolved, with fresh streams per `(instance, cycle)`.
pub fn run_campaign(config: &CampaignConfig, base: &CouplingBase) -> Result<CampaignResult> {
    config.validate()?;
    if base.n != config.n {
        return Err(Error::DimensionMismatch { expected: config.n, found: base.n });
    }
    let hamiltonians: Vec<DiagonalHamiltonian> =
        config.instances()?.iter().map(|inst| inst.hamiltonian()).collect::<Result<_>>()?;

    let mut solved = vec![false; config.n_instances];
    let mut attempts = Vec::new();
    let mut per_cycle_solved = Vec::with_capacity(config.cycles);
    for cycle in 1..=config.cycles {
        let pending: Vec<usize> = (0..config.n_instances).filter(|&i| !solved[i]).collect();
        let results: Vec<Result<InstanceAttempt>> = pending
            .par_iter()
            .map(|&i| {
                let h = &hamiltonians[i];
                solve_instance(h, h, base, &config.bcd(h.lambda_min(), i, cycle), &config.rescale, &config.layerwise(i, cycle), i, cycle)
            })
            .collect();
        for attempt in results {
            let attempt = attempt?;
            solved[attempt.instance] = attempt.solved();
            attempts.push(attempt);
        }
        per_cycle_solved.push(fraction(solved.iter().filter(|&&s| s).count(), config.n_instances));
    }

    let mut result = CampaignResult {
        config: config.clone(),
        attempts,
        summary: CampaignSummary {
            n: config.n,
            n_instances: config.n_instances,
            p_max: config.p_max,
            per_cycle_solved,
            per_depth_solved: Vec::new(),
            mean_heuristic_train_evals: 0.0,
            mean_heuristic_rescale_evals: 0.0,
            mean_training_evals: 0.0,
        },
    };
    let finals: Vec<Vec<RunRecord>> = result.final_attempts().iter().map(|a| a.records.clone()).collect();
    result.summary.per_depth_solved = depth_curve(&finals, config.p_max);
    let count = result.attempts.len() as f64;
    result.summary.mean_heuristic_train_evals = result.attempts.iter().map(|a| a.heuristic.n_evals_train as f64).sum::<f64>() / count;
    result.summary.mean_heuristic_rescale_evals =
        result.attempts.iter().map(|a| a.heuristic.n_evals_rescale as f64).sum::<f64>() / count;
    result.summary.mean_training_evals = result.attempts.iter().map(|a| a.training_evals() as f64).sum::<f64>() / count;
    Ok(result)
}

fn fraction(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

/// Fraction of instances with `g > 0.5` at each depth `1..=p_max`.
pub fn depth_curve(records: &[Vec<RunRecord>], p_max: usize) -> Vec<f64> {
    (1..=p_max)
        .map(|p| {
            let hits = records.iter().filter(|rs| rs.iter().any(|r| r.depth == p && r.solved)).count();
            fraction(hits, records.len())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub depths: Vec<usize>,
    pub ion_native: Vec<f64>,
    pub standard_qaoa: Vec<f64>,
    pub standard_records: Vec<RunRecord>,
}

/// Trains standard QAOA on the campaign's instances with the same layerwise
/// settings and pairs its depth curve with the ion-native one.
pub fn compare_standard_qaoa(campaign: &CampaignResult) -> Result<VariantComparison> {
    let config = &campaign.config;
    let instances = config.instances()?;
    let results: Vec<Result<Vec<RunRecord>>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let h = inst.hamiltonian()?;
            let spec = AnsatzSpec::standard_qaoa(&h);
            let layerwise = LayerwiseConfig {
                p_max: config.p_max,
                restarts_per_step: config.restarts_per_step,
                runs: config.runs,
                seed: derive_seed(config.master_seed, &[TAG_STANDARD, i as u64]),
            };
            let mut records = layerwise_train(&spec, &h, &layerwise)?;
            for r in &mut records {
                r.instance = i;
            }
            Ok(records)
        })
        .collect();
    let standard: Vec<Vec<RunRecord>> = results.into_iter().collect::<Result<_>>()?;
    Ok(VariantComparison {
        depths: (1..=config.p_max).collect(),
        ion_native: campaign.summary.per_depth_solved.clone(),
        standard_qaoa: depth_curve(&standard, config.p_max),
        standard_records: standard.into_iter().flatten().collect(),
    })
}
