//! Experiment configuration: an optional TOML file, then command-line
//! overrides, resolved into [`Settings`]. The config hash is the SHA-256 of
//! the resolved settings serialized as JSON.
//!
//! ```toml
//! master_seed = 0
//! output_dir = "results"
//!
//! [trap]            # any TrapConfig field except n
//! omega_x_hz = 1.0e6
//!
//! [problem]
//! family = "sk"     # or "ghz_prep"
//! n = 6
//! count = 20        # or seeds = [..] for explicit SK instance seeds
//!
//! [heuristic]
//! k_max = 50
//! m_max = 10
//! delta = 1e-3
//! grid_n = 20
//! level = 0.95
//! tol = 0.05
//! alpha0 = 0.8
//!
//! [training]
//! p_max = 6
//! restarts_per_step = 25
//! runs = 3
//! cycles = 4
//!
//! [analysis]
//! configuration = "asymmetric"   # or "trained"
//! instance = 0
//! express_depth = 8
//! svd_depth = 10
//! samples = 10000
//! bins = 75
//! k_states = 20
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ionqaoa::heuristic::RescaleConfig;
use ionqaoa::ionchain::TrapConfig;
use ionqaoa::pipeline::TAG_INSTANCE;
use ionqaoa::rng::derive_seed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bad configuration or missing prerequisite; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sk,
    GhzPrep,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Sk => "sk",
            Family::GhzPrep => "ghz_prep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    /// `A_0 = -0.3`, all other `A_i = 1`.
    Asymmetric,
    /// `alpha* A*` from a stored SK heuristic outcome.
    Trained,
}

impl Configuration {
    pub fn label(self) -> &'static str {
        match self {
            Configuration::Asymmetric => "asymmetric",
            Configuration::Trained => "trained",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub trap: TrapFile,
    #[serde(default)]
    pub problem: ProblemFile,
    #[serde(default)]
    pub heuristic: HeuristicFile,
    #[serde(default)]
    pub training: TrainingFile,
    #[serde(default)]
    pub analysis: AnalysisFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapFile {
    pub mass_amu: Option<f64>,
    pub omega_x_hz: Option<f64>,
    pub omega_z_hz: Option<f64>,
    pub wavelength_m: Option<f64>,
    pub detuning_offset_hz: Option<f64>,
    pub omega_max_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub family: Option<Family>,
    pub n: Option<usize>,
    pub count: Option<usize>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicFile {
    pub k_max: Option<usize>,
    pub m_max: Option<usize>,
    pub delta: Option<f64>,
    pub grid_n: Option<usize>,
    pub level: Option<f64>,
    pub tol: Option<f64>,
    pub alpha0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingFile {
    pub p_max: Option<usize>,
    pub restarts_per_step: Option<usize>,
    pub runs: Option<usize>,
    pub cycles: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisFile {
    pub configuration: Option<Configuration>,
    pub instance: Option<usize>,
    pub express_depth: Option<usize>,
    pub svd_depth: Option<usize>,
    pub samples: Option<usize>,
    pub bins: Option<usize>,
    pub k_states: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of ions / qubits.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Problem family.
    #[arg(long, value_enum, global = true)]
    pub family: Option<Family>,
    /// Number of SK instances.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Iteration cap per heuristic restart.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Heuristic restarts.
    #[arg(long, global = true)]
    pub m_max: Option<usize>,
    /// Deepest trained circuit.
    #[arg(long, global = true)]
    pub p_max: Option<usize>,
    /// Random starts per layerwise step.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Independent layerwise runs per instance.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Benchmark cycles.
    #[arg(long, global = true)]
    pub cycles: Option<usize>,
    /// Hyperparameter configuration analysed by `express` and `svd`.
    #[arg(long, value_enum, global = true)]
    pub configuration: Option<Configuration>,
    /// Instance whose trained configuration is analysed.
    #[arg(long, global = true)]
    pub instance: Option<usize>,
    /// Circuit depth for `express` or `svd`.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Fidelity pairs for `express`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Histogram bins for `express`.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Number of states `K` for `svd`.
    #[arg(long, global = true)]
    pub k_states: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub master_seed: u64,
    pub trap: TrapConfig,
    pub problem: ProblemSettings,
    pub heuristic: HeuristicSettings,
    pub training: TrainingSettings,
    pub analysis: AnalysisSettings,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSettings {
    pub family: Family,
    pub n: usize,
    /// SK instance seeds, explicit or derived from the master seed.
    pub seeds: Vec<u64>,
    pub explicit_seeds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeuristicSettings {
    pub k_max: usize,
    pub m_max: usize,
    pub delta: f64,
    pub rescale: RescaleConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingSettings {
    pub p_max: usize,
    pub restarts_per_step: usize,
    pub runs: usize,
    pub cycles: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSettings {
    pub configuration: Configuration,
    pub instance: usize,
    pub express_depth: usize,
    pub svd_depth: usize,
    pub samples: usize,
    pub bins: usize,
    pub k_states: usize,
}

impl Settings {
    pub fn resolve(file: &FileConfig, o: &Overrides) -> anyhow::Result<Self> {
        let master_seed = o.seed.or(file.master_seed).unwrap_or(0);
        let family = o.family.or(file.problem.family).unwrap_or(Family::Sk);
        let n = o.n.or(file.problem.n).unwrap_or(6);
        if n == 0 {
            return Err(usage("n must be at least 1"));
        }

        let defaults = TrapConfig::calcium(n);
        let t = &file.trap;
        let trap = TrapConfig {
            n,
            mass_amu: t.mass_amu.unwrap_or(defaults.mass_amu),
            omega_x_hz: t.omega_x_hz.unwrap_or(defaults.omega_x_hz),
            omega_z_hz: t.omega_z_hz.unwrap_or(defaults.omega_z_hz),
            wavelength_m: t.wavelength_m.unwrap_or(defaults.wavelength_m),
            detuning_offset_hz: t.detuning_offset_hz.unwrap_or(defaults.detuning_offset_hz),
            omega_max_hz: t.omega_max_hz.unwrap_or(defaults.omega_max_hz),
        };

        let (seeds, explicit_seeds) = match (&file.problem.seeds, o.count) {
            (Some(seeds), None) => (seeds.clone(), true),
            _ => {
                let count = o.count.or(file.problem.count).unwrap_or(20);
                let seeds = (0..count).map(|i| derive_seed(master_seed, &[TAG_INSTANCE, i as u64])).collect();
                (seeds, false)
            }
        };
        if seeds.is_empty() {
            return Err(usage("problem needs at least one instance"));
        }

        let h = &file.heuristic;
        let base = match family {
            Family::Sk => RescaleConfig::sk(),
            Family::GhzPrep => RescaleConfig::ghz(),
        };
        let rescale = RescaleConfig {
            grid_n: h.grid_n.unwrap_or(base.grid_n),
            level: h.level.unwrap_or(base.level),
            tol: h.tol.unwrap_or(base.tol),
            alpha0: h.alpha0.unwrap_or(base.alpha0),
        };
        let heuristic = HeuristicSettings {
            k_max: o.k_max.or(h.k_max).unwrap_or(50),
            m_max: o.m_max.or(h.m_max).unwrap_or(10),
            delta: h.delta.unwrap_or(1e-3),
            rescale,
        };

        let tr = &file.training;
        let training = TrainingSettings {
            p_max: o.p_max.or(tr.p_max).unwrap_or(n),
            restarts_per_step: o.restarts.or(tr.restarts_per_step).unwrap_or(25),
            runs: o.runs.or(tr.runs).unwrap_or(3),
            cycles: o.cycles.or(tr.cycles).unwrap_or(4),
        };

        let a = &file.analysis;
        let analysis = AnalysisSettings {
            configuration: o.configuration.or(a.configuration).unwrap_or(Configuration::Asymmetric),
            instance: o.instance.or(a.instance).unwrap_or(0),
            express_depth: o.depth.or(a.express_depth).unwrap_or(8),
            svd_depth: o.depth.or(a.svd_depth).unwrap_or(10),
            samples: o.samples.or(a.samples).unwrap_or(10_000),
            bins: o.bins.or(a.bins).unwrap_or(ionqaoa::analysis::DEFAULT_BINS),
            k_states: o.k_states.or(a.k_states).unwrap_or(20),
        };

        Ok(Self {
            master_seed,
            trap,
            problem: ProblemSettings { family, n, seeds, explicit_seeds },
            heuristic,
            training,
            analysis,
        })
    }

    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("settings serialize");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
