use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use ionqaoa::analysis::{asymmetric_hyperparameters, expressibility, singular_profile};
use ionqaoa::heuristic::{run_heuristic, scaled_hyperparameters, BcdConfig, HeuristicOutcome};
use ionqaoa::ionchain::{coupling_base, CouplingBase, PhononData, TrapConfig};
use ionqaoa::pipeline::{
    compare_standard_qaoa, ghz_heuristic_target, layerwise_train, run_campaign, CampaignConfig, CampaignSummary,
    LayerwiseConfig, RunRecord, TAG_HEURISTIC, TAG_TRAINING,
};
use ionqaoa::problems::{ghz_prep_hamiltonian, DiagonalHamiltonian, SkInstance};
use ionqaoa::report::{self, curves_csv, Provenance};
use ionqaoa::rng::derive_seed;
use ionqaoa::simulator::AnsatzSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{usage, Configuration, Family, Settings};

/// Stream tags for the analysis commands; the pipeline owns tags 1 to 4.
const TAG_EXPRESS: u64 = 5;
const TAG_SVD: u64 = 6;

pub struct Context {
    pub settings: Settings,
    pub output_dir: PathBuf,
    pub meta: Provenance,
}

impl Context {
    pub fn new(settings: Settings, output_dir: PathBuf) -> Self {
        let meta = Provenance::new(settings.config_hash());
        Self { settings, output_dir, meta }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn n(&self) -> usize {
        self.settings.problem.n
    }

    fn family(&self) -> Family {
        self.settings.problem.family
    }

    fn coupling_base(&self) -> anyhow::Result<CouplingBase> {
        CouplingBase::from_trap(&self.settings.trap).context("computing the coupling base")
    }

    fn heuristic_path(&self) -> PathBuf {
        self.path(&format!("heuristic_{}_n{}.jsonl", self.family().label(), self.n()))
    }

    fn written(&self, path: &Path) {
        println!("wrote {}", path.display());
    }
}

#[derive(Debug, Serialize)]
struct ChainSummary<'a> {
    trap: &'a TrapConfig,
    positions: &'a [f64],
    frequencies_hz: Vec<f64>,
    detuning_hz: f64,
    /// Row `m` is the participation vector of mode `m`.
    mode_vectors: Vec<Vec<f64>>,
    /// Row `i` holds ion `i`'s Lamb-Dicke factor for each mode.
    lamb_dicke: Vec<Vec<f64>>,
}

pub fn chain(ctx: &Context) -> anyhow::Result<()> {
    let trap = &ctx.settings.trap;
    let phonons = PhononData::compute(trap).context("computing the radial modes")?;
    let base = coupling_base(&phonons, trap.laser_detuning(), trap.omega_max_hz)?;
    let n = phonons.n();
    let detuning_hz = trap.laser_detuning() / (2.0 * PI);
    let summary = ChainSummary {
        trap,
        positions: &phonons.positions,
        frequencies_hz: phonons.frequencies.iter().map(|w| w / (2.0 * PI)).collect(),
        detuning_hz,
        mode_vectors: (0..n).map(|m| phonons.eigenvectors.column(m)).collect(),
        lamb_dicke: (0..n).map(|i| phonons.lamb_dicke.row(i).to_vec()).collect(),
    };

    println!("{:>4}  {:>14}  {:>16}", "mode", "frequency_MHz", "detuning_kHz");
    for (m, f) in summary.frequencies_hz.iter().enumerate() {
        println!("{:>4}  {:>14.6}  {:>16.6}", m + 1, f / 1e6, (detuning_hz - f) / 1e3);
    }

    let mut modes = String::from("mode,frequency_hz,detuning_hz\n");
    for (m, f) in summary.frequencies_hz.iter().enumerate() {
        modes.push_str(&format!("{},{},{}\n", m + 1, f, detuning_hz - f));
    }

    let base_path = ctx.path(&format!("coupling_base_n{n}.json"));
    report::write_json(&base_path, &ctx.meta, &base)?;
    ctx.written(&base_path);
    let chain_path = ctx.path(&format!("chain_n{n}.json"));
    report::write_json(&chain_path, &ctx.meta, &summary)?;
    ctx.written(&chain_path);
    let modes_path = ctx.path(&format!("modes_n{n}.csv"));
    report::write_csv(&modes_path, &ctx.meta, &modes)?;
    ctx.written(&modes_path);
    Ok(())
}

/// One line of the heuristic output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicRecord {
    pub family: Family,
    pub n: usize,
    pub instance: usize,
    /// SK instance seed; absent for GHZ preparation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_seed: Option<u64>,
    pub outcome: HeuristicOutcome,
}

impl HeuristicRecord {
    fn hamiltonian(&self) -> anyhow::Result<DiagonalHamiltonian> {
        Ok(match (self.family, self.instance_seed) {
            (Family::Sk, Some(seed)) => SkInstance::generate(self.n, seed)?.hamiltonian()?,
            (Family::Sk, None) => return Err(usage(format!("SK record {} has no instance seed", self.instance))),
            (Family::GhzPrep, _) => ghz_prep_hamiltonian(self.n)?,
        })
    }

    /// Tag in the instance slot of derived streams: the instance index for
    /// SK, the qubit count for GHZ preparation.
    fn stream_tag(&self) -> u64 {
        match self.family {
            Family::Sk => self.instance as u64,
            Family::GhzPrep => self.n as u64,
        }
    }
}

pub fn heuristic(ctx: &Context) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let n = ctx.n();
    let base = ctx.coupling_base()?;
    let h = &s.heuristic;
    let bcd = |eps: f64, tag: u64| BcdConfig {
        k_max: h.k_max,
        m_max: h.m_max,
        eps,
        delta: h.delta,
        seed: derive_seed(s.master_seed, &[TAG_HEURISTIC, tag, 1]),
    };

    let records: Vec<HeuristicRecord> = match ctx.family() {
        Family::Sk => s
            .problem
            .seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| {
                let ham = SkInstance::generate(n, seed)?.hamiltonian()?;
                let outcome = run_heuristic(&ham, &base, &bcd(0.5 * ham.lambda_min(), i as u64), &h.rescale)
                    .with_context(|| format!("heuristic failed on instance {i}"))?;
                Ok(HeuristicRecord { family: Family::Sk, n, instance: i, instance_seed: Some(seed), outcome })
            })
            .collect::<anyhow::Result<_>>()?,
        Family::GhzPrep => {
            let target = ghz_heuristic_target(n)?;
            let outcome = run_heuristic(&target, &base, &bcd(0.0, n as u64), &h.rescale)
                .context("heuristic failed on GHZ preparation")?;
            vec![HeuristicRecord { family: Family::GhzPrep, n, instance: 0, instance_seed: None, outcome }]
        }
    };

    println!("{:>8}  {:>12}  {:>8}  {:>9}  {:>8}  {:>8}", "instance", "energy", "alpha", "converged", "train", "rescale");
    for r in &records {
        let o = &r.outcome;
        println!(
            "{:>8}  {:>12.6}  {:>8.4}  {:>9}  {:>8}  {:>8}",
            r.instance, o.best_energy, o.alpha_star, o.converged, o.n_evals_train, o.n_evals_rescale
        );
    }
    let path = ctx.heuristic_path();
    report::write_jsonl(&path, &ctx.meta, &records)?;
    ctx.written(&path);
    Ok(())
}

fn load_heuristic(ctx: &Context) -> anyhow::Result<Vec<HeuristicRecord>> {
    let path = ctx.heuristic_path();
    if !path.exists() {
        return Err(usage(format!(
            "missing heuristic results {}; run `ionqaoa heuristic --family {} --n {}` with the same output directory first",
            path.display(),
            ctx.family().label().replace('_', "-"),
            ctx.n()
        )));
    }
    let (_, records): (_, Vec<HeuristicRecord>) =
        report::read_jsonl(&path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(r) = records.iter().find(|r| r.n != ctx.n() || r.family != ctx.family()) {
        return Err(usage(format!("{} holds a record for {} n={}", path.display(), r.family.label(), r.n)));
    }
    Ok(records)
}

pub fn train(ctx: &Context) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let base = ctx.coupling_base()?;
    let heuristics = load_heuristic(ctx)?;
    let t = &s.training;

    let per_instance: Vec<Vec<RunRecord>> = heuristics
        .par_iter()
        .map(|rec| {
            let ham = rec.hamiltonian()?;
            let spec = AnsatzSpec::ion_native_from_base(&base, &scaled_hyperparameters(&rec.outcome), 1.0)?;
            let layerwise = LayerwiseConfig {
                p_max: t.p_max,
                restarts_per_step: t.restarts_per_step,
                runs: t.runs,
                seed: derive_seed(s.master_seed, &[TAG_TRAINING, rec.stream_tag(), 1]),
            };
            let mut records = layerwise_train(&spec, &ham, &layerwise)
                .with_context(|| format!("training failed on instance {}", rec.instance))?;
            for r in &mut records {
                r.instance = rec.instance;
                r.cycle = 1;
            }
            Ok(records)
        })
        .collect::<anyhow::Result<_>>()?;

    println!("{:>8}  {:>5}  {:>12}  {:>10}  {:>6}", "instance", "depth", "energy", "overlap", "solved");
    for records in &per_instance {
        if let Some(r) = records.last() {
            println!("{:>8}  {:>5}  {:>12.6}  {:>10.6}  {:>6}", r.instance, r.depth, r.energy, r.overlap, r.solved);
        }
    }
    let flat: Vec<RunRecord> = per_instance.into_iter().flatten().collect();
    let path = ctx.path(&format!("train_{}_n{}.jsonl", ctx.family().label(), ctx.n()));
    report::write_jsonl(&path, &ctx.meta, &flat)?;
    ctx.written(&path);
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchSummary<'a> {
    campaign: &'a CampaignSummary,
    depths: &'a [usize],
    ion_native_per_depth: &'a [f64],
    standard_qaoa_per_depth: &'a [f64],
}

pub fn bench(ctx: &Context) -> anyhow::Result<()> {
    let s = &ctx.settings;
    if ctx.family() != Family::Sk {
        return Err(usage("bench runs SK campaigns only; use --family sk"));
    }
    if s.problem.explicit_seeds {
        return Err(usage("bench derives instance seeds from master_seed; replace problem.seeds with problem.count"));
    }
    let config = CampaignConfig {
        n: ctx.n(),
        n_instances: s.problem.seeds.len(),
        cycles: s.training.cycles,
        p_max: s.training.p_max,
        master_seed: s.master_seed,
        k_max: s.heuristic.k_max,
        m_max: s.heuristic.m_max,
        delta: s.heuristic.delta,
        rescale: s.heuristic.rescale.clone(),
        restarts_per_step: s.training.restarts_per_step,
        runs: s.training.runs,
    };
    let base = ctx.coupling_base()?;
    let campaign = run_campaign(&config, &base)?;
    let comparison = compare_standard_qaoa(&campaign)?;
    let summary = &campaign.summary;

    for (c, f) in summary.per_cycle_solved.iter().enumerate() {
        println!("cycle {}: solved fraction {:.3}", c + 1, f);
    }
    println!("{:>5}  {:>10}  {:>13}", "depth", "ion_native", "standard_qaoa");
    for (k, p) in comparison.depths.iter().enumerate() {
        println!("{:>5}  {:>10.3}  {:>13.3}", p, comparison.ion_native[k], comparison.standard_qaoa[k]);
    }
    println!(
        "mean evaluations: heuristic train {:.1}, rescale {:.1}, layerwise training {:.1}",
        summary.mean_heuristic_train_evals, summary.mean_heuristic_rescale_evals, summary.mean_training_evals
    );

    let n = ctx.n();
    let attempts_path = ctx.path(&format!("bench_n{n}_attempts.jsonl"));
    report::write_jsonl(&attempts_path, &ctx.meta, &campaign.attempts)?;
    let standard_path = ctx.path(&format!("bench_n{n}_standard.jsonl"));
    report::write_jsonl(&standard_path, &ctx.meta, &comparison.standard_records)?;
    let summary_path = ctx.path(&format!("bench_n{n}_summary.json"));
    let doc = BenchSummary {
        campaign: summary,
        depths: &comparison.depths,
        ion_native_per_depth: &comparison.ion_native,
        standard_qaoa_per_depth: &comparison.standard_qaoa,
    };
    report::write_json(&summary_path, &ctx.meta, &doc)?;
    let cycles: Vec<usize> = (1..=config.cycles).collect();
    let cycles_path = ctx.path(&format!("bench_n{n}_cycles.csv"));
    report::write_csv(&cycles_path, &ctx.meta, &curves_csv("cycle", &cycles, &[("solved", &summary.per_cycle_solved)]))?;
    let depths_path = ctx.path(&format!("bench_n{n}_depths.csv"));
    let depth_table = curves_csv(
        "depth",
        &comparison.depths,
        &[("ion_native", &comparison.ion_native), ("standard_qaoa", &comparison.standard_qaoa)],
    );
    report::write_csv(&depths_path, &ctx.meta, &depth_table)?;
    for p in [&attempts_path, &standard_path, &summary_path, &cycles_path, &depths_path] {
        ctx.written(p);
    }
    Ok(())
}

/// Hyperparameters for the analysis commands.
fn analysed_hyperparameters(ctx: &Context) -> anyhow::Result<Vec<f64>> {
    match ctx.settings.analysis.configuration {
        Configuration::Asymmetric => Ok(asymmetric_hyperparameters(ctx.n())),
        Configuration::Trained => {
            let wanted = ctx.settings.analysis.instance;
            let records = load_heuristic(ctx)?;
            let rec = records
                .iter()
                .find(|r| r.instance == wanted)
                .ok_or_else(|| usage(format!("no heuristic record for instance {wanted}")))?;
            Ok(scaled_hyperparameters(&rec.outcome))
        }
    }
}

#[derive(Debug, Serialize)]
struct ExpressSummary<'a> {
    configuration: Configuration,
    n: usize,
    depth: usize,
    samples: usize,
    bins: usize,
    hyperparameters: &'a [f64],
    kl: f64,
}

pub fn express(ctx: &Context) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let a = &s.analysis;
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let hyper = analysed_hyperparameters(ctx)?;
    let spec = AnsatzSpec::ion_native_from_base(&ctx.coupling_base()?, &hyper, 1.0)?;
    let seed = derive_seed(s.master_seed, &[TAG_EXPRESS]);
    let result = expressibility(&spec, a.express_depth, a.samples, a.bins, seed)?;
    println!("D_KL = {}", result.kl);

    let stem = format!("express_{}_n{}_p{}", a.configuration.label(), ctx.n(), a.express_depth);
    let csv_path = ctx.path(&format!("{stem}.csv"));
    report::write_csv(&csv_path, &ctx.meta, &result.histogram.to_csv())?;
    let json_path = ctx.path(&format!("{stem}.json"));
    let summary = ExpressSummary {
        configuration: a.configuration,
        n: ctx.n(),
        depth: a.express_depth,
        samples: a.samples,
        bins: a.bins,
        hyperparameters: &hyper,
        kl: result.kl,
    };
    report::write_json(&json_path, &ctx.meta, &summary)?;
    ctx.written(&csv_path);
    ctx.written(&json_path);
    Ok(())
}

pub fn svd(ctx: &Context) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let a = &s.analysis;
    let hyper = analysed_hyperparameters(ctx)?;
    let spec = AnsatzSpec::ion_native_from_base(&ctx.coupling_base()?, &hyper, 1.0)?;
    let seed = derive_seed(s.master_seed, &[TAG_SVD]);
    let profile = singular_profile(&spec, a.svd_depth, a.k_states, seed)?;
    for (k, sigma) in profile.sigmas.iter().enumerate() {
        println!("{:>3}  {:.6e}", k + 1, sigma);
    }
    if profile.sigmas.len() >= 10 {
        println!("sigma_10 / sigma_1 = {}", profile.ratio(10));
    }
    let path = ctx.path(&format!("svd_{}_n{}_p{}.csv", a.configuration.label(), ctx.n(), a.svd_depth));
    report::write_csv(&path, &ctx.meta, &profile.to_csv())?;
    ctx.written(&path);
    Ok(())
}
