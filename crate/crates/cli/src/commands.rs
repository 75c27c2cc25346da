//! Subcommand flag surfaces and implementations. Flags mirror the config
//! structs one-to-one; each command funnels all randomness through a
//! single `--seed` and writes a replayable manifest beside its outputs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use gammasep::data::{load_dataset, write_dataset, ClassLabel, FEATURE_COUNT};
use gammasep::mlp::{write_error_curve_csv, MlpNetwork, MlpTrainConfig, TrainMethod};
use gammasep::pipeline::{
    run_hybrid_experiment, run_mlp_experiment, run_som_experiment, runs_to_threshold,
    synth_generate, write_confusion_csv, write_histogram_csv, HybridParams, SynthConfig,
};
use gammasep::seed;
use gammasep::som::{
    write_qe_curve_csv, Kernel, SomMap, SomTopology, SomTrainConfig, TopologyKind,
};
use gammasep::umatrix::{
    compute_umatrix, export_pgm, extract_clusters, write_umatrix_csv, ClusterAssignment,
};

use crate::manifest::{FlagSet, OutputGuard, RunManifest};

pub type FeatureList = [f64; FEATURE_COUNT];

// --- flag value parsers (reject out-of-range values at the usage level) ---

fn positive_count(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n == 0 {
        return Err("must be >= 1".into());
    }
    Ok(n)
}

fn closed_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err("must lie in [0, 1]".into());
    }
    Ok(v)
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0 && v < 1.0) {
        return Err("must lie strictly between 0 and 1".into());
    }
    Ok(v)
}

fn half_open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0 && v <= 1.0) {
        return Err("must lie in (0, 1]".into());
    }
    Ok(v)
}

fn feature_list(s: &str) -> Result<FeatureList, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != FEATURE_COUNT {
        return Err(format!(
            "expected {FEATURE_COUNT} comma-separated values, got {}",
            parts.len()
        ));
    }
    let mut values = [0.0; FEATURE_COUNT];
    for (slot, part) in values.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok(values)
}

fn parse_method(s: &str) -> Result<TrainMethod, String> {
    match s {
        "stochastic" => Ok(TrainMethod::Stochastic),
        "bfgs" => Ok(TrainMethod::Bfgs),
        other => Err(format!("unknown method {other:?} (stochastic|bfgs)")),
    }
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse()
}

fn parse_topology(s: &str) -> Result<TopologyKind, String> {
    s.parse()
}

// --- shared output helpers ---

fn write_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let context = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).with_context(context)?);
    write(&mut w).with_context(context)?;
    w.flush().with_context(context)?;
    Ok(())
}

fn write_cluster_sizes<W: Write>(w: &mut W, clusters: &ClusterAssignment) -> io::Result<()> {
    writeln!(w, "cluster_id,size")?;
    for (id, size) in clusters.sizes().iter().enumerate() {
        writeln!(w, "{id},{size}")?;
    }
    Ok(())
}

fn join_features(values: &FeatureList) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

// --- synth ---

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gamma sample size
    #[arg(long, default_value_t = 12332, value_parser = positive_count)]
    pub n_gamma: usize,
    /// Hadron sample size
    #[arg(long, default_value_t = 6688, value_parser = positive_count)]
    pub n_hadron: usize,
    /// Unlabeled ON mixture size
    #[arg(long, default_value_t = 7356, value_parser = positive_count)]
    pub n_on: usize,
    /// Gamma fraction of the ON mixture
    #[arg(long, default_value_t = 0.5, value_parser = closed_unit)]
    pub on_gamma_fraction: f64,
    /// Ten comma-separated gamma feature means [default: built-in table]
    #[arg(long, value_parser = feature_list)]
    pub gamma_mean: Option<FeatureList>,
    /// Ten comma-separated gamma feature standard deviations
    #[arg(long, value_parser = feature_list)]
    pub gamma_std: Option<FeatureList>,
    /// Ten comma-separated hadron feature means
    #[arg(long, value_parser = feature_list)]
    pub hadron_mean: Option<FeatureList>,
    /// Ten comma-separated hadron feature standard deviations
    #[arg(long, value_parser = feature_list)]
    pub hadron_std: Option<FeatureList>,
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        n_gamma: args.n_gamma,
        n_hadron: args.n_hadron,
        n_on: args.n_on,
        on_gamma_fraction: args.on_gamma_fraction,
        gamma_mean: args.gamma_mean.unwrap_or(defaults.gamma_mean),
        gamma_std: args.gamma_std.unwrap_or(defaults.gamma_std),
        hadron_mean: args.hadron_mean.unwrap_or(defaults.hadron_mean),
        hadron_std: args.hadron_std.unwrap_or(defaults.hadron_std),
        seed: args.seed,
    };
    let (gamma, hadron, on) = synth_generate(&cfg)?;

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let gamma_path = guard.track(args.out_dir.join("gammas.dat"));
    let hadron_path = guard.track(args.out_dir.join("hadrons.dat"));
    let on_path = guard.track(args.out_dir.join("on_events.dat"));
    for (path, dataset) in [(&gamma_path, &gamma), (&hadron_path, &hadron), (&on_path, &on)] {
        write_with(path, |w| write_dataset(w, dataset))?;
    }

    let mut flags = FlagSet::new();
    flags
        .add("out-dir", args.out_dir.display())
        .add("seed", args.seed)
        .add("n-gamma", args.n_gamma)
        .add("n-hadron", args.n_hadron)
        .add("n-on", args.n_on)
        .add("on-gamma-fraction", args.on_gamma_fraction)
        .add("gamma-mean", join_features(&cfg.gamma_mean))
        .add("gamma-std", join_features(&cfg.gamma_std))
        .add("hadron-mean", join_features(&cfg.hadron_mean))
        .add("hadron-std", join_features(&cfg.hadron_std));
    let manifest_path = guard.track(args.out_dir.join("manifest_synth.txt"));
    RunManifest::new("synth", &flags)
        .fact("events_gamma", gamma.len())
        .fact("events_hadron", hadron.len())
        .fact("events_on", on.len())
        .output(&gamma_path)
        .output(&hadron_path)
        .output(&on_path)
        .write(&manifest_path)?;
    guard.disarm();

    println!(
        "wrote {} gamma / {} hadron / {} on events to {}",
        gamma.len(),
        hadron.len(),
        on.len(),
        args.out_dir.display()
    );
    Ok(())
}

// --- train-mlp ---

#[derive(Args, Debug)]
pub struct TrainMlpArgs {
    /// Gamma events file
    #[arg(long)]
    pub gamma: PathBuf,
    /// Hadron events file
    #[arg(long)]
    pub hadron: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Master seed (split, init, and training derive from it)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training method: stochastic or bfgs
    #[arg(long, default_value = "bfgs", value_parser = parse_method)]
    pub method: TrainMethod,
    /// Training runs (stochastic passes or BFGS iterations)
    #[arg(long, default_value_t = 1000, value_parser = positive_count)]
    pub runs: usize,
    /// Stochastic base learning rate
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    /// Robbins-Monro learning-rate decay
    #[arg(long, default_value_t = 1e-4)]
    pub eta_decay: f64,
    /// Armijo sufficient-decrease constant
    #[arg(long, default_value_t = 1e-4)]
    pub armijo_c: f64,
    /// Armijo backtracking shrink factor
    #[arg(long, default_value_t = 0.5)]
    pub armijo_shrink: f64,
    /// Decision threshold for evaluation
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Output histogram bin count
    #[arg(long, default_value_t = 20, value_parser = positive_count)]
    pub bins: usize,
}

impl TrainMlpArgs {
    fn train_config(&self) -> MlpTrainConfig {
        MlpTrainConfig {
            method: self.method,
            runs: self.runs,
            eta0: self.eta0,
            eta_decay: self.eta_decay,
            armijo_c: self.armijo_c,
            armijo_shrink: self.armijo_shrink,
            seed: self.seed,
        }
    }

    fn record_flags(&self, flags: &mut FlagSet) {
        flags
            .add("gamma", self.gamma.display())
            .add("hadron", self.hadron.display())
            .add("out-dir", self.out_dir.display())
            .add("seed", self.seed)
            .add("method", self.method)
            .add("runs", self.runs)
            .add("eta0", self.eta0)
            .add("eta-decay", self.eta_decay)
            .add("armijo-c", self.armijo_c)
            .add("armijo-shrink", self.armijo_shrink)
            .add("threshold", self.threshold)
            .add("bins", self.bins);
    }
}

pub fn train_mlp(args: &TrainMlpArgs) -> Result<()> {
    let gamma = load_dataset(&args.gamma, ClassLabel::Gamma)?;
    let hadron = load_dataset(&args.hadron, ClassLabel::Hadron)?;
    let exp = run_mlp_experiment(&gamma, &hadron, &args.train_config(), args.threshold, args.bins)?;

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let model_path = guard.track(args.out_dir.join("mlp_model.txt"));
    exp.model.save(&model_path, Some(&exp.normalizer))?;
    let curve_path = guard.track(args.out_dir.join("error_curve.csv"));
    write_with(&curve_path, |w| write_error_curve_csv(w, &exp.curve))?;
    let confusion_path = guard.track(args.out_dir.join("confusion.csv"));
    write_with(&confusion_path, |w| write_confusion_csv(w, &exp.confusion))?;
    let histogram_path = guard.track(args.out_dir.join("histogram.csv"));
    write_with(&histogram_path, |w| write_histogram_csv(w, &exp.histogram))?;

    let mut flags = FlagSet::new();
    args.record_flags(&mut flags);
    let manifest_path = guard.track(args.out_dir.join("manifest_train_mlp.txt"));
    RunManifest::new("train-mlp", &flags)
        .fact("train_size", exp.train_size)
        .fact("test_size", exp.test_size)
        .fact("curve_rows", exp.curve.len())
        .fact("test_accuracy", exp.confusion.accuracy())
        .output(&model_path)
        .output(&curve_path)
        .output(&confusion_path)
        .output(&histogram_path)
        .write(&manifest_path)?;
    guard.disarm();

    println!(
        "trained {} on {} events; test accuracy {:.4} after {} recorded runs",
        args.method,
        exp.train_size,
        exp.confusion.accuracy(),
        exp.curve.len()
    );
    Ok(())
}

// --- train-som ---

#[derive(Args, Debug)]
pub struct TrainSomArgs {
    /// ON events file (unlabeled mixture)
    #[arg(long)]
    pub on: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Master seed (init and training derive from it)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Map width in units
    #[arg(long, default_value_t = 25, value_parser = positive_count)]
    pub width: usize,
    /// Map height in units
    #[arg(long, default_value_t = 25, value_parser = positive_count)]
    pub height: usize,
    /// Lattice: hexagonal or rectangular
    #[arg(long, default_value = "hexagonal", value_parser = parse_topology)]
    pub topology: TopologyKind,
    /// Neighborhood kernel: gaussian or cutgaussian
    #[arg(long, default_value = "gaussian", value_parser = parse_kernel)]
    pub kernel: Kernel,
    /// Training epochs (|data| draws each)
    #[arg(long, default_value_t = 300, value_parser = positive_count)]
    pub epochs: usize,
    /// Initial learning rate
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    /// Final learning rate
    #[arg(long, default_value_t = 0.01)]
    pub alpha_final: f64,
    /// Initial neighborhood radius [default: half of max(width, height)]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Final neighborhood radius (small values end in a fine-tuning phase)
    #[arg(long, default_value_t = 0.3)]
    pub sigma_final: f64,
    /// U-matrix quantile separating cluster interiors from boundaries
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub quantile: f64,
}

impl TrainSomArgs {
    fn resolve(&self) -> Result<(SomTopology, SomTrainConfig)> {
        let topology = SomTopology::new(self.topology, self.width, self.height)?;
        let sigma0 = self
            .sigma0
            .unwrap_or_else(|| self.width.max(self.height) as f64 / 2.0);
        let cfg = SomTrainConfig {
            kernel: self.kernel,
            epochs: self.epochs,
            alpha0: self.alpha0,
            alpha_final: self.alpha_final,
            sigma0,
            sigma_final: self.sigma_final,
            seed: self.seed,
        };
        Ok((topology, cfg))
    }

    fn record_flags(&self, flags: &mut FlagSet, cfg: &SomTrainConfig) {
        flags
            .add("on", self.on.display())
            .add("out-dir", self.out_dir.display())
            .add("seed", self.seed)
            .add("width", self.width)
            .add("height", self.height)
            .add("topology", self.topology)
            .add("kernel", self.kernel)
            .add("epochs", self.epochs)
            .add("alpha0", self.alpha0)
            .add("alpha-final", self.alpha_final)
            .add("sigma0", cfg.sigma0)
            .add("sigma-final", self.sigma_final)
            .add("quantile", self.quantile);
    }
}

pub fn train_som(args: &TrainSomArgs) -> Result<()> {
    let on = load_dataset(&args.on, ClassLabel::Unknown)?;
    let (topology, cfg) = args.resolve()?;
    let exp = run_som_experiment(&on, topology, &cfg, args.quantile)?;

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let codebook_path = guard.track(args.out_dir.join("som_codebook.txt"));
    exp.map.save(&codebook_path, cfg.kernel)?;
    let qe_path = guard.track(args.out_dir.join("qe_curve.csv"));
    write_with(&qe_path, |w| write_qe_curve_csv(w, &exp.curve))?;
    let pgm_path = guard.track(args.out_dir.join("umatrix.pgm"));
    fs::write(&pgm_path, export_pgm(&exp.umatrix))
        .with_context(|| format!("writing {}", pgm_path.display()))?;
    let csv_path = guard.track(args.out_dir.join("umatrix.csv"));
    write_with(&csv_path, |w| write_umatrix_csv(w, &exp.umatrix, &exp.clusters))?;
    let clusters_path = guard.track(args.out_dir.join("clusters.csv"));
    write_with(&clusters_path, |w| write_cluster_sizes(w, &exp.clusters))?;

    let mut flags = FlagSet::new();
    args.record_flags(&mut flags, &cfg);
    let manifest_path = guard.track(args.out_dir.join("manifest_train_som.txt"));
    RunManifest::new("train-som", &flags)
        .fact("events", on.len())
        .fact("initial_qe", exp.curve.first().map(|r| r.quantization_error).unwrap_or(0.0))
        .fact("final_qe", exp.curve.last().map(|r| r.quantization_error).unwrap_or(0.0))
        .fact("clusters", exp.clusters.cluster_count)
        .output(&codebook_path)
        .output(&qe_path)
        .output(&pgm_path)
        .output(&csv_path)
        .output(&clusters_path)
        .write(&manifest_path)?;
    guard.disarm();

    println!(
        "trained {}x{} {} map for {} epochs; qe {:.6} -> {:.6}; {} clusters",
        topology.width,
        topology.height,
        topology.kind,
        cfg.epochs,
        exp.curve.first().map(|r| r.quantization_error).unwrap_or(0.0),
        exp.curve.last().map(|r| r.quantization_error).unwrap_or(0.0),
        exp.clusters.cluster_count
    );
    Ok(())
}

// --- hybrid ---

#[derive(Args, Debug)]
pub struct HybridArgs {
    /// Gamma events file
    #[arg(long)]
    pub gamma: PathBuf,
    /// Hadron events file
    #[arg(long)]
    pub hadron: PathBuf,
    /// ON events file (unlabeled mixture)
    #[arg(long)]
    pub on: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Master seed; the SOM and MLP stages derive their own sub-seeds
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Map width in units
    #[arg(long, default_value_t = 25, value_parser = positive_count)]
    pub width: usize,
    /// Map height in units
    #[arg(long, default_value_t = 25, value_parser = positive_count)]
    pub height: usize,
    /// Lattice: hexagonal or rectangular
    #[arg(long, default_value = "hexagonal", value_parser = parse_topology)]
    pub topology: TopologyKind,
    /// Neighborhood kernel: gaussian or cutgaussian
    #[arg(long, default_value = "gaussian", value_parser = parse_kernel)]
    pub kernel: Kernel,
    /// SOM training epochs
    #[arg(long, default_value_t = 300, value_parser = positive_count)]
    pub epochs: usize,
    /// Initial learning rate
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    /// Final learning rate
    #[arg(long, default_value_t = 0.01)]
    pub alpha_final: f64,
    /// Initial neighborhood radius [default: half of max(width, height)]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Final neighborhood radius (small values end in a fine-tuning phase)
    #[arg(long, default_value_t = 0.3)]
    pub sigma_final: f64,
    /// U-matrix quantile separating cluster interiors from boundaries
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub quantile: f64,
    /// MLP training method: stochastic or bfgs
    #[arg(long, default_value = "bfgs", value_parser = parse_method)]
    pub method: TrainMethod,
    /// MLP training runs
    #[arg(long, default_value_t = 1000, value_parser = positive_count)]
    pub runs: usize,
    /// Stochastic base learning rate
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    /// Robbins-Monro learning-rate decay
    #[arg(long, default_value_t = 1e-4)]
    pub eta_decay: f64,
    /// Armijo sufficient-decrease constant
    #[arg(long, default_value_t = 1e-4)]
    pub armijo_c: f64,
    /// Armijo backtracking shrink factor
    #[arg(long, default_value_t = 0.5)]
    pub armijo_shrink: f64,
    /// Decision threshold for evaluation
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Fraction of each training half used to label clusters
    #[arg(long, default_value_t = 0.1, value_parser = half_open_unit)]
    pub calibration_fraction: f64,
    /// Training-error level for the runs-to-threshold comparison
    #[arg(long, default_value_t = 0.05)]
    pub error_threshold: f64,
}

fn runs_label(runs: Option<usize>) -> String {
    runs.map(|n| n.to_string()).unwrap_or_else(|| "never".into())
}

pub fn hybrid(args: &HybridArgs) -> Result<()> {
    let gamma = load_dataset(&args.gamma, ClassLabel::Gamma)?;
    let hadron = load_dataset(&args.hadron, ClassLabel::Hadron)?;
    let on = load_dataset(&args.on, ClassLabel::Unknown)?;

    let topology = SomTopology::new(args.topology, args.width, args.height)?;
    let sigma0 = args
        .sigma0
        .unwrap_or_else(|| args.width.max(args.height) as f64 / 2.0);
    let som_cfg = SomTrainConfig {
        kernel: args.kernel,
        epochs: args.epochs,
        alpha0: args.alpha0,
        alpha_final: args.alpha_final,
        sigma0,
        sigma_final: args.sigma_final,
        seed: seed::derive(args.seed, "som"),
    };
    let mlp_cfg = MlpTrainConfig {
        method: args.method,
        runs: args.runs,
        eta0: args.eta0,
        eta_decay: args.eta_decay,
        armijo_c: args.armijo_c,
        armijo_shrink: args.armijo_shrink,
        seed: seed::derive(args.seed, "mlp"),
    };
    let params = HybridParams {
        quantile: args.quantile,
        threshold: args.threshold,
        calibration_fraction: args.calibration_fraction,
    };

    let hybrid = run_hybrid_experiment(&gamma, &hadron, &on, topology, &som_cfg, &mlp_cfg, &params)?;
    // direct supervised baseline on the same splits (identical split seeds)
    let direct = run_mlp_experiment(&gamma, &hadron, &mlp_cfg, args.threshold, 20)?;
    let hybrid_runs = runs_to_threshold(&hybrid.curve, args.error_threshold);
    let direct_runs = runs_to_threshold(&direct.curve, args.error_threshold);
    let labeled_clusters = hybrid
        .cluster_labels
        .iter()
        .filter(|&&l| l != ClassLabel::Unknown)
        .count();

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let model_path = guard.track(args.out_dir.join("hybrid_model.txt"));
    hybrid.model.save(&model_path, Some(&hybrid.som.normalizer))?;
    let hybrid_curve_path = guard.track(args.out_dir.join("hybrid_error_curve.csv"));
    write_with(&hybrid_curve_path, |w| write_error_curve_csv(w, &hybrid.curve))?;
    let direct_curve_path = guard.track(args.out_dir.join("direct_error_curve.csv"));
    write_with(&direct_curve_path, |w| write_error_curve_csv(w, &direct.curve))?;
    let confusion_path = guard.track(args.out_dir.join("confusion.csv"));
    write_with(&confusion_path, |w| write_confusion_csv(w, &hybrid.confusion))?;
    let report_path = guard.track(args.out_dir.join("comparison.txt"));
    write_with(&report_path, |w| {
        writeln!(w, "error_threshold {}", args.error_threshold)?;
        writeln!(w, "hybrid_runs_to_threshold {}", runs_label(hybrid_runs))?;
        writeln!(w, "direct_runs_to_threshold {}", runs_label(direct_runs))?;
        writeln!(w, "hybrid_test_accuracy {}", hybrid.confusion.accuracy())?;
        writeln!(w, "direct_test_accuracy {}", direct.confusion.accuracy())?;
        writeln!(w, "hybrid_mlp_train_size {}", hybrid.mlp_train_size)?;
        writeln!(w, "direct_mlp_train_size {}", direct.train_size)?;
        writeln!(w, "codebook_size {}", hybrid.codebook_size)?;
        writeln!(w, "clusters {}", hybrid.som.clusters.cluster_count)?;
        writeln!(w, "labeled_clusters {labeled_clusters}")?;
        writeln!(w, "calibration_size {}", hybrid.calibration_size)
    })?;

    let mut flags = FlagSet::new();
    flags
        .add("gamma", args.gamma.display())
        .add("hadron", args.hadron.display())
        .add("on", args.on.display())
        .add("out-dir", args.out_dir.display())
        .add("seed", args.seed)
        .add("width", args.width)
        .add("height", args.height)
        .add("topology", args.topology)
        .add("kernel", args.kernel)
        .add("epochs", args.epochs)
        .add("alpha0", args.alpha0)
        .add("alpha-final", args.alpha_final)
        .add("sigma0", sigma0)
        .add("sigma-final", args.sigma_final)
        .add("quantile", args.quantile)
        .add("method", args.method)
        .add("runs", args.runs)
        .add("eta0", args.eta0)
        .add("eta-decay", args.eta_decay)
        .add("armijo-c", args.armijo_c)
        .add("armijo-shrink", args.armijo_shrink)
        .add("threshold", args.threshold)
        .add("calibration-fraction", args.calibration_fraction)
        .add("error-threshold", args.error_threshold);
    let manifest_path = guard.track(args.out_dir.join("manifest_hybrid.txt"));
    RunManifest::new("hybrid", &flags)
        .fact("hybrid_runs_to_threshold", runs_label(hybrid_runs))
        .fact("direct_runs_to_threshold", runs_label(direct_runs))
        .fact("hybrid_test_accuracy", hybrid.confusion.accuracy())
        .fact("direct_test_accuracy", direct.confusion.accuracy())
        .fact("codebook_size", hybrid.codebook_size)
        .fact("hybrid_mlp_train_size", hybrid.mlp_train_size)
        .output(&model_path)
        .output(&hybrid_curve_path)
        .output(&direct_curve_path)
        .output(&confusion_path)
        .output(&report_path)
        .write(&manifest_path)?;
    guard.disarm();

    println!(
        "hybrid reached error {} after {} runs (direct: {}); test accuracy hybrid {:.4} / direct {:.4}",
        args.error_threshold,
        runs_label(hybrid_runs),
        runs_label(direct_runs),
        hybrid.confusion.accuracy(),
        direct.confusion.accuracy()
    );
    Ok(())
}

// --- classify ---

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Saved MLP model file
    #[arg(long)]
    pub model: PathBuf,
    /// Events file to classify
    #[arg(long)]
    pub events: PathBuf,
    /// Decision threshold
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Directory for the run manifest
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn classify(args: &ClassifyArgs) -> Result<()> {
    let (net, normalizer) = MlpNetwork::load(&args.model)?;
    if net.layout().input_size != FEATURE_COUNT {
        bail!(
            "model expects {} inputs but event files provide {FEATURE_COUNT} features",
            net.layout().input_size
        );
    }
    let events = load_dataset(&args.events, ClassLabel::Unknown)?;

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut stream = || -> io::Result<()> {
        for record in &events.records {
            let features = record.features();
            let input = match &normalizer {
                Some(n) => n.apply(&features).to_vec(),
                None => features.to_vec(),
            };
            writeln!(out, "{} {}", net.output(&input), net.classify(&input, args.threshold))?;
        }
        out.flush()
    };
    if let Err(err) = stream() {
        // a consumer that stops reading (`classify … | head`) closes our
        // stdout; that ends the stream, it doesn't fail the run
        if err.kind() != io::ErrorKind::BrokenPipe {
            return Err(anyhow::Error::new(err).context("writing classifications to stdout"));
        }
    }

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let mut flags = FlagSet::new();
    flags
        .add("model", args.model.display())
        .add("events", args.events.display())
        .add("threshold", args.threshold)
        .add("out-dir", args.out_dir.display());
    let manifest_path = guard.track(args.out_dir.join("manifest_classify.txt"));
    RunManifest::new("classify", &flags)
        .fact("events", events.len())
        .fact("normalizer_embedded", normalizer.is_some())
        .write(&manifest_path)?;
    guard.disarm();
    Ok(())
}

// --- umatrix ---

#[derive(Args, Debug)]
pub struct UmatrixArgs {
    /// Saved SOM codebook file
    #[arg(long)]
    pub codebook: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// U-matrix quantile separating cluster interiors from boundaries
    #[arg(long, default_value_t = 0.5, value_parser = open_unit)]
    pub quantile: f64,
}

pub fn umatrix(args: &UmatrixArgs) -> Result<()> {
    let (map, kernel) = SomMap::load(&args.codebook)?;
    let u = compute_umatrix(&map);
    let clusters = extract_clusters(&u, args.quantile);

    ensure_out_dir(&args.out_dir)?;
    let mut guard = OutputGuard::new();
    let pgm_path = guard.track(args.out_dir.join("umatrix.pgm"));
    fs::write(&pgm_path, export_pgm(&u))
        .with_context(|| format!("writing {}", pgm_path.display()))?;
    let csv_path = guard.track(args.out_dir.join("umatrix.csv"));
    write_with(&csv_path, |w| write_umatrix_csv(w, &u, &clusters))?;
    let clusters_path = guard.track(args.out_dir.join("clusters.csv"));
    write_with(&clusters_path, |w| write_cluster_sizes(w, &clusters))?;

    let mut flags = FlagSet::new();
    flags
        .add("codebook", args.codebook.display())
        .add("out-dir", args.out_dir.display())
        .add("quantile", args.quantile);
    let manifest_path = guard.track(args.out_dir.join("manifest_umatrix.txt"));
    RunManifest::new("umatrix", &flags)
        .fact("width", map.topology().width)
        .fact("height", map.topology().height)
        .fact("topology", map.topology().kind)
        .fact("kernel", kernel)
        .fact("clusters", clusters.cluster_count)
        .output(&pgm_path)
        .output(&csv_path)
        .output(&clusters_path)
        .write(&manifest_path)?;
    guard.disarm();

    println!(
        "{}x{} {} map: {} clusters at quantile {}",
        map.topology().width,
        map.topology().height,
        map.topology().kind,
        clusters.cluster_count,
        args.quantile
    );
    Ok(())
}
