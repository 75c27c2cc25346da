//! End-to-end experiments: the supervised MLP run, the unsupervised SOM
//! run, the SOM→MLP hybrid, evaluation metrics, and a synthetic event
//! generator standing in for the original simulated data files.
//!
//! Every experiment takes one master seed (inside its config) and fans it
//! out to per-stage sub-seeds via [`crate::seed::derive`], so a single
//! integer reproduces splits, initialization, and training exactly. The
//! direct MLP experiment and the hybrid derive their class splits with the
//! same labels, so equal seeds mean both see identical train/test halves.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{
    ClassLabel, DataError, Dataset, EventRecord, Normalizer, EVENT_FIELD_COUNT, FEATURE_COUNT,
};
use crate::mlp::{
    train as train_mlp, LabeledSample, MlpError, MlpLayout, MlpNetwork, MlpTrainConfig,
    TrainRecordMlp,
};
use crate::seed;
use crate::som::{SomError, SomMap, SomTopology, SomTrainConfig, SomTrainRecord};
use crate::umatrix::{compute_umatrix, extract_clusters, ClusterAssignment, UMatrix};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Som(#[from] SomError),
    #[error("invalid synth config: {0}")]
    InvalidSynthConfig(String),
    #[error(
        "all {clusters} extracted clusters ended up unlabeled \
         (calibration produced no majority anywhere); cannot build an MLP \
         training set — try more calibration data or a different quantile"
    )]
    AllClustersUnlabeled { clusters: usize },
}

// ---------------------------------------------------------------------------
// synthetic generator

/// Synthetic event generator: axis-aligned 10-D normal per class, the two
/// trailing bookkeeping fields held constant. Class means overlap partially
/// so the classification problem has a nonzero Bayes error, like the real
/// gamma/hadron overlap.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_gamma: usize,
    pub n_hadron: usize,
    /// Size of the unlabeled ON mixture.
    pub n_on: usize,
    /// Fraction of the ON mixture drawn from the gamma distribution.
    pub on_gamma_fraction: f64,
    pub gamma_mean: [f64; FEATURE_COUNT],
    pub gamma_std: [f64; FEATURE_COUNT],
    pub hadron_mean: [f64; FEATURE_COUNT],
    pub hadron_std: [f64; FEATURE_COUNT],
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Event counts match the original data set sizes (12332 gammas, 6688
    /// hadrons, 7356 ON events); the ON mixture defaults to 50/50 since the
    /// real composition is unknown.
    fn default() -> Self {
        SynthConfig {
            n_gamma: 12332,
            n_hadron: 6688,
            n_on: 7356,
            on_gamma_fraction: 0.5,
            gamma_mean: [22.0, 11.0, 2.45, 0.42, 0.22, 8.0, 10.0, 2.0, 10.0, 150.0],
            gamma_std: [12.0, 6.0, 0.35, 0.10, 0.07, 20.0, 18.0, 7.0, 8.0, 60.0],
            hadron_mean: [42.0, 21.0, 2.75, 0.28, 0.15, 20.0, 25.0, 7.0, 45.0, 200.0],
            hadron_std: [20.0, 10.0, 0.45, 0.10, 0.07, 30.0, 28.0, 12.0, 25.0, 70.0],
            seed: 0,
        }
    }
}

// constants for the two non-classification fields of generated events
const SYNTH_F_ENER: f64 = 2.0;
const SYNTH_F_THETA: f64 = 0.0;

impl SynthConfig {
    fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidSynthConfig(msg));
        if self.n_gamma == 0 || self.n_hadron == 0 || self.n_on == 0 {
            return bad("event counts must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.on_gamma_fraction) {
            return bad(format!(
                "on_gamma_fraction must lie in [0,1], got {}",
                self.on_gamma_fraction
            ));
        }
        for (name, stds) in [("gamma", &self.gamma_std), ("hadron", &self.hadron_std)] {
            // `!(s > 0.0)` also catches NaN, which `s <= 0.0` would let through
            if !stds.iter().all(|&s| s > 0.0) {
                return bad(format!("{name} standard deviations must be > 0"));
            }
        }
        let means = self.gamma_mean.iter().chain(&self.hadron_mean);
        if means.clone().any(|m| !m.is_finite()) {
            return bad("class means must be finite".into());
        }
        Ok(())
    }
}

fn sample_event(
    rng: &mut ChaCha8Rng,
    mean: &[f64; FEATURE_COUNT],
    std: &[f64; FEATURE_COUNT],
    label: ClassLabel,
) -> EventRecord {
    let mut values = [0.0; EVENT_FIELD_COUNT];
    for i in 0..FEATURE_COUNT {
        let normal = Normal::new(mean[i], std[i]).expect("validated std");
        values[i] = normal.sample(rng);
    }
    values[FEATURE_COUNT] = SYNTH_F_ENER;
    values[FEATURE_COUNT + 1] = SYNTH_F_THETA;
    EventRecord::new(values, label).expect("normal draws are finite")
}

/// Generates the three event sets: labeled gamma and hadron samples plus an
/// unlabeled ON mixture of fresh gamma/hadron draws, shuffled so the file
/// carries no class ordering. Deterministic per seed.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Dataset, Dataset, Dataset), PipelineError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let gamma: Vec<EventRecord> = (0..cfg.n_gamma)
        .map(|_| sample_event(&mut rng, &cfg.gamma_mean, &cfg.gamma_std, ClassLabel::Gamma))
        .collect();
    let hadron: Vec<EventRecord> = (0..cfg.n_hadron)
        .map(|_| sample_event(&mut rng, &cfg.hadron_mean, &cfg.hadron_std, ClassLabel::Hadron))
        .collect();

    let n_on_gamma = ((cfg.n_on as f64 * cfg.on_gamma_fraction).round() as usize).min(cfg.n_on);
    let mut on: Vec<EventRecord> = Vec::with_capacity(cfg.n_on);
    for _ in 0..n_on_gamma {
        on.push(sample_event(
            &mut rng,
            &cfg.gamma_mean,
            &cfg.gamma_std,
            ClassLabel::Unknown,
        ));
    }
    for _ in n_on_gamma..cfg.n_on {
        on.push(sample_event(
            &mut rng,
            &cfg.hadron_mean,
            &cfg.hadron_std,
            ClassLabel::Unknown,
        ));
    }
    on.shuffle(&mut rng);

    Ok((
        Dataset::new(gamma, "synth:gamma"),
        Dataset::new(hadron, "synth:hadron"),
        Dataset::new(on, "synth:on"),
    ))
}

// ---------------------------------------------------------------------------
// evaluation

/// Counts of the four truth/prediction cells for the binary decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_gamma_pred_gamma: usize,
    pub true_gamma_pred_hadron: usize,
    pub true_hadron_pred_gamma: usize,
    pub true_hadron_pred_hadron: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_gamma_pred_gamma
            + self.true_gamma_pred_hadron
            + self.true_hadron_pred_gamma
            + self.true_hadron_pred_hadron
    }

    pub fn correct(&self) -> usize {
        self.true_gamma_pred_gamma + self.true_hadron_pred_hadron
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

/// Classifies every sample at `threshold` and tallies the confusion cells.
/// Sample targets encode the true class (1 gamma, 0 hadron).
pub fn evaluate(net: &MlpNetwork, test: &[LabeledSample], threshold: f64) -> ConfusionMatrix {
    assert!(!test.is_empty(), "evaluate on empty test set");
    let mut cm = ConfusionMatrix::default();
    for sample in test {
        let truth_gamma = sample.target >= 0.5;
        let pred_gamma = net.classify(&sample.input, threshold) == ClassLabel::Gamma;
        match (truth_gamma, pred_gamma) {
            (true, true) => cm.true_gamma_pred_gamma += 1,
            (true, false) => cm.true_gamma_pred_hadron += 1,
            (false, true) => cm.true_hadron_pred_gamma += 1,
            (false, false) => cm.true_hadron_pred_hadron += 1,
        }
    }
    cm
}

/// Writes the confusion matrix as a small labeled CSV table.
pub fn write_confusion_csv<W: Write>(w: &mut W, cm: &ConfusionMatrix) -> io::Result<()> {
    writeln!(w, "truth,pred_gamma,pred_hadron")?;
    writeln!(
        w,
        "gamma,{},{}",
        cm.true_gamma_pred_gamma, cm.true_gamma_pred_hadron
    )?;
    writeln!(
        w,
        "hadron,{},{}",
        cm.true_hadron_pred_gamma, cm.true_hadron_pred_hadron
    )?;
    Ok(())
}

/// Raw-output histogram per class: `edges` has `n_bins + 1` entries
/// spanning the observed output range.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHistogram {
    pub edges: Vec<f64>,
    pub gamma_counts: Vec<usize>,
    pub hadron_counts: Vec<usize>,
}

/// Bins the network's raw outputs over `[min, max]` of the observed
/// outputs. The top edge is closed (an output equal to the maximum lands in
/// the last bin); a constant output degenerates to every count in bin 0.
pub fn output_histogram(net: &MlpNetwork, test: &[LabeledSample], n_bins: usize) -> OutputHistogram {
    assert!(n_bins >= 1, "need at least one bin");
    assert!(!test.is_empty(), "output_histogram on empty test set");
    let outputs: Vec<(f64, bool)> = test
        .iter()
        .map(|s| (net.output(&s.input), s.target >= 0.5))
        .collect();
    let min = outputs.iter().map(|&(o, _)| o).fold(f64::INFINITY, f64::min);
    let max = outputs
        .iter()
        .map(|&(o, _)| o)
        .fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let width = range / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| min + i as f64 * width).collect();

    let mut gamma_counts = vec![0usize; n_bins];
    let mut hadron_counts = vec![0usize; n_bins];
    for (o, is_gamma) in outputs {
        let bin = if range == 0.0 {
            0
        } else {
            (((o - min) / width) as usize).min(n_bins - 1)
        };
        if is_gamma {
            gamma_counts[bin] += 1;
        } else {
            hadron_counts[bin] += 1;
        }
    }
    OutputHistogram {
        edges,
        gamma_counts,
        hadron_counts,
    }
}

/// Writes the histogram as CSV with header
/// `bin_low,bin_high,gamma_count,hadron_count`.
pub fn write_histogram_csv<W: Write>(w: &mut W, h: &OutputHistogram) -> io::Result<()> {
    writeln!(w, "bin_low,bin_high,gamma_count,hadron_count")?;
    for i in 0..h.gamma_counts.len() {
        writeln!(
            w,
            "{},{},{},{}",
            h.edges[i],
            h.edges[i + 1],
            h.gamma_counts[i],
            h.hadron_counts[i]
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// experiments

/// Normalized labeled samples for a dataset whose records carry class
/// labels (gamma → 1, hadron → 0).
fn labeled_samples(dataset: &Dataset, normalizer: &Normalizer) -> Vec<LabeledSample> {
    dataset
        .records
        .iter()
        .map(|r| {
            let target = match r.label {
                ClassLabel::Gamma => 1.0,
                ClassLabel::Hadron => 0.0,
                ClassLabel::Unknown => panic!("unlabeled record in a labeled set"),
            };
            LabeledSample {
                input: normalizer.apply(&r.features()).to_vec(),
                target,
            }
        })
        .collect()
}

/// Everything the supervised experiment produces.
#[derive(Debug, Clone)]
pub struct MlpExperiment {
    pub model: MlpNetwork,
    pub normalizer: Normalizer,
    pub curve: Vec<TrainRecordMlp>,
    pub confusion: ConfusionMatrix,
    pub histogram: OutputHistogram,
    pub train_size: usize,
    pub test_size: usize,
}

/// The supervised run: split each class in half (seeded), fit the range
/// normalizer on the training union, train a 10-10-1 network per `cfg`,
/// then evaluate confusion and output histogram on the held-out halves.
pub fn run_mlp_experiment(
    gamma: &Dataset,
    hadron: &Dataset,
    cfg: &MlpTrainConfig,
    threshold: f64,
    n_bins: usize,
) -> Result<MlpExperiment, PipelineError> {
    let (gamma_train, gamma_test) = gamma.split_half(seed::derive(cfg.seed, "split-gamma"))?;
    let (hadron_train, hadron_test) = hadron.split_half(seed::derive(cfg.seed, "split-hadron"))?;

    let mut train_features = gamma_train.features();
    train_features.extend(hadron_train.features());
    let normalizer = Normalizer::fit(&train_features)?;

    let mut train_set = labeled_samples(&gamma_train, &normalizer);
    train_set.extend(labeled_samples(&hadron_train, &normalizer));
    let mut test_set = labeled_samples(&gamma_test, &normalizer);
    test_set.extend(labeled_samples(&hadron_test, &normalizer));

    let net = MlpNetwork::init(MlpLayout::default(), seed::derive(cfg.seed, "mlp-init"))?;
    let train_cfg = MlpTrainConfig {
        seed: seed::derive(cfg.seed, "mlp-train"),
        ..cfg.clone()
    };
    let (model, curve) = train_mlp(&net, &train_set, &test_set, &train_cfg)?;

    let confusion = evaluate(&model, &test_set, threshold);
    let histogram = output_histogram(&model, &test_set, n_bins);
    Ok(MlpExperiment {
        model,
        normalizer,
        curve,
        confusion,
        histogram,
        train_size: train_set.len(),
        test_size: test_set.len(),
    })
}

/// Everything the unsupervised experiment produces.
#[derive(Debug, Clone)]
pub struct SomExperiment {
    pub normalizer: Normalizer,
    pub map: SomMap,
    pub umatrix: UMatrix,
    pub clusters: ClusterAssignment,
    /// Quantization-error curve; the first record is epoch 0 (the freshly
    /// initialized map), followed by one record per training epoch.
    pub curve: Vec<SomTrainRecord>,
}

/// The unsupervised run: range-normalize the ON features, initialize the
/// map by sampling the data, train, compute the U-matrix, extract clusters.
/// Labels are never consulted.
pub fn run_som_experiment(
    on_events: &Dataset,
    topology: SomTopology,
    cfg: &SomTrainConfig,
    quantile: f64,
) -> Result<SomExperiment, PipelineError> {
    if on_events.is_empty() {
        return Err(PipelineError::Data(DataError::EmptyDataset));
    }
    let features = on_events.features();
    let normalizer = Normalizer::fit(&features)?;
    let data: Vec<Vec<f64>> = normalizer
        .apply_all(&features)
        .iter()
        .map(|v| v.to_vec())
        .collect();

    let map = SomMap::init(topology, &data, seed::derive(cfg.seed, "som-init"))?;
    let mut curve = vec![SomTrainRecord {
        epoch: 0,
        quantization_error: map.quantization_error(&data),
    }];
    let train_cfg = SomTrainConfig {
        seed: seed::derive(cfg.seed, "som-train"),
        ..cfg.clone()
    };
    let (map, records) = map.train(&data, &train_cfg)?;
    curve.extend(records);

    let umatrix = compute_umatrix(&map);
    let clusters = extract_clusters(&umatrix, quantile);
    Ok(SomExperiment {
        normalizer,
        map,
        umatrix,
        clusters,
        curve,
    })
}

/// Majority-vote labeling of clusters from a small calibration set: each
/// calibration vector votes in its BMU's cluster. A cluster with no votes
/// or an exact tie stays `Unknown`.
pub fn label_clusters(
    map: &SomMap,
    clusters: &ClusterAssignment,
    calibration: &[LabeledSample],
) -> Vec<ClassLabel> {
    let mut gamma_votes = vec![0usize; clusters.cluster_count];
    let mut hadron_votes = vec![0usize; clusters.cluster_count];
    for sample in calibration {
        let cluster = clusters.unit_cluster[map.find_bmu(&sample.input)];
        if cluster >= 0 {
            if sample.target >= 0.5 {
                gamma_votes[cluster as usize] += 1;
            } else {
                hadron_votes[cluster as usize] += 1;
            }
        }
    }
    (0..clusters.cluster_count)
        .map(|c| {
            use std::cmp::Ordering;
            match gamma_votes[c].cmp(&hadron_votes[c]) {
                Ordering::Greater => ClassLabel::Gamma,
                Ordering::Less if hadron_votes[c] > 0 => ClassLabel::Hadron,
                _ => ClassLabel::Unknown, // tie or no votes at all
            }
        })
        .collect()
}

/// Knobs specific to the hybrid run.
#[derive(Debug, Clone)]
pub struct HybridParams {
    /// U-matrix quantile for cluster extraction.
    pub quantile: f64,
    /// Decision threshold for the final evaluation.
    pub threshold: f64,
    /// Fraction of each class's training half used for cluster labeling.
    pub calibration_fraction: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            quantile: 0.5,
            threshold: 0.5,
            calibration_fraction: 0.1,
        }
    }
}

/// Everything the hybrid experiment produces.
#[derive(Debug, Clone)]
pub struct HybridExperiment {
    pub som: SomExperiment,
    pub cluster_labels: Vec<ClassLabel>,
    pub model: MlpNetwork,
    pub curve: Vec<TrainRecordMlp>,
    pub confusion: ConfusionMatrix,
    pub codebook_size: usize,
    /// Number of codebook vectors the MLP trained on — bounded by
    /// `codebook_size`, never by the event count.
    pub mlp_train_size: usize,
    pub calibration_size: usize,
    pub test_size: usize,
}

/// The SOM→MLP hybrid: train a SOM on the unlabeled ON events, label the
/// extracted clusters by majority vote of a small labeled calibration
/// subset (a seeded fraction of each class's training half), then train the
/// MLP on the codebook vectors of labeled clusters (gamma clusters →
/// target 1, hadron → 0) and evaluate on the held-out test halves.
///
/// The ON-fitted normalizer is used throughout so calibration vectors, the
/// codebook, and test vectors all live in the same space. With equal seeds
/// the class splits match [`run_mlp_experiment`]'s exactly.
pub fn run_hybrid_experiment(
    gamma: &Dataset,
    hadron: &Dataset,
    on_events: &Dataset,
    topology: SomTopology,
    som_cfg: &SomTrainConfig,
    mlp_cfg: &MlpTrainConfig,
    params: &HybridParams,
) -> Result<HybridExperiment, PipelineError> {
    let som = run_som_experiment(on_events, topology, som_cfg, params.quantile)?;

    let (gamma_train, gamma_test) = gamma.split_half(seed::derive(mlp_cfg.seed, "split-gamma"))?;
    let (hadron_train, hadron_test) =
        hadron.split_half(seed::derive(mlp_cfg.seed, "split-hadron"))?;

    // the training halves are already seeded shuffles, so a prefix is a
    // uniform subsample of each class
    let calib_count = |n: usize| ((n as f64 * params.calibration_fraction).ceil() as usize).min(n);
    let mut calibration = labeled_samples(
        &Dataset::new(
            gamma_train.records[..calib_count(gamma_train.len())].to_vec(),
            "calibration:gamma",
        ),
        &som.normalizer,
    );
    calibration.extend(labeled_samples(
        &Dataset::new(
            hadron_train.records[..calib_count(hadron_train.len())].to_vec(),
            "calibration:hadron",
        ),
        &som.normalizer,
    ));

    let cluster_labels = label_clusters(&som.map, &som.clusters, &calibration);

    let mut train_set = Vec::new();
    for (unit, &cluster) in som.clusters.unit_cluster.iter().enumerate() {
        if cluster < 0 {
            continue;
        }
        let target = match cluster_labels[cluster as usize] {
            ClassLabel::Gamma => 1.0,
            ClassLabel::Hadron => 0.0,
            ClassLabel::Unknown => continue,
        };
        train_set.push(LabeledSample {
            input: som.map.unit_vector(unit).to_vec(),
            target,
        });
    }
    if train_set.is_empty() {
        return Err(PipelineError::AllClustersUnlabeled {
            clusters: som.clusters.cluster_count,
        });
    }

    let mut test_set = labeled_samples(&gamma_test, &som.normalizer);
    test_set.extend(labeled_samples(&hadron_test, &som.normalizer));

    let net = MlpNetwork::init(MlpLayout::default(), seed::derive(mlp_cfg.seed, "mlp-init"))?;
    let train_cfg = MlpTrainConfig {
        seed: seed::derive(mlp_cfg.seed, "mlp-train"),
        ..mlp_cfg.clone()
    };
    let (model, curve) = train_mlp(&net, &train_set, &test_set, &train_cfg)?;
    let confusion = evaluate(&model, &test_set, params.threshold);

    Ok(HybridExperiment {
        codebook_size: som.map.topology().unit_count(),
        mlp_train_size: train_set.len(),
        calibration_size: calibration.len(),
        test_size: test_set.len(),
        som,
        cluster_labels,
        model,
        curve,
        confusion,
    })
}

/// First run whose training error is at or below `error_threshold`, if any
/// — the "training period" measure for hybrid-vs-direct comparisons.
pub fn runs_to_threshold(curve: &[TrainRecordMlp], error_threshold: f64) -> Option<usize> {
    curve
        .iter()
        .find(|r| r.train_error <= error_threshold)
        .map(|r| r.run_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_dataset, write_dataset, FeatureVector};
    use crate::mlp::TrainMethod;
    use crate::som::TopologyKind;
    use rand::Rng;

    fn small_synth(n: usize, separation: f64, seed: u64) -> (Dataset, Dataset, Dataset) {
        let base = SynthConfig::default();
        let mut gamma_mean = base.gamma_mean;
        let mut hadron_mean = base.hadron_mean;
        // widen every feature gap to `separation` combined standard deviations
        for i in 0..FEATURE_COUNT {
            let spread = (base.gamma_std[i].powi(2) + base.hadron_std[i].powi(2)).sqrt();
            let mid = (gamma_mean[i] + hadron_mean[i]) / 2.0;
            let sign = if hadron_mean[i] >= gamma_mean[i] { 1.0 } else { -1.0 };
            gamma_mean[i] = mid - sign * separation * spread / 2.0;
            hadron_mean[i] = mid + sign * separation * spread / 2.0;
        }
        let cfg = SynthConfig {
            n_gamma: n,
            n_hadron: n,
            n_on: n,
            gamma_mean,
            hadron_mean,
            seed,
            ..base
        };
        synth_generate(&cfg).unwrap()
    }

    #[test]
    fn synth_default_counts() {
        let cfg = SynthConfig {
            seed: 1,
            ..SynthConfig::default()
        };
        let (gamma, hadron, on) = synth_generate(&cfg).unwrap();
        assert_eq!(gamma.len(), 12332);
        assert_eq!(hadron.len(), 6688);
        assert_eq!(on.len(), 7356);
        assert!(gamma.records.iter().all(|r| r.label == ClassLabel::Gamma));
        assert!(hadron.records.iter().all(|r| r.label == ClassLabel::Hadron));
        assert!(on.records.iter().all(|r| r.label == ClassLabel::Unknown));
        // the bookkeeping fields are constants
        assert!(gamma.records.iter().all(|r| r.f_ener() == 2.0 && r.f_theta() == 0.0));
    }

    #[test]
    fn synth_deterministic_per_seed() {
        let cfg = SynthConfig {
            n_gamma: 50,
            n_hadron: 50,
            n_on: 50,
            seed: 7,
            ..SynthConfig::default()
        };
        let (g1, h1, o1) = synth_generate(&cfg).unwrap();
        let (g2, h2, o2) = synth_generate(&cfg).unwrap();
        assert_eq!(g1.records, g2.records);
        assert_eq!(h1.records, h2.records);
        assert_eq!(o1.records, o2.records);
        let other = SynthConfig { seed: 8, ..cfg };
        let (g3, _, _) = synth_generate(&other).unwrap();
        assert_ne!(g1.records, g3.records);
    }

    #[test]
    fn synth_rejects_bad_config() {
        let mut cfg = SynthConfig {
            n_gamma: 0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            synth_generate(&cfg),
            Err(PipelineError::InvalidSynthConfig(_))
        ));
        cfg.n_gamma = 10;
        cfg.gamma_std[3] = 0.0;
        assert!(matches!(
            synth_generate(&cfg),
            Err(PipelineError::InvalidSynthConfig(_))
        ));
        cfg.gamma_std[3] = 1.0;
        cfg.on_gamma_fraction = 1.5;
        assert!(matches!(
            synth_generate(&cfg),
            Err(PipelineError::InvalidSynthConfig(_))
        ));
    }

    #[test]
    fn synth_round_trips_through_ascii_files() {
        let cfg = SynthConfig {
            n_gamma: 30,
            n_hadron: 30,
            n_on: 30,
            seed: 9,
            ..SynthConfig::default()
        };
        let (gamma, _, _) = synth_generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gamma.txt");
        let mut file = std::fs::File::create(&path).unwrap();
        write_dataset(&mut file, &gamma).unwrap();
        drop(file);
        let back = load_dataset(&path, ClassLabel::Gamma).unwrap();
        assert_eq!(back.records, gamma.records);
    }

    fn zero_output_net() -> MlpNetwork {
        let net = MlpNetwork::init(MlpLayout::default(), 0).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.with_params(&zeros)
    }

    fn random_samples(n: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| LabeledSample {
                input: (0..FEATURE_COUNT).map(|_| rng.random_range(0.0..1.0)).collect(),
                target: (i % 2) as f64,
            })
            .collect()
    }

    #[test]
    fn evaluate_counts_and_degenerate_threshold() {
        // zero net outputs exactly 0 for every event
        let net = zero_output_net();
        let samples = random_samples(10, 1);
        // threshold 0: output 0 >= 0 → everything predicted gamma
        let cm = evaluate(&net, &samples, 0.0);
        assert_eq!(cm.true_gamma_pred_gamma, 5);
        assert_eq!(cm.true_hadron_pred_gamma, 5);
        assert_eq!(cm.true_gamma_pred_hadron + cm.true_hadron_pred_hadron, 0);
        assert_eq!(cm.total(), 10);
        // threshold above 0: everything predicted hadron
        let cm = evaluate(&net, &samples, 0.5);
        assert_eq!(cm.true_hadron_pred_hadron, 5);
        assert_eq!(cm.true_gamma_pred_hadron, 5);
        assert!((cm.accuracy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_matches_naive_counting_loop() {
        let net = MlpNetwork::init(MlpLayout::default(), 31).unwrap();
        let samples = random_samples(200, 32);
        let cm = evaluate(&net, &samples, 0.5);
        let mut cells = [0usize; 4];
        for s in &samples {
            let gamma_truth = s.target >= 0.5;
            let gamma_pred = net.output(&s.input) >= 0.5;
            match (gamma_truth, gamma_pred) {
                (true, true) => cells[0] += 1,
                (true, false) => cells[1] += 1,
                (false, true) => cells[2] += 1,
                (false, false) => cells[3] += 1,
            }
        }
        assert_eq!(
            [
                cm.true_gamma_pred_gamma,
                cm.true_gamma_pred_hadron,
                cm.true_hadron_pred_gamma,
                cm.true_hadron_pred_hadron
            ],
            cells
        );
    }

    #[test]
    fn evaluate_is_permutation_invariant() {
        let net = MlpNetwork::init(MlpLayout::default(), 33).unwrap();
        let samples = random_samples(50, 34);
        let mut reversed = samples.clone();
        reversed.reverse();
        assert_eq!(evaluate(&net, &samples, 0.5), evaluate(&net, &reversed, 0.5));
    }

    #[test]
    fn histogram_constant_output_single_bin() {
        let net = zero_output_net();
        let samples = random_samples(20, 41);
        let h = output_histogram(&net, &samples, 10);
        assert_eq!(h.gamma_counts[0], 10);
        assert_eq!(h.hadron_counts[0], 10);
        assert_eq!(h.gamma_counts[1..].iter().sum::<usize>(), 0);
        assert_eq!(h.hadron_counts[1..].iter().sum::<usize>(), 0);
    }

    #[test]
    fn histogram_conserves_class_counts_and_matches_naive_binning() {
        let net = MlpNetwork::init(MlpLayout::default(), 43).unwrap();
        let samples = random_samples(500, 44);
        let n_bins = 17;
        let h = output_histogram(&net, &samples, n_bins);
        assert_eq!(h.gamma_counts.iter().sum::<usize>(), 250);
        assert_eq!(h.hadron_counts.iter().sum::<usize>(), 250);
        assert_eq!(h.edges.len(), n_bins + 1);

        let outputs: Vec<f64> = samples.iter().map(|s| net.output(&s.input)).collect();
        let min = outputs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut gamma = vec![0usize; n_bins];
        let mut hadron = vec![0usize; n_bins];
        for (s, o) in samples.iter().zip(&outputs) {
            let mut bin = ((o - min) / (max - min) * n_bins as f64) as usize;
            if bin >= n_bins {
                bin = n_bins - 1;
            }
            if s.target >= 0.5 {
                gamma[bin] += 1;
            } else {
                hadron[bin] += 1;
            }
        }
        assert_eq!(h.gamma_counts, gamma);
        assert_eq!(h.hadron_counts, hadron);
    }

    #[test]
    fn mlp_experiment_curve_confusion_and_determinism() {
        let (gamma, hadron, _) = small_synth(120, 3.0, 51);
        let cfg = MlpTrainConfig {
            method: TrainMethod::Bfgs,
            runs: 30,
            seed: 52,
            ..MlpTrainConfig::default()
        };
        let a = run_mlp_experiment(&gamma, &hadron, &cfg, 0.5, 10).unwrap();
        assert!(a.curve.len() <= 30);
        assert!(!a.curve.is_empty());
        assert_eq!(a.train_size, 120);
        assert_eq!(a.test_size, 120);
        assert_eq!(a.confusion.total(), 120);
        // well separated classes → high accuracy
        assert!(a.confusion.accuracy() >= 0.9, "accuracy {}", a.confusion.accuracy());

        let b = run_mlp_experiment(&gamma, &hadron, &cfg, 0.5, 10).unwrap();
        assert_eq!(a.confusion, b.confusion);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn mlp_experiment_stochastic_has_one_record_per_run() {
        let (gamma, hadron, _) = small_synth(40, 2.0, 53);
        let cfg = MlpTrainConfig {
            method: TrainMethod::Stochastic,
            runs: 7,
            seed: 54,
            ..MlpTrainConfig::default()
        };
        let result = run_mlp_experiment(&gamma, &hadron, &cfg, 0.5, 10).unwrap();
        assert_eq!(result.curve.len(), 7);
        assert_eq!(result.curve[0].run_index, 1);
    }

    #[test]
    fn som_experiment_never_reads_labels() {
        let (_, _, on) = small_synth(80, 2.0, 61);
        // identical field values, labels stamped differently
        let mut labeled = on.clone();
        for r in &mut labeled.records {
            r.label = ClassLabel::Gamma;
        }
        let topology = SomTopology::new(TopologyKind::Rectangular, 4, 4).unwrap();
        let cfg = SomTrainConfig {
            epochs: 5,
            seed: 62,
            ..SomTrainConfig::for_topology(&topology)
        };
        let a = run_som_experiment(&on, topology, &cfg, 0.5).unwrap();
        let b = run_som_experiment(&labeled, topology, &cfg, 0.5).unwrap();
        assert_eq!(a.map, b.map);
        assert_eq!(a.umatrix, b.umatrix);
        assert_eq!(a.clusters, b.clusters);
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn som_experiment_curve_includes_epoch_zero() {
        let (_, _, on) = small_synth(60, 2.0, 63);
        let topology = SomTopology::new(TopologyKind::Hexagonal, 3, 3).unwrap();
        let cfg = SomTrainConfig {
            epochs: 4,
            seed: 64,
            ..SomTrainConfig::for_topology(&topology)
        };
        let result = run_som_experiment(&on, topology, &cfg, 0.5).unwrap();
        assert_eq!(result.curve.len(), 5);
        assert_eq!(result.curve[0].epoch, 0);
        assert_eq!(result.curve[4].epoch, 4);
    }

    #[test]
    fn label_clusters_majority_tie_and_empty_rules() {
        // two units, two singleton clusters
        let map = SomMap::from_codebook(
            SomTopology::new(TopologyKind::Rectangular, 2, 1).unwrap(),
            1,
            vec![0.0, 1.0],
        )
        .unwrap();
        let clusters = ClusterAssignment {
            unit_cluster: vec![0, 1],
            cluster_count: 2,
        };
        let sample = |x: f64, target: f64| LabeledSample {
            input: vec![x],
            target,
        };

        // 3 gamma vs 1 hadron near unit 0; nothing near unit 1
        let calibration = vec![
            sample(0.0, 1.0),
            sample(0.1, 1.0),
            sample(0.2, 1.0),
            sample(0.0, 0.0),
        ];
        let labels = label_clusters(&map, &clusters, &calibration);
        assert_eq!(labels, vec![ClassLabel::Gamma, ClassLabel::Unknown]);

        // exact tie near unit 1
        let calibration = vec![sample(1.0, 1.0), sample(0.9, 0.0)];
        let labels = label_clusters(&map, &clusters, &calibration);
        assert_eq!(labels[1], ClassLabel::Unknown);

        // hadron majority
        let calibration = vec![sample(1.0, 0.0), sample(0.9, 0.0), sample(1.1, 1.0)];
        let labels = label_clusters(&map, &clusters, &calibration);
        assert_eq!(labels[1], ClassLabel::Hadron);
    }

    #[test]
    fn hybrid_experiment_end_to_end() {
        let (gamma, hadron, on) = small_synth(150, 4.0, 71);
        let topology = SomTopology::new(TopologyKind::Rectangular, 5, 5).unwrap();
        let som_cfg = SomTrainConfig {
            epochs: 15,
            seed: 72,
            sigma_final: 0.5,
            ..SomTrainConfig::for_topology(&topology)
        };
        let mlp_cfg = MlpTrainConfig {
            method: TrainMethod::Bfgs,
            runs: 40,
            seed: 73,
            ..MlpTrainConfig::default()
        };
        let params = HybridParams::default();
        let result =
            run_hybrid_experiment(&gamma, &hadron, &on, topology, &som_cfg, &mlp_cfg, &params)
                .unwrap();
        assert_eq!(result.codebook_size, 25);
        assert!(result.mlp_train_size <= result.codebook_size);
        assert!(result.mlp_train_size >= 1);
        assert_eq!(result.test_size, 150);
        assert_eq!(result.confusion.total(), 150);
        // calibration: ceil(10%) of each 75-record training half
        assert_eq!(result.calibration_size, 16);
        // highly separated data → the hybrid should classify well
        assert!(result.confusion.accuracy() >= 0.8, "accuracy {}", result.confusion.accuracy());

        let again =
            run_hybrid_experiment(&gamma, &hadron, &on, topology, &som_cfg, &mlp_cfg, &params)
                .unwrap();
        assert_eq!(result.confusion, again.confusion);
        assert_eq!(result.model, again.model);
    }

    #[test]
    fn hybrid_aborts_when_no_cluster_gets_a_label() {
        // ON data collapses to one point → one cluster; a single gamma and a
        // single hadron calibration vector tie it → everything Unknown
        let constant = EventRecord::new(
            [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 2.0, 0.0],
            ClassLabel::Unknown,
        )
        .unwrap();
        let on = Dataset::new(vec![constant; 20], "on");
        let mut gamma_record = constant;
        gamma_record.label = ClassLabel::Gamma;
        let gamma = Dataset::new(vec![gamma_record; 2], "gamma");
        let mut hadron_record = constant;
        hadron_record.label = ClassLabel::Hadron;
        let hadron = Dataset::new(vec![hadron_record; 2], "hadron");

        let topology = SomTopology::new(TopologyKind::Rectangular, 2, 2).unwrap();
        let som_cfg = SomTrainConfig {
            epochs: 2,
            seed: 81,
            ..SomTrainConfig::for_topology(&topology)
        };
        let mlp_cfg = MlpTrainConfig {
            runs: 5,
            seed: 82,
            ..MlpTrainConfig::default()
        };
        let err = run_hybrid_experiment(
            &gamma,
            &hadron,
            &on,
            topology,
            &som_cfg,
            &mlp_cfg,
            &HybridParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::AllClustersUnlabeled { .. }));
    }

    #[test]
    fn runs_to_threshold_finds_first_crossing() {
        let curve: Vec<TrainRecordMlp> = [0.5, 0.04, 0.03]
            .iter()
            .enumerate()
            .map(|(i, &e)| TrainRecordMlp {
                run_index: i + 1,
                train_error: e,
                test_error: e,
            })
            .collect();
        assert_eq!(runs_to_threshold(&curve, 0.05), Some(2));
        assert_eq!(runs_to_threshold(&curve, 0.5), Some(1));
        assert_eq!(runs_to_threshold(&curve, 0.01), None);
        assert_eq!(runs_to_threshold(&[], 0.5), None);
    }

    #[test]
    fn confusion_csv_format() {
        let cm = ConfusionMatrix {
            true_gamma_pred_gamma: 9,
            true_gamma_pred_hadron: 1,
            true_hadron_pred_gamma: 2,
            true_hadron_pred_hadron: 8,
        };
        let mut buf = Vec::new();
        write_confusion_csv(&mut buf, &cm).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "truth,pred_gamma,pred_hadron\ngamma,9,1\nhadron,2,8\n"
        );
        assert_eq!(cm.total(), 20);
        assert!((cm.accuracy() - 0.85).abs() < 1e-15);
    }

    #[test]
    fn histogram_csv_format() {
        let h = OutputHistogram {
            edges: vec![0.0, 0.5, 1.0],
            gamma_counts: vec![1, 9],
            hadron_counts: vec![8, 2],
        };
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bin_low,bin_high,gamma_count,hadron_count\n0,0.5,1,8\n0.5,1,9,2\n"
        );
    }

    #[test]
    fn labeled_samples_panics_on_unknown() {
        let record = EventRecord::new([0.0; 12], ClassLabel::Unknown).unwrap();
        let ds = Dataset::new(vec![record], "x");
        let norm = Normalizer::fit(&[FeatureVector([0.0; 10]), FeatureVector([1.0; 10])]).unwrap();
        let result = std::panic::catch_unwind(|| labeled_samples(&ds, &norm));
        assert!(result.is_err());
    }
}
