//! Desk-scale studies: noise robustness, initialization and granularity
//! ablations, per-layer parameter reports and sensitivity curves.
//!
//! Every CSV starts with `#` comment lines carrying a SHA-256 digest of the
//! full configuration (including the data), the seeds, and notes on how noise
//! and activation parameters are handled. Output is a pure function of the
//! inputs, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::{self, DEFAULT_BUDGET, DEFAULT_POINTS, DEFAULT_RANGE};
use crate::format::real;
use crate::gate::{self, ArcGateParams, PARAM_NAMES};
use crate::nn::data::{self, DataSplit, Dataset};
use crate::nn::{evaluate, persist, train, Granularity, InitStrategy, Mlp, ModelSpec, TrainConfig};

pub const MODEL_ARCGATE: &str = "arcgate";
pub const MODEL_RELU: &str = "relu";

pub const DEFAULT_SIGMAS: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5];
/// Noise levels averaged by [`SweepReport::mean_gain`] callers in the robustness check.
pub const ROBUSTNESS_SIGMAS: [f64; 5] = [0.1, 0.15, 0.2, 0.3, 0.5];

pub const NOISE_NOTE: &str =
    "noise: iid gaussian added to inputs after [0,1] scaling, not re-clamped; one noise stream per seed";
pub const OPTIMIZER_NOTE: &str =
    "optimizer: activation parameters share learning rate and moments settings with dense weights; weight decay on dense weights only";

pub const SWEEP_HEADER: &str = "model,sigma,accuracy,seed";
pub const INIT_HEADER: &str = "strategy,test_accuracy,epochs,seed";
pub const GRANULARITY_HEADER: &str = "granularity,learnable_activation_params,test_accuracy,seed";
pub const LAYERS_HEADER: &str = "layer_index,a,c,p,alpha,beta,gamma,delta";

/// Desk-scale split sizes.
pub const DESK_TRAIN: usize = 5000;
pub const DESK_TEST: usize = 1000;
pub const DESK_DATA_SEED: u64 = 0;

/// Hidden widths of every experiment network.
pub const HIDDEN: [usize; 3] = [256, 128, 64];

pub fn experiment_spec(data: &DataSplit) -> ModelSpec {
    ModelSpec {
        input_dim: data.train.input_dim(),
        hidden: HIDDEN.to_vec(),
        n_classes: data.n_classes(),
    }
}

const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];
const SYNTH_FILES: [&str; 4] = [
    "train-images.idx",
    "train-labels.idx",
    "test-images.idx",
    "test-labels.idx",
];

/// The desk-scale split: the first 5,000/1,000 samples of an IDX directory
/// (MNIST file names or the synthetic glyph names), or generated glyphs
/// when `dir` is `None`. Returns the split and a description of its source.
pub fn desk_data(dir: Option<&Path>) -> Result<(DataSplit, String)> {
    let Some(dir) = dir else {
        let split = data::synthetic_split(DESK_TRAIN, DESK_TEST, DESK_DATA_SEED);
        return Ok((split, format!("synthetic glyphs seed {DESK_DATA_SEED}")));
    };
    let names = [MNIST_FILES, SYNTH_FILES]
        .into_iter()
        .find(|set| set.iter().all(|f| dir.join(f).is_file()))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("{} holds no complete IDX split", dir.display()))
        })?;
    let train = Dataset::from_idx(&dir.join(names[0]), &dir.join(names[1]))?.truncate(DESK_TRAIN);
    let test = Dataset::from_idx(&dir.join(names[2]), &dir.join(names[3]))?.truncate(DESK_TEST);
    let n_classes = train.n_classes.max(test.n_classes);
    let split = DataSplit {
        train: Dataset { n_classes, ..train },
        test: Dataset { n_classes, ..test },
    };
    Ok((split, dir.display().to_string()))
}

/// SHA-256 over the tensor bits and labels of both halves.
pub fn data_digest(data: &DataSplit) -> String {
    let mut h = Sha256::new();
    for set in [&data.train, &data.test] {
        h.update((set.len() as u64).to_le_bytes());
        h.update((set.input_dim() as u64).to_le_bytes());
        for v in set.inputs.data() {
            h.update(v.to_bits().to_le_bytes());
        }
        for &l in &set.labels {
            h.update((l as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// SHA-256 of the canonical configuration text.
pub fn config_digest(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(",")
}

fn join_seeds(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn comment_block(digest: &str, seeds: &[u64], notes: &[&str]) -> String {
    let mut s = format!("# config_sha256: {digest}\n# seeds: {}\n", join_seeds(seeds));
    for n in notes {
        let _ = writeln!(s, "# {n}");
    }
    s
}

fn validate_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.is_empty() {
        return Err(Error::InvalidArgument("sigma list is empty".into()));
    }
    if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidArgument("sigmas must be finite and >= 0".into()));
    }
    if sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sigmas must be strictly ascending".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: String,
    pub sigma: f64,
    pub accuracy: f64,
    pub seed: u64,
}

/// Paired accuracy under input noise, grouped by seed, then model, then sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub seeds: Vec<u64>,
    pub digest: String,
    /// Set when training diverged; `rows` then holds what finished.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    pub sigma: f64,
    pub seed: u64,
    /// ArcGate accuracy minus ReLU accuracy.
    pub delta: f64,
}

impl SweepReport {
    pub fn accuracy(&self, model: &str, sigma: f64, seed: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.sigma == sigma && r.seed == seed)
            .map(|r| r.accuracy)
    }

    /// Per-(seed, sigma) gain wherever both models have a row.
    pub fn gains(&self) -> Vec<Gain> {
        self.rows
            .iter()
            .filter(|r| r.model == MODEL_ARCGATE)
            .filter_map(|r| {
                let relu = self.accuracy(MODEL_RELU, r.sigma, r.seed)?;
                Some(Gain {
                    sigma: r.sigma,
                    seed: r.seed,
                    delta: r.accuracy - relu,
                })
            })
            .collect()
    }

    /// Mean gain over all seeds at the listed sigmas.
    pub fn mean_gain(&self, sigmas: &[f64]) -> Option<f64> {
        let d: Vec<f64> = self
            .gains()
            .into_iter()
            .filter(|g| sigmas.contains(&g.sigma))
            .map(|g| g.delta)
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }

    /// Concatenates single-seed reports.
    pub fn combine(reports: Vec<SweepReport>) -> Result<SweepReport> {
        let mut seeds = Vec::new();
        let mut digest_text = String::new();
        let mut rows = Vec::new();
        let mut failure = None;
        for r in reports {
            if r.seeds.iter().any(|s| seeds.contains(s)) {
                return Err(Error::InvalidArgument("sweep reports share a seed".into()));
            }
            seeds.extend(&r.seeds);
            digest_text.push_str(&r.digest);
            rows.extend(r.rows);
            failure = failure.or(r.failure);
        }
        Ok(SweepReport {
            rows,
            seeds,
            digest: config_digest(&digest_text),
            failure,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = comment_block(&self.digest, &self.seeds, &[NOISE_NOTE, OPTIMIZER_NOTE]);
        if let Some(f) = &self.failure {
            let _ = writeln!(s, "# failure: {f}");
        }
        s.push_str(SWEEP_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.model, real(r.sigma), real(r.accuracy), r.seed);
        }
        s
    }
}

/// Accuracy of one trained model at every sigma; noise draws use `seed`.
pub fn sweep_rows(
    model: &Mlp,
    label: &str,
    test: &Dataset,
    sigmas: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    validate_sigmas(sigmas)?;
    sigmas
        .iter()
        .map(|&sigma| {
            Ok(SweepRow {
                model: label.to_string(),
                sigma,
                accuracy: evaluate(model, test, sigma, seed)?,
                seed,
            })
        })
        .collect()
}

/// Sweep of an already trained model, e.g. one loaded from disk.
pub fn sweep_model(
    model: &Mlp,
    label: &str,
    test: &Dataset,
    sigmas: &[f64],
    seed: u64,
) -> Result<SweepReport> {
    let rows = sweep_rows(model, label, test, sigmas, seed)?;
    let mut h = Sha256::new();
    h.update(persist::to_bytes(model));
    let canonical = format!(
        "experiment=sweep_model;label={label};model_sha256={};data_sha256={};sigmas={};seed={seed}",
        hex::encode(h.finalize()),
        data_digest(&DataSplit {
            train: test.truncate(0),
            test: test.clone(),
        }),
        join_reals(sigmas)
    );
    Ok(SweepReport {
        rows,
        seeds: vec![seed],
        digest: config_digest(&canonical),
        failure: None,
    })
}

/// The trained pair behind a sweep, kept for callers that reuse them.
#[derive(Debug, Clone)]
pub struct SweepModels {
    pub arcgate: Option<Mlp>,
    pub relu: Option<Mlp>,
}

/// Trains an ArcGate network (soft-ReLU init, layer-wise) and a ReLU network
/// with the same seed and architecture, then evaluates both at every sigma.
pub fn noise_sweep(
    data: &DataSplit,
    sigmas: &[f64],
    config: &TrainConfig,
    seed: u64,
) -> Result<SweepReport> {
    noise_sweep_with_models(data, sigmas, config, seed).map(|(r, _)| r)
}

pub fn noise_sweep_with_models(
    data: &DataSplit,
    sigmas: &[f64],
    config: &TrainConfig,
    seed: u64,
) -> Result<(SweepReport, SweepModels)> {
    validate_sigmas(sigmas)?;
    config.validate()?;
    let spec = experiment_spec(data);
    let base = TrainConfig {
        seed,
        ..config.clone()
    };
    let arc_cfg = TrainConfig {
        init_strategy: InitStrategy::SoftRelu,
        granularity: Granularity::LayerWise,
        ..base.clone()
    };
    let relu_cfg = TrainConfig {
        init_strategy: InitStrategy::ReluBaseline,
        ..base
    };
    let canonical = format!(
        "experiment=noise_sweep;data_sha256={};arch={:?};sigmas={};arcgate={};relu={}",
        data_digest(data),
        spec.hidden,
        join_reals(sigmas),
        arc_cfg.canonical(),
        relu_cfg.canonical()
    );
    let mut report = SweepReport {
        rows: Vec::new(),
        seeds: vec![seed],
        digest: config_digest(&canonical),
        failure: None,
    };
    let mut models = SweepModels {
        arcgate: None,
        relu: None,
    };
    for (label, cfg) in [(MODEL_ARCGATE, &arc_cfg), (MODEL_RELU, &relu_cfg)] {
        match train(&spec, data, cfg) {
            Ok(out) => {
                report
                    .rows
                    .extend(sweep_rows(&out.model, label, &data.test, sigmas, seed)?);
                if label == MODEL_ARCGATE {
                    models.arcgate = Some(out.model);
                } else {
                    models.relu = Some(out.model);
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                report.failure = Some(format!("{label}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((report, models))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitRow {
    pub strategy: InitStrategy,
    /// Final test accuracy, or the divergence message.
    pub test_accuracy: std::result::Result<f64, String>,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitTable {
    pub rows: Vec<InitRow>,
    pub digest: String,
}

impl InitTable {
    pub fn accuracy(&self, strategy: InitStrategy) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy)
            .and_then(|r| r.test_accuracy.clone().ok())
    }

    pub fn to_csv(&self) -> String {
        let seeds: Vec<u64> = self.rows.first().map(|r| vec![r.seed]).unwrap_or_default();
        let mut s = comment_block(&self.digest, &seeds, &[OPTIMIZER_NOTE]);
        for r in &self.rows {
            if let Err(e) = &r.test_accuracy {
                let _ = writeln!(s, "# failure: {}: {e}", r.strategy);
            }
        }
        s.push_str(INIT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let acc = r.test_accuracy.as_ref().map_or("NaN".to_string(), |a| real(*a));
            let _ = writeln!(s, "{},{acc},{},{}", r.strategy, r.epochs, r.seed);
        }
        s
    }
}

/// Trains one network per initialization strategy with a shared seed.
pub fn init_ablation(data: &DataSplit, config: &TrainConfig, seed: u64) -> Result<InitTable> {
    config.validate()?;
    let spec = experiment_spec(data);
    let mut canonical = format!(
        "experiment=init_ablation;data_sha256={};arch={:?}",
        data_digest(data),
        spec.hidden
    );
    let mut rows = Vec::new();
    for strategy in InitStrategy::ALL {
        let cfg = TrainConfig {
            seed,
            init_strategy: strategy,
            ..config.clone()
        };
        let _ = write!(canonical, ";{}", cfg.canonical());
        let test_accuracy = match train(&spec, data, &cfg) {
            Ok(out) => Ok(evaluate(&out.model, &data.test, 0.0, seed)?),
            Err(e @ Error::Divergence { .. }) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        rows.push(InitRow {
            strategy,
            test_accuracy,
            epochs: cfg.epochs,
            seed,
        });
    }
    Ok(InitTable {
        rows,
        digest: config_digest(&canonical),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GranularityRow {
    pub granularity: Granularity,
    /// Counted on the trained network.
    pub learnable_activation_params: usize,
    pub test_accuracy: std::result::Result<f64, String>,
    pub seed: u64,
    /// Whether every gate's raw parameters are bit-identical to initialization.
    pub gates_unchanged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GranularityTable {
    pub rows: Vec<GranularityRow>,
    pub digest: String,
}

impl GranularityTable {
    pub fn row(&self, g: Granularity) -> Option<&GranularityRow> {
        self.rows.iter().find(|r| r.granularity == g)
    }

    pub fn to_csv(&self) -> String {
        let seeds: Vec<u64> = self.rows.first().map(|r| vec![r.seed]).unwrap_or_default();
        let mut s = comment_block(&self.digest, &seeds, &[OPTIMIZER_NOTE]);
        for r in &self.rows {
            if let Err(e) = &r.test_accuracy {
                let _ = writeln!(s, "# failure: {}: {e}", r.granularity);
            }
        }
        s.push_str(GRANULARITY_HEADER);
        s.push('\n');
        for r in &self.rows {
            let acc = r.test_accuracy.as_ref().map_or("NaN".to_string(), |a| real(*a));
            let _ = writeln!(
                s,
                "{},{},{acc},{}",
                r.granularity, r.learnable_activation_params, r.seed
            );
        }
        s
    }
}

fn gate_bits(model: &Mlp) -> Vec<[u64; gate::N_PARAMS]> {
    model
        .activation_layers()
        .filter_map(|(i, _)| model.gate_params(i))
        .map(|p| p.to_raw().map(f64::to_bits))
        .collect()
}

/// Trains soft-ReLU-initialized networks in fixed, global and layer-wise mode.
pub fn granularity_ablation(
    data: &DataSplit,
    config: &TrainConfig,
    seed: u64,
) -> Result<GranularityTable> {
    config.validate()?;
    let spec = experiment_spec(data);
    let mut canonical = format!(
        "experiment=granularity_ablation;data_sha256={};arch={:?}",
        data_digest(data),
        spec.hidden
    );
    let mut rows = Vec::new();
    for granularity in Granularity::ALL {
        let cfg = TrainConfig {
            seed,
            init_strategy: InitStrategy::SoftRelu,
            granularity,
            ..config.clone()
        };
        let _ = write!(canonical, ";{}", cfg.canonical());
        let init = Mlp::new(&spec, cfg.init_strategy, granularity, seed)?;
        let row = match train(&spec, data, &cfg) {
            Ok(out) => GranularityRow {
                granularity,
                learnable_activation_params: out.model.learnable_activation_params(),
                test_accuracy: Ok(evaluate(&out.model, &data.test, 0.0, seed)?),
                seed,
                gates_unchanged: gate_bits(&out.model) == gate_bits(&init),
            },
            Err(e @ Error::Divergence { .. }) => GranularityRow {
                granularity,
                learnable_activation_params: init.learnable_activation_params(),
                test_accuracy: Err(e.to_string()),
                seed,
                gates_unchanged: true,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(GranularityTable {
        rows,
        digest: config_digest(&canonical),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRow {
    /// Position of the activation layer in the layer list.
    pub layer_index: usize,
    /// Effective `(a, c, p, alpha, beta, gamma, delta)`.
    pub params: [f64; gate::N_PARAMS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub rows: Vec<LayerRow>,
    pub digest: String,
}

impl LayerReport {
    pub fn to_csv(&self) -> String {
        let mut s = comment_block(&self.digest, &[], &[]);
        s.push_str(LAYERS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{}", r.layer_index);
            for v in r.params {
                let _ = write!(s, ",{}", real(v));
            }
            s.push('\n');
        }
        s
    }
}

/// Effective gate parameters of every activation layer, shallowest first.
pub fn layer_evolution_report(model: &Mlp) -> Result<LayerReport> {
    if model.granularity() != Some(Granularity::LayerWise) {
        return Err(Error::Contract(
            "layer evolution needs a network trained with layer_wise gates".into(),
        ));
    }
    let rows = model
        .activation_layers()
        .filter_map(|(i, _)| {
            model.gate_params(i).map(|p| LayerRow {
                layer_index: i,
                params: p.effective(),
            })
        })
        .collect();
    Ok(LayerReport {
        rows,
        digest: config_digest(&format!(
            "experiment=layer_evolution;model_sha256={}",
            hex::encode(Sha256::digest(persist::to_bytes(model)))
        )),
    })
}

pub const CURVE_POINTS: usize = 601;
pub const CURVE_RANGE: (f64, f64) = (-6.0, 6.0);

/// `x` values of the sensitivity curves: `lo + i * step`.
pub fn curve_grid() -> Vec<f64> {
    let step = (CURVE_RANGE.1 - CURVE_RANGE.0) / (CURVE_POINTS - 1) as f64;
    (0..CURVE_POINTS)
        .map(|i| CURVE_RANGE.0 + i as f64 * step)
        .collect()
}

/// One panel: named curves sharing the grid.
#[derive(Debug, Clone)]
pub struct CurveSet {
    pub file: &'static str,
    pub curves: Vec<(String, ArcGateParams)>,
}

fn soft_relu_with(f: impl Fn(&mut [f64; 7])) -> ArcGateParams {
    let mut e = [5.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    f(&mut e);
    ArcGateParams::from_effective(e[0], e[1], e[2], e[3], e[4], e[5], e[6])
        .expect("sweep values are in range")
}

fn saturating_with(f: impl Fn(&mut [f64; 7])) -> ArcGateParams {
    soft_relu_with(|e| {
        e[3] = 0.0;
        e[4] = 1.0;
        f(e);
    })
}

/// Parameter sweeps around the soft-ReLU tuple. The steepness, sharpness and
/// shift panels plot the saturating curve (alpha = 0, beta = 1), i.e. the gate
/// itself; the gamma panel stays in gating mode.
pub fn curve_sets() -> Vec<CurveSet> {
    let a = [0.5, 1.0, 5.0, 20.0]
        .map(|v| (format!("a={}", real(v)), saturating_with(|e| e[0] = v)));
    let p = [0.5, 1.0, 2.0, 8.0]
        .map(|v| (format!("p={}", real(v)), saturating_with(|e| e[2] = v)));
    let c = [-2.0, 0.0, 2.0].map(|v| (format!("c={}", real(v)), saturating_with(|e| e[1] = v)));
    let d = vec![
        ("gating".to_string(), soft_relu_with(|_| {})),
        ("saturating".to_string(), saturating_with(|_| {})),
    ];
    let g = [0.0, 0.05, 0.3]
        .map(|v| (format!("gamma={}", real(v)), soft_relu_with(|e| e[5] = v)));
    vec![
        CurveSet {
            file: "sensitivity_a.csv",
            curves: a.to_vec(),
        },
        CurveSet {
            file: "sensitivity_p.csv",
            curves: p.to_vec(),
        },
        CurveSet {
            file: "sensitivity_c.csv",
            curves: c.to_vec(),
        },
        CurveSet {
            file: "sensitivity_mode.csv",
            curves: d,
        },
        CurveSet {
            file: "sensitivity_gamma.csv",
            curves: g.to_vec(),
        },
    ]
}

/// Wide CSV: `x` then one column per curve.
pub fn curve_csv(set: &CurveSet) -> Result<String> {
    let mut canonical = format!("experiment=sensitivity;file={}", set.file);
    for (name, p) in &set.curves {
        let _ = write!(canonical, ";{name}={}", join_reals(&p.effective()));
    }
    let mut s = comment_block(&config_digest(&canonical), &[], &[]);
    for (name, p) in &set.curves {
        let e = p.effective();
        let parts: Vec<String> = PARAM_NAMES
            .iter()
            .zip(e)
            .map(|(n, v)| format!("{n}={}", real(v)))
            .collect();
        let _ = writeln!(s, "# {name}: {}", parts.join(" "));
    }
    s.push('x');
    for (name, _) in &set.curves {
        let _ = write!(s, ",{name}");
    }
    s.push('\n');
    let grid = curve_grid();
    let columns = set
        .curves
        .iter()
        .map(|(_, p)| gate::eval_f_batch(&grid, p))
        .collect::<Result<Vec<_>>>()?;
    for (i, x) in grid.iter().enumerate() {
        s.push_str(&real(*x));
        for col in &columns {
            let _ = write!(s, ",{}", real(col[i]));
        }
        s.push('\n');
    }
    Ok(s)
}

pub const CLASSICS_FILE: &str = "sensitivity_classics.csv";
pub const CLASSICS_SEED: u64 = 0;

/// Writes the five parameter sweeps and the fitted classics table into
/// `out_dir`, returning the paths in that order.
pub fn sensitivity_curves(out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for set in curve_sets() {
        let path = out_dir.join(set.file);
        std::fs::write(&path, curve_csv(&set)?)?;
        paths.push(path);
    }
    let rows = fit::replicate_classics(DEFAULT_RANGE, DEFAULT_POINTS, DEFAULT_BUDGET, CLASSICS_SEED)?;
    let canonical = format!(
        "experiment=classics;range={};points={DEFAULT_POINTS};budget={DEFAULT_BUDGET}",
        join_reals(&[DEFAULT_RANGE.0, DEFAULT_RANGE.1])
    );
    let text = comment_block(&config_digest(&canonical), &[CLASSICS_SEED], &[])
        + &fit::classics_csv(&rows);
    let path = out_dir.join(CLASSICS_FILE);
    std::fs::write(&path, text)?;
    paths.push(path);
    Ok(paths)
}

/// Activation layers of a ResNet-50-sized network used for the layer-wise
/// parameter overhead figure.
pub const REFERENCE_ACTIVATION_LAYERS: usize = 49;

/// Extra scalars a layer-wise gate adds to a network with `n_layers`
/// activation layers.
///
/// ```
/// use arcgate::experiments::{layer_wise_overhead, REFERENCE_ACTIVATION_LAYERS};
/// assert_eq!(layer_wise_overhead(REFERENCE_ACTIVATION_LAYERS), 343);
/// assert_eq!(layer_wise_overhead(3), 21);
/// ```
pub fn layer_wise_overhead(n_layers: usize) -> usize {
    n_layers * gate::N_PARAMS
}
