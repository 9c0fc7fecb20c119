//! `arcgate` command-line driver.

mod config;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arcgate::check::{gate_check, network_check, CheckReport};
use arcgate::experiments::{
    self, desk_data, granularity_ablation, init_ablation, layer_evolution_report, noise_sweep,
    sweep_model, SweepReport, DEFAULT_SIGMAS, MODEL_ARCGATE, MODEL_RELU,
};
use arcgate::fit::{
    classic_targets, fit_csv, fit_with, FitOptions, FitTarget, DEFAULT_BUDGET, DEFAULT_POINTS,
    DEFAULT_RANGE,
};
use arcgate::format::real;
use arcgate::nn::data::write_synthetic_idx;
use arcgate::nn::{persist, train, DataSplit, Dataset, Granularity, InitStrategy, TrainConfig};
use arcgate::{preset, ActivationKind, Preset};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use config::{List, Range, Settings, Sigmas, OUT_ENV};

const AFTER_HELP: &str = "\
Value flags may also be set in the --config file as key=value lines
(key = flag name with underscores, e.g. batch_size=64). Flags override the
file; the file overrides built-in defaults; unknown keys are rejected.
When --out is omitted, output goes to the out_dir key or $ARCGATE_OUT.
Exit status: 0 success, 1 runtime failure, 2 usage error.";

#[derive(Debug, Parser)]
#[command(name = "arcgate", version, about = "Adaptive arctangent gated activations", after_help = AFTER_HELP)]
struct Cli {
    /// Settings file of key=value lines
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check activation and network gradients against finite differences
    Gradcheck(GradcheckArgs),
    /// Fit the activation to a classical function or sampled curve
    Fit(FitArgs),
    /// Train a 256-128-64 classifier on IDX data and save it
    Train(TrainArgs),
    /// Accuracy under additive input noise, for a saved model or a trained pair
    Sweep(SweepArgs),
    /// Initialization or granularity ablation table
    Ablate(AblateArgs),
    /// Per-layer activation parameters of a saved layer-wise model
    Report(ReportArgs),
    /// Line chart of a sensitivity, fit or sweep CSV as SVG
    Plot(PlotArgs),
    /// Write the sensitivity curve tables
    Curves(CurvesArgs),
    /// Write a synthetic glyph dataset as IDX files
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Random activation draws [default: 1000]
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Seed for draws and network weights [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Relative tolerance per partial [default: 1e-5]
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// relu, sigmoid, tanh, silu, gelu, leaky, identity or file:PATH (x,y CSV)
    #[arg(long, value_name = "TARGET")]
    target: Option<String>,
    /// Sample interval for named targets [default: -6 6]
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    range: Option<Vec<f64>>,
    /// Grid points for named targets [default: 1001]
    #[arg(long, value_name = "N")]
    points: Option<usize>,
    /// Adam iterations per restart [default: 5000]
    #[arg(long, value_name = "B")]
    budget: Option<usize>,
    /// Restart seed [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Upper bound on a and p
    #[arg(long, value_name = "C")]
    ceiling: Option<f64>,
    /// Output CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Hyper {
    /// Training epochs [default: 5]
    #[arg(long, value_name = "E")]
    epochs: Option<usize>,
    /// Minibatch size [default: 32]
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// AdamW step size [default: 1e-3]
    #[arg(long, value_name = "LR")]
    learning_rate: Option<f64>,
    /// AdamW decoupled weight decay [default: 1e-2]
    #[arg(long, value_name = "WD")]
    weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training images (IDX)
    #[arg(long, value_name = "PATH")]
    images: Option<PathBuf>,
    /// Training labels (IDX)
    #[arg(long, value_name = "PATH")]
    labels: Option<PathBuf>,
    /// Test images (IDX)
    #[arg(long, value_name = "PATH")]
    test_images: Option<PathBuf>,
    /// Test labels (IDX)
    #[arg(long, value_name = "PATH")]
    test_labels: Option<PathBuf>,
    /// fixed, global_shared or layer_wise [default: layer_wise]
    #[arg(long, value_name = "G")]
    granularity: Option<Granularity>,
    /// soft_relu, identity, random or relu_baseline [default: soft_relu]
    #[arg(long, value_name = "I")]
    init: Option<InitStrategy>,
    /// Seed for weights and shuffling [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[command(flatten)]
    hyper: Hyper,
    /// Per-epoch loss and accuracy CSV
    #[arg(long, value_name = "CSV")]
    trace: Option<PathBuf>,
    /// Output model file
    #[arg(long, value_name = "MODEL")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding a train/test IDX split (MNIST or synthetic file names);
    /// generated glyphs when absent
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Train an ArcGate and a ReLU network per seed, then sweep both
    #[arg(long, conflicts_with_all = ["model", "images", "labels", "label"])]
    full: bool,
    /// Saved model to evaluate
    #[arg(long, value_name = "MODEL")]
    model: Option<PathBuf>,
    /// Comma-separated increasing noise levels [default: 0,0.05,0.1,0.15,0.2,0.3,0.5]
    #[arg(long, value_name = "LIST")]
    sigmas: Option<Sigmas>,
    /// Evaluation images (IDX)
    #[arg(long, value_name = "PATH")]
    images: Option<PathBuf>,
    /// Evaluation labels (IDX)
    #[arg(long, value_name = "PATH")]
    labels: Option<PathBuf>,
    /// Model name in the CSV [default: relu when the model has no gates, else arcgate]
    #[arg(long, value_name = "NAME")]
    label: Option<String>,
    /// Noise seed for a saved model [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Comma-separated training seeds with --full [default: 0,1,2]
    #[arg(long, value_name = "LIST")]
    seeds: Option<List<u64>>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: Hyper,
    /// Output CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ablation {
    Init,
    Granularity,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// Which ablation to run
    #[arg(value_enum)]
    which: Ablation,
    /// Seed for every network [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Granularity for the init ablation [default: layer_wise]
    #[arg(long, value_name = "G")]
    granularity: Option<Granularity>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: Hyper,
    /// Output CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Saved layer-wise model
    #[arg(long, value_name = "MODEL")]
    model: PathBuf,
    /// Output CSV
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Sensitivity,
    Fit,
    Sweep,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Kind of input table
    #[arg(long, value_enum)]
    figure: Figure,
    /// Input CSV
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Output SVG
    #[arg(long, value_name = "SVG")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    /// Directory for the six CSV files
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Training samples [default: 5000]
    #[arg(long, value_name = "N")]
    train: Option<usize>,
    /// Test samples [default: 1000]
    #[arg(long, value_name = "N")]
    test: Option<usize>,
    /// Generator seed [default: 0]
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Directory for the four IDX files
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Fail {
    Usage(&'static str, String),
    Runtime(String),
}

impl From<arcgate::Error> for Fail {
    fn from(e: arcgate::Error) -> Self {
        Fail::Runtime(e.to_string())
    }
}

type Outcome = Result<ExitCode, Fail>;

/// Attaches the subcommand name to settings errors.
trait Usage<T> {
    fn usage(self, sub: &'static str) -> Result<T, Fail>;
}

impl<T> Usage<T> for Result<T, String> {
    fn usage(self, sub: &'static str) -> Result<T, Fail> {
        self.map_err(|m| Fail::Usage(sub, m))
    }
}

fn required<T>(v: Option<T>, sub: &'static str, flag: &str) -> Result<T, Fail> {
    v.ok_or_else(|| Fail::Usage(sub, format!("the following required argument was not provided: --{flag}")))
}

fn out_path(flag: Option<PathBuf>, s: &Settings, sub: &'static str, name: &str) -> Result<PathBuf, Fail> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match s.out_dir().usage(sub)? {
        Some(dir) => Ok(dir.join(name)),
        None => Err(Fail::Usage(sub, format!("--out is required (or set out_dir or ${OUT_ENV})"))),
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Fail> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Fail::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Fail::Runtime(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn train_config(h: &Hyper, s: &Settings, sub: &'static str) -> Result<TrainConfig, Fail> {
    let d = TrainConfig::desk_scale();
    let cfg = TrainConfig {
        epochs: s.pick(h.epochs, "epochs", d.epochs).usage(sub)?,
        batch_size: s.pick(h.batch_size, "batch_size", d.batch_size).usage(sub)?,
        learning_rate: s.pick(h.learning_rate, "learning_rate", d.learning_rate).usage(sub)?,
        weight_decay: s.pick(h.weight_decay, "weight_decay", d.weight_decay).usage(sub)?,
        ..d
    };
    cfg.validate().map_err(|e| Fail::Usage(sub, e.to_string()))?;
    Ok(cfg)
}

fn load_split(args: &DataArgs, s: &Settings, sub: &'static str) -> Result<DataSplit, Fail> {
    let dir: Option<PathBuf> = s.pick_opt(args.data_dir.clone(), "data_dir").usage(sub)?;
    let (data, source) = desk_data(dir.as_deref())?;
    eprintln!("data: {source} ({} train, {} test)", data.train.len(), data.test.len());
    Ok(data)
}

fn gradcheck(a: GradcheckArgs, s: &Settings) -> Outcome {
    const SUB: &str = "gradcheck";
    let samples = s.pick(a.samples, "samples", 1000).usage(SUB)?;
    let seed = s.pick(a.seed, "seed", 0).usage(SUB)?;
    let tol: f64 = s.pick(a.tol, "tol", 1e-5).usage(SUB)?;
    if !(tol > 0.0) {
        return Err(Fail::Usage(SUB, format!("--tol must be > 0, got {tol}")));
    }
    let line = |name: &str, r: &CheckReport| {
        println!(
            "{name}: {} partials, {} failures, worst relative error {:.3e}",
            r.checked, r.failures, r.worst_rel
        )
    };
    let gate = gate_check(samples, seed, tol)?;
    line("activation", &gate);
    let net = network_check(seed, tol)?;
    line("network", &net);
    let worst = gate.worst_rel.max(net.worst_rel);
    let ok = gate.passed() && net.passed();
    println!("worst relative error {worst:.3e}: {}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn fit_target(spec: &str, range: Range, points: usize) -> Result<(FitTarget, Preset), Fail> {
    if let Some(path) = spec.strip_prefix("file:") {
        let target = FitTarget::from_csv(Path::new(path))?;
        return Ok((target, Preset::SoftReluInit));
    }
    let kind = match spec {
        "relu" | "sigmoid" | "tanh" | "silu" | "gelu" | "leaky" | "identity" => spec
            .parse::<ActivationKind>()
            .map_err(|e| Fail::Usage("fit", e.to_string()))?,
        _ => return Err(Fail::Usage("fit", format!("unknown target {spec:?}"))),
    };
    let init = classic_targets()
        .into_iter()
        .find(|(k, _)| *k == kind)
        .map_or(Preset::SoftReluInit, |(_, p)| p);
    let target = FitTarget::from_kind(kind, range.0, range.1, points)?;
    Ok((target, init))
}

fn fit(a: FitArgs, s: &Settings) -> Outcome {
    const SUB: &str = "fit";
    let spec: String = required(s.pick_opt(a.target, "target").usage(SUB)?, SUB, "target")?;
    let range = match a.range {
        Some(v) => {
            let r = format!("{},{}", v[0], v[1]);
            r.parse::<Range>().usage(SUB)?
        }
        None => s.pick(None, "range", Range(DEFAULT_RANGE.0, DEFAULT_RANGE.1)).usage(SUB)?,
    };
    let points = s.pick(a.points, "points", DEFAULT_POINTS).usage(SUB)?;
    let seed = s.pick(a.seed, "seed", 0).usage(SUB)?;
    let opts = FitOptions {
        budget: s.pick(a.budget, "budget", DEFAULT_BUDGET).usage(SUB)?,
        shape_ceiling: s.pick_opt(a.ceiling, "ceiling").usage(SUB)?,
        ..FitOptions::default()
    };
    let out = out_path(a.out, s, SUB, "fit.csv")?;
    let (target, init) = fit_target(&spec, range, points)?;
    let result = fit_with(&target, &preset(init)?, &opts, seed);
    match &result {
        Ok(r) => eprintln!(
            "{}: l_inf {:.3e}, l2 {:.3e}, {} iterations",
            target.label, r.l_inf_error, r.l2_error, r.iterations
        ),
        Err(e) => eprintln!("{}: fit failed: {e}", target.label),
    }
    write_file(&out, fit_csv(&target, &result))?;
    Ok(if result.is_ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn train_cmd(a: TrainArgs, s: &Settings) -> Outcome {
    const SUB: &str = "train";
    let images: PathBuf = required(s.pick_opt(a.images, "images").usage(SUB)?, SUB, "images")?;
    let labels: PathBuf = required(s.pick_opt(a.labels, "labels").usage(SUB)?, SUB, "labels")?;
    let test_images: PathBuf =
        required(s.pick_opt(a.test_images, "test_images").usage(SUB)?, SUB, "test-images")?;
    let test_labels: PathBuf =
        required(s.pick_opt(a.test_labels, "test_labels").usage(SUB)?, SUB, "test-labels")?;
    let config = TrainConfig {
        seed: s.pick(a.seed, "seed", 0).usage(SUB)?,
        init_strategy: s.pick(a.init, "init", InitStrategy::SoftRelu).usage(SUB)?,
        granularity: s.pick(a.granularity, "granularity", Granularity::LayerWise).usage(SUB)?,
        ..train_config(&a.hyper, s, SUB)?
    };
    let out = out_path(a.out, s, SUB, "model.agm")?;
    let data = DataSplit {
        train: Dataset::from_idx(&images, &labels)?,
        test: Dataset::from_idx(&test_images, &test_labels)?,
    };
    let spec = experiments::experiment_spec(&data);
    let outcome = train(&spec, &data, &config)?;
    let mut trace = String::from("epoch,train_loss,train_acc,test_acc\n");
    for e in &outcome.trace {
        eprintln!(
            "epoch {}: loss {:.4}, train acc {:.4}, test acc {:.4}",
            e.epoch, e.train_loss, e.train_acc, e.test_acc
        );
        let _ = writeln!(
            trace,
            "{},{},{},{}",
            e.epoch,
            real(e.train_loss),
            real(e.train_acc),
            real(e.test_acc)
        );
    }
    write_file(&out, persist::to_bytes(&outcome.model))?;
    if let Some(path) = a.trace {
        write_file(&path, trace)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs, s: &Settings) -> Outcome {
    const SUB: &str = "sweep";
    let sigmas = s
        .pick(a.sigmas, "sigmas", Sigmas(DEFAULT_SIGMAS.to_vec()))
        .usage(SUB)?
        .0;
    let out = out_path(a.out, s, SUB, "sweep.csv")?;
    let report = if a.full {
        let config = train_config(&a.hyper, s, SUB)?;
        let seeds = s.pick(a.seeds, "seeds", List(vec![0, 1, 2])).usage(SUB)?.0;
        let data = load_split(&a.data, s, SUB)?;
        let reports = seeds
            .iter()
            .map(|&seed| {
                eprintln!("training seed {seed}");
                noise_sweep(&data, &sigmas, &config, seed)
            })
            .collect::<arcgate::Result<Vec<_>>>()?;
        SweepReport::combine(reports)?
    } else {
        let model_path = required(a.model, SUB, "model")?;
        let images: PathBuf = required(s.pick_opt(a.images, "images").usage(SUB)?, SUB, "images")?;
        let labels: PathBuf = required(s.pick_opt(a.labels, "labels").usage(SUB)?, SUB, "labels")?;
        let seed = s.pick(a.seed, "seed", 0).usage(SUB)?;
        let model = persist::load(&model_path)?;
        let default_label = if model.activation_layers().any(|(i, _)| model.gate_params(i).is_some()) {
            MODEL_ARCGATE
        } else {
            MODEL_RELU
        };
        let label = s.pick(a.label, "label", default_label.to_string()).usage(SUB)?;
        let test = Dataset::from_idx(&images, &labels)?;
        sweep_model(&model, &label, &test, &sigmas, seed)?
    };
    write_file(&out, report.to_csv())?;
    if let Some(f) = &report.failure {
        return Err(Fail::Runtime(format!("sweep incomplete: {f}")));
    }
    Ok(ExitCode::SUCCESS)
}

fn ablate(a: AblateArgs, s: &Settings) -> Outcome {
    const SUB: &str = "ablate";
    let seed = s.pick(a.seed, "seed", 0).usage(SUB)?;
    let config = TrainConfig {
        granularity: s.pick(a.granularity, "granularity", Granularity::LayerWise).usage(SUB)?,
        ..train_config(&a.hyper, s, SUB)?
    };
    let name = match a.which {
        Ablation::Init => "ablation_init.csv",
        Ablation::Granularity => "ablation_granularity.csv",
    };
    let out = out_path(a.out, s, SUB, name)?;
    let data = load_split(&a.data, s, SUB)?;
    let csv = match a.which {
        Ablation::Init => init_ablation(&data, &config, seed)?.to_csv(),
        Ablation::Granularity => granularity_ablation(&data, &config, seed)?.to_csv(),
    };
    write_file(&out, csv)?;
    Ok(ExitCode::SUCCESS)
}

fn report(a: ReportArgs, s: &Settings) -> Outcome {
    let out = out_path(a.out, s, "report", "layers.csv")?;
    let model = persist::load(&a.model)?;
    write_file(&out, layer_evolution_report(&model)?.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn plot_cmd(a: PlotArgs, s: &Settings) -> Outcome {
    let name = a.input.file_stem().map_or("plot".into(), |n| n.to_string_lossy().into_owned());
    let out = out_path(a.out, s, "plot", &format!("{name}.svg"))?;
    let chart = match a.figure {
        Figure::Sensitivity => plot::sensitivity_chart(&a.input),
        Figure::Fit => plot::fit_chart(&a.input),
        Figure::Sweep => plot::sweep_chart(&a.input),
    }
    .map_err(Fail::Runtime)?;
    write_file(&out, chart.to_svg().map_err(Fail::Runtime)?)?;
    Ok(ExitCode::SUCCESS)
}

fn curves(a: CurvesArgs, s: &Settings) -> Outcome {
    let dir = match a.out_dir {
        Some(d) => d,
        None => required(s.out_dir().usage("curves")?, "curves", "out-dir")?,
    };
    for p in experiments::sensitivity_curves(&dir)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs, s: &Settings) -> Outcome {
    const SUB: &str = "synth";
    let dir = match a.out_dir {
        Some(d) => d,
        None => required(s.out_dir().usage(SUB)?, SUB, "out-dir")?,
    };
    let n_train = a.train.unwrap_or(experiments::DESK_TRAIN);
    let n_test = a.test.unwrap_or(experiments::DESK_TEST);
    let seed = s.pick(a.seed, "seed", 0).usage(SUB)?;
    write_synthetic_idx(&dir, n_train, n_test, seed)?;
    eprintln!("wrote {n_train}/{n_test} glyphs to {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Outcome {
    let settings = match &cli.config {
        Some(path) => Settings::load(path).map_err(|m| Fail::Usage("", m))?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Gradcheck(a) => gradcheck(a, &settings),
        Command::Fit(a) => fit(a, &settings),
        Command::Train(a) => train_cmd(a, &settings),
        Command::Sweep(a) => sweep(a, &settings),
        Command::Ablate(a) => ablate(a, &settings),
        Command::Report(a) => report(a, &settings),
        Command::Plot(a) => plot_cmd(a, &settings),
        Command::Curves(a) => curves(a, &settings),
        Command::Synth(a) => synth(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Fail::Usage(sub, msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let err = match cmd.find_subcommand_mut(sub) {
                Some(sc) => sc.error(ErrorKind::ValueValidation, msg),
                None => cmd.error(ErrorKind::ValueValidation, msg),
            };
            err.exit()
        }
        Err(Fail::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
