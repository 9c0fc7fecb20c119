use std::path::PathBuf;

use arcgate::experiments::{
    curve_grid, desk_data, granularity_ablation, init_ablation, layer_evolution_report,
    noise_sweep, noise_sweep_with_models, sensitivity_curves, SweepReport, CURVE_POINTS,
    GRANULARITY_HEADER, INIT_HEADER, LAYERS_HEADER, MODEL_ARCGATE, MODEL_RELU, SWEEP_HEADER,
};
use arcgate::nn::data::synthetic_split;
use arcgate::nn::{evaluate, DataSplit, Granularity, InitStrategy, TrainConfig};

fn small_data() -> DataSplit {
    synthetic_split(400, 200, 3)
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        ..TrainConfig::desk_scale()
    }
}

fn mnist_dir() -> Option<PathBuf> {
    std::env::var_os("ARCGATE_MNIST_DIR").map(PathBuf::from).or_else(|| {
        let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
        p.canonicalize().ok().filter(|p| p.is_dir())
    })
}

/// Data rows of a CSV, skipping `#` comments.
fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn sweep_structure_and_clean_rows() {
    let data = small_data();
    let sigmas = [0.0, 0.1, 0.3];
    let (report, models) = noise_sweep_with_models(&data, &sigmas, &quick_config(), 5).unwrap();
    assert_eq!(report.rows.len(), 6);
    for (label, model) in [(MODEL_ARCGATE, &models.arcgate), (MODEL_RELU, &models.relu)] {
        let clean = evaluate(model.as_ref().unwrap(), &data.test, 0.0, 123).unwrap();
        assert_eq!(report.accuracy(label, 0.0, 5), Some(clean));
        let mine: Vec<f64> = report.rows.iter().filter(|r| r.model == label).map(|r| r.sigma).collect();
        assert_eq!(mine, sigmas);
    }
    assert!(report.rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
    let csv = report.to_csv();
    let rows = body(&csv);
    assert_eq!(rows[0], SWEEP_HEADER);
    assert_eq!(rows.len(), 7);
    assert!(csv.contains(&format!("# config_sha256: {}", report.digest)));
    assert!(csv.contains("# seeds: 5"));
    assert!(csv.contains("not re-clamped"));
    assert_eq!(report.gains().len(), 3);
}

#[test]
fn sweep_rejects_unsorted_sigmas() {
    assert!(noise_sweep(&small_data(), &[0.2, 0.1], &quick_config(), 0).is_err());
}

#[test]
fn sweeps_are_byte_identical_on_rerun() {
    let data = small_data();
    let run = || {
        let reports = (0..2)
            .map(|s| noise_sweep(&data, &[0.0, 0.2], &quick_config(), s).unwrap())
            .collect();
        SweepReport::combine(reports).unwrap().to_csv()
    };
    assert_eq!(run(), run());
}

#[test]
fn granularity_counts_come_from_the_network() {
    let table = granularity_ablation(&small_data(), &quick_config(), 1).unwrap();
    let counts: Vec<(Granularity, usize)> = table
        .rows
        .iter()
        .map(|r| (r.granularity, r.learnable_activation_params))
        .collect();
    assert_eq!(
        counts,
        [
            (Granularity::Fixed, 0),
            (Granularity::GlobalShared, 7),
            (Granularity::LayerWise, 21)
        ]
    );
    assert!(table.row(Granularity::Fixed).unwrap().gates_unchanged);
    assert!(!table.row(Granularity::LayerWise).unwrap().gates_unchanged);
    assert_eq!(body(&table.to_csv())[0], GRANULARITY_HEADER);
}

#[test]
fn init_ablation_on_desk_data() {
    let (data, _) = desk_data(mnist_dir().as_deref()).unwrap();
    let table = init_ablation(&data, &TrainConfig::desk_scale(), 0).unwrap();
    let labels: Vec<String> = table.rows.iter().map(|r| r.strategy.to_string()).collect();
    assert_eq!(labels, ["relu_baseline", "identity", "random", "soft_relu"]);
    let chance = 1.0 / data.n_classes() as f64;
    for r in &table.rows {
        let acc = r.test_accuracy.clone().unwrap();
        assert!(acc > 2.0 * chance, "{}: {acc}", r.strategy);
    }
    assert!(table.accuracy(InitStrategy::SoftRelu) >= table.accuracy(InitStrategy::Random));
    let csv = table.to_csv();
    assert_eq!(body(&csv)[0], INIT_HEADER);
    assert!(body(&csv)[1..].iter().all(|l| l.ends_with(",5,0")));
}

#[test]
fn layer_report_follows_depth() {
    let data = small_data();
    let (_, models) = noise_sweep_with_models(&data, &[0.0], &quick_config(), 2).unwrap();
    let report = layer_evolution_report(models.arcgate.as_ref().unwrap()).unwrap();
    let idx: Vec<usize> = report.rows.iter().map(|r| r.layer_index).collect();
    assert_eq!(idx, [1, 3, 5]);
    assert!(report.rows.iter().any(|r| r.params != [5.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]));
    assert!(layer_evolution_report(models.relu.as_ref().unwrap()).is_err());
    let csv = report.to_csv();
    assert_eq!(body(&csv)[0], LAYERS_HEADER);
    assert_eq!(body(&csv).len(), 4);
}

fn read_columns(path: &std::path::Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let rows = body(&text);
    let header: Vec<String> = rows[0].split(',').map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in &rows[1..] {
        for (c, v) in cols.iter_mut().zip(line.split(',')) {
            c.push(v.parse::<f64>().unwrap());
        }
    }
    (header, cols)
}

#[test]
fn sensitivity_curves_have_their_shape_properties() {
    let dir = tempfile::tempdir().unwrap();
    let paths = sensitivity_curves(dir.path()).unwrap();
    assert_eq!(paths.len(), 6);
    for p in &paths[..5] {
        let (_, cols) = read_columns(p);
        assert_eq!(cols[0].len(), CURVE_POINTS);
        assert_eq!(cols[0], curve_grid());
    }

    // shift panel: c = 2 is c = 0 moved right by 100 grid steps of 0.02
    let (header, cols) = read_columns(&paths[2]);
    assert_eq!(header, ["x", "c=-2", "c=0", "c=2"]);
    for i in 100..CURVE_POINTS {
        assert!((cols[3][i] - cols[2][i - 100]).abs() <= 1e-12, "i={i}");
    }

    let (header, cols) = read_columns(&paths[3]);
    assert_eq!(header[2], "saturating");
    assert!(cols[2].iter().all(|&v| v > 0.0 && v < 1.0));

    // steeper transition, steeper curve at x = c = 0
    let (_, cols) = read_columns(&paths[0]);
    let mid = CURVE_POINTS / 2;
    let slopes: Vec<f64> = cols[1..]
        .iter()
        .map(|c| (c[mid + 1] - c[mid - 1]) / (cols[0][mid + 1] - cols[0][mid - 1]))
        .collect();
    assert!(slopes.windows(2).all(|w| w[1] > w[0]), "{slopes:?}");

    let classics = std::fs::read_to_string(&paths[5]).unwrap();
    assert_eq!(body(&classics).len(), 8);

    let again = tempfile::tempdir().unwrap();
    for (a, b) in paths.iter().zip(sensitivity_curves(again.path()).unwrap()) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
