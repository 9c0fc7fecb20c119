//! Finite-difference diagnostics for the activation and network gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gate::{eval_f, grad, ArcGateParams, N_PARAMS};
use crate::nn::{
    softmax_cross_entropy, ActivationMode, Gate, GateSlot, Granularity, InitStrategy, Layer, Mlp,
    ModelSpec, Tensor,
};

/// Below this magnitude an analytic partial is compared in absolute terms.
pub const TINY: f64 = 1e-6;
/// Absolute tolerance applied to tiny partials.
pub const ABS_FLOOR: f64 = 1e-8;

/// Outcome of a gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub failures: usize,
    /// Worst relative error over partials with magnitude at least [`TINY`].
    pub worst_rel: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, analytic: f64, numeric: f64, rel: f64) {
        self.checked += 1;
        let diff = (analytic - numeric).abs();
        if analytic.abs() < TINY {
            if diff >= ABS_FLOOR {
                self.failures += 1;
            }
            return;
        }
        let r = diff / analytic.abs();
        self.worst_rel = self.worst_rel.max(r);
        if r >= rel {
            self.failures += 1;
        }
    }
}

/// Central difference refined by Ridders' extrapolation.
pub fn ridders<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64) -> f64 {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut err = f64::MAX;
    let mut ans = a[0][0];
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    ans
}

fn f_at(x: f64, eff: [f64; N_PARAMS]) -> f64 {
    ArcGateParams::from_effective(eff[0], eff[1], eff[2], eff[3], eff[4], eff[5], eff[6])
        .and_then(|p| eval_f(x, &p))
        .map(|e| e.f)
        .unwrap_or(f64::NAN)
}

/// Compares the input and effective-parameter partials of `samples` random
/// activations against finite differences.
pub fn gate_check(samples: usize, seed: u64, rel: f64) -> Result<CheckReport> {
    if !(rel > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {rel}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport {
        checked: 0,
        failures: 0,
        worst_rel: 0.0,
    };
    for _ in 0..samples {
        let eff = [
            rng.random_range(0.1..50.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.2..5.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ];
        let params =
            ArcGateParams::from_effective(eff[0], eff[1], eff[2], eff[3], eff[4], eff[5], eff[6])?;
        let x = eff[1] + rng.random_range(-10.0..10.0);
        let g = grad(x, &params)?;
        let log_odds = eval_f(x, &params)?.log_odds;
        // steps sized to the transition width 1 / (a p); a and p stay positive
        let scale_x = 0.1 / (eff[0] * eff[2].max(1.0));
        report.record(g.d_x, ridders(|t| f_at(t, eff), x, scale_x), rel);
        for (k, analytic) in g.params().into_iter().enumerate() {
            let h = match k {
                0 => (0.2 * eff[0]).min(scale_x * eff[0] / (x - eff[1]).abs().max(1e-12)),
                1 => scale_x,
                2 => (0.2 * eff[2]).min(0.1 / log_odds.abs().max(1e-12)),
                _ => 0.1 * eff[k].abs().max(1.0),
            };
            let numeric = ridders(
                |t| {
                    let mut e = eff;
                    e[k] = t;
                    f_at(x, e)
                },
                eff[k],
                h,
            );
            report.record(analytic, numeric, rel);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Weight(usize, usize),
    Bias(usize, usize),
    Gate(usize, usize),
    Shared(usize),
}

fn set_raw(p: &mut ArcGateParams, k: usize, value: f64) {
    let mut raw = p.to_raw();
    raw[k] = value;
    *p = ArcGateParams::from_raw(raw);
}

fn with_value(model: &Mlp, slot: Slot, value: f64) -> Result<Mlp> {
    let mut layers = model.layers().to_vec();
    let mut shared = model.shared().copied();
    match slot {
        Slot::Weight(l, k) | Slot::Bias(l, k) => {
            if let Layer::Dense(d) = &mut layers[l] {
                match slot {
                    Slot::Weight(..) => d.weights[k] = value,
                    _ => d.bias[k] = value,
                }
            }
        }
        Slot::Gate(l, k) => {
            if let Layer::Activation(a) = &mut layers[l] {
                if let ActivationMode::Gate(Gate::Owned(p)) = &mut a.mode {
                    set_raw(p, k, value);
                }
            }
        }
        Slot::Shared(k) => {
            if let Some(p) = shared.as_mut() {
                set_raw(p, k, value);
            }
        }
    }
    Mlp::from_parts(layers, shared)
}

fn value_of(model: &Mlp, slot: Slot) -> f64 {
    match slot {
        Slot::Weight(l, k) | Slot::Bias(l, k) => match &model.layers()[l] {
            Layer::Dense(d) => match slot {
                Slot::Weight(..) => d.weights[k],
                _ => d.bias[k],
            },
            _ => f64::NAN,
        },
        Slot::Gate(l, k) => model.gate_params(l).map_or(f64::NAN, |p| p.to_raw()[k]),
        Slot::Shared(k) => model.shared().map_or(f64::NAN, |p| p.to_raw()[k]),
    }
}

fn mean_loss(model: &Mlp, batch: &Tensor, labels: &[usize]) -> f64 {
    model
        .forward(batch)
        .and_then(|(logits, _)| softmax_cross_entropy(&logits, labels))
        .map_or(f64::NAN, |(l, _)| l)
}

/// Initial step of the network differences.
const FD_STEP: f64 = 1e-3;
/// Smallest distance of a ReLU input from its kink in a checked batch.
const KINK_MARGIN: f64 = 0.05;
const BATCH_DRAWS: usize = 1000;

fn kink_distance(model: &Mlp, batch: &Tensor) -> Result<f64> {
    let (_, cache) = model.forward(batch)?;
    let mut margin = f64::INFINITY;
    for (i, layer) in model.activation_layers() {
        if layer.baseline().is_some() {
            if let Some(z) = cache.layer_input(i) {
                margin = z.data().iter().fold(margin, |m, v| m.min(v.abs()));
            }
        }
    }
    Ok(margin)
}

/// A 6x4 batch whose ReLU inputs all sit at least [`KINK_MARGIN`] from zero,
/// so finite differences never straddle a kink; the best of
/// [`BATCH_DRAWS`] draws otherwise.
fn kink_free_batch(model: &Mlp, seed: u64) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Tensor)> = None;
    for _ in 0..BATCH_DRAWS {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let batch = Tensor::from_rows(&rows)?;
        let margin = kink_distance(model, &batch)?;
        if margin >= KINK_MARGIN {
            return Ok(batch);
        }
        if best.as_ref().is_none_or(|(m, _)| margin > *m) {
            best = Some((margin, batch));
        }
    }
    Ok(best.map(|(_, b)| b).expect("at least one draw"))
}

/// Configurations covered by [`network_check`].
pub const NETWORK_CASES: [(Granularity, InitStrategy); 5] = [
    (Granularity::LayerWise, InitStrategy::Random),
    (Granularity::GlobalShared, InitStrategy::Random),
    (Granularity::LayerWise, InitStrategy::SoftRelu),
    (Granularity::Fixed, InitStrategy::SoftRelu),
    (Granularity::LayerWise, InitStrategy::ReluBaseline),
];

/// Compares every dense and raw gate partial of the mean cross-entropy of
/// small 4-8-8-3 networks against finite differences.
pub fn network_check(seed: u64, rel: f64) -> Result<CheckReport> {
    if !(rel > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {rel}")));
    }
    let spec = ModelSpec {
        input_dim: 4,
        hidden: vec![8, 8],
        n_classes: 3,
    };
    let labels = [0, 1, 2, 1, 0, 2];
    let mut report = CheckReport {
        checked: 0,
        failures: 0,
        worst_rel: 0.0,
    };
    for (granularity, init) in NETWORK_CASES {
        let model = Mlp::new(&spec, init, granularity, seed)?;
        let batch = kink_free_batch(&model, seed)?;
        let (logits, cache) = model.forward(&batch)?;
        let (_, grad_logits) = softmax_cross_entropy(&logits, &labels)?;
        let grads = model.backward(&cache, &grad_logits)?;

        let mut checks: Vec<(Slot, f64)> = Vec::new();
        let dense = model
            .layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Dense(_)))
            .map(|(i, _)| i);
        for (g, l) in grads.dense.iter().zip(dense) {
            checks.extend(g.weights.iter().enumerate().map(|(k, &v)| (Slot::Weight(l, k), v)));
            checks.extend(g.bias.iter().enumerate().map(|(k, &v)| (Slot::Bias(l, k), v)));
        }
        for slot in &grads.gates {
            for k in 0..N_PARAMS {
                let s = match slot.slot {
                    GateSlot::Layer(l) => Slot::Gate(l, k),
                    GateSlot::Shared => Slot::Shared(k),
                };
                checks.push((s, slot.raw[k]));
            }
        }
        for (slot, analytic) in checks {
            let numeric = ridders(
                |v| with_value(&model, slot, v).map_or(f64::NAN, |m| mean_loss(&m, &batch, &labels)),
                value_of(&model, slot),
                FD_STEP,
            );
            report.record(analytic, numeric, rel);
        }
    }
    Ok(report)
}
