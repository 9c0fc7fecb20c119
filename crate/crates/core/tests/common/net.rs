//! Full-loss finite-difference checks on small networks.

use arcgate::nn::{
    softmax_cross_entropy, ActivationMode, Gate, GateSlot, Granularity, InitStrategy, Layer, Mlp,
    ModelSpec, Tensor,
};
use arcgate::ArcGateParams;

use super::ridders;

#[derive(Debug, Clone, Copy)]
pub enum Param {
    Weight(usize, usize),
    Bias(usize, usize),
    Gate(usize, usize),
    Shared(usize),
}

pub fn with_param(model: &Mlp, param: Param, value: f64) -> Mlp {
    let mut layers = model.layers().to_vec();
    let mut shared = model.shared().copied();
    let set_raw = |p: &mut ArcGateParams, k: usize| {
        let mut raw = p.to_raw();
        raw[k] = value;
        *p = ArcGateParams::from_raw(raw);
    };
    match param {
        Param::Weight(l, k) | Param::Bias(l, k) => {
            let Layer::Dense(d) = &mut layers[l] else { unreachable!() };
            if matches!(param, Param::Weight(..)) {
                d.weights[k] = value;
            } else {
                d.bias[k] = value;
            }
        }
        Param::Gate(l, k) => {
            let Layer::Activation(a) = &mut layers[l] else { unreachable!() };
            let ActivationMode::Gate(Gate::Owned(p)) = &mut a.mode else { unreachable!() };
            set_raw(p, k);
        }
        Param::Shared(k) => set_raw(shared.as_mut().unwrap(), k),
    }
    Mlp::from_parts(layers, shared).unwrap()
}

pub fn get_param(model: &Mlp, param: Param) -> f64 {
    match param {
        Param::Weight(l, k) | Param::Bias(l, k) => {
            let Layer::Dense(d) = &model.layers()[l] else { unreachable!() };
            if matches!(param, Param::Weight(..)) {
                d.weights[k]
            } else {
                d.bias[k]
            }
        }
        Param::Gate(l, k) => model.gate_params(l).unwrap().to_raw()[k],
        Param::Shared(k) => model.shared().unwrap().to_raw()[k],
    }
}

pub fn loss(model: &Mlp, batch: &Tensor, labels: &[usize]) -> f64 {
    let (logits, _) = model.forward(batch).unwrap();
    softmax_cross_entropy(&logits, labels).unwrap().0
}

pub fn fixture_batch() -> (Tensor, Vec<usize>) {
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..4).map(|j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0).collect())
        .collect();
    (Tensor::from_rows(&rows).unwrap(), vec![0, 1, 2, 1, 0, 2])
}

/// Checks every dense and raw gate partial of the mean cross-entropy on a
/// 4-8-8-3 network against Ridders differences. Returns the number of
/// partials checked and the worst relative error; panics on a mismatch
/// beyond relative `rel` (absolute 1e-9 floor).
pub fn check_gradients(granularity: Granularity, init: InitStrategy, rel: f64) -> (usize, f64) {
    let spec = ModelSpec {
        input_dim: 4,
        hidden: vec![8, 8],
        n_classes: 3,
    };
    let model = Mlp::new(&spec, init, granularity, 11).unwrap();
    let (batch, labels) = fixture_batch();
    let (logits, cache) = model.forward(&batch).unwrap();
    let (_, grad_logits) = softmax_cross_entropy(&logits, &labels).unwrap();
    let grads = model.backward(&cache, &grad_logits).unwrap();

    let mut checks: Vec<(Param, f64)> = Vec::new();
    let dense_layers: Vec<usize> = model
        .layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Layer::Dense(_)))
        .map(|(i, _)| i)
        .collect();
    for (g, &l) in grads.dense.iter().zip(&dense_layers) {
        for (k, &v) in g.weights.iter().enumerate() {
            checks.push((Param::Weight(l, k), v));
        }
        for (k, &v) in g.bias.iter().enumerate() {
            checks.push((Param::Bias(l, k), v));
        }
    }
    for slot in &grads.gates {
        for k in 0..7 {
            let p = match slot.slot {
                GateSlot::Layer(l) => Param::Gate(l, k),
                GateSlot::Shared => Param::Shared(k),
            };
            checks.push((p, slot.raw[k]));
        }
    }
    let expected_gate_slots = match (init, granularity) {
        (InitStrategy::ReluBaseline, _) | (_, Granularity::Fixed) => 0,
        (_, Granularity::GlobalShared) => 1,
        (_, Granularity::LayerWise) => 2,
    };
    assert_eq!(grads.gates.len(), expected_gate_slots);

    let n = checks.len();
    let mut worst: f64 = 0.0;
    for (param, analytic) in checks {
        let x0 = get_param(&model, param);
        let (numeric, _) = ridders(
            |v| loss(&with_param(&model, param, v), &batch, &labels),
            x0,
            0.01,
        );
        let diff = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-6 {
            worst = worst.max(diff / scale);
        }
        assert!(
            diff <= rel * scale || diff <= 1e-9,
            "{granularity} {init} {param:?}: analytic {analytic} numeric {numeric}"
        );
    }
    (n, worst)
}


/// Granularity and initialization pairs covered by the gradient check.
pub const GRADIENT_CASES: [(Granularity, InitStrategy); 5] = [
    (Granularity::LayerWise, InitStrategy::Random),
    (Granularity::GlobalShared, InitStrategy::Random),
    (Granularity::LayerWise, InitStrategy::SoftRelu),
    (Granularity::Fixed, InitStrategy::SoftRelu),
    (Granularity::LayerWise, InitStrategy::ReluBaseline),
];
