use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::{DataSplit, Dataset};
use super::model::{
    softmax_cross_entropy, Granularity, InitStrategy, Mlp, ModelSpec, NOISE_STREAM, SHUFFLE_STREAM,
};
use super::optim::AdamW;
use crate::error::{Error, Result};

/// Rows evaluated per chunk in [`evaluate`].
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub init_strategy: InitStrategy,
    pub granularity: Granularity,
}

impl Default for TrainConfig {
    /// AdamW at learning rate 1e-4 and weight decay 1e-2, soft-ReLU init,
    /// layer-wise parameters.
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-4,
            weight_decay: 1e-2,
            seed: 0,
            init_strategy: InitStrategy::SoftRelu,
            granularity: Granularity::LayerWise,
        }
    }
}

impl TrainConfig {
    /// Settings used by the experiment runners on CPU-sized data: a larger
    /// step size compensates for training from scratch in a handful of epochs.
    pub fn desk_scale() -> Self {
        Self {
            learning_rate: 1e-3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Stable `key=value` rendering, used for report digests.
    pub fn canonical(&self) -> String {
        format!(
            "epochs={};batch_size={};learning_rate={:e};weight_decay={:e};seed={};init={};granularity={}",
            self.epochs,
            self.batch_size,
            self.learning_rate,
            self.weight_decay,
            self.seed,
            self.init_strategy,
            self.granularity
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Mlp,
    pub trace: Vec<EpochStats>,
}

/// Trains a fresh network with mini-batch AdamW on softmax cross-entropy.
///
/// Fully determined by `config.seed`: dense init, gate init and the per-epoch
/// shuffle each draw from their own stream of that seed.
pub fn train(spec: &ModelSpec, data: &DataSplit, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if data.train.input_dim() != spec.input_dim {
        return Err(Error::Shape(format!(
            "data has {} features, model expects {}",
            data.train.input_dim(),
            spec.input_dim
        )));
    }
    let mut model = Mlp::new(spec, config.init_strategy, config.granularity, config.seed)?;
    let mut opt = AdamW::new(config.learning_rate, config.weight_decay)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let n = data.train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = data.train.inputs.select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| data.train.labels[i]).collect();
            let (logits, cache) = model.forward(&batch)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, step, loss });
            }
            loss_sum += loss * chunk.len() as f64;
            correct += logits
                .argmax_rows()
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            let grads = model.backward(&cache, &grad)?;
            model.apply_adamw(&grads, &mut opt)?;
        }
        let test_acc = if data.test.is_empty() {
            f64::NAN
        } else {
            evaluate(&model, &data.test, 0.0, 0)?
        };
        trace.push(EpochStats {
            epoch,
            train_loss: loss_sum / n as f64,
            train_acc: correct as f64 / n as f64,
            test_acc,
        });
    }
    Ok(TrainOutcome { model, trace })
}

/// Classification accuracy on `data`, optionally with i.i.d. Gaussian input
/// noise of standard deviation `noise_sigma` added to the `[0, 1]`-scaled
/// inputs (no clamping). `noise_sigma == 0` never touches the generator.
pub fn evaluate(model: &Mlp, data: &Dataset, noise_sigma: f64, seed: u64) -> Result<f64> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("evaluation set is empty".into()));
    }
    let mut noise = if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        let dist = Normal::new(0.0, noise_sigma).expect("sigma validated");
        Some((rng, dist))
    } else {
        None
    };
    let mut correct = 0usize;
    let mut start = 0;
    while start < data.len() {
        let end = (start + EVAL_CHUNK).min(data.len());
        let mut batch = data.inputs.slice_rows(start, end);
        if let Some((rng, dist)) = noise.as_mut() {
            for v in batch.data_mut() {
                *v += dist.sample(rng);
            }
        }
        let logits = model.predict(&batch)?;
        correct += logits
            .argmax_rows()
            .iter()
            .zip(&data.labels[start..end])
            .filter(|(p, l)| p == l)
            .count();
        start = end;
    }
    Ok(correct as f64 / data.len() as f64)
}
