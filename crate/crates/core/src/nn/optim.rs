//! AdamW with decoupled weight decay.

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for one parameter group.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One AdamW update at step `t >= 1`:
///
/// ```text
/// theta <- theta - lr * wd * theta
/// m <- b1 m + (1 - b1) g,   v <- b2 v + (1 - b2) g^2
/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// ```
pub fn adamw_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut Moments,
    lr: f64,
    wd: f64,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("AdamW step count starts at 1".into()));
    }
    if params.len() != grads.len() || state.m.len() != params.len() || state.v.len() != params.len()
    {
        return Err(Error::Shape(format!(
            "AdamW group: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            group: "adamw".into(),
            index,
            value: grads[index],
        });
    }
    let bc1 = 1.0 - BETA1.powf(t as f64);
    let bc2 = 1.0 - BETA2.powf(t as f64);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *p -= lr * wd * *p;
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + EPSILON);
    }
    Ok(())
}

/// Optimizer state across a fixed sequence of parameter groups.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    t: u64,
    groups: Vec<Moments>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {lr}")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight decay {weight_decay}")));
        }
        Ok(Self {
            lr,
            weight_decay,
            t: 0,
            groups: Vec::new(),
        })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub(crate) fn begin_step(&mut self) {
        self.t += 1;
    }

    /// Updates group `index`; `decay` selects whether weight decay applies.
    pub(crate) fn update(
        &mut self,
        index: usize,
        params: &mut [f64],
        grads: &[f64],
        decay: bool,
    ) -> Result<()> {
        while self.groups.len() <= index {
            self.groups.push(Moments::default());
        }
        let state = &mut self.groups[index];
        if state.m.is_empty() {
            *state = Moments::new(params.len());
        }
        let wd = if decay { self.weight_decay } else { 0.0 };
        adamw_step(params, grads, state, self.lr, wd, self.t.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = Moments::new(3);
        adamw_step(&mut p, &[0.0; 3], &mut s, 0.1, 0.0, 1).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2  ->  step = lr g / (|g| + eps)
        let mut p = vec![0.0];
        let mut s = Moments::new(1);
        adamw_step(&mut p, &[1.0], &mut s, 0.1, 0.0, 1).unwrap();
        let expect = -0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-15, "{}", p[0]);
    }

    #[test]
    fn decay_is_decoupled() {
        let mut p = vec![1.0];
        let mut s = Moments::new(1);
        adamw_step(&mut p, &[0.0], &mut s, 0.1, 0.01, 1).unwrap();
        assert!((p[0] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut p = vec![1.0, 2.0];
        let mut s = Moments::new(2);
        let err = adamw_step(&mut p, &[0.0, f64::NAN], &mut s, 0.1, 0.0, 1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 1, .. }));
        assert_eq!(p, vec![1.0, 2.0]);
        assert!(adamw_step(&mut p, &[0.0, 0.0], &mut s, 0.1, 0.0, 0).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(AdamW::new(0.0, 0.0).is_err());
        assert!(AdamW::new(1e-3, -1.0).is_err());
    }
}
