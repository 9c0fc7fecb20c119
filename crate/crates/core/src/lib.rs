//! Adaptive arctangent gated activations.
//!
//! The crate is organised bottom-up:
//!
//! * [`gate`] evaluates the seven-parameter activation family and its
//!   analytical partial derivatives, and defines the classical presets.
//! * [`zoo`] holds the fixed reference activations (ReLU, sigmoid, GELU, ...).
//! * [`nn`] is a small deterministic multilayer perceptron with AdamW,
//!   IDX ingestion and model persistence.
//! * [`fit`] recovers classical activations inside the family by least squares.
//! * [`experiments`] runs the noise, initialization, granularity and
//!   sensitivity studies and writes their CSV reports.
//! * [`check`] compares analytic gradients against finite differences.

pub mod check;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod format;
pub mod gate;
pub mod nn;
pub mod zoo;

pub use error::{Error, Result};
pub use gate::{
    eval_f, eval_f_batch, eval_u, eval_v, grad, positive_map, positive_map_grad,
    positive_map_inverse, preset, ArcGateParams, GateEval, GateGrad, Preset,
};
pub use zoo::{act, act_grad, ActivationKind};
