//! Fixed reference activations used as baselines and fit targets.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Relu,
    LeakyRelu { slope: f64 },
    Sigmoid,
    Tanh,
    Silu,
    Gelu,
    Identity,
}

impl ActivationKind {
    pub fn leaky(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::Domain {
                what: "leaky slope must lie in (0, 1)",
                value: slope,
            });
        }
        Ok(Self::LeakyRelu { slope })
    }

    /// Short lowercase name, used in CSV output and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::LeakyRelu { .. } => "leaky_relu",
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
            Self::Silu => "silu",
            Self::Gelu => "gelu",
            Self::Identity => "identity",
        }
    }

    /// Inputs where the derivative is discontinuous.
    pub fn kinks(&self) -> &'static [f64] {
        match self {
            Self::Relu | Self::LeakyRelu { .. } => &[0.0],
            _ => &[],
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::LeakyRelu { slope } = *self {
            Self::leaky(slope)?;
        }
        Ok(())
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LeakyRelu { slope } => write!(f, "leaky_relu({slope})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Accepts the names from [`ActivationKind::name`]; `leaky` and
    /// `leaky_relu` default to slope 0.01, `leaky_relu(m)` sets it.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "relu" => Self::Relu,
            "leaky" | "leaky_relu" => Self::LeakyRelu { slope: 0.01 },
            "sigmoid" => Self::Sigmoid,
            "tanh" => Self::Tanh,
            "silu" | "swish" => Self::Silu,
            "gelu" => Self::Gelu,
            "identity" => Self::Identity,
            _ => {
                let slope = s
                    .strip_prefix("leaky_relu(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|m| m.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown activation {s:?}")))?;
                Self::leaky(slope)?
            }
        })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Evaluates the activation at `x`.
pub fn act(kind: ActivationKind, x: f64) -> Result<f64> {
    ensure_finite("input must be finite", x)?;
    kind.validate()?;
    Ok(act_unchecked(kind, x))
}

pub(crate) fn act_unchecked(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Relu => x.max(0.0),
        ActivationKind::LeakyRelu { slope } => {
            if x > 0.0 {
                x
            } else {
                slope * x
            }
        }
        ActivationKind::Sigmoid => sigmoid(x),
        ActivationKind::Tanh => x.tanh(),
        ActivationKind::Silu => x * sigmoid(x),
        ActivationKind::Gelu => x * normal_cdf(x),
        ActivationKind::Identity => x,
    }
}

/// First derivative of the activation at `x`. ReLU-type kinks use 0 (ReLU)
/// or the leak slope (leaky ReLU) at exactly zero.
pub fn act_grad(kind: ActivationKind, x: f64) -> Result<f64> {
    ensure_finite("input must be finite", x)?;
    kind.validate()?;
    Ok(act_grad_unchecked(kind, x))
}

pub(crate) fn act_grad_unchecked(kind: ActivationKind, x: f64) -> f64 {
    match kind {
        ActivationKind::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::LeakyRelu { slope } => {
            if x > 0.0 {
                1.0
            } else {
                slope
            }
        }
        ActivationKind::Sigmoid => {
            let s = sigmoid(x);
            s * (1.0 - s)
        }
        ActivationKind::Tanh => {
            let t = x.tanh();
            1.0 - t * t
        }
        ActivationKind::Silu => {
            let s = sigmoid(x);
            s * (1.0 + x * (1.0 - s))
        }
        ActivationKind::Gelu => normal_cdf(x) + x * normal_pdf(x),
        ActivationKind::Identity => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(act(ActivationKind::Relu, -3.0).unwrap(), 0.0);
        assert_eq!(act(ActivationKind::Relu, 3.0).unwrap(), 3.0);
        assert_eq!(act(ActivationKind::Sigmoid, 0.0).unwrap(), 0.5);
        // sigma(1) to 40 digits: 0.73105857863000487925...
        let silu = act(ActivationKind::Silu, 1.0).unwrap();
        assert!((silu - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(act(ActivationKind::Gelu, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_derivatives() {
        assert_eq!(act_grad(ActivationKind::Relu, 2.0).unwrap(), 1.0);
        assert_eq!(act_grad(ActivationKind::Relu, -2.0).unwrap(), 0.0);
        assert_eq!(act_grad(ActivationKind::Relu, 0.0).unwrap(), 0.0);
        assert_eq!(act_grad(ActivationKind::Tanh, 0.0).unwrap(), 1.0);
        let h = 1e-6;
        let g = ActivationKind::Gelu;
        let fd = (act(g, 0.5 + h).unwrap() - act(g, 0.5 - h).unwrap()) / (2.0 * h);
        assert!((act_grad(g, 0.5).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(act(ActivationKind::Relu, f64::NAN).is_err());
        assert!(act_grad(ActivationKind::Tanh, f64::INFINITY).is_err());
        assert!(act(ActivationKind::LeakyRelu { slope: 2.0 }, 1.0).is_err());
        assert!(ActivationKind::leaky(0.0).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!("relu".parse::<ActivationKind>().unwrap(), ActivationKind::Relu);
        assert_eq!(
            "leaky_relu(0.2)".parse::<ActivationKind>().unwrap(),
            ActivationKind::LeakyRelu { slope: 0.2 }
        );
        assert!("softmax".parse::<ActivationKind>().is_err());
        assert!("leaky_relu(3)".parse::<ActivationKind>().is_err());
    }
}
