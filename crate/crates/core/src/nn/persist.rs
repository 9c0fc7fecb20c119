//! Binary model files.
//!
//! Layout (little-endian): ASCII `AGM1`, u32 layer count, then per layer a u8
//! tag. Dense (`0`): u32 inputs, u32 outputs, `outputs * inputs` f64 weights,
//! `outputs` f64 biases. Activation (`1`): u32 width, u8 granularity
//! (0 fixed, 1 global shared, 2 layer-wise, 3 none), u8 baseline
//! (0 none, 1 relu, 2 leaky relu, 3 sigmoid, 4 tanh, 5 silu, 6 gelu,
//! 7 identity), f64 leak slope, seven f64 raw gate parameters.

use std::fs;
use std::path::Path;

use super::model::{ActivationLayer, ActivationMode, Dense, Gate, Layer, Mlp};
use crate::error::{Error, Result};
use crate::gate::{ArcGateParams, N_PARAMS};
use crate::zoo::ActivationKind;

pub const MAGIC: &[u8; 4] = b"AGM1";

const TAG_DENSE: u8 = 0;
const TAG_ACTIVATION: u8 = 1;

fn baseline_tag(kind: Option<ActivationKind>) -> (u8, f64) {
    match kind {
        None => (0, 0.0),
        Some(ActivationKind::Relu) => (1, 0.0),
        Some(ActivationKind::LeakyRelu { slope }) => (2, slope),
        Some(ActivationKind::Sigmoid) => (3, 0.0),
        Some(ActivationKind::Tanh) => (4, 0.0),
        Some(ActivationKind::Silu) => (5, 0.0),
        Some(ActivationKind::Gelu) => (6, 0.0),
        Some(ActivationKind::Identity) => (7, 0.0),
    }
}

fn baseline_from_tag(tag: u8, slope: f64) -> Result<Option<ActivationKind>> {
    Ok(match tag {
        0 => None,
        1 => Some(ActivationKind::Relu),
        2 => Some(ActivationKind::leaky(slope)?),
        3 => Some(ActivationKind::Sigmoid),
        4 => Some(ActivationKind::Tanh),
        5 => Some(ActivationKind::Silu),
        6 => Some(ActivationKind::Gelu),
        7 => Some(ActivationKind::Identity),
        t => return Err(Error::ModelFormat(format!("unknown baseline tag {t}"))),
    })
}

pub fn to_bytes(model: &Mlp) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    let put_f64s = |out: &mut Vec<u8>, vals: &[f64]| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for (i, layer) in model.layers().iter().enumerate() {
        match layer {
            Layer::Dense(d) => {
                out.push(TAG_DENSE);
                out.extend_from_slice(&(d.inputs as u32).to_le_bytes());
                out.extend_from_slice(&(d.outputs as u32).to_le_bytes());
                put_f64s(&mut out, &d.weights);
                put_f64s(&mut out, &d.bias);
            }
            Layer::Activation(a) => {
                out.push(TAG_ACTIVATION);
                out.extend_from_slice(&(a.width as u32).to_le_bytes());
                let gran = match a.mode {
                    ActivationMode::Gate(Gate::Frozen(_)) => 0u8,
                    ActivationMode::Gate(Gate::Shared) => 1,
                    ActivationMode::Gate(Gate::Owned(_)) => 2,
                    ActivationMode::Baseline(_) => 3,
                };
                out.push(gran);
                let (tag, slope) = baseline_tag(a.baseline());
                out.push(tag);
                out.extend_from_slice(&slope.to_le_bytes());
                let raw = model
                    .gate_params(i)
                    .map_or([0.0; N_PARAMS], |p| p.to_raw());
                put_f64s(&mut out, &raw);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let s = self.bytes.get(self.pos..end).ok_or(Error::Truncated {
            expected: end,
            found: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Mlp> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::ModelFormat(format!(
            "unknown magic {:?}",
            String::from_utf8_lossy(&bytes[..bytes.len().min(4)])
        )));
    }
    let mut r = Reader { bytes, pos: 4 };
    let count = r.u32()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    let mut shared: Option<ArcGateParams> = None;
    for _ in 0..count {
        match r.u8()? {
            TAG_DENSE => {
                let inputs = r.u32()?;
                let outputs = r.u32()?;
                let weights = r.f64s(inputs * outputs)?;
                let bias = r.f64s(outputs)?;
                layers.push(Layer::Dense(Dense {
                    inputs,
                    outputs,
                    weights,
                    bias,
                }));
            }
            TAG_ACTIVATION => {
                let width = r.u32()?;
                let gran = r.u8()?;
                let tag = r.u8()?;
                let slope = r.f64s(1)?[0];
                let raw: [f64; N_PARAMS] = r.f64s(N_PARAMS)?.try_into().expect("seven values");
                let params = ArcGateParams::from_raw(raw);
                let baseline = baseline_from_tag(tag, slope)?;
                let mode = match (gran, baseline) {
                    (3, Some(kind)) => ActivationMode::Baseline(kind),
                    (0, None) => ActivationMode::Gate(Gate::Frozen(params)),
                    (2, None) => ActivationMode::Gate(Gate::Owned(params)),
                    (1, None) => {
                        match shared {
                            None => shared = Some(params),
                            Some(s) if s == params => {}
                            Some(_) => {
                                return Err(Error::ModelFormat(
                                    "shared activation records disagree".into(),
                                ))
                            }
                        }
                        ActivationMode::Gate(Gate::Shared)
                    }
                    _ => {
                        return Err(Error::ModelFormat(format!(
                            "inconsistent activation record (granularity {gran}, baseline {tag})"
                        )))
                    }
                };
                layers.push(Layer::Activation(ActivationLayer { width, mode }));
            }
            t => return Err(Error::ModelFormat(format!("unknown layer tag {t}"))),
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Mlp::from_parts(layers, shared)
}

pub fn save(model: &Mlp, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Mlp> {
    from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{Granularity, InitStrategy, ModelSpec};

    fn spec() -> ModelSpec {
        ModelSpec {
            input_dim: 3,
            hidden: vec![4, 2],
            n_classes: 2,
        }
    }

    #[test]
    fn round_trips_every_mode() {
        for g in Granularity::ALL {
            for init in InitStrategy::ALL {
                let m = Mlp::new(&spec(), init, g, 9).unwrap();
                let back = from_bytes(&to_bytes(&m)).unwrap();
                assert_eq!(back.layers(), m.layers());
                assert_eq!(back.shared(), m.shared());
            }
        }
    }

    #[test]
    fn header_layout() {
        let m = Mlp::new(&spec(), InitStrategy::SoftRelu, Granularity::LayerWise, 1).unwrap();
        let b = to_bytes(&m);
        assert_eq!(&b[..4], b"AGM1");
        assert_eq!(u32::from_le_bytes([b[4], b[5], b[6], b[7]]), 5);
        assert_eq!(b[8], 0);
        // dense(3->4): 4 + 4 + 8*(12 + 4) bytes, then activation tag
        assert_eq!(b[9 + 8 + 8 * 16], 1);
    }

    #[test]
    fn rejects_unknown_magic_and_truncation() {
        let m = Mlp::new(&spec(), InitStrategy::SoftRelu, Granularity::Fixed, 1).unwrap();
        let mut b = to_bytes(&m);
        assert!(from_bytes(&b[..b.len() - 3]).is_err());
        b[3] = b'2';
        assert!(matches!(from_bytes(&b), Err(Error::ModelFormat(_))));
        assert!(from_bytes(b"AG").is_err());
    }
}
