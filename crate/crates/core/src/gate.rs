//! The arctangent gated activation family.
//!
//! Three stages compose the activation:
//!
//! ```text
//! u(x) = 1/2 + atan(a (x - c)) / pi            monotonic transition in (0, 1)
//! v(x) = (2/pi) atan( (u / (1 - u))^p )        odds-stretched gate in (0, 1)
//! F(x) = (alpha x + beta) v(x) + (gamma x + delta)
//! ```
//!
//! The exponent `p` acts on the odds ratio inside the outer arctangent. All
//! intermediate quantities are computed without forming `1 - u` or `1 - v`
//! by subtraction, and the odds power is evaluated in the log domain so that
//! inputs of any finite magnitude produce bounded, finite gates.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI};

use crate::error::{ensure_finite, Error, Result};

/// Lower bound applied after the softplus map of `a_raw` and `p_raw`.
pub const POSITIVE_FLOOR: f64 = 1e-6;

/// Largest `f64` strictly below one.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Number of learnable scalars in one activation parameter set.
pub const N_PARAMS: usize = 7;

/// Names of the seven parameters in storage order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["a", "c", "p", "alpha", "beta", "gamma", "delta"];

fn softplus(r: f64) -> f64 {
    if r > 0.0 {
        r + (-r).exp().ln_1p()
    } else {
        r.exp().ln_1p()
    }
}

fn logistic(r: f64) -> f64 {
    if r >= 0.0 {
        1.0 / (1.0 + (-r).exp())
    } else {
        let e = r.exp();
        e / (1.0 + e)
    }
}

/// Maps an unconstrained raw value onto a strictly positive effective value.
pub fn positive_map(raw: f64) -> f64 {
    softplus(raw).max(POSITIVE_FLOOR)
}

/// Derivative of [`positive_map`] with respect to its raw argument.
///
/// Zero on the floor plateau.
pub fn positive_map_grad(raw: f64) -> f64 {
    if softplus(raw) > POSITIVE_FLOOR {
        logistic(raw)
    } else {
        0.0
    }
}

/// Inverse of [`positive_map`] on `[POSITIVE_FLOOR, inf)`.
///
/// The returned raw value is nudged by a few ulps when that makes the forward
/// map reproduce `effective` exactly.
pub fn positive_map_inverse(effective: f64) -> Result<f64> {
    ensure_finite("positive parameter must be finite", effective)?;
    if effective < POSITIVE_FLOOR {
        return Err(Error::Domain {
            what: "positive parameter below floor",
            value: effective,
        });
    }
    let raw = if effective > 30.0 {
        effective + (-(-effective).exp_m1()).ln()
    } else {
        effective.exp_m1().ln()
    };
    if positive_map(raw) == effective {
        return Ok(raw);
    }
    let mut best = raw;
    let mut best_err = (positive_map(raw) - effective).abs();
    let (mut up, mut down) = (raw, raw);
    for _ in 0..16 {
        up = next_up(up);
        down = next_down(down);
        for cand in [up, down] {
            let err = (positive_map(cand) - effective).abs();
            if err < best_err {
                best = cand;
                best_err = err;
            }
        }
        if best_err == 0.0 {
            break;
        }
    }
    Ok(best)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// The seven-parameter activation shape.
///
/// `a` and `p` are stored unconstrained (`a_raw`, `p_raw`) and exposed through
/// [`positive_map`]; the remaining five parameters are stored as-is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcGateParams {
    pub a_raw: f64,
    pub c: f64,
    pub p_raw: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ArcGateParams {
    /// Builds a parameter set from effective (positive) `a` and `p`.
    pub fn from_effective(
        a: f64,
        c: f64,
        p: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    ) -> Result<Self> {
        for (what, v) in [
            ("c must be finite", c),
            ("alpha must be finite", alpha),
            ("beta must be finite", beta),
            ("gamma must be finite", gamma),
            ("delta must be finite", delta),
        ] {
            ensure_finite(what, v)?;
        }
        Ok(Self {
            a_raw: positive_map_inverse(a)?,
            c,
            p_raw: positive_map_inverse(p)?,
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    /// Raw storage vector `[a_raw, c, p_raw, alpha, beta, gamma, delta]`.
    pub fn to_raw(&self) -> [f64; N_PARAMS] {
        [
            self.a_raw, self.c, self.p_raw, self.alpha, self.beta, self.gamma, self.delta,
        ]
    }

    pub fn from_raw(raw: [f64; N_PARAMS]) -> Self {
        Self {
            a_raw: raw[0],
            c: raw[1],
            p_raw: raw[2],
            alpha: raw[3],
            beta: raw[4],
            gamma: raw[5],
            delta: raw[6],
        }
    }

    /// Effective steepness.
    pub fn a(&self) -> f64 {
        positive_map(self.a_raw)
    }

    /// Effective sharpness.
    pub fn p(&self) -> f64 {
        positive_map(self.p_raw)
    }

    /// Effective vector `[a, c, p, alpha, beta, gamma, delta]`.
    pub fn effective(&self) -> [f64; N_PARAMS] {
        [
            self.a(),
            self.c,
            self.p(),
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
        ]
    }

    /// Chain factors `d effective / d raw` for each storage slot.
    pub fn raw_chain(&self) -> [f64; N_PARAMS] {
        [
            positive_map_grad(self.a_raw),
            1.0,
            positive_map_grad(self.p_raw),
            1.0,
            1.0,
            1.0,
            1.0,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_raw().iter().all(|v| v.is_finite())
    }

    pub(crate) fn resolve(&self) -> Result<Resolved> {
        if !self.is_finite() {
            return Err(Error::Domain {
                what: "non-finite activation parameter",
                value: self.to_raw().into_iter().find(|v| !v.is_finite()).unwrap_or(f64::NAN),
            });
        }
        Ok(Resolved {
            a: self.a(),
            c: self.c,
            p: self.p(),
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
        })
    }
}

/// Effective parameters with `a` and `p` already mapped.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Resolved {
    pub a: f64,
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Intermediate values of one activation evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateEval {
    pub u: f64,
    pub v: f64,
    pub f: f64,
    /// `ln(u / (1 - u))`.
    pub log_odds: f64,
}

/// Activation value together with its partial derivatives with respect to the
/// input and the seven effective parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateGrad {
    pub f: f64,
    pub d_x: f64,
    pub d_a: f64,
    pub d_c: f64,
    pub d_p: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_gamma: f64,
    pub d_delta: f64,
}

impl GateGrad {
    /// Parameter partials in storage order `[a, c, p, alpha, beta, gamma, delta]`.
    pub fn params(&self) -> [f64; N_PARAMS] {
        [
            self.d_a,
            self.d_c,
            self.d_p,
            self.d_alpha,
            self.d_beta,
            self.d_gamma,
            self.d_delta,
        ]
    }
}

/// Transition and gate values for a pre-scaled argument `z = a (x - c)`.
#[derive(Debug, Clone, Copy)]
struct Stages {
    u: f64,
    one_minus_u: f64,
    log_odds: f64,
    t: f64,
    v: f64,
}

fn clamp_open(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, ONE_BELOW)
}

/// `(u, 1 - u, log(u / (1 - u)))` for `u = 1/2 + atan(z)/pi`, each side
/// computed directly.
fn transition(z: f64) -> (f64, f64, f64) {
    if z > 1.0 {
        // pi/2 - atan(z) = atan(1/z)
        let omu = (1.0 / z).atan() * FRAC_1_PI;
        (1.0 - omu, omu, (1.0 - omu).ln() - omu.ln())
    } else if z < -1.0 {
        let u = (-1.0 / z).atan() * FRAC_1_PI;
        (u, 1.0 - u, u.ln() - (1.0 - u).ln())
    } else {
        let s = z.atan() * FRAC_1_PI;
        let u = 0.5 + s;
        let omu = 0.5 - s;
        // u/omu - 1 = 2s/omu
        (u, omu, (2.0 * s / omu).ln_1p())
    }
}

fn stages(z: f64, p: f64) -> Stages {
    let (u, one_minus_u, log_odds) = transition(z);
    let t = p * log_odds;
    // v = (2/pi) atan(e^t); for t > 0 go through 1 - v = (2/pi) atan(e^-t).
    let v = if t > 0.0 {
        1.0 - (-t).exp().atan() * FRAC_2_PI
    } else {
        t.exp().atan() * FRAC_2_PI
    };
    Stages {
        u: clamp_open(u),
        one_minus_u,
        log_odds,
        t,
        v: clamp_open(v),
    }
}

/// `d log_odds / d z`.
fn log_odds_slope(z: f64, u: f64, one_minus_u: f64) -> f64 {
    let denom = std::f64::consts::PI * u * one_minus_u;
    if z.abs() > 1.0 {
        let w = 1.0 / z;
        w * w / ((1.0 + w * w) * denom)
    } else {
        1.0 / ((1.0 + z * z) * denom)
    }
}

fn sech(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

fn check_input(x: f64) -> Result<()> {
    ensure_finite("input must be finite", x)
}

fn scaled(x: f64, a: f64, c: f64) -> Result<f64> {
    let z = a * (x - c);
    ensure_finite("a (x - c) overflows", z)?;
    Ok(z)
}

/// Monotonic transition `1/2 + atan(a (x - c)) / pi`.
pub fn eval_u(x: f64, a: f64, c: f64) -> Result<f64> {
    check_input(x)?;
    ensure_finite("c must be finite", c)?;
    ensure_finite("a must be finite", a)?;
    if a <= 0.0 {
        return Err(Error::Domain {
            what: "steepness a must be positive",
            value: a,
        });
    }
    Ok(clamp_open(transition(scaled(x, a, c)?).0))
}

/// Gate value `v(x)` in `(0, 1)`.
pub fn eval_v(x: f64, params: &ArcGateParams) -> Result<f64> {
    check_input(x)?;
    let r = params.resolve()?;
    Ok(stages(scaled(x, r.a, r.c)?, r.p).v)
}

/// Full evaluation of the activation and its intermediate stages.
pub fn eval_f(x: f64, params: &ArcGateParams) -> Result<GateEval> {
    check_input(x)?;
    eval_resolved(x, &params.resolve()?)
}

pub(crate) fn eval_resolved(x: f64, r: &Resolved) -> Result<GateEval> {
    let s = stages(scaled(x, r.a, r.c)?, r.p);
    let f = (r.alpha * x + r.beta) * s.v + (r.gamma * x + r.delta);
    ensure_finite("activation output overflows", f)?;
    Ok(GateEval {
        u: s.u,
        v: s.v,
        f,
        log_odds: s.log_odds,
    })
}

/// Elementwise activation values; bit-identical to calling [`eval_f`] per point.
pub fn eval_f_batch(xs: &[f64], params: &ArcGateParams) -> Result<Vec<f64>> {
    let mut out = vec![0.0; xs.len()];
    eval_f_batch_into(xs, params, &mut out)?;
    Ok(out)
}

/// Like [`eval_f_batch`] but writes into a caller-provided buffer.
pub fn eval_f_batch_into(xs: &[f64], params: &ArcGateParams, out: &mut [f64]) -> Result<()> {
    if xs.len() != out.len() {
        return Err(Error::Shape(format!(
            "batch of {} inputs into buffer of {}",
            xs.len(),
            out.len()
        )));
    }
    let r = params.resolve()?;
    for (index, (&x, o)) in xs.iter().zip(out.iter_mut()).enumerate() {
        let at = |e: Error| Error::DomainAt {
            index,
            source: Box::new(e),
        };
        check_input(x).map_err(at)?;
        *o = eval_resolved(x, &r).map_err(at)?.f;
    }
    Ok(())
}

/// Activation value and all analytical partial derivatives at `x`.
///
/// Parameter partials are taken with respect to the effective parameters;
/// multiply by [`ArcGateParams::raw_chain`] to obtain raw-storage gradients.
pub fn grad(x: f64, params: &ArcGateParams) -> Result<GateGrad> {
    check_input(x)?;
    grad_resolved(x, &params.resolve()?)
}

pub(crate) fn grad_resolved(x: f64, r: &Resolved) -> Result<GateGrad> {
    let z = scaled(x, r.a, r.c)?;
    let s = stages(z, r.p);
    let gain = r.alpha * x + r.beta;
    let f = gain * s.v + (r.gamma * x + r.delta);
    ensure_finite("activation output overflows", f)?;

    let dv_dt = sech(s.t) * FRAC_1_PI;
    let dv_dz = dv_dt * r.p * log_odds_slope(z, s.u, s.one_minus_u);
    let dv_dp = dv_dt * s.log_odds;
    let g = GateGrad {
        f,
        d_x: r.alpha * s.v + gain * dv_dz * r.a + r.gamma,
        d_a: gain * dv_dz * (x - r.c),
        d_c: -gain * dv_dz * r.a,
        d_p: gain * dv_dp,
        d_alpha: x * s.v,
        d_beta: s.v,
        d_gamma: x,
        d_delta: 1.0,
    };
    Ok(g)
}

/// Named parameter configurations covering the classical special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `(5, 0, 1, 1, 0, 0, 0)`, the default initialization.
    SoftReluInit,
    /// `gamma = 1`, everything else inert.
    Identity,
    /// Gating mode with `a = p = scale`; approaches ReLU as `scale` grows.
    ReluLike { scale: f64 },
    /// Saturating mode approximating the logistic sigmoid.
    SigmoidLike,
    /// Saturating mode rescaled onto `(-1, 1)`.
    TanhLike,
    /// Gating mode plus a linear leak of `slope` on the negative side.
    Leaky { slope: f64 },
}

/// Steepness used by the saturating presets.
pub const SIGMOID_LIKE_STEEPNESS: f64 = 1.0;

/// Gate sharpness used by [`Preset::Leaky`].
pub const LEAKY_SCALE: f64 = 5.0;

impl Preset {
    pub fn params(self) -> Result<ArcGateParams> {
        preset(self)
    }
}

pub fn preset(kind: Preset) -> Result<ArcGateParams> {
    match kind {
        Preset::SoftReluInit => ArcGateParams::from_effective(5.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0),
        Preset::Identity => ArcGateParams::from_effective(5.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0),
        Preset::ReluLike { scale } => {
            if !(scale >= 1.0) || !scale.is_finite() {
                return Err(Error::Domain {
                    what: "relu_like scale must be finite and >= 1",
                    value: scale,
                });
            }
            ArcGateParams::from_effective(scale, 0.0, scale, 1.0, 0.0, 0.0, 0.0)
        }
        Preset::SigmoidLike => {
            ArcGateParams::from_effective(SIGMOID_LIKE_STEEPNESS, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0)
        }
        Preset::TanhLike => {
            ArcGateParams::from_effective(SIGMOID_LIKE_STEEPNESS, 0.0, 1.0, 0.0, 2.0, 0.0, -1.0)
        }
        Preset::Leaky { slope } => {
            if !(slope > 0.0 && slope < 1.0) {
                return Err(Error::Domain {
                    what: "leaky slope must lie in (0, 1)",
                    value: slope,
                });
            }
            // alpha = 1 - m keeps the positive branch at unit slope.
            ArcGateParams::from_effective(
                LEAKY_SCALE,
                0.0,
                LEAKY_SCALE,
                1.0 - slope,
                0.0,
                slope,
                0.0,
            )
        }
    }
}

/// Evaluators that accept signed steepness and sharpness.
///
/// The learnable path never produces non-positive `a` or `p`; these exist to
/// check the reflection identities `u(-a) = 1 - u(a)` and `v(-p) = 1 - v(p)`.
#[doc(hidden)]
pub mod extended {
    use super::{stages, transition};

    pub fn eval_u_signed(x: f64, a: f64, c: f64) -> f64 {
        transition(a * (x - c)).0
    }

    pub fn eval_v_signed(x: f64, a: f64, c: f64, p: f64) -> f64 {
        stages(a * (x - c), p).v
    }
}
