//! Least-squares recovery of classical activations inside the gate family.
//!
//! Fits minimise the mean squared error between the activation and target
//! samples with full-batch Adam over the seven raw parameters, from the given
//! start and from seeded perturbations of it, keeping the best iterate seen.
//! The best Adam iterate of each start is then polished with damped
//! Gauss-Newton steps, accepting only steps that lower the loss.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::format::real;
use crate::gate::{self, positive_map_inverse, preset, ArcGateParams, Preset, N_PARAMS};
use crate::zoo::{self, ActivationKind};

/// Default window and resolution of the loss grid.
pub const DEFAULT_RANGE: (f64, f64) = (-6.0, 6.0);
pub const DEFAULT_POINTS: usize = 1001;
pub const DEFAULT_BUDGET: usize = 5000;
pub const MIN_POINTS: usize = 16;

/// Samples the fit is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTarget {
    pub label: String,
    pub kind: Option<ActivationKind>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl FitTarget {
    /// `n_points` uniform samples of a reference activation on `[lo, hi]`.
    pub fn from_kind(kind: ActivationKind, lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        let grid = uniform_grid(lo, hi, n_points)?;
        let values = grid
            .iter()
            .map(|&x| zoo::act(kind, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: kind.name().to_string(),
            kind: Some(kind),
            grid,
            values,
        })
    }

    /// Explicit samples; `grid` must be strictly increasing.
    pub fn explicit(label: impl Into<String>, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "fit target needs at least {MIN_POINTS} points"
            )));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("fit target has non-finite samples".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("fit grid must be strictly increasing".into()));
        }
        Ok(Self {
            label: label.into(),
            kind: None,
            grid,
            values,
        })
    }

    /// Reads `x,y` rows (an optional header line is skipped).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (x, y) = (cols.next(), cols.next());
            match (x.and_then(|s| s.parse().ok()), y.and_then(|s| s.parse().ok())) {
                (Some(x), Some(y)) => {
                    grid.push(x);
                    values.push(y);
                }
                _ if i == 0 => {}
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "{}:{}: expected two numeric columns",
                        path.display(),
                        i + 1
                    )))
                }
            }
        }
        Self::explicit(path.display().to_string(), grid, values)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn kind_label(&self) -> String {
        self.kind.map_or_else(|| "explicit".to_string(), |k| k.to_string())
    }
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid range [{lo}, {hi}]")));
    }
    if n < MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "fit target needs at least {MIN_POINTS} points"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Adam iterations per restart.
    pub budget: usize,
    pub learning_rate: f64,
    /// Total starts, the first being the given initialization.
    pub restarts: usize,
    /// Upper bound on effective `a` and `p`, enforced after every step.
    pub shape_ceiling: Option<f64>,
    /// Maximum Levenberg-Marquardt iterations after Adam; 0 disables.
    pub polish: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            learning_rate: 0.02,
            restarts: 3,
            shape_ceiling: None,
            polish: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ArcGateParams,
    pub l_inf_error: f64,
    /// Euclidean norm of the residual vector.
    pub l2_error: f64,
    /// Mean squared error at `params`.
    pub loss: f64,
    /// Adam iterations of the winning start plus its polishing steps.
    pub iterations: usize,
    pub converged: bool,
    /// Best-so-far loss after each iteration of the winning restart.
    pub best_loss_trace: Vec<f64>,
}

/// Residual norms of `params` against `target`.
pub fn errors(target: &FitTarget, params: &ArcGateParams) -> Result<(f64, f64)> {
    let mut linf: f64 = 0.0;
    let mut sq = 0.0;
    for (&x, &y) in target.grid.iter().zip(&target.values) {
        let r = gate::eval_f(x, params)?.f - y;
        linf = linf.max(r.abs());
        sq += r * r;
    }
    Ok((linf, sq.sqrt()))
}

/// Mean squared error and its gradient with respect to raw storage.
fn loss_and_grad(target: &FitTarget, params: &ArcGateParams) -> Option<(f64, [f64; N_PARAMS])> {
    let r = params.resolve().ok()?;
    let n = target.len() as f64;
    let mut loss = 0.0;
    let mut g = [0.0; N_PARAMS];
    for (&x, &y) in target.grid.iter().zip(&target.values) {
        let gg = gate::grad_resolved(x, &r).ok()?;
        let res = gg.f - y;
        loss += res * res;
        for (gk, pk) in g.iter_mut().zip(gg.params()) {
            *gk += 2.0 * res * pk;
        }
    }
    let chain = params.raw_chain();
    for (gk, c) in g.iter_mut().zip(chain) {
        *gk *= c / n;
    }
    let loss = loss / n;
    (loss.is_finite() && g.iter().all(|v| v.is_finite())).then_some((loss, g))
}

/// Residuals and their Jacobian with respect to raw storage (row-major, n x 7).
fn residuals_and_jacobian(target: &FitTarget, params: &ArcGateParams) -> Option<(Vec<f64>, Vec<f64>)> {
    let r = params.resolve().ok()?;
    let chain = params.raw_chain();
    let mut res = Vec::with_capacity(target.len());
    let mut jac = Vec::with_capacity(target.len() * N_PARAMS);
    for (&x, &y) in target.grid.iter().zip(&target.values) {
        let gg = gate::grad_resolved(x, &r).ok()?;
        res.push(gg.f - y);
        jac.extend(gg.params().iter().zip(chain).map(|(g, c)| g * c));
    }
    (res.iter().chain(&jac).all(|v| v.is_finite())).then_some((res, jac))
}

fn mean_sq(res: &[f64]) -> f64 {
    res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64
}

/// Solves the 7x7 system by Gaussian elimination with partial pivoting.
fn solve(mut m: [[f64; N_PARAMS]; N_PARAMS], mut b: [f64; N_PARAMS]) -> Option<[f64; N_PARAMS]> {
    for col in 0..N_PARAMS {
        let piv = (col..N_PARAMS).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N_PARAMS {
            let f = m[row][col] / m[col][col];
            for k in col..N_PARAMS {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N_PARAMS];
    for row in (0..N_PARAMS).rev() {
        let s: f64 = (row + 1..N_PARAMS).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg-Marquardt from `run.best`; updates the run in place.
fn polish(target: &FitTarget, run: &mut Run, max_iter: usize, raw_cap: Option<f64>) {
    let mut theta = run.best.to_raw();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let Some((res, jac)) = residuals_and_jacobian(target, &ArcGateParams::from_raw(theta)) else {
            return;
        };
        let loss = mean_sq(&res);
        let mut jtj = [[0.0; N_PARAMS]; N_PARAMS];
        let mut jtr = [0.0; N_PARAMS];
        for (ri, row) in res.iter().zip(jac.chunks_exact(N_PARAMS)) {
            for i in 0..N_PARAMS {
                jtr[i] += row[i] * ri;
                for j in 0..N_PARAMS {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        run.iterations += 1;
        let mut accepted = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            let step = solve(m, jtr.map(|v| -v));
            let trial = step.map(|d| {
                let mut t = theta;
                for k in 0..N_PARAMS {
                    t[k] += d[k];
                }
                if let Some(c) = raw_cap {
                    t[0] = t[0].min(c);
                    t[2] = t[2].min(c);
                }
                t
            });
            let trial_loss = trial.and_then(|t| {
                let p = ArcGateParams::from_raw(t);
                let r = p.resolve().ok()?;
                let mut sq = 0.0;
                for (&x, &y) in target.grid.iter().zip(&target.values) {
                    let f = gate::eval_resolved(x, &r).ok()?.f - y;
                    sq += f * f;
                }
                let l = sq / target.len() as f64;
                l.is_finite().then_some(l)
            });
            match (trial, trial_loss) {
                (Some(t), Some(l)) if l < loss => {
                    theta = t;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if l < run.best_loss {
                        run.best_loss = l;
                        run.best = ArcGateParams::from_raw(t);
                    }
                    run.trace.push(run.best_loss);
                    if loss - l <= 1e-12 * loss {
                        run.converged = true;
                        return;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            run.trace.push(run.best_loss);
            run.converged = true;
            return;
        }
    }
}

struct Run {
    best: ArcGateParams,
    best_loss: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

const CONVERGE_WINDOW: usize = 100;
const MAX_LR_HALVINGS: usize = 8;

fn adam_run(
    target: &FitTarget,
    start: ArcGateParams,
    opts: &FitOptions,
    lr: f64,
    raw_cap: Option<f64>,
) -> Option<Run> {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let mut theta = start.to_raw();
    let cap = |theta: &mut [f64; N_PARAMS]| {
        if let Some(c) = raw_cap {
            theta[0] = theta[0].min(c);
            theta[2] = theta[2].min(c);
        }
    };
    cap(&mut theta);
    let mut m = [0.0; N_PARAMS];
    let mut v = [0.0; N_PARAMS];
    let mut best = ArcGateParams::from_raw(theta);
    let mut best_loss = f64::INFINITY;
    let mut trace = Vec::with_capacity(opts.budget);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=opts.budget {
        let params = ArcGateParams::from_raw(theta);
        let (loss, g) = loss_and_grad(target, &params)?;
        if loss < best_loss {
            best_loss = loss;
            best = params;
        }
        trace.push(best_loss);
        iterations = t;
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-8 {
            converged = true;
            break;
        }
        if t > CONVERGE_WINDOW {
            let before = trace[t - 1 - CONVERGE_WINDOW];
            if before - best_loss <= 1e-12 * before {
                converged = true;
                break;
            }
        }
        let (bc1, bc2) = (1.0 - B1.powf(t as f64), 1.0 - B2.powf(t as f64));
        for k in 0..N_PARAMS {
            m[k] = B1 * m[k] + (1.0 - B1) * g[k];
            v[k] = B2 * v[k] + (1.0 - B2) * g[k] * g[k];
            theta[k] -= lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + EPS);
        }
        cap(&mut theta);
    }
    // score the final iterate as well
    if let Some((loss, _)) = loss_and_grad(target, &ArcGateParams::from_raw(theta)) {
        if loss < best_loss {
            best_loss = loss;
            best = ArcGateParams::from_raw(theta);
            if let Some(last) = trace.last_mut() {
                *last = best_loss;
            }
        }
    }
    Some(Run {
        best,
        best_loss,
        iterations,
        converged,
        trace,
    })
}

fn perturb(init: &ArcGateParams, rng: &mut ChaCha8Rng) -> ArcGateParams {
    let shape = Normal::new(0.0, 0.5).expect("valid std");
    let affine = Normal::new(0.0, 0.25).expect("valid std");
    let mut raw = init.to_raw();
    for (k, r) in raw.iter_mut().enumerate() {
        *r += match k {
            0 | 2 => shape.sample(rng),
            _ => affine.sample(rng),
        };
    }
    ArcGateParams::from_raw(raw)
}

/// Fits with default options and the given iteration budget.
pub fn fit(target: &FitTarget, init: &ArcGateParams, budget: usize, seed: u64) -> Result<FitResult> {
    fit_with(
        target,
        init,
        &FitOptions {
            budget,
            ..FitOptions::default()
        },
        seed,
    )
}

pub fn fit_with(
    target: &FitTarget,
    init: &ArcGateParams,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitResult> {
    if opts.budget == 0 {
        return Err(Error::InvalidArgument("fit budget must be >= 1".into()));
    }
    if opts.restarts == 0 || !(opts.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("fit needs a restart and a positive rate".into()));
    }
    if !init.is_finite() {
        return Err(Error::InvalidArgument("fit initialization is not finite".into()));
    }
    let raw_cap = opts.shape_ceiling.map(positive_map_inverse).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Run> = None;
    for restart in 0..opts.restarts {
        let start = if restart == 0 {
            *init
        } else {
            perturb(init, &mut rng)
        };
        let mut lr = opts.learning_rate;
        let mut run = None;
        for _ in 0..=MAX_LR_HALVINGS {
            run = adam_run(target, start, opts, lr, raw_cap);
            if run.is_some() {
                break;
            }
            lr *= 0.5;
        }
        if let Some(mut run) = run {
            if opts.polish > 0 {
                polish(target, &mut run, opts.polish, raw_cap);
            }
            if best.as_ref().is_none_or(|b| run.best_loss < b.best_loss) {
                best = Some(run);
            }
        }
    }
    let run = best.ok_or_else(|| {
        Error::Contract(format!("every restart diverged fitting {}", target.label))
    })?;
    let (l_inf_error, l2_error) = errors(target, &run.best)?;
    Ok(FitResult {
        params: run.best,
        l_inf_error,
        l2_error,
        loss: run.best_loss,
        iterations: run.iterations,
        converged: run.converged,
        best_loss_trace: run.trace,
    })
}

/// Sup-norm thresholds on the default grid, pinned from a reference run of
/// [`replicate_classics`] with seed 0 and rounded up.
pub fn pinned_tau(kind: ActivationKind) -> f64 {
    match kind {
        ActivationKind::Relu => 1e-12,
        ActivationKind::LeakyRelu { .. } => 1e-12,
        ActivationKind::Sigmoid => 2.4e-3,
        ActivationKind::Tanh => 9.5e-3,
        ActivationKind::Silu => 9.5e-3,
        ActivationKind::Gelu => 2.3e-2,
        ActivationKind::Identity => 1e-6,
    }
}

/// The targets reproduced by [`replicate_classics`] and their starting presets.
pub fn classic_targets() -> Vec<(ActivationKind, Preset)> {
    vec![
        (ActivationKind::Relu, Preset::ReluLike { scale: 10.0 }),
        (ActivationKind::Sigmoid, Preset::SigmoidLike),
        (ActivationKind::Tanh, Preset::TanhLike),
        (ActivationKind::Silu, Preset::SoftReluInit),
        (ActivationKind::Gelu, Preset::SoftReluInit),
        (
            ActivationKind::LeakyRelu { slope: 0.01 },
            Preset::Leaky { slope: 0.01 },
        ),
        (ActivationKind::Identity, Preset::Identity),
    ]
}

#[derive(Debug)]
pub struct ClassicRow {
    pub kind: ActivationKind,
    pub init: ArcGateParams,
    /// Sup-norm error of the starting preset before fitting.
    pub init_l_inf: f64,
    pub result: Result<FitResult>,
}

/// Fits every classical target from its preset.
pub fn replicate_classics(
    range: (f64, f64),
    n_points: usize,
    budget: usize,
    seed: u64,
) -> Result<Vec<ClassicRow>> {
    let mut rows = Vec::new();
    for (kind, p) in classic_targets() {
        let target = FitTarget::from_kind(kind, range.0, range.1, n_points)?;
        let init = preset(p)?;
        let init_l_inf = errors(&target, &init)?.0;
        let result = fit(&target, &init, budget, seed);
        rows.push(ClassicRow {
            kind,
            init,
            init_l_inf,
            result,
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "target,kind,a,c,p,alpha,beta,gamma,delta,l_inf,l2,iterations,converged";

/// One CSV line (no newline) for a fit outcome.
pub fn csv_row(target: &str, kind: &str, result: &Result<FitResult>) -> String {
    let mut s = format!("{target},{kind}");
    match result {
        Ok(r) => {
            for v in r.params.effective() {
                let _ = write!(s, ",{}", real(v));
            }
            let _ = write!(
                s,
                ",{},{},{},{}",
                real(r.l_inf_error),
                real(r.l2_error),
                r.iterations,
                r.converged
            );
        }
        Err(_) => s.push_str(",,,,,,,,NaN,NaN,0,false"),
    }
    s
}

pub fn fit_csv(target: &FitTarget, result: &Result<FitResult>) -> String {
    format!(
        "{CSV_HEADER}\n{}\n",
        csv_row(&target.label, &target.kind_label(), result)
    )
}

pub fn classics_csv(rows: &[ClassicRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for row in rows {
        s.push_str(&csv_row(row.kind.name(), &row.kind.to_string(), &row.result));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_validation() {
        assert!(FitTarget::from_kind(ActivationKind::Relu, 1.0, -1.0, 100).is_err());
        assert!(FitTarget::from_kind(ActivationKind::Relu, -1.0, 1.0, 15).is_err());
        let grid: Vec<f64> = (0..20).map(f64::from).collect();
        let mut bad = grid.clone();
        bad[5] = bad[4];
        assert!(FitTarget::explicit("x", bad, vec![0.0; 20]).is_err());
        assert!(FitTarget::explicit("x", grid.clone(), vec![0.0; 19]).is_err());
        assert!(FitTarget::explicit("x", grid, vec![0.0; 20]).is_ok());
    }

    #[test]
    fn zero_budget_is_rejected() {
        let t = FitTarget::from_kind(ActivationKind::Identity, -1.0, 1.0, 32).unwrap();
        let init = preset(Preset::SoftReluInit).unwrap();
        assert!(fit(&t, &init, 0, 1).is_err());
    }

    #[test]
    fn failed_rows_keep_the_schema() {
        let row = csv_row("relu", "relu", &Err(Error::Contract("x".into())));
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn exact_preset_needs_no_fitting() {
        let t = FitTarget::from_kind(ActivationKind::Identity, -5.0, 5.0, 101).unwrap();
        let r = fit(&t, &preset(Preset::Identity).unwrap(), 50, 0).unwrap();
        assert_eq!(r.l_inf_error, 0.0);
    }
}
