//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

pub mod net;

use arcgate::{eval_f, ArcGateParams};

/// Central-difference derivative with Ridders' polynomial extrapolation.
///
/// Returns `(estimate, error_estimate)`.
pub fn ridders<F: Fn(f64) -> f64>(f: F, x: f64, h0: f64) -> (f64, f64) {
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
    (ans, err)
}

/// Plain second-order central difference.
pub fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Activation value with the effective parameter `k` replaced by `value`.
pub fn f_with_effective(x: f64, eff: [f64; 7], k: usize, value: f64) -> f64 {
    let mut e = eff;
    e[k] = value;
    let p = ArcGateParams::from_effective(e[0], e[1], e[2], e[3], e[4], e[5], e[6])
        .expect("valid perturbed parameters");
    eval_f(x, &p).expect("finite evaluation").f
}

/// Finite-difference estimates of `[dF/dx, dF/da, ..., dF/ddelta]`.
pub fn fd_partials(x: f64, params: &ArcGateParams) -> [f64; 8] {
    let eff = params.effective();
    let mut out = [0.0; 8];
    let scale_x = 0.1 / eff[0];
    out[0] = ridders(|t| eval_f(t, params).unwrap().f, x, scale_x).0;
    let log_odds = arcgate::eval_f(x, params).unwrap().log_odds;
    for k in 0..7 {
        // initial steps sized to the feature scale of each argument; a and p
        // must also stay positive under perturbation
        let h = match k {
            0 => (0.2 * eff[0]).min(0.1 / (x - eff[1]).abs().max(1e-12)),
            1 => scale_x,
            2 => (0.2 * eff[2]).min(0.1 / log_odds.abs().max(1e-12)),
            _ => 0.1 * eff[k].abs().max(1.0),
        };
        out[k + 1] = ridders(|t| f_with_effective(x, eff, k, t), eff[k], h).0;
    }
    out
}

/// `true` when `analytic` agrees with `numeric` under a relative tolerance,
/// switching to the absolute floor when the analytic value is tiny.
pub fn agrees(analytic: f64, numeric: f64, rel: f64, abs_floor: f64, tiny: f64) -> bool {
    let diff = (analytic - numeric).abs();
    if analytic.abs() < tiny {
        diff < abs_floor
    } else {
        diff / analytic.abs() < rel
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1e-300)
}
