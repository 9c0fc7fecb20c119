mod common;

use arcgate::gate::extended::{eval_u_signed, eval_v_signed};
use arcgate::{eval_f, eval_u, eval_v, grad, positive_map, positive_map_inverse, preset};
use arcgate::{act, ActivationKind, ArcGateParams, Preset};
use common::{agrees, fd_partials};
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = ArcGateParams> {
    (
        0.1f64..50.0,
        -3.0f64..3.0,
        0.2f64..5.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_map(|(a, c, p, al, be, ga, de)| {
            ArcGateParams::from_effective(a, c, p, al, be, ga, de).unwrap()
        })
}

proptest! {
    #[test]
    fn reflection_of_steepness(x in -20.0f64..20.0, c in -5.0f64..5.0, a in 0.1f64..100.0) {
        let u = eval_u(x, a, c).unwrap();
        prop_assert!((eval_u_signed(x, -a, c) - (1.0 - u)).abs() <= 1e-12);
    }

    #[test]
    fn reflection_of_sharpness(x in -20.0f64..20.0, a in 0.1f64..20.0, p in 0.1f64..10.0) {
        let params = ArcGateParams::from_effective(a, 0.0, p, 1.0, 0.0, 0.0, 0.0).unwrap();
        let v = eval_v(x, &params).unwrap();
        prop_assert!((eval_v_signed(x, a, 0.0, -p) - (1.0 - v)).abs() <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences(
        params in params_strategy(),
        offset in -10.0f64..10.0,
    ) {
        let x = params.c + offset;
        let g = grad(x, &params).unwrap();
        let analytic = [g.d_x, g.d_a, g.d_c, g.d_p, g.d_alpha, g.d_beta, g.d_gamma, g.d_delta];
        let numeric = fd_partials(x, &params);
        for k in 0..8 {
            prop_assert!(
                agrees(analytic[k], numeric[k], 1e-5, 1e-8, 1e-6),
                "partial {k}: analytic {} numeric {}", analytic[k], numeric[k]
            );
        }
        prop_assert_eq!(g.f, eval_f(x, &params).unwrap().f);
    }

    #[test]
    fn affine_partials_are_exact(params in params_strategy(), x in -10.0f64..10.0) {
        let g = grad(x, &params).unwrap();
        let v = eval_v(x, &params).unwrap();
        prop_assert_eq!(g.d_alpha, x * v);
        prop_assert_eq!(g.d_beta, v);
        prop_assert_eq!(g.d_gamma, x);
        prop_assert_eq!(g.d_delta, 1.0);
    }

    #[test]
    fn batch_is_bit_identical_to_scalar(
        params in params_strategy(),
        xs in proptest::collection::vec(-50.0f64..50.0, 64),
    ) {
        let batch = arcgate::eval_f_batch(&xs, &params).unwrap();
        for (x, b) in xs.iter().zip(&batch) {
            prop_assert_eq!(b.to_bits(), eval_f(*x, &params).unwrap().f.to_bits());
        }
    }

    #[test]
    fn positive_map_inverts(e in 1e-4f64..1e4) {
        let raw = positive_map_inverse(e).unwrap();
        prop_assert!((positive_map(raw) - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn positive_map_is_positive(raw in proptest::num::f64::NORMAL) {
        prop_assert!(positive_map(raw) > 0.0);
    }
}

#[test]
fn large_magnitude_inputs_are_stable() {
    let mags = [1e2, 1e4, 1e8];
    for &a in &[1e-3, 1.0, 1e3] {
        for &p in &[0.1, 1.0, 10.0] {
            let params = ArcGateParams::from_effective(a, 0.0, p, 1.0, 0.5, 0.2, -0.1).unwrap();
            for &m in &mags {
                for x in [m, -m] {
                    let e = eval_f(x, &params).unwrap();
                    assert!(e.u > 0.0 && e.u < 1.0, "u={} a={a} p={p} x={x}", e.u);
                    assert!(e.v > 0.0 && e.v < 1.0, "v={} a={a} p={p} x={x}", e.v);
                    assert!(e.f.is_finite());
                }
            }
        }
    }
}

#[test]
fn transition_is_strictly_increasing() {
    for &a in &[0.01, 1.0, 30.0] {
        let grid: Vec<f64> = (0..2001).map(|i| -10.0 + i as f64 * 0.01).collect();
        let us: Vec<f64> = grid.iter().map(|&x| eval_u(x, a, 0.3).unwrap()).collect();
        assert!(us.windows(2).all(|w| w[1] > w[0]), "a={a}");
    }
}

#[test]
fn soft_relu_asymptotics() {
    let p = preset(Preset::SoftReluInit).unwrap();
    let hi = eval_f(1e6, &p).unwrap().f;
    assert!((hi / 1e6 - 1.0).abs() < 1e-4);
    let lo6 = eval_f(-1e6, &p).unwrap().f;
    let lo8 = eval_f(-1e8, &p).unwrap().f;
    assert!(lo6 < 0.0 && lo8 < 0.0);
    assert!((lo6 - lo8).abs() < 1e-6, "{lo6} vs {lo8}");
}

// Jumps are measured on the ten grid steps either side of the origin; further
// out the soft-relu third derivative alone moves the estimate by ~2.6e-2 per step.
fn max_second_difference_jump<F: Fn(f64) -> f64>(f: F) -> f64 {
    let h = 1e-3;
    let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * h).collect();
    let second: Vec<f64> = xs
        .iter()
        .map(|&x| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h))
        .collect();
    second
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn second_difference_is_continuous_through_origin() {
    let p = preset(Preset::SoftReluInit).unwrap();
    let jump = max_second_difference_jump(|x| eval_f(x, &p).unwrap().f);
    assert!(jump < 1e-2, "arcgate jump {jump}");
    let relu_jump = max_second_difference_jump(|x| act(ActivationKind::Relu, x).unwrap());
    assert!(relu_jump >= 1e-2, "relu jump {relu_jump}");
}
