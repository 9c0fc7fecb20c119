mod common;

use arcgate::{act, act_grad, ActivationKind};
use common::ridders;
use proptest::prelude::*;

const ALL: [ActivationKind; 7] = [
    ActivationKind::Relu,
    ActivationKind::LeakyRelu { slope: 0.01 },
    ActivationKind::Sigmoid,
    ActivationKind::Tanh,
    ActivationKind::Silu,
    ActivationKind::Gelu,
    ActivationKind::Identity,
];

// Phi(1) and phi(1) from standard tables
const PHI_1: f64 = 0.841_344_746_068_542_9;
const PDF_1: f64 = 0.241_970_724_519_143_37;

#[test]
fn tabulated_values() {
    let gelu = act(ActivationKind::Gelu, 1.0).unwrap();
    assert!((gelu - PHI_1).abs() < 1e-15, "{gelu}");
    let d = act_grad(ActivationKind::Gelu, 1.0).unwrap();
    assert!((d - (PHI_1 + PDF_1)).abs() < 1e-15, "{d}");
    assert_eq!(act(ActivationKind::LeakyRelu { slope: 0.01 }, -2.0).unwrap(), -0.02);
    assert_eq!(act(ActivationKind::Identity, -3.5).unwrap(), -3.5);
    assert!((act(ActivationKind::Tanh, 1.0).unwrap() - 0.761_594_155_955_764_9).abs() < 1e-15);
}

#[test]
fn names_round_trip() {
    for kind in ALL {
        assert_eq!(kind.to_string().parse::<ActivationKind>().unwrap(), kind);
    }
}

proptest! {
    #[test]
    fn derivatives_match_finite_differences(x in -30.0f64..30.0) {
        for kind in ALL {
            if kind.kinks().iter().any(|k| (x - k).abs() < 1e-2) {
                continue;
            }
            let (fd, _) = ridders(|t| act(kind, t).unwrap(), x, 1e-3);
            let d = act_grad(kind, x).unwrap();
            prop_assert!((d - fd).abs() <= 1e-8 * d.abs().max(1.0), "{kind} at {x}: {d} vs {fd}");
        }
    }

    #[test]
    fn closed_form_identities(x in -40.0f64..40.0) {
        let s = act(ActivationKind::Sigmoid, x).unwrap();
        let tanh = act(ActivationKind::Tanh, x).unwrap();
        let s2 = act(ActivationKind::Sigmoid, 2.0 * x).unwrap();
        prop_assert!((tanh - (2.0 * s2 - 1.0)).abs() <= 1e-14);
        prop_assert!((act(ActivationKind::Silu, x).unwrap() - x * s).abs() <= 1e-14 * x.abs().max(1.0));
        let sm = act(ActivationKind::Sigmoid, -x).unwrap();
        prop_assert!((s + sm - 1.0).abs() <= 1e-15);
        prop_assert!(s > 0.0 || x < -700.0);
        let relu = act(ActivationKind::Relu, x).unwrap();
        prop_assert_eq!(relu, x.max(0.0));
        // GELU(x) - GELU(-x) = x
        let g = act(ActivationKind::Gelu, x).unwrap() - act(ActivationKind::Gelu, -x).unwrap();
        prop_assert!((g - x).abs() <= 1e-13 * x.abs().max(1.0));
    }
}
