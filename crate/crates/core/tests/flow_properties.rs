use std::f64::consts::PI;

use pks_core::flows::{eval_flow, FlowKind, FlowSpec};
use proptest::prelude::*;

fn y_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn catalog(beta: f64, period: f64) -> Vec<FlowKind> {
    vec![
        FlowKind::Zero,
        FlowKind::StationaryCos,
        FlowKind::StationarySin,
        FlowKind::TranslatingCos { beta },
        FlowKind::AlternatingCos { period },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounded_by_amplitude(t in 0.0f64..1e3, amp in 0.0f64..4.0, beta in -3.0f64..3.0, period in 0.1f64..10.0) {
        let y = y_grid(64);
        for kind in catalog(beta, period) {
            let u = eval_flow(&FlowSpec::new(kind).with_amplitude(amp), t, &y).unwrap();
            prop_assert!(u.iter().all(|v| v.abs() <= amp * (1.0 + 1e-15)));
        }
    }

    #[test]
    fn translating_flow_is_continuous(t in 0.0f64..100.0, h in 1e-6f64..1e-2, beta in 0.1f64..3.0) {
        let y = y_grid(64);
        let spec = FlowSpec::new(FlowKind::TranslatingCos { beta });
        let a = eval_flow(&spec, t, &y).unwrap();
        let b = eval_flow(&spec, t + h, &y).unwrap();
        let jump = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(jump <= beta * h + 1e-12);
    }

    #[test]
    fn evaluation_is_deterministic(t in 0.0f64..50.0) {
        let y = y_grid(32);
        for kind in catalog(1.0, 1.0) {
            let spec = FlowSpec::new(kind);
            prop_assert_eq!(eval_flow(&spec, t, &y).unwrap(), eval_flow(&spec, t, &y).unwrap());
        }
    }
}

#[test]
fn stationary_cos_has_two_nondegenerate_critical_points() {
    let n = 4096;
    let y = y_grid(n);
    let u = eval_flow(&FlowSpec::new(FlowKind::StationaryCos), 0.0, &y).unwrap();
    let du: Vec<f64> = (0..n).map(|j| u[(j + 1) % n] - u[j]).collect();
    let sign_changes: Vec<usize> = (0..n).filter(|&j| du[j].signum() != du[(j + 1) % n].signum()).collect();
    assert_eq!(sign_changes.len(), 2);
    let h = 2.0 * PI / n as f64;
    for j in sign_changes {
        let c = (j + 1) % n;
        let second = (u[(c + 1) % n] - 2.0 * u[c] + u[(c + n - 1) % n]) / (h * h);
        assert!(second.abs() > 0.99);
    }
}
