use std::f64::consts::TAU;

use proptest::prelude::*;
use qfec_core::channel::{d_operator, kraus_set};
use qfec_core::code::CodeKind;
use qfec_core::linalg::{c, hermitian_deviation, real, sigma_minus, Mat2};
use qfec_core::trajectory::{Protocol, SimConfig};
use qfec_core::{
    axis_lowering, build_code, control_plan, driving_hamiltonian, nojump_invariance_check,
    verify_correctability, worst_correction_fidelity, BlochVector, ErrorChannel,
};

fn unit_disk() -> impl Strategy<Value = num_complex::Complex64> {
    (0.0..1.0f64, 0.0..TAU).prop_map(|(u, theta)| {
        let r = u.sqrt();
        c(r * theta.cos(), r * theta.sin())
    })
}

fn channel(qubit: usize) -> impl Strategy<Value = ErrorChannel> {
    (prop::array::uniform4(unit_disk()), 0.0..1.0f64, 0.0..TAU).prop_map(move |(e, gamma, phi)| {
        let op = Mat2::new(e[0], e[1], e[2], e[3]);
        ErrorChannel::new(qubit, op)
            .with_offset(gamma, phi)
            .unwrap()
    })
}

/// n in {2, 3, 4, 6}, one to three channels per qubit (two for odd n).
fn channel_set() -> impl Strategy<Value = (usize, Vec<ErrorChannel>)> {
    prop::sample::select(vec![2usize, 3, 4, 6]).prop_flat_map(|n| {
        let max = if n % 2 == 0 { 3 } else { 2 };
        let per_qubit: Vec<_> = (0..n)
            .map(|q| prop::collection::vec(channel(q), 1..=max))
            .collect();
        per_qubit.prop_map(move |sets| (n, sets.into_iter().flatten().collect::<Vec<_>>()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn synthesized_codes_are_correctable((n, channels) in channel_set()) {
        let code = build_code(&channels, n).unwrap();
        let expected = match code.kind {
            CodeKind::SingleGenerator => n - 1,
            CodeKind::Erasure => n - 2,
            CodeKind::Custom => unreachable!(),
        };
        prop_assert_eq!(code.logical_count, expected);
        prop_assert_eq!(code.codespace.len(), 1 << expected);
        prop_assert!(verify_correctability(&code, &channels).max_residual() <= 1e-10);
        if code.kind == CodeKind::SingleGenerator {
            for ch in &channels {
                let d = d_operator(ch);
                prop_assert!(code.generators[0].anticommutator_norm(&d.matrix, ch.qubit) <= 1e-10);
            }
        }
    }

    #[test]
    fn control_is_exact((n, channels) in channel_set(), dt in 1e-4..1e-2f64) {
        let code = build_code(&channels, n).unwrap();
        let h = driving_hamiltonian(&channels, &code).unwrap();
        prop_assert!(hermitian_deviation(&h) <= 1e-12);

        let plan = control_plan(&channels, &code).unwrap();
        let ks = kraus_set(&channels, &plan.driving, n, dt).unwrap();
        let check = nojump_invariance_check(&ks, &code);
        let total: f64 = channels.iter().map(|ch| d_operator(ch).offset_scalar).sum();
        prop_assert!(check.residual <= 1e-12, "residual {}", check.residual);
        prop_assert!((check.a - (1.0 - total * dt / 2.0)).abs() <= 1e-12);

        let f = worst_correction_fidelity(&channels, &code, &plan.corrections);
        prop_assert!((1.0 - f).abs() <= 1e-9, "fidelity {}", f);
    }
}

fn lowering(n: usize) -> Vec<ErrorChannel> {
    (0..n)
        .map(|q| ErrorChannel::new(q, sigma_minus()))
        .collect()
}

fn rank3(n: usize) -> Vec<ErrorChannel> {
    let scale = real((1.0f64 / 3.0).sqrt());
    (0..n)
        .flat_map(|q| {
            [BlochVector::X, BlochVector::Y, BlochVector::Z]
                .map(|axis| ErrorChannel::new(q, axis_lowering(axis) * scale))
        })
        .collect()
}

#[test]
fn protection_ordering() {
    // c' = 1/2 per qubit in both configurations, so t = 5 / c' = 10
    for (n, channels) in [(3, lowering(3)), (4, rank3(4))] {
        let mut on = SimConfig::new(n, channels, 1e-3, 10.0);
        on.trajectories = 200;
        on.seed = 5;
        let mut off = on.clone();
        off.feedback = false;
        off.driving = false;

        let protected = Protocol::new(&on).unwrap().run_ensemble().unwrap().record;
        let bare = Protocol::new(&off).unwrap().run_ensemble().unwrap().record;
        for k in on.sample_steps() {
            assert!(
                protected.mean_fidelity[k] >= bare.mean_fidelity[k],
                "n={n} step {k}: {} < {}",
                protected.mean_fidelity[k],
                bare.mean_fidelity[k]
            );
        }
        let last = protected.mean_fidelity.len() - 1;
        let margin = protected.mean_fidelity[last] - bare.mean_fidelity[last];
        assert!(margin >= 0.05, "n={n}: margin {margin}");
    }
}

#[test]
fn jump_rate_includes_offset() {
    // on a codespace state ||(E + mu) v||^2 = c' = (1 + 2 gamma^2) / 2 per lowering channel
    for gamma in [0.0, 0.5] {
        let channels: Vec<ErrorChannel> = lowering(2)
            .into_iter()
            .map(|ch| ch.with_offset(gamma, 0.0).unwrap())
            .collect();
        let expected: f64 = channels.iter().map(|ch| d_operator(ch).offset_scalar).sum();
        let mut cfg = SimConfig::new(2, channels, 1e-3, 10.0);
        cfg.trajectories = 100;
        cfg.seed = 21;
        let record = Protocol::new(&cfg).unwrap().run_ensemble().unwrap().record;
        let jumps = *record.jump_counts.last().unwrap() as f64;
        let rate = jumps / (cfg.trajectories as f64 * cfg.duration);
        assert!(
            (rate - expected).abs() <= 0.1 * expected,
            "gamma={gamma}: rate {rate} vs {expected}"
        );
    }
}
