use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempered_core::channels::{compress_output, dephasing, ground_state, identity, omega3_channel, random_channel};
use tempered_core::chmono::*;
use tempered_core::sdp::SolverOptions;
use tempered_core::states::{omega3, random_state, std_robustness_ppt, tempered_robustness_ppt};

#[test]
fn robustness_of_identity_and_dephasing() {
    for d in [2, 3] {
        let r = channel_robustness_ke(&identity(d).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, (d - 1) as f64, epsilon = 1e-4);
        assert!(r.certificate.passed);
    }
    let r = channel_robustness_ke(&dephasing(3).unwrap()).unwrap();
    assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-6);
}

#[test]
fn robustness_of_omega3_dominates_its_choi_state() {
    let r = channel_robustness_ke(&omega3_channel()).unwrap();
    let state = std_robustness_ppt(&omega3()).unwrap();
    assert!(r.value >= state.value - 1e-6, "{} < {}", r.value, state.value);
}

#[test]
fn robustness_dominates_every_probe_output() {
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let probes: Vec<_> = (0..10).map(|i| random_state(&mut rng, 3, 3, [0.0, 0.3][i % 2]).unwrap()).collect();
    for c in [identity(3).unwrap(), omega3_channel(), dephasing(3).unwrap()] {
        let rob = channel_robustness_ke(&c).unwrap().value;
        for rho in &probes {
            let out = output_robustness(&c, rho, &opts).unwrap();
            assert!(rob >= out - 1e-6, "{rob} < {out}");
        }
    }
}

#[test]
fn post_composition_does_not_increase_robustness() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let chans = [identity(3).unwrap(), omega3_channel(), random_channel(&mut rng, 3, 3, 2).unwrap()];
    for c in &chans {
        let base = channel_robustness_ke(c).unwrap().value;
        for k in [1, 2] {
            let post = compress_output(c, k, &ground_state(3)).unwrap();
            let v = channel_robustness_ke(&post).unwrap().value;
            assert!(v <= base + 1e-6, "k = {k}: {v} > {base}");
        }
    }
}

#[test]
fn seesaw_examples() {
    let cfg = SeesawConfig::default();
    let w = channel_tempered_negativity(&omega3_channel(), &cfg).unwrap();
    assert!(w.lower_bound >= 2.0 - 1e-5, "{}", w.lower_bound);
    assert!(w.certificate.passed);
    for d in [2, 3] {
        let r = channel_tempered_negativity(&identity(d).unwrap(), &cfg).unwrap();
        assert!(r.lower_bound >= d as f64 - 1e-5);
    }
    let r = channel_tempered_negativity(&dephasing(3).unwrap(), &cfg).unwrap();
    assert_abs_diff_eq!(r.lower_bound, 1.0, epsilon = 1e-6);
}

#[test]
fn seesaw_is_deterministic() {
    let cfg = SeesawConfig { restarts: 4, max_rounds: 5, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_channel(&mut rng, 2, 2, 2).unwrap();
    let a = channel_tempered_negativity(&c, &cfg).unwrap();
    let b = channel_tempered_negativity(&c, &cfg).unwrap();
    assert_eq!(a.lower_bound.to_bits(), b.lower_bound.to_bits());
    assert_eq!(a.restart, b.restart);
    assert_eq!(a.best_input, b.best_input);
    // never below the maximally entangled start
    assert!(a.restart_values.iter().flatten().all(|v| *v <= a.lower_bound));
}

#[test]
fn seesaw_input_respects_the_robustness_bound() {
    let cfg = SeesawConfig { restarts: 3, max_rounds: 5, ..Default::default() };
    for c in [omega3_channel(), identity(2).unwrap()] {
        let s = channel_tempered_negativity(&c, &cfg).unwrap();
        let out = c.apply(&s.best_input).unwrap();
        let rt = tempered_robustness_ppt(&out, &out).unwrap().value;
        let rs = channel_robustness_ke(&c).unwrap().value;
        assert!((1.0 + 2.0 * rt).log2() <= (1.0 + 2.0 * rs).log2() + 1e-6);
    }
}

#[test]
fn cost_lower_bounds() {
    let cfg = SeesawConfig::default();
    let one = ec_lower_bound(&omega3_channel(), 1, &cfg).unwrap();
    assert!(one.bits_per_use >= 1.0 - 1e-4);
    let two = ec_lower_bound(&omega3_channel(), 2, &cfg).unwrap();
    assert!(two.bits_per_use >= 1.0 - 1e-3, "{}", two.bits_per_use);
    assert!(two.bits_per_use >= one.bits_per_use - 1e-3);
    assert!(two.certificate.passed);
    for n in [1, 2] {
        let b = ec_lower_bound(&dephasing(3).unwrap(), n, &cfg).unwrap();
        assert_abs_diff_eq!(b.bits_per_use, 0.0, epsilon = 1e-6);
    }
}

/// Solver-derived values of the capacity bound for identity channels.
const IDENTITY_Q_UB: [(usize, f64); 2] = [(2, 1.0), (3, 1.584962500721)];

#[test]
fn capacity_upper_bounds() {
    let w = qcap_upper_bound(&omega3_channel()).unwrap();
    assert!(w.value <= 1.5f64.log2() + 1e-5, "{}", w.value);
    assert!(w.value >= w.probe_lower_bound - 1e-6);
    assert!(w.certificate.passed);

    let d = qcap_upper_bound(&dephasing(3).unwrap()).unwrap();
    assert_abs_diff_eq!(d.value, 0.0, epsilon = 1e-6);

    for (dim, expected) in IDENTITY_Q_UB {
        let r = qcap_upper_bound(&identity(dim).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, (dim as f64).log2(), epsilon = 1e-6);
        assert_abs_diff_eq!(r.value, expected, epsilon = 1e-6);
        assert_abs_diff_eq!(r.probe_lower_bound, (dim as f64).log2(), epsilon = 1e-12);
    }
}

#[test]
fn irreversibility_reports() {
    let cfg = SeesawConfig::default();
    let w = irreversibility_report(&omega3_channel(), "omega3", &cfg, 1).unwrap();
    assert!(w.irreversibility_witnessed);
    assert!(w.gap() >= 1.0 - 1.5f64.log2() - 1e-4);
    assert!(w.all_certified());

    let id = irreversibility_report(&identity(2).unwrap(), "id2", &cfg, 1).unwrap();
    assert!(!id.irreversibility_witnessed);
    assert_abs_diff_eq!(id.ec_lower_bound, id.q_upper_bound, epsilon = 1e-4);

    let dp = irreversibility_report(&dephasing(3).unwrap(), "dephasing3", &cfg, 1).unwrap();
    assert!(!dp.irreversibility_witnessed);
    assert_abs_diff_eq!(dp.ec_lower_bound, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(dp.q_upper_bound, 0.0, epsilon = 1e-6);
}
