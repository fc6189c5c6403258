use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempered_core::channels::*;
use tempered_core::linalg::{trace_norm, ComplexMatrix};
use tempered_core::states::{max_entangled, omega3, random_state};

fn p3_over_3() -> ComplexMatrix {
    ComplexMatrix::from_fn(9, 9, |r, c| {
        let v = if r == c && r % 4 == 0 { 1.0 / 3.0 } else { 0.0 };
        tempered_core::linalg::Complex64::new(v, 0.0)
    })
}

#[test]
fn apply_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_state(&mut rng, 2, 3, 0.3).unwrap();
    let out = identity(3).unwrap().apply(&rho).unwrap();
    assert!((out.matrix() - rho.matrix()).max_abs() < 1e-14);

    let phi = max_entangled(3).unwrap();
    let w = omega3_channel().apply(&phi).unwrap();
    assert!((w.matrix() - omega3().matrix()).max_abs() < 1e-12);
    let dphi = dephasing(3).unwrap().apply(&phi).unwrap();
    assert!((dphi.matrix() - &p3_over_3()).max_abs() < 1e-14);
}

#[test]
fn kraus_and_choi_application_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (din, dout, rank) in [(2, 2, 1), (3, 2, 4), (2, 4, 2)] {
        let c = random_channel(&mut rng, din, dout, rank).unwrap();
        for _ in 0..5 {
            let x = random_state(&mut rng, 1, din, 0.2).unwrap();
            let a = c.apply_matrix(x.matrix()).unwrap();
            let b = c.apply_via_choi(x.matrix()).unwrap();
            assert!((&a - &b).max_abs() < 1e-9);
            assert_abs_diff_eq!(a.trace().re, 1.0, epsilon = 1e-10);
        }
    }
}

#[test]
fn tensor_channels_examples() {
    let id4 = identity(4).unwrap();
    let id22 = tensor_channels(&identity(2).unwrap(), &identity(2).unwrap()).unwrap();
    assert!((id22.choi().matrix() - id4.choi().matrix()).max_abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_channel(&mut rng, 2, 3, 2).unwrap();
    let b = random_channel(&mut rng, 3, 2, 2).unwrap();
    let ra = random_state(&mut rng, 1, 2, 0.1).unwrap();
    let rb = random_state(&mut rng, 1, 3, 0.1).unwrap();
    let ab = tensor_channels(&a, &b).unwrap();
    let joint = ab.apply_matrix(&ra.matrix().kron(rb.matrix())).unwrap();
    let separate = a.apply_matrix(ra.matrix()).unwrap().kron(&b.apply_matrix(rb.matrix()).unwrap());
    assert!((&joint - &separate).max_abs() < 1e-12);

    // Choi of Ω₃ ⊗ Ω₃ is ω₃ ⊗ ω₃ regrouped as (A A') ⊗ (B B')
    let w = omega3_channel();
    let ww = tensor_channels(&w, &w).unwrap();
    let oracle = omega3().tensor(&omega3());
    assert!((ww.choi().matrix() - oracle.matrix()).max_abs() < 1e-12);
}

#[test]
fn truncation_is_trace_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = random_channel(&mut rng, 4, 4, 3).unwrap();
    for k in 1..=4 {
        let t = truncate(&c, k, &ground_state(4)).unwrap();
        assert_eq!(t.din(), k);
        for _ in 0..3 {
            let rho = random_state(&mut rng, 1, k, 0.0).unwrap();
            assert_abs_diff_eq!(t.apply_matrix(rho.matrix()).unwrap().trace().re, 1.0, epsilon = 1e-10);
        }
    }
}

#[test]
fn truncation_error_vanishes_at_full_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let c = random_channel(&mut rng, 6, 6, 3).unwrap();
    let x = ComplexMatrix::identity(6).scale(1.0 / 6.0);
    for k in 1..=6 {
        let e = truncation_error(&c, k, &ground_state(6), &x).unwrap();
        // the projected input misses weight (6 − k)/6
        assert!(e >= (6 - k) as f64 / 6.0 - 1e-12);
        assert!(e <= 2.0);
        if k == 6 {
            assert!(e < 1e-12);
        }
    }
}

#[test]
fn diamond_distance_examples() {
    for c in [identity(3).unwrap(), dephasing(3).unwrap(), omega3_channel()] {
        assert!(diamond_distance(&c, &c).unwrap().value.abs() <= 1e-6);
    }
    let r = diamond_distance(&identity(2).unwrap(), &pauli_z()).unwrap();
    assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-4);

    let r = diamond_distance(&omega3_channel(), &dephasing(3).unwrap()).unwrap();
    let probe = trace_norm(&(omega3().matrix() - &p3_over_3())).unwrap();
    assert_abs_diff_eq!(r.probe_lower_bound, probe, epsilon = 1e-12);
    assert!(r.value >= probe - 1e-7);
    assert!(r.certificate.passed);
}

#[test]
fn diamond_distance_is_a_metric_on_the_zoo() {
    let zoo = [identity(3).unwrap(), dephasing(3).unwrap(), omega3_channel()];
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = diamond_distance(&zoo[i], &zoo[j]).unwrap().value;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            assert!((d[i][j] - d[j][i]).abs() <= 1e-6);
            assert!(d[i][j] <= 2.0 + 1e-6);
            for k in 0..3 {
                assert!(d[i][k] <= d[i][j] + d[j][k] + 1e-6);
            }
        }
    }
}

#[test]
fn diamond_distance_dominates_probe_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_channel(&mut rng, 2, 2, 2).unwrap();
    let b = random_channel(&mut rng, 2, 2, 2).unwrap();
    let dd = diamond_distance(&a, &b).unwrap().value;
    for _ in 0..20 {
        let rho = random_state(&mut rng, 2, 2, 0.0).unwrap();
        let diff = a.apply(&rho).unwrap().matrix() - b.apply(&rho).unwrap().matrix();
        assert!(trace_norm(&diff).unwrap() <= dd + 1e-7);
    }
}

#[test]
fn mismatched_channels_rejected() {
    assert!(diamond_distance(&identity(2).unwrap(), &identity(3).unwrap()).is_err());
    let rho = max_entangled(2).unwrap();
    assert!(identity(3).unwrap().apply(&rho).is_err());
    assert!(identity(1).is_err());
    assert!(dephasing(0).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(random_channel(&mut rng, 3, 1, 2).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn choi_round_trip_preserves_action(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, rank in 1usize..4) {
            prop_assume!(rank * dout >= din);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_channel(&mut rng, din, dout, rank).unwrap();
            let back = Channel::from_choi(din, dout, c.choi().matrix().clone()).unwrap();
            let x = random_state(&mut rng, 1, din, 0.1).unwrap();
            let a = c.apply_matrix(x.matrix()).unwrap();
            let b = back.apply_matrix(x.matrix()).unwrap();
            prop_assert!((&a - &b).max_abs() <= 1e-9);
        }

        #[test]
        fn diamond_distance_dominates_choi_distance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_channel(&mut rng, 2, 2, 2).unwrap();
            let b = random_channel(&mut rng, 2, 2, 2).unwrap();
            let r = diamond_distance(&a, &b).unwrap();
            prop_assert!(r.value >= r.probe_lower_bound - 1e-7);
            prop_assert!(r.value <= 2.0 + 1e-6);
        }
    }
}
