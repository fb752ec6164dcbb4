//! Property-based invariants over randomly generated inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unistochastic::sampling::{random_bistochastic, random_context, random_phases, random_stochastic};
use unistochastic::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_entry_error(a: &[Vec<f64>], p: &ProbMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst = worst.max((x - p.get(i, j)).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_round_trip_reproduces_probabilities(n in 1usize..=8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_stochastic(n, &mut r).unwrap();
        let phi = random_phases(n, &mut r).unwrap();
        let t = svd(&build_sigma(&p, &phi).unwrap()).unwrap();
        let frame = projector_frame(&t).unwrap();
        prop_assert!((t.r.trace_squared() - n as f64).abs() < 1e-9);
        prop_assert!(frame.normalization_residuals(&t.r).iter().all(|x| x.abs() < 1e-9));
        prop_assert!(max_entry_error(&reconstruct_all(&frame, &t.r).unwrap(), &p) < 1e-9);
        prop_assert!(t.r.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn squared_moduli_of_unitary_is_bistochastic(n in 1usize..=8, seed in any::<u64>()) {
        let u = haar_random_unitary(n, seed).unwrap();
        let b = squared_moduli(&u);
        prop_assert!(is_bistochastic(&b));
    }

    #[test]
    fn conjugated_basis_projectors_stay_orthogonal(n in 2usize..=6, seed in any::<u64>()) {
        let u = haar_random_unitary(n, seed).unwrap();
        let ps: Vec<Projector> = (0..n).map(|i| conjugate_by(&basis_projector(n, i).unwrap(), &u).unwrap()).collect();
        let mut sum = ComplexMatrix::new(nalgebra::DMatrix::zeros(n, n)).unwrap().into_inner();
        for (i, pi) in ps.iter().enumerate() {
            sum += pi.matrix().inner();
            for pj in &ps[i + 1..] {
                let prod = pi.matrix().mul(pj.matrix());
                prop_assert!(prod.frobenius_norm() < 1e-10);
            }
        }
        let identity = ComplexMatrix::identity(n);
        prop_assert!(ComplexMatrix::new(sum).unwrap().max_abs_diff(&identity) < 1e-10);
    }

    #[test]
    fn unit_singular_values_iff_unitary_sigma(n in 2usize..=6, seed in any::<u64>(), from_unitary in any::<bool>()) {
        let mut r = rng(seed);
        let (p, phi) = if from_unitary {
            let u = sample_haar_unitary(n, &mut r).unwrap();
            (squared_moduli(&u), PhaseMatrix::of_matrix(u.matrix()).unwrap())
        } else {
            (random_stochastic(n, &mut r).unwrap(), random_phases(n, &mut r).unwrap())
        };
        let sigma = build_sigma(&p, &phi).unwrap();
        let t = svd(&sigma).unwrap();
        let unitary = unitarity_defect(&sigma) <= 1e-8;
        let r_is_identity = t.r.distance_from_identity() <= 1e-9;
        prop_assert_eq!(unitary, r_is_identity);
        prop_assert_eq!(unitary, from_unitary);
    }

    #[test]
    fn nonunit_singular_values_force_singular_gleason_matrix(n in 2usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_stochastic(n, &mut r).unwrap();
        let t = svd(&build_sigma(&p, &random_phases(n, &mut r).unwrap()).unwrap()).unwrap();
        prop_assume!(t.r.distance_from_identity() > 1e-6);
        prop_assert!(gleason_determinant(&t.u).abs() < 1e-8);
    }

    #[test]
    fn classification_is_sound(n in 2usize..=4, seed in any::<u64>(), kind in 0u8..3) {
        let mut r = rng(seed);
        let p = match kind {
            0 => random_stochastic(n, &mut r).unwrap(),
            1 => random_bistochastic(n, &mut r).unwrap(),
            _ => squared_moduli(&sample_haar_unitary(n, &mut r).unwrap()),
        };
        let opts = CertOptions { restarts: 8, seed, ..Default::default() };
        let c = classify(&p, &opts).unwrap();
        prop_assert!(c.class.implies(MatrixClass::Stochastic));
        prop_assert_eq!(c.class >= MatrixClass::Bistochastic, is_bistochastic(&p));
        if kind == 2 {
            prop_assert!(c.class.implies(MatrixClass::Unistochastic));
        }
        if let Some(cert) = &c.certificate {
            if cert.verdict == Verdict::Certified {
                let phases = cert.phases.as_ref().unwrap();
                prop_assert!(unitarity_defect(&build_sigma(&p, phases).unwrap()) <= opts.certify_tolerance);
            }
            if cert.verdict == Verdict::RefutedExact {
                prop_assert!(cert.witness.is_some());
            }
        }
    }

    #[test]
    fn reverse_matrix_is_transpose(n in 2usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_context("a", n, &mut r).unwrap();
        let b = random_context("b", n, &mut r).unwrap();
        let forward = probability_matrix(&a, &b).unwrap();
        let backward = reverse_matrix(&a, &b).unwrap();
        prop_assert!(backward.max_abs_diff(&forward.transpose().unwrap()) <= 1e-12);
        prop_assert!(is_bistochastic(&forward));
    }

    #[test]
    fn context_transform_carries_projectors(n in 2usize..=5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_context("a", n, &mut r).unwrap();
        let b = random_context("b", n, &mut r).unwrap();
        let p = probability_matrix(&a, &b).unwrap();
        let s = context_transform(&a, &b).unwrap().s;
        prop_assert!(s.matrix().unitarity_residual() < 1e-10);
        let squared = squared_moduli(&s);
        prop_assert!(squared.max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn json_round_trip_is_lossless(n in 1usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_stochastic(n, &mut r).unwrap();
        let phi = random_phases(n, &mut r).unwrap();
        let p2: ProbMatrix = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        let phi2: PhaseMatrix = serde_json::from_str(&serde_json::to_string(&phi).unwrap()).unwrap();
        prop_assert_eq!(p, p2);
        prop_assert_eq!(phi, phi2);
    }
}
