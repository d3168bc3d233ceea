use bsdof::fd::{complex_step_jacobian, DEFAULT_STEP};
use bsdof::linalg::{random_unitary, rel_frobenius};
use bsdof::rng::{Domain, Stream};
use bsdof::*;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut s = Stream::new(seed, Domain::Test, 0);
    CMatrix::from_fn(rows, cols, |_, _| s.complex_normal())
}

fn system(n_t: usize, n_r: usize, n_s: usize, eta: f64, seed: u64) -> ScatteringSystem {
    synth_environment(&EnvironmentSpec::new(n_t, n_r, n_s, eta, 1.0, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn participation_within_bounds(rows in 1usize..9, cols in 1usize..9, seed in any::<u64>()) {
        let p = participation_number(&matrix(rows, cols, seed)).unwrap();
        prop_assert_eq!(p.n_tilde, rows.min(cols));
        prop_assert!(p.m >= 1.0 - 1e-12 && p.m <= p.n_tilde as f64 + 1e-12);
    }

    #[test]
    fn participation_scale_and_unitary_invariant(
        rows in 1usize..7,
        cols in 1usize..7,
        seed in any::<u64>(),
        re in -1e3f64..1e3,
        im in -1e3f64..1e3,
    ) {
        prop_assume!(re.hypot(im) > 1e-3);
        let a = matrix(rows, cols, seed);
        let m = participation_number(&a).unwrap().m;
        let scaled = participation_number(&(&a * Complex64::new(re, im))).unwrap().m;
        prop_assert!((scaled - m).abs() < 1e-12);
        let mut s = Stream::new(seed, Domain::Test, 1);
        let rotated = random_unitary(rows, &mut s) * &a * random_unitary(cols, &mut s);
        prop_assert!((participation_number(&rotated).unwrap().m - m).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_oracle(n_t in 1usize..5, n_r in 1usize..5, n_s in 1usize..17, eta in 0.1f64..0.6, seed in any::<u64>()) {
        let sys = system(n_t, n_r, n_s, eta, seed);
        let blocks = sys.blocks();
        let mut s = Stream::new(seed, Domain::Test, 2);
        let r = sample_loads(&LoadConstraint::uni(), n_s, &mut s);
        let x = sample_random_illumination(n_t, &mut s);
        let closed = closed_form_jacobian(&blocks, &r, &x).unwrap();
        let fd = complex_step_jacobian(&blocks, &r, &x, DEFAULT_STEP).unwrap();
        prop_assert!(rel_frobenius(&fd.j, &closed.j) < 1e-5);
        prop_assert!(column_space_residual(&closed, &blocks.s_rs).unwrap() < 1e-10);
        let b = b_factor(&blocks, &r, &x).unwrap();
        prop_assert!(rel_frobenius(&(&blocks.s_rs * b), &closed.j) < 1e-12);
    }

    #[test]
    fn woodbury_matches_refactorization(n_s in 1usize..24, k in 0usize..24, seed in any::<u64>()) {
        let k = k % n_s;
        let sys = system(2, 3, n_s, 0.8, seed);
        let blocks = sys.blocks();
        let pin = LoadConstraint::pin();
        let r = sample_loads(&pin, n_s, &mut Stream::new(seed, Domain::Test, 3));
        let g = coupling_resolvent(&blocks, &r).unwrap();
        let new = toggle(&r, k, &pin).unwrap();
        let up = woodbury_channel_update(&blocks, &g, &r, k, new.as_vector()[k]).unwrap();
        prop_assert_eq!(&up.loads, &new);
        prop_assert!(rel_frobenius(&up.resolvent, &coupling_resolvent(&blocks, &new).unwrap()) < 1e-10);
        prop_assert!(rel_frobenius(&up.channel, &end_to_end_channel(&blocks, &new).unwrap()) < 1e-10);
    }
}

#[test]
fn oracle_equivalence_over_many_systems() {
    let rep = validate_jacobians(None, 300, 17, DEFAULT_STEP).unwrap();
    assert!(rep.max_rel_error_fd < 1e-5, "{}", rep.max_rel_error_fd);
    assert!(rep.max_column_space_residual < 1e-10);
    assert!(rep.max_factorization_error < 1e-12);
    // First-order stencil: error shrinks with the step.
    let fine = validate_jacobians(None, 300, 17, DEFAULT_STEP / 10.0).unwrap();
    assert!(fine.max_rel_error_fd < rep.max_rel_error_fd);
}

#[test]
fn sampler_is_independent_of_thread_count() {
    let sys = system(3, 4, 16, 0.9, 4);
    let run = |threads: usize, policy: &IlluminationPolicy, mode: JacobianMode| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            sample_distribution_with_mode(&sys, policy, &LoadConstraint::pin(), 1500, 3, mode)
                .unwrap()
        })
    };
    let x = sample_random_illumination(3, &mut Stream::new(4, Domain::Test, 0));
    for (policy, mode) in [
        (IlluminationPolicy::Rand, JacobianMode::Model),
        (IlluminationPolicy::Fixed(x), JacobianMode::Toggle),
    ] {
        let one = run(1, &policy, mode);
        for threads in [3, 8] {
            let other = run(threads, &policy, mode);
            assert_eq!(one.samples, other.samples);
            assert_eq!(one.mean.to_bits(), other.mean.to_bits());
            assert_eq!(one.std.to_bits(), other.std.to_bits());
        }
    }
}

#[test]
fn coupling_free_fixed_illumination_is_constant() {
    let sys = zero_mc(&system(2, 4, 20, 0.9, 8)).unwrap();
    let x = sample_random_illumination(2, &mut Stream::new(8, Domain::Test, 0));
    for constraint in [
        LoadConstraint::pin(),
        LoadConstraint::pm(),
        LoadConstraint::uni(),
    ] {
        let d = sample_distribution(
            &sys,
            &IlluminationPolicy::Fixed(x.clone()),
            &constraint,
            2000,
            1,
        )
        .unwrap();
        assert!(d.std < 1e-12, "{constraint:?}: {}", d.std);
    }
}

#[test]
fn model_and_toggle_modes_coincide_without_coupling() {
    // Without coupling H is affine in r, so a secant equals the derivative up to a column scale.
    let sys = zero_mc(&system(3, 4, 12, 0.9, 12)).unwrap();
    let pm = LoadConstraint::pm();
    let model = sample_distribution_with_mode(
        &sys,
        &IlluminationPolicy::Rand,
        &pm,
        800,
        2,
        JacobianMode::Model,
    )
    .unwrap();
    let toggled = sample_distribution_with_mode(
        &sys,
        &IlluminationPolicy::Rand,
        &pm,
        800,
        2,
        JacobianMode::Toggle,
    )
    .unwrap();
    for (a, b) in model.samples.iter().zip(&toggled.samples) {
        assert!((a - b).abs() < 1e-10);
    }
}
