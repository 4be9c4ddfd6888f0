mod common;

use std::f64::consts::PI;

use common::*;
use dcs_core::curvature::{
    alpha_curvature, curvature_jacobian, curvature_report, jacobian_spectrum,
    linearization_spectrum,
};
use dcs_core::energy::{energy_gradient, newton_solve, total_energy, Gauge, SolveOptions};
use dcs_core::flows::FlowKind;
use dcs_core::mesh::{genus2, tetrahedron, torus7, BackgroundGeometry, WeightedSurface};
use dcs_core::metric::ConformalState;
use proptest::prelude::*;
use rand::Rng;

use BackgroundGeometry::{Euclidean, Hyperbolic};

/// Any point of the coordinate domain, admissible or not.
fn domain_state(
    s: &WeightedSurface,
    geometry: BackgroundGeometry,
    alpha: f64,
    spread: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> ConformalState {
    let u: Vec<f64> = perturbation(s.num_vertices(), spread, rng)
        .into_iter()
        .enumerate()
        .map(|(i, d)| match geometry {
            Hyperbolic if s.epsilon()[i] == 1 => (-1.0 + d).min(-0.02),
            Hyperbolic => -1.0 + d,
            Euclidean => d,
        })
        .collect();
    ConformalState::from_u(s, u, geometry, alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extended_gauss_bonnet_anywhere(seed in any::<u64>(), spread in 0.1f64..3.0, mesh in 0usize..3) {
        let mut rng = rng(seed);
        let s = random_weights(meshes()[mesh].1.clone(), &mut rng);
        for geometry in [Euclidean, Hyperbolic] {
            let st = domain_state(&s, geometry, 0.0, spread, &mut rng);
            let r = curvature_report(&s, &st, true, false).unwrap();
            prop_assert!(r.gauss_bonnet_residual.abs() <= 1e-9, "{}", r.gauss_bonnet_residual);
            // extended angles may all vanish at a vertex, so only K̃ ≤ 2π survives
            prop_assert!(r.k.iter().all(|&k| k <= 2.0 * PI));
            if r.degenerate_faces().is_empty() {
                prop_assert!(r.k.iter().all(|&k| k < 2.0 * PI));
            }
            prop_assert_eq!(r.extended.iter().filter(|&&e| e).count(), r.degenerate_faces().len());
        }
    }

    #[test]
    fn euclidean_alpha_curvature_scaling_law(seed in any::<u64>(), alpha in -2.0f64..2.0, lambda in 0.2f64..5.0) {
        let mut rng = rng(seed);
        let s = random_weights(torus7(), &mut rng);
        let st = random_admissible_state(&s, Euclidean, alpha, 0.4, &mut rng);
        let moved = st.with_u(&s, st.u().iter().map(|x| x + lambda.ln()).collect()).unwrap();
        let (a, b) = (
            curvature_report(&s, &st, false, false).unwrap(),
            curvature_report(&s, &moved, false, false).unwrap(),
        );
        for i in 0..s.num_vertices() {
            prop_assert!((a.k[i] - b.k[i]).abs() < 1e-11);
            let want = lambda.powf(-alpha) * a.r_alpha[i];
            prop_assert!((b.r_alpha[i] - want).abs() <= 1e-11 * want.abs().max(1.0));
        }
    }

    #[test]
    fn alpha_zero_calabi_linearization_is_nonpositive(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let s = random_weights(genus2(), &mut rng);
        let st = random_admissible_state(&s, Euclidean, 0.0, 0.5, &mut rng);
        let sp = linearization_spectrum(&s, &st, FlowKind::Calabi, None).unwrap();
        prop_assert_eq!(sp.positive, 0);
        // −Λ² has the same kernel as Λ
        prop_assert_eq!(sp.zero, 1);
    }

    #[test]
    fn energy_is_path_independent(seed in any::<u64>(), geometry in prop_oneof![Just(Euclidean), Just(Hyperbolic)]) {
        let mut rng = rng(seed);
        let s = random_weights(tetrahedron(), &mut rng);
        let alpha = rng.gen_range(-1.5..1.5);
        let target: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = domain_state(&s, geometry, alpha, 1.5, &mut rng);
        let b = domain_state(&s, geometry, alpha, 1.5, &mut rng);
        let c = domain_state(&s, geometry, alpha, 1.5, &mut rng);
        let direct = total_energy(&s, &c, &target, &a).unwrap().value;
        let legs = total_energy(&s, &b, &target, &a).unwrap().value + total_energy(&s, &c, &target, &b).unwrap().value;
        prop_assert!((direct - legs).abs() < 1e-9, "{} vs {}", direct, legs);
    }

    #[test]
    fn energy_gradient_matches_finite_differences(seed in any::<u64>(), geometry in prop_oneof![Just(Euclidean), Just(Hyperbolic)]) {
        let mut rng = rng(seed);
        let s = random_weights(torus7(), &mut rng);
        let alpha = rng.gen_range(-1.5..1.5);
        let target: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // the O(h²) stencil error grows without bound as a face nears degeneration
        let st = loop {
            let st = random_admissible_state(&s, geometry, alpha, 0.5, &mut rng);
            if min_relative_slack(&s, &st) >= 1e-3 {
                break st;
            }
        };
        let grad = energy_gradient(&s, &st, &target).unwrap();
        let h = 1e-5;
        for i in 0..7 {
            let mut up = st.u().to_vec();
            let mut dn = st.u().to_vec();
            up[i] += h;
            dn[i] -= h;
            // base at the state itself, so the quadrature only covers the short stencil
            let ep = total_energy(&s, &st.with_u(&s, up).unwrap(), &target, &st).unwrap().value;
            let em = total_energy(&s, &st.with_u(&s, dn).unwrap(), &target, &st).unwrap().value;
            let fd = (ep - em) / (2.0 * h);
            prop_assert!((fd - grad[i]).abs() < 1e-6, "vertex {}: {} vs {}", i, fd, grad[i]);
        }
    }

    #[test]
    fn energy_is_midpoint_convex_when_alpha_target_nonpositive(
        seed in any::<u64>(),
        geometry in prop_oneof![Just(Euclidean), Just(Hyperbolic)],
        mesh in 0usize..3,
    ) {
        let mut rng = rng(seed);
        let s = random_weights(meshes()[mesh].1.clone(), &mut rng);
        let alpha: f64 = rng.gen_range(-1.5..1.5);
        // α R̄ ≤ 0 at every vertex
        let target: Vec<f64> = (0..s.num_vertices())
            .map(|_| -alpha.signum() * rng.gen_range(0.0..1.0))
            .collect();
        let a = domain_state(&s, geometry, alpha, 2.0, &mut rng);
        let b = domain_state(&s, geometry, alpha, 2.0, &mut rng);
        let mid = a.with_u(&s, a.u().iter().zip(b.u()).map(|(x, y)| 0.5 * (x + y)).collect()).unwrap();
        let fb = total_energy(&s, &b, &target, &a).unwrap().value;
        let fm = total_energy(&s, &mid, &target, &a).unwrap().value;
        prop_assert!(fb - 2.0 * fm >= -1e-9, "second difference {}", fb - 2.0 * fm);
    }
}

#[test]
fn one_degenerate_face_keeps_the_tetrahedron_total() {
    let s = WeightedSurface::vertex_scaling(tetrahedron(), 1.0).unwrap();
    let st = ConformalState::from_f(&s, vec![-3.0, 0.0, 0.0, 0.0], Euclidean, 0.0).unwrap();
    let r = curvature_report(&s, &st, true, false).unwrap();
    assert!(!r.degenerate_faces().is_empty());
    assert!((r.k.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
    assert!(curvature_report(&s, &st, false, false).is_err());
}

#[test]
fn tetrahedron_kernel_and_spectral_gap() {
    let s = WeightedSurface::tangential_circle_packing(tetrahedron()).unwrap();
    let st = ConformalState::zero(&s, Euclidean, 0.0);
    let l = curvature_jacobian(&s, &st).unwrap();
    let ones = nalgebra::DVector::from_element(4, 1.0);
    assert!((&l * ones).amax() < 1e-10);
    let sp = jacobian_spectrum(&s, &st).unwrap();
    assert_eq!((sp.negative, sp.zero, sp.positive), (0, 1, 3));
    assert!(sp.eigenvalues[1] > 0.0);
    // 4/√3 for the regular tetrahedron packing
    assert!((sp.eigenvalues[3] - 4.0 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn hyperbolic_jacobian_is_positive_definite_on_genus2() {
    let mut rng = rng(21);
    for _ in 0..100 {
        let s = random_weights(genus2(), &mut rng);
        let st = random_admissible_state(&s, Hyperbolic, 1.0, 0.5, &mut rng);
        let sp = jacobian_spectrum(&s, &st).unwrap();
        assert!(sp.eigenvalues[0] > 0.0, "{:?}", sp.eigenvalues);
    }
}

#[test]
fn gradient_vanishes_at_the_generating_state() {
    let mut rng = rng(22);
    for (_, t) in meshes() {
        let s = random_weights(t, &mut rng);
        for geometry in [Euclidean, Hyperbolic] {
            let alpha = rng.gen_range(-1.0..1.0);
            let st = random_admissible_state(&s, geometry, alpha, 0.4, &mut rng);
            let target = alpha_curvature(&s, &st, false).unwrap();
            let g = energy_gradient(&s, &st, &target).unwrap();
            assert!(g.iter().all(|x| x.abs() < 1e-8), "{g:?}");
        }
    }
}

#[test]
fn newton_recovers_euclidean_alpha_zero_state_up_to_shift() {
    let mut rng = rng(23);
    for (_, t) in meshes() {
        let s = random_weights(t, &mut rng);
        let truth = random_admissible_state(&s, Euclidean, 0.0, 0.3, &mut rng);
        let target = alpha_curvature(&s, &truth, false).unwrap();
        let start = truth
            .with_u(
                &s,
                truth
                    .u()
                    .iter()
                    .zip(perturbation(s.num_vertices(), 0.2, &mut rng))
                    .map(|(a, b)| a + b)
                    .collect(),
            )
            .unwrap();
        let opts = SolveOptions {
            gauge: Some(Gauge::SumU(truth.u().iter().sum())),
            ..Default::default()
        };
        let (sol, report) = newton_solve(&s, &start, &target, &opts).unwrap();
        assert!(report.residual < 1e-9);
        assert!(max_abs_diff(&centered(sol.u()), &centered(truth.u())) < 1e-6);
        assert!((mean(sol.u()) - mean(truth.u())).abs() < 1e-9);
    }
}

#[test]
fn newton_without_gauge_is_rejected_when_needed() {
    let s = WeightedSurface::tangential_circle_packing(torus7()).unwrap();
    let st = ConformalState::zero(&s, Euclidean, 0.0);
    let err = newton_solve(&s, &st, &[0.0; 7], &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, dcs_core::Error::GaugeRequired));
}
