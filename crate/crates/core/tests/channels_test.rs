use nalgebra::DMatrix;
use num_complex::Complex;
use qlc_core::channels::{tap_construct, tap_exists, tap_reference_pair, TapChannel};
use qlc_core::lorenz::relative_majorizes;
use qlc_core::matcore::{
    eig_hermitian, pencil_extremes, DensityMatrix, ExtReal, HermitianMatrix,
};
use qlc_core::verify::{random_density, random_effect, RandomSource};
use qlc_core::{QlcError, Verdict};

type C64 = Complex<f64>;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn plus_state() -> DensityMatrix {
    let m = DMatrix::from_fn(2, 2, |_, _| re(0.5));
    DensityMatrix::new(HermitianMatrix::new(m).unwrap()).unwrap()
}

fn diag(p: &[f64]) -> DensityMatrix {
    DensityMatrix::from_probs(p).unwrap()
}

fn assert_effect_valid(e: &HermitianMatrix) {
    let eig = eig_hermitian(e);
    assert!(eig.values[0] >= -1e-10, "effect below zero: {}", eig.values[0]);
    let top = eig.values.last().unwrap();
    assert!(*top <= 1.0 + 1e-10, "effect above one: {top}");
}

#[test]
fn reference_pairs_have_the_prescribed_extremes() {
    let (s1, s2) = tap_reference_pair(ExtReal::Finite(3.0), 0.0).unwrap();
    assert!((s1.entry(0, 0).re - 1.0).abs() < 1e-14);
    assert!(s1.entry(1, 1).re.abs() < 1e-14);
    assert!((s2.entry(0, 0).re - 1.0 / 3.0).abs() < 1e-14);
    assert!((s2.entry(1, 1).re - 2.0 / 3.0).abs() < 1e-14);

    let (s1, s2) = tap_reference_pair(ExtReal::Finite(2.0), 0.5).unwrap();
    assert!((s1.entry(0, 0).re - 2.0 / 3.0).abs() < 1e-14);
    assert!((s1.entry(1, 1).re - 1.0 / 3.0).abs() < 1e-14);
    assert!((s2.entry(0, 0).re - 1.0 / 3.0).abs() < 1e-14);
    assert!((s2.entry(1, 1).re - 2.0 / 3.0).abs() < 1e-14);

    // round trip through the spectral route
    for (sup, inf) in [(1.7, 0.2), (4.0, 0.9), (1.1, 0.0)] {
        let (a, b) = tap_reference_pair(ExtReal::Finite(sup), inf).unwrap();
        let ext = pencil_extremes(&a, &b).unwrap();
        assert!((ext.inf - inf).abs() <= 1e-12);
        match ext.sup {
            ExtReal::Finite(v) => assert!((v - sup).abs() <= 1e-12),
            ExtReal::Inf => panic!("expected a bounded pencil"),
        }
    }
    let (a, b) = tap_reference_pair(ExtReal::Inf, 0.3).unwrap();
    let ext = pencil_extremes(&a, &b).unwrap();
    assert!((ext.inf - 0.3).abs() <= 1e-12);
    assert!(ext.sup.is_inf());

    assert!(tap_reference_pair(ExtReal::Finite(0.8), 0.2).is_err());
    assert!(tap_reference_pair(ExtReal::Finite(1.5), -0.1).is_err());
    assert!(tap_reference_pair(ExtReal::Finite(1.0), 1.0).is_err());
    assert!(tap_reference_pair(ExtReal::Inf, 1.0).is_err());
}

#[test]
fn apex_example_holds_with_frozen_numbers() {
    let from1 = plus_state();
    let from2 = DensityMatrix::maximally_mixed(2);
    let to1 = diag(&[0.75, 0.25]);
    let to2 = DensityMatrix::maximally_mixed(2);

    let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert!((r.inf - 0.5).abs() <= 1e-12);
    match r.sup {
        ExtReal::Finite(v) => assert!((v - 1.5).abs() <= 1e-12),
        ExtReal::Inf => panic!("bounded target"),
    }
    assert!((r.vertex_a.0 - 0.5).abs() <= 1e-12);
    assert!((r.vertex_a.1 - 0.75).abs() <= 1e-12);
    assert!((r.vertex_b.0 - 0.5).abs() <= 1e-12);
    assert!((r.vertex_b.1 - 0.25).abs() <= 1e-12);
    // Q^eps of the coherent pair is (1 - eps)/2 at eps = 1/4
    assert!((r.q_at_vertex - 0.375).abs() <= 1e-9);
    assert!((r.gap - 0.125).abs() <= 1e-9);
    assert!((r.witness - 0.25).abs() <= 1e-9);

    let ch = tap_construct(&from1, &from2, &to1, &to2).unwrap();
    assert_effect_valid(ch.effect());
    let res = ch
        .conversion_residual(&from1, &from2, &to1, &to2)
        .unwrap();
    assert!(res <= 1e-8, "conversion residual {res:e}");
}

#[test]
fn apex_example_reverse_fails_with_frozen_witness() {
    let from1 = diag(&[0.75, 0.25]);
    let from2 = DensityMatrix::maximally_mixed(2);
    let to1 = plus_state();
    let to2 = DensityMatrix::maximally_mixed(2);

    let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    assert!((r.inf - 0.0).abs() <= 1e-12);
    match r.sup {
        ExtReal::Finite(v) => assert!((v - 2.0).abs() <= 1e-12),
        ExtReal::Inf => panic!("bounded target"),
    }
    assert!((r.vertex_a.0 - 0.5).abs() <= 1e-12);
    assert!((r.vertex_a.1 - 1.0).abs() <= 1e-12);
    // the diagonal pair keeps full support, so Q^0 = 1
    assert!((r.q_at_vertex - 1.0).abs() <= 1e-9);
    assert!((r.gap + 0.5).abs() <= 1e-9);
    // the dual objective is flat at -1 past the last kink
    assert!((r.witness + 1.0).abs() <= 1e-9);

    match tap_construct(&from1, &from2, &to1, &to2) {
        Err(QlcError::Infeasible(_)) => {}
        other => panic!("expected an infeasibility error, got {other:?}"),
    }
}

#[test]
fn unbounded_target_needs_an_exact_kernel_hit() {
    let (to1, to2) = tap_reference_pair(ExtReal::Inf, 0.3).unwrap();

    // enough mass outside the second input's support: reachable
    let from1 = diag(&[0.2, 0.8]);
    let from2 = diag(&[1.0, 0.0]);
    let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    assert_eq!(r.vertex_a, (0.0, 0.7));
    assert!(r.q_at_vertex <= 1e-12);

    let ch = tap_construct(&from1, &from2, &to1, &to2).unwrap();
    assert_effect_valid(ch.effect());
    let res = ch.conversion_residual(&from1, &from2, &to1, &to2).unwrap();
    assert!(res <= 1e-8, "conversion residual {res:e}");

    // a full-rank second input cannot dodge it at all
    let blocked1 = diag(&[0.75, 0.25]);
    let blocked2 = DensityMatrix::maximally_mixed(2);
    let rb = tap_exists(&blocked1, &blocked2, &to1, &to2).unwrap();
    assert_eq!(rb.verdict, Verdict::Fails);
    assert!(rb.witness < -1e-3);
    assert!(tap_construct(&blocked1, &blocked2, &to1, &to2).is_err());

    // insufficient leak: 0.6 < 0.7
    let short1 = diag(&[0.4, 0.6]);
    let rs = tap_exists(&short1, &from2, &to1, &to2).unwrap();
    assert_eq!(rs.verdict, Verdict::Fails);
}

#[test]
fn collapsed_target_is_always_reachable() {
    let to = random_density(3, 91);
    for seed in 70..74 {
        let from1 = random_density(2, seed);
        let from2 = random_density(2, seed + 100);
        let r = tap_exists(&from1, &from2, &to, &to).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let ch = tap_construct(&from1, &from2, &to, &to).unwrap();
        let res = ch.conversion_residual(&from1, &from2, &to, &to).unwrap();
        assert!(res <= 1e-12);
    }
}

fn random_tap_images(
    src: &mut RandomSource,
    from1: &DensityMatrix,
    from2: &DensityMatrix,
    out_dim: usize,
) -> (DensityMatrix, DensityMatrix) {
    let dim = from1.dim();
    let effect = random_effect(src, dim);
    let hit = qlc_core::verify::random_density_from(src, out_dim);
    let miss = qlc_core::verify::random_density_from(src, out_dim);
    let image = |rho: &DensityMatrix| {
        let e = rho.expect(&effect).unwrap().clamp(0.0, 1.0);
        DensityMatrix::new(
            hit.as_hermitian()
                .scale(e)
                .add(&miss.as_hermitian().scale(1.0 - e))
                .unwrap(),
        )
        .unwrap()
    };
    (image(from1), image(from2))
}

#[test]
fn images_of_a_channel_are_reachable_and_reconstructed() {
    let mut src = RandomSource::new(2024);
    for trial in 0..12 {
        let in_dim = 2 + (trial % 2);
        let out_dim = 2 + ((trial / 2) % 2);
        let from1 = qlc_core::verify::random_density_from(&mut src, in_dim);
        let from2 = qlc_core::verify::random_density_from(&mut src, in_dim);
        let (to1, to2) = random_tap_images(&mut src, &from1, &from2, out_dim);

        let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
        assert_ne!(
            r.verdict,
            Verdict::Fails,
            "trial {trial}: reachable images reported unreachable (gap {:e})",
            r.gap
        );
        let ch = tap_construct(&from1, &from2, &to1, &to2).unwrap();
        assert_effect_valid(ch.effect());
        let res = ch.conversion_residual(&from1, &from2, &to1, &to2).unwrap();
        assert!(res <= 1e-8, "trial {trial}: residual {res:e}");

        // a test-and-prepare conversion is in particular a channel
        let maj = relative_majorizes(&from1, &from2, &to1, &to2, 64).unwrap();
        assert_ne!(maj.verdict, Verdict::Fails, "trial {trial}");
    }
}

#[test]
fn witness_sign_tracks_the_verdict() {
    let mut src = RandomSource::new(515);
    let mut seen_hold = 0;
    let mut seen_fail = 0;
    for _ in 0..40 {
        let from1 = qlc_core::verify::random_density_from(&mut src, 2);
        let from2 = qlc_core::verify::random_density_from(&mut src, 2);
        let to1 = qlc_core::verify::random_density_from(&mut src, 2);
        let to2 = qlc_core::verify::random_density_from(&mut src, 2);
        let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
        if r.witness > 1e-8 {
            assert_eq!(r.verdict, Verdict::Holds, "witness {:e}", r.witness);
            seen_hold += 1;
        } else if r.witness < -1e-8 {
            assert_eq!(r.verdict, Verdict::Fails, "witness {:e}", r.witness);
            seen_fail += 1;
        }
    }
    assert!(seen_hold > 0, "battery never produced a reachable case");
    assert!(seen_fail > 0, "battery never produced an unreachable case");
}

#[test]
fn monte_carlo_effects_miss_the_wedge_on_a_failing_instance() {
    let from1 = diag(&[0.75, 0.25]);
    let from2 = DensityMatrix::maximally_mixed(2);
    let to1 = plus_state();
    let to2 = DensityMatrix::maximally_mixed(2);
    let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    let mm = match r.sup {
        ExtReal::Finite(v) => v,
        ExtReal::Inf => panic!("bounded target"),
    };

    let mut src = RandomSource::new(808);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1500 {
        let e = random_effect(&mut src, 2);
        let x = from2.expect(&e).unwrap();
        let y = from1.expect(&e).unwrap();
        let depth = (y - mm * x).min(r.inf * (1.0 - x) - (1.0 - y));
        worst = worst.max(depth);
    }
    assert!(
        worst < -1e-7,
        "a sampled effect nearly entered the wedge: depth {worst:e}"
    );
}

#[test]
fn cross_dimensional_conversion_works() {
    // quart of perfect discrimination in dimension 3 reaches any qubit target
    let from1 = DensityMatrix::from_probs(&[0.5, 0.5, 0.0]).unwrap();
    let from2 = DensityMatrix::from_probs(&[0.0, 0.0, 1.0]).unwrap();
    let (to1, to2) = tap_reference_pair(ExtReal::Finite(2.0), 0.5).unwrap();
    let r = tap_exists(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(r.verdict, Verdict::Holds);
    let ch: TapChannel = tap_construct(&from1, &from2, &to1, &to2).unwrap();
    assert_eq!(ch.on_hit().dim(), 2);
    let res = ch.conversion_residual(&from1, &from2, &to1, &to2).unwrap();
    assert!(res <= 1e-10);

    // dimension mismatch inside a pair is still rejected
    assert!(tap_exists(&from1, &to1, &to1, &to2).is_err());
}
