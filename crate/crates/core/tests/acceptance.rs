//! Release gate: one test per headline guarantee, at full battery scale.
//!
//! Every battery is seeded, so a failure reproduces exactly. Each test
//! checks the shared wall clock at its end, which keeps the whole target
//! inside the five-minute budget no matter how the runner schedules it.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use qlc_core::athermality::{alberti_uhlmann_exists, gibbs_convertible, GibbsSpec};
use qlc_core::channels::tap_construct;
use qlc_core::classical::{blackwell_curve, classical_q_epsilon};
use qlc_core::divergence::{
    d_max, hilbert_alpha, hilbert_metric, q_epsilon, sup_alpha, trace_distance,
};
use qlc_core::lorenz::{lorenz_curve, relative_majorizes};
use qlc_core::matcore::{pencil_extremes, DensityMatrix, ExtReal, HermitianMatrix};
use qlc_core::probabilistic::{p_max, p_max_raw, q_window};
use qlc_core::verify::{
    p_max_qubit_oracle, random_cptp, random_density_from, random_effect, random_real_density,
    RandomSource,
};
use qlc_core::Verdict;

/// Largest Hilbert space dimension any battery touches.
const MAX_DIM: usize = 4;

const ALPHAS: [f64; 5] = [1.0, 1.5, 2.0, 5.0, f64::INFINITY];

fn suite_clock() -> Instant {
    static START: OnceLock<Instant> = OnceLock::new();
    *START.get_or_init(Instant::now)
}

fn assert_within_budget(clock: Instant) {
    let elapsed = clock.elapsed();
    assert!(
        elapsed < Duration::from_secs(300),
        "suite exceeded the five-minute budget: {elapsed:?}"
    );
}

fn epsilons() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

/// Reference four-outcome pair with known curve vertices.
fn reference_probs() -> (Vec<f64>, Vec<f64>) {
    (
        vec![0.5, 0.25, 0.25, 0.0],
        vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0],
    )
}

#[test]
fn curve_vertices_match_from_classical_and_quantum_paths() {
    let clock = suite_clock();
    let t0 = Instant::now();
    let (p1, p2) = reference_probs();
    let expected = [
        (1.0 / 6.0, 0.5),
        (1.0 / 3.0, 0.75),
        (2.0 / 3.0, 1.0),
    ];

    let classical = blackwell_curve(&p1, &p2).unwrap();
    for (vx, vy) in expected {
        assert!(
            classical
                .iter()
                .any(|&(x, y)| (x - vx).abs() <= 1e-12 && (y - vy).abs() <= 1e-12),
            "classical path missed vertex ({vx}, {vy}): {classical:?}"
        );
    }

    let r1 = DensityMatrix::from_probs(&p1).unwrap();
    let r2 = DensityMatrix::from_probs(&p2).unwrap();
    let curve = lorenz_curve(&r1, &r2, 512).unwrap();
    for (vx, vy) in expected {
        assert!(
            (curve.height_at(vx) - vy).abs() <= 1e-12,
            "quantum curve height at {vx} is {}, expected {vy}",
            curve.height_at(vx)
        );
        assert!(
            curve
                .points()
                .iter()
                .any(|p| (p.x - vx).abs() <= 1e-12 && (p.y - vy).abs() <= 1e-12),
            "quantum path missed vertex ({vx}, {vy})"
        );
    }

    // both paths evaluated everywhere the classical polygon has a vertex
    for &(x, y) in &classical {
        assert!(
            (curve.height_at(x) - y).abs() <= 1e-12,
            "paths disagree at x = {x}"
        );
    }
    assert!(
        t0.elapsed() < Duration::from_secs(1),
        "reference curve took {:?}",
        t0.elapsed()
    );
    assert_within_budget(clock);
}

#[test]
fn ordering_verdicts_are_consistent_with_divergence_batteries() {
    let clock = suite_clock();
    let t0 = Instant::now();
    let mut src = RandomSource::new(20001);
    let mut holds_seen = 0;
    for i in 0..100u64 {
        let dim = 2 + (i as usize % 3);
        let a1 = random_density_from(&mut src, dim);
        let a2 = random_density_from(&mut src, dim);
        // half the instances are channel images, so the holding branch of
        // the equivalence gets real coverage; the rest are free draws
        let (b1, b2) = if i % 2 == 0 {
            let phi = random_cptp(dim, dim, 2, 40000 + i);
            (phi.apply(&a1).unwrap(), phi.apply(&a2).unwrap())
        } else {
            (
                random_density_from(&mut src, dim),
                random_density_from(&mut src, dim),
            )
        };
        let verdict = relative_majorizes(&a1, &a2, &b1, &b2, 2048).unwrap().verdict;
        if verdict != Verdict::Holds {
            continue;
        }
        holds_seen += 1;
        for alpha in ALPHAS {
            let fwd_a = hilbert_alpha(&a1, &a2, alpha).unwrap().as_f64();
            let fwd_b = hilbert_alpha(&b1, &b2, alpha).unwrap().as_f64();
            assert!(
                fwd_b <= fwd_a + 1e-8,
                "instance {i}: order alpha = {alpha} grew {fwd_a} -> {fwd_b}"
            );
            let rev_a = hilbert_alpha(&a2, &a1, alpha).unwrap().as_f64();
            let rev_b = hilbert_alpha(&b2, &b1, alpha).unwrap().as_f64();
            assert!(
                rev_b <= rev_a + 1e-8,
                "instance {i}: swapped alpha = {alpha} grew {rev_a} -> {rev_b}"
            );
        }
        for eps in epsilons() {
            let da = q_epsilon(&a1, &a2, eps).unwrap().dh_bits.as_f64();
            let db = q_epsilon(&b1, &b2, eps).unwrap().dh_bits.as_f64();
            assert!(
                db <= da + 1e-8,
                "instance {i}: eps = {eps} grew {da} -> {db}"
            );
        }
    }
    assert!(holds_seen >= 30, "only {holds_seen} holding instances");
    assert!(
        t0.elapsed() < Duration::from_secs(60),
        "battery took {:?}",
        t0.elapsed()
    );
    assert_within_budget(clock);
}

#[test]
fn alpha_limits_recover_trace_distance_and_max_relative_entropy() {
    let clock = suite_clock();
    let mut src = RandomSource::new(30001);
    for i in 0..50 {
        let dim = 2 + (i % 2);
        let rho = random_density_from(&mut src, dim);
        let sigma = random_density_from(&mut src, dim);

        let near_one = hilbert_alpha(&rho, &sigma, 1.0 + 1e-6).unwrap().as_f64();
        let td_bits = trace_distance(&rho, &sigma).unwrap() / std::f64::consts::LN_2;
        assert!(
            (near_one - td_bits).abs() <= 1e-3,
            "instance {i}: low-order limit {near_one} vs {td_bits}"
        );

        let near_inf = hilbert_alpha(&rho, &sigma, 1e6).unwrap().as_f64();
        let dm = d_max(&rho, &sigma).unwrap().as_f64();
        assert!(
            (near_inf - dm).abs() <= 1e-3,
            "instance {i}: high-order limit {near_inf} vs {dm}"
        );

        // the defining balance of the scalar optimizer, as an identity
        for alpha in [1.5, 2.0, 5.0] {
            let s = sup_alpha(&rho, &sigma, alpha).unwrap();
            let norm = sigma
                .as_hermitian()
                .scale(s)
                .sub(rho.as_hermitian())
                .unwrap()
                .trace_norm();
            let residual = (norm / (s - 1.0) - (alpha + 1.0) / (alpha - 1.0)).abs();
            assert!(
                residual <= 1e-8,
                "instance {i}: balance residual {residual:e} at alpha = {alpha}"
            );
        }
    }
    assert_within_budget(clock);
}

#[test]
fn channels_never_increase_the_divergences() {
    let clock = suite_clock();
    let mut src = RandomSource::new(50001);
    let shapes = [(2, 2), (3, 3), (2, 3), (3, 2)];
    for i in 0..200u64 {
        let (din, dout) = shapes[i as usize % shapes.len()];
        let rho = random_density_from(&mut src, din);
        let sigma = random_density_from(&mut src, din);
        let phi = random_cptp(din, dout, 2, 51000 + i);
        let out1 = phi.apply(&rho).unwrap();
        let out2 = phi.apply(&sigma).unwrap();
        for alpha in ALPHAS {
            let before = hilbert_alpha(&rho, &sigma, alpha).unwrap().as_f64();
            let after = hilbert_alpha(&out1, &out2, alpha).unwrap().as_f64();
            assert!(
                after <= before + 1e-9,
                "instance {i}: alpha = {alpha} grew {before} -> {after}"
            );
        }
        for eps in epsilons() {
            let before = q_epsilon(&rho, &sigma, eps).unwrap().dh_bits.as_f64();
            let after = q_epsilon(&out1, &out2, eps).unwrap().dh_bits.as_f64();
            assert!(
                after <= before + 1e-9,
                "instance {i}: eps = {eps} grew {before} -> {after}"
            );
        }
    }
    assert_within_budget(clock);
}

#[test]
fn qubit_thermal_criteria_agree_three_ways() {
    let clock = suite_clock();
    let mut src = RandomSource::new(60001);
    let mut band = 0usize;
    for i in 0..1000 {
        let energies = [0.0, src.uniform(0.3, 3.0)];
        let beta = if i % 5 == 4 {
            f64::INFINITY
        } else {
            src.uniform(0.0, 4.0)
        };
        let spec = GibbsSpec::new(&energies, beta).unwrap();
        let gamma = spec.state();
        let rho = random_density_from(&mut src, 2);
        let sigma = random_density_from(&mut src, 2);

        let v1 = gibbs_convertible(&rho, &sigma, &spec).unwrap().verdict;
        let v2 = alberti_uhlmann_exists(&rho, &gamma, &sigma, &gamma)
            .unwrap()
            .verdict;
        let v3 = relative_majorizes(&rho, &gamma, &sigma, &gamma, 2048)
            .unwrap()
            .verdict;
        if v1 == Verdict::Marginal || v2 == Verdict::Marginal || v3 == Verdict::Marginal {
            band += 1;
            continue;
        }
        assert_eq!(v1, v2, "instance {i} (beta = {beta}): window vs pair test");
        assert_eq!(v1, v3, "instance {i} (beta = {beta}): window vs curve test");
    }
    println!("marginal band occupancy: {band}/1000");
    assert!(band < 10, "band occupancy {band}/1000 exceeds 1%");
    assert_within_budget(clock);
}

#[test]
fn prepared_targets_are_reached_and_refuted_targets_resist_search() {
    let clock = suite_clock();
    let mut src = RandomSource::new(70001);

    // reachable targets: mix two preparations through a random test, then
    // demand the constructor reproduce them essentially exactly
    for i in 0..200 {
        let din = 2 + (i % 2);
        let dout = 2 + ((i / 2) % 2);
        let rho1 = random_density_from(&mut src, din);
        let rho2 = random_density_from(&mut src, din);
        let e = random_effect(&mut src, din);
        let xi1 = random_density_from(&mut src, dout);
        let xi2 = random_density_from(&mut src, dout);
        let mix = |x: f64| {
            DensityMatrix::new(
                xi1.as_hermitian()
                    .scale(x)
                    .add(&xi2.as_hermitian().scale(1.0 - x))
                    .unwrap(),
            )
            .unwrap()
        };
        let to1 = mix(rho1.expect(&e).unwrap().clamp(0.0, 1.0));
        let to2 = mix(rho2.expect(&e).unwrap().clamp(0.0, 1.0));
        let tap = tap_construct(&rho1, &rho2, &to1, &to2).unwrap();
        let d1 = tap.apply(&rho1).unwrap().trace_distance(&to1).unwrap();
        let d2 = tap.apply(&rho2).unwrap().trace_distance(&to2).unwrap();
        assert!(
            d1 <= 1e-8 && d2 <= 1e-8,
            "instance {i}: construction misses by ({d1:e}, {d2:e})"
        );
    }

    // a shared bank of candidate channels for the refuted instances
    let bank: Vec<(HermitianMatrix, DensityMatrix, DensityMatrix)> = (0..10_000)
        .map(|_| {
            (
                random_effect(&mut src, 2),
                random_density_from(&mut src, 2),
                random_density_from(&mut src, 2),
            )
        })
        .collect();
    let mut refuted = 0;
    let mut attempts = 0;
    while refuted < 200 && attempts < 4000 {
        attempts += 1;
        let rho1 = random_density_from(&mut src, 2);
        let rho2 = random_density_from(&mut src, 2);
        let to1 = random_density_from(&mut src, 2);
        let to2 = random_density_from(&mut src, 2);
        let rep = qlc_core::channels::tap_exists(&rho1, &rho2, &to1, &to2).unwrap();
        if rep.verdict != Verdict::Fails {
            continue;
        }
        refuted += 1;
        let mut best = f64::INFINITY;
        for (e, xi1, xi2) in &bank {
            let residual = |rho: &DensityMatrix, to: &DensityMatrix| {
                let x = rho.expect(e).unwrap().clamp(0.0, 1.0);
                let out = xi1
                    .as_hermitian()
                    .scale(x)
                    .add(&xi2.as_hermitian().scale(1.0 - x))
                    .unwrap();
                0.5 * out.sub(to.as_hermitian()).unwrap().trace_norm()
            };
            let miss = residual(&rho1, &to1).max(residual(&rho2, &to2));
            best = best.min(miss);
            if best <= 1e-7 {
                break;
            }
        }
        assert!(
            best > 1e-7,
            "a refuted instance was hit by sampling, miss {best:e}"
        );
    }
    assert_eq!(refuted, 200, "not enough refuted instances in {attempts} draws");
    assert_within_budget(clock);
}

#[test]
fn success_probability_respects_the_ratio_window_and_oracle() {
    let clock = suite_clock();
    let mut src = RandomSource::new(80001);

    // feasibility verdict coincides with the projective-metric comparison
    let mut band = 0;
    for i in 0..500 {
        let r1 = random_density_from(&mut src, 2);
        let r2 = random_density_from(&mut src, 2);
        let t1 = random_density_from(&mut src, 2);
        let t2 = random_density_from(&mut src, 2);
        let window = q_window(&r1, &r2, &t1, &t2).unwrap();
        let by_window = Verdict::from_gap(window.feasibility_gap());
        let gap_h = match (
            hilbert_metric(&r1, &r2).unwrap(),
            hilbert_metric(&t1, &t2).unwrap(),
        ) {
            (ExtReal::Inf, ExtReal::Inf) => 0.0,
            (ExtReal::Inf, ExtReal::Finite(_)) => f64::INFINITY,
            (ExtReal::Finite(_), ExtReal::Inf) => f64::NEG_INFINITY,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
        };
        let by_metric = Verdict::from_gap(gap_h);
        if by_window == Verdict::Marginal || by_metric == Verdict::Marginal {
            band += 1;
            continue;
        }
        assert_eq!(by_window, by_metric, "instance {i}: feasibility split");
    }
    assert!(band <= 5, "too many marginal feasibility instances: {band}");

    // the optimum vanishes outside the admissible ratio window and is
    // strictly positive at interior ratios
    let mut outside_checked = 0;
    let mut inside_checked = 0;
    let mut seed = 0u64;
    while (outside_checked < 10 || inside_checked < 10) && seed < 200 {
        seed += 1;
        let r1 = random_density_from(&mut src, 2);
        let r2 = random_density_from(&mut src, 2);
        let t1 = random_density_from(&mut src, 2);
        let t2 = random_density_from(&mut src, 2);
        let window = q_window(&r1, &r2, &t1, &t2).unwrap();
        let hi = match window.hi {
            ExtReal::Finite(h) => h,
            ExtReal::Inf => continue,
        };
        if window.is_empty() || hi - window.lo < 0.05 {
            continue;
        }
        if outside_checked < 10 {
            outside_checked += 1;
            let q_out = hi * 1.25 + 0.1;
            let p = p_max_raw(&r1, &r2, &t1, &t2, q_out).unwrap();
            assert!(p <= 1e-6, "solver found {p:e} beyond the window edge");
            assert_eq!(p_max(&r1, &r2, &t1, &t2, q_out).unwrap(), 0.0);
            if window.lo > 1e-3 {
                let p = p_max_raw(&r1, &r2, &t1, &t2, window.lo * 0.75).unwrap();
                assert!(p <= 1e-6, "solver found {p:e} below the window");
            }
        }
        if inside_checked < 10 {
            inside_checked += 1;
            let q_mid = 0.5 * (window.lo + hi);
            let p = p_max(&r1, &r2, &t1, &t2, q_mid).unwrap();
            assert!(p > 1e-9, "interior ratio gave {p:e}");
        }
    }
    assert!(outside_checked >= 10 && inside_checked >= 10);

    // qubit solver against the exhaustive direction-grid oracle
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 8 && seed < 60 {
        let r1 = random_real_density(2, 81000 + 7 * seed);
        let r2 = random_real_density(2, 81100 + 7 * seed);
        let t1 = random_real_density(2, 81200 + 7 * seed);
        let t2 = random_real_density(2, 81300 + 7 * seed);
        seed += 1;
        let window = q_window(&r1, &r2, &t1, &t2).unwrap();
        let hi = match window.hi {
            ExtReal::Finite(h) => h,
            ExtReal::Inf => continue,
        };
        if window.is_empty() || hi - window.lo <= 1e-3 {
            continue;
        }
        let q = window.lo + src.uniform(0.25, 0.75) * (hi - window.lo);
        let solver = p_max_raw(&r1, &r2, &t1, &t2, q).unwrap();
        let to = pencil_extremes(&t1, &t2).unwrap();
        let oracle = p_max_qubit_oracle(&r1, &r2, q, to.inf, to.sup, 360).unwrap();
        assert!(
            (solver - oracle).abs() <= 1e-3,
            "instance {seed}: solver {solver} vs oracle {oracle}"
        );
        checked += 1;
    }
    assert_eq!(checked, 8, "not enough windowed oracle instances");
    assert_within_budget(clock);
}

#[test]
fn hypothesis_testing_matches_classical_form_and_dominates_samples() {
    let clock = suite_clock();
    let mut src = RandomSource::new(90001);

    // diagonal pairs against the exact vertex form
    for i in 0..12 {
        let dim = 2 + (i % 3);
        let draw = |src: &mut RandomSource| {
            let raw: Vec<f64> = (0..dim).map(|_| src.uniform(0.05, 1.0)).collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / z).collect::<Vec<f64>>()
        };
        let p = draw(&mut src);
        let r = draw(&mut src);
        let dp = DensityMatrix::from_probs(&p).unwrap();
        let dr = DensityMatrix::from_probs(&r).unwrap();
        for eps in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let quantum = q_epsilon(&dp, &dr, eps).unwrap().q_value;
            let classical = classical_q_epsilon(&p, &r, eps).unwrap().q_value;
            assert!(
                (quantum - classical).abs() <= 1e-10,
                "instance {i}: eps = {eps} gives {quantum} vs {classical}"
            );
        }
    }

    // the reduction can never undercut any sampled effect
    let banks: Vec<Vec<HermitianMatrix>> = [2, 3]
        .iter()
        .map(|&dim| (0..100_000).map(|_| random_effect(&mut src, dim)).collect())
        .collect();
    for i in 0..50 {
        let dim = 2 + (i % 2);
        let rho1 = random_density_from(&mut src, dim);
        let rho2 = random_density_from(&mut src, dim);
        let stats: Vec<(f64, f64)> = banks[dim - 2]
            .iter()
            .map(|e| (rho1.expect(e).unwrap(), rho2.expect(e).unwrap()))
            .collect();
        for eps in [0.1, 0.5] {
            let sampled = stats
                .iter()
                .filter(|&&(x, _)| x >= 1.0 - eps)
                .map(|&(_, y)| y)
                .fold(f64::INFINITY, f64::min);
            let value = q_epsilon(&rho1, &rho2, eps).unwrap().q_value;
            assert!(
                value <= sampled + 1e-9,
                "instance {i}: eps = {eps} value {value} above sampled {sampled}"
            );
        }
    }
    assert_within_budget(clock);
}

#[test]
fn suite_operates_at_small_dimension_within_budget() {
    let clock = suite_clock();
    // batteries run in one process (one test binary, library threads only)
    // and never leave desk scale
    assert!(MAX_DIM <= 8);
    assert_within_budget(clock);
}
