//! Ray-Knight synthesis: boundary behaviour, initial-condition algebra,
//! moment oracles and agreement with path-based local time.

use proptest::prelude::*;
use sbm_core::localtime::segment_occupation;
use sbm_core::rayknight::*;
use sbm_core::sim::{run_conditioned_bridge, EndpointWindow};
use sbm_core::stats::{ks_two_sample, Moments};
use sbm_core::{RandomStream, SkewParam};

fn skew(b: f64) -> SkewParam {
    SkewParam::new(b).unwrap()
}

fn spec(kind: RkKind, lambda: f64, beta: f64) -> RKDiffusionSpec {
    RKDiffusionSpec::new(kind, lambda, &skew(beta)).unwrap()
}

#[test]
fn absorbing_kinds_stay_at_zero() {
    let mut r = RandomStream::new(11);
    for kind in [RkKind::V1, RkKind::V3, RkKind::U1, RkKind::U3] {
        let s = spec(kind, 0.5, 0.7);
        let mut v = 0.0;
        for _ in 0..10_000 {
            v = rk_step(&s, v, 1e-4, &mut r).unwrap();
            assert_eq!(v, 0.0);
        }
    }
}

#[test]
fn absorbed_profile_vanishes_beyond_the_absorption_points() {
    let ys: Vec<f64> = (-600..=900).map(|k| k as f64 * 0.01).collect();
    let p = skew(0.7);
    for i in 0..20 {
        let prof = synthesize_profile_discontinuous(
            &p,
            0.5,
            1.0,
            &ys,
            1e-3,
            &RandomStream::for_path(5, i),
        )
        .unwrap();
        let (lo, hi) = (prof.left_end.unwrap(), prof.right_end.unwrap());
        assert!(lo < 0.0 && hi > 1.0);
        for (&y, &v) in prof.xs.iter().zip(&prof.values) {
            if y > hi || y < lo {
                assert_eq!(v, 0.0, "y = {y}");
            }
        }
    }
}

#[test]
fn entrance_branch_leaves_zero() {
    let s = spec(RkKind::V2, 0.5, 0.7);
    let mut r = RandomStream::new(12);
    let n = 2000;
    let mut positive = 0;
    for _ in 0..n {
        let mut v = 0.0;
        for _ in 0..100 {
            v = rk_step(&s, v, 1e-4, &mut r).unwrap();
        }
        positive += (v > 0.0) as usize;
    }
    assert!(positive as f64 / n as f64 > 0.99);
}

#[test]
fn zero_steps_keep_the_initial_mean() {
    let ys = [-0.5, 0.0, 0.25];
    let prof =
        synthesize_profile_discontinuous(&skew(0.7), 0.5, 1.0, &ys, 1e-3, &RandomStream::new(1))
            .unwrap();
    assert_eq!(prof.values[1], prof.v0);
}

#[test]
fn exponential_law_of_l0() {
    let mut r = RandomStream::new(21);
    let n = 1_000_000;
    let mut m = Moments::default();
    for _ in 0..n {
        m.push(draw_l0(0.5, &mut r).unwrap());
    }
    assert!((m.mean() - 1.0).abs() < 3.0 * m.std_error());

    let mut above = 0usize;
    for _ in 0..n {
        above += (draw_l0(2.0, &mut r).unwrap() > 1.0) as usize;
    }
    let p = (-2.0f64).exp();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((above as f64 / n as f64 - p).abs() < 3.0 * se);
    assert_eq!(l0_survival(0.5, 0.0), 1.0);
    assert!(draw_l0(0.0, &mut r).is_err());
}

/// Mean of `V3(h)` from the first-moment equation `m' = -2√(2λ) m`,
/// integrated with classical RK4.
fn first_moment(lambda: f64, v0: f64, h: f64) -> f64 {
    let k = 2.0 * (2.0 * lambda).sqrt();
    let f = |m: f64| -k * m;
    let n = 10_000;
    let dh = h / n as f64;
    let mut m = v0;
    for _ in 0..n {
        let a = f(m);
        let b = f(m + 0.5 * dh * a);
        let c = f(m + 0.5 * dh * b);
        let d = f(m + dh * c);
        m += dh / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    }
    m
}

#[test]
fn v3_mean_decay_matches_first_moment_equation() {
    let (lambda, v0, h, dh) = (0.5, 1.0, 0.5f64, 1e-4);
    let s = spec(RkKind::V3, lambda, 0.7);
    let steps = (h / dh).round() as usize;
    let mut m = Moments::default();
    for i in 0..20_000 {
        let mut r = RandomStream::for_path(31, i);
        let mut v = v0;
        for _ in 0..steps {
            v = rk_step(&s, v, dh, &mut r).unwrap();
        }
        m.push(v);
    }
    let want = first_moment(lambda, v0, h);
    assert!(
        (m.mean() - want).abs() < 3.0 * m.std_error(),
        "mean {} vs {} (se {})",
        m.mean(),
        want,
        m.std_error()
    );
}

#[test]
fn continuous_profile_is_glued_at_the_same_value() {
    let ys = [-0.1, 0.0, 0.1];
    for i in 0..50 {
        let prof = synthesize_profile_continuous(
            &skew(0.3),
            1.0,
            0.5,
            &ys,
            1e-3,
            &RandomStream::for_path(2, i),
        )
        .unwrap();
        assert_eq!(prof.left_limit, prof.v0);
        assert_eq!(prof.right_limit, prof.v0);
        assert_eq!(
            prof.normalization,
            sbm_core::localtime::Normalization::SpeedMeasure
        );
    }
}

#[test]
fn half_beta_u_and_v_profiles_coincide() {
    let ys: Vec<f64> = (-20..=30).map(|k| k as f64 * 0.05).collect();
    let p = skew(0.5);
    for i in 0..20 {
        let r = RandomStream::for_path(8, i);
        let v = synthesize_profile_discontinuous(&p, 1.0, 0.8, &ys, 1e-3, &r).unwrap();
        let u = synthesize_profile_continuous(&p, 1.0, 0.8, &ys, 1e-3, &r).unwrap();
        assert_eq!(u.values, v.values);
    }
}

#[test]
fn same_stream_same_profile() {
    let ys = [-0.5, 0.25, 0.75, 1.5];
    let r = RandomStream::for_path(9, 3);
    let a = synthesize_profile_discontinuous(&skew(0.7), 0.5, 1.0, &ys, 1e-3, &r).unwrap();
    let b = synthesize_profile_discontinuous(&skew(0.7), 0.5, 1.0, &ys, 1e-3, &r).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rescaled_u_profile_has_the_v_law() {
    let (beta, lambda, z) = (0.7, 0.5, 1.0);
    let p = skew(beta);
    let ys = [-0.5, 0.5];
    let n = 8000;
    let mut v_cols = vec![Vec::new(), Vec::new()];
    let mut u_cols = vec![Vec::new(), Vec::new()];
    for i in 0..n {
        let v = synthesize_profile_discontinuous(
            &p,
            lambda,
            z,
            &ys,
            1e-3,
            &RandomStream::for_path(40, i),
        )
        .unwrap();
        let u =
            synthesize_profile_continuous(&p, lambda, z, &ys, 1e-3, &RandomStream::for_path(41, i))
                .unwrap();
        v_cols[0].push(v.values[0]);
        v_cols[1].push(v.values[1]);
        u_cols[0].push(2.0 * (1.0 - beta) * u.values[0]);
        u_cols[1].push(2.0 * beta * u.values[1]);
    }
    let rep = compare_columns(&ys, &mut v_cols, &mut u_cols, 0.01).unwrap();
    assert!(rep.all_pass(), "{rep:?}");
}

#[test]
fn compare_identical_samples_gives_zero_statistic() {
    let ys = [-0.5, 0.25];
    let profiles: Vec<RKProfile> = (0..200)
        .map(|i| {
            synthesize_profile_discontinuous(
                &skew(0.6),
                1.0,
                1.0,
                &ys,
                1e-3,
                &RandomStream::for_path(3, i),
            )
            .unwrap()
        })
        .collect();
    let rep = compare_profiles(&profiles, &profiles, &ys, 0.01).unwrap();
    for t in &rep.probes {
        assert_eq!(t.ks.statistic, 0.0);
    }
    assert_eq!(rep.passes(0.25), Some(true));
    assert!(matches!(
        compare_profiles(&profiles, &profiles, &[2.0], 0.01),
        Err(sbm_core::Error::ProbeOutsideGrid { .. })
    ));
}

#[test]
fn mismatched_lambda_is_detected() {
    let ys = [0.25];
    let p = skew(0.7);
    let n = 5000;
    let draw = |lambda: f64, seed: u64| -> Vec<RKProfile> {
        (0..n)
            .map(|i| {
                synthesize_profile_discontinuous(
                    &p,
                    lambda,
                    1.0,
                    &ys,
                    1e-3,
                    &RandomStream::for_path(seed, i),
                )
                .unwrap()
            })
            .collect()
    };
    let rep = compare_profiles(&draw(0.5, 50), &draw(1.0, 51), &ys, 0.01).unwrap();
    assert_eq!(rep.passes(0.25), Some(false));
}

/// Local time at `y` of a conditioned bridge path, window half-width `eps`.
fn path_local_time(
    p: &SkewParam,
    lambda: f64,
    y: f64,
    eps: f64,
    dt: f64,
    r: &mut RandomStream,
) -> f64 {
    let w = EndpointWindow::new(0.95, 1.05).unwrap();
    let mut occ = 0.0;
    run_conditioned_bridge(p, lambda, &w, dt, r, &mut |a, b, h| {
        occ += segment_occupation(a, b, h, y - eps, y + eps)
    })
    .unwrap();
    occ / (2.0 * eps)
}

#[test]
fn synthesized_profile_matches_path_local_time() {
    let (beta, lambda, y, eps) = (0.5, 1.0, 0.5, 0.02);
    let p = skew(beta);
    let w = EndpointWindow::new(0.95, 1.05).unwrap();
    let n = 3000;
    let ys: Vec<f64> = (-20..=20).map(|k| y + k as f64 * 0.001).collect();
    let mut path = Vec::with_capacity(n);
    let mut rk = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let mut r = RandomStream::for_path(60, i);
        path.push(path_local_time(&p, lambda, y, eps, 1e-4, &mut r));
        let mut r = RandomStream::for_path(61, i);
        let z = w.sample_endpoint(lambda, &mut r);
        let prof = synthesize_profile_discontinuous(&p, lambda, z, &ys, 1e-3, &r).unwrap();
        rk.push(prof.window_mean(y, eps).unwrap());
    }
    let ks = ks_two_sample(&mut path, &mut rk);
    assert!(ks.passes(0.01), "{ks:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn initial_values_split_in_ratio_beta(beta in 0.05f64..0.95, seed in any::<u64>(), z in 0.1f64..3.0) {
        let p = skew(beta);
        let prof = synthesize_profile_discontinuous(&p, 0.7, z, &[0.0], 1e-2, &RandomStream::new(seed)).unwrap();
        prop_assert_eq!(prof.right_limit, 2.0 * beta * prof.v0);
        prop_assert_eq!(prof.left_limit, 2.0 * (1.0 - beta) * prof.v0);
        let ratio = prof.right_limit / prof.left_limit;
        prop_assert!((ratio - beta / (1.0 - beta)).abs() <= 1e-14 * ratio.max(1.0));
    }

    #[test]
    fn steps_are_nonnegative(v in 0.0f64..5.0, lambda in 0.1f64..4.0, seed in any::<u64>()) {
        let mut r = RandomStream::new(seed);
        for kind in [RkKind::V1, RkKind::V2, RkKind::U2, RkKind::U3] {
            let s = spec(kind, lambda, 0.6);
            let mut x = v;
            for _ in 0..200 {
                x = rk_step(&s, x, 1e-2, &mut r).unwrap();
                prop_assert!(x >= 0.0);
            }
        }
    }
}
