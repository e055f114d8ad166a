//! Oracle checks for the rate-function solvers: the constant ansatz against
//! an independently transcribed tilted-family computation, the simplex
//! solver against a brute-force scan of the symmetric two-color family, and
//! the exact-zero behavior at the baseline ratio.

mod common;

use mfld_core::functionals::{expected_mono_hom, PatternGraph};
use mfld_core::meanfield::{
    clique_ansatz_bound, constant_ansatz_value, rate_function_simplex, rate_function_triangle,
    MFConfig, RatePoint,
};
use mfld_core::Real;

/// Mean of the exponential tilt `e^{t x}` of the uniform measure on `[0,1]`,
/// written from scratch (the library parameterizes the same family through
/// `-t`).
fn tilt_mean(t: Real) -> Real {
    if t.abs() < 1e-9 {
        // series around 0: 1/2 + t/12 + O(t^3)
        0.5 + t / 12.0
    } else {
        1.0 / (1.0 - (-t).exp()) - 1.0 / t
    }
}

/// KL divergence of that tilt from the uniform measure: `t m(t) - ln Z(t)`
/// with `Z(t) = (e^t - 1)/t`.
fn tilt_kl(t: Real) -> Real {
    if t.abs() < 1e-9 {
        return t * t / 24.0;
    }
    let log_z = if t > 0.0 {
        // stable for large positive t: ln((e^t - 1)/t) = t + ln(1 - e^{-t}) - ln t
        t + (-(-t).exp()).ln_1p() - t.ln()
    } else {
        ((t.exp() - 1.0) / t).ln()
    };
    t * tilt_mean(t) - log_z
}

/// Minimal KL over distributions on `[0,1]` with mean `m`, by bisecting the
/// tilt parameter. Independent of the library's `lambda_for_mean`.
fn min_kl_at_mean(m: Real) -> Real {
    assert!(m > 0.0 && m < 1.0);
    let (mut lo, mut hi) = (-800.0, 800.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tilt_mean(mid) < m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tilt_kl(0.5 * (lo + hi))
}

#[test]
fn triangle_ansatz_matches_independent_transcription() {
    // The constant ansatz places every edge at y* = (u/8)^(1/3) and pays
    // C(n,2) copies of the minimal KL at that mean; the attained count is
    // C(n,3) y*^3. Rebuild both from scratch.
    for n in [6usize, 10] {
        for u in [1.5, 2.0, 4.0, 6.0] {
            let (point, value, attained) = constant_ansatz_value(n, u).unwrap();
            let y_star = (u / 8.0).cbrt();
            for &y in point.data() {
                assert_eq!(y, y_star);
            }
            let pairs = (n * (n - 1) / 2) as Real;
            let expect_value = pairs * min_kl_at_mean(y_star);
            assert!(
                (value - expect_value).abs() <= 1e-8 * (1.0 + expect_value),
                "n={n} u={u}: ansatz value {value} vs oracle {expect_value}"
            );
            let triples = (n * (n - 1) * (n - 2) / 6) as Real;
            let expect_attained = triples * y_star.powi(3);
            assert!(
                (attained - expect_attained).abs() <= 1e-12 * (1.0 + expect_attained),
                "n={n} u={u}: attained {attained} vs {expect_attained}"
            );
        }
    }
}

#[test]
fn triangle_rate_stays_below_ansatz_and_feasible() {
    let cfg = MFConfig::default();
    let mut prev: Real = -1.0;
    for u in [1.5, 2.0, 4.0, 6.0] {
        let r = rate_function_triangle(8, u, &cfg).unwrap();
        assert!(r.feasible, "u={u} infeasible: {}", r.constraint_violation);
        assert!(
            r.attained >= r.constraint_target * (1.0 - 1e-9),
            "u={u}: attained {} below target {}",
            r.attained,
            r.constraint_target
        );
        assert!(
            r.value <= r.ansatz_value * (1.0 + 1e-9) + 1e-12,
            "u={u}: value {} exceeds ansatz {}",
            r.value,
            r.ansatz_value
        );
        assert!(r.value >= 0.0);
        if let RatePoint::EdgeWeights(w) = &r.point {
            for &y in w.data() {
                assert!(y > 0.0 && y < 1.0, "u={u}: edge weight {y} out of range");
            }
        } else {
            panic!("triangle solver must return edge weights");
        }
        // The true rate is nondecreasing in u; allow solver slack.
        assert!(
            r.value >= prev - 1e-6 * (1.0 + prev.abs()),
            "u={u}: value {} dropped below previous {prev}",
            r.value
        );
        prev = r.value;
    }
}

#[test]
fn triangle_rate_is_exactly_zero_at_baseline() {
    let r = rate_function_triangle(7, 1.0, &MFConfig::default()).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(r.feasible);
    if let RatePoint::EdgeWeights(w) = &r.point {
        for &y in w.data() {
            assert_eq!(y, 0.5);
        }
    } else {
        panic!("triangle solver must return edge weights");
    }
}

#[test]
fn simplex_rate_zero_at_baseline_reports_the_expectation() {
    // At u = 1 the uniform coloring meets the constraint in expectation at
    // zero KL — including for patterns whose maps can reuse a host edge,
    // where the count polynomial at the centroid is strictly below the
    // expectation.
    for (h, name) in [
        (PatternGraph::triangle(), "triangle"),
        (PatternGraph::path(4).unwrap(), "path4"),
    ] {
        let n = 4;
        let l = 2;
        let r = rate_function_simplex(&h, n, l, 1.0, &MFConfig::default()).unwrap();
        let e_total: Real = expected_mono_hom(&h, n, l).unwrap();
        assert_eq!(r.value, 0.0, "{name}");
        assert!(r.feasible, "{name}");
        assert_eq!(r.attained, e_total, "{name}");
        assert_eq!(r.constraint_target, e_total, "{name}");
        if let RatePoint::Colors(c) = &r.point {
            for &p in c.data() {
                assert_eq!(p, 0.5, "{name}");
            }
        } else {
            panic!("simplex solver must return color distributions");
        }
    }
}

#[test]
fn simplex_rate_stays_below_symmetric_family_scan() {
    // Oracle: restrict to the symmetric family where every edge carries the
    // same two-color distribution (p, 1-p). For the triangle pattern on n
    // vertices the count is n(n-1)(n-2) (p^3 + (1-p)^3) and the KL cost is
    // C(n,2) [p ln 2p + (1-p) ln 2(1-p)]. The solver explores the full
    // product space, so its value can only be lower.
    let h = PatternGraph::triangle();
    let (n, l, u) = (4usize, 2usize, 1.5);
    let maps = (n * (n - 1) * (n - 2)) as Real;
    let e_total = maps / 4.0; // l^(1-3) with l = 2
    let target = u * e_total;
    let edges = (n * (n - 1) / 2) as Real;

    let count = |p: Real| maps * (p.powi(3) + (1.0 - p).powi(3));
    let kl = |p: Real| {
        edges * (p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln())
    };
    // Scan p on a fine grid, keep the cheapest feasible point, then refine.
    let mut best = Real::INFINITY;
    let mut best_p = 0.5;
    for i in 0..=100_000 {
        let p = 0.5 + 0.5 * (i as Real) / 100_001.0;
        if count(p) >= target && kl(p) < best {
            best = kl(p);
            best_p = p;
        }
    }
    for _ in 0..60 {
        for dp in [-1e-6, 1e-6, -1e-8, 1e-8] {
            let p = (best_p + dp).clamp(0.5, 1.0 - 1e-12);
            if count(p) >= target && kl(p) < best {
                best = kl(p);
                best_p = p;
            }
        }
    }
    assert!(best.is_finite());

    let r = rate_function_simplex(&h, n, l, u, &MFConfig::default()).unwrap();
    assert!(r.feasible);
    assert!(r.value >= 0.0);
    assert!(
        r.value <= best * (1.0 + 1e-6) + 1e-9,
        "solver value {} exceeds symmetric-family minimum {best}",
        r.value
    );

    // The clique ansatz is also an upper bound the solver must not exceed.
    let clique = clique_ansatz_bound(&h, n, l, u).unwrap();
    assert!(
        r.value <= clique.value * (1.0 + 1e-9) + 1e-12,
        "solver value {} exceeds clique ansatz {}",
        r.value,
        clique.value
    );
    assert!(
        r.value <= r.ansatz_value * (1.0 + 1e-9) + 1e-12,
        "solver value {} exceeds reported ansatz {}",
        r.value,
        r.ansatz_value
    );
}

#[test]
fn solvers_reject_out_of_range_inputs() {
    let cfg = MFConfig::default();
    assert!(rate_function_triangle(8, 0.9, &cfg).is_err());
    assert!(rate_function_triangle(8, 8.0, &cfg).is_err());
    assert!(rate_function_triangle(2, 1.5, &cfg).is_err());
    let h = PatternGraph::triangle();
    assert!(rate_function_simplex(&h, 4, 2, 0.5, &cfg).is_err());
    assert!(rate_function_simplex(&h, 1, 2, 1.5, &cfg).is_err());
    assert!(rate_function_simplex(&h, 4, 0, 1.5, &cfg).is_err());
}
