//! Oracle checks for the error-budget and covering machinery: the budget
//! formulas against an independent plain-loop transcription, covers against
//! hand counts, and the empirical net against its own accuracy contract.

mod common;

use common::{budget_reference, SplitMix};
use mfld_core::bounds::{
    cover_residual, dual_sq_distance, empirical_cover, error_budget, grid_cover_log_size,
};
use mfld_core::{Functional, FunctionalBounds, ProductMeasure, Real, SiteMeasure, SiteVec};

fn random_bounds(rng: &mut SplitMix, n: usize) -> FunctionalBounds {
    let a = 3.0 * rng.next_f64();
    let b: Vec<Real> = (0..n).map(|_| 2.0 * rng.next_f64()).collect();
    let mut c = vec![0.0 as Real; n * n];
    for i in 0..n {
        for j in i..n {
            let v = 1.5 * rng.next_f64();
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    let m = 0.5 + 2.0 * rng.next_f64();
    FunctionalBounds::new(a, b, c, m).unwrap()
}

#[test]
fn budget_matches_independent_transcription() {
    let mut rng = SplitMix(0x0badc0de);
    for trial in 0..40 {
        let n = 1 + (rng.next_u64() % 9) as usize;
        let fb = random_bounds(&mut rng, n);
        let eps = 0.3 * rng.next_f64();
        let log_cover = 5.0 * rng.next_f64();
        let budget = error_budget(&fb, eps, log_cover).unwrap();
        let reference = budget_reference(fb.a, &fb.b, &fb.c, fb.m, eps, log_cover);
        let close = |x: Real, y: Real| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
        assert!(
            close(budget.b1, reference.b1),
            "trial {trial}: b1 {} vs {}",
            budget.b1,
            reference.b1
        );
        assert!(
            close(budget.b2, reference.b2),
            "trial {trial}: b2 {} vs {}",
            budget.b2,
            reference.b2
        );
        assert!(
            close(budget.lower_slack, reference.lower_slack),
            "trial {trial}: lower slack {} vs {}",
            budget.lower_slack,
            reference.lower_slack
        );
        assert!(
            close(budget.upper_total(), reference.upper_total),
            "trial {trial}: upper total {} vs {}",
            budget.upper_total(),
            reference.upper_total
        );
    }
}

#[test]
fn budget_zero_interaction_closed_form() {
    // With b = c = 0 the budget collapses: B1 = 0 and
    // B2 = 4 M^2 n eps^2 + M n eps, with no lower-side slack.
    for (n, m, eps) in [(4usize, 1.0, 0.1), (7, 2.5, 0.03), (12, 0.5, 0.0)] {
        let fb = FunctionalBounds::new(1.0, vec![0.0; n], vec![0.0; n * n], m).unwrap();
        let budget = error_budget(&fb, eps, 0.0).unwrap();
        assert_eq!(budget.b1, 0.0, "n={n}");
        assert_eq!(budget.lower_slack, 0.0, "n={n}");
        let nf = n as Real;
        let expect = 4.0 * m * m * nf * eps * eps + m * nf * eps;
        assert!(
            (budget.b2 - expect).abs() <= 1e-14 * (1.0 + expect),
            "n={n}: b2 {} vs {expect}",
            budget.b2
        );
    }
}

#[test]
fn budget_rejects_bad_inputs() {
    let fb = FunctionalBounds::new(1.0, vec![0.5; 3], vec![0.1; 9], 1.0).unwrap();
    assert!(error_budget(&fb, -0.01, 0.0).is_err());
    assert!(error_budget(&fb, 0.1, -1.0).is_err());
    assert!(error_budget(&fb, 0.1, 0.0).is_ok());
}

#[test]
fn grid_cover_matches_hand_count() {
    // One coordinate spanning [0,1] at eps = 0.1: ceil(1 / 0.2) = 5 cells.
    let one = vec![vec![(0.0 as Real, 1.0)]];
    let got = grid_cover_log_size(&one, 0.1).unwrap();
    assert!((got - (5.0 as Real).ln()).abs() < 1e-15);

    // Mixed shapes: counts multiply, so the logs add. Degenerate ranges
    // still contribute one cell.
    let ranges = vec![
        vec![(0.0 as Real, 2.0), (-1.0, 1.0)], // ceil(2/0.5)=4, ceil(2/0.5)=4
        vec![(0.3, 0.3)],                      // empty width -> 1 cell
        vec![(0.0, 1.3)],                      // ceil(1.3/0.5) = 3
    ];
    let got = grid_cover_log_size(&ranges, 0.25).unwrap();
    let expect = (4.0 as Real).ln() + (4.0 as Real).ln() + (3.0 as Real).ln();
    assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");

    assert!(grid_cover_log_size(&one, 0.0).is_err());
    assert!(grid_cover_log_size(&one, -0.5).is_err());
    let inverted = vec![vec![(1.0 as Real, 0.0)]];
    assert!(grid_cover_log_size(&inverted, 0.1).is_err());
}

#[test]
fn dual_sq_distance_matches_brute_force() {
    let mut rng = SplitMix(0x5eed);
    let dims = [1usize, 3, 2, 4, 1];
    for _ in 0..25 {
        let total: usize = dims.iter().sum();
        let gv: Vec<Real> = (0..total).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
        let dv: Vec<Real> = (0..total).map(|_| 4.0 * rng.next_f64() - 2.0).collect();
        let g = sitevec_from_dims(&dims, &gv);
        let d = sitevec_from_dims(&dims, &dv);
        let mut expect = 0.0;
        let mut off = 0;
        for &k in &dims {
            let mut linf: Real = 0.0;
            for c in 0..k {
                linf = linf.max((gv[off + c] - dv[off + c]).abs());
            }
            expect += linf * linf;
            off += k;
        }
        let got = dual_sq_distance(&g, &d);
        assert!((got - expect).abs() <= 1e-15 * (1.0 + expect), "{got} vs {expect}");
    }
}

fn sitevec_from_dims(dims: &[usize], flat: &[Real]) -> SiteVec {
    let mut v = SiteVec::zeros(dims);
    v.data_mut().copy_from_slice(flat);
    v
}

#[test]
fn empirical_cover_honors_its_accuracy_contract() {
    // Every sampled gradient must end up within eps^2 n (squared dual
    // distance) of some center, and the run must be reproducible bit for
    // bit from the seed.
    let n = 6usize;
    let mut rng = SplitMix(42);
    let mut q = vec![0.0 as Real; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.8 * (2.0 * rng.next_f64() - 1.0);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let theta: Vec<Real> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    let f = Functional::quadratic(q, theta).unwrap();
    let mu = ProductMeasure::iid(SiteMeasure::uniform_bit(), n).unwrap();
    let eps = 0.2;
    let n_samples = 400;

    let (report, centers) = empirical_cover(&f, &mu, eps, n_samples, 77).unwrap();
    assert_eq!(report.n_centers, centers.len());
    assert!((report.log_size - (centers.len() as Real).ln()).abs() < 1e-15);
    assert!(report.residual_max <= eps * eps * n as Real);
    assert!(!centers.is_empty());

    // Centers cover themselves exactly.
    assert_eq!(cover_residual(&centers, &centers), 0.0);

    let (report2, centers2) = empirical_cover(&f, &mu, eps, n_samples, 77).unwrap();
    assert_eq!(report.n_centers, report2.n_centers);
    assert_eq!(report.residual_max, report2.residual_max);
    for (a, b) in centers.iter().zip(&centers2) {
        assert_eq!(a.data(), b.data());
    }

    // A different seed is allowed to change the net, but stays within the
    // contract as well.
    let (report3, centers3) = empirical_cover(&f, &mu, eps, n_samples, 78).unwrap();
    assert!(report3.residual_max <= eps * eps * n as Real);
    assert!(!centers3.is_empty());
}

#[test]
fn empirical_cover_rejects_bad_inputs() {
    let n = 3usize;
    let f = Functional::quadratic(vec![0.0; n * n], vec![0.1; n]).unwrap();
    let mu = ProductMeasure::iid(SiteMeasure::uniform_bit(), n).unwrap();
    assert!(empirical_cover(&f, &mu, 0.0, 10, 1).is_err());
    assert!(empirical_cover(&f, &mu, 0.1, 0, 1).is_err());
    let wrong = ProductMeasure::iid(SiteMeasure::uniform_bit(), n + 1).unwrap();
    assert!(empirical_cover(&f, &wrong, 0.1, 10, 1).is_err());
}
