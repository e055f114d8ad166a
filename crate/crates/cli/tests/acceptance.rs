//! Acceptance battery: one test per headline guarantee, each printing a
//! single PASS line with its measured numbers (visible under
//! `--nocapture`). Every tolerance here is the shipped contract — loosening
//! one is an API change, not a test fix.

use std::time::Instant;

use mfld_core::functionals::{
    edge_count, expected_triangle, spin_condition_check, PatternGraph, SpinSystem,
};
use mfld_core::meanfield::{
    clique_ansatz_bound, constant_ansatz_value, rate_function_simplex, rate_function_triangle,
    spin_mf_value, MFConfig,
};
use mfld_core::measures::{kl_truncexp, lambda_for_mean, mean_from_lambda};
use mfld_core::validate::{
    exact_log_partition, gibbs_identity_check, mc_tail_probability, quadrature_kl_truncexp,
    quadrature_mean_truncexp, replay_lower_bound, theorem1_experiment,
    tilted_importance_estimate, TheoremConfig,
};
use mfld_core::{Functional, LinearTilt, ProductMeasure, Real, SiteMeasure, SiteVec};

/// Deterministic splitmix64 stream so the battery never depends on the
/// library's own RNG plumbing.
struct SplitMix(u64);

impl SplitMix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn random_quadratic(rng: &mut SplitMix, n: usize, scale: Real) -> Functional {
    let mut q = vec![0.0 as Real; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = scale * (2.0 * rng.next_f64() - 1.0);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let theta: Vec<Real> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    Functional::quadratic(q, theta).unwrap()
}

fn bits(n: usize) -> ProductMeasure {
    ProductMeasure::iid(SiteMeasure::uniform_bit(), n).unwrap()
}

#[test]
fn criterion_1_gibbs_identity_on_random_instances() {
    // 20 random multilinear instances on product measures with up to ten
    // sites: the variational identity must close to 1e-9 relative.
    let mut rng = SplitMix(0xc1);
    let mut worst: Real = 0.0;
    let mut count = 0;
    for k in 0..20 {
        let (f, mu) = match k % 5 {
            4 => {
                let nv = 5usize; // ten edge sites
                (Functional::Triangle { vertices: nv }, bits(edge_count(nv)))
            }
            3 => {
                let n = 4 + (k % 7);
                let coeffs: Vec<Real> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
                (
                    Functional::Linear {
                        coeffs: SiteVec::from_scalars(&coeffs),
                    },
                    bits(n),
                )
            }
            _ => {
                let n = 4 + (k % 7);
                (random_quadratic(&mut rng, n, 0.6), bits(n))
            }
        };
        let check = gibbs_identity_check(&f, &mu).unwrap();
        let rel = check.gap.abs() / (1.0 + check.log_z.abs());
        assert!(
            rel <= 1e-9,
            "instance {k}: relative identity gap {rel:.3e} exceeds 1e-9"
        );
        worst = worst.max(rel);
        count += 1;
    }
    println!("criterion 1 PASS: Gibbs identity on {count} instances, worst relative gap {worst:.3e}");
}

#[test]
fn criterion_2_two_sided_sandwich_never_violated() {
    // 20 random quadratics on eight bits plus a Curie-Weiss instance: the
    // budgeted sandwich must hold with nonnegative margins every time.
    let mut rng = SplitMix(0xc2);
    let cfg = TheoremConfig {
        epsilon: 0.05,
        ..TheoremConfig::default()
    };
    let mut worst_lower = Real::INFINITY;
    let mut worst_upper = Real::INFINITY;
    for k in 0..20 {
        let f = random_quadratic(&mut rng, 8, 0.25);
        let exp = theorem1_experiment(&f, &bits(8), &cfg).unwrap();
        assert!(
            exp.sandwich.holds(),
            "instance {k}: sandwich violated: {:?}",
            exp.sandwich
        );
        worst_lower = worst_lower.min(exp.sandwich.lower_margin);
        worst_upper = worst_upper.min(exp.sandwich.upper_margin);
    }
    let cw = Functional::Spin(SpinSystem::curie_weiss(12, 1.2));
    let mu = ProductMeasure::iid(SiteMeasure::uniform_sign(), 12).unwrap();
    let exp = theorem1_experiment(&cw, &mu, &cfg).unwrap();
    assert!(exp.sandwich.holds(), "curie-weiss: {:?}", exp.sandwich);
    worst_lower = worst_lower.min(exp.sandwich.lower_margin);
    worst_upper = worst_upper.min(exp.sandwich.upper_margin);
    println!(
        "criterion 2 PASS: sandwich held on 21 instances, smallest margins lower={worst_lower:.6} upper={worst_upper:.6}"
    );
}

#[test]
fn criterion_3_truncated_exponential_closed_forms() {
    // Mean inversion to 1e-10 and closed-form KL against order-40
    // quadrature to 1e-8, across the working range of targets; the centered
    // case is exact.
    let mut worst_mean: Real = 0.0;
    let mut worst_kl: Real = 0.0;
    for i in 1..=19 {
        let a = i as Real * 0.05;
        let lam = lambda_for_mean(a).unwrap();
        let back = (mean_from_lambda(lam) - a).abs();
        assert!(back <= 1e-10, "a={a}: inversion error {back:.3e}");
        worst_mean = worst_mean.max(back);

        let q_mean = (quadrature_mean_truncexp(lam, 40).unwrap() - a).abs();
        assert!(q_mean <= 1e-8, "a={a}: quadrature mean error {q_mean:.3e}");

        let kl_err = (quadrature_kl_truncexp(lam, 40).unwrap() - kl_truncexp(a).unwrap()).abs();
        assert!(kl_err <= 1e-8, "a={a}: KL quadrature error {kl_err:.3e}");
        worst_kl = worst_kl.max(kl_err);
    }
    assert_eq!(kl_truncexp(0.5 as Real).unwrap(), 0.0);
    assert_eq!(lambda_for_mean(0.5 as Real).unwrap(), 0.0);
    println!(
        "criterion 3 PASS: truncated-exponential closed forms, worst inversion {worst_mean:.3e}, worst KL-vs-quadrature {worst_kl:.3e}"
    );
}

#[test]
fn criterion_4_triangle_rate_curve_at_twenty_vertices() {
    let start = Instant::now();
    let cfg = MFConfig::default();
    let mut prev: Real = -1.0;
    let mut values = Vec::new();
    for u in [1.5, 2.0, 4.0, 6.0] {
        let r = rate_function_triangle(20, u, &cfg).unwrap();
        assert!(r.feasible, "u={u}: violation {}", r.constraint_violation);
        assert!(
            r.value <= r.ansatz_value * (1.0 + 1e-6),
            "u={u}: value {} above ansatz {}",
            r.value,
            r.ansatz_value
        );
        let (_, ansatz, attained) = constant_ansatz_value(20, u).unwrap();
        assert!(
            attained >= u * expected_triangle::<Real>(20) * (1.0 - 1e-9),
            "u={u}: ansatz point infeasible"
        );
        assert!((r.ansatz_value - ansatz).abs() <= 1e-9 * (1.0 + ansatz));
        assert!(r.value >= prev - 1e-9, "u={u}: rate decreased");
        prev = r.value;
        values.push(r.value);
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 120.0, "curve took {secs:.1}s, budget is 120s");
    println!(
        "criterion 4 PASS: N=20 triangle rates {values:?} nondecreasing, below ansatz, in {secs:.1}s"
    );
}

#[test]
fn criterion_5_simplex_rate_at_eight_vertices() {
    let start = Instant::now();
    let h = PatternGraph::triangle();
    let (n, l, u) = (8usize, 2usize, 1.5);
    let cfg = MFConfig::default();

    let r = rate_function_simplex(&h, n, l, u, &cfg).unwrap();
    assert!(r.feasible, "violation {}", r.constraint_violation);

    // Planted-clique ansatz bound.
    let clique = clique_ansatz_bound(&h, n, l, u).unwrap();
    assert!(
        r.value <= clique.value * (1.0 + 1e-9) + 1e-12,
        "value {} above clique ansatz {}",
        r.value,
        clique.value
    );

    // Independent symmetric-family scan: all edges share (p, 1-p).
    let maps = (n * (n - 1) * (n - 2)) as Real;
    let target = u * maps / 4.0;
    let edges = (n * (n - 1) / 2) as Real;
    let count = |p: Real| maps * (p.powi(3) + (1.0 - p).powi(3));
    let kl = |p: Real| edges * (p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln());
    let mut sym_best = Real::INFINITY;
    for i in 0..=200_000 {
        let p = 0.5 + 0.5 * (i as Real) / 200_001.0;
        if count(p) >= target {
            sym_best = sym_best.min(kl(p));
        }
    }
    assert!(
        r.value <= sym_best + 1e-3,
        "value {} above symmetric-family minimum {sym_best}",
        r.value
    );

    // At the baseline ratio the rate is exactly zero.
    let base = rate_function_simplex(&h, n, l, 1.0, &cfg).unwrap();
    assert_eq!(base.value, 0.0);
    assert!(base.feasible);

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 120.0, "simplex run took {secs:.1}s, budget is 120s");
    println!(
        "criterion 5 PASS: N=8 two-color simplex rate {:.6} <= clique {:.6}, <= symmetric scan {:.6}, zero at u=1, in {secs:.1}s",
        r.value, clique.value, sym_best
    );
}

#[test]
fn criterion_6_rare_event_importance_sampling() {
    // Tail of the triangle count at three times its mean on six vertices:
    // the tilted estimator must agree with direct Monte Carlo inside three
    // joint standard errors, cut the variance at least fivefold, and the
    // replayed certificate must sit below the estimated log-probability.
    let nv = 6usize;
    let ne = edge_count(nv);
    let u = 3.0;
    let f = Functional::Triangle { vertices: nv };
    let mu = ProductMeasure::iid(SiteMeasure::unit_uniform(), ne).unwrap();
    let threshold = u * expected_triangle::<Real>(nv);
    let (batches, batch_size, seed) = (64usize, 4096usize, 1u64);

    let direct = mc_tail_probability(&f, &mu, threshold, batches, batch_size, seed).unwrap();

    let tilt_for = |ratio: Real| -> Vec<LinearTilt> {
        let y = (ratio / 8.0).cbrt();
        let theta = -lambda_for_mean(y).unwrap();
        vec![LinearTilt::new(vec![theta]); ne]
    };
    let is = tilted_importance_estimate(&f, &mu, &tilt_for(u), threshold, batches, batch_size, seed)
        .unwrap();
    assert!(!is.degenerate, "importance sampler degenerate: ess {}", is.ess);

    let joint_se = (direct.std_error.powi(2) + is.std_error.powi(2)).sqrt();
    let diff = (direct.p_hat - is.p_hat).abs();
    assert!(
        diff <= 3.0 * joint_se,
        "estimates disagree: direct {} vs tilted {} ({}x joint SE)",
        direct.p_hat,
        is.p_hat,
        diff / joint_se
    );
    let var_ratio = (direct.std_error / is.std_error).powi(2);
    assert!(
        var_ratio >= 5.0,
        "variance reduction only {var_ratio:.2}x, need 5x"
    );

    let rb = replay_lower_bound(&f, &mu, &tilt_for(3.4), threshold, 0.9, batches, batch_size, seed)
        .unwrap();
    assert!(rb.valid, "replay certificate invalid: gamma' {}", rb.gamma_prime_prob);
    assert!(
        rb.lower_bound <= is.p_hat.ln(),
        "certificate {} above estimated log-probability {}",
        rb.lower_bound,
        is.p_hat.ln()
    );
    println!(
        "criterion 6 PASS: rare event p~{:.3e}, agreement {:.2} joint SE, variance cut {var_ratio:.0}x, certificate {:.3} < {:.3}",
        is.p_hat,
        diff / joint_se,
        rb.lower_bound,
        is.p_hat.ln()
    );
}

#[test]
fn criterion_7_gradients_match_finite_differences() {
    // Every built-in functional: analytic site gradients against central
    // differences at 50 random interior points, 1e-6 relative.
    let mut rng = SplitMix(0xc7);
    let mut cases: Vec<(String, Functional, Vec<usize>, Real, Real)> = Vec::new();

    let n = 6;
    let coeffs: Vec<Real> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    cases.push((
        "linear".into(),
        Functional::Linear {
            coeffs: SiteVec::from_scalars(&coeffs),
        },
        vec![1; n],
        0.0,
        1.0,
    ));
    cases.push((
        "quadratic".into(),
        random_quadratic(&mut rng, n, 0.8),
        vec![1; n],
        0.0,
        1.0,
    ));
    let nv = 5;
    cases.push((
        "triangle".into(),
        Functional::Triangle { vertices: nv },
        vec![1; edge_count(nv)],
        0.0,
        1.0,
    ));
    cases.push((
        "triangle-cutoff".into(),
        Functional::TriangleCutoff {
            vertices: nv,
            k_scale: 1.5,
            level: 0.05,
            width: 0.04,
        },
        vec![1; edge_count(nv)],
        0.0,
        1.0,
    ));
    cases.push((
        "mono-hom".into(),
        Functional::MonoHom {
            pattern: PatternGraph::triangle(),
            vertices: 4,
            colors: 2,
        },
        vec![2; edge_count(4)],
        0.0,
        1.0,
    ));
    let spin = SpinSystem::curie_weiss(5, 1.1);
    cases.push((
        "spin".into(),
        Functional::Spin(spin),
        vec![1; 5],
        -1.0,
        1.0,
    ));

    let mut worst: Real = 0.0;
    let mut ramp_hits = 0usize;
    for (name, f, dims, lo, hi) in &cases {
        for _ in 0..50 {
            let mut x = SiteVec::zeros(dims);
            for v in x.data_mut() {
                *v = lo + (hi - lo) * (0.05 + 0.9 * rng.next_f64());
            }
            let grad = f.site_gradients(&x).unwrap();
            let h = 1e-6;
            for idx in 0..x.data().len() {
                let mut xp = x.clone();
                xp.data_mut()[idx] += h;
                let mut xm = x.clone();
                xm.data_mut()[idx] -= h;
                let fd = (f.value(&xp).unwrap() - f.value(&xm).unwrap()) / (2.0 * h);
                let g = grad.data()[idx];
                let rel = (fd - g).abs() / (1.0 + g.abs());
                assert!(
                    rel <= 1e-6,
                    "{name} coord {idx}: analytic {g} vs fd {fd} (rel {rel:.3e})"
                );
                worst = worst.max(rel);
                if *name == "triangle-cutoff" && g != 0.0 {
                    ramp_hits += 1;
                }
            }
        }
    }
    // The cutoff case must exercise its ramp, not just the flat plateaus.
    assert!(ramp_hits > 0, "cutoff gradients never left the plateaus");
    println!(
        "criterion 7 PASS: gradients on {} functionals x 50 points, worst relative error {worst:.3e}",
        cases.len()
    );
}

#[test]
fn criterion_8_curie_weiss_ladder_tightens() {
    // At beta = 2 the per-site mean-field gap must shrink as the system
    // grows, matching the frozen reference trajectory, and the interaction
    // smallness certificates must be exact.
    let frozen: [(usize, Real); 4] = [
        (8, 0.09090914947877526),
        (12, 0.06003578362860588),
        (16, 0.044608045567655796),
        (20, 0.035487587559217104),
    ];
    let cfg = MFConfig::default();
    let mut prev = Real::INFINITY;
    let mut gaps = Vec::new();
    for &(n, reference) in &frozen {
        let sys = SpinSystem::curie_weiss(n, 2.0);
        let mu = ProductMeasure::iid(SiteMeasure::uniform_sign(), n).unwrap();
        let report = spin_mf_value(&sys, &mu, &cfg).unwrap();
        let f = Functional::Spin(sys.clone());
        let log_z = exact_log_partition(&f, &mu).unwrap();
        let gap_per_site = (log_z - report.best.value) / n as Real;
        assert!(
            gap_per_site >= -1e-9,
            "n={n}: mean-field value above log Z"
        );
        assert!(
            (gap_per_site - reference).abs() <= 1e-4,
            "n={n}: gap/site {gap_per_site} drifted from {reference}"
        );
        assert!(
            gap_per_site <= prev + 1e-9,
            "n={n}: gap/site {gap_per_site} grew from {prev}"
        );
        prev = gap_per_site;
        gaps.push(gap_per_site);

        let cond = spin_condition_check(&sys);
        let exact_tr = (n as Real - 1.0) / (n as Real * n as Real);
        if n.is_power_of_two() {
            // 1/n is a binary fraction: the accumulation is exact.
            assert_eq!(cond.tr_a2_over_n, exact_tr, "n={n}");
        } else {
            assert!(
                (cond.tr_a2_over_n - exact_tr).abs() <= 1e-13 * exact_tr,
                "n={n}: tr(A^2)/n {} vs {exact_tr}",
                cond.tr_a2_over_n
            );
        }
        assert!(cond.sup_is_exact, "n={n}: sup certificate not exact");
    }
    println!(
        "criterion 8 PASS: beta=2 ladder gap/site {gaps:?} nonincreasing and on the frozen trajectory"
    );
}

#[test]
fn criterion_9_cli_bytes_reproduce_from_manifest() {
    use std::process::Command;
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("mc.cfg");
    std::fs::write(
        &cfg_path,
        "task = mc-tail\nn = 5\nu = 2.5\nmethod = both\nbatches = 16\nbatch_size = 1024\nseed = 7\n",
    )
    .unwrap();
    let first = tmp.path().join("first");
    let status = Command::new(env!("CARGO_BIN_EXE_mfld"))
        .args(["mc-tail", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&first)
        .args(["--jobs", "2"])
        .status()
        .unwrap();
    assert!(status.success());

    // Rerun from the manifest alone, single-threaded: bytes must match.
    let second = tmp.path().join("second");
    let status = Command::new(env!("CARGO_BIN_EXE_mfld"))
        .args(["mc-tail", "--config"])
        .arg(first.join("manifest.cfg"))
        .arg("--out")
        .arg(&second)
        .args(["--jobs", "1"])
        .status()
        .unwrap();
    assert!(status.success());

    for name in ["mc-tail.jsonl", "mc-tail.csv"] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproduced from manifest across --jobs");
    }
    println!("criterion 9 PASS: manifest rerun reproduced output bytes across thread counts");
}
