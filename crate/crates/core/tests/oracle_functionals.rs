//! Functional-layer checks: every built-in functional's value against an
//! independently coded enumeration, every gradient against central finite
//! differences, and every derivative bound against sampled values.

mod common;

use common::{fd_gradient, SplitMix};
use mfld_core::functionals::{
    derivative_bounds, edge_count, edge_index, expected_mono_hom, mono_hom_count_flat,
    DomainParams, PatternGraph, SpinSystem,
};
use mfld_core::measures::SiteMeasure;
use mfld_core::{Functional, ProductMeasure, Real, SiteVec};

fn random_unit_edges(rng: &mut SplitMix, n: usize) -> Vec<Real> {
    (0..edge_count(n))
        .map(|_| 0.05 + 0.9 * rng.next_f64())
        .collect()
}

#[test]
fn triangle_count_matches_nested_loops() {
    let mut rng = SplitMix(1);
    for n in [4usize, 6, 7] {
        let y = random_unit_edges(&mut rng, n);
        let f = Functional::Triangle { vertices: n };
        let got = f.value(&SiteVec::from_scalars(&y)).unwrap();
        let mut expect = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    expect += y[edge_index(n, i, j)]
                        * y[edge_index(n, j, k)]
                        * y[edge_index(n, i, k)];
                }
            }
        }
        assert!(
            (got - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
            "n {n}: {got} vs {expect}"
        );
    }
}

#[test]
fn mono_hom_counts_match_nested_loops() {
    let mut rng = SplitMix(2);
    let (n, l) = (5usize, 3usize);
    let data: Vec<Real> = (0..edge_count(n) * l).map(|_| rng.next_f64()).collect();
    let at = |i: usize, j: usize, s: usize| data[edge_index(n, i, j) * l + s];

    // Triangle pattern: all ordered vertex triples with distinct pair images.
    let got = mono_hom_count_flat(&PatternGraph::triangle(), n, l, &data).unwrap();
    let mut expect = 0.0;
    for q0 in 0..n {
        for q1 in 0..n {
            for q2 in 0..n {
                if q0 == q1 || q1 == q2 || q0 == q2 {
                    continue;
                }
                for s in 0..l {
                    expect += at(q0, q1, s) * at(q1, q2, s) * at(q0, q2, s);
                }
            }
        }
    }
    assert!(
        (got - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
        "triangle: {got} vs {expect}"
    );

    // Path on three vertices: middle vertex may collide with nothing except
    // its own edge endpoints; ends may coincide with each other.
    let path = PatternGraph::path(3).unwrap();
    let got = mono_hom_count_flat(&path, n, l, &data).unwrap();
    let mut expect = 0.0;
    for q0 in 0..n {
        for q1 in 0..n {
            for q2 in 0..n {
                if q0 == q1 || q1 == q2 {
                    continue;
                }
                for s in 0..l {
                    expect += at(q0, q1, s) * at(q1, q2, s);
                }
            }
        }
    }
    assert!(
        (got - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
        "path3: {got} vs {expect}"
    );
}

#[test]
fn expected_mono_hom_matches_enumeration_over_colorings() {
    // `expected_mono_hom` is the mean of the count when every host edge
    // independently receives one uniform color. Enumerate all l^E one-hot
    // colorings and average the count directly — this is an oracle that is
    // valid even when a map reuses a host edge for several pattern edges
    // (e.g. a path folding back on itself), where the count is quadratic in
    // that edge's coordinates and the centroid value no longer matches.
    for (h, name) in [
        (PatternGraph::triangle(), "triangle"),
        (PatternGraph::single_edge(), "edge"),
        (PatternGraph::path(4).unwrap(), "path4"),
        (PatternGraph::cycle(4).unwrap(), "cycle4"),
    ] {
        for (n, l) in [(4usize, 2usize), (4, 3), (5, 2)] {
            let ne = edge_count(n);
            let total = (l as u64).pow(ne as u32);
            let mut acc = 0.0;
            for code in 0..total {
                let mut data = vec![0.0 as Real; ne * l];
                let mut c = code;
                for e in 0..ne {
                    data[e * l + (c % l as u64) as usize] = 1.0;
                    c /= l as u64;
                }
                acc += mono_hom_count_flat(&h, n, l, &data).unwrap();
            }
            let avg = acc / total as Real;
            let expect: Real = expected_mono_hom(&h, n, l).unwrap();
            assert!(
                (avg - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                "{name} n={n} l={l}: enumeration mean {avg} vs expectation {expect}"
            );
        }
    }
}

#[test]
fn centroid_count_equals_expectation_for_collision_free_patterns() {
    // For the triangle and a single edge, any surviving vertex map is
    // injective on each edge pair, so no host edge is ever reused: the count
    // is multilinear in the color coordinates and its value at the centroid
    // equals the expectation over random colorings.
    for (h, name) in [
        (PatternGraph::triangle(), "triangle"),
        (PatternGraph::single_edge(), "edge"),
    ] {
        for (n, l) in [(4usize, 2usize), (5, 3), (6, 2)] {
            let data = vec![1.0 / l as Real; edge_count(n) * l];
            let count = mono_hom_count_flat(&h, n, l, &data).unwrap();
            let expect: Real = expected_mono_hom(&h, n, l).unwrap();
            assert!(
                (count - expect).abs() <= 1e-11 * (1.0 + expect.abs()),
                "{name} n={n} l={l}: centroid count {count} vs expectation {expect}"
            );
        }
    }
}

#[test]
fn spin_value_matches_hand_formula() {
    // f(x) = 1/2 sum_{i != j} A_ij <J x_i, x_j> + sum_i <h, x_i>; all-ones
    // spins under Curie-Weiss give beta (n-1) / 2.
    let n = 4;
    let beta = 1.2;
    let f = Functional::Spin(SpinSystem::curie_weiss(n, beta));
    let ones = SiteVec::from_scalars(&vec![1.0; n]);
    let got = f.value(&ones).unwrap();
    let expect = beta * (n as Real - 1.0) / 2.0;
    assert!((got - expect).abs() <= 1e-14, "{got} vs {expect}");

    // A fully explicit 2-dimensional instance summed by hand.
    let a = vec![0.0, 0.5, 0.5, 0.0];
    let j = vec![1.0, 0.25, 0.25, -0.5];
    let h = vec![0.1, -0.2];
    let sys = SpinSystem::new(2, 2, a, j, h).unwrap();
    let x0 = [0.3, -0.7];
    let x1 = [-0.4, 0.9];
    let jx1 = [
        1.0 * x1[0] + 0.25 * x1[1],
        0.25 * x1[0] + (-0.5) * x1[1],
    ];
    let pair = 0.5 * (0.5 * (x0[0] * jx1[0] + x0[1] * jx1[1]) * 2.0);
    let field = 0.1 * (x0[0] + x1[0]) - 0.2 * (x0[1] + x1[1]);
    let expect = pair + field;
    let x = SiteVec::from_rows(&[x0.to_vec(), x1.to_vec()]);
    let got = Functional::Spin(sys).value(&x).unwrap();
    assert!((got - expect).abs() <= 1e-14, "{got} vs {expect}");
}

#[test]
fn cutoff_saturates_outside_its_ramp() {
    // Convention: with N vertices and E = C(N,2) edge sites, the functional
    // evaluates E*K*smoothstep((T/(N*E) - level)/width). The normalized
    // count T/(N*E) tops out at C(N,3)/(N*E) = (N-2)/(3N) (= 0.2 for N=5),
    // so `level` must sit below that for the zero plateau to be reachable.
    let nv = 5usize;
    let ne = edge_count(nv);
    let k = 2.0;
    let (level, width) = (0.1, 0.05);
    let f = Functional::TriangleCutoff {
        vertices: nv,
        k_scale: k,
        level,
        width,
    };
    // All edges at 1: T = C(5,3) = 10, normalized 10/50 = 0.2 >= level.
    let high = SiteVec::from_scalars(&vec![1.0; ne]);
    assert_eq!(f.value(&high).unwrap(), 0.0);
    // All edges at 0: normalized 0 <= level - width, full penalty -E*K.
    let low = SiteVec::from_scalars(&vec![0.0; ne]);
    assert_eq!(f.value(&low).unwrap(), -(ne as Real) * k);
    // Ramp midpoint: constant edge weight p with C(5,3) p^3 equal to
    // (level - width/2) * N * E lands halfway down the penalty.
    let p = ((level - width / 2.0) * (nv as Real) * (ne as Real) / 10.0).cbrt();
    let mid = SiteVec::from_scalars(&vec![p; ne]);
    let got = f.value(&mid).unwrap();
    assert!(
        (got + (ne as Real) * k / 2.0).abs() < 1e-9,
        "midpoint value {got}"
    );
}

/// Test battery shared by the gradient and bound checks: builds each
/// functional with a matching domain and a generator of random in-domain
/// points.
fn battery(rng: &mut SplitMix) -> Vec<(String, Functional, DomainParams<Real>, Vec<SiteVec>)> {
    let mut out = Vec::new();

    let n = 6;
    let coeffs: Vec<Real> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    let lin_points: Vec<SiteVec> = (0..10)
        .map(|_| SiteVec::from_scalars(&(0..n).map(|_| rng.next_f64()).collect::<Vec<_>>()))
        .collect();
    out.push((
        "linear".into(),
        Functional::Linear {
            coeffs: SiteVec::from_scalars(&coeffs),
        },
        DomainParams::unit_interval(n),
        lin_points,
    ));

    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.6 * (2.0 * rng.next_f64() - 1.0);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let theta: Vec<Real> = (0..n).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
    let quad_points: Vec<SiteVec> = (0..10)
        .map(|_| SiteVec::from_scalars(&(0..n).map(|_| rng.next_f64()).collect::<Vec<_>>()))
        .collect();
    out.push((
        "quadratic".into(),
        Functional::quadratic(q, theta).unwrap(),
        DomainParams::unit_interval(n),
        quad_points,
    ));

    let nv = 5;
    let tri_points: Vec<SiteVec> = (0..10)
        .map(|_| SiteVec::from_scalars(&random_unit_edges(rng, nv)))
        .collect();
    out.push((
        "triangle".into(),
        Functional::Triangle { vertices: nv },
        DomainParams::unit_interval(edge_count(nv)),
        tri_points.clone(),
    ));

    out.push((
        "triangle-cutoff".into(),
        Functional::TriangleCutoff {
            vertices: nv,
            k_scale: 2.0,
            level: 0.3,
            width: 0.4,
        },
        DomainParams::unit_interval(edge_count(nv)),
        tri_points,
    ));

    let l = 3;
    let hom_points: Vec<SiteVec> = (0..10)
        .map(|_| {
            let rows: Vec<Vec<Real>> = (0..edge_count(nv))
                .map(|_| {
                    let mut row: Vec<Real> = (0..l).map(|_| rng.next_f64() + 0.05).collect();
                    let s: Real = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                    row
                })
                .collect();
            SiteVec::from_rows(&rows)
        })
        .collect();
    out.push((
        "mono-hom".into(),
        Functional::MonoHom {
            pattern: PatternGraph::triangle(),
            vertices: nv,
            colors: l,
        },
        DomainParams::simplex(edge_count(nv), l),
        hom_points,
    ));

    let ns = 5;
    let spin_points: Vec<SiteVec> = (0..10)
        .map(|_| {
            SiteVec::from_scalars(
                &(0..ns).map(|_| 2.0 * rng.next_f64() - 1.0).collect::<Vec<_>>(),
            )
        })
        .collect();
    let mu_sign = ProductMeasure::iid(SiteMeasure::uniform_sign(), ns).unwrap();
    out.push((
        "spin".into(),
        Functional::Spin(SpinSystem::curie_weiss(ns, 1.1)),
        DomainParams::from_product(&mu_sign),
        spin_points,
    ));

    out
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = SplitMix(7);
    for (name, f, _dom, points) in battery(&mut rng) {
        for (pi, x) in points.iter().enumerate() {
            let grad = f.site_gradients(x).unwrap();
            let flat = x.data().to_vec();
            let dims: Vec<usize> = (0..x.n_sites()).map(|i| x.dim(i)).collect();
            let value_of = |v: &[Real]| {
                let mut sv = SiteVec::zeros(&dims);
                sv.data_mut().copy_from_slice(v);
                f.value(&sv).unwrap()
            };
            let fd = fd_gradient(value_of, &flat, 1e-5);
            for (k, (&g, &d)) in grad.data().iter().zip(&fd).enumerate() {
                let scale = 1.0 + g.abs().max(d.abs());
                assert!(
                    (g - d).abs() / scale <= 1e-6,
                    "{name} point {pi} coord {k}: analytic {g} vs fd {d}"
                );
            }
        }
    }
}

#[test]
fn derivative_bounds_contain_sampled_values_and_gradients() {
    let mut rng = SplitMix(9);
    for (name, f, dom, points) in battery(&mut rng) {
        let fb = derivative_bounds(&f, &dom).unwrap();
        for x in &points {
            let v = f.value(x).unwrap();
            assert!(
                v.abs() <= fb.a * (1.0 + 1e-12) + 1e-12,
                "{name}: |f| = {} exceeds a = {}",
                v.abs(),
                fb.a
            );
            let g = f.site_gradients(x).unwrap();
            for i in 0..g.n_sites() {
                for (c, &gc) in g.site(i).iter().enumerate() {
                    assert!(
                        gc.abs() <= fb.b[i] * (1.0 + 1e-12) + 1e-12,
                        "{name}: |grad_{i},{c}| = {} exceeds b = {}",
                        gc.abs(),
                        fb.b[i]
                    );
                }
            }
        }
    }
}
