use kazhdan::certificates::{
    build_certificate, distance_bound, gram_realize, hyperplane_arrangement, measured_angle_matrix,
    recursion_identity, residual_matrix_check, sharp_witness, three_subspace_bounds, AngleMatrix,
};
use kazhdan::linalg::{dot, sym_eigen};
use kazhdan::subspaces::{
    distances, friedrichs_angle, gaussian_vector, intersect, multi_angle, orthonormalize, Arrangement,
    Subspace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pd_eps(rng: &mut ChaCha8Rng, n: usize) -> AngleMatrix {
    let cap = 1.6 / (n as f64 - 1.0);
    loop {
        let eps = AngleMatrix::from_fn(n, |_, _| rng.gen_range(0.0..cap.min(0.95))).unwrap();
        if build_certificate(&eps).unwrap().is_pd() {
            return eps;
        }
    }
}

fn random_arrangement(rng: &mut ChaCha8Rng) -> Arrangement {
    let d = rng.gen_range(2..=16);
    let n = rng.gen_range(2..=5);
    // Optionally share a common subspace so the intersection is nontrivial.
    let common = if rng.gen_bool(0.3) {
        let k = rng.gen_range(1..d);
        Some(Subspace::random(rng, d, k))
    } else {
        None
    };
    let subs = (0..n)
        .map(|_| match &common {
            Some(c) => {
                let extra = rng.gen_range(1..=(d - c.rank()));
                let mut vecs = c.basis().to_vec();
                vecs.extend((0..extra).map(|_| gaussian_vector(rng, d)));
                orthonormalize(&vecs, d).unwrap()
            }
            None => {
                let r = rng.gen_range(1..=d);
                Subspace::random(rng, d, r)
            }
        })
        .collect();
    Arrangement::new(subs).unwrap()
}

#[test]
fn soundness_on_random_arrangements() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pd_cases = 0;
    for _ in 0..1500 {
        let arr = random_arrangement(&mut rng);
        let eps = measured_angle_matrix(&arr).unwrap();
        let cert = build_certificate(&eps).unwrap();
        if !cert.is_pd() {
            continue;
        }
        pd_cases += 1;
        let n = arr.len();
        let measured = multi_angle(&arr).unwrap();
        assert!(measured.cosine <= cert.cosine_upper_bound(n).unwrap() + 1e-8);
        for _ in 0..10 {
            let v = gaussian_vector(&mut rng, arr.ambient_dim());
            let dist = distances(&arr, &v).unwrap();
            let bound = distance_bound(&eps, &dist.d).unwrap();
            assert!(dist.d0 * dist.d0 <= bound + 1e-9);
            assert!(residual_matrix_check(&eps, dist.d0, &dist.d).unwrap(), "d0²={} bound={bound}", dist.d0 * dist.d0);
        }
    }
    assert!(pd_cases > 300, "only {pd_cases} positive definite cases");
}

#[test]
fn hyperplane_arrangements_are_sharp() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..60 {
        let n = rng.gen_range(2..=6);
        let eps = random_pd_eps(&mut rng, n);
        let cert = build_certificate(&eps).unwrap();
        let arr = hyperplane_arrangement(&eps).unwrap();
        if n >= 2 {
            for i in 0..n {
                for j in 0..i {
                    let c = friedrichs_angle(&arr.subspaces()[i], &arr.subspaces()[j]).unwrap().cosine;
                    assert!((c - eps.get(i, j)).abs() < 1e-8);
                }
            }
        }
        let measured = multi_angle(&arr).unwrap().cosine;
        assert!((measured - cert.cosine_upper_bound(n).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn gram_realization_reproduces_the_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.gen_range(2..=7);
        let eps = random_pd_eps(&mut rng, n);
        let w = gram_realize(&eps).unwrap();
        assert_eq!(w[0].len(), n);
        for i in 0..n {
            for j in 0..n {
                let a = if i == j { 1.0 } else { -eps.get(i, j) };
                assert!((dot(&w[i], &w[j]) - a).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn sharp_witness_hits_prescribed_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let n = rng.gen_range(2..=6);
        let eps = random_pd_eps(&mut rng, n);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let v = sharp_witness(&eps, &d).unwrap();
        let arr = hyperplane_arrangement(&eps).unwrap();
        let dist = distances(&arr, &v).unwrap();
        for (x, y) in dist.d.iter().zip(&d) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(intersect(&arr).rank(), 0);
        assert!((dot(&v, &v) - distance_bound(&eps, &d).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn realized_arrangements_satisfy_the_distance_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..100 {
        let n = rng.gen_range(2..=5);
        let eps = random_pd_eps(&mut rng, n);
        let arr = hyperplane_arrangement(&eps).unwrap();
        for _ in 0..10 {
            let v = gaussian_vector(&mut rng, n);
            let dist = distances(&arr, &v).unwrap();
            assert!(dist.d0 * dist.d0 <= distance_bound(&eps, &dist.d).unwrap() + 1e-9);
        }
    }
}

/// Three subspaces sharing pieces so that pairwise intersections are nonzero.
fn random_triple(rng: &mut ChaCha8Rng) -> Vec<Subspace> {
    let d = rng.gen_range(4..=9);
    let pieces: Vec<Vec<f64>> = (0..d).map(|_| gaussian_vector(rng, d)).collect();
    (0..3)
        .map(|_| {
            let k = rng.gen_range(2..d);
            let mut idx: Vec<usize> = (0..d).collect();
            for i in 0..k {
                let j = rng.gen_range(i..d);
                idx.swap(i, j);
            }
            let mut vecs: Vec<Vec<f64>> = idx[..k].iter().map(|&i| pieces[i].clone()).collect();
            vecs.push(gaussian_vector(rng, d));
            orthonormalize(&vecs, d).unwrap()
        })
        .collect()
}

fn meet(a: &Subspace, b: &Subspace) -> Subspace {
    intersect(&Arrangement::new(vec![a.clone(), b.clone()]).unwrap())
}

#[test]
fn three_subspace_lemmas_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut checked = 0;
    for _ in 0..400 {
        let v = random_triple(&mut rng);
        let cos = |a: &Subspace, b: &Subspace| friedrichs_angle(a, b).map(|r| r.cosine);
        let e12 = cos(&v[0], &v[1]).unwrap().max(0.0);
        let e13 = cos(&v[0], &v[2]).unwrap().max(0.0);
        let e23 = cos(&v[1], &v[2]).unwrap().max(0.0);
        let b = three_subspace_bounds(e12, e13, e23).unwrap();
        let sum12 = v[0].sum(&v[1]).unwrap();
        if let Ok(c) = cos(&sum12, &v[2]) {
            assert!(c.max(0.0).powi(2) <= b.cos2_sum_plane + 1e-9);
        }
        let m12 = meet(&v[0], &v[1]);
        if !m12.is_zero() {
            let c = cos(&m12, &v[2]).unwrap();
            assert!(c.max(0.0).powi(2) <= b.cos2_sum_plane + 1e-9);
        }
        let s13 = v[0].sum(&v[2]).unwrap();
        let s23 = v[1].sum(&v[2]).unwrap();
        let c = cos(&s13, &s23).unwrap();
        assert!(c <= b.cos_pair_sum + 1e-9);
        let (m13, m23) = (meet(&v[0], &v[2]), meet(&v[1], &v[2]));
        if !m13.is_zero() && !m23.is_zero() {
            checked += 1;
            let c = cos(&m13, &m23).unwrap();
            assert!(c <= b.cos_pair_sum + 1e-9, "{c} > {}", b.cos_pair_sum);
        }
    }
    assert!(checked > 100);
}

proptest! {
    #[test]
    fn raising_one_entry_never_raises_lambda_min(
        seed in any::<u64>(), n in 2usize..7, bump in 0.0f64..0.5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = AngleMatrix::from_fn(n, |_, _| rng.gen_range(0.0..0.5)).unwrap();
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        prop_assume!(i != j);
        let mut rows = eps.rows();
        let e = (rows[i][j] + bump).min(1.0);
        rows[i][j] = e;
        rows[j][i] = e;
        let raised = AngleMatrix::new(&rows).unwrap();
        let l0 = sym_eigen(&eps.matrix()).unwrap().min().unwrap();
        let l1 = sym_eigen(&raised.matrix()).unwrap().min().unwrap();
        prop_assert!(l1 <= l0 + 1e-12);
    }

    #[test]
    fn recursion_matches_direct_form(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_pd_eps(&mut rng, n);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let (direct, reduced) = recursion_identity(&eps, &d).unwrap();
        prop_assert!((direct - reduced).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn certificate_invariants(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_pd_eps(&mut rng, n);
        let c = build_certificate(&eps).unwrap();
        let expected = (1.0 - c.lambda_min / (n as f64 - 1.0)).acos();
        prop_assert!((c.angle_lower_bound.unwrap() - expected).abs() < 1e-15);
        prop_assert!(c.m.unwrap() >= n as f64 - 1e-9);
    }
}
