use kazhdan::linalg::{dot, norm, SymMatrix};
use kazhdan::subspaces::{
    distances, friedrichs_angle, gaussian_vector, intersect, multi_angle, orthocomplement,
    orthonormalize, projection_to_intersection_bound, random_orthogonal, sigma_spectrum,
    Arrangement, Subspace, CLUSTER_RELATIVE_TOLERANCE,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Friedrichs cosine from the singular values of `B₁ᵀB₂` (principal angles).
fn svd_cosine(v1: &Subspace, v2: &Subspace) -> f64 {
    let (r1, r2) = (v1.rank(), v2.rank());
    let m = DMatrix::from_fn(r1, r2, |i, j| dot(&v1.basis()[i], &v2.basis()[j]));
    let sv = m.singular_values();
    let cut = 1.0 - 2.0 * CLUSTER_RELATIVE_TOLERANCE;
    let mut best = -1.0_f64;
    if r1 != r2 {
        best = 0.0;
    }
    for &s in sv.iter() {
        if s < cut {
            best = best.max(s);
        }
    }
    best
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Subspace, Subspace) {
    let d = rng.gen_range(1..=12);
    let r1 = rng.gen_range(1..=d);
    let r2 = rng.gen_range(1..=d);
    (Subspace::random(rng, d, r1), Subspace::random(rng, d, r2))
}

/// A pair that shares a random common subspace.
fn random_intersecting_pair(rng: &mut ChaCha8Rng) -> (Subspace, Subspace) {
    let d = rng.gen_range(3..=12);
    let k = rng.gen_range(1..d);
    let common = Subspace::random(rng, d, k);
    let extra = |rng: &mut ChaCha8Rng| {
        let m = rng.gen_range(0..=(d - k).min(3));
        let mut vecs = common.basis().to_vec();
        vecs.extend((0..m).map(|_| gaussian_vector(rng, d)));
        orthonormalize(&vecs, d).unwrap()
    };
    (extra(rng), extra(rng))
}

fn w0_offset(v1: &Subspace, v2: &Subspace, v: &[f64]) -> f64 {
    let arr = Arrangement::new(vec![v1.clone(), v2.clone()]).unwrap();
    let w1 = v1.project(v);
    let w0 = intersect(&arr).project(v);
    norm(&w1.iter().zip(&w0).map(|(a, b)| a - b).collect::<Vec<_>>())
}

#[test]
fn pair_cosine_matches_svd_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..600 {
        let (a, b) = if k % 3 == 0 {
            random_intersecting_pair(&mut rng)
        } else {
            random_pair(&mut rng)
        };
        let got = friedrichs_angle(&a, &b).unwrap().cosine;
        let want = svd_cosine(&a, &b);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn rotations_of_a_plane_about_a_line_meet_in_that_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let axis = [0.0, 0.0, 1.0];
    for _ in 0..20 {
        let planes: Vec<Subspace> = (0..3)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                orthonormalize(&[vec![t.cos(), t.sin(), 0.0], axis.to_vec()], 3).unwrap()
            })
            .collect();
        let q = random_orthogonal(&mut rng, 3);
        let arr = Arrangement::new(planes).unwrap().transform(&q).unwrap();
        let i = intersect(&arr);
        assert_eq!(i.rank(), 1);
        assert!(i.contains(&q.mul_vec(&axis), 1e-9));
        for s in arr.subspaces() {
            assert!(s.contains(&i.basis()[0], 1e-9));
        }
    }
}

#[test]
fn double_complement_respans() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v = Subspace::random(&mut rng, 7, 3);
        let c = orthocomplement(&v);
        assert_eq!(c.rank(), 4);
        for a in v.basis() {
            for b in c.basis() {
                assert!(dot(a, b).abs() < 1e-10);
            }
        }
        assert!(orthocomplement(&c).projector_distance(&v) <= 1e-9);
    }
}

#[test]
fn coordinate_hyperplanes_meet_in_zero() {
    for n in 2..8 {
        let planes: Vec<Subspace> = (0..n)
            .map(|i| orthocomplement(&Subspace::coordinate(n, &[i]).unwrap()))
            .collect();
        assert_eq!(intersect(&Arrangement::new(planes).unwrap()).rank(), 0);
    }
}

#[test]
fn projection_bound_is_tight_in_the_plane_of_normals() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let d = rng.gen_range(3..8);
        let n1 = gaussian_vector(&mut rng, d);
        let n2 = gaussian_vector(&mut rng, d);
        let v1 = orthocomplement(&orthonormalize(&[n1.clone()], d).unwrap());
        let v2 = orthocomplement(&orthonormalize(&[n2.clone()], d).unwrap());
        let mut best_gap = f64::INFINITY;
        for k in 0..720 {
            let t = k as f64 * std::f64::consts::PI / 360.0;
            let v: Vec<f64> = n1.iter().zip(&n2).map(|(a, b)| t.cos() * a + t.sin() * b).collect();
            let bound = projection_to_intersection_bound(&v1, &v2, &v).unwrap();
            let measured = w0_offset(&v1, &v2, &v);
            assert!(bound >= measured - 1e-9);
            best_gap = best_gap.min((bound - measured) / norm(&v));
        }
        assert!(best_gap < 1e-9, "{best_gap}");
    }
}

fn pair_strategy() -> impl Strategy<Value = (Subspace, Subspace)> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, meet)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if meet {
            random_intersecting_pair(&mut rng)
        } else {
            random_pair(&mut rng)
        }
    })
}

fn arrangement_strategy() -> impl Strategy<Value = Arrangement> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=10);
        let n = rng.gen_range(2..=5);
        let subs = (0..n)
            .map(|_| {
                let r = rng.gen_range(1..=d);
                Subspace::random(&mut rng, d, r)
            })
            .collect();
        Arrangement::new(subs).unwrap()
    })
}

proptest! {
    #[test]
    fn angle_is_exactly_symmetric((a, b) in pair_strategy()) {
        prop_assert_eq!(friedrichs_angle(&a, &b).unwrap(), friedrichs_angle(&b, &a).unwrap());
    }

    #[test]
    fn angles_are_orthogonally_invariant(arr in arrangement_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthogonal(&mut rng, arr.ambient_dim());
        let moved = arr.transform(&q).unwrap();
        let a = multi_angle(&arr).unwrap();
        let b = multi_angle(&moved).unwrap();
        prop_assert!((a.angle - b.angle).abs() <= 1e-9);
        prop_assert_eq!(a.intersection_dim, b.intersection_dim);
    }

    #[test]
    fn orthocomplements_have_the_same_angle((a, b) in pair_strategy()) {
        let (ca, cb) = (orthocomplement(&a), orthocomplement(&b));
        prop_assume!(!ca.is_zero() && !cb.is_zero());
        let x = friedrichs_angle(&a, &b).unwrap().angle;
        let y = friedrichs_angle(&ca, &cb).unwrap().angle;
        prop_assert!((x - y).abs() <= 1e-8, "{} vs {}", x, y);
    }

    #[test]
    fn pair_spectrum_is_symmetric_about_one((a, b) in pair_strategy()) {
        let arr = Arrangement::new(vec![a, b]).unwrap();
        let s = sigma_spectrum(&arr).eigenvalues;
        let m = s.len();
        for k in 0..m {
            prop_assert!((s[k] + s[m - 1 - k] - 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn spectrum_range_and_intersection_multiplicity(arr in arrangement_strategy()) {
        let n = arr.len() as f64;
        let s = sigma_spectrum(&arr).eigenvalues;
        prop_assert!(s.iter().all(|&l| (-1e-9..=n + 1e-9).contains(&l)));
        let res = multi_angle(&arr).unwrap();
        prop_assert_eq!(res.intersection_dim, intersect(&arr).rank());
        prop_assert!((res.cosine - res.angle.cos()).abs() <= 1e-12);
    }

    #[test]
    fn multi_angle_distance_estimate(arr in arrangement_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = multi_angle(&arr).unwrap();
        let n = arr.len() as f64;
        for _ in 0..5 {
            let v = gaussian_vector(&mut rng, arr.ambient_dim());
            let dist = distances(&arr, &v).unwrap();
            let sum: f64 = dist.d.iter().map(|x| x * x).sum();
            prop_assert!(dist.d0 * dist.d0 * (n - 1.0) * (1.0 - res.cosine) <= sum + 1e-9);
        }
    }

    #[test]
    fn two_subspace_estimates((a, b) in pair_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = friedrichs_angle(&a, &b).unwrap();
        let eps = res.cosine;
        let arr = Arrangement::new(vec![a.clone(), b.clone()]).unwrap();
        let sum = a.sum(&b).unwrap();
        let v = gaussian_vector(&mut rng, a.ambient_dim());
        let dist = distances(&arr, &v).unwrap();
        let (d0, d1, d2) = (dist.d0, dist.d[0], dist.d[1]);
        // Weak estimate.
        prop_assert!((1.0 - eps) * d0 * d0 <= d1 * d1 + d2 * d2 + 1e-9);
        if eps > -1.0 {
            // Matrix estimate on distances.
            let q = (d1 * d1 + 2.0 * eps * d1 * d2 + d2 * d2) / (1.0 - eps * eps);
            prop_assert!(d0 * d0 <= q + 1e-9, "{} > {}", d0 * d0, q);
            // Matrix estimate on projection norms.
            let (p1, p2) = (norm(&a.project(&v)), norm(&b.project(&v)));
            let p12 = norm(&sum.project(&v));
            let q = (p1 * p1 + 2.0 * eps * p1 * p2 + p2 * p2) / (1.0 - eps * eps);
            prop_assert!(p12 * p12 <= q + 1e-9);
        } else {
            prop_assert!((d0 - d1).abs() <= 1e-12 && (d1 - d2).abs() <= 1e-12);
        }
        let bound = projection_to_intersection_bound(&a, &b, &v).unwrap();
        prop_assert!(bound >= w0_offset(&a, &b, &v) - 1e-9);
    }
}

#[test]
fn equal_subspaces_collapse_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let d = rng.gen_range(2..9);
        let r = rng.gen_range(1..d);
        let v = Subspace::random(&mut rng, d, r);
        let q = random_orthogonal(&mut rng, r);
        // Same subspace, different basis.
        let b2: Vec<Vec<f64>> = (0..r)
            .map(|i| {
                let mut out = vec![0.0; d];
                for j in 0..r {
                    for k in 0..d {
                        out[k] += q.get(i, j) * v.basis()[j][k];
                    }
                }
                out
            })
            .collect();
        let w = orthonormalize(&b2, d).unwrap();
        let arr = Arrangement::new(vec![v, w]).unwrap();
        let p = gaussian_vector(&mut rng, d);
        let dist = distances(&arr, &p).unwrap();
        assert!((dist.d0 - dist.d[0]).abs() <= 1e-12);
        assert!((dist.d[0] - dist.d[1]).abs() <= 1e-12);
    }
}

#[test]
fn sigma_trace_equals_projector_sum_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let d = rng.gen_range(2..8);
        let subs: Vec<Subspace> = (0..3)
            .map(|_| {
                let r = rng.gen_range(1..=d);
                Subspace::random(&mut rng, d, r)
            })
            .collect();
        let arr = Arrangement::new(subs).unwrap();
        let s = sigma_spectrum(&arr).eigenvalues;
        let ambient: SymMatrix = arr.projector_sum();
        let trace: f64 = s.iter().sum();
        assert!((trace - ambient.trace()).abs() < 1e-10);
    }
}
