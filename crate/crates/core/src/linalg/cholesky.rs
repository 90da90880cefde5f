use serde::Serialize;

use super::{dot, SymMatrix};
use crate::error::{Error, Result};

/// Sign class of a symmetric matrix as seen by its Cholesky pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    /// Positive semi-definite with at least one pivot within tolerance of zero.
    BoundarySingular,
    Indefinite,
}

impl Definiteness {
    pub fn as_str(self) -> &'static str {
        match self {
            Definiteness::PositiveDefinite => "positive_definite",
            Definiteness::BoundarySingular => "boundary_singular",
            Definiteness::Indefinite => "indefinite",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CholeskyOutcome {
    pub definiteness: Definiteness,
    /// Lower-triangular factor (row-major, `n × n`); present only when positive definite.
    pub factor: Option<Vec<f64>>,
    /// First pivot that was not strictly positive.
    pub failed_pivot: Option<usize>,
    pub tolerance: f64,
    n: usize,
}

impl CholeskyOutcome {
    pub fn is_pd(&self) -> bool {
        self.definiteness == Definiteness::PositiveDefinite
    }

    pub fn determinant(&self) -> Option<f64> {
        let l = self.factor.as_ref()?;
        Some((0..self.n).map(|i| l[i * self.n + i].powi(2)).product())
    }

    /// Solves `L Lᵀ x = b` with the stored factor.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let l = self.factor.as_ref()?;
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - dot(&l[i * n..i * n + i], &y[..i]);
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Some(x)
    }
}

/// Pivoted-free Cholesky with semi-definite continuation.
///
/// A pivot above `1e-12 · max diagonal` is accepted. A pivot within that
/// tolerance of zero is admissible only if the rest of its Schur-complement
/// column is also negligible (as it must be for a semi-definite matrix); the
/// factorization then continues and the matrix is reported as
/// [`Definiteness::BoundarySingular`]. Anything else is indefinite.
pub fn cholesky_pd(a: &SymMatrix) -> CholeskyOutcome {
    let n = a.dim();
    let tol = a.pd_tolerance();
    let column_tol = 10.0 * (tol * a.max_diagonal().max(0.0)).sqrt();
    let mut l = vec![0.0; n * n];
    let mut failed_pivot = None;

    let indefinite = |pivot| CholeskyOutcome {
        definiteness: Definiteness::Indefinite,
        factor: None,
        failed_pivot: Some(pivot),
        tolerance: tol,
        n,
    };

    for j in 0..n {
        let d = a.get(j, j) - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
        if d > tol {
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / ljj;
            }
        } else if d < -tol {
            return indefinite(j);
        } else {
            failed_pivot.get_or_insert(j);
            for i in (j + 1)..n {
                let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if s.abs() > column_tol {
                    return indefinite(j);
                }
            }
        }
    }

    match failed_pivot {
        None => CholeskyOutcome {
            definiteness: Definiteness::PositiveDefinite,
            factor: Some(l),
            failed_pivot: None,
            tolerance: tol,
            n,
        },
        Some(j) => CholeskyOutcome {
            definiteness: Definiteness::BoundarySingular,
            factor: None,
            failed_pivot: Some(j),
            tolerance: tol,
            n,
        },
    }
}

/// Solves `A x = b` for positive definite `A`.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::input(format!(
            "right-hand side has length {}, expected {}",
            b.len(),
            a.dim()
        )));
    }
    let chol = cholesky_pd(a);
    let mut x = chol.solve(b).ok_or_else(|| {
        Error::certificate(format!(
            "matrix is not positive definite ({})",
            chol.definiteness.as_str()
        ))
    })?;
    // One step of iterative refinement.
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    if let Some(dx) = chol.solve(&r) {
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sym_eigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn an_matrix(n: usize) -> SymMatrix {
        SymMatrix::from_lower_fn(n, |i, j| match i - j {
            0 => 1.0,
            1 => -0.5,
            _ => 0.0,
        })
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        SymMatrix::from_lower_fn(n, |i, j| {
            dot(&b[i], &b[j]) + if i == j { 0.5 } else { 0.0 }
        })
    }

    #[test]
    fn two_by_two_half() {
        let a = SymMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        let c = cholesky_pd(&a);
        assert!(c.is_pd());
        let s = sym_eigen(&a).unwrap();
        assert!((s.min().unwrap() - 0.5).abs() < 1e-15);
        // L Lᵀ reconstructs A.
        let l = c.factor.unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| l[i * 2 + k] * l[j * 2 + k]).sum();
                assert!((v - a.get(i, j)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn triangle_of_halves_is_boundary() {
        let a = SymMatrix::from_lower_fn(3, |i, j| if i == j { 1.0 } else { -0.5 });
        let c = cholesky_pd(&a);
        assert_eq!(c.definiteness, Definiteness::BoundarySingular);
        assert_eq!(c.failed_pivot, Some(2));
    }

    #[test]
    fn identity_is_pd() {
        assert!(cholesky_pd(&SymMatrix::identity(4)).is_pd());
    }

    #[test]
    fn indefinite_detection() {
        let a = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(cholesky_pd(&a).definiteness, Definiteness::Indefinite);
        let b = SymMatrix::from_lower_fn(3, |i, j| if i == j { 1.0 } else { -0.7 });
        assert_eq!(cholesky_pd(&b).definiteness, Definiteness::Indefinite);
    }

    #[test]
    fn zero_matrix_is_boundary() {
        assert_eq!(
            cholesky_pd(&SymMatrix::zeros(3)).definiteness,
            Definiteness::BoundarySingular
        );
    }

    #[test]
    fn solve_identity() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_spd(&SymMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn an_all_ones_quadratic_form() {
        for (n, expected) in [(2, 4.0), (3, 10.0)] {
            let x = solve_spd(&an_matrix(n), &vec![1.0; n]).unwrap();
            let total: f64 = x.iter().sum();
            assert!((total - expected).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn solve_rejects_non_pd() {
        let a = SymMatrix::from_lower_fn(3, |i, j| if i == j { 1.0 } else { -0.5 });
        assert!(matches!(solve_spd(&a, &[1.0; 3]), Err(Error::Certificate(_))));
    }

    #[test]
    fn solve_round_trip_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for n in [1, 3, 10, 33, 64] {
            let a = random_spd(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = solve_spd(&a, &b).unwrap();
            let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&r) <= 1e-10 * norm(&b), "n={n}");
        }
    }

    #[test]
    fn agrees_with_eigen_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        for _ in 0..300 {
            let n = rng.gen_range(2..7);
            let a = SymMatrix::from_lower_fn(n, |i, j| {
                if i == j {
                    1.0
                } else {
                    -rng.gen_range(0.0..0.6)
                }
            });
            let lmin = sym_eigen(&a).unwrap().min().unwrap();
            if lmin.abs() > 10.0 * a.pd_tolerance() {
                checked += 1;
                assert_eq!(cholesky_pd(&a).is_pd(), lmin > 0.0);
            }
        }
        assert!(checked > 250);
    }
}
