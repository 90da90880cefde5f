//! The ε-matrix certificate for multi-subspace angles.
//!
//! Given bounds `cos⟨Vᵢ|Vⱼ⟩ ≤ εᵢⱼ`, the matrix `A` with unit diagonal and
//! off-diagonal `−εᵢⱼ` controls the arrangement: if `A` is positive definite
//! with smallest eigenvalue `λ`, then `cos⟨V₁|V₂,…,Vₙ⟩ ≤ 1 − λ/(n − 1)` and
//! `d₀(v)² ≤ dᵀA⁻¹d` for every `v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_pd, dot, solve_spd, sym_eigen, Definiteness, SymMatrix};
use crate::subspaces::{friedrichs_angle, multi_angle, orthocomplement, orthonormalize, AngleResult, Arrangement};

// Eigenvalues of A below this are treated as zero when realizing Gram vectors.
const RANK_TOLERANCE: f64 = 1e-10;

/// A measured multi-angle cosine above `1 − DEGENERATE_THRESHOLD` is reported
/// as a zero angle.
pub const DEGENERATE_THRESHOLD: f64 = 1e-6;

/// Symmetric array of pairwise cosine bounds `εᵢⱼ ∈ [0, 1]` with zero diagonal.
///
/// The value `1` is admitted so that boundary data such as `I₂(∞)` can be
/// represented; [`build_certificate`] itself requires every entry below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMatrix {
    n: usize,
    eps: Vec<f64>,
}

#[derive(Deserialize)]
struct EpsFile {
    n: usize,
    eps: Vec<Vec<f64>>,
}

impl AngleMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::input("angle matrix must be nonempty"));
        }
        let mut eps = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!("eps row {i} has length {}, expected {n}", row.len())));
            }
            eps.extend_from_slice(row);
        }
        for i in 0..n {
            if eps[i * n + i] != 0.0 {
                return Err(Error::input(format!("eps diagonal entry {i} must be 0")));
            }
            for j in 0..n {
                let e = eps[i * n + j];
                if !(0.0..=1.0).contains(&e) {
                    return Err(Error::input(format!("eps({i},{j}) = {e} outside [0, 1]")));
                }
                if e != eps[j * n + i] {
                    return Err(Error::input(format!("eps is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, eps })
    }

    /// Builds from `f(i, j)` for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let e = f(i, j);
                rows[i][j] = e;
                rows[j][i] = e;
            }
        }
        Self::new(&rows)
    }

    pub fn uniform(n: usize, e: f64) -> Result<Self> {
        Self::from_fn(n, |_, _| e)
    }

    /// Parses `{"n": k, "eps": [[..], ..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: EpsFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("eps JSON: {e}")))?;
        if file.eps.len() != file.n {
            return Err(Error::input(format!("n = {} but eps has {} rows", file.n, file.eps.len())));
        }
        Self::new(&file.eps)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.eps[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.eps.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// The certificate matrix `A = I − E`.
    pub fn matrix(&self) -> SymMatrix {
        SymMatrix::from_lower_fn(self.n, |i, j| if i == j { 1.0 } else { -self.get(i, j) })
    }

    /// Off-diagonal entries multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_fn(self.n, |i, j| s * self.get(i, j))
    }

    fn max_entry(&self) -> f64 {
        self.eps.iter().copied().fold(0.0, f64::max)
    }
}

/// Outcome of [`build_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub status: Definiteness,
    pub lambda_min: f64,
    /// `arccos(1 − λ_min/(n − 1))`; present only when positive definite.
    #[serde(rename = "angle_lower_bound_rad")]
    pub angle_lower_bound: Option<f64>,
    /// `1ᵀA⁻¹1`; present only when positive definite.
    #[serde(rename = "M")]
    pub m: Option<f64>,
}

impl Certificate {
    pub fn is_pd(&self) -> bool {
        self.status == Definiteness::PositiveDefinite
    }

    /// Upper bound on `cos⟨V₁|V₂,…,Vₙ⟩` for an arrangement of `n` subspaces.
    pub fn cosine_upper_bound(&self, n: usize) -> Option<f64> {
        self.is_pd().then(|| 1.0 - self.lambda_min / (n as f64 - 1.0))
    }
}

pub fn build_certificate(eps: &AngleMatrix) -> Result<Certificate> {
    let n = eps.n();
    if n < 2 {
        return Err(Error::input("a certificate needs at least two subspaces"));
    }
    if eps.max_entry() >= 1.0 {
        return Err(Error::input("eps entries must lie in [0, 1)"));
    }
    let a = eps.matrix();
    let status = cholesky_pd(&a).definiteness;
    let lambda_min = sym_eigen(&a)?.min().expect("nonempty spectrum");
    if status != Definiteness::PositiveDefinite {
        return Ok(Certificate {
            status,
            lambda_min,
            angle_lower_bound: None,
            m: None,
        });
    }
    let cos = (1.0 - lambda_min / (n as f64 - 1.0)).clamp(-1.0, 1.0);
    let x = solve_spd(&a, &vec![1.0; n])?;
    Ok(Certificate {
        status,
        lambda_min,
        angle_lower_bound: Some(cos.acos()),
        m: Some(x.iter().sum()),
    })
}

fn require_pd(eps: &AngleMatrix) -> Result<SymMatrix> {
    let a = eps.matrix();
    let chol = cholesky_pd(&a);
    if !chol.is_pd() {
        return Err(Error::certificate(format!(
            "certificate matrix is {}",
            chol.definiteness.as_str()
        )));
    }
    Ok(a)
}

/// `dᵀA⁻¹d`, the bound on the squared distance to the intersection.
pub fn distance_bound(eps: &AngleMatrix, d: &[f64]) -> Result<f64> {
    if d.len() != eps.n() {
        return Err(Error::input(format!("expected {} distances, got {}", eps.n(), d.len())));
    }
    if d.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::input("distances must be nonnegative"));
    }
    let a = require_pd(eps)?;
    let x = solve_spd(&a, d)?;
    Ok(dot(d, &x))
}

/// Whether the bordered matrix `[[d₀², dᵀ], [d, A]]` fails to be positive
/// definite, which is equivalent to `d₀² ≤ dᵀA⁻¹d` when `A` is.
///
/// The border is factored last, so the final Cholesky pivot is exactly the
/// Schur complement `d₀² − dᵀA⁻¹d` and equality cases land on the boundary.
pub fn residual_matrix_check(eps: &AngleMatrix, d0: f64, d: &[f64]) -> Result<bool> {
    let n = eps.n();
    if d.len() != n {
        return Err(Error::input(format!("expected {n} distances, got {}", d.len())));
    }
    require_pd(eps)?;
    let b = SymMatrix::from_lower_fn(n + 1, |i, j| match (i, j) {
        (i, j) if i == n && j == n => d0 * d0,
        (i, j) if i == n => d[j],
        (i, j) if i == j => 1.0,
        (i, j) => -eps.get(i, j),
    });
    Ok(!cholesky_pd(&b).is_pd())
}

/// The two three-subspace bounds and the feasibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSubspaceBounds {
    /// Bound on `cos²⟨V₁+V₂|V₃⟩` and `cos²⟨V₁∩V₂|V₃⟩`.
    pub cos2_sum_plane: f64,
    /// Bound on `cos⟨V₁+V₃|V₂+V₃⟩` and `cos⟨V₁∩V₃|V₂∩V₃⟩`.
    pub cos_pair_sum: f64,
    /// `ε₁₂² + ε₂₃² + ε₁₃² + 2ε₁₂ε₂₃ε₁₃ < 1`.
    pub feasible: bool,
}

fn check_unit_interval(values: &[f64]) -> Result<()> {
    for &e in values {
        if !(0.0..1.0).contains(&e) {
            return Err(Error::input(format!("eps = {e} outside [0, 1)")));
        }
    }
    Ok(())
}

pub fn three_subspace_bounds(e12: f64, e13: f64, e23: f64) -> Result<ThreeSubspaceBounds> {
    check_unit_interval(&[e12, e13, e23])?;
    let q = e13 * e13 + e23 * e23 + 2.0 * e12 * e23 * e13;
    Ok(ThreeSubspaceBounds {
        cos2_sum_plane: q / (1.0 - e12 * e12),
        cos_pair_sum: (e12 + e13 * e23) / ((1.0 - e13 * e13).sqrt() * (1.0 - e23 * e23).sqrt()),
        feasible: q + e12 * e12 < 1.0,
    })
}

/// `λ_min(A_ε)/2`, a lower bound on `1 − cos⟨V₁|V₂,V₃⟩`.
pub fn corollary3_bound(e12: f64, e13: f64, e23: f64) -> Result<f64> {
    if !three_subspace_bounds(e12, e13, e23)?.feasible {
        return Err(Error::certificate("triple is not feasible"));
    }
    let eps = AngleMatrix::new(&[vec![0.0, e12, e13], vec![e12, 0.0, e23], vec![e13, e23, 0.0]])?;
    Ok(sym_eigen(&eps.matrix())?.min().expect("3x3") / 2.0)
}

/// Unit vectors `wᵢ` with `⟨wᵢ, wⱼ⟩ = −εᵢⱼ`, in dimension `rank(A)`.
pub fn gram_realize(eps: &AngleMatrix) -> Result<Vec<Vec<f64>>> {
    realize(&eps.matrix(), false)
}

/// Rows of `QΛ^{1/2}`. With `keep_all` every coordinate is kept (zero columns
/// for the kernel), otherwise only those of nonzero eigenvalues.
fn realize(a: &SymMatrix, keep_all: bool) -> Result<Vec<Vec<f64>>> {
    if cholesky_pd(a).definiteness == Definiteness::Indefinite {
        return Err(Error::certificate("indefinite matrix has no Gram realization"));
    }
    let spec = sym_eigen(a)?;
    let q = spec.eigenvectors.as_ref().expect("eigenvectors requested");
    let cols: Vec<usize> = (0..a.dim())
        .filter(|&k| keep_all || spec.eigenvalues[k] > RANK_TOLERANCE)
        .collect();
    let vectors = (0..a.dim())
        .map(|i| {
            let mut w: Vec<f64> = cols
                .iter()
                .map(|&k| q[k][i] * spec.eigenvalues[k].max(0.0).sqrt())
                .collect();
            let len = dot(&w, &w).sqrt();
            if len > 0.0 {
                w.iter_mut().for_each(|x| *x /= len);
            }
            w
        })
        .collect();
    Ok(vectors)
}

fn hyperplanes(w: &[Vec<f64>]) -> Result<Arrangement> {
    let d = w.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::certificate("realization is zero-dimensional"));
    }
    let planes = w
        .iter()
        .map(|wi| orthonormalize(std::slice::from_ref(wi), d).map(|l| orthocomplement(&l)))
        .collect::<Result<Vec<_>>>()?;
    Arrangement::new(planes)
}

/// The hyperplanes `wᵢ^⊥` of the Gram realization.
pub fn hyperplane_arrangement(eps: &AngleMatrix) -> Result<Arrangement> {
    hyperplanes(&gram_realize(eps)?)
}

/// One member of a family of arrangements degenerating toward a zero angle.
#[derive(Debug, Clone)]
pub struct DegenerateMember {
    pub t: f64,
    /// Factor applied to every off-diagonal ε.
    pub scale: f64,
    /// `λ_min` of the scaled certificate matrix, `1 − t` by construction.
    pub lambda_min: f64,
    pub arrangement: Arrangement,
    pub measured: AngleResult,
    /// The boundary was reached or the measured cosine exceeds `1 − 1e-6`.
    pub degenerate: bool,
}

/// Scales the off-diagonal entries of a non-positive-definite `ε` by
/// `s(t) = t / λ_max(E)`, so that `λ_min(I − s(t)E) = 1 − t`, and realizes the
/// result as a hyperplane arrangement in `Rⁿ`.
///
/// Pairwise cosines of the member are `s(t)·εᵢⱼ ≤ εᵢⱼ`, and the measured
/// multi-angle cosine `1 − (1 − t)/(n − 1)` tends to 1 as `t → 1`.
pub fn degenerate_family(eps: &AngleMatrix, t: f64) -> Result<DegenerateMember> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::input(format!("t = {t} outside (0, 1]")));
    }
    if eps.n() < 2 {
        return Err(Error::input("a family needs at least two subspaces"));
    }
    if cholesky_pd(&eps.matrix()).is_pd() {
        return Err(Error::input("eps is already positive definite; nothing to degenerate"));
    }
    let e = SymMatrix::from_lower_fn(eps.n(), |i, j| if i == j { 0.0 } else { eps.get(i, j) });
    let top = sym_eigen(&e)?.max().expect("nonempty");
    let scale = t / top;
    let scaled = eps.scaled(scale)?;
    let a = scaled.matrix();
    let lambda_min = sym_eigen(&a)?.min().expect("nonempty");
    let arrangement = hyperplanes(&realize(&a, true)?)?;
    let measured = multi_angle(&arrangement)?;
    let degenerate = t == 1.0 || measured.cosine > 1.0 - DEGENERATE_THRESHOLD;
    Ok(DegenerateMember {
        t,
        scale,
        lambda_min,
        arrangement,
        measured,
        degenerate,
    })
}

/// A point whose distances to the hyperplanes `wᵢ^⊥` are exactly `dᵢ` and
/// whose squared norm is `dᵀA⁻¹d`: `v = Σ (A⁻¹d)ᵢ wᵢ`.
pub fn sharp_witness(eps: &AngleMatrix, d: &[f64]) -> Result<Vec<f64>> {
    if d.len() != eps.n() {
        return Err(Error::input(format!("expected {} distances, got {}", eps.n(), d.len())));
    }
    if d.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::input("distances must be positive"));
    }
    let a = require_pd(eps)?;
    let x = solve_spd(&a, d)?;
    let w = gram_realize(eps)?;
    let dim = w[0].len();
    let mut v = vec![0.0; dim];
    for (xi, wi) in x.iter().zip(&w) {
        crate::linalg::axpy(*xi, wi, &mut v);
    }
    Ok(v)
}

/// [`sharp_witness`] for three subspaces, rejecting infeasible triples.
pub fn sharp_witness_3d(eps: &AngleMatrix, d: &[f64]) -> Result<Vec<f64>> {
    if eps.n() != 3 {
        return Err(Error::input("expected a 3×3 eps matrix"));
    }
    if !three_subspace_bounds(eps.get(0, 1), eps.get(0, 2), eps.get(1, 2))?.feasible {
        return Err(Error::certificate("triple is not feasible"));
    }
    sharp_witness(eps, d)
}

/// Pairwise Friedrichs cosines of an arrangement, clamped below at 0.
pub fn measured_angle_matrix(arr: &Arrangement) -> Result<AngleMatrix> {
    let n = arr.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let c = friedrichs_angle(&arr.subspaces()[i], &arr.subspaces()[j])?.cosine.max(0.0);
            rows[i][j] = c;
            rows[j][i] = c;
        }
    }
    AngleMatrix::new(&rows)
}

/// The `n → n − 1` reduction: `A′ = D Ã D`, `d′ = D d̃`, where `Ã` has
/// diagonal `1 − εᵢₙ²` and off-diagonal `−εᵢⱼ − εᵢₙεⱼₙ`, `d̃ = d_{<n} + εₙ dₙ`
/// and `D = diag(1/√(1 − εᵢₙ²))`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub a_prime: SymMatrix,
    pub d_prime: Vec<f64>,
    pub d_last: f64,
}

pub fn reduce_last(eps: &AngleMatrix, d: &[f64]) -> Result<Reduction> {
    let n = eps.n();
    if n < 2 {
        return Err(Error::input("reduction needs n ≥ 2"));
    }
    if d.len() != n {
        return Err(Error::input(format!("expected {n} distances, got {}", d.len())));
    }
    let last = n - 1;
    let en: Vec<f64> = (0..last).map(|i| eps.get(i, last)).collect();
    if en.iter().any(|&e| e >= 1.0) {
        return Err(Error::input("reduction needs eps entries below 1"));
    }
    let scale: Vec<f64> = en.iter().map(|e| 1.0 / (1.0 - e * e).sqrt()).collect();
    let a_prime = SymMatrix::from_lower_fn(last, |i, j| {
        let tilde = if i == j {
            1.0 - en[i] * en[i]
        } else {
            -eps.get(i, j) - en[i] * en[j]
        };
        scale[i] * tilde * scale[j]
    });
    let d_prime = (0..last).map(|i| scale[i] * (d[i] + en[i] * d[last])).collect();
    Ok(Reduction {
        a_prime,
        d_prime,
        d_last: d[last],
    })
}

/// `(dᵀA⁻¹d, d′ᵀA′⁻¹d′ + dₙ²)`; equal whenever `A` is positive definite.
pub fn recursion_identity(eps: &AngleMatrix, d: &[f64]) -> Result<(f64, f64)> {
    let direct = distance_bound(eps, d)?;
    let r = reduce_last(eps, d)?;
    let x = solve_spd(&r.a_prime, &r.d_prime)?;
    Ok((direct, dot(&r.d_prime, &x) + r.d_last * r.d_last))
}
