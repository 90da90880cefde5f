//! Subspaces of `Rᵈ`, arrangements of them, and Friedrichs angles computed
//! from the spectrum of `Σ = ssum* ∘ ssum`.
//!
//! For an arrangement `(V₁, …, Vₙ)` the addition map `ssum: ⊕Vᵢ → Rᵈ` sends
//! `(x₁, …, xₙ)` to `Σxᵢ`. The spectrum of `Σ` lies in `[0, n]`, the eigenvalue
//! `n` occurs exactly on the intersection, and
//!
//! ```text
//! 1 + (n − 1)·cos⟨V₁|V₂,…,Vₙ⟩ = sup(Spec(Σ) ∖ {n}).
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sym_eigen, sym_eigenvalues, Matrix, Spectrum, SymMatrix};

/// Eigenvalues `λ` with `n − λ ≤ CLUSTER_RELATIVE_TOLERANCE · n` are attributed
/// to the intersection of the arrangement.
pub const CLUSTER_RELATIVE_TOLERANCE: f64 = 1e-8;

/// A vector whose Gram–Schmidt residual falls below this fraction of its
/// original norm is treated as dependent and dropped.
pub const DEPENDENCE_TOLERANCE: f64 = 1e-9;

// Above this size the Σ spectrum is taken from the tridiagonal QL solver.
const JACOBI_LIMIT: usize = 256;

/// A subspace of `R^ambient_dim` given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: (0..ambient_dim).map(|i| unit_vector(ambient_dim, i)).collect(),
        }
    }

    /// The span of the given coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let vectors: Vec<Vec<f64>> = axes
            .iter()
            .map(|&i| {
                if i < ambient_dim {
                    Ok(unit_vector(ambient_dim, i))
                } else {
                    Err(Error::input(format!("axis {i} outside dimension {ambient_dim}")))
                }
            })
            .collect::<Result<_>>()?;
        orthonormalize(&vectors, ambient_dim)
    }

    /// A uniformly random subspace of the given rank.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, ambient_dim: usize, rank: usize) -> Self {
        assert!(rank <= ambient_dim);
        loop {
            let vectors: Vec<Vec<f64>> = (0..rank)
                .map(|_| gaussian_vector(rng, ambient_dim))
                .collect();
            let s = orthonormalize(&vectors, ambient_dim).expect("dimensions agree");
            if s.rank() == rank {
                return s;
            }
        }
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Orthogonal projection `P_V v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ambient_dim);
        let mut out = vec![0.0; self.ambient_dim];
        for b in &self.basis {
            axpy(dot(b, v), b, &mut out);
        }
        out
    }

    /// `‖v − P_V v‖`.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn projector(&self) -> SymMatrix {
        let d = self.ambient_dim.max(1);
        let mut p = SymMatrix::zeros(d);
        for i in 0..self.ambient_dim {
            for j in 0..=i {
                let s: f64 = self.basis.iter().map(|b| b[i] * b[j]).sum();
                p.set(i, j, s);
            }
        }
        p
    }

    /// Image under the linear map `q` (normally orthogonal), re-orthonormalized.
    pub fn transform(&self, q: &Matrix) -> Result<Self> {
        if q.cols() != self.ambient_dim {
            return Err(Error::input("transform dimension mismatch"));
        }
        let images: Vec<Vec<f64>> = self.basis.iter().map(|b| q.mul_vec(b)).collect();
        orthonormalize(&images, q.rows())
    }

    /// `V + W`.
    pub fn sum(&self, other: &Subspace) -> Result<Self> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::input("sum of subspaces in different dimensions"));
        }
        let vectors: Vec<Vec<f64>> = self.basis.iter().chain(&other.basis).cloned().collect();
        orthonormalize(&vectors, self.ambient_dim)
    }

    /// Whether `v` lies in the subspace up to `tol` in distance.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.distance(v) <= tol
    }

    /// Operator norm of `P_V − P_W`.
    pub fn projector_distance(&self, other: &Subspace) -> f64 {
        let a = self.projector();
        let b = other.projector();
        let diff = SymMatrix::from_lower_fn(a.dim(), |i, j| a.get(i, j) - b.get(i, j));
        let ev = sym_eigen(&diff).expect("finite projectors").eigenvalues;
        ev.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
pub fn orthonormalize(vectors: &[Vec<f64>], ambient_dim: usize) -> Result<Subspace> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != ambient_dim {
            return Err(Error::input(format!(
                "vector {k} has length {}, expected {ambient_dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::input(format!("vector {k} has non-finite entries")));
        }
        let original = norm(v);
        if original == 0.0 || basis.len() == ambient_dim {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &r);
                axpy(-c, b, &mut r);
            }
        }
        let residual = norm(&r);
        if residual < DEPENDENCE_TOLERANCE * original {
            continue;
        }
        r.iter_mut().for_each(|x| *x /= residual);
        basis.push(r);
    }
    Ok(Subspace { ambient_dim, basis })
}

/// The orthogonal complement, built by pivoted Gram–Schmidt on the
/// coordinate axes.
pub fn orthocomplement(v: &Subspace) -> Subspace {
    let d = v.ambient_dim;
    let mut all = v.basis.clone();
    let mut added = Vec::new();
    while all.len() < d {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..d {
            let mut r = unit_vector(d, i);
            for _ in 0..2 {
                for b in &all {
                    let c = dot(b, &r);
                    axpy(-c, b, &mut r);
                }
            }
            let rn = norm(&r);
            if best.as_ref().map_or(true, |(m, _)| rn > *m) {
                best = Some((rn, r));
            }
        }
        let (rn, mut r) = best.expect("ambient dimension is positive");
        r.iter_mut().for_each(|x| *x /= rn);
        all.push(r.clone());
        added.push(r);
    }
    Subspace {
        ambient_dim: d,
        basis: added,
    }
}

/// An ordered family of subspaces of a common ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    ambient_dim: usize,
    subspaces: Vec<Subspace>,
    names: Vec<String>,
}

#[derive(Deserialize)]
struct ArrangementFile {
    dim: usize,
    subspaces: Vec<SubspaceEntry>,
}

#[derive(Deserialize)]
struct SubspaceEntry {
    #[serde(default)]
    name: Option<String>,
    vectors: Vec<Vec<f64>>,
}

impl Arrangement {
    pub fn new(subspaces: Vec<Subspace>) -> Result<Self> {
        let names = (1..=subspaces.len()).map(|i| format!("V{i}")).collect();
        Self::with_names(subspaces, names)
    }

    pub fn with_names(subspaces: Vec<Subspace>, names: Vec<String>) -> Result<Self> {
        let first = subspaces
            .first()
            .ok_or_else(|| Error::input("arrangement needs at least one subspace"))?;
        let ambient_dim = first.ambient_dim;
        if subspaces.iter().any(|s| s.ambient_dim != ambient_dim) {
            return Err(Error::input("subspaces live in different ambient dimensions"));
        }
        if names.len() != subspaces.len() {
            return Err(Error::input("one name per subspace is required"));
        }
        Ok(Self {
            ambient_dim,
            subspaces,
            names,
        })
    }

    /// Parses `{"dim": d, "subspaces": [{"name": .., "vectors": [[..], ..]}]}`.
    /// Vectors are rows and are orthonormalized on load.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ArrangementFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("arrangement JSON: {e}")))?;
        if file.dim == 0 {
            return Err(Error::input("dim must be positive"));
        }
        let mut subspaces = Vec::with_capacity(file.subspaces.len());
        let mut names = Vec::with_capacity(file.subspaces.len());
        for (i, entry) in file.subspaces.into_iter().enumerate() {
            subspaces.push(orthonormalize(&entry.vectors, file.dim)?);
            names.push(entry.name.unwrap_or_else(|| format!("V{}", i + 1)));
        }
        Self::with_names(subspaces, names)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn total_rank(&self) -> usize {
        self.subspaces.iter().map(Subspace::rank).sum()
    }

    pub fn transform(&self, q: &Matrix) -> Result<Self> {
        let subspaces = self
            .subspaces
            .iter()
            .map(|s| s.transform(q))
            .collect::<Result<Vec<_>>>()?;
        Self::with_names(subspaces, self.names.clone())
    }

    /// `Σ P_{Vᵢ}` as a `d × d` matrix.
    pub fn projector_sum(&self) -> SymMatrix {
        let d = self.ambient_dim;
        let mut s = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let v: f64 = self
                    .subspaces
                    .iter()
                    .flat_map(|sub| sub.basis.iter())
                    .map(|b| b[i] * b[j])
                    .sum();
                s.set(i, j, v);
            }
        }
        s
    }
}

/// Result of an angle computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleResult {
    /// Radians in `[0, π]`.
    pub angle: f64,
    pub cosine: f64,
    /// Largest Σ eigenvalue outside the intersection cluster.
    pub spectrum_top: f64,
    pub intersection_dim: usize,
}

/// Spectrum of `Σ` on `⊕Vᵢ`, ascending, without eigenvectors.
///
/// When the total rank `R` does not exceed `d` this is the spectrum of the
/// `R × R` block Gram matrix with blocks `BᵢᵀBⱼ`. Otherwise the `d × d`
/// matrix `Σ P_{Vᵢ}` (same nonzero spectrum) is diagonalized and padded with
/// `R − d` zeros.
pub fn sigma_spectrum(arr: &Arrangement) -> Spectrum {
    Spectrum {
        eigenvalues: sigma_eigenvalues(arr),
        eigenvectors: None,
    }
}

fn sigma_eigenvalues(arr: &Arrangement) -> Vec<f64> {
    let r = arr.total_rank();
    if r == 0 {
        return Vec::new();
    }
    let d = arr.ambient_dim;
    if r <= d {
        let vectors: Vec<&Vec<f64>> = arr.subspaces.iter().flat_map(|s| s.basis.iter()).collect();
        let owner: Vec<usize> = arr
            .subspaces
            .iter()
            .enumerate()
            .flat_map(|(k, s)| std::iter::repeat(k).take(s.rank()))
            .collect();
        let gram = SymMatrix::from_lower_fn(r, |i, j| {
            if i == j {
                1.0
            } else if owner[i] == owner[j] {
                0.0
            } else {
                dot(vectors[i], vectors[j])
            }
        });
        eigenvalues_of(&gram)
    } else {
        let mut ev = eigenvalues_of(&arr.projector_sum());
        let mut padded = vec![0.0; r - d];
        padded.append(&mut ev);
        padded.sort_by(f64::total_cmp);
        padded
    }
}

fn eigenvalues_of(a: &SymMatrix) -> Vec<f64> {
    if a.dim() <= JACOBI_LIMIT {
        sym_eigen(a).expect("finite matrix").eigenvalues
    } else {
        sym_eigenvalues(a).expect("finite matrix")
    }
}

/// The multi-subspace angle `⟨V₁|V₂,…,Vₙ⟩`.
pub fn multi_angle(arr: &Arrangement) -> Result<AngleResult> {
    if arr.len() < 2 {
        return Err(Error::input("the angle needs at least two subspaces"));
    }
    if arr.subspaces.iter().any(Subspace::is_zero) {
        return Err(Error::input("subspaces must be nonzero"));
    }
    let n = arr.len() as f64;
    let ev = sigma_eigenvalues(arr);
    let tol = CLUSTER_RELATIVE_TOLERANCE * n;
    let intersection_dim = ev.iter().filter(|&&l| n - l <= tol).count();
    let top = ev
        .iter()
        .copied()
        .filter(|&l| n - l > tol)
        .fold(f64::NEG_INFINITY, f64::max);
    let cosine = ((top - 1.0) / (n - 1.0)).clamp(-1.0, 1.0);
    Ok(AngleResult {
        angle: cosine.acos(),
        cosine,
        spectrum_top: top,
        intersection_dim,
    })
}

/// The Friedrichs angle `⟨V₁|V₂⟩`, with `π` for equal subspaces and `π/2`
/// when one strictly contains the other.
///
/// The pair is put in a canonical order first, so the result is exactly
/// symmetric in its arguments.
pub fn friedrichs_angle(v1: &Subspace, v2: &Subspace) -> Result<AngleResult> {
    if v1.is_zero() || v2.is_zero() {
        return Err(Error::input("subspaces must be nonzero"));
    }
    if v1.ambient_dim != v2.ambient_dim {
        return Err(Error::input("subspaces live in different ambient dimensions"));
    }
    let (a, b) = if canonical_le(v1, v2) { (v1, v2) } else { (v2, v1) };
    let arr = Arrangement::new(vec![a.clone(), b.clone()])?;
    let mut res = multi_angle(&arr)?;
    let k = res.intersection_dim;
    let snapped = if k == a.rank() && k == b.rank() {
        Some(-1.0)
    } else if k == a.rank().min(b.rank()) {
        Some(0.0)
    } else {
        None
    };
    if let Some(c) = snapped {
        res.cosine = c;
        res.angle = if c < 0.0 {
            std::f64::consts::PI
        } else {
            std::f64::consts::FRAC_PI_2
        };
        res.spectrum_top = 1.0 + c;
    }
    Ok(res)
}

fn canonical_le(a: &Subspace, b: &Subspace) -> bool {
    if a.rank() != b.rank() {
        return a.rank() < b.rank();
    }
    for (x, y) in a.basis.iter().flatten().zip(b.basis.iter().flatten()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// `⋂ Vᵢ`, spanned by the eigenvectors of `Σ P_{Vᵢ}` in the cluster at `n`.
pub fn intersect(arr: &Arrangement) -> Subspace {
    let d = arr.ambient_dim;
    if arr.subspaces.iter().any(Subspace::is_zero) {
        return Subspace::zero(d);
    }
    let n = arr.len() as f64;
    let spec = sym_eigen(&arr.projector_sum()).expect("finite projectors");
    let tol = CLUSTER_RELATIVE_TOLERANCE * n;
    let vectors: Vec<Vec<f64>> = spec
        .eigenvalues
        .iter()
        .zip(spec.eigenvectors.as_ref().expect("eigenvectors requested"))
        .filter(|(l, _)| n - **l <= tol)
        .map(|(_, v)| v.clone())
        .collect();
    orthonormalize(&vectors, d).expect("dimensions agree")
}

/// Distances from a point to the intersection and to each subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distances {
    /// Distance to `⋂ Vᵢ`.
    pub d0: f64,
    /// `d[i]` is the distance to `Vᵢ`.
    pub d: Vec<f64>,
}

pub fn distances(arr: &Arrangement, v: &[f64]) -> Result<Distances> {
    if v.len() != arr.ambient_dim {
        return Err(Error::input(format!(
            "vector has length {}, expected {}",
            v.len(),
            arr.ambient_dim
        )));
    }
    Ok(Distances {
        d0: intersect(arr).distance(v),
        d: arr.subspaces.iter().map(|s| s.distance(v)).collect(),
    })
}

/// `Σdᵢ² / ((n − 1)(1 − cos))`: the bound on `d₀²` implied by the angle.
pub fn angle_distance_bound(cosine: f64, d: &[f64]) -> Result<f64> {
    let n = d.len();
    if n < 2 {
        return Err(Error::input("need at least two distances"));
    }
    if cosine >= 1.0 {
        return Err(Error::input("cosine must be below 1"));
    }
    Ok(d.iter().map(|x| x * x).sum::<f64>() / ((n as f64 - 1.0) * (1.0 - cosine)))
}

/// `(cos⟨V₁|V₂⟩·d₁(v) + d₂(v)) / sin⟨V₁|V₂⟩`, an upper bound on the distance
/// from `P_{V₁}v` to `V₁ ∩ V₂`. Equal subspaces give `0`, the limiting value.
pub fn projection_to_intersection_bound(v1: &Subspace, v2: &Subspace, v: &[f64]) -> Result<f64> {
    if v.len() != v1.ambient_dim {
        return Err(Error::input("vector dimension mismatch"));
    }
    let res = friedrichs_angle(v1, v2)?;
    if res.intersection_dim == v1.rank() && res.intersection_dim == v2.rank() {
        return Ok(0.0);
    }
    let sin = res.angle.sin();
    if res.angle <= 1e-12 || sin <= 0.0 {
        return Err(Error::input("the bound is undefined at angle 0"));
    }
    Ok((res.cosine * v1.distance(v) + v2.distance(v)) / sin)
}

/// `(nρ − 1)/(n − 1)`.
pub fn codistance_to_cosine(rho: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::input("n must be at least 2"));
    }
    let nf = n as f64;
    let slack = 1e-12;
    if !(rho >= 1.0 / nf - slack && rho <= 1.0 + slack) {
        return Err(Error::input(format!("codistance {rho} outside [1/{n}, 1]")));
    }
    Ok((nf * rho - 1.0) / (nf - 1.0))
}

/// A Haar-random orthogonal `d × d` matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    let s = Subspace::random(rng, d, d);
    Matrix::from_fn(d, d, |i, j| s.basis[j][i])
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_vector(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}
