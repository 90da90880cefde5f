//! Finite Coxeter systems.
//!
//! A system is given by its Coxeter matrix `mᵢⱼ`; the certificate matrix has
//! `εᵢⱼ = cos(π/mᵢⱼ)`. For a finite group this matrix is positive definite and
//! its smallest eigenvalue `2 sin²(π/2h)` gives the Laplacian spectral gap
//! `2λ/n`, while `M = 1ᵀA⁻¹1` gives the Kazhdan constant `2M^{-1/2}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::certificates::{gram_realize, AngleMatrix};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_pd, dot, solve_spd, sym_eigen, Matrix};

/// Entry of the Coxeter matrix standing for `m = ∞`.
pub const M_INFINITY: u32 = 0;

/// Largest group the float closure will enumerate.
pub const CLOSURE_CAP: usize = 10_000_000;

// Orbit points closer than this (max-norm, unit chamber vector) are identified.
const SNAP_TOLERANCE: f64 = 1e-9;
const BUCKET_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoxeterType {
    A,
    B,
    D,
    E6,
    E7,
    E8,
    F4,
    H3,
    H4,
    I2(u32),
    Custom,
}

impl fmt::Display for CoxeterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoxeterType::I2(m) => write!(f, "I2({m})"),
            CoxeterType::Custom => f.write_str("custom"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxeterSystem {
    kind: CoxeterType,
    m: Vec<Vec<u32>>,
}

#[derive(Deserialize)]
struct CoxeterFile {
    m: Vec<Vec<Option<u32>>>,
}

impl CoxeterSystem {
    /// A custom system. `M_INFINITY` marks an infinite entry; the diagonal
    /// must be 1 and off-diagonal entries at least 2.
    pub fn custom(m: Vec<Vec<u32>>) -> Result<Self> {
        let n = m.len();
        if n == 0 {
            return Err(Error::input("a Coxeter system needs at least one generator"));
        }
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input("Coxeter matrix must be square"));
            }
            for (j, &x) in row.iter().enumerate() {
                if x != m[j][i] {
                    return Err(Error::input(format!("m[{i}][{j}] != m[{j}][{i}]")));
                }
                if i == j && x != 1 {
                    return Err(Error::input("Coxeter matrix diagonal must be 1"));
                }
                if i != j && x == 1 {
                    return Err(Error::input("off-diagonal Coxeter entries must be at least 2"));
                }
            }
        }
        Ok(CoxeterSystem { kind: CoxeterType::Custom, m })
    }

    /// Parses `{"m": [[...]]}`; `null` or `0` stands for infinity.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoxeterFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("bad Coxeter JSON: {e}")))?;
        let m = file
            .m
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.unwrap_or(M_INFINITY)).collect())
            .collect();
        Self::custom(m)
    }

    pub fn kind(&self) -> CoxeterType {
        self.kind
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }

    pub fn rank(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self, i: usize, j: usize) -> u32 {
        self.m[i][j]
    }

    pub fn matrix(&self) -> &[Vec<u32>] {
        &self.m
    }

    /// Coxeter number for catalogued types.
    pub fn coxeter_number(&self) -> Option<u32> {
        let n = self.rank() as u32;
        Some(match self.kind {
            CoxeterType::A => n + 1,
            CoxeterType::B => 2 * n,
            CoxeterType::D => 2 * (n - 1),
            CoxeterType::E6 | CoxeterType::F4 => 12,
            CoxeterType::E7 => 18,
            CoxeterType::E8 | CoxeterType::H4 => 30,
            CoxeterType::H3 => 10,
            CoxeterType::I2(m) => m,
            CoxeterType::Custom => return None,
        })
    }

    /// Group order for catalogued types.
    pub fn known_order(&self) -> Option<u128> {
        let n = self.rank() as u128;
        let fact = |k: u128| (1..=k).product::<u128>();
        Some(match self.kind {
            CoxeterType::A => fact(n + 1),
            CoxeterType::B => (1u128 << n) * fact(n),
            CoxeterType::D => (1u128 << (n - 1)) * fact(n),
            CoxeterType::E6 => 51_840,
            CoxeterType::E7 => 2_903_040,
            CoxeterType::E8 => 696_729_600,
            CoxeterType::F4 => 1_152,
            CoxeterType::H3 => 120,
            CoxeterType::H4 => 14_400,
            CoxeterType::I2(m) => 2 * m as u128,
            CoxeterType::Custom => return None,
        })
    }

    /// Tabulated closed form of `M = 1ᵀA⁻¹1` for catalogued types.
    pub fn closed_form_m(&self) -> Option<f64> {
        let n = self.rank() as f64;
        let (s2, s5) = (2f64.sqrt(), 5f64.sqrt());
        Some(match self.kind {
            CoxeterType::A => n * (n + 1.0) * (n + 2.0) / 6.0,
            CoxeterType::B => n * (2.0 * n * n + 3.0 * (s2 - 1.0) * n + 4.0 - 3.0 * s2) / 3.0,
            CoxeterType::D => n * (n - 1.0) * (2.0 * n - 1.0) / 3.0,
            CoxeterType::E6 => 156.0,
            CoxeterType::E7 => 399.0,
            CoxeterType::E8 => 1240.0,
            CoxeterType::F4 => 56.0 + 36.0 * s2,
            CoxeterType::H3 => 31.0 + 12.0 * s5,
            CoxeterType::H4 => 332.0 + 144.0 * s5,
            CoxeterType::I2(m) => 2.0 / (1.0 - (PI / m as f64).cos()),
            CoxeterType::Custom => return None,
        })
    }
}

fn chain(n: usize, labels: &[(usize, usize, u32)]) -> Vec<Vec<u32>> {
    let mut m = vec![vec![2; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    for &(i, j, x) in labels {
        m[i][j] = x;
        m[j][i] = x;
    }
    m
}

fn path(n: usize) -> Vec<(usize, usize, u32)> {
    (1..n).map(|i| (i - 1, i, 3)).collect()
}

/// A standard system. `label` is one of `A B D E F H I2` (optionally with the
/// rank attached, as in `E7` or `H3`); `rank_or_m` is the rank, or `m` for `I2`.
pub fn catalogued_system(label: &str, rank_or_m: u32) -> Result<CoxeterSystem> {
    let label = label.trim().to_ascii_uppercase();
    let bad_rank = || Error::input(format!("rank {rank_or_m} is invalid for type {label}"));
    let (letter, suffix) = label.split_at(label.len().min(1));
    let n = rank_or_m as usize;
    let fixed = |expected: usize| -> Result<()> {
        let ok = match suffix {
            "" => n == expected,
            s => s.parse::<usize>().ok() == Some(expected) && (n == expected || n == 0),
        };
        ok.then_some(()).ok_or_else(bad_rank)
    };
    let (kind, m) = match letter {
        "A" if suffix.is_empty() && n >= 1 => (CoxeterType::A, chain(n, &path(n))),
        "B" if suffix.is_empty() && n >= 2 => {
            let mut edges = path(n);
            edges[n - 2].2 = 4;
            (CoxeterType::B, chain(n, &edges))
        }
        "D" if suffix.is_empty() && n >= 4 => {
            let mut edges = path(n - 1);
            edges.push((n - 3, n - 1, 3));
            (CoxeterType::D, chain(n, &edges))
        }
        "E" => {
            let rank = if suffix.is_empty() { n } else { suffix.parse().map_err(|_| bad_rank())? };
            fixed(rank)?;
            let kind = match rank {
                6 => CoxeterType::E6,
                7 => CoxeterType::E7,
                8 => CoxeterType::E8,
                _ => return Err(bad_rank()),
            };
            // Bourbaki labelling: 1-3-4-5-…, with 2 attached to 4.
            let mut edges = vec![(0, 2, 3), (1, 3, 3)];
            edges.extend((3..rank).map(|i| (i - 1, i, 3)));
            (kind, chain(rank, &edges))
        }
        "F" => {
            fixed(4)?;
            (CoxeterType::F4, chain(4, &[(0, 1, 3), (1, 2, 4), (2, 3, 3)]))
        }
        "H" => {
            let rank = if suffix.is_empty() { n } else { suffix.parse().map_err(|_| bad_rank())? };
            fixed(rank)?;
            match rank {
                3 => (CoxeterType::H3, chain(3, &[(0, 1, 5), (1, 2, 3)])),
                4 => (CoxeterType::H4, chain(4, &[(0, 1, 5), (1, 2, 3), (2, 3, 3)])),
                _ => return Err(bad_rank()),
            }
        }
        "I" if (suffix == "2" || suffix.is_empty()) && rank_or_m >= 2 => {
            (CoxeterType::I2(rank_or_m), chain(2, &[(0, 1, rank_or_m)]))
        }
        "A" | "B" | "D" | "I" => return Err(bad_rank()),
        _ => return Err(Error::input(format!("unknown Coxeter type {label:?}"))),
    };
    Ok(CoxeterSystem { kind, m })
}

/// The ten rows of the Kazhdan-constant table; the families `A`, `B`, `D`
/// are taken at `rank` and `I₂` at `m`.
pub fn table_rows(rank: u32, m: u32) -> Result<Vec<CoxeterSystem>> {
    [("A", rank), ("B", rank), ("D", rank), ("E6", 6), ("E7", 7), ("E8", 8), ("F4", 4), ("H3", 3), ("H4", 4), ("I2", m)]
        .iter()
        .map(|&(label, r)| catalogued_system(label, r))
        .collect()
}

/// `εᵢⱼ = cos(π/mᵢⱼ)`, with exact values for `m = 2, 3` and `ε = 1` for `∞`.
pub fn cos_matrix(sys: &CoxeterSystem) -> AngleMatrix {
    AngleMatrix::from_fn(sys.rank(), |i, j| match sys.m(i, j) {
        M_INFINITY => 1.0,
        2 => 0.0,
        3 => 0.5,
        m => (PI / m as f64).cos(),
    })
    .expect("cosines lie in [0, 1]")
}

pub fn is_finite(sys: &CoxeterSystem) -> bool {
    cholesky_pd(&cos_matrix(sys).matrix()).is_pd()
}

fn require_finite(sys: &CoxeterSystem) -> Result<()> {
    if is_finite(sys) {
        Ok(())
    } else {
        Err(Error::certificate(format!(
            "Coxeter system {} is infinite: its cosine matrix is not positive definite",
            sys.label()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxeterReport {
    #[serde(rename = "type")]
    pub type_label: String,
    pub rank: usize,
    /// Catalogued, or solved from `λ = 2 sin²(π/2h)` for custom systems.
    #[serde(rename = "coxeter_number")]
    pub h: f64,
    pub lambda_min: f64,
    pub spectral_gap: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "kazhdan_constant")]
    pub kazhdan: f64,
}

pub fn coxeter_report(sys: &CoxeterSystem) -> Result<CoxeterReport> {
    require_finite(sys)?;
    let a = cos_matrix(sys).matrix();
    let n = sys.rank();
    let lambda_min = sym_eigen(&a)?.min().expect("nonempty");
    let m: f64 = solve_spd(&a, &vec![1.0; n])?.iter().sum();
    let h = match sys.coxeter_number() {
        Some(h) => h as f64,
        None => PI / (2.0 * (lambda_min / 2.0).sqrt().asin()),
    };
    Ok(CoxeterReport {
        type_label: sys.label(),
        rank: n,
        h,
        lambda_min,
        spectral_gap: 2.0 * lambda_min / n as f64,
        m,
        kazhdan: 2.0 / m.sqrt(),
    })
}

/// Unit normals `wᵢ` of the reflecting hyperplanes, `⟨wᵢ, wⱼ⟩ = −cos(π/mᵢⱼ)`.
pub fn root_vectors(sys: &CoxeterSystem) -> Result<Vec<Vec<f64>>> {
    require_finite(sys)?;
    gram_realize(&cos_matrix(sys))
}

/// The reflections `sᵢ = I − 2wᵢwᵢᵀ` of the defining representation.
pub fn defining_representation(sys: &CoxeterSystem) -> Result<Vec<Matrix>> {
    let w = root_vectors(sys)?;
    let n = sys.rank();
    Ok(w
        .iter()
        .map(|wi| Matrix::from_fn(n, n, |r, c| f64::from(u8::from(r == c)) - 2.0 * wi[r] * wi[c]))
        .collect())
}

fn reflect(p: &[f64], w: &[f64]) -> Vec<f64> {
    let t = 2.0 * dot(p, w);
    p.iter().zip(w).map(|(x, y)| x - t * y).collect()
}

/// Orbit of a chamber point under the reflection group.
///
/// The stabilizer of an interior chamber point is trivial, so orbit points
/// are in bijection with group elements; point 0 is the identity and
/// `tables[i][k]` is the index of `sᵢ` applied to point `k`.
#[derive(Debug, Clone)]
pub struct ChamberOrbit {
    pub points: Vec<Vec<f64>>,
    pub tables: Vec<Vec<u32>>,
}

struct PointIndex {
    direction: Vec<f64>,
    buckets: HashMap<i64, Vec<u32>>,
}

impl PointIndex {
    fn new(dim: usize) -> Self {
        let mut direction: Vec<f64> = (0..dim).map(|k| 1.0 / (k as f64 + std::f64::consts::SQRT_2)).collect();
        let len = dot(&direction, &direction).sqrt();
        direction.iter_mut().for_each(|x| *x /= len);
        PointIndex { direction, buckets: HashMap::new() }
    }

    fn key(&self, p: &[f64]) -> i64 {
        (dot(p, &self.direction) / BUCKET_WIDTH).floor() as i64
    }

    fn find(&self, points: &[Vec<f64>], p: &[f64]) -> Option<u32> {
        let key = self.key(p);
        (key - 1..=key + 1)
            .filter_map(|k| self.buckets.get(&k))
            .flatten()
            .copied()
            .find(|&idx| {
                points[idx as usize]
                    .iter()
                    .zip(p)
                    .all(|(a, b)| (a - b).abs() <= SNAP_TOLERANCE)
            })
    }

    fn insert(&mut self, p: &[f64], idx: u32) {
        self.buckets.entry(self.key(p)).or_default().push(idx);
    }
}

pub fn chamber_orbit(sys: &CoxeterSystem, cap: usize) -> Result<ChamberOrbit> {
    let cap = cap.min(CLOSURE_CAP);
    if let Some(order) = sys.known_order() {
        if order > cap as u128 {
            return Err(Error::CapExceeded { cap });
        }
    }
    let w = root_vectors(sys)?;
    let n = sys.rank();
    // Solve ⟨v, wᵢ⟩ = 1 for all i: v lies strictly inside the fundamental chamber.
    let wm = Matrix::from_fn(n, n, |i, j| w[i][j]);
    let gram = crate::linalg::SymMatrix::from_lower_fn(n, |i, j| dot(&w[i], &w[j]));
    let y = solve_spd(&gram, &vec![1.0; n])?;
    let mut v = wm.transpose().mul_vec(&y);
    let len = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= len);

    let mut index = PointIndex::new(n);
    index.insert(&v, 0);
    let mut points = vec![v];
    let mut tables: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut next = 0;
    while next < points.len() {
        for (i, wi) in w.iter().enumerate() {
            let q = reflect(&points[next], wi);
            let idx = match index.find(&points, &q) {
                Some(idx) => idx,
                None => {
                    if points.len() >= cap {
                        return Err(Error::CapExceeded { cap });
                    }
                    let idx = points.len() as u32;
                    index.insert(&q, idx);
                    points.push(q);
                    idx
                }
            };
            tables[i].push(idx);
        }
        next += 1;
    }
    Ok(ChamberOrbit { points, tables })
}

/// Order of the group generated by the defining representation.
pub fn closure_order(sys: &CoxeterSystem, cap: usize) -> Result<usize> {
    chamber_orbit(sys, cap).map(|o| o.points.len())
}

/// The unit vector `v ∝ Σ(A⁻¹1)ᵢwᵢ` and `ε₀ = maxᵢ ‖sᵢv − v‖`, which equals
/// `2M^{-1/2}`.
pub fn kazhdan_witness(sys: &CoxeterSystem) -> Result<(Vec<f64>, f64)> {
    let w = root_vectors(sys)?;
    let n = sys.rank();
    let c = solve_spd(&cos_matrix(sys).matrix(), &vec![1.0; n])?;
    let mut v = vec![0.0; n];
    for (ci, wi) in c.iter().zip(&w) {
        crate::linalg::axpy(*ci, wi, &mut v);
    }
    let len = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= len);
    let eps0 = w
        .iter()
        .map(|wi| 2.0 * dot(&v, wi).abs())
        .fold(0.0, f64::max);
    Ok((v, eps0))
}
