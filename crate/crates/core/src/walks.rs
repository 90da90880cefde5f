//! Random-walk spectral gaps.
//!
//! Gap certificates for walks on `SL_n(F_p)` and `SO(n+1)`, power-iteration
//! estimates of the true gap on enumerated groups, and the degree-2
//! harmonic representation of `SO(n+1)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coxeter::{catalogued_system, coxeter_report, CoxeterSystem};
use crate::error::{Error, Result};
use crate::groups::{elementary, is_prime, AveragingOperator, FiniteGroup, DEFAULT_CAP};
use crate::linalg::{sym_eigen, Matrix, SymMatrix};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "KK_THREADS";

/// Accuracy used for reported mixing-time bounds.
pub const MIXING_ACCURACY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    A,
    B,
    C,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Variant::A),
            "b" => Ok(Variant::B),
            "c" => Ok(Variant::C),
            _ => Err(Error::input(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WalkGroup {
    Sl { n: usize, p: u32 },
    Coxeter(CoxeterSystem),
    Symmetric(usize),
    Dihedral(usize),
    Heisenberg(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    pub group: WalkGroup,
    pub variant: Variant,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once `‖Tx − ρx‖` falls below this.
    pub tolerance: f64,
}

impl WalkSpec {
    pub fn new(group: WalkGroup, variant: Variant) -> Self {
        WalkSpec { group, variant, seed: 0, max_iters: 5000, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlCertificate {
    pub value: f64,
    pub floor: f64,
}

/// Gap certificate for the walk on `SL_n(F_p)`: `(1/n)(1 − 2p^{−1/2})` with
/// floor `1/(10n)` for variants a and b, and a twentieth of that with floor
/// `1/(200n)` for variant c.
pub fn sl_certificate(n: usize, p: u32, variant: Variant) -> Result<SlCertificate> {
    if n < 3 {
        return Err(Error::input("n must be at least 3"));
    }
    if !is_prime(p) {
        return Err(Error::input(format!("p = {p} must be prime")));
    }
    if p < 5 {
        return Err(Error::input("p must be at least 5"));
    }
    let nf = n as f64;
    let a = (1.0 - 2.0 / (p as f64).sqrt()) / nf;
    Ok(match variant {
        Variant::A | Variant::B => SlCertificate { value: a, floor: 1.0 / (10.0 * nf) },
        Variant::C => SlCertificate { value: a / 20.0, floor: 1.0 / (200.0 * nf) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    /// Rigorous lower bound on the gap.
    pub certificate: f64,
    pub certificate_floor: Option<f64>,
    pub empirical: f64,
    /// Error bar on `empirical`.
    pub residual: f64,
    pub relaxation_time: f64,
    /// `mixing_time(certificate, order, 1/4)`.
    pub mixing_time_bound: f64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub order: usize,
    /// Set when `empirical + residual < certificate`.
    pub flagged: bool,
}

/// A group together with its generating measure.
pub struct Walk {
    pub group: FiniteGroup,
    pub operator: AveragingOperator,
    pub certificate: f64,
    pub certificate_floor: Option<f64>,
    // The measure may have negative spectrum; iterate on (I + T)/2.
    lazy: bool,
}

fn lookup(group: &FiniteGroup, enc: &[u8]) -> u32 {
    group.index_of(enc).expect("generator lies in the enumerated group")
}

/// Enumerates the group of `spec` and builds its measure.
pub fn build_walk(group: &WalkGroup, variant: Variant) -> Result<Walk> {
    if !matches!(group, WalkGroup::Sl { .. }) && variant != Variant::A {
        return Err(Error::input("variants b and c exist only for sl"));
    }
    match *group {
        WalkGroup::Sl { n, p } => {
            let cert = sl_certificate(n, p, variant)?;
            let g = FiniteGroup::special_linear(n, p, DEFAULT_CAP)?;
            let root = |i: usize, j: usize| -> Vec<u32> {
                (0..p as i64).map(|t| lookup(&g, &elementary(n, p, i, j, t))).collect()
            };
            let (operator, lazy) = match variant {
                Variant::A => {
                    let subs: Vec<Vec<u32>> = (0..n).map(|i| root(i, (i + 1) % n)).collect();
                    (AveragingOperator::subgroup_average(&g, &subs)?, false)
                }
                Variant::B => {
                    let subs: Vec<Vec<u32>> = (0..n)
                        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                        .map(|(i, j)| root(i, j))
                        .collect();
                    (AveragingOperator::subgroup_average(&g, &subs)?, false)
                }
                Variant::C => {
                    let mut support = Vec::new();
                    for i in 0..n {
                        let j = (i + 1) % n;
                        for (a, b) in [(i, j), (j, i)] {
                            for t in [1, -1] {
                                support.push(lookup(&g, &elementary(n, p, a, b, t)));
                            }
                        }
                    }
                    let w = 1.0 / support.len() as f64;
                    let support: Vec<(u32, f64)> = support.into_iter().map(|s| (s, w)).collect();
                    (AveragingOperator::new(&g, &support)?, true)
                }
            };
            Ok(Walk { group: g, operator, certificate: cert.value, certificate_floor: Some(cert.floor), lazy })
        }
        WalkGroup::Coxeter(ref sys) => generator_walk(FiniteGroup::coxeter(sys, DEFAULT_CAP)?, sys),
        WalkGroup::Symmetric(n) => {
            if n < 2 {
                return Err(Error::input("Sym(n) needs n >= 2"));
            }
            generator_walk(FiniteGroup::symmetric(n)?, &catalogued_system("A", n as u32 - 1)?)
        }
        WalkGroup::Dihedral(m) => generator_walk(FiniteGroup::dihedral(m)?, &catalogued_system("I2", m as u32)?),
        WalkGroup::Heisenberg(p) => {
            let g = FiniteGroup::heisenberg(p)?;
            let subs = vec![g.cyclic_subgroup(g.generator(0)), g.cyclic_subgroup(g.generator(1))];
            let operator = AveragingOperator::subgroup_average(&g, &subs)?;
            // Two subgroups at cosine p^{-1/2}: λ_min = 1 − p^{-1/2}, gap ≥ λ_min/2.
            let certificate = (1.0 - 1.0 / (p as f64).sqrt()) / 2.0;
            Ok(Walk { group: g, operator, certificate, certificate_floor: None, lazy: false })
        }
    }
}

/// Uniform measure on the simple reflections, certified by the Coxeter gap.
fn generator_walk(group: FiniteGroup, sys: &CoxeterSystem) -> Result<Walk> {
    let k = group.generator_count();
    let support: Vec<(u32, f64)> = (0..k).map(|i| (group.generator(i), 1.0 / k as f64)).collect();
    let operator = AveragingOperator::new(&group, &support)?;
    let certificate = coxeter_report(sys)?.spectral_gap;
    Ok(Walk { group, operator, certificate, certificate_floor: None, lazy: true })
}

/// Runs `f` on a pool capped by `KK_THREADS` when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_ENV).ok().filter(|s| !s.trim().is_empty()) {
        None => Ok(f()),
        Some(s) => {
            let k: usize = s
                .trim()
                .parse()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::input(format!("{THREADS_ENV} must be a positive integer")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::input(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn empirical_gap(spec: &WalkSpec) -> Result<GapEstimate> {
    empirical_gap_with_progress(spec, |_, _, _| {})
}

/// As [`empirical_gap`], calling `progress(iteration, gap, residual)` as the
/// iteration proceeds.
pub fn empirical_gap_with_progress(spec: &WalkSpec, progress: impl FnMut(usize, f64, f64) + Send) -> Result<GapEstimate> {
    if spec.max_iters == 0 {
        return Err(Error::input("iteration budget must be positive"));
    }
    with_thread_cap(|| {
        let walk = build_walk(&spec.group, spec.variant)?;
        estimate(&walk, spec, progress)
    })?
}

fn estimate(walk: &Walk, spec: &WalkSpec, mut progress: impl FnMut(usize, f64, f64)) -> Result<GapEstimate> {
    let it = walk
        .operator
        .top_eigenvalue_with(walk.lazy, spec.seed, spec.max_iters, spec.tolerance, |k, ev, r| {
            progress(k, 1.0 - ev, r)
        });
    let empirical = 1.0 - it.eigenvalue;
    let order = walk.group.order();
    Ok(GapEstimate {
        certificate: walk.certificate,
        certificate_floor: walk.certificate_floor,
        empirical,
        residual: it.residual,
        relaxation_time: 1.0 / empirical,
        mixing_time_bound: mixing_time(walk.certificate, order, MIXING_ACCURACY)?,
        seed: spec.seed,
        iterations: it.iterations,
        converged: it.converged,
        order,
        flagged: empirical + it.residual < walk.certificate,
    })
}

/// `(1/gap)·ln(√order/accuracy)`, the relaxation bound on total-variation
/// mixing time.
pub fn mixing_time(gap: f64, order: usize, accuracy: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::input("gap must be positive"));
    }
    if !(accuracy > 0.0) || order == 0 {
        return Err(Error::input("accuracy and order must be positive"));
    }
    Ok(((order as f64).sqrt() / accuracy).ln() / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoGap {
    pub n: usize,
    /// `(2/n) sin²(π/(2n+2))`.
    pub delta: f64,
    /// `(n+3)/(2n(n+1))`, reported with variant b.
    pub maslen: Option<f64>,
}

pub fn so_gap(n: usize, variant: Variant) -> Result<SoGap> {
    if n < 2 {
        return Err(Error::input("n must be at least 2"));
    }
    let nf = n as f64;
    let delta = 2.0 / nf * (PI / (2.0 * nf + 2.0)).sin().powi(2);
    let maslen = match variant {
        Variant::A => None,
        Variant::B => Some((nf + 3.0) / (2.0 * nf * (nf + 1.0))),
        Variant::C => return Err(Error::input("so has variants a and b")),
    };
    Ok(SoGap { n, delta, maslen })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicCheck {
    pub n: usize,
    pub dimension: usize,
    pub gap: f64,
    pub expected: f64,
    pub invariant_vectors: usize,
}

// Orthonormal basis of traceless symmetric m×m matrices under ⟨X, Y⟩ = tr(XY).
fn traceless_basis(m: usize) -> Vec<Matrix> {
    let mut basis = Vec::new();
    let s = 0.5f64.sqrt();
    for i in 0..m {
        for j in i + 1..m {
            basis.push(Matrix::from_fn(m, m, |r, c| if (r, c) == (i, j) || (r, c) == (j, i) { s } else { 0.0 }));
        }
    }
    for k in 1..m {
        let norm = ((k * (k + 1)) as f64).sqrt();
        basis.push(Matrix::from_fn(m, m, |r, c| match (r == c, r.cmp(&k)) {
            (true, std::cmp::Ordering::Less) => 1.0 / norm,
            (true, std::cmp::Ordering::Equal) => -(k as f64) / norm,
            _ => 0.0,
        }));
    }
    basis
}

fn frobenius(a: &Matrix, b: &Matrix) -> f64 {
    (0..a.rows()).map(|i| crate::linalg::dot(a.row(i), b.row(i))).sum()
}

/// Smallest eigenvalue of `Δ = (1/n) Σᵢ (I − Pᵢ)` on harmonic polynomials of
/// degree 2 in `n + 1` variables, where `Pᵢ` averages over rotations in the
/// coordinate plane `(i, i+1)`.
///
/// The representation is realized on traceless symmetric matrices with
/// `X ↦ RXRᵀ`; its weights are at most 2, so averaging over 8 equally spaced
/// angles is exact.
pub fn harmonic2_check(n: usize) -> Result<HarmonicCheck> {
    if !(2..=12).contains(&n) {
        return Err(Error::input("harmonic check needs 2 <= n <= 12"));
    }
    let m = n + 1;
    let basis = traceless_basis(m);
    let dim = basis.len();
    let mut delta = SymMatrix::identity(dim);
    for plane in 0..n {
        let mut avg = vec![0.0; dim * dim];
        for step in 0..8 {
            let theta = 2.0 * PI * step as f64 / 8.0;
            let (c, s) = (theta.cos(), theta.sin());
            let r = Matrix::from_fn(m, m, |i, j| match (i == plane || i == plane + 1, j == plane || j == plane + 1) {
                (true, true) if i == j => c,
                (true, true) if i == plane => -s,
                (true, true) => s,
                _ => f64::from(u8::from(i == j)),
            });
            let rt = r.transpose();
            for (b, xb) in basis.iter().enumerate() {
                let image = r.mul(xb).mul(&rt);
                for (a, xa) in basis.iter().enumerate() {
                    avg[a * dim + b] += frobenius(xa, &image) / 8.0;
                }
            }
        }
        for a in 0..dim {
            for b in 0..=a {
                let p = 0.5 * (avg[a * dim + b] + avg[b * dim + a]);
                delta.set(a, b, delta.get(a, b) - p / n as f64);
            }
        }
    }
    let eig = sym_eigen(&delta)?.eigenvalues;
    let invariant_vectors = eig.iter().filter(|&&x| x.abs() < 1e-9).count();
    let gap = eig.iter().copied().find(|&x| x.abs() >= 1e-9).unwrap_or(0.0);
    Ok(HarmonicCheck { n, dimension: dim, gap, expected: so_gap(n, Variant::A)?.delta, invariant_vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificates() {
        let a = sl_certificate(3, 5, Variant::A).unwrap();
        assert!((a.value - (1.0 - 2.0 / 5f64.sqrt()) / 3.0).abs() < 1e-15);
        assert!((a.floor - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(sl_certificate(3, 5, Variant::B).unwrap(), a);
        let c = sl_certificate(3, 5, Variant::C).unwrap();
        assert!((c.floor - 1.0 / 600.0).abs() < 1e-15);
        assert!(c.value >= c.floor);
        assert!(sl_certificate(4, 25, Variant::A).is_err());
        assert!(sl_certificate(3, 3, Variant::A).is_err());
        assert!(sl_certificate(2, 5, Variant::A).is_err());
    }

    #[test]
    fn mixing() {
        assert!((mixing_time(0.5, 6, 0.25).unwrap() - 2.0 * (4.0 * 6f64.sqrt()).ln()).abs() < 1e-12);
        assert!((mixing_time(1.0 / 30.0, 372_000, 0.25).unwrap() - 30.0 * (4.0 * 372_000f64.sqrt()).ln()).abs() < 1e-9);
        assert!(mixing_time(0.0, 6, 0.25).is_err());
    }

    #[test]
    fn so_values() {
        assert!((so_gap(2, Variant::A).unwrap().delta - 0.25).abs() < 1e-15);
        let b = so_gap(3, Variant::B).unwrap();
        assert!((b.delta - 0.097631).abs() < 1e-6);
        assert_eq!(b.maslen, Some(0.25));
        let big = so_gap(2000, Variant::A).unwrap();
        assert!((big.delta * 2000f64.powi(3) - PI * PI / 2.0).abs() < 0.01);
    }

    #[test]
    fn harmonic_small() {
        for n in 2..=4 {
            let h = harmonic2_check(n).unwrap();
            assert_eq!(h.dimension, (n + 1) * (n + 2) / 2 - 1);
            assert_eq!(h.invariant_vectors, 0);
            assert!((h.gap - h.expected).abs() < 1e-9, "n = {n}: {} vs {}", h.gap, h.expected);
        }
        assert!(harmonic2_check(1).is_err());
    }

    #[test]
    fn small_walks() {
        let spec = WalkSpec::new(WalkGroup::Symmetric(4), Variant::A);
        let est = empirical_gap(&spec).unwrap();
        assert!((est.empirical - 4.0 / 3.0 * (PI / 8.0).sin().powi(2)).abs() < 1e-6);
        assert!(!est.flagged);
        let est = empirical_gap(&WalkSpec::new(WalkGroup::Dihedral(6), Variant::A)).unwrap();
        assert!((est.empirical - 2.0 * (PI / 12.0).sin().powi(2)).abs() < 1e-8);
        let est = empirical_gap(&WalkSpec::new(WalkGroup::Heisenberg(5), Variant::A)).unwrap();
        assert!(est.empirical + est.residual >= est.certificate);
        assert!(build_walk(&WalkGroup::Symmetric(4), Variant::B).is_err());
    }

    #[test]
    fn deterministic() {
        let spec = WalkSpec { seed: 9, ..WalkSpec::new(WalkGroup::Symmetric(5), Variant::A) };
        let a = empirical_gap(&spec).unwrap();
        let b = empirical_gap(&spec).unwrap();
        assert_eq!(a.empirical.to_bits(), b.empirical.to_bits());
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
    }
}
