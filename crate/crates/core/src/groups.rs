//! Enumerated finite groups and their regular representation.
//!
//! A [`FiniteGroup`] stores, for each generator, the permutation of element
//! indices given by left multiplication. Everything else (element
//! multiplication, subgroups, Laplacians, fixed subspaces) is derived from
//! those tables.

use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{build_certificate, AngleMatrix, Certificate};
use crate::coxeter::{chamber_orbit, CoxeterSystem};
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigenvalues, SymMatrix};
use crate::subspaces::{friedrichs_angle, gaussian_vector, orthonormalize, AngleResult, Subspace};

/// Default enumeration cap.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Largest group handled by the dense Laplacian path.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct FiniteGroup {
    name: String,
    encodings: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, u32>,
    generators: Vec<Vec<u32>>,
    generator_names: Vec<String>,
    // Element k is generator `parent[k].1` times element `parent[k].0`.
    parent: Vec<(u32, u8)>,
}

fn enumerate<F>(
    name: String,
    identity: Vec<u8>,
    generator_names: Vec<String>,
    cap: usize,
    apply: F,
) -> Result<FiniteGroup>
where
    F: Fn(usize, &[u8]) -> Vec<u8>,
{
    let k = generator_names.len();
    if k > u8::MAX as usize {
        return Err(Error::input("too many generators"));
    }
    let mut lookup = HashMap::new();
    lookup.insert(identity.clone(), 0u32);
    let mut encodings = vec![identity];
    let mut parent = vec![(0u32, 0u8)];
    let mut generators = vec![Vec::new(); k];
    let mut next = 0;
    while next < encodings.len() {
        for (g, table) in generators.iter_mut().enumerate() {
            let image = apply(g, &encodings[next]);
            let idx = match lookup.get(&image) {
                Some(&idx) => idx,
                None => {
                    if encodings.len() >= cap {
                        return Err(Error::CapExceeded { cap });
                    }
                    let idx = encodings.len() as u32;
                    lookup.insert(image.clone(), idx);
                    encodings.push(image);
                    parent.push((next as u32, g as u8));
                    idx
                }
            };
            table.push(idx);
        }
        next += 1;
    }
    Ok(FiniteGroup { name, encodings, lookup, generators, generator_names, parent })
}

fn permutation_group(name: String, degree: usize, gens: Vec<Vec<u8>>, names: Vec<String>, cap: usize) -> Result<FiniteGroup> {
    for g in &gens {
        let mut seen = vec![false; degree];
        if g.len() != degree || g.iter().any(|&x| (x as usize) >= degree || std::mem::replace(&mut seen[x as usize], true)) {
            return Err(Error::input("generator is not a permutation"));
        }
    }
    let identity: Vec<u8> = (0..degree).map(|i| i as u8).collect();
    enumerate(name, identity, names, cap, |g, x| x.iter().map(|&i| gens[g][i as usize]).collect())
}

/// Matrices over `F_p`, `p < 256`, encoded row-major.
fn matrix_group(name: String, n: usize, p: u32, gens: Vec<Vec<u8>>, names: Vec<String>, cap: usize) -> Result<FiniteGroup> {
    let identity: Vec<u8> = (0..n * n).map(|k| u8::from(k / n == k % n)).collect();
    enumerate(name, identity, names, cap, |g, x| mat_mul_mod(&gens[g], x, n, p))
}

fn mat_mul_mod(a: &[u8], b: &[u8], n: usize, p: u32) -> Vec<u8> {
    let mut c = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            let s: u32 = (0..n).map(|k| a[i * n + k] as u32 * b[k * n + j] as u32).sum();
            c[i * n + j] = (s % p) as u8;
        }
    }
    c
}

/// `I + t·e_ij` over `F_p`, row-major.
pub fn elementary(n: usize, p: u32, i: usize, j: usize, t: i64) -> Vec<u8> {
    let mut m: Vec<u8> = (0..n * n).map(|k| u8::from(k / n == k % n)).collect();
    m[i * n + j] = (m[i * n + j] as i64 + t).rem_euclid(p as i64) as u8;
    m
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn require_prime(p: u32) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::input(format!("p = {p} must be prime")));
    }
    if p > 255 {
        return Err(Error::input("p must be below 256"));
    }
    Ok(())
}

impl FiniteGroup {
    /// `Sym(n)` generated by the adjacent transpositions.
    pub fn symmetric(n: usize) -> Result<Self> {
        if !(2..=256).contains(&n) {
            return Err(Error::input("Sym(n) needs 2 <= n <= 256"));
        }
        let gens = (0..n - 1)
            .map(|i| (0..n).map(|k| if k == i { i + 1 } else if k == i + 1 { i } else { k } as u8).collect())
            .collect();
        let names = (1..n).map(|i| format!("({} {})", i, i + 1)).collect();
        permutation_group(format!("Sym({n})"), n, gens, names, DEFAULT_CAP)
    }

    /// `D_m` of order `2m`, generated by two reflections `a`, `b` with `ab`
    /// of order `m`, acting simply transitively on `Z/2m`.
    pub fn dihedral(m: usize) -> Result<Self> {
        if !(2..=128).contains(&m) {
            return Err(Error::input("D_m needs 2 <= m <= 128"));
        }
        let q = 2 * m as i64;
        let a = (0..q).map(|k| (-k - 1).rem_euclid(q) as u8).collect();
        let b = (0..q).map(|k| (1 - k).rem_euclid(q) as u8).collect();
        permutation_group(format!("D_{m}"), 2 * m, vec![a, b], vec!["a".into(), "b".into()], DEFAULT_CAP)
    }

    /// Signed permutations of `n` letters, generated by the adjacent
    /// transpositions and the sign change of the last letter.
    pub fn hyperoctahedral(n: usize) -> Result<Self> {
        if !(2..=128).contains(&n) {
            return Err(Error::input("hyperoctahedral group needs 2 <= n <= 128"));
        }
        // Letter i + n stands for −i.
        let swap = |x: usize, y: usize| -> Vec<u8> {
            (0..2 * n)
                .map(|k| {
                    let (base, neg) = (k % n, k / n);
                    let img = if base == x { y } else if base == y { x } else { base };
                    (img + neg * n) as u8
                })
                .collect()
        };
        let mut gens: Vec<Vec<u8>> = (0..n - 1).map(|i| swap(i, i + 1)).collect();
        gens.push((0..2 * n).map(|k| if k % n == n - 1 { (k + n) % (2 * n) } else { k } as u8).collect());
        let mut names: Vec<String> = (1..n).map(|i| format!("s{i}")).collect();
        names.push("t".into());
        permutation_group(format!("B_{n}"), 2 * n, gens, names, DEFAULT_CAP)
    }

    /// Upper unitriangular 3×3 matrices over `F_p`, generated by
    /// `x = I + e₁₂` and `y = I + e₂₃`.
    pub fn heisenberg(p: u32) -> Result<Self> {
        require_prime(p)?;
        let gens = vec![elementary(3, p, 0, 1, 1), elementary(3, p, 1, 2, 1)];
        matrix_group(format!("H_{p}"), 3, p, gens, vec!["x".into(), "y".into()], DEFAULT_CAP)
    }

    /// `SL_n(F_p)` generated by `I + e_{i,i+1}` for `i` taken cyclically.
    pub fn special_linear(n: usize, p: u32, cap: usize) -> Result<Self> {
        require_prime(p)?;
        if !(2..=8).contains(&n) {
            return Err(Error::input("SL_n needs 2 <= n <= 8"));
        }
        let order = sl_order(n, p);
        if order.map_or(true, |o| o > cap as u128) {
            return Err(Error::CapExceeded { cap });
        }
        let gens = (0..n).map(|i| elementary(n, p, i, (i + 1) % n, 1)).collect();
        let names = (0..n).map(|i| format!("I+e{}{}", i + 1, (i + 1) % n + 1)).collect();
        matrix_group(format!("SL_{n}(F_{p})"), n, p, gens, names, cap)
    }

    /// The Coxeter group of `sys` generated by its simple reflections.
    pub fn coxeter(sys: &CoxeterSystem, cap: usize) -> Result<Self> {
        let orbit = chamber_orbit(sys, cap)?;
        let encodings: Vec<Vec<u8>> = orbit
            .points
            .iter()
            .map(|p| p.iter().flat_map(|x| ((x * 1e6).round() as i64).to_le_bytes()).collect())
            .collect();
        let lookup = encodings.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
        let k = orbit.tables.len();
        let mut parent = vec![(0u32, 0u8); encodings.len()];
        let mut seen = vec![false; encodings.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (g, table) in orbit.tables.iter().enumerate() {
                let y = table[x] as usize;
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = (x as u32, g as u8);
                    queue.push_back(y);
                }
            }
        }
        Ok(FiniteGroup {
            name: sys.label(),
            encodings,
            lookup,
            generators: orbit.tables,
            generator_names: (1..=k).map(|i| format!("s{i}")).collect(),
            parent,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.encodings.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_names(&self) -> &[String] {
        &self.generator_names
    }

    /// Left-multiplication table of generator `k`.
    pub fn generator_table(&self, k: usize) -> &[u32] {
        &self.generators[k]
    }

    /// Element index of generator `k`.
    pub fn generator(&self, k: usize) -> u32 {
        self.generators[k][0]
    }

    pub fn encoding(&self, g: u32) -> &[u8] {
        &self.encodings[g as usize]
    }

    pub fn index_of(&self, encoding: &[u8]) -> Option<u32> {
        self.lookup.get(encoding).copied()
    }

    /// Generator indices `k₁ … k_L` with `g = s_{k₁} ⋯ s_{k_L}`.
    fn word(&self, mut g: u32) -> Vec<u8> {
        let mut w = Vec::new();
        while g != 0 {
            let (p, k) = self.parent[g as usize];
            w.push(k);
            g = p;
        }
        w
    }

    /// The product `g·h`.
    pub fn mul(&self, g: u32, h: u32) -> u32 {
        self.word(g)
            .iter()
            .rev()
            .fold(h, |x, &k| self.generators[k as usize][x as usize])
    }

    /// Left-multiplication table of an arbitrary element.
    pub fn element_table(&self, g: u32) -> Vec<u32> {
        let mut t: Vec<u32> = (0..self.order() as u32).collect();
        for &k in self.word(g).iter().rev() {
            let gen = &self.generators[k as usize];
            t.iter_mut().for_each(|x| *x = gen[*x as usize]);
        }
        t
    }

    pub fn inverse(&self, g: u32) -> u32 {
        self.word(g)
            .iter()
            .fold(0, |x, &k| {
                // Generators of finite order: s⁻¹·x is found by walking the cycle of s.
                let gen = &self.generators[k as usize];
                let mut y = x;
                loop {
                    let z = gen[y as usize];
                    if z == x {
                        return y;
                    }
                    y = z;
                }
            })
    }

    /// The subgroup generated by `gens`, as sorted element indices.
    pub fn subgroup(&self, gens: &[u32]) -> Vec<u32> {
        let tables: Vec<Vec<u32>> = gens.iter().map(|&g| self.element_table(g)).collect();
        let mut seen = vec![false; self.order()];
        seen[0] = true;
        let mut members = vec![0u32];
        let mut next = 0;
        while next < members.len() {
            let h = members[next];
            for t in &tables {
                let y = t[h as usize];
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    members.push(y);
                }
            }
            next += 1;
        }
        members.sort_unstable();
        members
    }

    /// Powers `g⁰ … g^{k−1}` of an element of order `k`.
    pub fn cyclic_subgroup(&self, g: u32) -> Vec<u32> {
        let t = self.element_table(g);
        let mut out = vec![0u32];
        let mut x = t[0];
        while x != 0 {
            out.push(x);
            x = t[x as usize];
        }
        out
    }

    fn is_subgroup(&self, h: &[u32]) -> bool {
        let set: std::collections::HashSet<u32> = h.iter().copied().collect();
        set.contains(&0)
            && h.iter().all(|&x| (x as usize) < self.order())
            && h.iter().all(|&a| h.iter().all(|&b| set.contains(&self.mul(a, b))))
    }
}

/// `|SL_n(F_p)| = p^{n(n−1)/2} ∏_{k=2}^{n} (p^k − 1)`.
pub fn sl_order(n: usize, p: u32) -> Option<u128> {
    let p = p as u128;
    let mut order = p.checked_pow((n * (n - 1) / 2) as u32)?;
    for k in 2..=n as u32 {
        order = order.checked_mul(p.checked_pow(k)? - 1)?;
    }
    Some(order)
}

/// A probability measure on `G` acting by `(Tf)(x) = Σ_k w_k f(g_k·x)`.
#[derive(Debug, Clone)]
pub struct AveragingOperator {
    tables: Vec<Vec<u32>>,
    weights: Vec<f64>,
}

impl AveragingOperator {
    pub fn new(group: &FiniteGroup, support: &[(u32, f64)]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::input("empty measure"));
        }
        let total: f64 = support.iter().map(|s| s.1).sum();
        if support.iter().any(|s| !(s.1 >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::input("weights must be nonnegative and sum to 1"));
        }
        let mut mass: HashMap<u32, f64> = HashMap::new();
        for &(g, w) in support {
            *mass.entry(g).or_default() += w;
        }
        for (&g, &w) in &mass {
            let inv = group.inverse(g);
            if (mass.get(&inv).copied().unwrap_or(0.0) - w).abs() > 1e-12 {
                return Err(Error::input("measure must be symmetric under inversion"));
            }
        }
        let mut elements: Vec<(u32, f64)> = mass.into_iter().collect();
        elements.sort_by_key(|e| e.0);
        Ok(AveragingOperator {
            tables: elements.iter().map(|e| group.element_table(e.0)).collect(),
            weights: elements.iter().map(|e| e.1).collect(),
        })
    }

    /// Uniform measure on each subgroup, averaged over the subgroups.
    pub fn subgroup_average(group: &FiniteGroup, subgroups: &[Vec<u32>]) -> Result<Self> {
        let n = subgroups.len() as f64;
        let support: Vec<(u32, f64)> = subgroups
            .iter()
            .flat_map(|h| h.iter().map(move |&g| (g, 1.0 / (n * h.len() as f64))))
            .collect();
        Self::new(group, &support)
    }

    pub fn dim(&self) -> usize {
        self.tables[0].len()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; f.len()];
        y.par_iter_mut().enumerate().for_each(|(x, out)| {
            let mut s = 0.0;
            for (t, w) in self.tables.iter().zip(&self.weights) {
                s += w * f[t[x] as usize];
            }
            *out = s;
        });
        y
    }

    /// Top eigenvalue on the complement of the constants by power iteration.
    ///
    /// With `lazy` the iteration runs on `(I + T)/2`, whose spectrum is in
    /// `[0, 1]`; the returned eigenvalue is always that of `T`.
    pub fn top_eigenvalue(&self, lazy: bool, seed: u64, max_iters: usize, tol: f64) -> PowerIteration {
        self.top_eigenvalue_with(lazy, seed, max_iters, tol, |_, _, _| {})
    }

    /// As [`Self::top_eigenvalue`], reporting `(iteration, eigenvalue,
    /// residual)` every 100 iterations.
    pub fn top_eigenvalue_with(
        &self,
        lazy: bool,
        seed: u64,
        max_iters: usize,
        tol: f64,
        mut progress: impl FnMut(usize, f64, f64),
    ) -> PowerIteration {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = gaussian_vector(&mut rng, n);
        center_and_normalize(&mut x);
        let mut rho = 0.0;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;
            let mut y = self.apply(&x);
            if lazy {
                y.iter_mut().zip(&x).for_each(|(a, b)| *a = 0.5 * (*a + b));
            }
            let mean = y.iter().sum::<f64>() / n as f64;
            y.iter_mut().for_each(|v| *v -= mean);
            rho = dot(&x, &y);
            residual = y.iter().zip(&x).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
            let len = dot(&y, &y).sqrt();
            if iterations % 100 == 0 {
                let (ev, r) = if lazy { (2.0 * rho - 1.0, 2.0 * residual) } else { (rho, residual) };
                progress(iterations, ev, r);
            }
            if residual <= tol || len == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / len).collect();
        }
        let scale = if lazy { 2.0 } else { 1.0 };
        PowerIteration {
            eigenvalue: if lazy { 2.0 * rho - 1.0 } else { rho },
            residual: scale * residual,
            iterations,
            converged: residual <= tol,
        }
    }
}

fn center_and_normalize(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let len = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= len);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub eigenvalue: f64,
    /// `‖Tx − ρx‖` for the final unit vector `x`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    DenseEigen,
    PowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacianGap {
    pub gap: f64,
    pub method: GapMethod,
    pub iterations: usize,
    pub residual: f64,
}

fn components(group: &FiniteGroup, tables: &[Vec<u32>]) -> usize {
    let mut seen = vec![false; group.order()];
    let mut count = 0;
    for start in 0..group.order() {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for t in tables {
                let y = t[x] as usize;
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    count
}

/// Smallest nonzero eigenvalue of `Δ_S = (1/|S|) Σ_{s∈S} (I − π(s))` on the
/// regular representation. `S` must be closed under inversion.
pub fn regular_laplacian_gap(group: &FiniteGroup, s: &[u32]) -> Result<LaplacianGap> {
    if group.order() < 2 {
        return Err(Error::input("the trivial group has no spectral gap"));
    }
    let w = 1.0 / s.len() as f64;
    let op = AveragingOperator::new(group, &s.iter().map(|&g| (g, w)).collect::<Vec<_>>())?;
    let n = group.order();
    if n <= DENSE_LIMIT {
        let mut a = SymMatrix::identity(n);
        for (t, wt) in op.tables.iter().zip(&op.weights) {
            for x in 0..n {
                let y = t[x] as usize;
                // Storage is symmetric: each unordered pair is reached from both ends.
                a.set(x, y, a.get(x, y) - 0.5 * wt);
            }
        }
        let eig = sym_eigenvalues(&a)?;
        let zeros = components(group, &op.tables);
        let gap = eig.get(zeros).copied().unwrap_or(0.0);
        return Ok(LaplacianGap { gap, method: GapMethod::DenseEigen, iterations: 0, residual: 0.0 });
    }
    let it = op.top_eigenvalue(true, 0, 20_000, 1e-10);
    Ok(LaplacianGap {
        gap: 1.0 - it.eigenvalue,
        method: GapMethod::PowerIteration,
        iterations: it.iterations,
        residual: it.residual,
    })
}

/// Orthonormal basis of the `H`-fixed functions: normalized indicators of
/// the cosets `Hx`.
pub fn fixed_subspace(group: &FiniteGroup, h: &[u32]) -> Result<Subspace> {
    if !group.is_subgroup(h) {
        return Err(Error::input("subset is not a subgroup"));
    }
    let tables: Vec<Vec<u32>> = h.iter().map(|&g| group.element_table(g)).collect();
    let n = group.order();
    let mut assigned = vec![false; n];
    let scale = 1.0 / (h.len() as f64).sqrt();
    let mut basis = Vec::new();
    for x in 0..n {
        if assigned[x] {
            continue;
        }
        let mut v = vec![0.0; n];
        for t in &tables {
            let y = t[x] as usize;
            assigned[y] = true;
            v[y] = scale;
        }
        basis.push(v);
    }
    orthonormalize(&basis, n)
}

/// Friedrichs angle between the fixed subspaces of two subgroups in the
/// regular representation.
pub fn fixed_space_angle(group: &FiniteGroup, h1: &[u32], h2: &[u32]) -> Result<AngleResult> {
    friedrichs_angle(&fixed_subspace(group, h1)?, &fixed_subspace(group, h2)?)
}

/// `√(2λ_min/n)`: below this displacement an almost invariant vector is
/// within distance 1 of the invariants.
pub fn observation_bound(eps: &AngleMatrix) -> Result<f64> {
    let cert = build_certificate(eps)?;
    if !cert.is_pd() {
        return Err(Error::certificate(format!("certificate matrix is {}", cert.status.as_str())));
    }
    Ok((2.0 * cert.lambda_min / eps.n() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinbergReport {
    pub n: usize,
    pub p: u32,
    pub epsilon: f64,
    pub certificate: Certificate,
    /// `1 − 2ε`.
    pub expected_lambda_min: f64,
    /// `‖A𝟙 − (1 − 2ε)𝟙‖∞ / √n` for the normalized all-ones vector.
    pub eigenvector_residual: f64,
    pub kazhdan_bound: Option<f64>,
    /// `√(1/(5n))`.
    pub kazhdan_floor: f64,
}

fn cyclic_eps(n: usize, e: f64) -> AngleMatrix {
    AngleMatrix::from_fn(n, |i, j| if (j - i) == 1 || (j - i) == n - 1 { e } else { 0.0 })
        .expect("valid epsilon")
}

fn ones_residual(a: &SymMatrix, lambda: f64) -> f64 {
    let n = a.dim();
    let u = vec![1.0 / (n as f64).sqrt(); n];
    a.mul_vec(&u).iter().zip(&u).map(|(x, y)| (x - lambda * y).abs()).fold(0.0, f64::max)
}

/// The cyclic certificate with `ε = p^{−1/2}` between neighbours on the
/// `n`-cycle.
pub fn steinberg_certificate(n: usize, p: u32) -> Result<SteinbergReport> {
    if n < 3 {
        return Err(Error::input("n must be at least 3"));
    }
    if !is_prime(p) {
        return Err(Error::input(format!("p = {p} must be prime")));
    }
    let epsilon = 1.0 / (p as f64).sqrt();
    let eps = cyclic_eps(n, epsilon);
    let certificate = build_certificate(&eps)?;
    let expected = 1.0 - 2.0 * epsilon;
    let kazhdan_bound = certificate.is_pd().then(|| (2.0 * certificate.lambda_min / n as f64).sqrt());
    Ok(SteinbergReport {
        n,
        p,
        epsilon,
        eigenvector_residual: ones_residual(&eps.matrix(), expected),
        certificate,
        expected_lambda_min: expected,
        kazhdan_bound,
        kazhdan_floor: (1.0 / (5.0 * n as f64)).sqrt(),
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GraphFile {
    Adjacency { adjacency: Vec<Vec<u8>> },
    Edges { n: usize, edges: Vec<[usize; 2]> },
}

/// Simple undirected graph on `n` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<bool>>,
}

impl Graph {
    pub fn from_adjacency(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input("adjacency matrix must be square"));
            }
            for (j, &x) in row.iter().enumerate() {
                if x > 1 || x != rows[j][i] || (i == j && x != 0) {
                    return Err(Error::input("graph must be simple and undirected"));
                }
            }
        }
        Ok(Graph { adjacency: rows.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect() })
    }

    pub fn from_edges(n: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut rows = vec![vec![0u8; n]; n];
        for &[i, j] in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::input(format!("bad edge ({i}, {j})")));
            }
            rows[i][j] = 1;
            rows[j][i] = 1;
        }
        Self::from_adjacency(&rows)
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
        Self::from_edges(n, &edges).expect("cycle")
    }

    pub fn complete(n: usize) -> Self {
        Self::from_adjacency(&(0..n).map(|i| (0..n).map(|j| u8::from(i != j)).collect()).collect::<Vec<_>>())
            .expect("complete graph")
    }

    /// `{"adjacency": [[...]]}` or `{"n": N, "edges": [[i, j], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text).map_err(|e| Error::input(format!("bad graph JSON: {e}")))? {
            GraphFile::Adjacency { adjacency } => Self::from_adjacency(&adjacency),
            GraphFile::Edges { n, edges } => Self::from_edges(n, &edges),
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    /// The common degree, if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let degrees: Vec<usize> = self.adjacency.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
        degrees.windows(2).all(|w| w[0] == w[1]).then(|| degrees.first().copied().unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KacMoodyReport {
    pub vertices: usize,
    pub p: u32,
    pub epsilon: f64,
    pub certificate: Certificate,
    pub regular_degree: Option<usize>,
    /// `1 − k·p^{−1/2}` for a `k`-regular graph.
    pub expected_lambda_min: Option<f64>,
}

/// Certificate with `ε = p^{−1/2}` on the edges of `graph`.
pub fn kac_moody_certificate(graph: &Graph, p: u32) -> Result<KacMoodyReport> {
    if graph.len() < 2 {
        return Err(Error::input("graph needs at least two vertices"));
    }
    if !is_prime(p) {
        return Err(Error::input(format!("p = {p} must be prime")));
    }
    let epsilon = 1.0 / (p as f64).sqrt();
    let eps = AngleMatrix::from_fn(graph.len(), |i, j| if graph.has_edge(i, j) { epsilon } else { 0.0 })?;
    let degree = graph.regular_degree();
    Ok(KacMoodyReport {
        vertices: graph.len(),
        p,
        epsilon,
        certificate: build_certificate(&eps)?,
        regular_degree: degree,
        expected_lambda_min: degree.map(|k| 1.0 - k as f64 * epsilon),
    })
}
