use super::SymMatrix;
use crate::error::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues only, ascending, via Householder reduction to tridiagonal form
/// followed by implicit QL with Wilkinson shifts.
///
/// `O(n³)` with a small constant; intended for matrices too large for the
/// Jacobi solver to be practical.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let (mut d, mut e) = householder(&mut m, n);
    ql_implicit(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Reduces `m` in place; returns the diagonal and sub-diagonal
/// (`e[0]` is unused and zero).
fn householder(m: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| m[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = m[i * n + l];
            } else {
                for k in 0..=l {
                    m[i * n + k] /= scale;
                    h += m[i * n + k] * m[i * n + k];
                }
                let f = m[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                m[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += m[j * n + k] * m[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += m[k * n + j] * m[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * m[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = m[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        m[j * n + k] -= f * e[k] + g * m[i * n + k];
                    }
                }
            }
        } else {
            e[i] = m[i * n + l];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = m[i * n + i];
    }
    (d, e)
}

fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::input("tridiagonal QL failed to converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
