//! Symmetric tridiagonal eigensolver for the lowest few eigenpairs: Sturm
//! bisection for eigenvalues and inverse iteration with a partially pivoted
//! tridiagonal solve for eigenvectors. Sized for grids of a few thousand
//! points where a dense solve would be wasteful.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() - 1`).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "tridiagonal sizes d={} e={}",
                d.len(),
                e.len()
            )));
        }
        Ok(Self { d, e })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    fn pivmin(&self) -> f64 {
        let emax = self.e.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        (f64::EPSILON * emax * emax).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the LDLᵀ
    /// pivot signs).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0usize;
        let mut q = self.d[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i < n - 1 {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k` smallest eigenvalues in ascending order, by bisection on the
    /// Sturm count.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let scale = ghi.abs().max(glo.abs()).max(1.0);
        let mut out = Vec::with_capacity(k);
        for idx in 0..k {
            let mut lo = glo;
            let mut hi = ghi;
            // invariant: count_below(lo) <= idx < count_below(hi)
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 2.0 * f64::EPSILON * scale {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// Solve (T − λ)x = b by Gaussian elimination with partial pivoting.
    /// Pivoting introduces one extra superdiagonal of fill-in.
    fn solve_shifted(&self, lambda: f64, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let pivmin = self.pivmin();
        // row i: p at column i, q at column i+1, r at column i+2
        let mut p: Vec<f64> = self.d.iter().map(|&x| x - lambda).collect();
        let mut q: Vec<f64> = (0..n - 1).map(|i| self.e[i]).collect();
        q.push(0.0);
        let mut r = vec![0.0; n];
        let mut rhs = b.to_vec();

        for i in 0..n - 1 {
            let s = self.e[i]; // entry below the pivot
            if p[i].abs() >= s.abs() {
                let piv = if p[i].abs() < pivmin {
                    pivmin.copysign(if p[i] == 0.0 { 1.0 } else { p[i] })
                } else {
                    p[i]
                };
                p[i] = piv;
                let m = s / piv;
                p[i + 1] -= m * q[i];
                q[i + 1] -= m * r[i];
                rhs[i + 1] -= m * rhs[i];
            } else {
                // swap rows i and i+1
                let (pi, qi, ri) = (p[i], q[i], r[i]);
                p[i] = s;
                q[i] = p[i + 1];
                r[i] = q[i + 1];
                let m = pi / s;
                p[i + 1] = qi - m * q[i];
                q[i + 1] = ri - m * r[i];
                r[i + 1] = 0.0;
                rhs.swap(i, i + 1);
                rhs[i + 1] -= m * rhs[i];
            }
        }
        if p[n - 1].abs() < pivmin {
            p[n - 1] = pivmin.copysign(if p[n - 1] == 0.0 { 1.0 } else { p[n - 1] });
        }

        let mut x = vec![0.0; n];
        x[n - 1] = rhs[n - 1] / p[n - 1];
        if n >= 2 {
            x[n - 2] = (rhs[n - 2] - q[n - 2] * x[n - 1]) / p[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (rhs[i] - q[i] * x[i + 1] - r[i] * x[i + 2]) / p[i];
        }
        x
    }

    /// Eigenvector for an eigenvalue estimate by inverse iteration,
    /// orthogonalized against previously found vectors. Returns a unit
    /// vector in the discrete l² norm.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.dim();
        // deterministic pseudorandom start, xorshift64
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        normalize(&mut x);

        let mut residual = f64::INFINITY;
        for _ in 0..8 {
            let mut y = self.solve_shifted(lambda, &x);
            for prev in previous {
                let overlap: f64 = y.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
                for (yi, pi) in y.iter_mut().zip(prev.iter()) {
                    *yi -= overlap * pi;
                }
            }
            normalize(&mut y);
            x = y;
            residual = self.residual(lambda, &x);
            let scale = self.d.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if residual <= 1e-11 * scale.max(1.0) {
                return Ok(x);
            }
        }
        let scale = self.d.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if residual <= 1e-8 * scale.max(1.0) {
            return Ok(x);
        }
        Err(Error::Convergence(format!(
            "inverse iteration residual {residual:.3e} at eigenvalue {lambda:.6e}"
        )))
    }

    fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut v = (self.d[i] - lambda) * x[i];
            if i > 0 {
                v += self.e[i - 1] * x[i - 1];
            }
            if i < n - 1 {
                v += self.e[i] * x[i + 1];
            }
            worst = worst.max(v.abs());
        }
        worst
    }

    /// Lowest `k` eigenpairs, eigenvectors unit-normalized in l².
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let values = self.lowest_eigenvalues(k);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
        for &lam in &values {
            let v = self.eigenvector(lam, &vectors)?;
            vectors.push(v);
        }
        Ok((values, vectors))
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}
