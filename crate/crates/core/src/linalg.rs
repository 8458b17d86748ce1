//! Small dense linear algebra for tall design matrices with few columns.
//!
//! Design matrices are stored column-major as `Vec<Vec<f64>>`; square
//! matrices as row-major [`Square`].

/// Row-major p x p matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub p: usize,
    pub data: Vec<f64>,
}

impl Square {
    pub fn zeros(p: usize) -> Self {
        Square { p, data: vec![0.0; p * p] }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn mul(&self, other: &Square) -> Square {
        let p = self.p;
        let mut out = Square::zeros(p);
        for i in 0..p {
            for k in 0..p {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..p {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Square {
        let mut out = Square::zeros(self.p);
        for i in 0..self.p {
            for j in 0..self.p {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p).map(|i| self[(i, i)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Square {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.p + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Square {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.p + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix; `None` if a pivot is not strictly positive.
pub fn cholesky(a: &Square) -> Option<Square> {
    let p = a.p;
    let mut l = Square::zeros(p);
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &Square, b: &[f64]) -> Vec<f64> {
    let p = l.p;
    let mut y = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn cholesky_inverse(l: &Square) -> Square {
    let p = l.p;
    let mut inv = Square::zeros(p);
    let mut e = vec![0.0; p];
    for j in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..p {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Householder QR factorization of an n x p column-major matrix, with
/// optional column pivoting (largest remaining column norm first).
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    p: usize,
    /// Householder vectors, one per column step; `v[k]` has length n - k.
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// Upper triangle, r[i][j] for j >= i, in pivoted column order.
    r: Vec<Vec<f64>>,
    /// `perm[k]` is the original index of the k-th pivoted column.
    pub perm: Vec<usize>,
}

impl Qr {
    pub fn new(columns: &[Vec<f64>], pivot: bool) -> Qr {
        let p = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        let mut a: Vec<Vec<f64>> = columns.to_vec();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut vs = Vec::with_capacity(p.min(n));
        let mut betas = Vec::with_capacity(p.min(n));
        let steps = p.min(n);
        for k in 0..steps {
            if pivot {
                let norm = |c: &Vec<f64>| c[k..].iter().map(|x| x * x).sum::<f64>();
                let mut best = k;
                let mut best_norm = norm(&a[k]);
                for j in (k + 1)..p {
                    let nj = norm(&a[j]);
                    if nj > best_norm {
                        best = j;
                        best_norm = nj;
                    }
                }
                a.swap(k, best);
                perm.swap(k, best);
            }
            let x = &a[k][k..];
            let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x.to_vec();
            let beta;
            if alpha == 0.0 {
                beta = 0.0;
            } else {
                let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
                v[0] += sign * alpha;
                let vnorm2 = v.iter().map(|t| t * t).sum::<f64>();
                beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
            }
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
                let s = beta * dot;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            vs.push(v);
            betas.push(beta);
        }
        let r = (0..steps)
            .map(|i| (0..p).map(|j| if j >= i { a[j][i] } else { 0.0 }).collect())
            .collect();
        Qr { n, p, vs, betas, r, perm }
    }

    /// |R_kk| along the diagonal, in pivoted order.
    pub fn diag_abs(&self) -> Vec<f64> {
        (0..self.r.len()).map(|i| self.r[i][i].abs()).collect()
    }

    /// Numerical rank: diagonal entries above `rel_tol * max |R_kk|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let d = self.diag_abs();
        let max = d.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        d.iter().filter(|&&x| x > rel_tol * max).count()
    }

    /// Q^T y.
    pub fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            let dot: f64 = v.iter().zip(&out[k..]).map(|(a, b)| a * b).sum();
            let s = beta * dot;
            for (o, vi) in out[k..].iter_mut().zip(v) {
                *o -= s * vi;
            }
        }
        out
    }

    /// Least-squares solution, assuming full column rank. Coefficients are
    /// returned in the original column order.
    pub fn solve_least_squares(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n);
        let qty = self.apply_qt(y);
        let p = self.p;
        let mut z = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = qty[i];
            for j in (i + 1)..p {
                s -= self.r[i][j] * z[j];
            }
            z[i] = s / self.r[i][i];
        }
        let mut out = vec![0.0; p];
        for (k, &orig) in self.perm.iter().enumerate() {
            out[orig] = z[k];
        }
        out
    }

    /// (X^T X)^{-1} in the original column order, assuming full rank.
    pub fn xtx_inverse(&self) -> Square {
        let p = self.p;
        // R^{-1} (upper triangular)
        let mut rinv = Square::zeros(p);
        for j in 0..p {
            rinv[(j, j)] = 1.0 / self.r[j][j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in (i + 1)..=j {
                    s += self.r[i][k] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.r[i][i];
            }
        }
        let pivoted = rinv.mul(&rinv.transpose());
        let mut out = Square::zeros(p);
        for a in 0..p {
            for b in 0..p {
                out[(self.perm[a], self.perm[b])] = pivoted[(a, b)];
            }
        }
        out
    }
}
