//! Dense complex matrices: storage, products, LU solves, Hermitian
//! eigenvalues, and spectral norms.
//!
//! Sizes in this crate stay at a few thousand, so a straightforward
//! row-major implementation with partial pivoting is sufficient and keeps
//! results bit-reproducible across runs.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<C64>,
}

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (pivot {pivot:.3e} at step {step})")]
    Singular { pivot: f64, step: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(nrows: usize, ncols: usize, mut f: F) -> Self {
        let mut m = CMat::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    /// y = A x.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "matvec shape");
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for i in 0..self.nrows {
            let row = self.row(i);
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// C = A B, blocked over the inner dimension for cache friendliness.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.ncols, other.nrows, "matmul shape");
        let (n, k, m) = (self.nrows, self.ncols, other.ncols);
        let mut c = CMat::zeros(n, m);
        for i in 0..n {
            let arow = self.row(i);
            let crow = c.row_mut(i);
            for (p, &a) in arow.iter().enumerate().take(k) {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = other.row(p);
                for j in 0..m {
                    crow[j] += a * brow[j];
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value by power iteration on A^H A.
    ///
    /// Deterministic start vector; relative tolerance ~1e-12 or 500 sweeps.
    pub fn spectral_norm(&self) -> f64 {
        if self.nrows == 0 || self.ncols == 0 {
            return 0.0;
        }
        let mut v: Vec<C64> = (0..self.ncols)
            .map(|j| C64::new(1.0 + (j as f64 * 0.7).sin(), (j as f64 * 0.3).cos()))
            .collect();
        let nrm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        for z in v.iter_mut() {
            *z /= nrm;
        }
        let mut sigma = 0.0f64;
        for _ in 0..500 {
            let av = self.matvec(&v);
            let mut w = vec![C64::new(0.0, 0.0); self.ncols];
            // w = A^H (A v)
            for i in 0..self.nrows {
                let row = self.row(i);
                let avi = av[i];
                for (wj, a) in w.iter_mut().zip(row) {
                    *wj += a.conj() * avi;
                }
            }
            let nw = (w.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
            if nw == 0.0 {
                return 0.0;
            }
            let new_sigma = nw.sqrt();
            for (vj, wj) in v.iter_mut().zip(&w) {
                *vj = wj / nw;
            }
            if (new_sigma - sigma).abs() <= 1e-12 * new_sigma.max(1e-300) {
                return new_sigma;
            }
            sigma = new_sigma;
        }
        sigma
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu, LinalgError> {
        if self.nrows != self.ncols {
            return Err(LinalgError::Shape(format!(
                "lu of non-square {}x{}",
                self.nrows, self.ncols
            )));
        }
        let n = self.nrows;
        let mut a = self.clone();
        let mut piv = vec![0usize; n];
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in (k + 1)..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular {
                    pivot: best,
                    step: k,
                });
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
            }
            max_piv = max_piv.max(best);
            min_piv = min_piv.min(best);
            let akk = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / akk;
                a[(i, k)] = factor;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                // Split borrows: row k is read, row i is written.
                let (upper, lower) = a.data.split_at_mut(i * n);
                let rk = &upper[k * n..k * n + n];
                let ri = &mut lower[..n];
                for j in (k + 1)..n {
                    ri[j] -= factor * rk[j];
                }
            }
        }
        Ok(Lu {
            lu: a,
            piv,
            cond_estimate: max_piv / min_piv.max(1e-300),
        })
    }

    /// Solve A X = B for X with fresh LU.
    pub fn solve_mat(&self, b: &CMat) -> Result<CMat, LinalgError> {
        Ok(self.lu()?.solve_mat(b))
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// LU factorization (Doolittle, partial pivoting).
pub struct Lu {
    lu: CMat,
    piv: Vec<usize>,
    /// Ratio of largest to smallest pivot; a cheap conditioning indicator.
    pub cond_estimate: f64,
}

impl Lu {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk.re == 0.0 && xk.im == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let l = self.lu[(i, k)];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            let row = self.lu.row(i);
            for (j, xj) in x.iter().enumerate().take(n).skip(i + 1) {
                acc -= row[j] * xj;
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        let n = self.lu.nrows;
        assert_eq!(b.nrows, n);
        let mut out = CMat::zeros(n, b.ncols);
        // Column-by-column to reuse the factorization.
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..b.ncols {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Eigenvalues of a Hermitian matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues in ascending order. Off-diagonal Hermitian error of
/// the input is the caller's responsibility; the method symmetrizes.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    let mut m = CMat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-14 * m.fro_norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Complex Jacobi rotation: diagonalize the 2x2 block.
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                let s_c = phase * s;
                // Apply G^H M G with G = [[c, s*phase],[-s*conj(phase), c]] columns p,q.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c - miq * s_c.conj();
                    m[(i, q)] = mip * s_c + miq * c;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c - mqj * s_c;
                    m[(q, j)] = mpj * s_c.conj() + mqj * c;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Smallest and largest singular values estimated via power iteration on
/// A^H A and inverse iteration through an LU of A (square A only for the
/// smallest). Adequate as a condition estimate.
pub fn condition_estimate(a: &CMat) -> f64 {
    let sigma_max = a.spectral_norm();
    if a.nrows != a.ncols {
        return f64::INFINITY;
    }
    let lu = match a.lu() {
        Ok(l) => l,
        Err(_) => return f64::INFINITY,
    };
    // Power iteration on (A^H A)^{-1} = A^{-1} A^{-H} via two triangular solves.
    let n = a.nrows;
    let at = a.adjoint();
    let lut = match at.lu() {
        Ok(l) => l,
        Err(_) => return f64::INFINITY,
    };
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::new((j as f64 * 0.37).cos(), (j as f64 * 0.91).sin()))
        .collect();
    let mut inv_sigma_min = 0.0f64;
    for _ in 0..200 {
        let w = lut.solve(&v);
        let u = lu.solve(&w);
        let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nu == 0.0 {
            return f64::INFINITY;
        }
        let new = nu.sqrt();
        v = u.into_iter().map(|z| z / nu).collect();
        if (new - inv_sigma_min).abs() < 1e-6 * new {
            inv_sigma_min = new;
            break;
        }
        inv_sigma_min = new;
    }
    sigma_max * inv_sigma_min
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_solves_small_system() {
        let a = CMat::from_fn(3, 3, |i, j| {
            c(
                if i == j { 5.0 } else { (i + 2 * j) as f64 * 0.5 },
                ((i * 3 + j) % 4) as f64 * 0.25,
            )
        });
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.25), c(-3.0, 1.0)];
        let b = a.matvec(&x_true);
        let x = a.lu().unwrap().solve(&b);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert_abs_diff_eq!(xi.re, ti.re, epsilon = 1e-12);
            assert_abs_diff_eq!(xi.im, ti.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn lu_matrix_rhs_and_residual() {
        let n = 40;
        let a = CMat::from_fn(n, n, |i, j| {
            let d = if i == j { 10.0 } else { 0.0 };
            c(d + ((i * 7 + j * 13) % 5) as f64 * 0.3, ((i + 2 * j) % 3) as f64 * 0.2)
        });
        let b = CMat::from_fn(n, 3, |i, j| c((i + j) as f64, (i as f64) * 0.1));
        let x = a.solve_mat(&b).unwrap();
        let r = a.matmul(&x).sub(&b);
        assert!(r.fro_norm() < 1e-10 * b.fro_norm().max(1.0));
    }

    #[test]
    fn spectral_norm_diagonal() {
        let mut a = CMat::zeros(4, 4);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(0.0, -7.5);
        a[(2, 2)] = c(3.0, 4.0); // |.| = 5
        a[(3, 3)] = c(2.0, 0.0);
        assert_abs_diff_eq!(a.spectral_norm(), 7.5, epsilon = 1e-9);
    }

    #[test]
    fn hermitian_eigs() {
        // [[2, i],[-i, 2]] has eigenvalues 1 and 3.
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c(2.0, 0.0);
        a[(0, 1)] = c(0.0, 1.0);
        a[(1, 0)] = c(0.0, -1.0);
        a[(1, 1)] = c(2.0, 0.0);
        let ev = hermitian_eigenvalues(&a);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn condition_of_identity() {
        let a = CMat::identity(10);
        let k = condition_estimate(&a);
        assert!((k - 1.0).abs() < 1e-6, "got {k}");
    }
}
