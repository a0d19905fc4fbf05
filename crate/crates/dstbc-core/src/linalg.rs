//! Minimal dense matrix helpers over `Complex64`.
//!
//! Every matrix in this crate is tiny (at most 16x16 for the largest design
//! exponent the tooling exercises), so a straightforward row-major `Vec`
//! representation is both fast enough and dependency-free.

use num_complex::Complex64;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] += v;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in CMat::mul");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.add_at(r, c, a * rhs.at(k, c));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch in CMat::mul_vec");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..self.cols {
                acc += self.at(r, c) * x[c];
            }
            out[r] = acc;
        }
        out
    }

    /// Gram matrix: conjugate transpose of `self` times `self`.
    pub fn gram(&self) -> CMat {
        self.adjoint().mul(self)
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let mut pivot = k;
            let mut best = a[k * n + k].norm();
            for r in (k + 1)..n {
                let mag = a[r * n + k].norm();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot * n + c);
                }
                det = -det;
            }
            let d = a[k * n + k];
            det *= d;
            for r in (k + 1)..n {
                let f = a[r * n + k] / d;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for c in k..n {
                    let v = a[k * n + c];
                    a[r * n + c] -= f * v;
                }
            }
        }
        det
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.len());
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut pivot = k;
            let mut best = a[k * n + k].norm();
            for r in (k + 1)..n {
                let mag = a[r * n + k].norm();
                if mag > best {
                    best = mag;
                    pivot = r;
                }
            }
            assert!(best > 0.0, "singular matrix in CMat::solve");
            if pivot != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot * n + c);
                }
                x.swap(k, pivot);
            }
            let d = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / d;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for c in k..n {
                    let v = a[k * n + c];
                    a[r * n + c] -= f * v;
                }
                x[r] = x[r] - f * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in (k + 1)..n {
                acc -= a[k * n + c] * x[c];
            }
            x[k] = acc / a[k * n + k];
        }
        x
    }
}

/// Dense real matrix, row-major. Used for the source precoders.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..self.cols {
                let v = self.at(r, c);
                if v != 0.0 {
                    acc += x[c] * v;
                }
            }
            out[r] = acc;
        }
        out
    }
}

/// Dense matrix over {0, +1, -1}, row-major. Used for dispersion matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i8>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> i8 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i8) {
        self.data[r * self.cols + c] = v;
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..self.cols {
                match self.at(r, c) {
                    1 => acc += x[c],
                    -1 => acc -= x[c],
                    _ => {}
                }
            }
            out[r] = acc;
        }
        out
    }

    /// Accumulate `self * self^T` (exact integer arithmetic) into `acc`,
    /// a row-major `rows x rows` buffer.
    pub fn accumulate_self_outer(&self, acc: &mut [i32]) {
        assert_eq!(acc.len(), self.rows * self.rows);
        for r1 in 0..self.rows {
            for r2 in 0..self.rows {
                let mut s = 0i32;
                for c in 0..self.cols {
                    s += i32::from(self.at(r1, c)) * i32::from(self.at(r2, c));
                }
                acc[r1 * self.rows + r2] += s;
            }
        }
    }

    /// Accumulate `w * self` into a complex matrix of the same shape.
    pub fn accumulate_weighted(&self, w: Complex64, acc: &mut CMat) {
        assert_eq!((acc.rows, acc.cols), (self.rows, self.cols));
        for r in 0..self.rows {
            for c in 0..self.cols {
                match self.at(r, c) {
                    1 => acc.add_at(r, c, w),
                    -1 => acc.add_at(r, c, -w),
                    _ => {}
                }
            }
        }
    }
}
