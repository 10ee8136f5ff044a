//! Dense row-major matrices and the small set of kernels the training
//! stack needs: GEMM in the three orientations that appear in forward and
//! reverse sweeps, plus a few elementwise helpers.
//!
//! All products route through `matrixmultiply::dgemm`. With the `threading`
//! feature the kernel splits output blocks across threads; every output
//! element is still accumulated over `k` in a fixed order, so results are
//! bit-identical for any thread count. Reductions implemented here (column
//! sums, dot products) run in index order for the same reason.

use core::fmt;

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Column sums, accumulated row by row.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(r)[..self.cols.min(8)])?;
        }
        Ok(())
    }
}

/// `c = alpha * a · b + beta * c` with `a` as `m×k`, `b` as `k×n`.
pub fn gemm(alpha: f64, a: &Mat, b: &Mat, beta: f64, c: &mut Mat) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension");
    assert_eq!((c.rows, c.cols), (a.rows, b.cols), "gemm output shape");
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.cols as isize,
            1,
            b.data.as_ptr(),
            b.cols as isize,
            1,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// `c = alpha * a · bᵀ + beta * c` with `a` as `m×k`, `b` as `n×k`.
///
/// This is the forward orientation: batch activations times a weight
/// matrix stored as `out×in`.
pub fn gemm_nt(alpha: f64, a: &Mat, b: &Mat, beta: f64, c: &mut Mat) {
    assert_eq!(a.cols, b.cols, "gemm_nt inner dimension");
    assert_eq!((c.rows, c.cols), (a.rows, b.rows), "gemm_nt output shape");
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.rows,
            alpha,
            a.data.as_ptr(),
            a.cols as isize,
            1,
            b.data.as_ptr(),
            1,
            b.cols as isize,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// `c = alpha * aᵀ · b + beta * c` with `a` as `k×m`, `b` as `k×n`.
///
/// Reverse orientation: adjoint-transpose times stored activations, used to
/// accumulate weight gradients (`beta = 1`).
pub fn gemm_tn(alpha: f64, a: &Mat, b: &Mat, beta: f64, c: &mut Mat) {
    assert_eq!(a.rows, b.rows, "gemm_tn inner dimension");
    assert_eq!((c.rows, c.cols), (a.cols, b.cols), "gemm_tn output shape");
    unsafe {
        matrixmultiply::dgemm(
            a.cols,
            a.rows,
            b.cols,
            alpha,
            a.data.as_ptr(),
            1,
            a.cols as isize,
            b.data.as_ptr(),
            b.cols as isize,
            1,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// Matrix-vector product `a · x`, plain loops (used by the spectral solver
/// where the operand is a vector, not a batch).
pub fn matvec(a: &Mat, x: &[f64], out: &mut [f64]) {
    assert_eq!(a.cols, x.len());
    assert_eq!(a.rows, out.len());
    for r in 0..a.rows {
        let row = a.row(r);
        let mut acc = 0.0;
        for (w, v) in row.iter().zip(x) {
            acc += w * v;
        }
        out[r] = acc;
    }
}

/// Dot product in index order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Mat, b: &Mat) -> Mat {
        let mut c = Mat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                c.set(i, j, s);
            }
        }
        c
    }

    fn transpose(a: &Mat) -> Mat {
        Mat::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i))
    }

    fn randomish(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut s = seed;
        Mat::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    fn assert_close(a: &Mat, b: &Mat) {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn gemm_matches_naive() {
        let a = randomish(7, 5, 1);
        let b = randomish(5, 9, 2);
        let mut c = Mat::zeros(7, 9);
        gemm(1.0, &a, &b, 0.0, &mut c);
        assert_close(&c, &naive(&a, &b));
    }

    #[test]
    fn gemm_nt_matches_naive() {
        let a = randomish(6, 4, 3);
        let b = randomish(8, 4, 4);
        let mut c = Mat::zeros(6, 8);
        gemm_nt(1.0, &a, &b, 0.0, &mut c);
        assert_close(&c, &naive(&a, &transpose(&b)));
    }

    #[test]
    fn gemm_tn_accumulates() {
        let a = randomish(5, 6, 5);
        let b = randomish(5, 3, 6);
        let mut c = randomish(6, 3, 7);
        let mut expect = naive(&transpose(&a), &b);
        expect.add_scaled(&c, 1.0);
        gemm_tn(1.0, &a, &b, 1.0, &mut c);
        assert_close(&c, &expect);
    }

    #[test]
    fn matvec_matches_gemm() {
        let a = randomish(9, 4, 8);
        let x = randomish(4, 1, 9);
        let mut out = vec![0.0; 9];
        matvec(&a, x.as_slice(), &mut out);
        let mut c = Mat::zeros(9, 1);
        gemm(1.0, &a, &x, 0.0, &mut c);
        for (u, v) in out.iter().zip(c.as_slice()) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
