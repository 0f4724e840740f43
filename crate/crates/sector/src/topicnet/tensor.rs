//! Row-major dense matrix over a [`Real`] scalar.

use super::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<R> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![R::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> R {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[R] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self * x` for a column vector `x`.
    pub fn mul_vec_add(&self, x: &[R], out: &mut [R]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = R::ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += *a * *b;
            }
            *o += acc;
        }
    }

    /// `out += self^T * y` for a column vector `y`.
    pub fn tr_mul_vec_add(&self, y: &[R], out: &mut [R]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            let row = self.row(r);
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
    }

    /// Rank-one update `self += y * x^T`.
    pub fn add_outer(&mut self, y: &[R], x: &[R]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (o, &xv) in row.iter_mut().zip(x) {
                *o += yr * xv;
            }
        }
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Mat<R>) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: R) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn map_to<T: Real>(&self) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
        }
    }
}

pub fn add_vec<R: Real>(a: &mut [R], b: &[R]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

pub fn scale_vec<R: Real>(a: &mut [R], s: R) {
    for x in a.iter_mut() {
        *x *= s;
    }
}
