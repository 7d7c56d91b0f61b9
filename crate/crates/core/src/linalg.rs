//! Small dense matrices with jet entries, plus the f64 helpers the checks use.

use nalgebra::{DMatrix, DVector};

use crate::error::GeomError;
use crate::jet::Jet2;

/// Frames whose coefficient matrix exceeds this condition number are degenerate.
pub const CONDITION_BOUND: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub struct JetMat {
    rows: usize,
    cols: usize,
    data: Vec<Jet2>,
}

impl JetMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        JetMat {
            rows,
            cols,
            data: vec![Jet2::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = JetMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Jet2::constant(1.0));
        }
        m
    }

    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        JetMat {
            rows,
            cols,
            data: values.iter().map(|&v| Jet2::constant(v)).collect(),
        }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut out = JetMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, Jet2::constant(m[(i, j)]));
            }
        }
        out
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Jet2>]) -> Self {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, |c| c.len());
        let mut m = JetMat::zeros(nrows, ncols);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), nrows, "ragged columns");
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn from_rows_vec(rows: usize, cols: usize, data: Vec<Jet2>) -> Self {
        assert_eq!(data.len(), rows * cols);
        JetMat { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> &Jet2 {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Jet2) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Jet2> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[Jet2] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Jet2) -> Jet2) -> JetMat {
        JetMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn truncate(&self, order: u8) -> JetMat {
        self.map(|x| x.truncate(order))
    }

    pub fn scale(&self, s: f64) -> JetMat {
        self.map(|x| x.scale(s))
    }

    pub fn scale_jet(&self, s: &Jet2) -> JetMat {
        self.map(|x| x * s)
    }

    pub fn add(&self, other: &JetMat) -> JetMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        JetMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &JetMat) -> JetMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        JetMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &JetMat) -> JetMat {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = JetMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_constant() && a.value() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_constant() && b.value() == 0.0 {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] += &(a * b);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Jet2]) -> Vec<Jet2> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Jet2::zero();
                for (k, vk) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if (a.is_constant() && a.value() == 0.0) || (vk.is_constant() && vk.value() == 0.0) {
                        continue;
                    }
                    acc += &(a * vk);
                }
                acc
            })
            .collect()
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &JetMat) -> JetMat {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn trace(&self) -> Jet2 {
        assert_eq!(self.rows, self.cols);
        let mut acc = Jet2::zero();
        for i in 0..self.rows {
            acc += self.get(i, i);
        }
        acc
    }

    pub fn transpose(&self) -> JetMat {
        let mut out = JetMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Applies `f` (for example a partial derivative) to every entry.
    pub fn entrywise(&self, f: impl Fn(&Jet2) -> Jet2) -> JetMat {
        self.map(f)
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).value())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.value().abs()))
    }

    /// Block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> JetMat {
        let mut out = JetMat::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out.set(i, j, self.get(r0 + i, c0 + j).clone());
            }
        }
        out
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting on values.
    ///
    /// Refuses matrices whose value part has condition number above
    /// [`CONDITION_BOUND`].
    pub fn inverse(&self) -> Result<JetMat, GeomError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let cond = condition_number(&self.values());
        if !cond.is_finite() || cond > CONDITION_BOUND {
            return Err(GeomError::Degenerate { condition: cond });
        }
        let mut a = self.clone();
        let mut inv = JetMat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a.get(x, col)
                        .value()
                        .abs()
                        .total_cmp(&a.get(y, col).value().abs())
                })
                .expect("non-empty pivot range");
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let r = a.get(col, col).recip();
            for j in 0..n {
                let x = a.get(col, j) * &r;
                a.set(col, j, x);
                let y = inv.get(col, j) * &r;
                inv.set(col, j, y);
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col).clone();
                if f.is_constant() && f.value() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let x = a.get(i, j) - &(&f * a.get(col, j));
                    a.set(i, j, x);
                    let y = inv.get(i, j) - &(&f * inv.get(col, j));
                    inv.set(i, j, y);
                }
            }
        }
        Ok(inv)
    }
}

/// 2-norm condition number via singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Least-squares solve `A x ≈ b`, returning `(x, max-norm residual)`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let r = a * &x - b;
    let res = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (x, res)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_jet(v: &[Jet2]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.value().abs()))
}

pub fn values(v: &[Jet2]) -> Vec<f64> {
    v.iter().map(Jet2::value).collect()
}

pub fn constant_vec(v: &[f64]) -> Vec<Jet2> {
    v.iter().map(|&x| Jet2::constant(x)).collect()
}

pub fn vec_add(a: &[Jet2], b: &[Jet2]) -> Vec<Jet2> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Jet2], b: &[Jet2]) -> Vec<Jet2> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[Jet2], s: &Jet2) -> Vec<Jet2> {
    a.iter().map(|x| x * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_jet_matrix_differentiates() {
        let x = Jet2::seed(&[0.4, -0.2], 2);
        let m = JetMat::from_rows_vec(
            2,
            2,
            vec![
                &x[0] + 2.0,
                x[1].clone(),
                &x[0] * &x[1],
                x[1].exp() + 1.0,
            ],
        );
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = id.get(i, j);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e.value() - expect).abs() < 1e-14);
                for k in 0..2 {
                    assert!(e.d(k).abs() < 1e-13);
                    for l in 0..2 {
                        assert!(e.dd(k, l).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = JetMat::from_f64(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(m.inverse(), Err(GeomError::Degenerate { .. })));
    }

    #[test]
    fn least_squares_exact_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, r) = least_squares(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }
}
