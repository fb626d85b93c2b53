use num_traits::{One, Signed, Zero};

use crate::scalar::{rational_to_f64, Rational};

/// Small dense matrix over the rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(self.get(i, j)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let v = out.get(i, j) + a * o.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Exact determinant by Gaussian elimination.
    pub fn determinant(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a.get(r, col).is_zero()) else {
                return Rational::zero();
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pivot = a.get(col, col).clone();
            det *= pivot.clone();
            for r in col + 1..n {
                let f = a.get(r, col) / &pivot;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = a.get(r, c) - &f * a.get(col, c);
                    a.set(r, c, v);
                }
            }
        }
        det
    }

    /// Exact inverse, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pivot = a.get(col, col).clone();
            for c in 0..n {
                let v = a.get(col, c) / &pivot;
                a.set(col, c, v);
                let w = inv.get(col, c) / &pivot;
                inv.set(col, c, w);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for c in 0..n {
                    let v = a.get(r, c) - &f * a.get(col, c);
                    a.set(r, c, v);
                    let w = inv.get(r, c) - &f * inv.get(col, c);
                    inv.set(r, c, w);
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// 1-norm condition number `|A|_1 |A^-1|_1`; infinite when singular.
    pub fn condition_estimate(&self) -> f64 {
        let Some(inv) = self.inverse() else {
            return f64::INFINITY;
        };
        self.norm1() * inv.norm1()
    }

    fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| rational_to_f64(&self.get(i, j).abs())).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
