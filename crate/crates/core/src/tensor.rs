//! Dense row-major tables and the sparse gradient accumulators used by the
//! hand-written backward passes.

use std::collections::BTreeMap;

use rand::Rng;

use crate::features::Feature;

/// Row-major `rows x cols` matrix. Embedding tables keep one row per input
/// feature, so a lookup reads a contiguous row.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| if scale > 0.0 { rng.gen_range(-scale..scale) } else { 0.0 })
            .collect();
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| crate::util::dot(self.row(r), x)).collect()
    }

    /// `self^T * y`
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                crate::util::axpy(yr, self.row(r), &mut out);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Embeds a sparse input: `out[k] = sum_f weight_f(k) * table[f.index][k]`.
pub fn embed(table: &Matrix, feats: &[Feature]) -> Vec<f64> {
    let p = table.cols;
    let mut out = vec![0.0; p];
    for f in feats {
        let row = table.row(f.index);
        for k in 0..p {
            out[k] += f.weight.at(k, p) * row[k];
        }
    }
    out
}

/// Gradient of a table restricted to the rows that were touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseRows {
    /// Accumulates the gradient of [`embed`] given `d_out`.
    pub fn add_embed(&mut self, feats: &[Feature], d_out: &[f64]) {
        let p = d_out.len();
        for f in feats {
            let g = self.rows.entry(f.index).or_insert_with(|| vec![0.0; p]);
            for k in 0..p {
                g[k] += f.weight.at(k, p) * d_out[k];
            }
        }
    }

    pub fn add_row(&mut self, r: usize, v: &[f64], scale: f64) {
        let g = self.rows.entry(r).or_insert_with(|| vec![0.0; v.len()]);
        crate::util::axpy(scale, v, g);
    }

    pub fn merge(&mut self, other: &SparseRows) {
        for (r, v) in &other.rows {
            self.add_row(*r, v, 1.0);
        }
    }

    /// `table -= lr * self`
    pub fn apply(&self, table: &mut Matrix, lr: f64) {
        for (r, g) in &self.rows {
            crate::util::axpy(-lr, g, table.row_mut(*r));
        }
    }

    pub fn to_dense(&self, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for (r, g) in &self.rows {
            m.row_mut(*r).copy_from_slice(g);
        }
        m
    }

    pub fn norm_sq(&self) -> f64 {
        self.rows.values().flatten().map(|x| x * x).sum()
    }
}

/// Sum of outer products `sum_i left_i right_i^T`, kept factored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rank1Sum {
    pub terms: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Rank1Sum {
    pub fn push(&mut self, left: Vec<f64>, right: Vec<f64>) {
        self.terms.push((left, right));
    }

    pub fn merge(&mut self, other: &Rank1Sum) {
        self.terms.extend(other.terms.iter().cloned());
    }

    /// `m -= lr * self`
    pub fn apply(&self, m: &mut Matrix, lr: f64) {
        for (l, r) in &self.terms {
            for (row, &li) in l.iter().enumerate() {
                if li != 0.0 {
                    crate::util::axpy(-lr * li, r, m.row_mut(row));
                }
            }
        }
    }

    pub fn to_dense(&self, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        self.apply(&mut m, -1.0);
        m
    }

    pub fn scale(&mut self, s: f64) {
        for (l, _) in &mut self.terms {
            l.iter_mut().for_each(|x| *x *= s);
        }
    }
}
