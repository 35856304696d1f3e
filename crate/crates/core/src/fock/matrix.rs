//! Column-sparse complex matrix over a local occupation basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    dim: usize,
    // cols[c] holds (row, value), sorted by row, no exact zeros
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl LocalMatrix {
    pub fn zeros(dim: usize) -> Self {
        LocalMatrix { dim, cols: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        LocalMatrix { dim, cols: (0..dim).map(|c| vec![(c, Complex64::new(1.0, 0.0))]).collect() }
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        LocalMatrix {
            dim: values.len(),
            cols: values
                .iter()
                .enumerate()
                .map(|(c, &v)| if v == ZERO { Vec::new() } else { vec![(c, v)] })
                .collect(),
        }
    }

    /// Accumulates `(row, col, value)` triples; repeated positions add up.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut m = LocalMatrix::zeros(dim);
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}x{dim}");
            m.add_to(r, c, v);
        }
        m.prune();
        m
    }

    pub fn from_dense(d: &DMatrix<Complex64>) -> Self {
        assert_eq!(d.nrows(), d.ncols(), "local matrices are square");
        let dim = d.nrows();
        let cols = (0..dim)
            .map(|c| (0..dim).filter(|&r| d[(r, c)] != ZERO).map(|r| (r, d[(r, c)])).collect())
            .collect();
        LocalMatrix { dim, cols }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                d[(r, c)] = v;
            }
        }
        d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn col(&self, c: usize) -> &[(usize, Complex64)] {
        &self.cols[c]
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.cols[c].iter().find(|(rr, _)| *rr == r).map(|&(_, v)| v).unwrap_or(ZERO)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.cols.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    fn add_to(&mut self, r: usize, c: usize, v: Complex64) {
        let col = &mut self.cols[c];
        match col.binary_search_by_key(&r, |&(rr, _)| rr) {
            Ok(i) => col[i].1 += v,
            Err(i) => col.insert(i, (r, v)),
        }
    }

    fn prune(&mut self) {
        for col in &mut self.cols {
            col.retain(|&(_, v)| v != ZERO);
        }
    }

    pub fn adjoint(&self) -> Self {
        LocalMatrix::from_entries(self.dim, self.entries().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = self.clone();
        for col in &mut m.cols {
            for e in col.iter_mut() {
                e.1 *= s;
            }
        }
        m.prune();
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        LocalMatrix::from_entries(self.dim, self.entries().chain(other.entries()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut scratch = vec![ZERO; self.dim];
        let mut seen = vec![false; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut cols = Vec::with_capacity(self.dim);
        for bcol in &other.cols {
            for &(k, b) in bcol {
                for &(r, a) in &self.cols[k] {
                    if !seen[r] {
                        seen[r] = true;
                        touched.push(r);
                    }
                    scratch[r] += a * b;
                }
            }
            touched.sort_unstable();
            let col: Vec<(usize, Complex64)> =
                touched.iter().map(|&r| (r, scratch[r])).filter(|&(_, v)| v != ZERO).collect();
            for &r in &touched {
                scratch[r] = ZERO;
                seen[r] = false;
            }
            touched.clear();
            cols.push(col);
        }
        LocalMatrix { dim: self.dim, cols }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_matches_dense() {
        let a = LocalMatrix::from_entries(3, [(0, 1, c(2.0)), (2, 0, Complex64::new(0.0, 1.0)), (1, 1, c(-1.0))]);
        let b = LocalMatrix::from_entries(3, [(1, 0, c(1.0)), (0, 2, c(3.0)), (2, 2, c(1.0))]);
        let sparse = a.mul(&b).to_dense();
        let dense = a.to_dense() * b.to_dense();
        assert!((sparse - dense).norm() < 1e-15);
    }

    #[test]
    fn cancellation_is_pruned() {
        let a = LocalMatrix::identity(2);
        let z = a.sub(&a);
        assert_eq!(z.nnz(), 0);
        let x = LocalMatrix::from_entries(2, [(0, 1, c(1.0)), (1, 0, c(1.0))]);
        let y = LocalMatrix::from_entries(2, [(0, 1, c(1.0)), (1, 0, c(-1.0))]);
        // xy + yx = 0
        assert_eq!(x.mul(&y).add(&y.mul(&x)).nnz(), 0);
    }

    #[test]
    fn adjoint_conjugates() {
        let a = LocalMatrix::from_entries(2, [(0, 1, Complex64::new(1.0, 2.0))]);
        assert_eq!(a.adjoint().get(1, 0), Complex64::new(1.0, -2.0));
        assert!(!a.is_diagonal());
        assert_eq!(LocalMatrix::identity(4).trace(), c(4.0));
    }
}
