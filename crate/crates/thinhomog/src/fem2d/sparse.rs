//! Minimal CSR storage for the symmetric/nonsymmetric P1 systems.

use nalgebra::DMatrix;

/// Compressed sparse row matrix, square.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from unordered triplets; duplicates are summed, entries that
    /// sum to exactly zero are dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Csr {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut iter = triplets.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            debug_assert!(i < n && j < n);
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    /// Largest |a_ij - a_ji| over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Entry-wise sum of two same-size matrices.
    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!(self.n, other.n);
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.n {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    triplets.push((i, m.col_idx[k], m.values[k]));
                }
            }
        }
        Csr::from_triplets(self.n, triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] = self.values[k];
            }
        }
        d
    }

    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut au = vec![0.0; self.n];
        self.matvec(u, &mut au);
        u.iter().zip(&au).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let m = Csr::from_triplets(
            3,
            vec![(0, 0, 1.0), (0, 0, 2.0), (1, 2, 0.5), (1, 2, -0.5), (2, 1, 4.0)],
        );
        assert_eq!(m.nnz(), 2); // (1,2) summed to zero and dropped
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(2, 1), 4.0);
        assert_eq!(m.max_asymmetry(), 4.0);
    }

    #[test]
    fn matvec_and_sums() {
        let m = Csr::from_triplets(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let mut y = vec![0.0; 2];
        m.matvec(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![4.0, 7.0]);
        assert_eq!(m.row_sums(), vec![3.0, 4.0]);
        assert_eq!(m.diag(), vec![2.0, 3.0]);
        assert_eq!(m.max_asymmetry(), 0.0);
        assert_eq!(m.quadratic_form(&[1.0, 2.0]), 18.0);
        let s = m.add(&m);
        assert_eq!(s.get(1, 1), 6.0);
    }
}
