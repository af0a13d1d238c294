//! Compressed-row storage for real symmetric operators acting on real or
//! complex vectors.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        CsrMatrix {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        let mut m = CsrMatrix {
            dim,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut indptr = vec![0usize; self.dim + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `a·self + b·other + diag(d)`, merging sparsity patterns.
    pub fn linear_combination(
        &self,
        a: f64,
        other: &CsrMatrix,
        b: f64,
        diag: Option<&[f64]>,
    ) -> CsrMatrix {
        assert_eq!(self.dim, other.dim);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz() + self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                trip.push((r as u32, c as u32, a * v));
            }
            if b != 0.0 {
                for (c, v) in other.row(r) {
                    trip.push((r as u32, c as u32, b * v));
                }
            }
            if let Some(d) = diag {
                trip.push((r as u32, r as u32, d[r]));
            }
        }
        CsrMatrix::from_triplets(self.dim, trip)
    }

    pub fn matvec_real(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = self.values[k];
                let xc = x[self.indices[k] as usize];
                re += v * xc.re;
                im += v * xc.im;
            }
            y[r] = Complex64::new(re, im);
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Upper bound on the spectral norm (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }

    /// Principal submatrix on a contiguous index range, as a dense
    /// column-major-agnostic row list.
    pub fn dense_block(&self, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        let n = range.len();
        let mut out = vec![vec![0.0; n]; n];
        for (i, r) in range.clone().enumerate() {
            for (c, v) in self.row(r) {
                if range.contains(&c) {
                    out[i][c - range.start] = v;
                }
            }
        }
        out
    }
}
