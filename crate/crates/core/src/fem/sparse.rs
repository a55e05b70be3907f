use rayon::prelude::*;

/// Marker for constrained or absent degrees of freedom in dof maps.
pub const NO_DOF: usize = usize::MAX;

const PARALLEL_ROWS: usize = 16_384;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

/// Receives element contributions during assembly.
pub trait Sink {
    /// Adds the dense block `local` (row-major, `rows.len() × cols.len()`).
    /// Entries whose row or column is [`NO_DOF`] are dropped.
    fn add(&mut self, rows: &[usize], cols: &[usize], local: &[f64]);
}

/// Collects the sparsity pattern in a first assembly pass.
pub struct PatternBuilder {
    ncols: usize,
    rows: Vec<Vec<u32>>,
}

impl PatternBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn finish(self) -> CsrMatrix {
        let nrows = self.rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for mut r in self.rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }
}

impl Sink for PatternBuilder {
    fn add(&mut self, rows: &[usize], cols: &[usize], _local: &[f64]) {
        for &r in rows {
            if r == NO_DOF {
                continue;
            }
            let row = &mut self.rows[r];
            row.extend(cols.iter().filter(|&&c| c != NO_DOF).map(|&c| c as u32));
            if row.len() > 256 {
                row.sort_unstable();
                row.dedup();
            }
        }
    }
}

impl Sink for CsrMatrix {
    fn add(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        let nc = cols.len();
        for (a, &r) in rows.iter().enumerate() {
            if r == NO_DOF {
                continue;
            }
            for (b, &c) in cols.iter().enumerate() {
                let v = local[a * nc + b];
                if c == NO_DOF || v == 0.0 {
                    continue;
                }
                self.add_entry(r, c, v);
            }
        }
    }
}

/// Runs `visit` twice: once to collect the pattern, once to fill values.
pub fn assemble(nrows: usize, ncols: usize, visit: impl Fn(&mut dyn Sink)) -> CsrMatrix {
    let mut pattern = PatternBuilder::new(nrows, ncols);
    visit(&mut pattern);
    let mut m = pattern.finish();
    visit(&mut m);
    m
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from a dense row-major array, keeping nonzeros only.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(nrows, ncols);
        m.row_ptr.clear();
        m.row_ptr.push(0);
        for r in rows {
            for (c, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    m.col_idx.push(c as u32);
                    m.values.push(v);
                }
            }
            m.row_ptr.push(m.col_idx.len());
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].binary_search(&(c as u32)).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` at `(r, c)`; the entry must be part of the pattern.
    pub fn add_entry(&mut self, r: usize, c: usize, v: f64) {
        let k = self
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) outside sparsity pattern"));
        self.values[k] += v;
    }

    /// Same pattern, all values zero.
    pub fn zeroed(&self) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v = 0.0);
        m
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `self += alpha * other` for matrices sharing a pattern.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert!(self.same_pattern(other), "axpy requires identical patterns");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        let row = |r: usize| -> f64 {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_idx[k] as usize];
            }
            s
        };
        if self.nrows >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row(r);
            }
        }
    }

    /// `y += alpha A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.nrows];
        self.mul_vec(x, &mut t);
        for (a, b) in y.iter_mut().zip(&t) {
            *a += alpha * b;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|r| self.get(r, r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c as usize];
                col_idx[k] = r as u32;
                values[k] = v;
                next[c as usize] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over all entries.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut m: f64 = 0.0;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m = m.max((v - t.get(r, c as usize)).abs());
            }
            let (cols, vals) = t.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m = m.max((v - self.get(r, c as usize)).abs());
            }
        }
        m
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply(y))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] += v;
            }
        }
        d
    }
}

/// Sequential dot product; fixed summation order keeps results reproducible.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
