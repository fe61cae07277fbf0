use faer::sparse::{SparseColMat, Triplet};

use crate::{Error, Result};

/// Real sparse matrix in compressed row form with duplicate entries summed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperatorMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Set when the interior block (rows and columns flagged interior) is symmetric.
    pub symmetric: bool,
}

impl SparseOperatorMatrix {
    /// Builds from `(row, col, value)` triplets. Entries are sorted by `(row, col)` and duplicates summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::input(format!("entry ({r}, {c}) outside a {nrows}x{ncols} matrix")));
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, cols, vals, symmetric: false })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |p| v[p])
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            out.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length does not match matrix columns");
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        let mut m = Self::from_triplets(self.ncols, self.nrows, t).expect("transpose stays in bounds");
        m.symmetric = self.symmetric;
        m
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::input("matrix shapes differ"));
        }
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::input("inner matrix dimensions differ"));
        }
        let mut t = Vec::new();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&k, &a) in c.iter().zip(v) {
                let (c2, v2) = other.row(k);
                t.extend(c2.iter().zip(v2).map(|(&j, &b)| (i, j, a * b)));
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// Keeps rows in `rows` and columns in `cols` (given as ordered index lists), renumbered.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if col_map[j] != usize::MAX {
                    t.push((ni, col_map[j], x));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), t).expect("submatrix indices are in range")
    }

    /// Largest `|A_ij - s * A_ji|` over the block `rows x rows`, with `s = 1` for symmetry and `s = -1` for antisymmetry.
    pub fn symmetry_defect(&self, rows: &[usize], sign: f64) -> f64 {
        let b = self.submatrix(rows, rows);
        let mut worst = 0.0f64;
        for i in 0..b.nrows {
            let (c, v) = b.row(i);
            for (&j, &x) in c.iter().zip(v) {
                worst = worst.max((x - sign * b.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> =
            self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).expect("triplets are in range and summed")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}
