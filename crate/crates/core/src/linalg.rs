//! Small dense helpers shared by the solver modules.

use faer::{Mat, Side};

use crate::{Error, Result};

/// Runs every dense and sparse kernel single-threaded. Multithreaded kernels split sums
/// by the size of the current thread pool, so results would otherwise depend on it.
pub fn pin_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Euclidean norm over entries where `mask` is set.
pub fn masked_norm(a: &[f64], mask: &[bool]) -> f64 {
    a.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| x * x).sum::<f64>().sqrt()
}

/// Singular values (descending) and right singular vectors of `a`, including a full
/// basis of the right null space when `a` has fewer rows than columns.
pub fn right_svd(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    if m == 0 {
        return Ok((Vec::new(), Mat::identity(n, n)));
    }
    if m >= n {
        let svd = a.thin_svd().map_err(|e| Error::solver(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector().iter().copied().collect();
        Ok((s, svd.V().to_owned()))
    } else {
        let svd = a.svd().map_err(|e| Error::solver(format!("SVD failed: {e:?}")))?;
        let s = svd.S().column_vector().iter().copied().collect();
        Ok((s, svd.V().to_owned()))
    }
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::solver(format!("symmetric eigensolver failed: {e:?}")))?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

/// Largest `|(Q^T Q - I)_ij|`.
pub fn orthonormality_defect(q: &Mat<f64>) -> f64 {
    let g = q.transpose() * q;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Least-squares line `y = a + b x`; returns `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::input("linear fit needs at least two paired points"));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("linear fit needs distinct abscissae"));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((a, b, r2))
}
