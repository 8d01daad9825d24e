//! Dense linear-algebra helpers shared by the LSDR and LEML baselines.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Top-`k` eigenpairs of a symmetric matrix, eigenvalues descending (ties
/// toward the smaller original index). Vectors are returned as columns.
pub fn sym_top_k(mat: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mat.nrows();
    if mat.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: mat.ncols() });
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}×{n} matrix")));
    }
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vecs = DMatrix::zeros(n, k);
    let mut vals = Vec::with_capacity(k);
    for (c, &i) in order.iter().take(k).enumerate() {
        vals.push(eig.eigenvalues[i]);
        let mut col = eig.eigenvectors.column(i).into_owned();
        // fix the sign so the largest-magnitude entry is positive
        let (imax, _) = col.iter().enumerate().fold((0, 0.0f64), |acc, (r, v)| {
            if v.abs() > acc.1 {
                (r, v.abs())
            } else {
                acc
            }
        });
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        vecs.set_column(c, &col);
    }
    Ok((vals, vecs))
}

/// Orthonormal basis `Q` (n × rank) of the column space of `x`, from a
/// column-pivoted QR factorization. `Q Qᵀ` is the hat matrix `X X⁺`.
pub fn column_space_basis(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return DMatrix::zeros(n, 0);
    }
    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let diag_max = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = diag_max * (n.max(d) as f64) * f64::EPSILON * 10.0;
    let rank = (0..r.nrows().min(r.ncols())).take_while(|&i| r[(i, i)].abs() > tol).count();
    let q = qr.q();
    q.columns(0, rank).into_owned()
}

/// Ridge regression `argmin_B ‖X B − T‖² + ridge ‖B‖²`, solved on whichever
/// side of `X` is smaller.
pub fn ridge_regression(x: &DMatrix<f64>, targets: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let (n, d) = x.shape();
    if targets.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: targets.nrows() });
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge must be nonnegative, got {ridge}")));
    }
    if ridge == 0.0 {
        return lstsq(x, targets);
    }
    if d <= n {
        let mut gram = x.tr_mul(x);
        for i in 0..d {
            gram[(i, i)] += ridge;
        }
        let rhs = x.tr_mul(targets);
        let chol = gram.cholesky().ok_or_else(|| Error::Numerical("ridge system not positive definite".into()))?;
        Ok(chol.solve(&rhs))
    } else {
        let mut gram = x * x.transpose();
        for i in 0..n {
            gram[(i, i)] += ridge;
        }
        let chol = gram.cholesky().ok_or_else(|| Error::Numerical("ridge system not positive definite".into()))?;
        Ok(x.transpose() * chol.solve(targets))
    }
}

/// Minimum-norm least-squares solution of `A B = T`.
pub fn lstsq(a: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if t.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: t.nrows() });
    }
    if a.ncols() == 0 {
        return Ok(DMatrix::zeros(0, t.ncols()));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(t, eps).map_err(|e| Error::Numerical(e.to_string()))
}
