//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric eigendecomposition with eigenpairs sorted by decreasing eigenvalue.
pub(crate) fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Inverse of a symmetric positive definite matrix through its eigendecomposition.
///
/// Eigenvalues below `rel_floor * max_eigenvalue` are raised to that floor; the
/// number of raised eigenvalues is returned with the inverse and the condition
/// number of the unfloored matrix.
pub(crate) fn sym_inverse_floored(m: &DMatrix<f64>, rel_floor: f64) -> (DMatrix<f64>, usize, f64) {
    let (vals, vecs) = sym_eigen_desc(m.clone());
    let max = vals.first().copied().unwrap_or(0.0);
    let min = vals.last().copied().unwrap_or(0.0);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    let floor = rel_floor * max;
    let mut floored = 0;
    let inv_vals: Vec<f64> = vals
        .iter()
        .map(|&v| {
            if v < floor {
                floored += 1;
                1.0 / floor
            } else {
                1.0 / v
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * inv_vals[j]);
    (&scaled * vecs.transpose(), floored, condition)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
