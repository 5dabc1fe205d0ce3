//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order (columns of the returned matrix follow).
pub fn sym_eigen_desc(a: &Matrix) -> (Vector, Matrix) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        canonical_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Flip `v` so its largest-magnitude entry is positive (first one on ties).
pub fn canonical_sign(v: &mut Vector) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Column means of `x`.
pub fn column_means(x: &Matrix) -> Vector {
    let n = x.nrows().max(1) as f64;
    Vector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// `x` with column means removed, plus the removed means.
pub fn center_columns(x: &Matrix) -> (Matrix, Vector) {
    let means = column_means(x);
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (c, means)
}

/// Euclidean distance between rows `i` of `a` and `j` of `b`.
pub fn row_distance(a: &Matrix, i: usize, b: &Matrix, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..a.ncols() {
        let d = a[(i, k)] - b[(j, k)];
        s += d * d;
    }
    s.sqrt()
}

/// All pairwise Euclidean distances between rows of `x`.
pub fn pairwise_distances(x: &Matrix) -> Matrix {
    let n = x.nrows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = row_distance(x, i, x, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Inverse square root of a symmetric positive-definite matrix.
pub fn inv_sqrt_spd(a: &Matrix) -> Option<Matrix> {
    let (vals, vecs) = sym_eigen_desc(a);
    if vals.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let d = Matrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    Some(&vecs * d * vecs.transpose())
}

/// Orthonormal basis of the column space of `x` (thin SVD), with the
/// numerical rank determined relative to the largest singular value.
pub fn orthonormal_basis(x: &Matrix, rel_tol: f64) -> (Matrix, usize) {
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("svd computed with u");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let keep: Vec<usize> = idx
        .into_iter()
        .filter(|&i| smax > 0.0 && s[i] > rel_tol * smax)
        .collect();
    let mut basis = Matrix::zeros(x.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    let rank = keep.len();
    (basis, rank)
}
