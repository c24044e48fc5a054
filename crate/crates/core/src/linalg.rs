//! Dense linear-algebra helpers: singular values, numerical rank, kernels,
//! extreme eigenvalues and the seeded generator used by every randomized
//! routine in the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;

pub type Rng64 = ChaCha8Rng;

/// Deterministic generator for a seed.
pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream from a parent seed and a stream tag.
pub fn derived_rng(seed: u64, stream: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector(rng: &mut Rng64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values strictly above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > top * rel_tol).count(),
        _ => 0,
    }
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let s = &svd.singular_values;
    let top = s.iter().copied().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..s.len())
        .filter(|&i| top == 0.0 || s[i] <= top * rel_tol)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    basis
}

/// Eigenvalues of a symmetric matrix in ascending order, with eigenvectors
/// as the matching columns.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigenvalues();
    eig.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Symmetric positive-definite square root, or `None` when `p` is not
/// positive definite.
pub fn spd_sqrt(p: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (values, vectors) = sorted_symmetric_eigen(p);
    if values.first().is_none_or(|&v| v <= 0.0) {
        return None;
    }
    let roots = DVector::from_iterator(values.len(), values.iter().map(|v| v.sqrt()));
    let root = &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose();
    Some((&root + root.transpose()) * 0.5)
}

/// Frobenius inner product `tr(X^T Y)`.
pub fn frobenius_dot(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Unit vector in the direction of `v`, or `None` for a zero vector.
pub fn normalized(v: &DVector<f64>) -> Option<DVector<f64>> {
    let norm = v.norm();
    (norm > 0.0 && norm.is_finite()).then(|| v / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_diagonal_with_zero() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 0.0]));
        assert_eq!(numerical_rank(&m, 1e-10), 2);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-10), 0);
    }

    #[test]
    fn singular_values_are_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 5.0, 1.0, 3.0, 0.0, 0.5]);
        let s = singular_values(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = null_space(&m, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-14);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn spd_sqrt_squares_back() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = spd_sqrt(&p).unwrap();
        assert!((&r * &r - &p).norm() < 1e-14);
        assert!(spd_sqrt(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_none());
    }

    #[test]
    fn derived_streams_differ() {
        let a = gaussian_vector(&mut derived_rng(7, 1), 4);
        let b = gaussian_vector(&mut derived_rng(7, 2), 4);
        let c = gaussian_vector(&mut derived_rng(7, 1), 4);
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
