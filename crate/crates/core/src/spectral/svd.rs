use nalgebra::{DMatrix, DVector};

use super::SpectralPair;
use crate::error::{Error, Result};

/// Leading singular triplets of `D_u^{-1/2} X D_v^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    /// Descending.
    pub singular_values: DVector<f64>,
    /// `n x K`
    pub left_vectors: DMatrix<f64>,
    /// `d x K`
    pub right_vectors: DMatrix<f64>,
    /// Row sums of `X`.
    pub row_degrees: DVector<f64>,
    /// Column sums of `X`.
    pub col_degrees: DVector<f64>,
}

impl SvdTriple {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// Lowest eigenpairs of the bipartite Laplacian implied by the SVD:
    /// `lambda_k = 1 - sigma_k` with eigenvector `[u_k; v_k] / sqrt(2)`.
    pub fn bipartite_eigenpairs(&self) -> SpectralPair {
        let (n, d, k) = (
            self.left_vectors.nrows(),
            self.right_vectors.nrows(),
            self.len(),
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eigenvectors = DMatrix::from_fn(n + d, k, |i, c| {
            if i < n {
                self.left_vectors[(i, c)] * s
            } else {
                self.right_vectors[(i - n, c)] * s
            }
        });
        SpectralPair {
            eigenvalues: self.singular_values.map(|sv| 1.0 - sv),
            eigenvectors,
        }
    }
}

fn pinv_sqrt(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v.sqrt()
    } else {
        0.0
    }
}

/// `K` largest singular triplets of the degree-normalized feature matrix.
///
/// Zero rows or columns of `X` take the pseudo-inverse convention. Each
/// `(u_k, v_k)` pair is sign-fixed jointly so that the first nonzero entry
/// of `[u_k; v_k]` is positive.
pub fn truncated_svd_normalized(x: &DMatrix<f64>, k: usize) -> Result<SvdTriple> {
    let (n, d) = (x.nrows(), x.ncols());
    let rank = n.min(d);
    if k == 0 || k > rank {
        return Err(Error::RankOutOfRange {
            requested: k,
            available: rank,
        });
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParams(
            "feature matrix must be finite and nonnegative".into(),
        ));
    }
    let row_degrees = DVector::from_iterator(n, x.row_iter().map(|r| r.sum()));
    let col_degrees = DVector::from_iterator(d, x.column_iter().map(|c| c.sum()));
    let ru = row_degrees.map(pinv_sqrt);
    let rv = col_degrees.map(pinv_sqrt);
    let b = DMatrix::from_fn(n, d, |i, j| ru[i] * x[(i, j)] * rv[j]);

    let svd = b.svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    order.truncate(k);

    let singular_values = DVector::from_iterator(k, order.iter().map(|&c| svd.singular_values[c]));
    let mut left_vectors = DMatrix::from_fn(n, k, |i, c| u[(i, order[c])]);
    let mut right_vectors = DMatrix::from_fn(d, k, |j, c| vt[(order[c], j)]);
    for c in 0..k {
        let first = left_vectors
            .column(c)
            .iter()
            .chain(right_vectors.column(c).iter())
            .copied()
            .find(|v| v.abs() > 1e-10);
        if matches!(first, Some(f) if f < 0.0) {
            left_vectors.column_mut(c).neg_mut();
            right_vectors.column_mut(c).neg_mut();
        }
    }
    Ok(SvdTriple {
        singular_values,
        left_vectors,
        right_vectors,
        row_degrees,
        col_degrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_feature_bipartite, normalized_laplacian, Graph};
    use crate::spectral::eig_sym_dense;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_cell() {
        let t = truncated_svd_normalized(&DMatrix::from_element(1, 1, 1.0), 1).unwrap();
        assert_abs_diff_eq!(t.singular_values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.bipartite_eigenpairs().eigenvalues[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_features() {
        let t = truncated_svd_normalized(&DMatrix::identity(2, 2), 2).unwrap();
        assert_abs_diff_eq!(t.singular_values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.singular_values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_checked() {
        assert!(truncated_svd_normalized(&DMatrix::identity(2, 3), 3).is_err());
        assert!(truncated_svd_normalized(&DMatrix::identity(2, 3), 0).is_err());
    }

    #[test]
    fn matches_bipartite_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = DMatrix::from_fn(10, 7, |_, _| rng.gen_range(0.05..1.0));
        let t = truncated_svd_normalized(&x, 7).unwrap();
        let g = Graph::new(10, [], Some(x)).unwrap();
        let b = build_feature_bipartite(&g).unwrap();
        let dense = eig_sym_dense(&normalized_laplacian(&b.base)).unwrap();
        let implied = t.bipartite_eigenpairs();
        for c in 0..7 {
            assert_abs_diff_eq!(dense.eigenvalues[c], implied.eigenvalues[c], epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_row_keeps_identity() {
        // an all-zero row is an isolated vertex with eigenvalue 1 = 1 - 0
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.2, 0.0, 1.0]);
        let t = truncated_svd_normalized(&x, 3).unwrap();
        let g = Graph::new(3, [], Some(x)).unwrap();
        let b = build_feature_bipartite(&g).unwrap();
        let dense = eig_sym_dense(&normalized_laplacian(&b.base)).unwrap();
        for c in 0..3 {
            assert_abs_diff_eq!(dense.eigenvalues[c], 1.0 - t.singular_values[c], epsilon = 1e-8);
        }
    }
}
