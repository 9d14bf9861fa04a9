//! Eigendecompositions of normalized Laplacians.
//!
//! Full decompositions go through nalgebra's symmetric solver; the selective
//! path is a restarted Lanczos iteration with full reorthogonalization. Both
//! return eigenvalues ascending and fix eigenvector signs so that the first
//! nonzero component of every column is positive.

mod lanczos;
mod svd;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian_from_adjacency, Graph};

pub use lanczos::{lanczos_lowest_k, lanczos_lowest_k_with, LanczosOptions, LaplacianOperator};
pub use svd::{truncated_svd_normalized, SvdTriple};

/// Graphs at or below this size are decomposed densely.
pub const DEFAULT_DENSE_THRESHOLD: usize = 256;

const SYMMETRY_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub eigenvalues: DVector<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralPair {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Keeps the `k` lowest pairs.
    pub fn truncated(&self, k: usize) -> SpectralPair {
        let k = k.min(self.len());
        SpectralPair {
            eigenvalues: self.eigenvalues.rows(0, k).into_owned(),
            eigenvectors: self.eigenvectors.columns(0, k).into_owned(),
        }
    }

    /// Squared distance between rows `i` and `j` of the eigenvector matrix.
    pub fn row_distance_sq(&self, i: usize, j: usize) -> f64 {
        let u = &self.eigenvectors;
        (0..u.ncols()).map(|k| (u[(i, k)] - u[(j, k)]).powi(2)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpectralPairJson::from(self)).expect("spectrum serializes")
    }
}

/// `{"eigenvalues": [...], "eigenvectors": [[...row...], ...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralPairJson {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl From<&SpectralPair> for SpectralPairJson {
    fn from(sp: &SpectralPair) -> Self {
        Self {
            eigenvalues: sp.eigenvalues.iter().copied().collect(),
            eigenvectors: sp
                .eigenvectors
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

/// Flips columns so that their first non-negligible entry is positive.
pub(crate) fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > SIGN_TOL) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Full decomposition of a symmetric matrix, eigenvalues ascending.
pub fn eig_sym_dense(m: &DMatrix<f64>) -> Result<SpectralPair> {
    if !m.is_square() {
        return Err(Error::SizeMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    fix_signs(&mut eigenvectors);
    Ok(SpectralPair {
        eigenvalues,
        eigenvectors,
    })
}

/// The `k` lowest eigenpairs of a symmetric matrix: dense when `n` is at most
/// `dense_threshold`, Lanczos otherwise.
pub fn lowest_eigenpairs(
    m: &DMatrix<f64>,
    k: usize,
    dense_threshold: usize,
    seed: u64,
) -> Result<SpectralPair> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange {
            requested: k,
            available: n,
        });
    }
    if n <= dense_threshold {
        Ok(eig_sym_dense(m)?.truncated(k))
    } else {
        let asym = max_asymmetry(m);
        if asym > SYMMETRY_TOL {
            return Err(Error::Asymmetric(asym));
        }
        lanczos_lowest_k(|x: &DVector<f64>| m * x, n, k, seed)
    }
}

/// The `k` lowest eigenpairs of `Lap(g)`.
pub fn graph_spectrum(g: &Graph, k: usize) -> Result<SpectralPair> {
    if g.n() <= DEFAULT_DENSE_THRESHOLD {
        lowest_eigenpairs(&laplacian_from_adjacency(&g.adjacency()), k, usize::MAX, 0)
    } else {
        if k == 0 || k > g.n() {
            return Err(Error::RankOutOfRange {
                requested: k,
                available: g.n(),
            });
        }
        let op = LaplacianOperator::new(g);
        lanczos_lowest_k(|x: &DVector<f64>| op.apply(x), g.n(), k, 0)
    }
}

/// Eigenvalues only, ascending, of a weighted adjacency's normalized Laplacian.
pub fn laplacian_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let l = laplacian_from_adjacency(a);
    let mut vals: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    DVector::from_vec(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_er, normalized_laplacian};
    use approx::assert_abs_diff_eq;

    fn spectrum_of(edges: &[(usize, usize)], n: usize) -> SpectralPair {
        let g = Graph::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0)), None).unwrap();
        eig_sym_dense(&normalized_laplacian(&g)).unwrap()
    }

    #[test]
    fn p2_spectrum() {
        let sp = spectrum_of(&[(0, 1)], 2);
        assert_abs_diff_eq!(sp.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sp.eigenvalues[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn k3_spectrum() {
        let sp = spectrum_of(&[(0, 1), (0, 2), (1, 2)], 3);
        let expected = [0.0, 1.5, 1.5];
        for k in 0..3 {
            assert_abs_diff_eq!(sp.eigenvalues[k], expected[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn two_disjoint_p2() {
        let sp = spectrum_of(&[(0, 1), (2, 3)], 4);
        let expected = [0.0, 0.0, 2.0, 2.0];
        for k in 0..4 {
            assert_abs_diff_eq!(sp.eigenvalues[k], expected[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(eig_sym_dense(&m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn sign_convention_and_orthonormality() {
        let g = generate_er(30, 0.2, 4).unwrap();
        let l = normalized_laplacian(&g);
        let sp = eig_sym_dense(&l).unwrap();
        let u = &sp.eigenvectors;
        assert_abs_diff_eq!(u.transpose() * u, DMatrix::identity(30, 30), epsilon = 1e-8);
        for k in 0..30 {
            let first = u.column(k).iter().copied().find(|x| x.abs() > SIGN_TOL).unwrap();
            assert!(first > 0.0);
            let r = &l * u.column(k) - u.column(k) * sp.eigenvalues[k];
            assert!(r.norm() < 1e-7);
        }
        for w in sp.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn full_spectrum_rows_are_orthonormal() {
        let g = generate_er(20, 0.3, 9).unwrap();
        let sp = eig_sym_dense(&normalized_laplacian(&g)).unwrap();
        for i in 0..20 {
            assert_abs_diff_eq!(sp.eigenvectors.row(i).norm(), 1.0, epsilon = 1e-8);
            for j in (i + 1)..20 {
                assert_abs_diff_eq!(sp.row_distance_sq(i, j), 2.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn eigenvalues_in_unit_interval_times_two() {
        for seed in 0..5 {
            let g = generate_er(25, 0.15, seed).unwrap();
            let sp = eig_sym_dense(&normalized_laplacian(&g)).unwrap();
            assert!(sp.eigenvalues.iter().all(|&l| (-1e-9..=2.0 + 1e-9).contains(&l)));
        }
    }

    #[test]
    fn json_dump_shape() {
        let sp = spectrum_of(&[(0, 1)], 2);
        let v: serde_json::Value = serde_json::from_str(&sp.to_json()).unwrap();
        assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 2);
        assert_eq!(v["eigenvectors"][0].as_array().unwrap().len(), 2);
    }
}
