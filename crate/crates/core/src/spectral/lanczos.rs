use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fix_signs, SpectralPair};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Convergence threshold on `||A y - theta y||` for every wanted pair.
    pub tol: f64,
    /// Defaults to `10 * k`.
    pub max_restarts: Option<usize>,
    /// Basis size before a restart. Defaults to `max(2k + 20, 3k)`, capped at `n`.
    pub subspace: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_restarts: None,
            subspace: None,
        }
    }
}

/// Matrix-free `x -> Lap(g) x` over the edge list.
pub struct LaplacianOperator {
    n: usize,
    scale: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

impl LaplacianOperator {
    pub fn new(g: &Graph) -> Self {
        let scale = g
            .degrees()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        Self {
            n: g.n(),
            scale,
            edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        for &(i, j, w) in &self.edges {
            let c = self.scale[i] * w * self.scale[j];
            y[i] -= c * x[j];
            y[j] -= c * x[i];
        }
        debug_assert_eq!(y.len(), self.n);
        y
    }
}

pub fn lanczos_lowest_k<F>(apply: F, n: usize, k: usize, seed: u64) -> Result<SpectralPair>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    lanczos_lowest_k_with(apply, n, k, seed, &LanczosOptions::default())
}

/// Thick-restart Lanczos for the `k` smallest eigenpairs of a symmetric operator.
///
/// The basis is kept fully orthogonal (two Gram-Schmidt passes per vector)
/// and Ritz pairs come from an explicit Rayleigh quotient `Q^T A Q`. On
/// restart the lowest Ritz vectors are kept together with the current Krylov
/// residual direction, which preserves `A Y in span(Y, f)`.
pub fn lanczos_lowest_k_with<F>(
    apply: F,
    n: usize,
    k: usize,
    seed: u64,
    opts: &LanczosOptions,
) -> Result<SpectralPair>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange {
            requested: k,
            available: n,
        });
    }
    let m = opts.subspace.unwrap_or((2 * k + 20).max(3 * k)).clamp(k + 1, n.max(k + 1)).min(n);
    let keep = if m == n { k } else { (k + (m - k) / 2).min(m - 1) };
    let max_restarts = opts.max_restarts.unwrap_or(10 * k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(m);
    let q0 = random_unit(n, &mut rng, &basis).expect("empty basis admits a direction");
    images.push(apply(&q0));
    basis.push(q0);

    let mut worst = f64::INFINITY;
    for _restart in 0..=max_restarts {
        while basis.len() < m {
            let mut w = images.last().expect("nonempty").clone();
            let before = w.norm();
            orthogonalize(&mut w, &basis);
            let q = if w.norm() > 1e-10 * before.max(1.0) {
                w.normalize()
            } else {
                // invariant subspace reached; continue with a fresh direction
                match random_unit(n, &mut rng, &basis) {
                    Some(q) => q,
                    None => break,
                }
            };
            images.push(apply(&q));
            basis.push(q);
        }

        let dim = basis.len();
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = 0.5 * (basis[i].dot(&images[j]) + basis[j].dot(&images[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let wanted = keep.max(k).min(dim);
        let mut ritz = Vec::with_capacity(wanted);
        let mut ritz_images = Vec::with_capacity(wanted);
        for &c in order.iter().take(wanted) {
            let s = eig.eigenvectors.column(c);
            let mut y = DVector::zeros(n);
            let mut ay = DVector::zeros(n);
            for (t, coef) in s.iter().enumerate() {
                y.axpy(*coef, &basis[t], 1.0);
                ay.axpy(*coef, &images[t], 1.0);
            }
            ritz.push(y);
            ritz_images.push(ay);
        }

        worst = (0..k)
            .map(|t| (&ritz_images[t] - &ritz[t] * eig.eigenvalues[order[t]]).norm())
            .fold(0.0, f64::max);
        if worst <= opts.tol || dim == n {
            let eigenvalues = DVector::from_iterator(k, order.iter().take(k).map(|&c| eig.eigenvalues[c]));
            let mut eigenvectors = DMatrix::from_fn(n, k, |i, t| ritz[t][i]);
            fix_signs(&mut eigenvectors);
            if worst > opts.tol {
                return Err(Error::NoConvergence {
                    restarts: max_restarts,
                    residual: worst,
                });
            }
            return Ok(SpectralPair {
                eigenvalues,
                eigenvectors,
            });
        }

        let mut f = images.last().expect("nonempty").clone();
        orthogonalize(&mut f, &basis);
        ritz.truncate(keep);
        ritz_images.truncate(keep);
        basis = ritz;
        images = ritz_images;
        let next = if f.norm() > 1e-12 {
            let mut f = f.normalize();
            orthogonalize(&mut f, &basis);
            f.normalize()
        } else {
            match random_unit(n, &mut rng, &basis) {
                Some(q) => q,
                None => break,
            }
        };
        images.push(apply(&next));
        basis.push(next);
    }
    Err(Error::NoConvergence {
        restarts: max_restarts,
        residual: worst,
    })
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    if basis.len() >= n {
        return None;
    }
    for _ in 0..16 {
        let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        orthogonalize(&mut v, basis);
        let nrm = v.norm();
        if nrm > 1e-8 {
            return Some(v / nrm);
        }
    }
    None
}
