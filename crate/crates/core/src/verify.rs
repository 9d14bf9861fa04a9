//! Self-check suites run by `spectral-augment verify`.
//!
//! Every check reports a measured quantity against a tolerance and passes
//! when `measured <= tolerance * tol_scale`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::augment::{gumbel_sample, project_budget, Mode, PerturbationPlan, SpectralObjective};
use crate::error::{Error, Result};
use crate::graph::{build_feature_bipartite, generate_er, laplacian_from_adjacency, Graph};
use crate::perturbation::{eigenvalue_change_single_flip, perturbation_bounds, BoundMode};
use crate::spectral::{
    eig_sym_dense, laplacian_eigenvalues, lanczos_lowest_k, truncated_svd_normalized,
    LaplacianOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Theorems,
    Gradients,
    Sampling,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "theorems" => Ok(Suite::Theorems),
            "gradients" => Ok(Suite::Gradients),
            "sampling" => Ok(Suite::Sampling),
            _ => Err(Error::InvalidParams(format!("unknown suite `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerifyReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        Self { checks, overall }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<28} measured={:.3e} tolerance={:.3e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            ));
        }
        s.push_str(if self.overall { "overall: PASS\n" } else { "overall: FAIL\n" });
        s
    }
}

fn check(name: &str, measured: f64, tolerance: f64, scale: f64) -> Check {
    Check {
        name: name.to_string(),
        passed: measured.is_finite() && measured <= tolerance * scale,
        measured,
        tolerance: tolerance * scale,
    }
}

pub fn run_verify(suite: Suite, seed: u64) -> VerifyReport {
    run_verify_scaled(suite, seed, 1.0)
}

/// As [`run_verify`], with every tolerance multiplied by `tol_scale`.
/// Internal errors become failing checks.
pub fn run_verify_scaled(suite: Suite, seed: u64, tol_scale: f64) -> VerifyReport {
    let mut checks = Vec::new();
    let mut run = |name: &str, tol: f64, f: &dyn Fn(u64) -> Result<f64>| {
        let measured = f(seed).unwrap_or(f64::INFINITY);
        checks.push(check(name, measured, tol, tol_scale));
    };
    if matches!(suite, Suite::All | Suite::Theorems) {
        run("sandwich_bounds", 1e-8, &sandwich_violation);
        run("bipartite_svd_eigenvalues", 1e-8, &|s| bipartite_identity(s).map(|r| r.0));
        run("bipartite_svd_eigenvectors", 1e-6, &|s| bipartite_identity(s).map(|r| r.1));
        run("first_order_halving", 1.0 / 3.0, &first_order_halving);
        run("lanczos_vs_dense", 1e-6, &lanczos_vs_dense);
    }
    if matches!(suite, Suite::All | Suite::Gradients) {
        for mode in Mode::ALL {
            let name = format!("fd_gradient_{}", mode.name().replace('-', "_"));
            run(&name, 1e-4, &move |s| fd_gradient_error(mode, s));
        }
    }
    if matches!(suite, Suite::All | Suite::Sampling) {
        run("projection_vs_kkt", 1e-6, &projection_vs_kkt);
        run("projection_idempotence", 1e-10, &projection_idempotence);
        run("gumbel_marginals", 0.02, &gumbel_marginals);
    }
    VerifyReport::from_checks(checks)
}

fn random_weighted(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, rng.gen_range(0.5..2.0)));
            }
        }
    }
    Graph::new(n, edges, None)
}

/// Largest violation of `lower <= sum |first-order change| <= upper` over
/// every single-pair flip (drop an edge or add a unit edge) of 50 graphs.
pub fn sandwich_violation(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..50 {
        let n = rng.gen_range(6..=20);
        let g = if t % 2 == 0 {
            generate_er(n, 0.3, rng.gen())?
        } else {
            random_weighted(n, 0.3, &mut rng)?
        };
        let sp = eig_sym_dense(&laplacian_from_adjacency(&g.adjacency()))?;
        let deg = g.degrees();
        let idx = g.edge_index();
        for i in 0..n {
            for j in (i + 1)..n {
                let dw = idx.get(&(i, j)).map_or(1.0, |&e| -g.edges()[e].w);
                let est = eigenvalue_change_single_flip(&sp, &deg, i, j, dw)?;
                let (lo, hi) = perturbation_bounds(&sp, i, j, BoundMode::Topology)?;
                let s = est.total_absolute_change;
                worst = worst.max(lo - s).max(s - hi);
            }
        }
    }
    Ok(worst.max(0.0))
}

/// Eigenvalue and eigenvector agreement between the bipartite Laplacian and
/// the normalized-feature SVD over 20 positive `10 x 7` matrices.
pub fn bipartite_identity(seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (10, 7);
    let (mut val_err, mut vec_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let x = DMatrix::from_fn(n, d, |_, _| rng.gen_range(0.05..1.0));
        let t = truncated_svd_normalized(&x, d)?;
        let b = build_feature_bipartite(&Graph::new(n, [], Some(x))?)?;
        let dense = eig_sym_dense(&laplacian_from_adjacency(&b.base.adjacency()))?;
        let implied = t.bipartite_eigenpairs();
        for c in 0..d {
            val_err = val_err.max((dense.eigenvalues[c] - implied.eigenvalues[c]).abs());
            // sigma values are distinct for generic positive X, so each
            // eigenvector is determined up to sign
            let u = dense.eigenvectors.column(c);
            let w = implied.eigenvectors.column(c);
            let e = (u - w).amax().min((u + w).amax());
            vec_err = vec_err.max(e);
        }
    }
    Ok((val_err, vec_err))
}

/// Reciprocal of the shrink factor of the first-order error when the weight
/// change halves from `1e-3` to `5e-4`; at most `1/3` means at least 3x.
pub fn first_order_halving(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut big, mut small) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let g = random_weighted(12, 0.4, &mut rng)?;
        let a = g.adjacency();
        let sp = eig_sym_dense(&laplacian_from_adjacency(&a))?;
        let deg = g.degrees();
        for e in g.edges() {
            for (dw, slot) in [(1e-3, &mut big), (5e-4, &mut small)] {
                let est = eigenvalue_change_single_flip(&sp, &deg, e.i, e.j, dw)?;
                let mut b = a.clone();
                b[(e.i, e.j)] += dw;
                b[(e.j, e.i)] += dw;
                let exact = laplacian_eigenvalues(&b);
                for y in 0..sp.len() {
                    let err = (exact[y] - sp.eigenvalues[y] - est.per_eigenvalue_changes[y]).abs();
                    *slot = slot.max(err);
                }
            }
        }
    }
    Ok(if big > 0.0 { small / big } else { 0.0 })
}

/// Largest gap between Lanczos and dense for the 6 lowest eigenvalues of
/// ER(200, 0.05).
pub fn lanczos_vs_dense(seed: u64) -> Result<f64> {
    let g = generate_er(200, 0.05, seed)?;
    let dense = eig_sym_dense(&laplacian_from_adjacency(&g.adjacency()))?;
    let op = LaplacianOperator::new(&g);
    let lz = lanczos_lowest_k(|x| op.apply(x), g.n(), 6, seed)?;
    Ok((0..6)
        .map(|c| (lz.eigenvalues[c] - dense.eigenvalues[c]).abs())
        .fold(0.0, f64::max))
}

const FD_STEP: f64 = 1e-5;
const GAP_MIN: f64 = 1e-3;

/// Worst relative error of the analytic gradient against central
/// differences on 20 weighted ER graphs (`n = 12`) at interior plans.
/// Graphs whose perturbed spectrum has a gap below `1e-3` among the
/// `K + 1` lowest eigenvalues are skipped.
pub fn fd_gradient_error(mode: Mode, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((mode as u64 + 1) * 0x1000));
    let (n, k) = (12, 6);
    let mut worst = 0.0f64;
    let mut used = 0;
    for _ in 0..20 {
        let mut g = random_weighted(n, 0.4, &mut rng)?;
        if mode == Mode::FeatureMask {
            let x = DMatrix::from_fn(n, 7, |_, _| {
                if rng.gen::<f64>() < 0.7 {
                    rng.gen_range(0.1..1.0)
                } else {
                    0.0
                }
            });
            g = g.with_features(Some(x))?;
        }
        let mut plan = PerturbationPlan::zeros(&g, mode, f64::MAX)?;
        plan.values.iter_mut().for_each(|v| *v = rng.gen_range(0.1..0.4));
        let obj = SpectralObjective::new(&g, mode, k)?;
        if !well_separated(&g, &plan, k)? {
            continue;
        }
        used += 1;
        let (_, grad) = obj.loss_and_gradient(&plan)?;
        for e in 0..plan.len() {
            let mut q = plan.clone();
            q.values[e] += FD_STEP;
            let up = obj.loss(&q)?;
            q.values[e] -= 2.0 * FD_STEP;
            let down = obj.loss(&q)?;
            let fd = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(grad[e], fd));
        }
    }
    if used == 0 {
        return Err(Error::Degenerate("every sampled spectrum was degenerate".into()));
    }
    Ok(worst)
}

/// `|a - b| / max(|b|, 1e-6)`: relative where the derivative is
/// resolvable, absolute below the level that central differences at
/// `h = 1e-5` can measure.
pub fn relative_error(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / fd.abs().max(1e-6)
}

fn well_separated(g: &Graph, plan: &PerturbationPlan, k: usize) -> Result<bool> {
    let vals: Vec<f64> = match plan.mode {
        Mode::FeatureMask => {
            let mut x = g.features().ok_or(Error::MissingFeatures)?.clone();
            for (&(i, j), &v) in plan.support.iter().zip(&plan.values) {
                x[(i, j)] *= 1.0 - v;
            }
            let b = build_feature_bipartite(&Graph::new(x.nrows(), [], Some(x))?)?;
            laplacian_eigenvalues(&b.base.adjacency()).iter().copied().collect()
        }
        _ => {
            let h = crate::augment::perturbed_graph(g, plan)?;
            laplacian_eigenvalues(&h.adjacency()).iter().copied().collect()
        }
    };
    Ok(vals
        .windows(2)
        .take(k)
        .all(|w| w[1] - w[0] > GAP_MIN))
}

/// Exact projection of a short vector onto `[0, 1]^s` with `sum <= budget`
/// by enumerating every KKT pattern (each entry at 0, at 1 or free).
pub fn projection_by_kkt(v: &[f64], budget: f64) -> Vec<f64> {
    let s = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let patterns = 3usize.pow(s as u32);
    for code in 0..patterns {
        let mut pat = Vec::with_capacity(s);
        let mut c = code;
        for _ in 0..s {
            pat.push(c % 3);
            c /= 3;
        }
        let free: Vec<usize> = (0..s).filter(|&i| pat[i] == 2).collect();
        let ones = pat.iter().filter(|p| **p == 1).count() as f64;
        let mut shifts = vec![0.0];
        if !free.is_empty() {
            let t = (free.iter().map(|&i| v[i]).sum::<f64>() + ones - budget) / free.len() as f64;
            if t > 0.0 {
                shifts.push(t);
            }
        }
        for t in shifts {
            let cand: Vec<f64> = (0..s)
                .map(|i| match pat[i] {
                    0 => 0.0,
                    1 => 1.0,
                    _ => v[i] - t,
                })
                .collect();
            let feasible = cand.iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x))
                && cand.iter().sum::<f64>() <= budget + 1e-12;
            if !feasible {
                continue;
            }
            let dist: f64 = cand.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                best = Some((dist, cand));
            }
        }
    }
    best.expect("the zero vector is always feasible").1
}

fn random_projection_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let v = (0..3).map(|_| rng.gen_range(-0.5..1.5)).collect();
    (v, rng.gen_range(0.0..2.5))
}

pub fn projection_vs_kkt(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (v, b) = random_projection_instance(&mut rng);
        let (p, q) = (project_budget(&v, b), projection_by_kkt(&v, b));
        worst = worst.max(p.iter().zip(&q).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

pub fn projection_idempotence(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (v, b) = random_projection_instance(&mut rng);
        let p = project_budget(&v, b);
        let q = project_budget(&p, b);
        worst = worst.max(p.iter().zip(&q).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Largest `|frequency - p|` over `p in {0.1, 0.3, 0.5, 0.9}`, `10^4` draws
/// each at temperature 0.1.
pub fn gumbel_marginals(seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (t, p) in [0.1, 0.3, 0.5, 0.9].into_iter().enumerate() {
        let mask = gumbel_sample(&vec![p; 10_000], 0.1, seed.wrapping_add(t as u64))?;
        let freq = mask.iter().filter(|b| **b).count() as f64 / 1e4;
        worst = worst.max((freq - p).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kkt_examples() {
        let p = projection_by_kkt(&[0.5, 0.5, 0.0], 0.6);
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);
        assert_eq!(projection_by_kkt(&[1.7, -0.2, 0.4], 10.0), vec![1.0, 0.0, 0.4]);
    }

    #[test]
    fn theorems_pass() {
        let r = run_verify(Suite::Theorems, 0);
        assert!(r.overall, "{}", r.render());
    }

    #[test]
    fn zero_scale_fails() {
        let r = run_verify_scaled(Suite::Theorems, 0, 0.0);
        assert!(!r.overall);
        assert!(r.checks.iter().any(|c| c.name.starts_with("bipartite") && !c.passed));
    }

    #[test]
    fn sampling_passes() {
        let r = run_verify(Suite::Sampling, 1);
        assert!(r.overall, "{}", r.render());
        assert_eq!(r.checks.len(), 3);
    }
}
