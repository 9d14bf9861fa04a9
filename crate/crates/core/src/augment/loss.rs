use nalgebra::{DMatrix, DVector};

use super::{Mode, PerturbationPlan};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::perturbation::eigenvalue_weight_derivatives;
use crate::spectral::{graph_spectrum, truncated_svd_normalized, SpectralPair};

/// The spectral-change objective of one mode on one graph, with the
/// original graph's `K` lowest eigenvalues cached.
#[derive(Debug, Clone)]
pub struct SpectralObjective<'g> {
    graph: &'g Graph,
    mode: Mode,
    k: usize,
    base: DVector<f64>,
}

/// Spectrum and degrees of a continuously perturbed graph. For feature
/// masking the degrees cover the `n + d` bipartite vertices.
struct Perturbed {
    spectrum: SpectralPair,
    degrees: Vec<f64>,
}

impl<'g> SpectralObjective<'g> {
    pub fn new(graph: &'g Graph, mode: Mode, k: usize) -> Result<Self> {
        let base = match mode {
            Mode::FeatureMask => {
                let x = graph.features().ok_or(Error::MissingFeatures)?;
                truncated_svd_normalized(x, k)?.singular_values.map(|s| 1.0 - s)
            }
            _ => graph_spectrum(graph, k)?.eigenvalues,
        };
        Ok(Self {
            graph,
            mode,
            k,
            base,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn base_eigenvalues(&self) -> &DVector<f64> {
        &self.base
    }

    fn check(&self, plan: &PerturbationPlan) -> Result<()> {
        if plan.mode != self.mode {
            return Err(Error::InconsistentPlan(format!(
                "plan mode {} against objective mode {}",
                plan.mode, self.mode
            )));
        }
        if plan.support.len() != plan.values.len() {
            return Err(Error::InconsistentPlan(
                "support and values differ in length".into(),
            ));
        }
        Ok(())
    }

    fn perturbed(&self, plan: &PerturbationPlan) -> Result<Perturbed> {
        match self.mode {
            Mode::FeatureMask => {
                let x = perturbed_features(self.graph, plan)?;
                let t = truncated_svd_normalized(&x, self.k)?;
                let degrees = t
                    .row_degrees
                    .iter()
                    .chain(t.col_degrees.iter())
                    .copied()
                    .collect();
                Ok(Perturbed {
                    spectrum: t.bipartite_eigenpairs(),
                    degrees,
                })
            }
            _ => {
                let h = perturbed_graph(self.graph, plan)?;
                Ok(Perturbed {
                    spectrum: graph_spectrum(&h, self.k)?,
                    degrees: h.degrees(),
                })
            }
        }
    }

    pub fn loss(&self, plan: &PerturbationPlan) -> Result<f64> {
        self.check(plan)?;
        let p = self.perturbed(plan)?;
        Ok((&p.spectrum.eigenvalues - &self.base).norm_squared())
    }

    /// `d lambda'_k / d value_e` as a `|support| x K` matrix.
    pub fn jacobian(&self, plan: &PerturbationPlan) -> Result<DMatrix<f64>> {
        self.check(plan)?;
        let p = self.perturbed(plan)?;
        Ok(self.jacobian_at(plan, &p))
    }

    pub fn loss_and_gradient(&self, plan: &PerturbationPlan) -> Result<(f64, Vec<f64>)> {
        self.check(plan)?;
        let p = self.perturbed(plan)?;
        let diff = &p.spectrum.eigenvalues - &self.base;
        let jac = self.jacobian_at(plan, &p);
        let grad = (0..plan.len())
            .map(|e| 2.0 * (0..self.k).map(|c| diff[c] * jac[(e, c)]).sum::<f64>())
            .collect();
        Ok((diff.norm_squared(), grad))
    }

    fn jacobian_at(&self, plan: &PerturbationPlan, p: &Perturbed) -> DMatrix<f64> {
        let k = self.k;
        let mut jac = DMatrix::zeros(plan.len(), k);
        let sp = &p.spectrum;
        match self.mode {
            Mode::EdgeDrop => {
                let idx = self.graph.edge_index();
                for (e, &(i, j)) in plan.support.iter().enumerate() {
                    let w0 = self.graph.edges()[idx[&(i, j)]].w;
                    let d = eigenvalue_weight_derivatives(sp, &p.degrees, i, j);
                    for c in 0..k {
                        jac[(e, c)] = -w0 * d[c];
                    }
                }
            }
            Mode::EdgeAdd => {
                for (e, &(i, j)) in plan.support.iter().enumerate() {
                    let d = eigenvalue_weight_derivatives(sp, &p.degrees, i, j);
                    for c in 0..k {
                        jac[(e, c)] = d[c];
                    }
                }
            }
            Mode::NodeDrop => {
                let mut row_of = vec![usize::MAX; self.graph.n()];
                for (e, &(v, _)) in plan.support.iter().enumerate() {
                    row_of[v] = e;
                }
                for edge in self.graph.edges() {
                    let (ri, rj) = (row_of[edge.i], row_of[edge.j]);
                    if ri == usize::MAX && rj == usize::MAX {
                        continue;
                    }
                    let d = eigenvalue_weight_derivatives(sp, &p.degrees, edge.i, edge.j);
                    for c in 0..k {
                        let t = -0.5 * edge.w * d[c];
                        if ri != usize::MAX {
                            jac[(ri, c)] += t;
                        }
                        if rj != usize::MAX {
                            jac[(rj, c)] += t;
                        }
                    }
                }
            }
            Mode::FeatureMask => {
                let x = self.graph.features().expect("checked at construction");
                let n = x.nrows();
                for (e, &(i, j)) in plan.support.iter().enumerate() {
                    let d = eigenvalue_weight_derivatives(sp, &p.degrees, i, n + j);
                    for c in 0..k {
                        jac[(e, c)] = -x[(i, j)] * d[c];
                    }
                }
            }
        }
        jac
    }
}

/// The graph with the continuous plan applied as edge weights; zero-weight
/// edges are dropped. Feature plans leave the topology unchanged.
pub(crate) fn perturbed_graph(g: &Graph, plan: &PerturbationPlan) -> Result<Graph> {
    let mut w: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (e.i, e.j, e.w)).collect();
    match plan.mode {
        Mode::EdgeDrop => {
            let idx = g.edge_index();
            for (&(i, j), &v) in plan.support.iter().zip(&plan.values) {
                let e = *idx
                    .get(&(i, j))
                    .ok_or_else(|| Error::InconsistentPlan(format!("({i}, {j}) is not an edge")))?;
                w[e].2 *= 1.0 - v;
            }
        }
        Mode::EdgeAdd => {
            for (&(i, j), &v) in plan.support.iter().zip(&plan.values) {
                if g.has_edge(i, j) {
                    return Err(Error::InconsistentPlan(format!("({i}, {j}) is already an edge")));
                }
                w.push((i, j, v));
            }
        }
        Mode::NodeDrop => {
            let mut psi = vec![0.0; g.n()];
            for (&(v, _), &s) in plan.support.iter().zip(&plan.values) {
                if v >= g.n() {
                    return Err(Error::IndexOutOfRange { index: v, limit: g.n() });
                }
                psi[v] = s;
            }
            for e in &mut w {
                e.2 *= 1.0 - 0.5 * (psi[e.0] + psi[e.1]);
            }
        }
        Mode::FeatureMask => {}
    }
    w.retain(|e| e.2 > 0.0);
    Graph::new(g.n(), w, g.features().cloned())
}

/// `X` with every masked cell scaled by `1 - value`.
pub(crate) fn perturbed_features(g: &Graph, plan: &PerturbationPlan) -> Result<DMatrix<f64>> {
    let mut x = g.features().ok_or(Error::MissingFeatures)?.clone();
    if plan.mode == Mode::FeatureMask {
        for (&(i, j), &v) in plan.support.iter().zip(&plan.values) {
            if i >= x.nrows() || j >= x.ncols() {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    limit: x.nrows().max(x.ncols()),
                });
            }
            x[(i, j)] *= 1.0 - v;
        }
    }
    Ok(x)
}

/// `||eig_K(perturbed) - eig_K(original)||^2`.
pub fn spectral_change_loss(g: &Graph, plan: &PerturbationPlan, k: usize) -> Result<f64> {
    SpectralObjective::new(g, plan.mode, k)?.loss(plan)
}

/// Gradient of [`spectral_change_loss`] with respect to each plan value.
pub fn analytic_gradient(g: &Graph, plan: &PerturbationPlan, k: usize) -> Result<Vec<f64>> {
    Ok(SpectralObjective::new(g, plan.mode, k)?.loss_and_gradient(plan)?.1)
}

/// `d lambda'_k / d value_e` at the plan, `|support| x K`.
pub fn eigenvalue_jacobian(g: &Graph, plan: &PerturbationPlan, k: usize) -> Result<DMatrix<f64>> {
    SpectralObjective::new(g, plan.mode, k)?.jacobian(plan)
}
