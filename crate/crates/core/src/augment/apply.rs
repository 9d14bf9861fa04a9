use super::{gumbel_sample, Mode, PerturbationPlan};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedView {
    pub graph: Graph,
    pub mode: Mode,
    /// Aligned with the plan's support.
    pub mask: Vec<bool>,
    pub seed: Option<u64>,
}

impl AugmentedView {
    pub fn flips(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }
}

/// Discretizes a plan through its binary mask: masked edges are removed or
/// inserted with weight 1, masked nodes lose every incident edge, masked
/// feature cells are zeroed.
pub fn apply_plan(g: &Graph, plan: &PerturbationPlan, mask: &[bool]) -> Result<AugmentedView> {
    if mask.len() != plan.support.len() {
        return Err(Error::MaskMismatch {
            expected: plan.support.len(),
            got: mask.len(),
        });
    }
    let chosen = plan
        .support
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(s, _)| *s);
    let graph = match plan.mode {
        Mode::EdgeDrop => {
            let drop: std::collections::HashSet<(usize, usize)> = chosen.collect();
            let kept = g
                .edges()
                .iter()
                .filter(|e| !drop.contains(&(e.i, e.j)))
                .map(|e| (e.i, e.j, e.w));
            Graph::new(g.n(), kept, g.features().cloned())?
        }
        Mode::EdgeAdd => {
            let edges = g
                .edges()
                .iter()
                .map(|e| (e.i, e.j, e.w))
                .chain(chosen.map(|(i, j)| (i, j, 1.0)));
            Graph::new(g.n(), edges, g.features().cloned())
                .map_err(|e| Error::InconsistentPlan(e.to_string()))?
        }
        Mode::NodeDrop => {
            let mut dropped = vec![false; g.n()];
            for (v, _) in chosen {
                *dropped.get_mut(v).ok_or(Error::IndexOutOfRange {
                    index: v,
                    limit: g.n(),
                })? = true;
            }
            let kept = g
                .edges()
                .iter()
                .filter(|e| !dropped[e.i] && !dropped[e.j])
                .map(|e| (e.i, e.j, e.w));
            Graph::new(g.n(), kept, g.features().cloned())?
        }
        Mode::FeatureMask => {
            let mut x = g.features().ok_or(Error::MissingFeatures)?.clone();
            for (i, j) in chosen {
                if i >= x.nrows() || j >= x.ncols() {
                    return Err(Error::IndexOutOfRange {
                        index: i.max(j),
                        limit: x.nrows().max(x.ncols()),
                    });
                }
                x[(i, j)] = 0.0;
            }
            g.clone().with_features(Some(x))?
        }
    };
    Ok(AugmentedView {
        graph,
        mode: plan.mode,
        mask: mask.to_vec(),
        seed: None,
    })
}

/// Gumbel-samples a mask from the plan and applies it.
pub fn sample_view(g: &Graph, plan: &PerturbationPlan, tau: f64, seed: u64) -> Result<AugmentedView> {
    let mask = gumbel_sample(&plan.values, tau, seed)?;
    let mut view = apply_plan(g, plan, &mask)?;
    view.seed = Some(seed);
    Ok(view)
}
