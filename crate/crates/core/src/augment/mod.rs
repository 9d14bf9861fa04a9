//! Budgeted perturbation plans and the community-invariant augmenter.
//!
//! A plan assigns a relaxed flip probability in `[0, 1]` to every entry of a
//! mode-specific support, under an L1 budget. Plans are optimized against
//! the spectral-change objective with projected gradient steps, then
//! discretized by Gumbel sampling and applied to the graph.

mod apply;
mod gumbel;
mod loss;
mod pgd;
mod project;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{complement_adjacency, Graph};

pub use apply::{apply_plan, sample_view, AugmentedView};
pub use gumbel::{gumbel_relaxed, gumbel_sample};
pub(crate) use loss::perturbed_graph;
pub use loss::{analytic_gradient, eigenvalue_jacobian, spectral_change_loss, SpectralObjective};
pub use pgd::{initialize_plan, pgd_optimize, PgdConfig, PgdOutcome};
pub use project::project_budget;

/// Slack allowed on the budget constraint.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    EdgeDrop,
    EdgeAdd,
    NodeDrop,
    FeatureMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::EdgeDrop, Mode::EdgeAdd, Mode::NodeDrop, Mode::FeatureMask];

    pub fn name(self) -> &'static str {
        match self {
            Mode::EdgeDrop => "edge-drop",
            Mode::EdgeAdd => "edge-add",
            Mode::NodeDrop => "node-drop",
            Mode::FeatureMask => "feature-mask",
        }
    }

    /// Edge adding is the subtracted term of the edge-perturbation objective,
    /// so its spectral change is minimized; every other mode maximizes.
    pub fn direction(self) -> Direction {
        match self {
            Mode::EdgeAdd => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    /// The count a budget ratio is multiplied by: edges for edge modes,
    /// nodes for node dropping, nonzero cells for feature masking.
    pub fn budget_base(self, g: &Graph) -> usize {
        match self {
            Mode::EdgeDrop | Mode::EdgeAdd => g.num_edges(),
            Mode::NodeDrop => g.n(),
            Mode::FeatureMask => g
                .features()
                .map_or(0, |x| x.iter().filter(|v| **v > 0.0).count()),
        }
    }

    /// Candidate support of this mode on `g`, in canonical order.
    pub fn support(self, g: &Graph) -> Result<Vec<(usize, usize)>> {
        Ok(match self {
            Mode::EdgeDrop => g.edges().iter().map(|e| (e.i, e.j)).collect(),
            Mode::EdgeAdd => complement_adjacency(g),
            Mode::NodeDrop => (0..g.n()).map(|v| (v, v)).collect(),
            Mode::FeatureMask => {
                let x = g.features().ok_or(Error::MissingFeatures)?;
                let mut cells = Vec::new();
                for i in 0..x.nrows() {
                    for j in 0..x.ncols() {
                        if x[(i, j)] > 0.0 {
                            cells.push((i, j));
                        }
                    }
                }
                cells
            }
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown mode `{s}`")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Relaxed perturbation values on a declared support.
///
/// Support entries are `(i, j)` edges with `i < j` for the edge modes,
/// `(node, feature)` cells for feature masking, and `(v, v)` for node
/// dropping, whose values are per-node scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan {
    pub mode: Mode,
    pub support: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    pub budget: f64,
}

impl PerturbationPlan {
    /// All-zero plan over the full candidate support of `mode`.
    pub fn zeros(g: &Graph, mode: Mode, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        let support = mode.support(g)?;
        let values = vec![0.0; support.len()];
        Ok(Self {
            mode,
            support,
            values,
            budget,
        })
    }

    /// Every entry at `min(1, budget / |support|)`: the uniform-random baseline.
    pub fn uniform(g: &Graph, mode: Mode, budget: f64) -> Result<Self> {
        let mut plan = Self::zeros(g, mode, budget)?;
        if !plan.support.is_empty() {
            let v = (budget / plan.support.len() as f64).min(1.0);
            plan.values.iter_mut().for_each(|x| *x = v);
        }
        Ok(plan)
    }

    /// Plan over an explicit support. Edge pairs are canonicalized to `i < j`.
    pub fn with_support(
        mode: Mode,
        support: Vec<(usize, usize)>,
        values: Vec<f64>,
        budget: f64,
    ) -> Result<Self> {
        check_budget(budget)?;
        if support.len() != values.len() {
            return Err(Error::SizeMismatch(format!(
                "{} support entries but {} values",
                support.len(),
                values.len()
            )));
        }
        let support = match mode {
            Mode::EdgeDrop | Mode::EdgeAdd => support
                .into_iter()
                .map(|(i, j)| if i < j { (i, j) } else { (j, i) })
                .collect(),
            _ => support,
        };
        Ok(Self {
            mode,
            support,
            values,
            budget,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v)) && self.mass() <= self.budget + BUDGET_TOL
    }

    pub fn check_feasible(&self) -> Result<()> {
        if self.is_feasible() {
            Ok(())
        } else {
            Err(Error::InfeasiblePlan(format!(
                "mass {} against budget {}",
                self.mass(),
                self.budget
            )))
        }
    }

    /// Checks that the support is admissible for `mode` on `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentPlan(msg));
        if self.support.len() != self.values.len() {
            return bad("support and values differ in length".into());
        }
        let mut seen = std::collections::HashSet::with_capacity(self.len());
        for &(i, j) in &self.support {
            if !seen.insert((i, j)) {
                return bad(format!("duplicate support entry ({i}, {j})"));
            }
            match self.mode {
                Mode::EdgeDrop => {
                    if i >= j || j >= g.n() || !g.has_edge(i, j) {
                        return bad(format!("({i}, {j}) is not an edge"));
                    }
                }
                Mode::EdgeAdd => {
                    if i >= j || j >= g.n() || g.has_edge(i, j) {
                        return bad(format!("({i}, {j}) is not a complement pair"));
                    }
                }
                Mode::NodeDrop => {
                    if i != j || i >= g.n() {
                        return bad(format!("({i}, {j}) is not a node entry"));
                    }
                }
                Mode::FeatureMask => {
                    let x = g.features().ok_or(Error::MissingFeatures)?;
                    if i >= x.nrows() || j >= x.ncols() || x[(i, j)] <= 0.0 {
                        return bad(format!("({i}, {j}) is not a nonzero feature cell"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Node-drop plans induce the pairwise matrix `(psi 1^T + 1 psi^T) / 2`;
    /// this returns its value on `(i, j)`.
    pub fn node_pair_value(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.mode, Mode::NodeDrop);
        0.5 * (self.values[i] + self.values[j])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PlanJson::from(self)).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<PlanJson>(text)?.try_into()
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("budget {budget} must be >= 0")))
    }
}

/// `{"mode", "support": [[i, j], ...], "values", "budget"}`; node-drop
/// support entries are single-element `[v]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanJson {
    pub mode: Mode,
    pub support: Vec<Vec<usize>>,
    pub values: Vec<f64>,
    pub budget: f64,
}

impl From<&PerturbationPlan> for PlanJson {
    fn from(p: &PerturbationPlan) -> Self {
        let support = p
            .support
            .iter()
            .map(|&(i, j)| match p.mode {
                Mode::NodeDrop => vec![i],
                _ => vec![i, j],
            })
            .collect();
        Self {
            mode: p.mode,
            support,
            values: p.values.clone(),
            budget: p.budget,
        }
    }
}

impl TryFrom<PlanJson> for PerturbationPlan {
    type Error = Error;

    fn try_from(p: PlanJson) -> Result<Self> {
        let support = p
            .support
            .iter()
            .map(|e| match (p.mode, e.as_slice()) {
                (Mode::NodeDrop, [v]) => Ok((*v, *v)),
                (Mode::NodeDrop, [v, w]) if v == w => Ok((*v, *v)),
                (Mode::NodeDrop, _) => Err(Error::InconsistentPlan(format!(
                    "node-drop support entry {e:?}"
                ))),
                (_, [i, j]) => Ok((*i, *j)),
                _ => Err(Error::InconsistentPlan(format!("support entry {e:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        PerturbationPlan::with_support(p.mode, support, p.values, p.budget)
    }
}
