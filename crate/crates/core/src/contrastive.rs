//! Desk-scale contrastive pipeline: a parameter-free propagation encoder, mean
//! readout, InfoNCE, and the loop that optimizes, samples and scores views.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{
    apply_plan, gumbel_sample, initialize_plan, pgd_optimize, AugmentedView, Mode,
    PerturbationPlan, PgdConfig,
};
use crate::community::{community_change_ratio, spectral_clustering, CommunityAssignment};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{graph_spectrum, truncated_svd_normalized};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    /// `n x h`
    pub node_embeddings: DMatrix<f64>,
    pub graph_embedding: DVector<f64>,
}

/// Node inputs for the encoder: the features when present, otherwise the
/// `k` lowest Laplacian eigenvectors with each column's sign chosen so its
/// sum is nonnegative.
pub fn node_inputs(g: &Graph, k: usize) -> Result<DMatrix<f64>> {
    if let Some(x) = g.features() {
        return Ok(x.clone());
    }
    let mut u = graph_spectrum(g, k.min(g.n()))?.eigenvectors;
    for mut col in u.column_iter_mut() {
        if col.sum() < 0.0 {
            col.neg_mut();
        }
    }
    Ok(u)
}

/// `layers` rounds of mean aggregation over each node and its neighbors,
/// then row L2 normalization (zero rows stay zero).
pub fn propagate(g: &Graph, inputs: &DMatrix<f64>, layers: usize) -> Result<EmbeddingSet> {
    if inputs.nrows() != g.n() {
        return Err(Error::SizeMismatch(format!(
            "{} input rows for {} nodes",
            inputs.nrows(),
            g.n()
        )));
    }
    let nbrs = g.neighbors();
    let mut h = inputs.clone();
    for _ in 0..layers {
        let mut next = h.clone();
        for (i, list) in nbrs.iter().enumerate() {
            let mut row = h.row(i).into_owned();
            for &(j, _) in list {
                row += h.row(j);
            }
            next.set_row(i, &(row / (list.len() + 1) as f64));
        }
        h = next;
    }
    for mut row in h.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let graph_embedding = readout_rows(&h)?;
    Ok(EmbeddingSet {
        node_embeddings: h,
        graph_embedding,
    })
}

pub fn propagate_encode(g: &Graph, layers: usize, k: usize) -> Result<EmbeddingSet> {
    propagate(g, &node_inputs(g, k)?, layers)
}

fn readout_rows(h: &DMatrix<f64>) -> Result<DVector<f64>> {
    if h.nrows() == 0 {
        return Err(Error::InvalidGraph("readout of an empty graph".into()));
    }
    Ok(h.row_mean().transpose())
}

pub fn readout_mean(e: &EmbeddingSet) -> Result<DVector<f64>> {
    readout_rows(&e.node_embeddings)
}

/// Batch InfoNCE with cosine similarity; positives are matching rows, the
/// denominator runs over the other rows of `z2`.
pub fn info_nce(z1: &[DVector<f64>], z2: &[DVector<f64>], tau2: f64) -> Result<f64> {
    let n = z1.len();
    if n < 2 || z2.len() != n {
        return Err(Error::InvalidParams(format!(
            "need two batches of equal size >= 2, got {} and {}",
            n,
            z2.len()
        )));
    }
    if !(tau2 > 0.0) {
        return Err(Error::InvalidParams(format!("temperature {tau2} must be > 0")));
    }
    let unit = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let norm = z.norm();
        if norm > 0.0 && norm.is_finite() {
            Ok(z / norm)
        } else {
            Err(Error::Degenerate("zero embedding in contrastive batch".into()))
        }
    };
    let a = z1.iter().map(unit).collect::<Result<Vec<_>>>()?;
    let b = z2.iter().map(unit).collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 0..n {
        let pos = a[i].dot(&b[i]) / tau2;
        let negs: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| a[i].dot(&b[j]) / tau2).collect();
        let m = negs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + negs.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        total += lse - pos;
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Plans optimized against the spectral-change objective.
    Ci,
    /// Every support entry at the same probability, equal budget.
    Uniform,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ci => "ci",
            Strategy::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ci" => Ok(Strategy::Ci),
            "uniform" => Ok(Strategy::Uniform),
            _ => Err(Error::InvalidParams(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Topology objective weight.
    pub alpha: f64,
    /// Feature objective weight.
    pub beta: f64,
    /// Retained eigenpairs.
    pub k: usize,
    /// Gumbel temperature.
    pub tau: f64,
    /// Contrastive temperature.
    pub tau2: f64,
    pub eta: f64,
    /// PGD iterations.
    pub pgd_iters: usize,
    /// Absolute budget; overrides `sigma_e` when set.
    pub budget: Option<f64>,
    /// Budget ratio: `budget = sigma_e * m` for edge modes.
    pub sigma_e: f64,
    /// Outer iterations.
    pub iterations: usize,
    /// Encoder layers.
    pub layers: usize,
    /// Cluster count for the community metric.
    pub clusters: usize,
    pub topology_modes: Vec<Mode>,
    /// Use feature masking for the second view when features exist.
    pub feature_view: bool,
    pub strategy: Strategy,
    /// Scale of the PGD starting point relative to `min(0.5, budget / |support|)`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            beta: 1.0,
            k: 6,
            tau: 0.1,
            tau2: 0.5,
            eta: 0.1,
            pgd_iters: 20,
            budget: None,
            sigma_e: 0.2,
            iterations: 1,
            layers: 2,
            clusters: 8,
            topology_modes: vec![Mode::EdgeDrop],
            feature_view: true,
            strategy: Strategy::Ci,
            init_scale: 0.2,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("tau", self.tau),
            ("tau2", self.tau2),
            ("eta", self.eta),
            ("init_scale", self.init_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.sigma_e) {
            return Err(Error::InvalidParams(format!(
                "sigma_e must lie in [0, 1], got {}",
                self.sigma_e
            )));
        }
        if matches!(self.budget, Some(b) if !(b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidParams("budget must be >= 0".into()));
        }
        if self.k == 0 || self.clusters == 0 {
            return Err(Error::InvalidParams("k and clusters must be >= 1".into()));
        }
        if self.topology_modes.is_empty()
            || self.topology_modes.contains(&Mode::FeatureMask)
        {
            return Err(Error::InvalidParams(
                "topology_modes must be a nonempty subset of edge-drop, edge-add, node-drop".into(),
            ));
        }
        let mut modes = self.topology_modes.clone();
        modes.sort();
        modes.dedup();
        if modes.len() != self.topology_modes.len() {
            return Err(Error::InvalidParams("topology_modes has duplicates".into()));
        }
        Ok(())
    }

    /// Budget of `mode` on `g`. Edge dropping and adding share one edge
    /// budget, split evenly when both are enabled.
    pub fn budget_for(&self, g: &Graph, mode: Mode) -> f64 {
        let base = self
            .budget
            .unwrap_or_else(|| self.sigma_e * mode.budget_base(g) as f64);
        let both_edge_modes = self.topology_modes.contains(&Mode::EdgeDrop)
            && self.topology_modes.contains(&Mode::EdgeAdd);
        match mode {
            Mode::EdgeDrop | Mode::EdgeAdd if both_edge_modes => 0.5 * base,
            _ => base,
        }
    }
}

/// One row per (iteration, graph, view).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iter: usize,
    pub graph_id: usize,
    pub mode: String,
    pub loss_ed: Option<f64>,
    pub loss_ea: Option<f64>,
    pub loss_nd: Option<f64>,
    pub loss_fm: Option<f64>,
    pub spectral_change: f64,
    pub community_change: f64,
    pub l_gcl: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "iter,graph_id,mode,loss_ed,loss_ea,loss_nd,loss_fm,spectral_change,community_change,l_gcl,seed";

pub fn write_csv<W: std::io::Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[MetricsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// splitmix64 finalizer, used to derive independent per-task seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A sampled view together with the loss of the relaxed plan behind each of
/// its modes.
#[derive(Debug, Clone)]
pub struct SampledView {
    pub graph: Graph,
    pub plans: Vec<PerturbationPlan>,
    pub views: Vec<AugmentedView>,
    pub losses: Vec<(Mode, f64)>,
}

/// Builds, optimizes (for the CI strategy) and samples one plan per mode,
/// applying the masks in order to a copy of `g`.
pub fn build_view(g: &Graph, modes: &[Mode], cfg: &PipelineConfig, seed: u64) -> Result<SampledView> {
    let mut current = g.clone();
    let mut out = SampledView {
        graph: g.clone(),
        plans: Vec::new(),
        views: Vec::new(),
        losses: Vec::new(),
    };
    for (t, &mode) in modes.iter().enumerate() {
        let k = effective_k(g, mode, cfg.k)?;
        let budget = cfg.budget_for(g, mode);
        let mode_seed = mix_seed(seed, t as u64 + 1);
        let (plan, loss) = match cfg.strategy {
            Strategy::Ci => {
                let start = initialize_plan(g, mode, budget, k, cfg.init_scale, mode_seed)?;
                let pgd = PgdConfig {
                    eta: cfg.eta,
                    iters: cfg.pgd_iters,
                    k,
                    direction: None,
                    normalize_step: true,
                    weight: if mode == Mode::FeatureMask { cfg.beta } else { cfg.alpha },
                };
                let res = pgd_optimize(g, &start, &pgd)?;
                (res.plan, res.loss)
            }
            Strategy::Uniform => {
                let plan = PerturbationPlan::uniform(g, mode, budget)?;
                let loss = crate::augment::spectral_change_loss(g, &plan, k)?;
                (plan, loss)
            }
        };
        plan.check_feasible()?;
        let mask = gumbel_sample(&plan.values, cfg.tau, mix_seed(mode_seed, 0x5A))?;
        let mut view = apply_plan(&current, &plan, &mask)?;
        view.seed = Some(mode_seed);
        current = view.graph.clone();
        out.losses.push((mode, loss));
        out.plans.push(plan);
        out.views.push(view);
    }
    out.graph = current;
    Ok(out)
}

fn effective_k(g: &Graph, mode: Mode, k: usize) -> Result<usize> {
    match mode {
        Mode::FeatureMask => {
            let x = g.features().ok_or(Error::MissingFeatures)?;
            Ok(k.min(x.nrows().min(x.ncols())))
        }
        _ => Ok(k.min(g.n())),
    }
}

/// `||eig_K(view) - eig_K(original)||^2`, over the feature bipartite graph
/// for feature views.
pub fn view_spectral_change(g: &Graph, view: &Graph, feature_view: bool, k: usize) -> Result<f64> {
    if feature_view {
        let (x, y) = (
            g.features().ok_or(Error::MissingFeatures)?,
            view.features().ok_or(Error::MissingFeatures)?,
        );
        let k = k.min(x.nrows().min(x.ncols()));
        let a = truncated_svd_normalized(x, k)?.singular_values;
        let b = truncated_svd_normalized(y, k)?.singular_values;
        Ok((a - b).norm_squared())
    } else {
        let k = k.min(g.n());
        let a = graph_spectrum(g, k)?.eigenvalues;
        let b = graph_spectrum(view, k)?.eigenvalues;
        Ok((a - b).norm_squared())
    }
}

struct GraphOutcome {
    rows: Vec<MetricsRow>,
    readouts: [DVector<f64>; 2],
}

fn mode_label(strategy: Strategy, modes: &[Mode]) -> String {
    let names: Vec<&str> = modes.iter().map(|m| m.name()).collect();
    format!("{}/{}", strategy.name(), names.join("+"))
}

fn run_graph(
    g: &Graph,
    graph_id: usize,
    iter: usize,
    cfg: &PipelineConfig,
    reference: &CommunityAssignment,
) -> Result<GraphOutcome> {
    let seed = mix_seed(mix_seed(cfg.seed ^ graph_id as u64, iter as u64), 0);
    let second: Vec<Mode> = if cfg.feature_view && g.features().is_some() {
        vec![Mode::FeatureMask]
    } else {
        cfg.topology_modes.clone()
    };
    let views = [
        (cfg.topology_modes.clone(), mix_seed(seed, 1)),
        (second, mix_seed(seed, 2)),
    ];
    let mut rows = Vec::with_capacity(2);
    let mut embeddings = Vec::with_capacity(2);
    for (modes, view_seed) in views {
        let sv = build_view(g, &modes, cfg, view_seed)?;
        let is_feature = modes == [Mode::FeatureMask];
        let spectral_change = view_spectral_change(g, &sv.graph, is_feature, cfg.k)?;
        let after = spectral_clustering(&sv.graph, reference.k, cluster_seed(cfg, graph_id))?;
        let community_change = community_change_ratio(reference, &after)?;
        let loss_of = |m: Mode| sv.losses.iter().find(|(x, _)| *x == m).map(|(_, l)| *l);
        rows.push(MetricsRow {
            iter,
            graph_id,
            mode: mode_label(cfg.strategy, &modes),
            loss_ed: loss_of(Mode::EdgeDrop),
            loss_ea: loss_of(Mode::EdgeAdd),
            loss_nd: loss_of(Mode::NodeDrop),
            loss_fm: loss_of(Mode::FeatureMask),
            spectral_change,
            community_change,
            l_gcl: f64::NAN,
            seed: view_seed,
        });
        embeddings.push(readout_mean(&propagate_encode(&sv.graph, cfg.layers, cfg.k)?)?);
    }
    let second = embeddings.pop().expect("two views");
    let first = embeddings.pop().expect("two views");
    Ok(GraphOutcome {
        rows,
        readouts: [first, second],
    })
}

fn cluster_seed(cfg: &PipelineConfig, graph_id: usize) -> u64 {
    mix_seed(cfg.seed ^ graph_id as u64, 0xC1)
}

/// Runs the augmentation loop over a batch and returns one metrics row per
/// (iteration, graph, view), ordered by iteration, graph and view.
///
/// The encoder has no parameters, so the batch InfoNCE value is recorded as
/// a diagnostic and never differentiated.
pub fn run_pipeline(graphs: &[Graph], cfg: &PipelineConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    if graphs.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "pipeline needs at least 2 graphs, got {}",
            graphs.len()
        )));
    }
    let references: Vec<CommunityAssignment> = graphs
        .par_iter()
        .enumerate()
        .map(|(id, g)| spectral_clustering(g, cfg.clusters.min(g.n()), cluster_seed(cfg, id)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for iter in 0..cfg.iterations {
        let outcomes: Vec<GraphOutcome> = graphs
            .par_iter()
            .zip(&references)
            .enumerate()
            .map(|(id, (g, r))| run_graph(g, id, iter, cfg, r))
            .collect::<Result<_>>()?;
        let z1: Vec<DVector<f64>> = outcomes.iter().map(|o| o.readouts[0].clone()).collect();
        let z2: Vec<DVector<f64>> = outcomes.iter().map(|o| o.readouts[1].clone()).collect();
        let l_gcl = if z1.iter().chain(&z2).map(|z| z.len()).collect::<std::collections::BTreeSet<_>>().len() == 1 {
            info_nce(&z1, &z2, cfg.tau2)?
        } else {
            // embedding widths differ across the batch (feature dimensions or graph sizes)
            f64::NAN
        };
        for mut o in outcomes {
            for r in &mut o.rows {
                r.l_gcl = l_gcl;
            }
            rows.extend(o.rows);
        }
    }
    Ok(rows)
}
