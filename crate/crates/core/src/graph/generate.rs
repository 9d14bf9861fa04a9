use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Random partition graph parameters.
///
/// `avg_degree` counts intra- and inter-class edges together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpgParams {
    pub num_class: usize,
    pub nodes_per_class: usize,
    pub homophily: f64,
    pub avg_degree: f64,
    pub seed: u64,
}

impl Default for RpgParams {
    fn default() -> Self {
        Self {
            num_class: 8,
            nodes_per_class: 30,
            homophily: 0.96,
            avg_degree: 5.0,
            seed: 0,
        }
    }
}

impl RpgParams {
    /// Intra- and inter-class edge probabilities of the equivalent two-block SBM.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        if self.num_class == 0 || self.nodes_per_class == 0 {
            return Err(Error::InvalidParams(
                "num_class and nodes_per_class must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return Err(Error::InvalidParams(format!(
                "homophily {} outside [0, 1]",
                self.homophily
            )));
        }
        let n = (self.num_class * self.nodes_per_class) as f64;
        if !(self.avg_degree > 0.0) || self.avg_degree > n - 1.0 {
            return Err(Error::InvalidParams(format!(
                "average degree {} infeasible for {n} nodes",
                self.avg_degree
            )));
        }
        let k = self.num_class as f64;
        let c = self.nodes_per_class as f64;
        let intra_pairs = k * c * (c - 1.0) / 2.0;
        let inter_pairs = n * (n - 1.0) / 2.0 - intra_pairs;
        let edges = n * self.avg_degree / 2.0;
        // a single class has no inter pairs; all edges are intra
        let (p_in, p_out) = if inter_pairs == 0.0 {
            (edges / intra_pairs, 0.0)
        } else if intra_pairs == 0.0 {
            (0.0, edges / inter_pairs)
        } else {
            (
                self.homophily * edges / intra_pairs,
                (1.0 - self.homophily) * edges / inter_pairs,
            )
        };
        if p_in > 1.0 || p_out > 1.0 {
            return Err(Error::InvalidParams(format!(
                "degree {} with homophily {} needs edge probability > 1",
                self.avg_degree, self.homophily
            )));
        }
        Ok((p_in, p_out))
    }
}

/// Stochastic block model with planted classes; returns the graph and the
/// class label of every node (nodes are grouped by class).
pub fn generate_rpg(p: &RpgParams) -> Result<(Graph, Vec<usize>)> {
    let (p_in, p_out) = p.probabilities()?;
    let n = p.num_class * p.nodes_per_class;
    let labels: Vec<usize> = (0..n).map(|v| v / p.nodes_per_class).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen::<f64>() < prob {
                edges.push((i, j, 1.0));
            }
        }
    }
    Ok((Graph::new(n, edges, None)?, labels))
}

/// Erdős–Rényi `G(n, p)` with unit weights.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::new(n, edges, None)
}
