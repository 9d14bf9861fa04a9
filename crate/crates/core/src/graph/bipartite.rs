use super::Graph;
use crate::error::{Error, Result};

/// Node/feature bipartite graph on `n + d` vertices: node `i` links to
/// feature vertex `n + j` with weight `X[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteFeatureGraph {
    pub base: Graph,
    pub n: usize,
    pub d: usize,
}

pub fn build_feature_bipartite(g: &Graph) -> Result<BipartiteFeatureGraph> {
    let x = g.features().ok_or(Error::MissingFeatures)?;
    let (n, d) = (x.nrows(), x.ncols());
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..d {
            let w = x[(i, j)];
            if w > 0.0 {
                edges.push((i, n + j, w));
            }
        }
    }
    Ok(BipartiteFeatureGraph {
        base: Graph::new(n + d, edges, None)?,
        n,
        d,
    })
}
