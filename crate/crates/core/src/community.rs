//! Spectral clustering, label alignment, and the normalized cut.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::graph_spectrum;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl CommunityAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("cluster count must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::IndexOutOfRange { index: bad, limit: k });
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Component label per node (numbered by lowest member) and the component count.
pub fn connected_components(g: &Graph) -> (Vec<usize>, usize) {
    let n = g.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut count = 0;
    let mut root_label = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if root_label[r] == usize::MAX {
            root_label[r] = count;
            count += 1;
        }
        labels[v] = root_label[r];
    }
    (labels, count)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Lloyd's k-means with k-means++ seeding; the lowest-inertia of `restarts`
/// runs wins.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, iters: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { requested: k, available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let (inertia, labels) = kmeans_once(points, k, iters, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn kmeans_once(points: &[Vec<f64>], k: usize, iters: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points[0].len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| dist_sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in closest.iter().enumerate() {
                if r < *d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[pick].clone());
        for (c, p) in closest.iter_mut().zip(points) {
            *c = c.min(dist_sq(p, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![0usize; n];
    for it in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut arg = 0;
            let mut best = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = dist_sq(p, center);
                if d < best {
                    best = d;
                    arg = c;
                }
            }
            if labels[i] != arg {
                labels[i] = arg;
                changed = true;
            }
        }
        if !changed && it > 0 {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // reseed an empty cluster at the point farthest from its center
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist_sq(&points[a], &centers[labels[a]])
                            .total_cmp(&dist_sq(&points[b], &centers[labels[b]]))
                    })
                    .expect("nonempty");
                centers[c] = points[far].clone();
                labels[far] = c;
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| dist_sq(p, &centers[l]))
        .sum();
    (inertia, labels)
}

/// Renumbers labels in order of first appearance.
fn canonical_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

/// k-way normalized spectral clustering: rows of the `k` lowest Laplacian
/// eigenvectors, scaled to unit length (zero rows stay zero), then k-means.
pub fn spectral_clustering(g: &Graph, k: usize, seed: u64) -> Result<CommunityAssignment> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { requested: k, available: n });
    }
    if k == 1 {
        return CommunityAssignment::new(vec![0; n], 1);
    }
    let sp = graph_spectrum(g, k)?;
    let rows: Vec<Vec<f64>> = sp
        .eigenvectors
        .row_iter()
        .map(|r| {
            let norm = r.norm();
            if norm > 1e-12 {
                r.iter().map(|x| x / norm).collect()
            } else {
                vec![0.0; k]
            }
        })
        .collect();
    let labels = kmeans(&rows, k, KMEANS_RESTARTS, KMEANS_ITERS, seed)?;
    CommunityAssignment::new(canonical_labels(&labels, k), k)
}

/// Contingency-table overlap after the best one-to-one label matching.
fn aligned_overlap(a: &[usize], b: &[usize], k: usize) -> usize {
    let mut table = vec![vec![0i64; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let m = Matrix::from_rows(table).expect("square table");
    kuhn_munkres(&m).0 as usize
}

/// Fraction of nodes whose label differs after optimally aligning `after`
/// to `before`.
pub fn community_change_ratio(before: &CommunityAssignment, after: &CommunityAssignment) -> Result<f64> {
    if before.len() != after.len() {
        return Err(Error::SizeMismatch(format!(
            "{} labels against {}",
            before.len(),
            after.len()
        )));
    }
    if before.is_empty() {
        return Ok(0.0);
    }
    let k = before.k.max(after.k);
    let overlap = aligned_overlap(&before.labels, &after.labels, k);
    Ok(1.0 - overlap as f64 / before.len() as f64)
}

/// Share of nodes whose predicted cluster matches the planted label after
/// optimal alignment.
pub fn aligned_agreement(planted: &[usize], predicted: &CommunityAssignment) -> Result<f64> {
    let k = planted.iter().copied().max().map_or(1, |m| m + 1).max(predicted.k);
    let planted = CommunityAssignment::new(planted.to_vec(), k)?;
    Ok(1.0 - community_change_ratio(&planted, predicted)?)
}

/// `sum_S cut(S, rest) / vol(S)` over the clusters of `a`.
pub fn normalized_cut(g: &Graph, a: &CommunityAssignment) -> Result<f64> {
    if a.len() != g.n() {
        return Err(Error::SizeMismatch(format!(
            "{} labels for {} nodes",
            a.len(),
            g.n()
        )));
    }
    let mut cut = vec![0.0; a.k];
    let mut vol = vec![0.0; a.k];
    for e in g.edges() {
        let (li, lj) = (a.labels[e.i], a.labels[e.j]);
        vol[li] += e.w;
        vol[lj] += e.w;
        if li != lj {
            cut[li] += e.w;
            cut[lj] += e.w;
        }
    }
    let mut used = vec![false; a.k];
    a.labels.iter().for_each(|&l| used[l] = true);
    let mut total = 0.0;
    for c in 0..a.k {
        if !used[c] {
            continue;
        }
        if vol[c] <= 0.0 {
            return Err(Error::ZeroVolume(c));
        }
        total += cut[c] / vol[c];
    }
    Ok(total)
}
