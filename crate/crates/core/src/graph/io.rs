use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Parses the `n m` header followed by `m` lines of `i j [w]`.
///
/// Blank lines and lines starting with `#` are skipped. Errors carry the
/// 1-based line number of the offending line.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let mut fields = header.split_whitespace();
    let n = parse_field::<usize>(fields.next(), hline, "node count")?;
    let m = parse_field::<usize>(fields.next(), hline, "edge count")?;
    if fields.next().is_some() {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be `n m`".into(),
        });
    }

    let mut seen = std::collections::HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines.by_ref().take(m) {
        let mut f = l.split_whitespace();
        let i = parse_field::<usize>(f.next(), line, "source index")?;
        let j = parse_field::<usize>(f.next(), line, "target index")?;
        let w = match f.next() {
            Some(s) => parse_field::<f64>(Some(s), line, "weight")?,
            None => 1.0,
        };
        if f.next().is_some() {
            return Err(Error::Parse {
                line,
                msg: "trailing fields".into(),
            });
        }
        let err = |msg: String| Error::Parse { line, msg };
        if i == j {
            return Err(err("self-loop".into()));
        }
        if i >= n || j >= n {
            return Err(err(format!("index {} out of range for n = {n}", i.max(j))));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(err(format!("negative or non-finite weight {w}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(err(format!("duplicate edge ({i}, {j})")));
        }
        edges.push((i, j, w));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: "more edge lines than declared".into(),
        });
    }
    Graph::new(n, edges, None)
}

fn parse_field<T: std::str::FromStr>(s: Option<&str>, line: usize, what: &str) -> Result<T> {
    let s = s.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("malformed {what} `{s}`"),
    })
}

impl Graph {
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.num_edges());
        for e in self.edges() {
            let _ = writeln!(s, "{} {} {}", e.i, e.j, e.w);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeJson {
    Weighted(usize, usize, f64),
    Unweighted(usize, usize),
}

/// On-disk graph: `{"n", "edges": [[i, j, w]], "features", "labels"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl GraphJson {
    pub fn from_graph(g: &Graph, labels: Option<&[usize]>) -> Self {
        Self {
            n: g.n(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeJson::Weighted(e.i, e.j, e.w))
                .collect(),
            features: g.features().map(|x| {
                x.row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect()
            }),
            labels: labels.map(<[usize]>::to_vec),
        }
    }

    pub fn into_graph(self) -> Result<(Graph, Option<Vec<usize>>)> {
        let features = match self.features {
            None => None,
            Some(rows) => {
                let d = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidGraph("ragged feature rows".into()));
                }
                Some(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
            }
        };
        if let Some(l) = &self.labels {
            if l.len() != self.n {
                return Err(Error::SizeMismatch(format!(
                    "{} labels for {} nodes",
                    l.len(),
                    self.n
                )));
            }
        }
        let edges = self.edges.into_iter().map(|e| match e {
            EdgeJson::Weighted(i, j, w) => (i, j, w),
            EdgeJson::Unweighted(i, j) => (i, j, 1.0),
        });
        Ok((Graph::new(self.n, edges, features)?, self.labels))
    }
}

impl Graph {
    pub fn to_json(&self, labels: Option<&[usize]>) -> String {
        serde_json::to_string(&GraphJson::from_graph(self, labels)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<(Graph, Option<Vec<usize>>)> {
        serde_json::from_str::<GraphJson>(text)?.into_graph()
    }
}

/// Reads either format; JSON is detected by a leading `{`.
pub fn read_graph_file(path: &Path) -> Result<(Graph, Option<Vec<usize>>)> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        Graph::from_json(&text)
    } else {
        Ok((parse_edge_list(&text)?, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_graph() {
        let g = parse_edge_list("2 1\n0 1").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!((g.edges()[0].i, g.edges()[0].j, g.edges()[0].w), (0, 1, 1.0));
    }

    #[test]
    fn triangle() {
        let g = parse_edge_list("3 3\n0 1\n0 2\n1 2").unwrap();
        assert_eq!(g.num_edges(), 3);
        assert!(g.has_edge(1, 2));
    }

    #[test]
    fn weights_and_reversed_pairs() {
        let g = parse_edge_list("3 2\n2 0 0.5\n1 2 3").unwrap();
        assert_eq!(g.edges()[0].w, 0.5);
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (0, 2));
    }

    fn err_line(text: &str) -> (usize, String) {
        match parse_edge_list(text) {
            Err(Error::Parse { line, msg }) => (line, msg),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_names_line() {
        let (line, msg) = err_line("2 1\n0 0");
        assert_eq!(line, 2);
        assert!(msg.contains("self-loop"));
        let e = parse_edge_list("2 1\n0 0").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn other_errors_name_lines() {
        assert_eq!(err_line("3 2\n0 1\n0 5").0, 3);
        assert_eq!(err_line("3 2\n0 1\n1 0").0, 3);
        assert_eq!(err_line("3 1\n0 1 -2").0, 2);
        assert_eq!(err_line("3 1\n0 x").0, 2);
        assert_eq!(err_line("3\n").0, 1);
        assert_eq!(err_line("3 2\n0 1\n").0, 1);
    }

    #[test]
    fn json_roundtrip_with_features_and_labels() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 2.0, 0.0, 0.0]);
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 0.25)], Some(x)).unwrap();
        let s = g.to_json(Some(&[0, 1, 1]));
        let (h, labels) = Graph::from_json(&s).unwrap();
        assert_eq!(g, h);
        assert_eq!(labels, Some(vec![0, 1, 1]));
    }

    #[test]
    fn json_accepts_unweighted_edges() {
        let (g, labels) = Graph::from_json(r#"{"n":3,"edges":[[0,1],[2,1,0.5]]}"#).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert!(labels.is_none());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::new(4, [(0, 3, 0.125), (1, 2, 1.0)], None).unwrap();
        assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }
}
