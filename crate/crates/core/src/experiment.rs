//! The community-preservation experiment: CI-optimized against uniform plans
//! on a batch of random partition graphs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contrastive::{mix_seed, run_pipeline, write_csv, MetricsRow, PipelineConfig, Strategy};
use crate::error::{Error, Result};
use crate::graph::{generate_rpg, Graph, RpgParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub strategies: Vec<Strategy>,
    pub num_graphs: usize,
    /// Graph `i` is generated with seed `mix(seed, i)`; `rpg.seed` is ignored.
    pub rpg: RpgParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            strategies: vec![Strategy::Ci, Strategy::Uniform],
            num_graphs: 30,
            rpg: RpgParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub mean_community_change: f64,
    pub mean_spectral_change: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub strategies: Vec<StrategySummary>,
    /// Between spectral and community change over every row; `None` when
    /// either column is constant.
    pub pearson: Option<f64>,
}

impl ExperimentSummary {
    pub fn get(&self, s: Strategy) -> Option<&StrategySummary> {
        self.strategies.iter().find(|x| x.strategy == s)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentOutput {
    /// CSV table followed by `#`-prefixed summary lines.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        write_csv(&self.rows, &mut out)?;
        for s in &self.summary.strategies {
            writeln!(
                out,
                "# strategy={} rows={} mean_community_change={} mean_spectral_change={}",
                s.strategy.name(),
                s.rows,
                s.mean_community_change,
                s.mean_spectral_change
            )?;
        }
        match self.summary.pearson {
            Some(r) => writeln!(out, "# pearson_spectral_vs_community={r}")?,
            None => writeln!(out, "# pearson_spectral_vs_community=undefined")?,
        }
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("utf-8 output"))
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn experiment_graphs(cfg: &ExperimentConfig) -> Result<Vec<Graph>> {
    (0..cfg.num_graphs)
        .map(|i| {
            let p = RpgParams {
                seed: mix_seed(cfg.pipeline.seed, 0xE0 + i as u64),
                ..cfg.rpg
            };
            generate_rpg(&p).map(|(g, _)| g)
        })
        .collect()
}

/// Runs the pipeline once per strategy over the generated batch. Rows come
/// out sorted by iteration, graph, strategy and view.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.strategies.is_empty() {
        return Err(Error::InvalidParams("no strategies given".into()));
    }
    let graphs = experiment_graphs(cfg)?;
    let mut tagged: Vec<(Strategy, usize, MetricsRow)> = Vec::new();
    let mut strategies = Vec::new();
    for &strategy in &cfg.strategies {
        if strategies.iter().any(|s: &StrategySummary| s.strategy == strategy) {
            continue;
        }
        let pc = PipelineConfig {
            strategy,
            ..cfg.pipeline.clone()
        };
        let rows = run_pipeline(&graphs, &pc)?;
        let count = rows.len().max(1) as f64;
        strategies.push(StrategySummary {
            strategy,
            mean_community_change: rows.iter().map(|r| r.community_change).sum::<f64>() / count,
            mean_spectral_change: rows.iter().map(|r| r.spectral_change).sum::<f64>() / count,
            rows: rows.len(),
        });
        tagged.extend(rows.into_iter().enumerate().map(|(v, r)| (strategy, v, r)));
    }
    tagged.sort_by(|a, b| {
        (a.2.iter, a.2.graph_id, a.0, a.1).cmp(&(b.2.iter, b.2.graph_id, b.0, b.1))
    });
    let rows: Vec<MetricsRow> = tagged.into_iter().map(|t| t.2).collect();
    let spectral: Vec<f64> = rows.iter().map(|r| r.spectral_change).collect();
    let community: Vec<f64> = rows.iter().map(|r| r.community_change).collect();
    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            strategies,
            pearson: pearson(&spectral, &community),
        },
        rows,
    })
}

/// Reads a config file (or uses defaults), optionally overrides its seed,
/// runs the experiment and writes the CSV.
pub fn run_experiment_file(
    cfg_path: Option<&Path>,
    out_path: &Path,
    seed: Option<u64>,
) -> Result<ExperimentOutput> {
    let mut cfg = match cfg_path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.pipeline.seed = s;
    }
    let out = run_experiment(&cfg)?;
    let file = std::fs::File::create(out_path)?;
    let mut w = std::io::BufWriter::new(file);
    out.write(&mut w)?;
    w.flush()?;
    Ok(out)
}
