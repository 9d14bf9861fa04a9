use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spectral_augment::augment::{
    initialize_plan, pgd_optimize, sample_view, spectral_change_loss, Mode, PerturbationPlan,
    PgdConfig,
};
use spectral_augment::community::{community_change_ratio, spectral_clustering};
use spectral_augment::experiment::run_experiment_file;
use spectral_augment::graph::{generate_er, generate_rpg, read_graph_file, Graph, RpgParams};
use spectral_augment::verify::{run_verify_scaled, Suite};
use spectral_augment::Error;

#[derive(Parser)]
#[command(name = "spectral-augment", version, about = "Community-invariant spectral graph augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Rpg,
    Er,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ci,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Theorems,
    Gradients,
    Sampling,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random partition graph or an Erdos-Renyi graph as JSON.
    Gen {
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        num_class: usize,
        #[arg(long, default_value_t = 30)]
        nodes_per_class: usize,
        #[arg(long, default_value_t = 0.96)]
        homophily: f64,
        #[arg(long, default_value_t = 5.0)]
        avg_degree: f64,
        /// Node count for `er`.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Edge probability for `er`.
        #[arg(long, default_value_t = 0.05)]
        p: f64,
    },
    /// Optimize a perturbation plan for one graph and one mode.
    Augment {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Absolute budget; defaults to 0.2 times the mode's base count.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = StrategyArg::Ci)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gumbel-sample a view from a plan.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral clustering of a graph, or the community change to a view.
    EvalCommunity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        view: Option<PathBuf>,
        /// Cluster count.
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the built-in property suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Compare CI-optimized and uniform plans on a batch of partition graphs.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Error> {
    Ok(read_graph_file(path)?.0)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Gen {
            kind,
            seed,
            out,
            num_class,
            nodes_per_class,
            homophily,
            avg_degree,
            n,
            p,
        } => {
            let text = match kind {
                GenKind::Rpg => {
                    let (g, labels) = generate_rpg(&RpgParams {
                        num_class,
                        nodes_per_class,
                        homophily,
                        avg_degree,
                        seed,
                    })?;
                    g.to_json(Some(&labels))
                }
                GenKind::Er => generate_er(n, p, seed)?.to_json(None),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Augment {
            graph,
            mode,
            budget,
            k,
            seed,
            strategy,
            eta,
            iters,
            out,
        } => {
            let g = load_graph(&graph)?;
            let budget = budget.unwrap_or(0.2 * mode.budget_base(&g) as f64);
            let plan = match strategy {
                StrategyArg::Uniform => PerturbationPlan::uniform(&g, mode, budget)?,
                StrategyArg::Ci => {
                    let start = initialize_plan(&g, mode, budget, k, 0.2, seed)?;
                    let cfg = PgdConfig {
                        eta,
                        iters,
                        k,
                        ..Default::default()
                    };
                    pgd_optimize(&g, &start, &cfg)?.plan
                }
            };
            eprintln!("loss {}", spectral_change_loss(&g, &plan, k)?);
            emit(out.as_deref(), &plan.to_json())?;
        }
        Command::Sample {
            graph,
            plan,
            tau,
            seed,
            out,
        } => {
            let g = load_graph(&graph)?;
            let plan = PerturbationPlan::from_json(&std::fs::read_to_string(plan)?)?;
            plan.validate(&g)?;
            plan.check_feasible()?;
            let view = sample_view(&g, &plan, tau, seed)?;
            eprintln!("flipped {} of {}", view.flips(), view.mask.len());
            emit(out.as_deref(), &view.graph.to_json(None))?;
        }
        Command::EvalCommunity { graph, view, k, seed } => {
            let g = load_graph(&graph)?;
            let before = spectral_clustering(&g, k, seed)?;
            match view {
                None => println!("{}", serde_json::to_string(&before.labels)?),
                Some(v) => {
                    let after = spectral_clustering(&load_graph(&v)?, k, seed)?;
                    println!("{}", community_change_ratio(&before, &after)?);
                }
            }
        }
        Command::Verify {
            suite,
            seed,
            tol_scale,
        } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Theorems => Suite::Theorems,
                SuiteArg::Gradients => Suite::Gradients,
                SuiteArg::Sampling => Suite::Sampling,
            };
            let report = run_verify_scaled(suite, seed, tol_scale);
            print!("{}", report.render());
            return Ok(if report.overall {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
        Command::Experiment { config, out, seed } => {
            let res = run_experiment_file(config.as_deref(), &out, seed)?;
            for s in &res.summary.strategies {
                eprintln!(
                    "{}: mean community change {:.4}, mean spectral change {:.4}",
                    s.strategy.name(),
                    s.mean_community_change,
                    s.mean_spectral_change
                );
            }
            match res.summary.pearson {
                Some(r) => eprintln!("pearson {r:.4}"),
                None => eprintln!("pearson undefined"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::InvalidParams(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
