use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sbm_lab::align::alignment;
use sbm_lab::detection::detect_triangle;
use sbm_lab::harness::{emit_phase_csv, run_sweep, write_jsonl, SweepSpec};
use sbm_lab::it_recovery::{recover_inefficient, SearchMode};
use sbm_lab::lowdeg::{build_u, corr_bound, corr_exact};
use sbm_lab::recovery::{choose_partitioned_schedule, choose_whole_graph_schedule, run_trial, Algo, RecoveryConfig};
use sbm_lab::sample::{sample_er, sample_sbm};
use sbm_lab::{GraphSample, ModelParams, Result};

#[derive(Parser)]
#[command(name = "sbm-lab", version, about = "Block-model recovery, detection and low-degree experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunAlgo {
    BelowKs,
    AboveKs,
    Inefficient,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a parameter sweep and write the phase table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Phase CSV destination; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-trial JSON lines destination.
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Sample one block model and run a recovery algorithm on it.
    Run {
        #[arg(long, value_enum)]
        algo: RunAlgo,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the scheduled walk length.
        #[arg(long)]
        k: Option<usize>,
        /// Override the scheduled number of parts.
        #[arg(long = "parts")]
        m: Option<usize>,
        #[arg(long, default_value_t = 2_000_000)]
        budget: u64,
    },
    /// Triangle test on a sampled or supplied graph.
    Detect {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample from the Erdős–Rényi null instead of the block model.
        #[arg(long)]
        null: bool,
        /// Read the graph from a text file instead of sampling.
        #[arg(long, conflicts_with = "null")]
        graph: Option<PathBuf>,
    },
    /// Low-degree correlation bounds, optionally with the exact value.
    Lowdeg {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "D")]
        degree: usize,
        /// Also enumerate the exact correlation and the constructed bound.
        #[arg(long, conflicts_with = "bound_only")]
        exact: bool,
        #[arg(long)]
        bound_only: bool,
    },
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Sweep { config, csv, jsonl } => {
            let spec = SweepSpec::parse(&std::fs::read_to_string(config)?)?;
            let records = run_sweep(&spec)?;
            if let Some(path) = jsonl {
                let mut w = BufWriter::new(File::create(path)?);
                write_jsonl(&records, &mut w)?;
                w.flush()?;
            }
            let table = emit_phase_csv(&records)?;
            match csv {
                Some(path) => std::fs::write(path, table)?,
                None => print!("{table}"),
            }
            let errors = records.iter().filter(|r| r.is_error()).count();
            if errors > 0 {
                eprintln!("{errors} error rows");
            }
            Ok(errors == 0)
        }
        Cmd::Run { algo, n, q, d, lambda, seed, k, m, budget } => {
            let p = ModelParams::from_degree(n, q, d, lambda)?;
            let g = sample_sbm(&p, seed);
            let patch = |mut cfg: RecoveryConfig| {
                cfg.k = k.unwrap_or(cfg.k);
                cfg.m_parts = m.unwrap_or(cfg.m_parts);
                cfg
            };
            match algo {
                RunAlgo::BelowKs => {
                    let cfg = patch(choose_partitioned_schedule(&p)?);
                    print_json(&run_trial(&g, &p, Algo::BelowKs, &cfg, seed)?);
                }
                RunAlgo::AboveKs => {
                    let cfg = match (choose_whole_graph_schedule(&p), k) {
                        (Ok(cfg), _) => patch(cfg),
                        (Err(_), Some(k)) => RecoveryConfig::new(k, 1),
                        (Err(e), None) => return Err(e),
                    };
                    print_json(&run_trial(&g, &p, Algo::AboveKs, &cfg, seed)?);
                }
                RunAlgo::Inefficient => {
                    let out = recover_inefficient(&g, &p, SearchMode::Heuristic, budget, seed)?;
                    print_json(&json!({
                        "seed": seed,
                        "params": p,
                        "alignment": alignment(&out.labeling, &g.truth, q)?,
                        "search_alignment": alignment(&out.search.labeling, &g.truth, q)?,
                        "search_objective": out.search.objective,
                        "evaluations": out.search.evaluations,
                        "beta": out.beta,
                        "analytic_beta": out.analytic_beta,
                        "bp_flip_fraction": out.bp_flip_fraction,
                    }));
                }
            }
            Ok(true)
        }
        Cmd::Detect { n, q, d, lambda, seed, null, graph } => {
            let p = ModelParams::from_degree(n, q, d, lambda)?;
            let g = match graph {
                Some(path) => GraphSample::read_text(BufReader::new(File::open(path)?))?,
                None if null => sample_er(n, p.d(), seed)?,
                None => sample_sbm(&p, seed),
            };
            print_json(&detect_triangle(&g, &p)?);
            Ok(true)
        }
        Cmd::Lowdeg { n, q, a, b, degree, exact, bound_only: _ } => {
            let p = ModelParams::new(n, q, a, b)?;
            let mut report = corr_bound(degree, &p);
            if exact {
                report.corr_exact = Some(corr_exact(n, q, a, b, degree)?);
                let u = build_u(degree, &p)?;
                print_json(&json!({
                    "report": report,
                    "u_bound": u.corr_sq_bound().sqrt(),
                    "max_residual": u.max_residual(),
                }));
            } else {
                print_json(&report);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
