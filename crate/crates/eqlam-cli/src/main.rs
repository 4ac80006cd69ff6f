//! Batch front-end: prove problems, check saved explanations, and run the
//! brute-force oracle.
//!
//! Machine-readable JSON goes to stdout (one line per problem, stable
//! across runs); the human-readable trace goes to stderr and may change
//! freely.
//!
//! Exit codes for `prove`: 0 proved and replay-accepted, 1 unproved within
//! limits, 2 usage/parse errors, 3 proved but the explanation was
//! unavailable or rejected by the replay checker. With several inputs the
//! worst code wins.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eqlam::explain::replay_check;
use eqlam::oracle::{oracle_search, OracleError, OracleLimits};
use eqlam::pipeline::{normalize_term, prepare_rules, ProveOutcome, ReplayStatus};
use eqlam::problem::{parse_problem, ConfigOverrides, ProblemFile};
use eqlam::Explanation;

#[derive(Parser)]
#[command(name = "eqlam", about = "equality saturation prover for a de Bruijn lambda calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigFlags {
    /// Enable or disable the dynamic beta rewrite.
    #[arg(long)]
    beta: Option<bool>,
    /// Enable or disable the dynamic eta rewrite.
    #[arg(long)]
    eta: Option<bool>,
    /// Tag bound variables with closed binder types before encoding.
    #[arg(long)]
    annotate_bvars: Option<bool>,
    /// Saturation iteration limit.
    #[arg(long)]
    iter_limit: Option<u32>,
    /// Saturation e-node limit.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Saturation wall-clock limit in milliseconds.
    #[arg(long)]
    time_limit_ms: Option<u64>,
    /// Comma-separated head symbols to erase as proofs.
    #[arg(long, value_delimiter = ',')]
    proof_heads: Option<Vec<String>>,
}

impl ConfigFlags {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            beta: self.beta,
            eta: self.eta,
            annotate_bvars: self.annotate_bvars,
            iter_limit: self.iter_limit,
            node_limit: self.node_limit,
            time_limit_ms: self.time_limit_ms,
            proof_heads: self.proof_heads.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prove the goal of each problem file and replay the explanation.
    Prove {
        /// Problem files; results print in input order.
        paths: Vec<PathBuf>,
        /// Worker threads for multiple problems (0 = all cores, 1 = serial).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Replay a saved explanation against a problem, without saturating.
    Check {
        problem: PathBuf,
        explanation: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Search for a rewrite path by brute force and print the trace.
    Oracle {
        path: PathBuf,
        /// BFS depth (layer) limit.
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        /// Largest intermediate term the search may build.
        #[arg(long, default_value_t = 64)]
        max_term_size: usize,
        /// Total state budget.
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
        #[command(flatten)]
        config: ConfigFlags,
    },
}

fn load_problem(path: &Path, flags: &ConfigFlags) -> Result<ProblemFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut problem =
        parse_problem(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    flags.overrides().apply(&mut problem.config);
    Ok(problem)
}

fn print_human_outcome(path: &Path, out: &ProveOutcome) {
    eprintln!("== {}", path.display());
    eprintln!("   goal lhs: {}", out.goal.0);
    eprintln!("   goal rhs: {}", out.goal.1);
    eprintln!(
        "   status: {:?} after {} iterations ({} nodes, {} classes)",
        out.status, out.iterations, out.nodes, out.classes
    );
    if let Some(e) = &out.explanation {
        eprintln!("   explanation ({} steps):", e.steps.len());
        eprintln!("     start  {}", e.start);
        for s in &e.steps {
            eprintln!(
                "     {:>5} {} at {:?} -> {}",
                if s.forward { "fwd" } else { "bwd" },
                s.rule,
                s.position,
                s.result
            );
        }
    }
    match &out.replay {
        ReplayStatus::Accepted => eprintln!("   replay: accepted"),
        ReplayStatus::Rejected { step, reason } => {
            eprintln!("   replay: rejected at step {step}: {reason}")
        }
        ReplayStatus::Unavailable => eprintln!("   replay: unavailable"),
    }
}

fn cmd_prove(paths: &[PathBuf], jobs: usize, flags: &ConfigFlags) -> i32 {
    if paths.is_empty() {
        eprintln!("error: no problem files given");
        return 2;
    }
    let mut problems = Vec::new();
    for path in paths {
        match load_problem(path, flags) {
            Ok(p) => problems.push(p),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }

    #[cfg(feature = "parallel")]
    let results = eqlam::batch::prove_batch_with_jobs(&problems, jobs);
    #[cfg(not(feature = "parallel"))]
    let results = {
        let _ = jobs;
        eqlam::batch::prove_batch_serial(&problems)
    };

    let mut worst = 0;
    for (path, result) in paths.iter().zip(results) {
        match result {
            Ok(out) => {
                print_human_outcome(path, &out);
                println!("{}", out.report_json());
                worst = worst.max(out.exit_code());
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                worst = worst.max(2);
            }
        }
    }
    worst
}

fn cmd_check(problem_path: &Path, explanation_path: &Path, flags: &ConfigFlags) -> i32 {
    let problem = match load_problem(problem_path, flags) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let text = match std::fs::read_to_string(explanation_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", explanation_path.display());
            return 2;
        }
    };
    let explanation = match Explanation::from_json(&text) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {}: {e}", explanation_path.display());
            return 2;
        }
    };
    let rules = prepare_rules(&problem.rules, &problem.config);
    let goal_lhs = normalize_term(&problem.goal.0, &problem.config);
    let goal_rhs = normalize_term(&problem.goal.1, &problem.config);
    match replay_check(&explanation, &rules, &goal_lhs, &goal_rhs) {
        eqlam::ReplayVerdict::Accepted => {
            println!("{}", serde_json::json!({ "replay": "accepted" }));
            0
        }
        eqlam::ReplayVerdict::Rejected { step, reason } => {
            eprintln!("rejected at step {step}: {reason}");
            println!(
                "{}",
                serde_json::json!({ "replay": "rejected", "step": step, "reason": reason })
            );
            1
        }
    }
}

fn cmd_oracle(
    path: &Path,
    limits: &OracleLimits,
    flags: &ConfigFlags,
) -> i32 {
    let problem = match load_problem(path, flags) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let rules = prepare_rules(&problem.rules, &problem.config);
    let start = normalize_term(&problem.goal.0, &problem.config);
    let goal = normalize_term(&problem.goal.1, &problem.config);
    match oracle_search(
        &start,
        &goal,
        &rules,
        problem.config.enable_beta,
        problem.config.enable_eta,
        limits,
    ) {
        Ok(Some(trace)) => {
            eprintln!("== {} reached in {} steps", path.display(), trace.len());
            let steps: Vec<serde_json::Value> = trace
                .iter()
                .map(|s| {
                    eprintln!(
                        "   {:>5} {} at {:?} -> {}",
                        if s.forward { "fwd" } else { "bwd" },
                        s.rule,
                        s.position,
                        s.term
                    );
                    serde_json::json!({
                        "rule": s.rule,
                        "dir": if s.forward { "fwd" } else { "bwd" },
                        "pos": s.position,
                        "result": s.term.to_string(),
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::json!({ "reached": true, "steps": steps })
            );
            0
        }
        Ok(None) => {
            eprintln!("NOT-REACHED within depth {}", limits.max_depth);
            println!("{}", serde_json::json!({ "reached": false }));
            1
        }
        Err(OracleError::LimitExceeded { states }) => {
            eprintln!("LimitExceeded after {states} states");
            println!("{}", serde_json::json!({ "error": "limit-exceeded", "states": states }));
            2
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Prove { paths, jobs, config } => cmd_prove(paths, *jobs, config),
        Command::Check { problem, explanation, config } => {
            cmd_check(problem, explanation, config)
        }
        Command::Oracle { path, max_depth, max_term_size, max_states, config } => {
            let limits = OracleLimits {
                max_depth: *max_depth,
                max_term_size: *max_term_size,
                max_states: *max_states,
            };
            cmd_oracle(path, &limits, config)
        }
    };
    ExitCode::from(code as u8)
}
