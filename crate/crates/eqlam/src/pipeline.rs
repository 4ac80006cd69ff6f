//! The end-to-end prove pipeline: normalize (ζ-reduce, erase proof heads,
//! optionally annotate bound variables), encode, saturate, extract an
//! explanation, and replay it.

use serde::Serialize;
use thiserror::Error;

use crate::egraph::EGraph;
use crate::explain::{explain, replay_check, Explanation, ReplayVerdict};
use crate::pattern::{Pattern, RuleSpec};
use crate::problem::ProblemFile;
use crate::saturate::{compile_rule, run, CompileError, SatStatus, SaturationConfig};
use crate::term::{annotate_bound_vars, erase_proofs, zeta_reduce, Term};

/// Normalize a term for encoding: ζ-reduce, erase proof-headed subterms,
/// then (optionally) tag bound variables with their closed binder types.
pub fn normalize_term(t: &Term, config: &SaturationConfig) -> Term {
    let t = zeta_reduce(t);
    let t = erase_proofs(&t, &config.proof_heads);
    if config.annotate_bvars {
        annotate_bound_vars(&t)
    } else {
        t
    }
}

/// Rules with ground sides passed through the same normalization as goals.
/// Non-ground patterns are used as written.
pub fn prepare_rules(rules: &[RuleSpec], config: &SaturationConfig) -> Vec<RuleSpec> {
    rules
        .iter()
        .map(|r| {
            let normalize_side = |p: &Pattern| match p.clone().into_term() {
                Some(t) => Pattern::from_term(&normalize_term(&t, config)),
                None => p.clone(),
            };
            RuleSpec {
                name: r.name.clone(),
                lhs: normalize_side(&r.lhs),
                rhs: normalize_side(&r.rhs),
                directions: r.directions,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayStatus {
    Accepted,
    Rejected { step: usize, reason: String },
    /// Proved, but no witness chain exists (substitution-internal unions).
    Unavailable,
}

#[derive(Debug, Clone)]
pub struct ProveOutcome {
    pub status: SatStatus,
    pub iterations: u32,
    pub nodes: u64,
    pub classes: usize,
    pub explanation: Option<Explanation>,
    pub replay: ReplayStatus,
    pub rule_applications: std::collections::BTreeMap<String, u64>,
    /// The goal sides after normalization (what the prover actually ran on).
    pub goal: (Term, Term),
}

impl ProveOutcome {
    pub fn proved_and_verified(&self) -> bool {
        self.status == SatStatus::Proved && self.replay == ReplayStatus::Accepted
    }

    /// The process exit code contract: 0 proved+verified, 1 unproved,
    /// 3 proved but the explanation is unavailable or rejected.
    pub fn exit_code(&self) -> i32 {
        match (&self.status, &self.replay) {
            (SatStatus::Proved, ReplayStatus::Accepted) => 0,
            (SatStatus::Proved, _) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProveError {
    #[error(transparent)]
    Compile(#[from] CompileError),
}

#[derive(Serialize)]
struct ReportWire {
    status: SatStatus,
    iterations: u32,
    nodes: u64,
    classes: usize,
    explanation: Option<serde_json::Value>,
    replay: &'static str,
}

impl ProveOutcome {
    /// The stable machine-readable report.
    pub fn report_json(&self) -> String {
        let wire = ReportWire {
            status: self.status.clone(),
            iterations: self.iterations,
            nodes: self.nodes,
            classes: self.classes,
            explanation: self.explanation.as_ref().map(|e| e.to_json_value()),
            replay: match self.replay {
                ReplayStatus::Accepted => "accepted",
                ReplayStatus::Rejected { .. } => "rejected",
                ReplayStatus::Unavailable => "unavailable",
            },
        };
        serde_json::to_string(&wire).expect("report serializes")
    }
}

/// Saturation recursion tracks the graph's binder chains, which expansion
/// rules can push far past default thread stacks. Virtual memory only;
/// pages are committed on use.
const PROVE_STACK_BYTES: usize = 512 << 20;

/// Prove one problem end to end. Runs on a dedicated big-stack thread so
/// deep binder chains cannot overflow the caller.
pub fn prove_problem(problem: &ProblemFile) -> Result<ProveOutcome, ProveError> {
    std::thread::scope(|scope| {
        let handle = std::thread::Builder::new()
            .name("eqlam-prove".to_string())
            .stack_size(PROVE_STACK_BYTES)
            .spawn_scoped(scope, || prove_problem_here(problem))
            .expect("spawn prove thread");
        match handle.join() {
            Ok(result) => result,
            Err(panic) => std::panic::resume_unwind(panic),
        }
    })
}

/// The pipeline itself, on the current thread.
pub fn prove_problem_here(problem: &ProblemFile) -> Result<ProveOutcome, ProveError> {
    let config = &problem.config;
    let rules = prepare_rules(&problem.rules, config);
    let mut compiled = Vec::new();
    for rule in &rules {
        compiled.extend(compile_rule(rule)?);
    }

    let goal_lhs = normalize_term(&problem.goal.0, config);
    let goal_rhs = normalize_term(&problem.goal.1, config);

    let mut g = EGraph::new();
    // Ground rule sides are encoded up front so definitional bridges (β/η)
    // can reach them even when no goal term matches the rule syntactically.
    for rule in &rules {
        for side in [&rule.lhs, &rule.rhs] {
            if let Some(t) = side.clone().into_term() {
                g.add_term(&t).expect("normalized rule sides are let-free");
            }
        }
    }
    let lhs_class = g.add_term(&goal_lhs).expect("normalized goals are let-free");
    let rhs_class = g.add_term(&goal_rhs).expect("normalized goals are let-free");
    g.rebuild();

    let report = run(&mut g, &compiled, config, lhs_class, rhs_class);

    let (explanation, replay) = if report.status == SatStatus::Proved {
        match explain(&g, lhs_class, rhs_class, &goal_lhs, &goal_rhs) {
            Ok(e) => {
                let verdict = replay_check(&e, &rules, &goal_lhs, &goal_rhs);
                let status = match verdict {
                    ReplayVerdict::Accepted => ReplayStatus::Accepted,
                    ReplayVerdict::Rejected { step, reason } => {
                        ReplayStatus::Rejected { step, reason }
                    }
                };
                (Some(e), status)
            }
            Err(_) => (None, ReplayStatus::Unavailable),
        }
    } else {
        (None, ReplayStatus::Unavailable)
    };

    Ok(ProveOutcome {
        status: report.status,
        iterations: report.iterations,
        nodes: report.node_count,
        classes: report.class_count,
        explanation,
        replay,
        rule_applications: report.rule_applications,
        goal: (goal_lhs, goal_rhs),
    })
}
