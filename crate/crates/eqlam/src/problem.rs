//! Problem files: one goal equation, named rules, and config overrides.
//!
//! ```text
//! (problem
//!   (goal <term> <term>)
//!   (rule NAME <pattern> <pattern> [:dir both|fwd|bwd])*
//!   (config (KEY VALUE)*)?)
//! ```
//!
//! Config keys: beta, eta, annotate-bvars (true/false), iter-limit,
//! node-limit, time-limit-ms (naturals), proof-heads (list of symbols).

use std::time::Duration;

use thiserror::Error;

use crate::parse::{ParseError, Parser};
use crate::pattern::{Directions, RuleSpec};
use crate::saturate::SaturationConfig;
use crate::term::Term;

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub goal: (Term, Term),
    pub rules: Vec<RuleSpec>,
    pub config: SaturationConfig,
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("problem has no goal")]
    MissingGoal,
    #[error("problem has more than one goal")]
    MultipleGoals,
    #[error("duplicate rule name '{0}'")]
    DuplicateRule(String),
    #[error("unknown config key '{0}'")]
    UnknownConfigKey(String),
    #[error("bad value '{value}' for config key '{key}'")]
    BadConfigValue { key: String, value: String },
    #[error("metavariables are not allowed in goals")]
    MetavarInGoal,
}

/// Subset of config keys a problem file (or CLI flags) may override.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigOverrides {
    pub beta: Option<bool>,
    pub eta: Option<bool>,
    pub annotate_bvars: Option<bool>,
    pub iter_limit: Option<u32>,
    pub node_limit: Option<u64>,
    pub time_limit_ms: Option<u64>,
    pub proof_heads: Option<Vec<String>>,
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut SaturationConfig) {
        if let Some(v) = self.beta {
            config.enable_beta = v;
        }
        if let Some(v) = self.eta {
            config.enable_eta = v;
        }
        if let Some(v) = self.annotate_bvars {
            config.annotate_bvars = v;
        }
        if let Some(v) = self.iter_limit {
            config.iter_limit = v;
        }
        if let Some(v) = self.node_limit {
            config.node_limit = v;
        }
        if let Some(v) = self.time_limit_ms {
            config.time_limit = Duration::from_millis(v);
        }
        if let Some(v) = &self.proof_heads {
            config.proof_heads = v.iter().cloned().collect();
        }
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    let mut p = Parser::new(text);
    p.expect_lparen()?;
    p.expect_keyword("problem")?;
    let mut goal: Option<(Term, Term)> = None;
    let mut rules: Vec<RuleSpec> = Vec::new();
    let mut overrides = ConfigOverrides::default();
    loop {
        if p.try_rparen()? {
            break;
        }
        p.expect_lparen()?;
        let (head, head_off) = p.expect_atom_tok("a problem entry")?;
        match head.as_str() {
            "goal" => {
                if goal.is_some() {
                    return Err(ProblemError::MultipleGoals);
                }
                let lhs = p.pattern(false)?.into_term().ok_or(ProblemError::MetavarInGoal)?;
                let rhs = p.pattern(false)?.into_term().ok_or(ProblemError::MetavarInGoal)?;
                p.expect_rparen_tok()?;
                goal = Some((lhs, rhs));
            }
            "rule" => {
                let (name, _) = p.expect_atom_tok("a rule name")?;
                let lhs = p.pattern(true)?;
                let rhs = p.pattern(true)?;
                let directions = if p.try_colon()? {
                    let (key, off) = p.expect_atom_tok("'dir'")?;
                    if key != "dir" {
                        return Err(ParseError::Syntax {
                            offset: off,
                            message: format!("expected 'dir', found '{key}'"),
                        }
                        .into());
                    }
                    let (dir, off) = p.expect_atom_tok("a direction")?;
                    match dir.as_str() {
                        "both" => Directions::Both,
                        "fwd" => Directions::Forward,
                        "bwd" => Directions::Backward,
                        other => {
                            return Err(ParseError::Syntax {
                                offset: off,
                                message: format!(
                                    "direction must be both, fwd or bwd, found '{other}'"
                                ),
                            }
                            .into())
                        }
                    }
                } else {
                    Directions::Both
                };
                p.expect_rparen_tok()?;
                if rules.iter().any(|r| r.name == name) {
                    return Err(ProblemError::DuplicateRule(name));
                }
                rules.push(RuleSpec { name, lhs, rhs, directions });
            }
            "config" => {
                loop {
                    if p.try_rparen()? {
                        break;
                    }
                    p.expect_lparen()?;
                    let (key, _) = p.expect_atom_tok("a config key")?;
                    match key.as_str() {
                        "beta" | "eta" | "annotate-bvars" => {
                            let (value, _) = p.expect_atom_tok("true or false")?;
                            let flag = match value.as_str() {
                                "true" => true,
                                "false" => false,
                                _ => {
                                    return Err(ProblemError::BadConfigValue { key, value })
                                }
                            };
                            match key.as_str() {
                                "beta" => overrides.beta = Some(flag),
                                "eta" => overrides.eta = Some(flag),
                                _ => overrides.annotate_bvars = Some(flag),
                            }
                        }
                        "iter-limit" | "node-limit" | "time-limit-ms" => {
                            let (value, _) = p.expect_atom_tok("a natural number")?;
                            let n: u64 = value.parse().map_err(|_| {
                                ProblemError::BadConfigValue { key: key.clone(), value }
                            })?;
                            match key.as_str() {
                                "iter-limit" => overrides.iter_limit = Some(n as u32),
                                "node-limit" => overrides.node_limit = Some(n),
                                _ => overrides.time_limit_ms = Some(n),
                            }
                        }
                        "proof-heads" => {
                            let mut heads = Vec::new();
                            while !p.try_rparen()? {
                                let (sym, _) = p.expect_atom_tok("a symbol")?;
                                heads.push(sym);
                            }
                            overrides.proof_heads = Some(heads);
                            continue;
                        }
                        _ => return Err(ProblemError::UnknownConfigKey(key)),
                    }
                    p.expect_rparen_tok()?;
                }
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: head_off,
                    message: format!("unknown problem entry '{other}'"),
                }
                .into())
            }
        }
    }
    p.end()?;
    let goal = goal.ok_or(ProblemError::MissingGoal)?;
    let mut config = SaturationConfig::default();
    overrides.apply(&mut config);
    Ok(ProblemFile { goal, rules, config })
}
