//! Rule compilation and the equality-saturation loop.
//!
//! Every iteration collects all matches read-only (in parallel across
//! rules when the `parallel` feature is on), validates each against the
//! binder guards at application time, applies with capture-avoidance
//! shifting, unions the results, and rebuilds. Rules fire in declaration
//! order with no scheduling; determinism wins over throughput here.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use thiserror::Error;

use crate::egraph::{EClassId, EGraph, ENode, Justification};
use crate::ematch::{ematch, validate_match, MatchBinding, MatchDecision};
use crate::explain::EdgeKind;
use crate::pattern::{Pattern, RuleSpec};
use crate::subst::{beta_class, eta_class, subst, Sigma};
use crate::term::{beta_step, eta_step, shift_term, Term};

/// A rule compiled for one direction of application.
#[derive(Debug, Clone)]
pub struct CompiledRewrite {
    pub name: String,
    pub forward: bool,
    pub trigger: Pattern,
    pub output: Pattern,
    /// Trigger-side binder depth of each metavariable (the shift origin).
    pub trigger_depths: BTreeMap<String, BTreeSet<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("rule '{rule}': metavariable ?{var} is unbound on the {side} trigger side")]
    UnboundMetavar { rule: String, var: String, side: &'static str },
    #[error("rule '{rule}': let-expressions are only supported in ground rules")]
    LetInRule { rule: String },
}

/// Compile a rule into one rewrite per allowed direction.
pub fn compile_rule(rule: &RuleSpec) -> Result<Vec<CompiledRewrite>, CompileError> {
    if rule.lhs.contains_let() || rule.rhs.contains_let() {
        return Err(CompileError::LetInRule { rule: rule.name.clone() });
    }
    let mut out = Vec::new();
    let mut push = |trigger: &Pattern, output: &Pattern, forward: bool, side: &'static str| {
        let bound: BTreeSet<String> = trigger.metavars().into_iter().collect();
        for var in output.metavars() {
            if !bound.contains(&var) {
                return Err(CompileError::UnboundMetavar { rule: rule.name.clone(), var, side });
            }
        }
        out.push(CompiledRewrite {
            name: rule.name.clone(),
            forward,
            trigger: trigger.clone(),
            output: output.clone(),
            trigger_depths: trigger.metavar_depths(),
        });
        Ok(())
    };
    if rule.directions.allows_forward() {
        push(&rule.lhs, &rule.rhs, true, "forward")?;
    }
    if rule.directions.allows_backward() {
        push(&rule.rhs, &rule.lhs, false, "backward")?;
    }
    Ok(out)
}

/// Representative terms for every class that existed when the table was
/// built. With min-id unioning, canonical ids of later merges stay keys.
/// Classes whose smallest member exceeds the witness cap are absent;
/// rewrites touching them still fire, just without a recorded witness.
type Reps = BTreeMap<EClassId, Term>;

/// Largest witness term the proof log will materialize.
const WITNESS_SIZE_CAP: usize = 256;

fn rep<'a>(g: &EGraph, reps: &'a Reps, class: EClassId) -> Option<&'a Term> {
    reps.get(&g.find(class))
}

/// Instantiate the output pattern as e-classes, shifting each bound class
/// from its trigger depth to the occurrence depth. Returns `None` when a
/// shift underflows (the match is abandoned, not an error).
fn instantiate_classes(
    g: &mut EGraph,
    rw: &CompiledRewrite,
    p: &Pattern,
    m: &MatchBinding,
    depth: u32,
) -> Option<EClassId> {
    Some(match p {
        Pattern::Var(x) => {
            let class = m.assignment[x];
            if g.class_free_vars(class).is_empty() {
                g.find(class)
            } else {
                let trigger_depth =
                    rw.trigger_depths[x].iter().min().copied().unwrap_or(0);
                let offset = depth as i64 - trigger_depth as i64;
                if offset == 0 {
                    g.find(class)
                } else {
                    let sigma = Sigma::Shift { offset, cutoff: trigger_depth };
                    match subst(g, class, sigma) {
                        Ok(id) => id,
                        Err(_) => return None,
                    }
                }
            }
        }
        Pattern::Bvar { index, tag } => g.add(ENode::Bvar { index: *index, tag: tag.clone() }),
        Pattern::Sym(s) => g.add(ENode::Sym(s.clone())),
        Pattern::Lit(n) => g.add(ENode::Lit(*n)),
        Pattern::Eps => g.add(ENode::Eps),
        Pattern::App(f, a) => {
            let f = instantiate_classes(g, rw, f, m, depth)?;
            let a = instantiate_classes(g, rw, a, m, depth)?;
            g.add(ENode::App(f, a))
        }
        Pattern::Lam(t, b) => {
            let t = instantiate_classes(g, rw, t, m, depth)?;
            let b = instantiate_classes(g, rw, b, m, depth + 1)?;
            g.add(ENode::Lam(t, b))
        }
        Pattern::All(t, b) => {
            let t = instantiate_classes(g, rw, t, m, depth)?;
            let b = instantiate_classes(g, rw, b, m, depth + 1)?;
            g.add(ENode::All(t, b))
        }
        Pattern::Let(..) => unreachable!("rejected by compile_rule"),
    })
}

/// Instantiate a pattern as a plain term using class representatives,
/// mirroring the class-level shifting exactly.
fn instantiate_witness(
    g: &EGraph,
    rw: &CompiledRewrite,
    p: &Pattern,
    m: &MatchBinding,
    reps: &Reps,
    depth: u32,
    shift_to_occurrence: bool,
) -> Option<Term> {
    Some(match p {
        Pattern::Var(x) => {
            let member = rep(g, reps, m.assignment[x])?;
            if shift_to_occurrence {
                let trigger_depth =
                    rw.trigger_depths[x].iter().min().copied().unwrap_or(0);
                let offset = depth as i64 - trigger_depth as i64;
                match shift_term(member, offset, trigger_depth) {
                    Ok(t) => t,
                    Err(_) => return None,
                }
            } else {
                member.clone()
            }
        }
        Pattern::Bvar { index, tag } => Term::Bvar { index: *index, tag: tag.clone() },
        Pattern::Sym(s) => Term::Sym(s.clone()),
        Pattern::Lit(n) => Term::Lit(*n),
        Pattern::Eps => Term::Eps,
        Pattern::App(f, a) => Term::app(
            instantiate_witness(g, rw, f, m, reps, depth, shift_to_occurrence)?,
            instantiate_witness(g, rw, a, m, reps, depth, shift_to_occurrence)?,
        ),
        Pattern::Lam(t, b) => Term::lam(
            instantiate_witness(g, rw, t, m, reps, depth, shift_to_occurrence)?,
            instantiate_witness(g, rw, b, m, reps, depth + 1, shift_to_occurrence)?,
        ),
        Pattern::All(t, b) => Term::all(
            instantiate_witness(g, rw, t, m, reps, depth, shift_to_occurrence)?,
            instantiate_witness(g, rw, b, m, reps, depth + 1, shift_to_occurrence)?,
        ),
        Pattern::Let(..) => unreachable!("rejected by compile_rule"),
    })
}

/// Apply a validated match: build the instantiated output class, record a
/// term-level witness edge, and hand back the classes for the caller to
/// union. `None` abandons the match (shift underflow).
pub fn apply_rewrite(
    g: &mut EGraph,
    rw: &CompiledRewrite,
    m: &MatchBinding,
    reps: &Reps,
) -> Option<(EClassId, EClassId, Justification)> {
    let inst = instantiate_classes(g, rw, &rw.output, m, 0)?;
    // Witnesses need a representative for every bound class; give up on
    // the edge (not the rewrite) when one is too large to materialize.
    let witness = instantiate_witness(g, rw, &rw.trigger, m, reps, 0, false)
        .zip(instantiate_witness(g, rw, &rw.output, m, reps, 0, true));
    if let Some((tl, tr)) = witness {
        // Mid-iteration the memo can be stale, so these adds may land in
        // transient duplicate classes; the end-of-iteration rebuild merges
        // them back by congruence.
        let tl_class = g.add_term(&tl).expect("patterns are let-free");
        let tr_class = g.add_term(&tr).expect("patterns are let-free");
        g.union(tl_class, m.root, Justification::Congruence);
        if g.find(tr_class) != g.find(inst) {
            g.union(tr_class, inst, Justification::Congruence);
        }
        g.record_proof_edge(
            &tl,
            &tr,
            EdgeKind::Rule { name: rw.name.clone(), forward: rw.forward },
        );
    }
    Some((
        m.root,
        inst,
        Justification::Rule { name: rw.name.clone(), forward: rw.forward },
    ))
}

#[derive(Debug, Clone, Copy)]
struct BetaMatch {
    root: EClassId,
    lam_ty: EClassId,
    body: EClassId,
    arg: EClassId,
}

#[derive(Debug, Clone)]
struct EtaMatch {
    root: EClassId,
    lam_ty: EClassId,
    fun: EClassId,
    bvar_tag: Option<String>,
}

fn collect_beta(g: &EGraph) -> Vec<BetaMatch> {
    let mut out = Vec::new();
    for (root, class) in g.classes() {
        for node in class.nodes() {
            if let ENode::App(f, a) = node {
                for fnode in g.class(*f).nodes() {
                    if let ENode::Lam(t, b) = fnode {
                        out.push(BetaMatch { root, lam_ty: *t, body: *b, arg: *a });
                    }
                }
            }
        }
    }
    out
}

fn collect_eta(g: &EGraph) -> Vec<EtaMatch> {
    let mut out = Vec::new();
    for (root, class) in g.classes() {
        for node in class.nodes() {
            if let ENode::Lam(t, b) = node {
                for bnode in g.class(*b).nodes() {
                    if let ENode::App(f, x) = bnode {
                        let bvar_tag = g.class(*x).nodes().iter().find_map(|n| match n {
                            ENode::Bvar { index: 0, tag } => Some(tag.clone()),
                            _ => None,
                        });
                        if let Some(tag) = bvar_tag {
                            if !g.class_free_vars(*f).contains(&0) {
                                out.push(EtaMatch {
                                    root,
                                    lam_ty: *t,
                                    fun: *f,
                                    bvar_tag: tag,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Apply one β match: union the redex class with `beta(body, arg)` and
/// record the atomic witness edge redex -> reduct.
fn apply_beta(g: &mut EGraph, bm: &BetaMatch, reps: &Reps) -> Option<(EClassId, EClassId)> {
    let out = beta_class(g, bm.body, bm.arg).ok()?;
    let witness = match (rep(g, reps, bm.lam_ty), rep(g, reps, bm.body), rep(g, reps, bm.arg)) {
        (Some(tau), Some(body), Some(arg)) => {
            Some(Term::app(Term::lam(tau.clone(), body.clone()), arg.clone()))
        }
        _ => None,
    };
    if let Some(tl) = witness {
        let tr = beta_step(&tl).expect("constructed redex reduces");
        let tl_class = g.add_term(&tl).expect("let-free");
        let tr_class = g.add_term(&tr).expect("let-free");
        g.union(tl_class, bm.root, Justification::Congruence);
        if g.find(tr_class) != g.find(out) {
            g.union(tr_class, out, Justification::Beta);
        }
        g.record_proof_edge(&tl, &tr, EdgeKind::Beta);
    }
    Some((bm.root, out))
}

fn apply_eta(g: &mut EGraph, em: &EtaMatch, reps: &Reps) -> Option<(EClassId, EClassId)> {
    // Unions since collection may have grown the function class's may-free
    // set; the side condition holds only if it is still clean now.
    if g.class_free_vars(em.fun).contains(&0) {
        return None;
    }
    let out = eta_class(g, em.fun).ok()?;
    let witness = match (rep(g, reps, em.lam_ty), rep(g, reps, em.fun)) {
        (Some(tau), Some(fun)) => Some(Term::lam(
            tau.clone(),
            Term::app(fun.clone(), Term::Bvar { index: 0, tag: em.bvar_tag.clone() }),
        )),
        _ => None,
    };
    if let Some(tl) = witness {
        let tr = eta_step(&tl).expect("guard checked the side condition");
        let tl_class = g.add_term(&tl).expect("let-free");
        let tr_class = g.add_term(&tr).expect("let-free");
        g.union(tl_class, em.root, Justification::Congruence);
        if g.find(tr_class) != g.find(out) {
            g.union(tr_class, out, Justification::Eta);
        }
        g.record_proof_edge(&tl, &tr, EdgeKind::Eta);
    }
    Some((em.root, out))
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SatStatus {
    Proved,
    Saturated,
    IterLimit,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SaturationConfig {
    pub iter_limit: u32,
    pub node_limit: u64,
    pub time_limit: Duration,
    pub enable_beta: bool,
    pub enable_eta: bool,
    pub annotate_bvars: bool,
    pub proof_heads: BTreeSet<String>,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            iter_limit: 32,
            node_limit: 20_000,
            time_limit: Duration::from_millis(5_000),
            enable_beta: true,
            enable_eta: true,
            annotate_bvars: false,
            proof_heads: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaturationReport {
    pub status: SatStatus,
    pub iterations: u32,
    pub node_count: u64,
    pub class_count: usize,
    pub goal_lhs: EClassId,
    pub goal_rhs: EClassId,
    /// Times each rule (or "beta"/"eta") was applied across the run.
    pub rule_applications: BTreeMap<String, u64>,
}

/// Run saturation until the goal classes merge, nothing changes, or a
/// limit trips. The goal classes must already be in the rebuilt graph.
pub fn run(
    g: &mut EGraph,
    rewrites: &[CompiledRewrite],
    config: &SaturationConfig,
    goal_lhs: EClassId,
    goal_rhs: EClassId,
) -> SaturationReport {
    let started = Instant::now();
    let mut iterations = 0u32;
    let mut rule_applications: BTreeMap<String, u64> = BTreeMap::new();
    let status = loop {
        if g.find(goal_lhs) == g.find(goal_rhs) {
            break SatStatus::Proved;
        }
        if iterations >= config.iter_limit {
            break SatStatus::IterLimit;
        }
        if g.nodes_added() >= config.node_limit {
            break SatStatus::NodeLimit;
        }
        if started.elapsed() > config.time_limit {
            break SatStatus::TimeLimit;
        }

        let nodes_before = g.nodes_added();
        let unions_before = g.union_log().len();

        // Read-only match collection, rule order preserved.
        #[cfg(feature = "parallel")]
        let per_rule: Vec<Vec<MatchBinding>> = {
            let shared: &EGraph = g;
            rewrites.par_iter().map(|rw| ematch(shared, &rw.trigger)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let per_rule: Vec<Vec<MatchBinding>> =
            rewrites.iter().map(|rw| ematch(g, &rw.trigger)).collect();

        let betas = if config.enable_beta { collect_beta(g) } else { Vec::new() };
        let etas = if config.enable_eta { collect_eta(g) } else { Vec::new() };
        let reps = g.extract_smallest_table(WITNESS_SIZE_CAP);

        // Mutating phase: validate against the current analysis, apply,
        // union. Deduplicate per (rule instance, root, assignment).
        let mut seen: BTreeSet<(usize, EClassId, Vec<(String, EClassId)>)> = BTreeSet::new();
        'apply: for (rw_idx, matches) in per_rule.iter().enumerate() {
            let rw = &rewrites[rw_idx];
            for m in matches {
                if g.nodes_added() >= config.node_limit {
                    break 'apply;
                }
                let key = (
                    rw_idx,
                    g.find(m.root),
                    m.assignment.iter().map(|(k, &v)| (k.clone(), g.find(v))).collect(),
                );
                if !seen.insert(key) {
                    continue;
                }
                if validate_match(g, m) != MatchDecision::Valid {
                    continue;
                }
                if let Some((a, b, just)) = apply_rewrite(g, rw, m, &reps) {
                    *rule_applications.entry(rw.name.clone()).or_default() += 1;
                    g.union(a, b, just);
                }
            }
        }
        let mut seen_beta = BTreeSet::new();
        for bm in &betas {
            if g.nodes_added() >= config.node_limit {
                break;
            }
            if !seen_beta.insert((g.find(bm.body), g.find(bm.arg), g.find(bm.root))) {
                continue;
            }
            if let Some((a, b)) = apply_beta(g, bm, &reps) {
                *rule_applications.entry("beta".to_string()).or_default() += 1;
                g.union(a, b, Justification::Beta);
            }
        }
        let mut seen_eta = BTreeSet::new();
        for em in &etas {
            if g.nodes_added() >= config.node_limit {
                break;
            }
            if !seen_eta.insert((g.find(em.fun), g.find(em.root))) {
                continue;
            }
            if let Some((a, b)) = apply_eta(g, em, &reps) {
                *rule_applications.entry("eta".to_string()).or_default() += 1;
                g.union(a, b, Justification::Eta);
            }
        }
        g.rebuild();
        iterations += 1;

        let changed =
            g.nodes_added() != nodes_before || g.union_log().len() != unions_before;
        if !changed {
            break if g.find(goal_lhs) == g.find(goal_rhs) {
                SatStatus::Proved
            } else {
                SatStatus::Saturated
            };
        }
    };
    SaturationReport {
        status,
        iterations,
        node_count: g.nodes_added(),
        class_count: g.num_classes(),
        goal_lhs: g.find(goal_lhs),
        goal_rhs: g.find(goal_rhs),
        rule_applications,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_pattern, parse_term};
    use crate::pattern::Directions;

    fn rule(name: &str, lhs: &str, rhs: &str, dirs: Directions) -> RuleSpec {
        RuleSpec {
            name: name.to_string(),
            lhs: parse_pattern(lhs).unwrap(),
            rhs: parse_pattern(rhs).unwrap(),
            directions: dirs,
        }
    }

    fn add(g: &mut EGraph, s: &str) -> EClassId {
        g.add_term(&parse_term(s).unwrap()).unwrap()
    }

    #[test]
    fn compile_directions() {
        let r = rule("pz", "(app (app plus ?x) (lit 0))", "?x", Directions::Both);
        let compiled = compile_rule(&r).unwrap();
        assert_eq!(compiled.len(), 2);
        assert!(compiled[0].forward && !compiled[1].forward);
    }

    #[test]
    fn compile_rejects_unbound_metavar() {
        let r = rule("bad", "a", "(app f ?y)", Directions::Forward);
        match compile_rule(&r) {
            Err(CompileError::UnboundMetavar { var, .. }) => assert_eq!(var, "y"),
            other => panic!("expected unbound metavar, got {other:?}"),
        }
        // The same rule is fine backwards: the trigger binds ?y.
        let r = rule("ok", "a", "(app f ?y)", Directions::Backward);
        assert_eq!(compile_rule(&r).unwrap().len(), 1);
    }

    #[test]
    fn ground_rule_compiles_both_ways() {
        let r = rule("ground", "(app f a)", "(app f b)", Directions::Both);
        let compiled = compile_rule(&r).unwrap();
        assert_eq!(compiled.len(), 2);
        assert!(compiled.iter().all(|c| c.trigger_depths.is_empty()));
    }

    #[test]
    fn uncapture_shift_example() {
        // λ(λ ?x) 0 -> λ ?x applied to λ(λ 4̂) 0 yields λ 3̂, not λ 4̂.
        let mut g = EGraph::new();
        let root = add(&mut g, "(lam _ (app (lam _ (bvar 4)) (lit 0)))");
        g.rebuild();
        let r = rule(
            "collapse",
            "(lam _ (app (lam _ ?x) (lit 0)))",
            "(lam _ ?x)",
            Directions::Forward,
        );
        let compiled = compile_rule(&r).unwrap();
        let reps = g.extract_smallest_table(WITNESS_SIZE_CAP);
        let ms = ematch(&g, &compiled[0].trigger);
        assert_eq!(ms.len(), 1);
        assert_eq!(validate_match(&g, &ms[0]), MatchDecision::Valid);
        let (a, b, just) = apply_rewrite(&mut g, &compiled[0], &ms[0], &reps).unwrap();
        g.union(a, b, just);
        g.rebuild();
        let merged = g.find(root);
        let set = g.extract_terms(merged, 3);
        assert!(set.contains(&parse_term("(lam _ (bvar 3))").unwrap()));
        assert!(!set.contains(&parse_term("(lam _ (bvar 4))").unwrap()));
    }

    #[test]
    fn ground_rule_applies_verbatim() {
        let mut g = EGraph::new();
        let fa = add(&mut g, "(app f a)");
        let fb = add(&mut g, "(app f b)");
        g.rebuild();
        let r = rule("ab", "(app f a)", "(app f b)", Directions::Forward);
        let compiled = compile_rule(&r).unwrap();
        let report = run(
            &mut g,
            &compiled,
            &SaturationConfig { enable_beta: false, enable_eta: false, ..Default::default() },
            fa,
            fb,
        );
        assert_eq!(report.status, SatStatus::Proved);
        assert_eq!(g.find(fa), g.find(fb));
    }

    #[test]
    fn beta_rfl_proves_in_three_iterations() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(app (lam _ (app (app plus (bvar 0)) (lit 0))) (lit 1))");
        let rhs = add(&mut g, "(lit 1)");
        g.rebuild();
        let r = rule("plus_zero", "(app (app plus ?x) (lit 0))", "?x", Directions::Both);
        let compiled = compile_rule(&r).unwrap();
        let config =
            SaturationConfig { enable_eta: false, ..Default::default() };
        let report = run(&mut g, &compiled, &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::Proved);
        assert!(report.iterations <= 3, "proved in {} iterations", report.iterations);
    }

    #[test]
    fn trivial_goal_proved_at_iteration_zero() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(app f a)");
        let rhs = add(&mut g, "(app f a)");
        g.rebuild();
        let report = run(&mut g, &[], &SaturationConfig::default(), lhs, rhs);
        assert_eq!(report.status, SatStatus::Proved);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn definitional_gap_requires_beta() {
        let ground = rule(
            "lift",
            "(app (lam _ (app (app plus (bvar 0)) (lit 1))) l1)",
            "(app (lam _ (app (app plus (bvar 0)) (lit 1))) l2)",
            Directions::Both,
        );
        let compiled = compile_rule(&ground).unwrap();
        let build = |enable_beta: bool| {
            let mut g = EGraph::new();
            // Ground rule sides are encoded up front, like the pipeline does.
            add(&mut g, "(app (lam _ (app (app plus (bvar 0)) (lit 1))) l1)");
            add(&mut g, "(app (lam _ (app (app plus (bvar 0)) (lit 1))) l2)");
            let lhs = add(&mut g, "(app (app plus l1) (lit 1))");
            let rhs = add(&mut g, "(app (app plus l2) (lit 1))");
            g.rebuild();
            let config = SaturationConfig {
                enable_beta,
                enable_eta: false,
                ..Default::default()
            };
            run(&mut g, &compiled, &config, lhs, rhs).status
        };
        assert_eq!(build(false), SatStatus::Saturated);
        assert_eq!(build(true), SatStatus::Proved);
    }

    #[test]
    fn guards_keep_locally_bound_classes_apart() {
        // (λ 0̂) 1 and 0̂ must never merge under the collapse rule, and β
        // (which correctly equates the redex with 1) must not interfere.
        let mut g = EGraph::new();
        let redex = add(&mut g, "(app (lam _ (bvar 0)) (lit 1))");
        let bvar = add(&mut g, "(bvar 0)");
        g.rebuild();
        let r = rule("collapse", "(app (lam _ ?x) (lit 1))", "?x", Directions::Forward);
        let compiled = compile_rule(&r).unwrap();
        let config = SaturationConfig { iter_limit: 64, ..Default::default() };
        let report = run(&mut g, &compiled, &config, redex, bvar);
        assert_ne!(report.status, SatStatus::Proved);
        assert_ne!(g.find(redex), g.find(bvar));
        assert_eq!(report.rule_applications.get("collapse"), None, "guard blocked every firing");
    }

    #[test]
    fn two_binder_rule_never_fires() {
        let mut g = EGraph::new();
        let root = add(&mut g, "(lam _ (app (lam _ (bvar 0)) (bvar 0)))");
        g.rebuild();
        let r = rule(
            "two_occurrence",
            "(lam _ (app (lam _ ?x) ?x))",
            "(app k ?x)",
            Directions::Forward,
        );
        let compiled = compile_rule(&r).unwrap();
        let other = add(&mut g, "zzz");
        let config = SaturationConfig { iter_limit: 64, enable_beta: false, enable_eta: false, ..Default::default() };
        let report = run(&mut g, &compiled, &config, root, other);
        assert_eq!(report.rule_applications.get("two_occurrence"), None);
    }

    #[test]
    fn builtin_eta_reduces_closed_function() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(lam _ (app f (bvar 0)))");
        let rhs = add(&mut g, "f");
        g.rebuild();
        let config = SaturationConfig { enable_beta: false, ..Default::default() };
        let report = run(&mut g, &[], &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::Proved);
    }

    #[test]
    fn builtin_eta_respects_side_condition() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(lam _ (app (bvar 0) (bvar 0)))");
        let rhs = add(&mut g, "(bvar 0)");
        g.rebuild();
        let report = run(&mut g, &[], &SaturationConfig::default(), lhs, rhs);
        assert_ne!(report.status, SatStatus::Proved);
    }

    #[test]
    fn builtin_eta_shifts_free_function() {
        // λ.(1̂ 0̂) =η= 0̂.
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(lam _ (app (bvar 1) (bvar 0)))");
        let rhs = add(&mut g, "(bvar 0)");
        g.rebuild();
        let config = SaturationConfig { enable_beta: false, ..Default::default() };
        let report = run(&mut g, &[], &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::Proved);
    }

    #[test]
    fn nested_redex_under_binder_is_found() {
        // λ. ((λ. 0̂) (lit 5)) =β= λ. (lit 5).
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(lam _ (app (lam _ (bvar 0)) (lit 5)))");
        let rhs = add(&mut g, "(lam _ (lit 5))");
        g.rebuild();
        let config = SaturationConfig { enable_eta: false, ..Default::default() };
        let report = run(&mut g, &[], &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::Proved);
    }

    #[test]
    fn node_limit_trips() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(app f a)");
        let rhs = add(&mut g, "zzz");
        g.rebuild();
        // f x -> f (g x) grows forever.
        let r = rule("grow", "(app f ?x)", "(app f (app g ?x))", Directions::Forward);
        let compiled = compile_rule(&r).unwrap();
        let config = SaturationConfig {
            node_limit: 40,
            iter_limit: 10_000,
            enable_beta: false,
            enable_eta: false,
            ..Default::default()
        };
        let report = run(&mut g, &compiled, &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::NodeLimit);
        assert!(report.node_count >= 40);
    }

    #[test]
    fn saturation_status_when_no_rule_applies() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(app f a)");
        let rhs = add(&mut g, "(app g a)");
        g.rebuild();
        let config =
            SaturationConfig { enable_beta: false, enable_eta: false, ..Default::default() };
        let report = run(&mut g, &[], &config, lhs, rhs);
        assert_eq!(report.status, SatStatus::Saturated);
    }

    #[test]
    fn node_count_is_monotone() {
        let mut g = EGraph::new();
        let lhs = add(&mut g, "(app (app plus a) (lit 0))");
        let rhs = add(&mut g, "a");
        g.rebuild();
        let r = rule("pz", "(app (app plus ?x) (lit 0))", "?x", Directions::Both);
        let compiled = compile_rule(&r).unwrap();
        let mut last = g.nodes_added();
        for _ in 0..4 {
            let config = SaturationConfig { iter_limit: 1, ..Default::default() };
            let _ = run(&mut g, &compiled, &config, lhs, rhs);
            assert!(g.nodes_added() >= last);
            last = g.nodes_added();
        }
    }
}
