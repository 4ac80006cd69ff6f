//! Acceptance suite: one test per criterion, each printing a pass line
//! and pinning its thresholds in code.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use eqlam::egraph::{EClassId, EGraph, Justification};
use eqlam::ematch::{ematch, validate_match, MatchDecision};
use eqlam::gen::{random_problem, random_term, Rng};
use eqlam::oracle::{oracle_search, OracleLimits};
use eqlam::parse::{parse_pattern, parse_term};
use eqlam::pipeline::{normalize_term, prepare_rules};
use eqlam::problem::parse_problem;
use eqlam::saturate::compile_rule;
use eqlam::subst::{beta_class, subst, Sigma};
use eqlam::term::{open_term, shift_term, zeta_reduce, Term};
use eqlam::{prove_problem, Directions, ReplayStatus, RuleSpec, SatStatus};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "problem"))
        .collect();
    files.sort();
    assert_eq!(files.len(), 25, "the bundled corpus holds 25 problems");
    files
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eqlam"))
}

fn load(path: &Path) -> eqlam::ProblemFile {
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn passed(n: u32, what: &str) {
    println!("ACCEPTANCE {n} ({what}): PASS");
}

#[test]
fn criterion_1_beta_rfl() {
    let path = corpus_dir().join("01_beta_rfl.problem");
    let out = prove_problem(&load(&path)).unwrap();
    assert_eq!(out.status, SatStatus::Proved);
    assert!(out.iterations <= 3, "proved in {} iterations", out.iterations);
    let e = out.explanation.as_ref().expect("explanation available");
    assert_eq!(e.steps.len(), 2, "explanation of exactly 2 steps");
    assert_eq!(out.replay, ReplayStatus::Accepted);
    let status = cli().arg("prove").arg(&path).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    passed(1, "beta-rfl fixture");
}

#[test]
fn criterion_2_definitional_gap() {
    // Beta disabled: the rule matches no goal term; unproved, exit 1.
    let off = corpus_dir().join("03_defgap_beta_off.problem");
    let out_off = prove_problem(&load(&off)).unwrap();
    assert_ne!(out_off.status, SatStatus::Proved);
    let status = cli().arg("prove").arg(&off).output().unwrap();
    assert_eq!(status.status.code(), Some(1));

    // Beta enabled: proved with a replay-accepted explanation whose length
    // equals the oracle's shortest trace (expand, ground rule, reduce).
    let on = corpus_dir().join("02_defgap_beta_on.problem");
    let problem = load(&on);
    let out_on = prove_problem(&problem).unwrap();
    assert_eq!(out_on.status, SatStatus::Proved);
    assert_eq!(out_on.replay, ReplayStatus::Accepted);
    let e = out_on.explanation.as_ref().unwrap();
    let rules = prepare_rules(&problem.rules, &problem.config);
    let trace = oracle_search(
        &out_on.goal.0,
        &out_on.goal.1,
        &rules,
        true,
        false,
        &OracleLimits { max_depth: 6, max_term_size: 48, max_states: 100_000 },
    )
    .unwrap()
    .expect("oracle path exists");
    assert_eq!(trace.len(), 3, "shortest trace: beta backward, rule, beta forward");
    assert_eq!(e.steps.len(), trace.len(), "explanation matches the oracle's shortest trace");
    passed(2, "definitional-gap fixture");
}

#[test]
fn criterion_3_guards() {
    // (λ 0̂) 1 and 0̂ never merge under the locally-bound rule, at any
    // iteration count up to 64 (unions only grow, so the final check
    // covers every earlier iteration).
    let text = "(problem \
        (goal (app (lam _ (bvar 0)) (lit 1)) (bvar 0)) \
        (rule collapse (app (lam _ ?x) (lit 1)) ?x) \
        (config (iter-limit 64) (node-limit 2000)))";
    let out = prove_problem(&parse_problem(text).unwrap()).unwrap();
    assert_ne!(out.status, SatStatus::Proved, "guarded classes must never merge");

    // The two-occurrence rule fires zero times against λ(λ 0̂) 0̂.
    let text = "(problem \
        (goal (lam _ (app (lam _ (bvar 0)) (bvar 0))) unreachable) \
        (rule two_occ (lam _ (app (lam _ ?x) ?x)) (app k ?x)) \
        (config (iter-limit 64) (node-limit 2000)))";
    let out = prove_problem(&parse_problem(text).unwrap()).unwrap();
    assert_eq!(
        out.rule_applications.get("two_occ"),
        None,
        "application counter stays at zero"
    );
    passed(3, "invalid-matching guards");
}

#[test]
fn criterion_4_uncapture_shift() {
    let mut g = EGraph::new();
    let root = g
        .add_term(&parse_term("(lam _ (app (lam _ (bvar 4)) (lit 0)))").unwrap())
        .unwrap();
    g.rebuild();
    let rule = RuleSpec {
        name: "drop".to_string(),
        lhs: parse_pattern("(lam _ (app (lam _ ?x) (lit 0)))").unwrap(),
        rhs: parse_pattern("(lam _ ?x)").unwrap(),
        directions: Directions::Forward,
    };
    let compiled = compile_rule(&rule).unwrap();
    let reps = g.extract_smallest_table(64);
    let matches = ematch(&g, &compiled[0].trigger);
    assert_eq!(matches.len(), 1);
    assert_eq!(validate_match(&g, &matches[0]), MatchDecision::Valid);
    let (a, b, just) =
        eqlam::saturate::apply_rewrite(&mut g, &compiled[0], &matches[0], &reps).unwrap();
    g.union(a, b, just);
    g.rebuild();
    let set = g.extract_terms(root, 3);
    assert!(set.contains(&parse_term("(lam _ (bvar 3))").unwrap()), "contains λ 3̂");
    assert!(!set.contains(&parse_term("(lam _ (bvar 4))").unwrap()), "free of λ 4̂");
    passed(4, "un-capture shift fixture");
}

#[test]
fn criterion_5_subst_set_semantics() {
    let started = Instant::now();
    let mut rng = Rng::new(0x5e75);
    let budget = 8usize;
    let mut shift_underflows = 0;
    for case in 0..200 {
        let mut g = EGraph::new();
        let n_terms = 1 + rng.below(50) as usize;
        for _ in 0..n_terms {
            let t = zeta_reduce(&random_term(&mut rng, 8));
            g.add_term(&t).unwrap();
        }
        g.rebuild();
        let classes: Vec<EClassId> = g.classes().map(|(id, _)| id).collect();

        // Shift sigma: exact set equality, or agreement on underflow.
        let c = *rng.pick(&classes);
        let offset = rng.below(5) as i64 - 2;
        let cutoff = rng.below(3) as u32;
        let members = g.extract_terms(c, budget);
        let expected: Result<BTreeSet<Term>, _> =
            members.iter().map(|t| shift_term(t, offset, cutoff)).collect();
        match (subst(&mut g, c, Sigma::Shift { offset, cutoff }), expected) {
            (Ok(sc), Ok(exp)) => {
                assert_eq!(g.extract_terms(sc, budget), exp, "shift case {case}");
            }
            (Err(_), Err(_)) => shift_underflows += 1,
            (got, exp) => panic!("case {case}: underflow disagreement: {got:?} vs {exp:?}"),
        }

        // Beta sigma: replacing the top binder variable with an argument
        // class equals the plain-term instantiation of every member.
        let classes: Vec<EClassId> = g.classes().map(|(id, _)| id).collect();
        let c = g.find(*rng.pick(&classes));
        let arg = g.find(*rng.pick(&classes));
        let members = g.extract_terms(c, budget);
        let arg_members = g.extract_terms(arg, budget);
        let mut expected = BTreeSet::new();
        for t in &members {
            for a in &arg_members {
                expected.insert(open_term(t, a));
            }
        }
        let max_size = expected.iter().map(Term::size).max().unwrap_or(1);
        let sc = beta_class(&mut g, c, arg).expect("beta never underflows");
        assert_eq!(g.extract_terms(sc, max_size), expected, "beta case {case}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed <= Duration::from_secs(60), "took {elapsed:?}");
    println!("  (200 graphs, {shift_underflows} agreed underflows, {elapsed:?})");
    passed(5, "subst set semantics on 200 random acyclic graphs");
}

#[test]
fn criterion_6_cycle_termination() {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        // Self-cycle with a base member: a = {0̂, f a}.
        let mut g = EGraph::new();
        let a = g.add_term(&parse_term("(bvar 0)").unwrap()).unwrap();
        let fa = g.add_term(&parse_term("(app f (bvar 0))").unwrap()).unwrap();
        g.union(a, fa, Justification::Congruence);
        g.rebuild();
        let expected: BTreeSet<Term> = g
            .extract_terms(a, 9)
            .iter()
            .map(|t| shift_term(t, 1, 0).unwrap())
            .collect();
        let sc = subst(&mut g, a, Sigma::Shift { offset: 1, cutoff: 0 }).unwrap();
        if g.extract_terms(sc, 9) != expected {
            let _ = tx.send(Err("self-cycle extract mismatch"));
            return;
        }

        // Two-class mutual cycle: a = {5̂, g b}, b = {9̂, h a}.
        let mut g = EGraph::new();
        let a = g.add_term(&parse_term("(bvar 5)").unwrap()).unwrap();
        let gb = g.add_term(&parse_term("(app g (bvar 9))").unwrap()).unwrap();
        let b = g.add_term(&parse_term("(bvar 9)").unwrap()).unwrap();
        let ha = g.add_term(&parse_term("(app h (bvar 5))").unwrap()).unwrap();
        g.union(a, gb, Justification::Congruence);
        g.union(b, ha, Justification::Congruence);
        g.rebuild();
        let expected: BTreeSet<Term> = g
            .extract_terms(a, 9)
            .iter()
            .map(|t| shift_term(t, 1, 0).unwrap())
            .collect();
        let sa = subst(&mut g, a, Sigma::Shift { offset: 1, cutoff: 0 }).unwrap();
        if g.extract_terms(sa, 9) != expected {
            let _ = tx.send(Err("mutual-cycle extract mismatch"));
            return;
        }
        let _ = tx.send(Ok(()));
    });
    match rx.recv_timeout(Duration::from_secs(1)) {
        Ok(Ok(())) => {}
        Ok(Err(msg)) => panic!("{msg}"),
        Err(_) => panic!("substitution did not terminate within 1 second"),
    }
    passed(6, "cycle termination with bounded-unrolling agreement");
}

#[test]
fn criterion_7_kernel_soundness_sweep() {
    let started = Instant::now();
    let mut rng = Rng::new(0x7e57);
    let mut problems = Vec::new();
    for _ in 0..500 {
        let mut p = random_problem(&mut rng, 5, 8);
        p.config.iter_limit = 16;
        p.config.node_limit = 20_000;
        p.config.time_limit = Duration::from_millis(2_000);
        problems.push(p);
    }
    let results = eqlam::batch::prove_batch(&problems);
    let mut proved = 0u32;
    let mut accepted = 0u32;
    let mut incomplete = 0u32;
    for (i, result) in results.iter().enumerate() {
        let out = result.as_ref().expect("random rules compile");
        if out.status != SatStatus::Proved {
            continue;
        }
        proved += 1;
        match &out.replay {
            ReplayStatus::Accepted => accepted += 1,
            ReplayStatus::Unavailable => incomplete += 1,
            ReplayStatus::Rejected { step, reason } => {
                panic!(
                    "problem {i}: replay rejected a produced explanation at step {step}: \
                     {reason}\ngoal {} = {}",
                    out.goal.0, out.goal.1
                );
            }
        }
    }
    assert!(proved >= 50, "only {proved} of 500 problems proved");
    assert!(
        incomplete * 5 < proved,
        "{incomplete} incomplete of {proved} proved exceeds the 20% allowance"
    );
    println!(
        "  (proved {proved}, replay-accepted {accepted}, incomplete {incomplete}, {:?})",
        started.elapsed()
    );
    passed(7, "kernel soundness sweep over 500 random problems");
}

#[test]
fn criterion_8_oracle_agreement() {
    for path in corpus_files() {
        let prove = cli().arg("prove").arg(&path).output().unwrap();
        let prove_code = prove.status.code().unwrap();
        assert!(prove_code == 0 || prove_code == 1, "{}: unexpected exit {prove_code}", path.display());
        if prove_code != 0 {
            continue;
        }
        let oracle = cli()
            .arg("oracle")
            .arg(&path)
            .args(["--max-depth", "14", "--max-states", "400000", "--max-term-size", "72"])
            .output()
            .unwrap();
        assert_eq!(
            oracle.status.code(),
            Some(0),
            "{}: proved but the oracle disagrees:\n{}",
            path.display(),
            String::from_utf8_lossy(&oracle.stderr)
        );
    }
    passed(8, "prover/oracle agreement over the 25-problem corpus");
}

#[test]
fn criterion_9_byte_determinism() {
    let files = corpus_files();
    let run = |jobs: &str| {
        let out = cli()
            .arg("prove")
            .args(&files)
            .args(["--jobs", jobs])
            .output()
            .unwrap();
        out.stdout
    };
    let first = run("1");
    let second = run("1");
    assert_eq!(first, second, "two serial runs differ");
    let parallel = run("2");
    assert_eq!(first, parallel, "parallel run differs from serial");
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 25, "one JSON line per problem");
    passed(9, "byte-identical corpus reports across runs");
}
