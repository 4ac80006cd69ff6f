//! Deterministic random generators for tests and benchmarks.
//!
//! Uses a self-contained splitmix64 stream so fixed seeds reproduce the
//! same terms on every platform and toolchain.

use std::collections::BTreeMap;

use crate::pattern::{Directions, Pattern, RuleSpec};
use crate::problem::ProblemFile;
use crate::saturate::SaturationConfig;
use crate::term::Term;

/// splitmix64: tiny, well-distributed, and stable forever.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` (n > 0).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len() as u64) as usize]
    }
}

const SYMBOLS: &[&str] = &["f", "g", "h", "plus", "a", "b", "c"];

/// A random term of size at most `budget`, with bound variable indices
/// drawn from the current depth plus a few free slots.
pub fn random_term(rng: &mut Rng, budget: usize) -> Term {
    go(rng, budget, 0)
}

fn go(rng: &mut Rng, budget: usize, depth: u32) -> Term {
    if budget < 3 {
        return leaf(rng, depth);
    }
    match rng.below(10) {
        // Apps dominate; binders appear but do not overwhelm.
        0..=4 => {
            let left = 1 + rng.below((budget - 2) as u64) as usize;
            let right = budget - 1 - left;
            Term::app(go(rng, left, depth), go(rng, right, depth))
        }
        5..=6 => {
            let ty = leaf_type(rng);
            Term::lam(ty, go(rng, budget - 2, depth + 1))
        }
        7 => {
            let ty = leaf_type(rng);
            Term::all(ty, go(rng, budget - 2, depth + 1))
        }
        _ => leaf(rng, depth),
    }
}

fn leaf(rng: &mut Rng, depth: u32) -> Term {
    match rng.below(8) {
        0..=2 => Term::sym(*rng.pick(SYMBOLS)),
        3..=4 => Term::Lit(rng.below(3)),
        5 => Term::Eps,
        _ => {
            // Indices reach a little above the depth so open terms occur.
            let index = rng.below(depth as u64 + 3) as u32;
            Term::bvar(index)
        }
    }
}

fn leaf_type(rng: &mut Rng) -> Term {
    if rng.chance(1, 2) {
        Term::sym("_")
    } else {
        Term::sym(*rng.pick(&["Nat", "Bool"]))
    }
}

/// A random pattern for a rule left-hand side: a random term with some
/// leaves replaced by metavariables from a small pool.
pub fn random_pattern(rng: &mut Rng, budget: usize, vars: &[&str]) -> Pattern {
    let t = random_term(rng, budget);
    let mut p = Pattern::from_term(&t);
    punch_holes(rng, &mut p, vars);
    p
}

fn punch_holes(rng: &mut Rng, p: &mut Pattern, vars: &[&str]) {
    if !vars.is_empty() && rng.chance(3, 10) {
        if let Pattern::Sym(_) | Pattern::Lit(_) | Pattern::Bvar { .. } = p {
            *p = Pattern::Var(rng.pick(vars).to_string());
            return;
        }
    }
    match p {
        Pattern::App(f, a) => {
            punch_holes(rng, f, vars);
            punch_holes(rng, a, vars);
        }
        Pattern::Lam(t, b) | Pattern::All(t, b) => {
            punch_holes(rng, t, vars);
            punch_holes(rng, b, vars);
        }
        _ => {}
    }
}

/// A random rule that compiles in every direction it declares: each side
/// of an enabled direction binds the other side's metavariables.
pub fn random_rule(rng: &mut Rng, name: String, budget: usize) -> RuleSpec {
    let vars = ["x", "y"];
    let lhs = random_pattern(rng, budget, &vars);
    let lhs_vars = lhs.metavars();
    let refs: Vec<&str> = lhs_vars.iter().map(String::as_str).collect();
    let rhs = random_pattern(rng, budget, &refs);
    let rhs_vars: std::collections::BTreeSet<String> = rhs.metavars().into_iter().collect();
    let backward_ok = lhs_vars.iter().all(|v| rhs_vars.contains(v));
    let directions = if backward_ok && rng.chance(2, 3) {
        Directions::Both
    } else {
        Directions::Forward
    };
    RuleSpec { name, lhs, rhs, directions }
}

/// A random problem: a handful of rules and a goal whose right side is
/// sometimes reachable (rewritten or equal) and sometimes unrelated.
pub fn random_problem(rng: &mut Rng, max_rules: usize, goal_size: usize) -> ProblemFile {
    let n_rules = 1 + rng.below(max_rules as u64) as usize;
    let rules: Vec<RuleSpec> = (0..n_rules)
        .map(|i| {
            let budget = 2 + rng.below(5) as usize;
            random_rule(rng, format!("r{i}"), budget)
        })
        .collect();
    let lhs = random_term(rng, goal_size);
    let rhs = match rng.below(8) {
        0 => lhs.clone(),
        1..=4 => {
            // Walk the goal through one or two rule applications on plain
            // terms, so a decent share of goals is provable nontrivially.
            let mut cur = lhs.clone();
            let hops = 1 + rng.below(2);
            for _ in 0..hops {
                let mut next = None;
                'rules: for rule in &rules {
                    for pos in cur.positions() {
                        if let Some(t) =
                            crate::pattern::rewrite_at(&cur, &pos, &rule.lhs, &rule.rhs)
                        {
                            next = Some(t);
                            break 'rules;
                        }
                    }
                }
                match next {
                    Some(t) if t.size() <= 2 * goal_size => cur = t,
                    _ => break,
                }
            }
            cur
        }
        _ => random_term(rng, goal_size),
    };
    let config = SaturationConfig { enable_eta: rng.chance(1, 2), ..Default::default() };
    ProblemFile { goal: (lhs, rhs), rules, config }
}

/// Static depths of all metavariables of a pattern (re-exported helper for
/// sweep assertions).
pub fn pattern_depths(p: &Pattern) -> BTreeMap<String, std::collections::BTreeSet<u32>> {
    p.metavar_depths()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let mk = |seed| {
            let mut rng = Rng::new(seed);
            (0..20).map(|_| random_term(&mut rng, 10).to_string()).collect::<Vec<_>>()
        };
        assert_eq!(mk(42), mk(42));
        assert_ne!(mk(42), mk(43));
    }

    #[test]
    fn terms_respect_budget() {
        let mut rng = Rng::new(7);
        for _ in 0..200 {
            let t = random_term(&mut rng, 8);
            assert!(t.size() <= 8);
        }
    }

    #[test]
    fn rules_have_bound_outputs() {
        let mut rng = Rng::new(11);
        for i in 0..100 {
            let r = random_rule(&mut rng, format!("r{i}"), 6);
            let lhs_vars: std::collections::BTreeSet<String> =
                r.lhs.metavars().into_iter().collect();
            for v in r.rhs.metavars() {
                assert!(lhs_vars.contains(&v));
            }
        }
    }
}
