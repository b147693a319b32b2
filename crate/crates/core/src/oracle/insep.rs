//! Brute-force inseparability checks between a TBox and a subset of it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use super::cnf::cnf_skolemize;
use super::entail::{entails_rule_with, Entailment};
use super::hyper::{HyperLimits, Progress, Saturator};
use super::models::{ground, satisfiable, Lit};
use crate::model::{ABox, Atom, Constant, Fact, Predicate, Rule, RuleId, SignatureSet, TBox, Term};
use crate::settings::tuples;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsepRelation {
    /// Σ-implications A(x̄) → B(x̄) and A(x̄) → ⊥ with A, B in Σ.
    Implication,
    /// As implication, with B ranging over the whole signature of the TBox.
    Classification,
    /// Σ-datalog rules.
    Fact,
    /// Σ-reducts of models.
    Model,
}

impl InsepRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            InsepRelation::Implication => "i",
            InsepRelation::Classification => "c",
            InsepRelation::Fact => "f",
            InsepRelation::Model => "m",
        }
    }
}

impl fmt::Display for InsepRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown inseparability relation `{0}` (expected i, c, f or m)")]
pub struct UnknownRelation(pub String);

impl FromStr for InsepRelation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "i" => Ok(InsepRelation::Implication),
            "c" => Ok(InsepRelation::Classification),
            "f" => Ok(InsepRelation::Fact),
            "m" => Ok(InsepRelation::Model),
            _ => Err(UnknownRelation(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Hyperresolution depth.
    pub depth: usize,
    pub max_clauses: usize,
    /// Body atoms of the enumerated datalog rules.
    pub body_size: usize,
    /// Variable pool for those bodies; defaults to max arity times body size.
    pub pool: Option<usize>,
    pub max_bodies: usize,
    /// Largest domain for model checks.
    pub domain: usize,
    pub max_predicates: usize,
    /// Cap on Σ-interpretations tried per domain size.
    pub max_interpretations: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            depth: 8,
            max_clauses: 5_000,
            body_size: 3,
            pool: None,
            max_bodies: 200_000,
            domain: 2,
            max_predicates: 16,
            max_interpretations: 1 << 16,
        }
    }
}

impl Bounds {
    pub(crate) fn hyper(&self) -> HyperLimits {
        HyperLimits { depth: self.depth, max_clauses: self.max_clauses }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A Σ-consequence of the TBox that the subset misses. Not definitive
    /// when the subset's search hit a bound before refuting it.
    Counterexample {
        witness: String,
        definitive: bool,
    },
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Counterexample { witness, definitive: true } => write!(f, "counterexample: {witness}"),
            Verdict::Counterexample { witness, definitive: false } => {
                write!(f, "counterexample (at bound): {witness}")
            }
            Verdict::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

/// First definitive counterexample, else the first bounded one, else pass.
pub(crate) fn combine(results: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut weak = None;
    for v in results {
        match v {
            Verdict::Counterexample { definitive: true, .. } | Verdict::Inconclusive(_) => return v,
            Verdict::Counterexample { .. } => {
                weak.get_or_insert(v);
            }
            Verdict::Pass => {}
        }
    }
    weak.unwrap_or(Verdict::Pass)
}

fn is_subset(m: &TBox, t: &TBox) -> bool {
    m.rules().iter().all(|r| t.get(r.id()) == Some(r))
}

fn plain(sigma: &SignatureSet) -> Vec<Predicate> {
    sigma.symbols().cloned().collect()
}

pub fn check_inseparability(t: &TBox, m: &TBox, sigma: &SignatureSet, rel: InsepRelation, bounds: &Bounds) -> Verdict {
    match rel {
        InsepRelation::Implication => check_implications(t, m, &plain(sigma), &plain(sigma), bounds),
        InsepRelation::Classification => {
            let mut heads = plain(sigma);
            for p in t.signature().symbols() {
                if !heads.contains(p) {
                    heads.push(p.clone());
                }
            }
            check_implications(t, m, &plain(sigma), &heads, bounds)
        }
        InsepRelation::Fact => check_facts(t, m, sigma, bounds),
        InsepRelation::Model => check_models(t, m, sigma, bounds),
    }
}

/// Compares one rule; a miss needs `t` to prove it and `m` not to.
fn compare_rule(t: &TBox, m: &TBox, r: &Rule, limits: HyperLimits) -> Verdict {
    if !entails_rule_with(t, r, limits).is_entailed() {
        return Verdict::Pass;
    }
    match entails_rule_with(m, r, limits) {
        Entailment::Entailed(_) => Verdict::Pass,
        Entailment::NotEntailed => Verdict::Counterexample { witness: r.to_string(), definitive: true },
        Entailment::Unknown => Verdict::Counterexample { witness: r.to_string(), definitive: false },
    }
}

pub(crate) fn implication(a: &Predicate, b: Option<&Predicate>) -> Rule {
    let xs: Vec<Term> = (1..=a.arity()).map(|i| Term::var(&format!("x{i}"))).collect();
    let body = vec![Atom::new(a.clone(), xs.clone()).expect("arity")];
    let head = match b {
        Some(b) => vec![vec![Atom::new(b.clone(), xs).expect("same arity")]],
        None => Vec::new(),
    };
    Rule::new(RuleId(0), body, Vec::new(), head).expect("safe implication")
}

fn check_implications(t: &TBox, m: &TBox, lhs: &[Predicate], rhs: &[Predicate], bounds: &Bounds) -> Verdict {
    let mut rules = Vec::new();
    for a in lhs {
        for b in rhs {
            if a != b && a.arity() == b.arity() {
                rules.push(implication(a, Some(b)));
            }
        }
        rules.push(implication(a, None));
    }
    let limits = bounds.hyper();
    combine(rules.par_iter().map(|r| compare_rule(t, m, r, limits)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Arg {
    Var(usize),
    Const(usize),
}

type Body = Vec<(usize, Vec<Arg>)>;

/// Bodies of at most `k` atoms, the empty one included, atoms ordered by predicate index and
/// variables numbered by first occurrence, deduplicated up to renaming.
fn bodies(preds: &[Predicate], nconsts: usize, k: usize, pool: usize, cap: usize) -> Option<Vec<Body>> {
    fn args_of(
        arity: usize,
        next: usize,
        pool: usize,
        nconsts: usize,
        cur: &mut Vec<Arg>,
        out: &mut Vec<(Vec<Arg>, usize)>,
    ) {
        if cur.len() == arity {
            out.push((cur.clone(), next));
            return;
        }
        for v in 0..=next.min(pool.saturating_sub(1)) {
            if v == next && next >= pool {
                break;
            }
            cur.push(Arg::Var(v));
            args_of(arity, next.max(v + 1), pool, nconsts, cur, out);
            cur.pop();
        }
        for c in 0..nconsts {
            cur.push(Arg::Const(c));
            args_of(arity, next, pool, nconsts, cur, out);
            cur.pop();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        preds: &[Predicate],
        nconsts: usize,
        k: usize,
        pool: usize,
        from: usize,
        next: usize,
        cur: &mut Body,
        out: &mut Vec<Body>,
        seen: &mut HashSet<Body>,
        cap: usize,
    ) -> bool {
        if !cur.is_empty() {
            let key = canonical(cur, next);
            if seen.insert(key) {
                out.push(cur.clone());
                if out.len() > cap {
                    return false;
                }
            }
        }
        if cur.len() == k {
            return true;
        }
        for p in from..preds.len() {
            let mut choices = Vec::new();
            args_of(preds[p].arity(), next, pool, nconsts, &mut Vec::new(), &mut choices);
            for (args, n) in choices {
                if cur.iter().any(|(q, a)| *q == p && *a == args) {
                    continue;
                }
                cur.push((p, args));
                let ok = grow(preds, nconsts, k, pool, p, n, cur, out, seen, cap);
                cur.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    let mut out = vec![Vec::new()];
    let mut seen = HashSet::new();
    if grow(preds, nconsts, k, pool, 0, 0, &mut Vec::new(), &mut out, &mut seen, cap) {
        Some(out)
    } else {
        None
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Least sorted renaming of `body` over its `nvars` variables.
fn canonical(body: &Body, nvars: usize) -> Body {
    let mut best: Option<Body> = None;
    for perm in permutations(nvars) {
        let mut b: Body = body
            .iter()
            .map(|(p, args)| {
                let args = args
                    .iter()
                    .map(|a| match a {
                        Arg::Var(v) => Arg::Var(perm[*v]),
                        c => *c,
                    })
                    .collect();
                (*p, args)
            })
            .collect();
        b.sort();
        if best.as_ref().is_none_or(|x| b < *x) {
            best = Some(b);
        }
    }
    best.unwrap_or_default()
}

/// Σ-facts over body terms entailed by a saturation, or `None` when
/// inconsistent.
fn sigma_facts(s: &Saturator<'_>, sigma: &SignatureSet, terms: &BTreeSet<Constant>) -> Option<BTreeSet<Fact>> {
    if s.is_inconsistent() {
        return None;
    }
    Some(
        s.unit_facts()
            .into_iter()
            .filter(|f| sigma.contains(f.predicate()) && f.args().iter().all(|c| terms.contains(c)))
            .collect(),
    )
}

fn check_facts(t: &TBox, m: &TBox, sigma: &SignatureSet, bounds: &Bounds) -> Verdict {
    if is_subset(t, m) {
        return Verdict::Pass;
    }
    let preds = plain(sigma);
    let mut consts: Vec<Constant> = t.constant_pool().into_iter().collect();
    for c in m.constant_pool() {
        if !consts.contains(&c) {
            consts.push(c);
        }
    }
    let max_arity = preds.iter().map(Predicate::arity).max().unwrap_or(0).max(1);
    let pool = bounds.pool.unwrap_or(max_arity * bounds.body_size);
    let Some(mut bodies) = bodies(&preds, consts.len(), bounds.body_size, pool, bounds.max_bodies) else {
        return Verdict::Inconclusive(format!("more than {} candidate rule bodies", bounds.max_bodies));
    };
    // Smallest witnesses first.
    bodies.sort_by_key(Vec::len);
    let taken: BTreeSet<Constant> = consts.iter().cloned().collect();
    let vars: Vec<Constant> = (0..pool)
        .map(|i| {
            let mut name = format!("@v{i}");
            while taken.contains(&Constant::new(&name)) {
                name.push('\'');
            }
            Constant::new(name)
        })
        .collect();
    let cnf_t = cnf_skolemize(t);
    let cnf_m = cnf_skolemize(m);
    let limits = bounds.hyper();
    let results: Vec<Verdict> = bodies
        .par_iter()
        .map(|body| {
            let mut abox = ABox::new();
            for (p, args) in body {
                let args = args
                    .iter()
                    .map(|a| match *a {
                        Arg::Var(v) => vars[v].clone(),
                        Arg::Const(c) => consts[c].clone(),
                    })
                    .collect();
                abox.insert(Fact::new(preds[*p].clone(), args).expect("arity"));
            }
            let mut terms: BTreeSet<Constant> = abox.iter().flat_map(|f| f.args().iter().cloned()).collect();
            terms.extend(consts.iter().cloned());
            let mut st = Saturator::new(&cnf_t, &abox, limits);
            st.run();
            let ft = sigma_facts(&st, sigma, &terms);
            if ft.as_ref().is_some_and(|f| f.is_subset(&abox)) {
                return Verdict::Pass;
            }
            let mut sm = Saturator::new(&cnf_m, &abox, limits);
            let definitive = sm.run() == Progress::Complete;
            let Some(fm) = sigma_facts(&sm, sigma, &terms) else { return Verdict::Pass };
            let missing = match &ft {
                None => Some("false".to_string()),
                Some(ft) => ft.difference(&fm).next().map(ToString::to_string),
            };
            match missing {
                None => Verdict::Pass,
                Some(head) => {
                    let body: Vec<String> = abox.iter().map(ToString::to_string).collect();
                    let body = if body.is_empty() { "true".to_string() } else { body.join(", ") };
                    Verdict::Counterexample { witness: format!("{body} -> {head}"), definitive }
                }
            }
        })
        .collect();
    combine(results)
}

fn extendable(t: &TBox, n: usize, consts: &[Constant], fixed: &BTreeMap<(Predicate, Vec<usize>), bool>) -> bool {
    let domain: Vec<usize> = (0..n).collect();
    let found = tuples(&domain, consts.len()).any(|assign| {
        let cmap: BTreeMap<String, usize> = consts.iter().map(|c| c.name().to_string()).zip(assign).collect();
        let g = ground(t, n, &cmap);
        let mut clauses = g.clauses.clone();
        for (a, &v) in &g.atoms {
            if let Some(&b) = fixed.get(a) {
                let l = v as Lit + 1;
                clauses.push(vec![if b { l } else { -l }]);
            }
        }
        satisfiable(g.nvars, &clauses)
    });
    found
}

fn check_models(t: &TBox, m: &TBox, sigma: &SignatureSet, bounds: &Bounds) -> Verdict {
    let mut sig = t.signature();
    sig.extend(m.signature().iter().cloned());
    let symbols = sig.symbols().count();
    if symbols > bounds.max_predicates {
        return Verdict::Inconclusive(format!("{symbols} predicates exceed the limit {}", bounds.max_predicates));
    }
    if bounds.domain > 2 {
        return Verdict::Inconclusive(format!("domain size {} exceeds 2", bounds.domain));
    }
    let preds: Vec<Predicate> = sig.symbols().filter(|p| sigma.contains(p)).cloned().collect();
    let mut consts: Vec<Constant> = t.constant_pool().into_iter().collect();
    for c in m.constant_pool() {
        if !consts.contains(&c) {
            consts.push(c);
        }
    }
    let m_in_t = is_subset(m, t);
    let t_in_m = is_subset(t, m);
    for n in 1..=bounds.domain {
        let domain: Vec<usize> = (0..n).collect();
        let atoms: Vec<(Predicate, Vec<usize>)> =
            preds.iter().flat_map(|p| tuples(&domain, p.arity()).map(move |args| (p.clone(), args))).collect();
        if atoms.len() >= usize::BITS as usize || (1usize << atoms.len()) > bounds.max_interpretations {
            return Verdict::Inconclusive(format!("{} Σ-atoms over a domain of size {n}", atoms.len()));
        }
        for bits in 0..(1usize << atoms.len()) {
            let fixed: BTreeMap<(Predicate, Vec<usize>), bool> =
                atoms.iter().enumerate().map(|(i, a)| (a.clone(), bits >> i & 1 == 1)).collect();
            let ext_t = extendable(t, n, &consts, &fixed);
            let ext_m = if (ext_t && m_in_t) || (!ext_t && t_in_m) { ext_t } else { extendable(m, n, &consts, &fixed) };
            if ext_t != ext_m {
                let shown: Vec<String> = preds
                    .iter()
                    .map(|p| {
                        let ext: Vec<String> = atoms
                            .iter()
                            .filter(|(q, args)| q == p && fixed[&(q.clone(), args.clone())])
                            .map(|(_, args)| {
                                format!("({})", args.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
                            })
                            .collect();
                        format!("{}={{{}}}", p.name(), ext.join(","))
                    })
                    .collect();
                let side = if ext_m { "subset" } else { "TBox" };
                return Verdict::Counterexample {
                    witness: format!("domain {n}, {} extends only for the {side}", shown.join(" ")),
                    definitive: true,
                };
            }
        }
    }
    Verdict::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{extract, ExtractOptions};
    use crate::settings::SettingKind;
    use crate::synth::example_tbox;
    use crate::textio::{parse_signature, parse_tbox};

    fn module(t: &TBox, sigma: &SignatureSet, kind: SettingKind) -> TBox {
        extract(t, sigma, kind.into(), &ExtractOptions::default()).unwrap().module
    }

    fn q() -> SignatureSet {
        parse_signature("Q/1").unwrap()
    }

    #[test]
    fn fact_but_not_query_fixture() {
        let t = parse_tbox("TOP(x) -> exists y . R(x,y), Q(y)").unwrap();
        let v = check_inseparability(&t, &TBox::empty(), &q(), InsepRelation::Fact, &Bounds::default());
        assert_eq!(v, Verdict::Pass);
    }

    #[test]
    fn implication_but_not_fact_fixture() {
        let t = parse_tbox("Q(:a), Q(:b) -> Q(:c)").unwrap();
        let b = Bounds::default();
        assert_eq!(check_inseparability(&t, &TBox::empty(), &q(), InsepRelation::Implication, &b), Verdict::Pass);
        let v = check_inseparability(&t, &TBox::empty(), &q(), InsepRelation::Fact, &b);
        let Verdict::Counterexample { witness, definitive: true } = v else { panic!("{v:?}") };
        assert_eq!(witness, "Q(:a), Q(:b) -> Q(:c)");
    }

    #[test]
    fn query_but_not_model_fixture() {
        let t = parse_tbox("TOP(x) -> exists y . R(x,y), A(y)\nTOP(x) -> exists y . R(x,y), B(y)\nA(x), B(x) -> Q(x)")
            .unwrap();
        let b = Bounds { domain: 1, ..Bounds::default() };
        let v = check_inseparability(&t, &TBox::empty(), &q(), InsepRelation::Model, &b);
        let Verdict::Counterexample { witness, .. } = v else { panic!("{v:?}") };
        assert_eq!(witness, "domain 1, Q={} extends only for the subset");
        assert_eq!(check_inseparability(&t, &TBox::empty(), &q(), InsepRelation::Fact, &b), Verdict::Pass);
    }

    #[test]
    fn example_modules_pass() {
        let t = example_tbox();
        let sigma = parse_signature("B/1 C/1 D/1 G/1").unwrap();
        let b = Bounds { body_size: 2, ..Bounds::default() };
        for (kind, rel) in [
            (SettingKind::I, InsepRelation::Implication),
            (SettingKind::F, InsepRelation::Fact),
            (SettingKind::C, InsepRelation::Classification),
        ] {
            let m = module(&t, &sigma, kind);
            assert_eq!(check_inseparability(&t, &m, &sigma, rel, &b), Verdict::Pass, "{kind}");
        }
        // Dropping α6 loses D -> G.
        let m = t.restrict(&[4, 5].map(RuleId).into());
        let v = check_inseparability(&t, &m, &sigma, InsepRelation::Implication, &b);
        assert_eq!(v, Verdict::Counterexample { witness: "D(x1) -> G(x1)".into(), definitive: true });
    }

    #[test]
    fn model_check_of_example() {
        let t = parse_tbox("A(x) -> B(x)\nB(x) -> C(x)\nD(x) -> E(x)").unwrap();
        let sigma = parse_signature("A/1 C/1").unwrap();
        let m = module(&t, &sigma, SettingKind::M);
        assert_eq!(check_inseparability(&t, &m, &sigma, InsepRelation::Model, &Bounds::default()), Verdict::Pass);
        let v = check_inseparability(&t, &TBox::empty(), &sigma, InsepRelation::Model, &Bounds::default());
        assert!(matches!(v, Verdict::Counterexample { .. }));
    }

    #[test]
    fn empty_body_and_empty_domain() {
        let t = parse_tbox("B -> B\nTOP(x) -> B").unwrap();
        let sigma = parse_signature("B/0").unwrap();
        let m = t.restrict(&[RuleId(1)].into());
        let b = Bounds::default();
        let v = check_inseparability(&t, &m, &sigma, InsepRelation::Fact, &b);
        assert_eq!(v, Verdict::Counterexample { witness: "true -> B".into(), definitive: true });
        assert!(!check_inseparability(&t, &m, &sigma, InsepRelation::Model, &b).is_pass());
        for (kind, rel) in [(SettingKind::F, InsepRelation::Fact), (SettingKind::M, InsepRelation::Model)] {
            assert_eq!(check_inseparability(&t, &module(&t, &sigma, kind), &sigma, rel, &b), Verdict::Pass);
        }
    }

    #[test]
    fn canonical_bodies_are_unique_up_to_renaming() {
        let preds = vec![Predicate::new("R", 2)];
        let bs = bodies(&preds, 0, 2, 4, 1000).unwrap();
        // R(0,0); R(0,1); and two-atom bodies up to renaming.
        assert!(bs.contains(&vec![(0, vec![Arg::Var(0), Arg::Var(0)])]));
        assert!(bs.contains(&Vec::new()));
        let keys: HashSet<Body> = bs
            .iter()
            .map(|b| {
                let n = b.iter().flat_map(|(_, a)| a).filter_map(|a| match a {
                    Arg::Var(v) => Some(*v + 1),
                    _ => None,
                });
                canonical(b, n.max().unwrap_or(0))
            })
            .collect();
        assert_eq!(keys.len(), bs.len());
    }
}
