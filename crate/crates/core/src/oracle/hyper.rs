//! Bounded ground hyperresolution over Skolemised clauses.
//!
//! Clauses are sets of interned ground atoms. Saturation proceeds in levels:
//! level 0 holds the ABox and the ⊤ axioms, and level d+1 holds every
//! resolvent that uses at least one premise of level d and is not subsumed
//! by a clause already kept. The empty clause never subsumes anything, so
//! saturation keeps deriving facts after an inconsistency. As in the engine,
//! a stand-in constant keeps the domain non-empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::cnf::{fmt_clause, CnfRule, SkAtom, SkTerm};
use crate::engine::DOMAIN_CONSTANT;
use crate::model::{ABox, Constant, Predicate, RuleId, Variable};

/// Default cap on kept clauses before a saturation gives up.
pub const DEFAULT_MAX_CLAUSES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperLimits {
    /// Largest proof depth explored.
    pub depth: usize,
    pub max_clauses: usize,
}

impl HyperLimits {
    pub fn depth(depth: usize) -> Self {
        HyperLimits { depth, max_clauses: DEFAULT_MAX_CLAUSES }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum TermNode {
    Const(Constant),
    App(Arc<str>, Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Term(u32),
}

#[derive(Debug, Clone)]
enum HeadTerm {
    Var(usize),
    Term(u32),
    App(Arc<str>, Vec<HeadTerm>),
}

#[derive(Debug, Clone)]
struct Compiled {
    body: Vec<(u32, Vec<Slot>)>,
    head: Vec<(u32, Vec<HeadTerm>)>,
    nvars: usize,
}

#[derive(Debug, Clone)]
enum Origin {
    Abox,
    Top,
    Derived { rule: u32, premises: Vec<(u32, u32)> },
}

#[derive(Debug, Clone)]
struct Clause {
    atoms: Vec<u32>,
    depth: u32,
    origin: Origin,
}

/// State of where a saturation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    /// The last level added nothing: every derivable clause is present up to
    /// subsumption.
    Complete,
    /// More levels could add clauses.
    Open,
    /// The clause cap was hit.
    Exhausted,
}

/// A premise: clause id and the position of the atom resolved away.
type Premise = (u32, u32);

/// Receives a full binding and its premises; returns false to stop.
type Emit<'a> = dyn FnMut(&[Option<u32>], &[Premise]) -> bool + 'a;

/// Incremental saturation of `cnf ∪ abox`.
pub struct Saturator<'a> {
    cnf: &'a [CnfRule],
    rules: Vec<Compiled>,
    limits: HyperLimits,
    terms: Vec<TermNode>,
    term_ids: FxHashMap<TermNode, u32>,
    preds: Vec<Predicate>,
    pred_ids: FxHashMap<Predicate, u32>,
    atoms: Vec<(u32, Vec<u32>)>,
    atom_ids: FxHashMap<(u32, Vec<u32>), u32>,
    clauses: Vec<Clause>,
    by_pred: Vec<Vec<(u32, u32)>>,
    by_first: FxHashMap<u32, Vec<u32>>,
    empty: Option<u32>,
    top: u32,
    top_done: usize,
    /// Clause id where each level starts.
    levels: Vec<usize>,
    progress: Progress,
}

impl<'a> Saturator<'a> {
    pub fn new(cnf: &'a [CnfRule], abox: &ABox, limits: HyperLimits) -> Self {
        let mut s = Saturator {
            cnf,
            rules: Vec::new(),
            limits,
            terms: Vec::new(),
            term_ids: FxHashMap::default(),
            preds: Vec::new(),
            pred_ids: FxHashMap::default(),
            atoms: Vec::new(),
            atom_ids: FxHashMap::default(),
            clauses: Vec::new(),
            by_pred: Vec::new(),
            by_first: FxHashMap::default(),
            empty: None,
            top: 0,
            top_done: 0,
            levels: vec![0],
            progress: Progress::Open,
        };
        s.top = s.pred(&Predicate::top());
        let rules: Vec<Compiled> = cnf.iter().map(|r| s.compile(r)).collect();
        s.rules = rules;
        for f in abox {
            let p = s.pred(f.predicate());
            let args = f.args().iter().map(|c| s.constant(c)).collect();
            let a = s.atom(p, args);
            s.add(vec![a], 0, Origin::Abox);
        }
        if s.terms.is_empty() {
            s.constant(&Constant::new(DOMAIN_CONSTANT));
        }
        s.add_top_axioms(0);
        s
    }

    fn pred(&mut self, p: &Predicate) -> u32 {
        if let Some(&id) = self.pred_ids.get(p) {
            return id;
        }
        let id = self.preds.len() as u32;
        self.preds.push(p.clone());
        self.pred_ids.insert(p.clone(), id);
        self.by_pred.push(Vec::new());
        id
    }

    fn term(&mut self, node: TermNode) -> u32 {
        if let Some(&id) = self.term_ids.get(&node) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(node.clone());
        self.term_ids.insert(node, id);
        id
    }

    fn constant(&mut self, c: &Constant) -> u32 {
        self.term(TermNode::Const(c.clone()))
    }

    fn atom(&mut self, p: u32, args: Vec<u32>) -> u32 {
        let key = (p, args);
        if let Some(&id) = self.atom_ids.get(&key) {
            return id;
        }
        let id = self.atoms.len() as u32;
        self.atoms.push(key.clone());
        self.atom_ids.insert(key, id);
        id
    }

    fn compile(&mut self, r: &CnfRule) -> Compiled {
        let mut vars: BTreeMap<Variable, usize> = BTreeMap::new();
        let mut body = Vec::new();
        for a in &r.body {
            let p = self.pred(&a.predicate);
            let slots = a
                .args
                .iter()
                .map(|t| match t {
                    SkTerm::Var(v) => {
                        let n = vars.len();
                        Slot::Var(*vars.entry(v.clone()).or_insert(n))
                    }
                    SkTerm::Const(c) => Slot::Term(self.constant(c)),
                    SkTerm::App(..) => unreachable!("function terms never occur in bodies"),
                })
                .collect();
            body.push((p, slots));
        }
        let head = r
            .head
            .iter()
            .map(|a| {
                let p = self.pred(&a.predicate);
                let args = a.args.iter().map(|t| self.head_term(t, &vars)).collect();
                (p, args)
            })
            .collect();
        Compiled { body, head, nvars: vars.len() }
    }

    fn head_term(&mut self, t: &SkTerm, vars: &BTreeMap<Variable, usize>) -> HeadTerm {
        match t {
            SkTerm::Var(v) => HeadTerm::Var(vars[v]),
            SkTerm::Const(c) => HeadTerm::Term(self.constant(c)),
            SkTerm::App(f, args) => HeadTerm::App(f.clone(), args.iter().map(|a| self.head_term(a, vars)).collect()),
        }
    }

    fn subsumed(&self, atoms: &[u32]) -> bool {
        atoms.iter().any(|a| {
            self.by_first.get(a).is_some_and(|cs| {
                cs.iter().any(|&c| self.clauses[c as usize].atoms.iter().all(|x| atoms.binary_search(x).is_ok()))
            })
        })
    }

    /// Keeps `atoms` unless an existing clause subsumes it.
    fn add(&mut self, mut atoms: Vec<u32>, depth: u32, origin: Origin) -> bool {
        atoms.sort_unstable();
        atoms.dedup();
        if atoms.is_empty() {
            if self.empty.is_some() {
                return false;
            }
            self.empty = Some(self.clauses.len() as u32);
        } else if self.subsumed(&atoms) {
            return false;
        }
        let id = self.clauses.len() as u32;
        for (pos, &a) in atoms.iter().enumerate() {
            let p = self.atoms[a as usize].0;
            self.by_pred[p as usize].push((id, pos as u32));
        }
        if let Some(&first) = atoms.first() {
            self.by_first.entry(first).or_default().push(id);
        }
        self.clauses.push(Clause { atoms, depth, origin });
        true
    }

    fn add_top_axioms(&mut self, depth: u32) {
        while self.top_done < self.terms.len() {
            let t = self.top_done as u32;
            self.top_done += 1;
            let a = self.atom(self.top, vec![t]);
            self.add(vec![a], depth, Origin::Top);
        }
    }

    fn build(&mut self, t: &HeadTerm, binds: &[u32]) -> u32 {
        match t {
            HeadTerm::Var(v) => binds[*v],
            HeadTerm::Term(id) => *id,
            HeadTerm::App(f, args) => {
                let args = args.iter().map(|a| self.build(a, binds)).collect();
                self.term(TermNode::App(f.clone(), args))
            }
        }
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    /// Number of levels computed after level 0.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    /// Computes one more level. Returns false once the saturation is
    /// complete, exhausted or at its depth limit.
    pub fn step(&mut self) -> bool {
        if self.progress != Progress::Open || self.depth() >= self.limits.depth {
            return false;
        }
        let lo = *self.levels.last().expect("level 0");
        let hi = self.clauses.len();
        let depth = self.depth() as u32 + 1;
        let mut found: Vec<(u32, Vec<Premise>, Vec<u32>)> = Vec::new();
        // Premise combinations are bounded as well as kept clauses.
        let budget = self.limits.max_clauses.saturating_mul(4);
        for (ri, rule) in self.rules.iter().enumerate() {
            let k = rule.body.len();
            if k == 0 {
                if depth == 1 {
                    found.push((ri as u32, Vec::new(), Vec::new()));
                }
                continue;
            }
            for fresh in 0..k {
                let mut binds = vec![None; rule.nvars];
                let mut chosen = Vec::with_capacity(k);
                let _ = self.join(rule, 0, fresh, lo, hi, &mut binds, &mut chosen, &mut |binds, chosen| {
                    if found.len() > budget {
                        return false;
                    }
                    let b: Vec<u32> = binds.iter().map(|b| b.expect("safe rule")).collect();
                    found.push((ri as u32, chosen.to_vec(), b));
                    true
                });
            }
        }
        if found.len() > budget {
            self.progress = Progress::Exhausted;
            return false;
        }
        let mut added = false;
        for (ri, premises, binds) in found {
            let rule = self.rules[ri as usize].clone();
            let mut atoms = Vec::new();
            for (p, args) in &rule.head {
                let args = args.iter().map(|t| self.build(t, &binds)).collect();
                atoms.push(self.atom(*p, args));
            }
            for &(c, pos) in &premises {
                let clause = &self.clauses[c as usize];
                atoms.extend(clause.atoms.iter().enumerate().filter(|&(i, _)| i != pos as usize).map(|(_, &a)| a));
            }
            added |= self.add(atoms, depth, Origin::Derived { rule: ri, premises });
            if self.clauses.len() > self.limits.max_clauses {
                self.progress = Progress::Exhausted;
                return false;
            }
        }
        let before = self.clauses.len();
        self.add_top_axioms(depth);
        added |= self.clauses.len() > before;
        self.levels.push(hi);
        if !added {
            self.progress = Progress::Complete;
        }
        added
    }

    /// Enumerates premise choices for body atoms `i..`; position `fresh`
    /// draws from the newest level `[lo, hi)`, earlier positions from
    /// `[0, lo)` and later ones from `[0, hi)`.
    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        rule: &Compiled,
        i: usize,
        fresh: usize,
        lo: usize,
        hi: usize,
        binds: &mut Vec<Option<u32>>,
        chosen: &mut Vec<Premise>,
        emit: &mut Emit<'_>,
    ) -> bool {
        if i == rule.body.len() {
            return emit(binds, chosen);
        }
        let (p, slots) = &rule.body[i];
        let list = &self.by_pred[*p as usize];
        let (from, to) = match i.cmp(&fresh) {
            std::cmp::Ordering::Less => (0, lo),
            std::cmp::Ordering::Equal => (lo, hi),
            std::cmp::Ordering::Greater => (0, hi),
        };
        let start = list.partition_point(|&(c, _)| (c as usize) < from);
        let end = list.partition_point(|&(c, _)| (c as usize) < to);
        for &(c, pos) in &list[start..end] {
            let atom = self.clauses[c as usize].atoms[pos as usize];
            let args = &self.atoms[atom as usize].1;
            let mut bound = Vec::new();
            let mut ok = true;
            for (slot, &t) in slots.iter().zip(args) {
                match *slot {
                    Slot::Term(x) => ok = x == t,
                    Slot::Var(v) => match binds[v] {
                        Some(x) => ok = x == t,
                        None => {
                            binds[v] = Some(t);
                            bound.push(v);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                chosen.push((c, pos));
                ok = self.join(rule, i + 1, fresh, lo, hi, binds, chosen, emit);
                chosen.pop();
            } else {
                ok = true;
            }
            for v in bound {
                binds[v] = None;
            }
            if !ok {
                return false;
            }
        }
        true
    }

    /// Runs levels until complete, exhausted or at the depth limit.
    pub fn run(&mut self) -> Progress {
        while self.step() {}
        self.progress
    }

    fn lookup_term(&self, t: &SkTerm) -> Option<u32> {
        let node = match t {
            SkTerm::Var(_) => return None,
            SkTerm::Const(c) => TermNode::Const(c.clone()),
            SkTerm::App(f, args) => {
                TermNode::App(f.clone(), args.iter().map(|a| self.lookup_term(a)).collect::<Option<_>>()?)
            }
        };
        self.term_ids.get(&node).copied()
    }

    fn lookup_atom(&self, a: &SkAtom) -> Option<u32> {
        let p = *self.pred_ids.get(&a.predicate)?;
        let args = a.args.iter().map(|t| self.lookup_term(t)).collect::<Option<Vec<_>>>()?;
        self.atom_ids.get(&(p, args)).copied()
    }

    /// A kept clause contained in the ground disjunction `goal`.
    pub fn find_subclause(&self, goal: &[SkAtom]) -> Option<usize> {
        if let Some(e) = self.empty {
            return Some(e as usize);
        }
        let mut ids: Vec<u32> = goal.iter().filter_map(|a| self.lookup_atom(a)).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.iter().find_map(|a| {
            self.by_first.get(a).and_then(|cs| {
                cs.iter()
                    .find(|&&c| self.clauses[c as usize].atoms.iter().all(|x| ids.binary_search(x).is_ok()))
                    .map(|&c| c as usize)
            })
        })
    }

    pub fn is_inconsistent(&self) -> bool {
        self.empty.is_some()
    }

    fn sk_term(&self, t: u32) -> SkTerm {
        match &self.terms[t as usize] {
            TermNode::Const(c) => SkTerm::Const(c.clone()),
            TermNode::App(f, args) => SkTerm::App(f.clone(), args.iter().map(|&a| self.sk_term(a)).collect()),
        }
    }

    fn sk_atom(&self, a: u32) -> SkAtom {
        let (p, args) = &self.atoms[a as usize];
        SkAtom { predicate: self.preds[*p as usize].clone(), args: args.iter().map(|&t| self.sk_term(t)).collect() }
    }

    pub fn clause(&self, id: usize) -> Vec<SkAtom> {
        self.clauses[id].atoms.iter().map(|&a| self.sk_atom(a)).collect()
    }

    /// All known ground terms.
    pub fn terms(&self) -> Vec<SkTerm> {
        (0..self.terms.len() as u32).map(|t| self.sk_term(t)).collect()
    }

    /// Unit clauses whose arguments are all constants.
    pub fn unit_facts(&self) -> BTreeSet<crate::model::Fact> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            if let [a] = c.atoms[..] {
                let (p, args) = &self.atoms[a as usize];
                let consts: Option<Vec<Constant>> = args
                    .iter()
                    .map(|&t| match &self.terms[t as usize] {
                        TermNode::Const(c) => Some(c.clone()),
                        TermNode::App(..) => None,
                    })
                    .collect();
                if let Some(consts) = consts {
                    out.insert(crate::model::Fact::new(self.preds[*p as usize].clone(), consts).expect("arity"));
                }
            }
        }
        out
    }

    /// Proof tree of a kept clause.
    pub fn proof(&self, id: usize) -> HyperProof {
        let c = &self.clauses[id];
        let clause = self.clause(id);
        match &c.origin {
            Origin::Abox => HyperProof { clause, step: ProofStep::Abox, children: Vec::new() },
            Origin::Top => HyperProof { clause, step: ProofStep::Top, children: Vec::new() },
            Origin::Derived { rule, premises } => HyperProof {
                clause,
                step: ProofStep::Rule {
                    index: *rule as usize,
                    label: self.cnf[*rule as usize].label(),
                    source: self.cnf[*rule as usize].source,
                    selected: premises.iter().map(|&(_, pos)| pos as usize).collect(),
                },
                children: premises.iter().map(|&(c, _)| self.proof(c as usize)).collect(),
            },
        }
    }

    /// Depth at which clause `id` was kept.
    pub fn clause_depth(&self, id: usize) -> usize {
        self.clauses[id].depth as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofStep {
    Abox,
    Top,
    /// Hyperresolution with CNF rule `index`; `selected[i]` is the position
    /// in child `i` of the atom resolved against body atom `i`.
    Rule {
        index: usize,
        label: String,
        source: RuleId,
        selected: Vec<usize>,
    },
}

/// A hyperresolution proof of a ground clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperProof {
    pub clause: Vec<SkAtom>,
    pub step: ProofStep,
    pub children: Vec<HyperProof>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("leaf {0} is neither an ABox fact nor a TOP axiom")]
    BadLeaf(String),
    #[error("rule index {0} out of range")]
    NoRule(usize),
    #[error("step {label}: {reason}")]
    BadStep { label: String, reason: String },
}

fn match_term(pattern: &SkTerm, t: &SkTerm, s: &mut BTreeMap<Variable, SkTerm>) -> bool {
    match (pattern, t) {
        (SkTerm::Var(v), _) => match s.get(v) {
            Some(x) => x == t,
            None => {
                s.insert(v.clone(), t.clone());
                true
            }
        },
        (SkTerm::Const(a), SkTerm::Const(b)) => a == b,
        (SkTerm::App(f, xs), SkTerm::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, s))
        }
        _ => false,
    }
}

impl HyperProof {
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Source rules used anywhere in the proof.
    pub fn rules_used(&self) -> BTreeSet<RuleId> {
        let mut out = BTreeSet::new();
        self.collect_rules(&mut out);
        out
    }

    fn collect_rules(&self, out: &mut BTreeSet<RuleId>) {
        if let ProofStep::Rule { source, .. } = &self.step {
            out.insert(*source);
        }
        for c in &self.children {
            c.collect_rules(out);
        }
    }

    /// Checks every step. Internal nodes must equal the hyperresolvent of
    /// their rule and children under the matcher of the selected atoms,
    /// which is the MGU since premises are ground.
    pub fn verify(&self, cnf: &[CnfRule], abox: &ABox) -> Result<(), ReplayError> {
        match &self.step {
            ProofStep::Abox => {
                let ok = match &self.clause[..] {
                    [a] => abox.iter().any(|f| SkAtom::from_atom(&f.to_atom()) == *a),
                    _ => false,
                };
                if !ok {
                    return Err(ReplayError::BadLeaf(fmt_clause(&self.clause)));
                }
            }
            ProofStep::Top => {
                let ok = matches!(&self.clause[..], [a] if a.predicate.is_top() && a.is_ground());
                if !ok {
                    return Err(ReplayError::BadLeaf(fmt_clause(&self.clause)));
                }
            }
            ProofStep::Rule { index, label, selected, .. } => {
                let rule = cnf.get(*index).ok_or(ReplayError::NoRule(*index))?;
                let bad = |reason: &str| ReplayError::BadStep { label: label.clone(), reason: reason.to_string() };
                if rule.body.len() != self.children.len() || selected.len() != self.children.len() {
                    return Err(bad("premise count differs from body size"));
                }
                let mut mgu = BTreeMap::new();
                let mut resolvent: BTreeSet<SkAtom> = BTreeSet::new();
                for ((beta, child), &sel) in rule.body.iter().zip(&self.children).zip(selected) {
                    let lit = child.clause.get(sel).ok_or_else(|| bad("selected atom out of range"))?;
                    if beta.predicate != lit.predicate
                        || !beta.args.iter().zip(&lit.args).all(|(p, t)| match_term(p, t, &mut mgu))
                    {
                        return Err(bad(&format!("{beta} does not unify with {lit}")));
                    }
                    resolvent
                        .extend(child.clause.iter().enumerate().filter(|&(i, _)| i != sel).map(|(_, a)| a.clone()));
                }
                for a in &rule.head {
                    let a = a.apply(&mgu);
                    if !a.is_ground() {
                        return Err(bad("head instance is not ground"));
                    }
                    resolvent.insert(a);
                }
                let own: BTreeSet<SkAtom> = self.clause.iter().cloned().collect();
                if own != resolvent {
                    return Err(bad(&format!("expected {}", fmt_clause(&resolvent.into_iter().collect::<Vec<_>>()))));
                }
                for c in &self.children {
                    c.verify(cnf, abox)?;
                }
            }
        }
        Ok(())
    }

    /// Indented text tree, one clause per line with its step label.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, indent: usize, out: &mut String) {
        let tag = match &self.step {
            ProofStep::Abox => String::new(),
            ProofStep::Top => " [top]".to_string(),
            ProofStep::Rule { label, .. } => format!(" [{label}]"),
        };
        let _ = writeln!(out, "{:indent$}{}{tag}", "", fmt_clause(&self.clause));
        for c in &self.children {
            c.render_into(indent + 2, out);
        }
    }
}

/// Result of [`hyperresolve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HyperOutcome {
    Proved(HyperProof),
    /// Saturation finished without reaching the goal.
    Refuted,
    /// The depth or clause bound was hit first.
    Unknown,
}

/// Searches for a proof of a subclause of the ground disjunction `goal`.
pub fn hyperresolve(cnf: &[CnfRule], abox: &ABox, goal: &[SkAtom], depth: usize) -> HyperOutcome {
    hyperresolve_with(cnf, abox, goal, HyperLimits::depth(depth))
}

pub fn hyperresolve_with(cnf: &[CnfRule], abox: &ABox, goal: &[SkAtom], limits: HyperLimits) -> HyperOutcome {
    let mut s = Saturator::new(cnf, abox, limits);
    loop {
        if let Some(c) = s.find_subclause(goal) {
            return HyperOutcome::Proved(s.proof(c));
        }
        if !s.step() {
            break;
        }
    }
    match s.progress() {
        Progress::Complete => HyperOutcome::Refuted,
        Progress::Open | Progress::Exhausted => HyperOutcome::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fact;
    use crate::oracle::cnf::cnf_skolemize;
    use crate::synth::example_tbox;
    use crate::textio::parse_tbox;

    fn goal(name: &str, args: &[&str]) -> Vec<SkAtom> {
        vec![SkAtom::from_atom(&Fact::of(name, args).to_atom())]
    }

    #[test]
    fn example_proof_of_g() {
        let cnf = cnf_skolemize(&example_tbox());
        let abox: ABox = [Fact::of("D", &["a"])].into();
        let HyperOutcome::Proved(p) = hyperresolve(&cnf, &abox, &goal("G", &["a"]), 4) else {
            panic!("G(a) should be derivable")
        };
        p.verify(&cnf, &abox).unwrap();
        assert_eq!(p.depth(), 3);
        assert_eq!(p.rules_used(), [4, 5, 6].map(RuleId).into());
        assert_eq!(
            p.render(),
            "\
G(:a) [6.0]
  S(:a,f4_y3(:a)) [4.0]
    D(:a)
  E(f4_y3(:a)) [4.1]
    D(:a)
  F(f4_y3(:a)) [5.0]
    D(:a)
    S(:a,f4_y3(:a)) [4.0]
      D(:a)
"
        );
    }

    #[test]
    fn leaf_proof_at_depth_zero() {
        let abox: ABox = [Fact::of("B", &["*"])].into();
        let HyperOutcome::Proved(p) = hyperresolve(&[], &abox, &goal("B", &["*"]), 0) else { panic!() };
        assert_eq!(p.step, ProofStep::Abox);
        p.verify(&[], &abox).unwrap();
    }

    #[test]
    fn saturation_refutes() {
        let cnf = cnf_skolemize(&example_tbox());
        let abox: ABox = [Fact::of("B", &["a"])].into();
        assert_eq!(hyperresolve(&cnf, &abox, &goal("G", &["a"]), 8), HyperOutcome::Refuted);
    }

    #[test]
    fn infinite_chain_is_unknown() {
        let t = parse_tbox("A(x) -> exists y . R(x,y), A(y)").unwrap();
        let cnf = cnf_skolemize(&t);
        let abox: ABox = [Fact::of("A", &["a"])].into();
        assert_eq!(hyperresolve(&cnf, &abox, &goal("B", &["a"]), 6), HyperOutcome::Unknown);
    }

    #[test]
    fn disjunctive_reasoning_by_cases() {
        let t = parse_tbox("A(x) -> B(x) | C(x)\nB(x) -> D(x)\nC(x) -> D(x)").unwrap();
        let cnf = cnf_skolemize(&t);
        let abox: ABox = [Fact::of("A", &["a"])].into();
        let HyperOutcome::Proved(p) = hyperresolve(&cnf, &abox, &goal("D", &["a"]), 4) else { panic!() };
        p.verify(&cnf, &abox).unwrap();
        assert_eq!(p.clause, goal("D", &["a"]));
        // B(a) alone is not entailed.
        assert_eq!(hyperresolve(&cnf, &abox, &goal("B", &["a"]), 6), HyperOutcome::Refuted);
    }

    #[test]
    fn top_axioms_feed_top_bodies() {
        let t = parse_tbox("TOP(x) -> B(x)").unwrap();
        let cnf = cnf_skolemize(&t);
        let abox: ABox = [Fact::of("A", &["a"])].into();
        let HyperOutcome::Proved(p) = hyperresolve(&cnf, &abox, &goal("B", &["a"]), 2) else { panic!() };
        assert_eq!(p.children[0].step, ProofStep::Top);
        p.verify(&cnf, &abox).unwrap();
    }

    #[test]
    fn tampered_proofs_fail_replay() {
        let cnf = cnf_skolemize(&example_tbox());
        let abox: ABox = [Fact::of("D", &["a"])].into();
        let HyperOutcome::Proved(mut p) = hyperresolve(&cnf, &abox, &goal("G", &["a"]), 4) else { panic!() };
        p.clause = goal("G", &["b"]);
        assert!(p.verify(&cnf, &abox).is_err());
        let HyperOutcome::Proved(mut p) = hyperresolve(&cnf, &abox, &goal("G", &["a"]), 4) else { panic!() };
        p.children[0].children[0].clause = goal("D", &["b"]);
        assert!(p.verify(&cnf, &abox).is_err());
    }

    #[test]
    fn inconsistency_proves_any_goal() {
        let t = parse_tbox("A(x) -> false").unwrap();
        let cnf = cnf_skolemize(&t);
        let abox: ABox = [Fact::of("A", &["a"])].into();
        let HyperOutcome::Proved(p) = hyperresolve(&cnf, &abox, &goal("Z", &["q"]), 2) else { panic!() };
        assert!(p.clause.is_empty());
    }
}
