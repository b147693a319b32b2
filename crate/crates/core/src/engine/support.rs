//! Backward support computation over the derivation hypergraph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use super::eval::Materialisation;
use super::store::FactId;
use super::DatalogProgram;
use crate::model::{ABox, Atom, Constant, Fact, Term, Variable};

/// A set of relevant facts that can be matched against a materialisation
/// without being enumerated up front.
pub trait RelevantFacts {
    /// Ids of the materialised facts that are relevant, in ascending order.
    fn relevant_ids(&self, m: &Materialisation) -> Vec<FactId>;
}

impl RelevantFacts for ABox {
    fn relevant_ids(&self, m: &Materialisation) -> Vec<FactId> {
        let mut ids: Vec<FactId> = self.iter().filter_map(|f| m.fact_id(f)).collect();
        ids.sort_unstable();
        ids
    }
}

#[derive(Debug, Clone, Default)]
pub struct SupportResult {
    /// Indices of supporting datalog rules.
    pub rules: BTreeSet<usize>,
    /// Relevant facts present in the materialisation.
    pub reached: BTreeSet<Fact>,
    /// For every fact, the instance through which it was reached; `ROOT`
    /// for relevant roots and `UNSEEN` for unmarked facts.
    parent: Vec<u32>,
    /// First instance found for each rule, or `UNSEEN`.
    first: Vec<u32>,
}

const UNSEEN: u32 = u32::MAX;
const ROOT: u32 = u32::MAX - 1;

/// Marks relevant facts, then walks instances backwards from marked heads.
pub fn compute_support(m: &Materialisation, relevant: &dyn RelevantFacts) -> SupportResult {
    let mut parent = vec![UNSEEN; m.len()];
    let mut first = vec![UNSEEN; m.rule_count()];
    let mut reached = BTreeSet::new();
    let mut queue = VecDeque::new();
    for id in relevant.relevant_ids(m) {
        if parent[id as usize] == UNSEEN {
            parent[id as usize] = ROOT;
            reached.insert(m.fact(id));
            queue.push_back(id);
        }
    }
    while let Some(f) = queue.pop_front() {
        for &idx in m.instance_ids_for(f) {
            let inst = &m.instances()[idx as usize];
            if first[inst.rule] == UNSEEN {
                first[inst.rule] = idx;
            }
            for &b in m.body(inst) {
                if parent[b as usize] == UNSEEN {
                    parent[b as usize] = idx;
                    queue.push_back(b);
                }
            }
        }
    }
    let rules = (0..first.len()).filter(|&r| first[r] != UNSEEN).collect();
    SupportResult { rules, reached, parent, first }
}

impl SupportResult {
    /// A proof of some relevant fact that uses datalog rule `rule`, or `None`
    /// if the rule is not in the support.
    pub fn witness_proof(&self, m: &Materialisation, rule: usize) -> Option<ProofTree> {
        let target = *self.first.get(rule).filter(|&&i| i != UNSEEN)?;
        // Walk from the target instance back up to a relevant root.
        let mut path = vec![target];
        let mut fact = m.instances()[target as usize].head;
        while let Some(&inst) = self.parent.get(fact as usize).filter(|&&i| i != ROOT && i != UNSEEN) {
            path.push(inst);
            fact = m.instances()[inst as usize].head;
        }
        path.reverse();
        Some(build_along(m, &path))
    }
}

/// Proof whose spine follows `path` (outermost instance first); facts off
/// the spine get well-founded proofs.
fn build_along(m: &Materialisation, path: &[u32]) -> ProofTree {
    let inst = &m.instances()[path[0] as usize];
    let next_head = path.get(1).map(|&i| m.instances()[i as usize].head);
    let mut used_spine = false;
    let children = m
        .body(inst)
        .iter()
        .map(|&b| {
            if !used_spine && Some(b) == next_head {
                used_spine = true;
                build_along(m, &path[1..])
            } else {
                m.proof(b)
            }
        })
        .collect();
    ProofTree { fact: m.fact(inst.head), rule: Some(inst.rule), children }
}

/// Forward-chaining proof: every inner node is obtained from its children by
/// one application of the datalog rule with index `rule`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub fact: Fact,
    pub rule: Option<usize>,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn rules_used(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.extend(n.rule);
            stack.extend(&n.children);
        }
        out
    }

    /// Replays the proof: leaves must be seed facts (or `TOP` facts) and each
    /// inner node must be an instance of its rule over its children.
    pub fn check(&self, p: &DatalogProgram, seed: &ABox) -> bool {
        match self.rule {
            None => self.children.is_empty() && (seed.contains(&self.fact) || self.fact.predicate().is_top()),
            Some(ri) => {
                let Some(rule) = p.rules.get(ri) else {
                    return false;
                };
                if rule.body.len() != self.children.len() {
                    return false;
                }
                let mut binding = BTreeMap::new();
                let matched = rule.body.iter().zip(&self.children).all(|(a, c)| match_atom(a, &c.fact, &mut binding))
                    && match_atom(&rule.head, &self.fact, &mut binding);
                matched && self.children.iter().all(|c| c.check(p, seed))
            }
        }
    }

    /// Indented text rendering, one fact per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        let _ = match self.rule {
            Some(r) => writeln!(out, "{:indent$}{} [{}]", "", self.fact, r),
            None => writeln!(out, "{:indent$}{}", "", self.fact),
        };
        for c in &self.children {
            c.render_into(out, indent + 2);
        }
    }
}

fn match_atom(a: &Atom, f: &Fact, binding: &mut BTreeMap<Variable, Constant>) -> bool {
    if a.predicate() != f.predicate() {
        return false;
    }
    a.args().iter().zip(f.args()).all(|(t, c)| match t {
        Term::Const(k) => k == c,
        Term::Var(v) | Term::Exist(v) => match binding.get(v) {
            Some(b) => b == c,
            None => {
                binding.insert(v.clone(), c.clone());
                true
            }
        },
    })
}
