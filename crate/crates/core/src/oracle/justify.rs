//! Justifications: minimal entailing subsets, found with a hitting-set tree
//! over contraction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use super::entail::{entails_rule_with, Entailment};
use super::hyper::HyperLimits;
use crate::model::{Rule, RuleId, TBox};

pub const DEFAULT_JUSTIFICATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JustifyError {
    #[error("TBox has {size} rules, more than the justification limit {limit}")]
    TooLarge { size: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Justifications {
    pub sets: BTreeSet<BTreeSet<RuleId>>,
    /// False when some subset check hit a bound; the sets found still
    /// entail the rule but may not be minimal or complete.
    pub exact: bool,
}

struct Oracle<'a> {
    t: &'a TBox,
    r: &'a Rule,
    limits: HyperLimits,
    cache: BTreeMap<BTreeSet<RuleId>, bool>,
    exact: bool,
}

impl Oracle<'_> {
    fn entails(&mut self, s: &BTreeSet<RuleId>) -> bool {
        if let Some(&v) = self.cache.get(s) {
            return v;
        }
        let v = match entails_rule_with(&self.t.restrict(s), self.r, self.limits) {
            Entailment::Entailed(_) => true,
            Entailment::NotEntailed => false,
            Entailment::Unknown => {
                self.exact = false;
                false
            }
        };
        self.cache.insert(s.clone(), v);
        v
    }

    /// Shrinks an entailing set to a minimal one.
    fn contract(&mut self, s: &BTreeSet<RuleId>) -> BTreeSet<RuleId> {
        let mut s = s.clone();
        for r in s.clone() {
            s.remove(&r);
            if !self.entails(&s) {
                s.insert(r);
            }
        }
        s
    }
}

pub fn enumerate_justifications(t: &TBox, r: &Rule, depth: usize) -> Result<Justifications, JustifyError> {
    enumerate_justifications_with(t, r, HyperLimits::depth(depth), DEFAULT_JUSTIFICATION_LIMIT)
}

pub fn enumerate_justifications_with(
    t: &TBox,
    r: &Rule,
    limits: HyperLimits,
    max_rules: usize,
) -> Result<Justifications, JustifyError> {
    if t.len() > max_rules {
        return Err(JustifyError::TooLarge { size: t.len(), limit: max_rules });
    }
    let mut o = Oracle { t, r, limits, cache: BTreeMap::new(), exact: true };
    let all = t.ids();
    let mut sets: BTreeSet<BTreeSet<RuleId>> = BTreeSet::new();
    if !o.entails(&all) {
        return Ok(Justifications { sets, exact: o.exact });
    }
    // Each node is a set of removed rules.
    let mut queue: VecDeque<BTreeSet<RuleId>> = VecDeque::from([BTreeSet::new()]);
    let mut seen: BTreeSet<BTreeSet<RuleId>> = BTreeSet::new();
    let mut closed: Vec<BTreeSet<RuleId>> = Vec::new();
    while let Some(removed) = queue.pop_front() {
        if !seen.insert(removed.clone()) || closed.iter().any(|c| c.is_subset(&removed)) {
            continue;
        }
        let just = match sets.iter().find(|j| j.is_disjoint(&removed)) {
            Some(j) => j.clone(),
            None => {
                let rest: BTreeSet<RuleId> = all.difference(&removed).copied().collect();
                if !o.entails(&rest) {
                    closed.push(removed);
                    continue;
                }
                let j = o.contract(&rest);
                sets.insert(j.clone());
                j
            }
        };
        for id in just {
            let mut next = removed.clone();
            next.insert(id);
            queue.push_back(next);
        }
    }
    Ok(Justifications { sets, exact: o.exact })
}
