//! Syntactic locality modules on the rule normal form.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Predicate, Rule, RuleId, SignatureSet, TBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocalityKind {
    Bottom,
    Top,
    TopBottomStar,
}

impl LocalityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LocalityKind::Bottom => "loc-bot",
            LocalityKind::Top => "loc-top",
            LocalityKind::TopBottomStar => "loc-tbstar",
        }
    }
}

impl fmt::Display for LocalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown locality kind `{0}`")]
pub struct UnknownLocalityKind(pub String);

impl FromStr for LocalityKind {
    type Err = UnknownLocalityKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [LocalityKind::Bottom, LocalityKind::Top, LocalityKind::TopBottomStar]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownLocalityKind(s.to_string()))
    }
}

fn inside(p: &Predicate, sigbar: &SignatureSet) -> bool {
    p.is_top() || p.is_equality() || sigbar.contains(p)
}

/// Locality of a single rule. `TopBottomStar` is not a per-rule notion and
/// is treated as `Bottom`.
pub fn is_local(r: &Rule, sigbar: &SignatureSet, kind: LocalityKind) -> bool {
    match kind {
        LocalityKind::Bottom | LocalityKind::TopBottomStar => r.body().iter().any(|a| !inside(a.predicate(), sigbar)),
        LocalityKind::Top => r.head().iter().any(|d| d.iter().all(|a| !inside(a.predicate(), sigbar))),
    }
}

/// Grows the module from Σ until no rule outside it is non-local.
///
/// Every rule keeps a count of what still makes it local: for ⊥ the distinct
/// body predicates outside the signature, for ⊤ the head disjuncts lying
/// entirely outside it.
fn fixpoint(rules: &[&Rule], sigma: &SignatureSet, top: bool) -> BTreeSet<RuleId> {
    let mut sigbar = sigma.clone();
    // Predicate to the (rule, disjunct) slots waiting on it.
    let mut waiting: HashMap<Predicate, Vec<(usize, usize)>> = HashMap::new();
    let mut counts: Vec<usize> = vec![0; rules.len()];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); rules.len()];
    for (i, r) in rules.iter().enumerate() {
        if top {
            pending[i] = vec![0; r.head().len()];
            for (d, disjunct) in r.head().iter().enumerate() {
                if disjunct.iter().all(|a| !inside(a.predicate(), &sigbar)) {
                    counts[i] += 1;
                    pending[i][d] = 1;
                    let preds: BTreeSet<&Predicate> = disjunct.iter().map(|a| a.predicate()).collect();
                    for p in preds {
                        waiting.entry(p.clone()).or_default().push((i, d));
                    }
                }
            }
        } else {
            let outside: BTreeSet<&Predicate> =
                r.body().iter().map(|a| a.predicate()).filter(|p| !inside(p, &sigbar)).collect();
            counts[i] = outside.len();
            for p in outside {
                waiting.entry(p.clone()).or_default().push((i, 0));
            }
        }
    }

    let mut module = BTreeSet::new();
    let mut queue: Vec<usize> = (0..rules.len()).filter(|&i| counts[i] == 0).collect();
    let mut added = vec![false; rules.len()];
    while let Some(i) = queue.pop() {
        if added[i] {
            continue;
        }
        added[i] = true;
        module.insert(rules[i].id());
        for p in rules[i].signature().iter() {
            if inside(p, &sigbar) {
                continue;
            }
            sigbar.insert(p.clone());
            for (j, d) in waiting.remove(p).unwrap_or_default() {
                if top {
                    // A disjunct stops being outside once any atom enters.
                    if pending[j][d] == 0 {
                        continue;
                    }
                    pending[j][d] = 0;
                }
                counts[j] -= 1;
                if counts[j] == 0 && !added[j] {
                    queue.push(j);
                }
            }
        }
    }
    module
}

/// Locality-based module of `t` for `sigma`.
pub fn extract_locality_module(t: &TBox, sigma: &SignatureSet, kind: LocalityKind) -> BTreeSet<RuleId> {
    let all: Vec<&Rule> = t.rules().iter().collect();
    match kind {
        LocalityKind::Bottom => fixpoint(&all, sigma, false),
        LocalityKind::Top => fixpoint(&all, sigma, true),
        LocalityKind::TopBottomStar => {
            let mut current: BTreeSet<RuleId> = t.ids();
            loop {
                let rules: Vec<&Rule> = all.iter().copied().filter(|r| current.contains(&r.id())).collect();
                let bot = fixpoint(&rules, sigma, false);
                let rules: Vec<&Rule> = rules.into_iter().filter(|r| bot.contains(&r.id())).collect();
                let next = fixpoint(&rules, sigma, true);
                if next == current {
                    return current;
                }
                current = next;
            }
        }
    }
}
