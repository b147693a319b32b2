//! Rule entailment by freezing body variables into fresh constants.

use std::collections::BTreeMap;

use super::cnf::{cnf_skolemize, SkAtom, SkTerm};
use super::hyper::{HyperLimits, HyperProof, Progress, Saturator};
use crate::model::{ABox, Constant, Fact, Rule, TBox, Term, Variable};

/// Cap on existential witness assignments tried per level.
const MAX_WITNESS_TUPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entailment {
    /// One proof per clause of the distributed head instance.
    Entailed(Vec<HyperProof>),
    /// Saturation finished without the head.
    NotEntailed,
    /// A bound was hit first.
    Unknown,
}

impl Entailment {
    pub fn is_entailed(&self) -> bool {
        matches!(self, Entailment::Entailed(_))
    }
}

/// Frozen form of a rule: the body as an ABox plus the constant each
/// universal variable became.
#[derive(Debug, Clone)]
pub struct Frozen {
    pub abox: ABox,
    pub subst: BTreeMap<Variable, SkTerm>,
}

/// Replaces each universal variable of `r` by a constant not in `avoid`.
pub fn freeze(r: &Rule, avoid: &std::collections::BTreeSet<Constant>) -> Frozen {
    let mut subst = BTreeMap::new();
    for v in r.universal_variables() {
        let mut name = format!("@frz:{}", v.name());
        while avoid.contains(&Constant::new(&name)) {
            name.push('\'');
        }
        subst.insert(v, SkTerm::Const(Constant::new(name)));
    }
    let mut abox = ABox::new();
    for a in r.body() {
        let args = a
            .args()
            .iter()
            .map(|t| match t {
                Term::Var(v) | Term::Exist(v) => match &subst[v] {
                    SkTerm::Const(c) => c.clone(),
                    _ => unreachable!(),
                },
                Term::Const(c) => c.clone(),
            })
            .collect();
        abox.insert(Fact::new(a.predicate().clone(), args).expect("arity preserved"));
    }
    Frozen { abox, subst }
}

/// Clauses whose joint entailment is equivalent to the disjunction of
/// conjunctions `disjuncts`.
fn distribute(disjuncts: &[Vec<SkAtom>]) -> Vec<Vec<SkAtom>> {
    let mut out: Vec<Vec<SkAtom>> = vec![Vec::new()];
    for d in disjuncts {
        out = out
            .iter()
            .flat_map(|c| {
                d.iter().map(move |a| {
                    let mut c = c.clone();
                    c.push(a.clone());
                    c
                })
            })
            .collect();
    }
    out
}

fn head_instances(r: &Rule, frozen: &Frozen, terms: &[SkTerm]) -> Option<Vec<Vec<Vec<SkAtom>>>> {
    let ys = r.existentials();
    let count = terms.len().checked_pow(ys.len() as u32)?;
    if count > MAX_WITNESS_TUPLES {
        return None;
    }
    let mut out = Vec::with_capacity(count.max(1));
    for tuple in crate::settings::tuples(terms, ys.len()) {
        let mut s = frozen.subst.clone();
        for (y, t) in ys.iter().zip(tuple) {
            s.insert(y.clone(), t.clone());
        }
        let disjuncts: Vec<Vec<SkAtom>> =
            r.head().iter().map(|d| d.iter().map(|a| SkAtom::from_atom(a).apply(&s)).collect()).collect();
        out.push(distribute(&disjuncts));
    }
    Some(out)
}

/// Decides `t ⊨ r` up to the given bounds.
pub fn entails_rule_with(t: &TBox, r: &Rule, limits: HyperLimits) -> Entailment {
    let mut avoid = t.constant_pool();
    avoid.extend(r.constants().cloned());
    let frozen = freeze(r, &avoid);
    let cnf = cnf_skolemize(t);
    let mut sat = Saturator::new(&cnf, &frozen.abox, limits);
    let mut witnesses_capped = false;
    loop {
        let terms = if r.existentials().is_empty() { Vec::new() } else { sat.terms() };
        match head_instances(r, &frozen, &terms) {
            Some(instances) => {
                for clauses in instances {
                    let found: Option<Vec<usize>> = clauses.iter().map(|c| sat.find_subclause(c)).collect();
                    if let Some(ids) = found {
                        return Entailment::Entailed(ids.into_iter().map(|c| sat.proof(c)).collect());
                    }
                }
            }
            None => witnesses_capped = true,
        }
        if !sat.step() {
            break;
        }
    }
    match sat.progress() {
        Progress::Complete if !witnesses_capped => Entailment::NotEntailed,
        _ => Entailment::Unknown,
    }
}

pub fn entails_rule(t: &TBox, r: &Rule, depth: usize) -> Entailment {
    entails_rule_with(t, r, HyperLimits::depth(depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RuleId;
    use crate::synth::example_tbox;
    use crate::textio::parse_tbox;

    fn rule(text: &str) -> Rule {
        parse_tbox(text).unwrap().rules()[0].clone()
    }

    #[test]
    fn d_implies_g_in_example() {
        let t = example_tbox();
        let Entailment::Entailed(proofs) = entails_rule(&t, &rule("D(x) -> G(x)"), 8) else { panic!() };
        assert_eq!(proofs.len(), 1);
        assert_eq!(proofs[0].rules_used(), [4, 5, 6].map(RuleId).into());
    }

    #[test]
    fn b_does_not_imply_g() {
        let t = example_tbox();
        for depth in [2, 4, 8, 12] {
            assert!(!entails_rule(&t, &rule("B(x) -> G(x)"), depth).is_entailed());
        }
        assert_eq!(entails_rule(&t, &rule("B(x) -> G(x)"), 12), Entailment::NotEntailed);
    }

    #[test]
    fn tautology_at_depth_zero() {
        let Entailment::Entailed(p) = entails_rule(&TBox::empty(), &rule("A(x) -> A(x)"), 0) else { panic!() };
        assert_eq!(p[0].depth(), 0);
    }

    #[test]
    fn existential_heads_use_known_terms() {
        let t = example_tbox();
        assert!(entails_rule(&t, &rule("A(x) -> exists y . R(x,y), B(y)"), 4).is_entailed());
        assert!(entails_rule(&t, &rule("D(x) -> exists y . S(x,y), F(y)"), 4).is_entailed());
        assert!(!entails_rule(&t, &rule("A(x) -> exists y . R(x,y), D(y)"), 6).is_entailed());
    }

    #[test]
    fn constraints_and_conjunctive_heads() {
        let t = parse_tbox("A(x) -> B(x)\nB(x), C(x) -> false").unwrap();
        assert!(entails_rule(&t, &rule("A(x), C(x) -> false"), 4).is_entailed());
        assert!(entails_rule(&t, &rule("A(x) -> A(x), B(x)"), 4).is_entailed());
        assert_eq!(entails_rule(&t, &rule("A(x) -> C(x)"), 4), Entailment::NotEntailed);
    }

    #[test]
    fn nullary_rules_get_a_domain() {
        let t = parse_tbox("TOP(x) -> B").unwrap();
        assert!(entails_rule(&t, &rule("A -> B"), 2).is_entailed());
    }
}
