//! Datalog translation, materialisation and support computation.
//!
//! A TBox is turned into a datalog program by replacing existential
//! variables with constants and splitting every head atom into its own rule.
//! The program is materialised over a seed ABox; afterwards every applicable
//! rule instance over the final fact set is recorded so that the support of
//! any fact can be read off the derivation hypergraph by a backward sweep.

mod eval;
mod store;
mod support;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{ABox, Atom, Constant, Fact, Predicate, RuleId, TBox, Term, Variable};

pub use eval::{materialise, Instance, Materialisation, DOMAIN_CONSTANT};
pub use store::FactId;
pub use support::{compute_support, ProofTree, RelevantFacts, SupportResult};

/// Existential variable to constant.
pub type Substitution = BTreeMap<Variable, Constant>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("substitution has no constant for existential variable {0}")]
    MissingBinding(String),
    #[error("constant {0} of the substitution also occurs in the TBox")]
    ConstantClash(String),
}

/// A datalog rule together with the TBox rule it came from.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DatalogRule {
    pub body: Vec<Atom>,
    /// Single head atom; the ⊥ atom for constraints.
    pub head: Atom,
    pub source: RuleId,
    pub disjunct_index: usize,
    pub atom_index: usize,
}

impl fmt::Display for DatalogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.body.is_empty() {
            f.write_str("true")?;
        }
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        if self.head.predicate().is_bottom() {
            write!(f, " -> false")
        } else {
            write!(f, " -> {}", self.head)
        }
    }
}

impl fmt::Debug for DatalogRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}.{}.{}] {}", self.source, self.disjunct_index, self.atom_index, self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatalogProgram {
    pub rules: Vec<DatalogRule>,
    /// Source rule id to the indices of its datalog rules.
    pub xi: BTreeMap<RuleId, Vec<usize>>,
}

impl DatalogProgram {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Datalog program whose rules are the given datalog TBox rules.
    pub fn from_datalog_tbox(t: &TBox) -> Result<Self, EngineError> {
        translate(t, &Substitution::new())
    }
}

/// Translates `t` under `theta`.
///
/// A rule with an empty head yields `body -> ⊥`; otherwise every atom of
/// every disjunct, with existentials replaced by their constants, becomes
/// the head of its own datalog rule.
pub fn translate(t: &TBox, theta: &Substitution) -> Result<DatalogProgram, EngineError> {
    let pool = t.constant_pool();
    if let Some(c) = theta.values().find(|c| pool.contains(*c)) {
        return Err(EngineError::ConstantClash(c.to_string()));
    }
    let mut program = DatalogProgram::default();
    for rule in t.rules() {
        for v in rule.existentials() {
            if !theta.contains_key(v) {
                return Err(EngineError::MissingBinding(v.to_string()));
            }
        }
        let mut images = Vec::new();
        if rule.is_constraint() {
            images.push(program.rules.len());
            program.rules.push(DatalogRule {
                body: rule.body().to_vec(),
                head: Atom::new(Predicate::bottom(), vec![]).expect("nullary"),
                source: rule.id(),
                disjunct_index: 0,
                atom_index: 0,
            });
        }
        for (d, disjunct) in rule.head().iter().enumerate() {
            for (a, atom) in disjunct.iter().enumerate() {
                let head = atom.map_terms(|t| match t {
                    Term::Exist(v) => Term::Const(theta[v].clone()),
                    other => other.clone(),
                });
                images.push(program.rules.len());
                program.rules.push(DatalogRule {
                    body: rule.body().to_vec(),
                    head,
                    source: rule.id(),
                    disjunct_index: d,
                    atom_index: a,
                });
            }
        }
        program.xi.insert(rule.id(), images);
    }
    Ok(program)
}

/// Whether `f` is in the materialisation of `p` over `seed`.
pub fn entails_fact(p: &DatalogProgram, seed: &ABox, f: &Fact) -> bool {
    materialise(p, seed).contains(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_tbox;

    fn theta(pairs: &[(&str, &str)]) -> Substitution {
        pairs.iter().map(|(v, c)| (Variable::new(v), Constant::new(c))).collect()
    }

    #[test]
    fn splits_conjunctive_head() {
        let t = parse_tbox("D(x) -> exists y3 . S(x,y3), E(y3)").unwrap();
        let p = translate(&t, &theta(&[("y3@r1#0", "c")])).unwrap();
        let shown: Vec<_> = p.rules.iter().map(ToString::to_string).collect();
        assert_eq!(shown, vec!["D(x) -> S(x,:c)", "D(x) -> E(:c)"]);
        assert_eq!(p.xi[&RuleId(1)], vec![0, 1]);
    }

    #[test]
    fn constraint_rule() {
        let t = parse_tbox("G(x), H(x) -> false").unwrap();
        let p = translate(&t, &Substitution::new()).unwrap();
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].to_string(), "G(x), H(x) -> false");
    }

    #[test]
    fn missing_binding_and_clash() {
        let t = parse_tbox("A(x) -> exists y . R(x,y)").unwrap();
        assert!(matches!(translate(&t, &Substitution::new()), Err(EngineError::MissingBinding(_))));
        let t = parse_tbox("A(x) -> exists y . R(x,y)\nB(:c) -> A(:c)").unwrap();
        assert!(matches!(translate(&t, &theta(&[("y@r1#0", "c")])), Err(EngineError::ConstantClash(_))));
    }

    #[test]
    fn xi_sizes() {
        let t = parse_tbox("A(x) -> exists y . R(x,y), B(y) | C(x)\nA(x), C(x) -> false").unwrap();
        let p = translate(&t, &theta(&[("y@r1#0", "c")])).unwrap();
        assert_eq!(p.xi[&RuleId(1)].len(), 3);
        assert_eq!(p.xi[&RuleId(2)].len(), 1);
    }
}
