//! Skolemised clausal form of a TBox.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::model::{Atom, Constant, Predicate, Rule, RuleId, TBox, Term, Variable};

/// A term of the Skolemised language.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SkTerm {
    Var(Variable),
    Const(Constant),
    App(Arc<str>, Vec<SkTerm>),
}

impl SkTerm {
    pub fn is_ground(&self) -> bool {
        match self {
            SkTerm::Var(_) => false,
            SkTerm::Const(_) => true,
            SkTerm::App(_, args) => args.iter().all(SkTerm::is_ground),
        }
    }

    /// Substitutes variables bound in `s`; unbound ones stay.
    pub fn apply(&self, s: &BTreeMap<Variable, SkTerm>) -> SkTerm {
        match self {
            SkTerm::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            SkTerm::Const(_) => self.clone(),
            SkTerm::App(f, args) => SkTerm::App(f.clone(), args.iter().map(|a| a.apply(s)).collect()),
        }
    }
}

impl fmt::Display for SkTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkTerm::Var(v) => write!(f, "{v}"),
            SkTerm::Const(c) => write!(f, "{c}"),
            SkTerm::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SkAtom {
    pub predicate: Predicate,
    pub args: Vec<SkTerm>,
}

impl SkAtom {
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(SkTerm::is_ground)
    }

    pub fn apply(&self, s: &BTreeMap<Variable, SkTerm>) -> SkAtom {
        SkAtom { predicate: self.predicate.clone(), args: self.args.iter().map(|a| a.apply(s)).collect() }
    }

    /// A function-free atom; existential variables must already be replaced.
    pub fn from_atom(a: &Atom) -> SkAtom {
        let args = a
            .args()
            .iter()
            .map(|t| match t {
                Term::Var(v) | Term::Exist(v) => SkTerm::Var(v.clone()),
                Term::Const(c) => SkTerm::Const(c.clone()),
            })
            .collect();
        SkAtom { predicate: a.predicate().clone(), args }
    }
}

impl fmt::Display for SkAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate.name())?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Writes a disjunction of atoms; the empty one is `false`.
pub fn fmt_clause(atoms: &[SkAtom]) -> String {
    if atoms.is_empty() {
        return "false".to_string();
    }
    atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")
}

/// `body -> head` with a disjunctive, possibly Skolemised head.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CnfRule {
    pub body: Vec<SkAtom>,
    /// Disjunction; empty means ⊥.
    pub head: Vec<SkAtom>,
    pub source: RuleId,
    /// Position among the clauses of the same source rule.
    pub part: usize,
}

impl CnfRule {
    pub fn label(&self) -> String {
        format!("{}.{}", self.source, self.part)
    }
}

impl fmt::Display for CnfRule {
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
        write!(f, " -> {}", fmt_clause(&self.head))
    }
}

/// Name of the Skolem function for existential `y` of rule `id`. Any
/// normalisation suffix on `y` is dropped; the rule id keeps it unique.
pub fn skolem_name(id: RuleId, y: &Variable) -> String {
    let base = y.name().split('@').next().unwrap_or(y.name());
    format!("f{}_{base}", id.0)
}

/// Skolemises one rule and distributes its disjunction over conjunctions.
pub fn cnf_rule(r: &Rule) -> Vec<CnfRule> {
    let universals: Vec<SkTerm> = r.universal_variables().into_iter().map(SkTerm::Var).collect();
    let mut sk = BTreeMap::new();
    for y in r.existentials() {
        sk.insert(y.clone(), SkTerm::App(Arc::from(skolem_name(r.id(), y)), universals.clone()));
    }
    let body: Vec<SkAtom> = r.body().iter().map(SkAtom::from_atom).collect();
    let disjuncts: Vec<Vec<SkAtom>> =
        r.head().iter().map(|d| d.iter().map(|a| SkAtom::from_atom(a).apply(&sk)).collect()).collect();

    // One clause per choice of an atom from every disjunct.
    let mut clauses: Vec<Vec<SkAtom>> = vec![Vec::new()];
    for d in &disjuncts {
        let mut next = Vec::with_capacity(clauses.len() * d.len());
        for c in &clauses {
            for a in d {
                let mut c = c.clone();
                if !c.contains(a) {
                    c.push(a.clone());
                }
                next.push(c);
            }
        }
        clauses = next;
    }
    let mut seen = Vec::new();
    clauses.retain(|c| {
        let mut key = c.clone();
        key.sort();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    clauses
        .into_iter()
        .enumerate()
        .map(|(part, head)| CnfRule { body: body.clone(), head, source: r.id(), part })
        .collect()
}

pub fn cnf_skolemize(t: &TBox) -> Vec<CnfRule> {
    t.rules().iter().flat_map(cnf_rule).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::example_tbox;
    use crate::textio::parse_tbox;

    fn lines(t: &TBox) -> Vec<String> {
        cnf_skolemize(t).iter().map(ToString::to_string).collect()
    }

    #[test]
    fn existential_conjunction_splits() {
        let t = example_tbox();
        let cnf: Vec<String> = cnf_rule(&t.rules()[3]).iter().map(ToString::to_string).collect();
        assert_eq!(cnf, ["D(x) -> S(x,f4_y3(x))", "D(x) -> E(f4_y3(x))"]);
        let datalog = cnf_rule(&t.rules()[2]);
        assert_eq!(datalog.len(), 1);
        assert_eq!(datalog[0].to_string(), "B(x), C(x) -> D(x)");
    }

    #[test]
    fn disjunction_with_existential() {
        let t = parse_tbox("A(x) -> exists y . B(x) | C(y)").unwrap();
        assert_eq!(lines(&t), ["A(x) -> B(x) | C(f1_y(x))"]);
    }

    #[test]
    fn distribution_over_conjunctions() {
        let t = parse_tbox("A(x) -> B(x), C(x) | D(x)\nA(x), E(x) -> false").unwrap();
        assert_eq!(lines(&t), ["A(x) -> B(x) | D(x)", "A(x) -> C(x) | D(x)", "A(x), E(x) -> false"]);
    }

    #[test]
    fn skolem_names_are_per_variable() {
        let t = example_tbox();
        let mut names = std::collections::BTreeSet::new();
        for r in t.rules() {
            for y in r.existentials() {
                assert!(names.insert(skolem_name(r.id(), y)));
            }
        }
        assert_eq!(names.len(), 3);
    }
}
