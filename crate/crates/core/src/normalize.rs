//! TBox normalisation and the equality axiomatisation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Atom, Predicate, Rule, RuleError, RuleId, RuleOrigin, TBox, TBoxError, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    TBox(#[from] TBoxError),
}

/// Base name of a possibly already renamed existential variable.
fn base_name(v: &Variable) -> &str {
    v.name().split('@').next().unwrap_or(v.name())
}

/// Renames existential variables apart as `<base>@r<ruleId>#<index>`.
///
/// Rule ids and everything else are preserved. The renaming only depends on
/// the rule id and the position of the variable in the quantifier block, so
/// normalising twice is the same as normalising once.
pub fn normalize_tbox(raw: TBox) -> Result<TBox, NormalizeError> {
    let mut rules = Vec::with_capacity(raw.len());
    for rule in raw.rules() {
        let rename: BTreeMap<Variable, Variable> = rule
            .existentials()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let fresh = Variable::new(format!("{}@r{}#{}", base_name(v), rule.id(), i));
                (v.clone(), fresh)
            })
            .collect();
        let renamed = rule.rename_existentials(&rename);
        // Re-validate: construction already checked, but renaming must not
        // have broken anything.
        let checked = Rule::with_origin(
            renamed.id(),
            renamed.origin(),
            renamed.body().to_vec(),
            renamed.existentials().to_vec(),
            renamed.head().to_vec(),
        )?;
        rules.push(checked);
    }
    Ok(TBox::new(rules)?)
}

pub fn uses_equality(t: &TBox) -> bool {
    t.signature_ref().contains(&Predicate::equality())
}

fn var_atom(p: &Predicate, vars: &[&str]) -> Atom {
    Atom::new(p.clone(), vars.iter().map(|v| Term::var(v)).collect()).expect("arity matches by construction")
}

/// Appends the standard equality axiomatisation when `EQ` occurs in `t`.
///
/// Added rules get ids above every existing id and are marked with
/// [`RuleOrigin::Equality`]: reflexivity (`TOP(x) -> EQ(x,x)`), symmetry,
/// transitivity, and one replacement rule per argument position of each
/// non-reserved predicate. A TBox that is already expanded is returned as is.
pub fn expand_equality(t: &TBox) -> TBox {
    if !uses_equality(t) || t.rules().iter().any(|r| r.origin() == RuleOrigin::Equality) {
        return t.clone();
    }
    let eq = Predicate::equality();
    let mut next = t.rules().iter().map(|r| r.id().0).max().unwrap_or(0) + 1;
    let mut rules = t.rules().to_vec();
    let mut push = |body: Vec<Atom>, head: Atom| {
        let rule = Rule::with_origin(RuleId(next), RuleOrigin::Equality, body, vec![], vec![vec![head]])
            .expect("equality axioms are safe");
        rules.push(rule);
        next += 1;
    };

    push(vec![var_atom(&Predicate::top(), &["x"])], var_atom(&eq, &["x", "x"]));
    push(vec![var_atom(&eq, &["x", "y"])], var_atom(&eq, &["y", "x"]));
    push(vec![var_atom(&eq, &["x", "y"]), var_atom(&eq, &["y", "z"])], var_atom(&eq, &["x", "z"]));
    for p in t.signature().symbols() {
        let vars: Vec<String> = (0..p.arity()).map(|i| format!("x{i}")).collect();
        for pos in 0..p.arity() {
            let body_vars: Vec<&str> = vars.iter().map(String::as_str).collect();
            let mut head_vars = body_vars.clone();
            head_vars[pos] = "z";
            push(vec![var_atom(p, &body_vars), var_atom(&eq, &[body_vars[pos], "z"])], var_atom(p, &head_vars));
        }
    }
    TBox::from_rules_unchecked(rules)
}
