//! Predicates, terms, atoms, rules, TBoxes, signatures, facts and ABoxes.
//!
//! A rule has the shape `body -> exists ys . (conj_1 | ... | conj_n)`, with an
//! empty disjunct list standing for the falsehood head. Values are immutable
//! once built and can be shared freely between threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// Name of the reserved nullary falsehood predicate.
pub const BOTTOM: &str = "BOT";
/// Name of the reserved unary truth predicate.
pub const TOP: &str = "TOP";
/// Name of the reserved binary equality predicate.
pub const EQUALITY: &str = "EQ";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    name: Arc<str>,
    arity: usize,
}

impl Predicate {
    pub fn new(name: impl AsRef<str>, arity: usize) -> Self {
        Predicate { name: Arc::from(name.as_ref()), arity }
    }

    pub fn bottom() -> Self {
        Predicate::new(BOTTOM, 0)
    }

    pub fn top() -> Self {
        Predicate::new(TOP, 1)
    }

    pub fn equality() -> Self {
        Predicate::new(EQUALITY, 2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_bottom(&self) -> bool {
        &*self.name == BOTTOM && self.arity == 0
    }

    pub fn is_top(&self) -> bool {
        &*self.name == TOP && self.arity == 1
    }

    pub fn is_equality(&self) -> bool {
        &*self.name == EQUALITY && self.arity == 2
    }

    /// True for the logical symbols ⊥, ⊤ and equality.
    pub fn is_reserved(&self) -> bool {
        self.is_bottom() || self.is_top() || self.is_equality()
    }

    /// True when the name is reserved but the arity is not the reserved one.
    pub(crate) fn misuses_reserved_name(&self) -> bool {
        matches!(&*self.name, BOTTOM | TOP | EQUALITY) && !self.is_reserved()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(Arc<str>);

impl Constant {
    pub fn new(name: impl AsRef<str>) -> Self {
        Constant(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ":{}", self.0)
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ":{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: impl AsRef<str>) -> Self {
        Variable(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    /// Universally quantified variable.
    Var(Variable),
    /// Existentially quantified variable; only legal in rule heads.
    Exist(Variable),
    Const(Constant),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Variable::new(name))
    }

    pub fn exist(name: &str) -> Self {
        Term::Exist(Variable::new(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(Constant::new(name))
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Exist(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("predicate {name} has arity {arity} but was given {given} arguments")]
    ArityMismatch { name: String, arity: usize, given: usize },
    #[error("predicate name {0} is reserved for a different arity")]
    ReservedName(String),
    #[error("fact {0} contains a variable")]
    NonGroundFact(String),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    predicate: Predicate,
    args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Result<Self, ModelError> {
        if predicate.arity() != args.len() {
            return Err(ModelError::ArityMismatch {
                name: predicate.name().to_string(),
                arity: predicate.arity(),
                given: args.len(),
            });
        }
        if predicate.misuses_reserved_name() {
            return Err(ModelError::ReservedName(predicate.name().to_string()));
        }
        Ok(Atom { predicate, args })
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            _ => None,
        })
    }

    pub fn existentials(&self) -> impl Iterator<Item = &Variable> {
        self.args.iter().filter_map(|t| match t {
            Term::Exist(v) => Some(v),
            _ => None,
        })
    }

    pub fn constants(&self) -> impl Iterator<Item = &Constant> {
        self.args.iter().filter_map(Term::as_const)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn to_fact(&self) -> Result<Fact, ModelError> {
        let args = self
            .args
            .iter()
            .map(|t| t.as_const().cloned())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ModelError::NonGroundFact(self.to_string()))?;
        Ok(Fact { predicate: self.predicate.clone(), args })
    }

    pub(crate) fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().map(&mut f).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write_list(f, &self.args)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    f.write_str("(")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    f.write_str(")")
}

/// A ground atom.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    predicate: Predicate,
    args: Vec<Constant>,
}

impl Fact {
    pub fn new(predicate: Predicate, args: Vec<Constant>) -> Result<Self, ModelError> {
        if predicate.arity() != args.len() {
            return Err(ModelError::ArityMismatch {
                name: predicate.name().to_string(),
                arity: predicate.arity(),
                given: args.len(),
            });
        }
        Ok(Fact { predicate, args })
    }

    /// Builds a fact from names, e.g. `Fact::of("R", &["a", "b"])`.
    pub fn of(name: &str, args: &[&str]) -> Self {
        Fact { predicate: Predicate::new(name, args.len()), args: args.iter().map(Constant::new).collect() }
    }

    pub fn bottom() -> Self {
        Fact { predicate: Predicate::bottom(), args: Vec::new() }
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn args(&self) -> &[Constant] {
        &self.args
    }

    pub fn to_atom(&self) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().cloned().map(Term::Const).collect() }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write_list(f, &self.args)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub type ABox = BTreeSet<Fact>;

/// Positional rule identifier; user rules are numbered from 1 in input order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RuleId(pub usize);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where a rule came from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum RuleOrigin {
    #[default]
    User,
    /// Part of the equality axiomatisation added by
    /// [`expand_equality`](crate::normalize::expand_equality).
    Equality,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule {0}: unsafe, head variable {1} does not occur in the body")]
    Unsafe(RuleId, String),
    #[error("rule {0}: BOT occurs in the body")]
    BottomInBody(RuleId),
    #[error("rule {0}: BOT may only appear as the whole head `false`")]
    BottomInHead(RuleId),
    #[error("rule {0}: TOP occurs in the head")]
    TopInHead(RuleId),
    #[error("rule {0}: existential variable {1} occurs in the body")]
    ExistentialInBody(RuleId, String),
    #[error("rule {0}: existential variable {1} is not declared")]
    UndeclaredExistential(RuleId, String),
    #[error("rule {0}: existential variable {1} does not occur in the head")]
    UnusedExistential(RuleId, String),
    #[error("rule {0}: existential variable {1} is declared twice")]
    DuplicateExistential(RuleId, String),
    #[error("rule {0}: empty conjunction in the head")]
    EmptyDisjunct(RuleId),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    id: RuleId,
    origin: RuleOrigin,
    body: Vec<Atom>,
    existentials: Vec<Variable>,
    head: Vec<Vec<Atom>>,
}

impl Rule {
    /// Builds and validates a user rule. Duplicate atoms inside the body or a
    /// disjunct are dropped.
    pub fn new(
        id: RuleId,
        body: Vec<Atom>,
        existentials: Vec<Variable>,
        head: Vec<Vec<Atom>>,
    ) -> Result<Self, RuleError> {
        Rule::with_origin(id, RuleOrigin::User, body, existentials, head)
    }

    pub fn with_origin(
        id: RuleId,
        origin: RuleOrigin,
        body: Vec<Atom>,
        existentials: Vec<Variable>,
        head: Vec<Vec<Atom>>,
    ) -> Result<Self, RuleError> {
        let rule = Rule { id, origin, body: dedup(body), existentials, head: head.into_iter().map(dedup).collect() };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<(), RuleError> {
        let id = self.id;
        let mut body_vars = BTreeSet::new();
        for atom in &self.body {
            if atom.predicate.is_bottom() {
                return Err(RuleError::BottomInBody(id));
            }
            if let Some(v) = atom.existentials().next() {
                return Err(RuleError::ExistentialInBody(id, v.to_string()));
            }
            body_vars.extend(atom.variables().cloned());
        }
        let declared: BTreeSet<_> = self.existentials.iter().cloned().collect();
        if declared.len() != self.existentials.len() {
            let mut seen = BTreeSet::new();
            let dup = self.existentials.iter().find(|v| !seen.insert(*v)).unwrap();
            return Err(RuleError::DuplicateExistential(id, dup.to_string()));
        }
        if let Some(v) = declared.iter().find(|v| body_vars.contains(*v)) {
            return Err(RuleError::ExistentialInBody(id, v.to_string()));
        }
        let mut used = BTreeSet::new();
        for disjunct in &self.head {
            if disjunct.is_empty() {
                return Err(RuleError::EmptyDisjunct(id));
            }
            for atom in disjunct {
                if atom.predicate.is_top() {
                    return Err(RuleError::TopInHead(id));
                }
                if atom.predicate.is_bottom() {
                    return Err(RuleError::BottomInHead(id));
                }
                for term in &atom.args {
                    match term {
                        Term::Var(v) if !body_vars.contains(v) => {
                            return Err(RuleError::Unsafe(id, v.to_string()));
                        }
                        Term::Exist(v) => {
                            if !declared.contains(v) {
                                return Err(RuleError::UndeclaredExistential(id, v.to_string()));
                            }
                            used.insert(v.clone());
                        }
                        _ => {}
                    }
                }
            }
        }
        if let Some(v) = declared.iter().find(|v| !used.contains(*v)) {
            return Err(RuleError::UnusedExistential(id, v.to_string()));
        }
        Ok(())
    }

    pub fn id(&self) -> RuleId {
        self.id
    }

    pub fn origin(&self) -> RuleOrigin {
        self.origin
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn existentials(&self) -> &[Variable] {
        &self.existentials
    }

    /// Head disjuncts; empty means the head is ⊥.
    pub fn head(&self) -> &[Vec<Atom>] {
        &self.head
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_empty()
    }

    /// Single head atom, no existentials.
    pub fn is_datalog(&self) -> bool {
        self.existentials.is_empty() && (self.head.is_empty() || (self.head.len() == 1 && self.head[0].len() == 1))
    }

    /// Universal variables in order of first occurrence in the body.
    pub fn universal_variables(&self) -> Vec<Variable> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.body.iter().flat_map(Atom::variables) {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
        out
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().chain(self.head.iter().flatten())
    }

    pub fn constants(&self) -> impl Iterator<Item = &Constant> {
        self.atoms().flat_map(Atom::constants)
    }

    pub fn signature(&self) -> SignatureSet {
        let mut sig = SignatureSet::new();
        sig.extend(self.atoms().map(|a| a.predicate.clone()));
        sig
    }

    /// Renames existential variables, keeping everything else.
    pub(crate) fn rename_existentials(&self, rename: &BTreeMap<Variable, Variable>) -> Rule {
        let map = |t: &Term| match t {
            Term::Exist(v) => Term::Exist(rename.get(v).cloned().unwrap_or_else(|| v.clone())),
            other => other.clone(),
        };
        Rule {
            id: self.id,
            origin: self.origin,
            body: self.body.clone(),
            existentials: self
                .existentials
                .iter()
                .map(|v| rename.get(v).cloned().unwrap_or_else(|| v.clone()))
                .collect(),
            head: self.head.iter().map(|d| d.iter().map(|a| a.map_terms(map)).collect()).collect(),
        }
    }
}

fn dedup(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut seen = BTreeSet::new();
    atoms.into_iter().filter(|a| seen.insert(a.clone())).collect()
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.body.is_empty() {
            f.write_str("true")?;
        }
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str(" -> ")?;
        if self.head.is_empty() {
            return f.write_str("false");
        }
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(" . ")?;
        }
        for (i, disjunct) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            for (j, atom) in disjunct.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{atom}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.id, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TBoxError {
    #[error("duplicate rule id {0}")]
    DuplicateId(RuleId),
    #[error("predicate {name} is used with arities {first} and {second}")]
    ArityConflict { name: String, first: usize, second: usize },
}

/// An ordered list of rules with unique identifiers.
#[derive(Clone, Default)]
pub struct TBox {
    rules: Vec<Rule>,
    /// Filled on first use.
    sig: OnceLock<SignatureSet>,
}

impl PartialEq for TBox {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl Eq for TBox {}

impl TBox {
    pub fn new(rules: Vec<Rule>) -> Result<Self, TBoxError> {
        let mut ids = BTreeSet::new();
        for r in &rules {
            if !ids.insert(r.id) {
                return Err(TBoxError::DuplicateId(r.id));
            }
        }
        let tbox = TBox::from_rules_unchecked(rules);
        tbox.signature().check_arities()?;
        Ok(tbox)
    }

    pub fn empty() -> Self {
        TBox::default()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn ids(&self) -> BTreeSet<RuleId> {
        self.rules.iter().map(Rule::id).collect()
    }

    pub fn user_ids(&self) -> BTreeSet<RuleId> {
        self.rules.iter().filter(|r| r.origin == RuleOrigin::User).map(Rule::id).collect()
    }

    pub fn constant_pool(&self) -> BTreeSet<Constant> {
        self.rules.iter().flat_map(Rule::constants).cloned().collect()
    }

    pub fn signature(&self) -> SignatureSet {
        self.signature_ref().clone()
    }

    /// Like [`TBox::signature`], without the copy.
    pub fn signature_ref(&self) -> &SignatureSet {
        self.sig.get_or_init(|| {
            let mut sig = SignatureSet::new();
            for r in &self.rules {
                sig.extend(r.atoms().map(|a| a.predicate.clone()));
            }
            sig
        })
    }

    /// The rules whose ids are in `ids`, keeping their ids.
    pub fn restrict(&self, ids: &BTreeSet<RuleId>) -> TBox {
        TBox::from_rules_unchecked(self.rules.iter().filter(|r| ids.contains(&r.id)).cloned().collect())
    }

    /// The rules whose ids are not in `ids`.
    pub fn without(&self, ids: &BTreeSet<RuleId>) -> TBox {
        TBox::from_rules_unchecked(self.rules.iter().filter(|r| !ids.contains(&r.id)).cloned().collect())
    }

    pub(crate) fn from_rules_unchecked(rules: Vec<Rule>) -> TBox {
        TBox { rules, sig: OnceLock::new() }
    }
}

impl fmt::Debug for TBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.rules).finish()
    }
}

/// A set of predicates. ⊥ is always a member.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignatureSet {
    predicates: BTreeSet<Predicate>,
}

impl Default for SignatureSet {
    fn default() -> Self {
        Self::new()
    }
}

impl SignatureSet {
    pub fn new() -> Self {
        let mut predicates = BTreeSet::new();
        predicates.insert(Predicate::bottom());
        SignatureSet { predicates }
    }

    pub fn contains(&self, p: &Predicate) -> bool {
        p.is_bottom() || self.predicates.contains(p)
    }

    pub fn insert(&mut self, p: Predicate) -> bool {
        self.predicates.insert(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter()
    }

    /// Members other than ⊥, ⊤ and equality.
    pub fn symbols(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().filter(|p| !p.is_reserved())
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    /// True when ⊥ is the only member.
    pub fn is_trivial(&self) -> bool {
        self.predicates.len() == 1
    }

    pub fn is_subset(&self, other: &SignatureSet) -> bool {
        self.predicates.iter().all(|p| other.contains(p))
    }

    pub fn union(&self, other: &SignatureSet) -> SignatureSet {
        let mut out = self.clone();
        out.extend(other.iter().cloned());
        out
    }

    pub fn by_name(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name() == name)
    }

    /// Fails when one name occurs with two arities.
    pub fn check_arities(&self) -> Result<(), TBoxError> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &self.predicates {
            if let Some(&first) = seen.get(p.name()) {
                if first != p.arity() {
                    return Err(TBoxError::ArityConflict { name: p.name().to_string(), first, second: p.arity() });
                }
            }
            seen.insert(p.name(), p.arity());
        }
        Ok(())
    }
}

impl Extend<Predicate> for SignatureSet {
    fn extend<I: IntoIterator<Item = Predicate>>(&mut self, iter: I) {
        self.predicates.extend(iter)
    }
}

impl FromIterator<Predicate> for SignatureSet {
    fn from_iter<I: IntoIterator<Item = Predicate>>(iter: I) -> Self {
        let mut sig = SignatureSet::new();
        sig.extend(iter);
        sig
    }
}

impl fmt::Debug for SignatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.predicates).finish()
    }
}

/// Anything with a signature.
pub trait HasSignature {
    fn signature(&self) -> SignatureSet;
}

impl HasSignature for TBox {
    fn signature(&self) -> SignatureSet {
        TBox::signature(self)
    }
}

impl HasSignature for Rule {
    fn signature(&self) -> SignatureSet {
        Rule::signature(self)
    }
}

impl HasSignature for ABox {
    fn signature(&self) -> SignatureSet {
        self.iter().map(|f| f.predicate.clone()).collect()
    }
}

/// Set of all predicates occurring in `x`, always including ⊥.
pub fn signature_of<T: HasSignature + ?Sized>(x: &T) -> SignatureSet {
    x.signature()
}
