//! Verification oracles independent of the datalog engine: Skolemised
//! clauses, bounded hyperresolution, rule entailment, justifications and
//! brute-force inseparability checks.

pub mod audit;
pub mod cnf;
pub mod entail;
pub mod hyper;
pub mod insep;
pub mod justify;
mod models;

pub use audit::{
    audit_module, check_depleting, check_justifications, compare_materialisation, default_relation, sigma_implications,
    Agreement, Check,
};
pub use cnf::{cnf_skolemize, CnfRule, SkAtom, SkTerm};
pub use entail::{entails_rule, entails_rule_with, Entailment};
pub use hyper::{
    hyperresolve, hyperresolve_with, HyperLimits, HyperOutcome, HyperProof, Progress, ProofStep, Saturator,
};
pub use insep::{check_inseparability, Bounds, InsepRelation, Verdict};
pub use justify::{enumerate_justifications, enumerate_justifications_with, Justifications, JustifyError};
