//! Checks of an extracted module against its source TBox.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::cnf::cnf_skolemize;
use super::entail::entails_rule_with;
use super::hyper::{HyperLimits, Progress, Saturator};
use super::insep::{check_inseparability, implication, Bounds, InsepRelation, Verdict};
use super::justify::{enumerate_justifications_with, JustifyError, DEFAULT_JUSTIFICATION_LIMIT};
use crate::engine::{materialise, DatalogProgram, EngineError};
use crate::extract::{extract, ExtractError, ExtractOptions, ModuleKind};
use crate::locality::LocalityKind;
use crate::model::{ABox, Fact, Rule, RuleId, SignatureSet, TBox};
use crate::settings::SettingKind;

/// The relation a module of this kind is expected to preserve.
pub fn default_relation(kind: ModuleKind) -> InsepRelation {
    match kind {
        ModuleKind::Setting(SettingKind::I | SettingKind::I0) => InsepRelation::Implication,
        ModuleKind::Setting(SettingKind::C | SettingKind::C0) => InsepRelation::Classification,
        ModuleKind::Setting(SettingKind::F | SettingKind::F0 | SettingKind::Q) => InsepRelation::Fact,
        ModuleKind::Setting(SettingKind::M | SettingKind::B) => InsepRelation::Model,
        ModuleKind::Locality(LocalityKind::Bottom | LocalityKind::Top | LocalityKind::TopBottomStar) => {
            InsepRelation::Model
        }
    }
}

/// A(x̄) → B(x̄) for A ≠ B of equal arity in Σ, and A(x̄) → ⊥.
pub fn sigma_implications(sigma: &SignatureSet) -> Vec<Rule> {
    let preds: Vec<_> = sigma.symbols().cloned().collect();
    let mut out = Vec::new();
    for a in &preds {
        for b in &preds {
            if a != b && a.arity() == b.arity() {
                out.push(implication(a, Some(b)));
            }
        }
        out.push(implication(a, None));
    }
    out
}

/// Re-extracts from what the module left behind; passes when that is empty.
/// `t` should already carry its equality axioms.
pub fn check_depleting(
    t: &TBox,
    module: &BTreeSet<RuleId>,
    sigma: &SignatureSet,
    kind: ModuleKind,
) -> Result<Verdict, ExtractError> {
    let rest = t.without(module);
    let opts = ExtractOptions { expand_equality: false, strict_signature: false, ..ExtractOptions::default() };
    let again = extract(&rest, sigma, kind, &opts)?;
    let ids = again.report.all_rule_ids();
    Ok(if ids.is_empty() {
        Verdict::Pass
    } else {
        let list: Vec<String> = ids.iter().map(ToString::to_string).collect();
        Verdict::Counterexample { witness: format!("remainder yields rules {}", list.join(",")), definitive: true }
    })
}

/// Every justification of every entailed Σ-implication must lie in the
/// module.
pub fn check_justifications(t: &TBox, module: &BTreeSet<RuleId>, sigma: &SignatureSet, bounds: &Bounds) -> Verdict {
    if t.len() > DEFAULT_JUSTIFICATION_LIMIT {
        let e = JustifyError::TooLarge { size: t.len(), limit: DEFAULT_JUSTIFICATION_LIMIT };
        return Verdict::Inconclusive(e.to_string());
    }
    let limits = bounds.hyper();
    let results: Vec<Verdict> = sigma_implications(sigma)
        .par_iter()
        .map(|r| {
            if !entails_rule_with(t, r, limits).is_entailed() {
                return Verdict::Pass;
            }
            let js = match enumerate_justifications_with(t, r, limits, DEFAULT_JUSTIFICATION_LIMIT) {
                Ok(js) => js,
                Err(e) => return Verdict::Inconclusive(e.to_string()),
            };
            match js.sets.iter().find(|j| !j.is_subset(module)) {
                Some(j) => {
                    let ids: Vec<String> = j.iter().map(ToString::to_string).collect();
                    Verdict::Counterexample {
                        witness: format!("{{{}}} justifies {r}", ids.join(",")),
                        definitive: js.exact,
                    }
                }
                None => Verdict::Pass,
            }
        })
        .collect();
    super::insep::combine(results)
}

/// Outcome of comparing engine materialisation with saturation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Disagree {
        engine_only: Vec<Fact>,
        oracle_only: Vec<Fact>,
    },
    /// Saturation hit a bound before finishing.
    Bounded,
}

/// Materialises datalog `t` over `abox` with the engine and by
/// hyperresolution and compares the ground facts. An inconsistent
/// saturation only has to match the engine deriving ⊥.
pub fn compare_materialisation(t: &TBox, abox: &ABox, limits: HyperLimits) -> Result<Agreement, EngineError> {
    let program = DatalogProgram::from_datalog_tbox(t)?;
    let engine = materialise(&program, abox).fact_set();
    let cnf = cnf_skolemize(t);
    let mut sat = Saturator::new(&cnf, abox, limits);
    let progress = sat.run();
    if sat.is_inconsistent() {
        return Ok(if engine.contains(&Fact::bottom()) {
            Agreement::Agree
        } else {
            Agreement::Disagree { engine_only: Vec::new(), oracle_only: vec![Fact::bottom()] }
        });
    }
    if progress != Progress::Complete {
        return Ok(Agreement::Bounded);
    }
    let oracle = sat.unit_facts();
    if engine == oracle {
        return Ok(Agreement::Agree);
    }
    Ok(Agreement::Disagree {
        engine_only: engine.difference(&oracle).cloned().collect(),
        oracle_only: oracle.difference(&engine).cloned().collect(),
    })
}

/// One named check result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
}

/// Inseparability under `rel`, depletion and justification containment.
pub fn audit_module(
    t: &TBox,
    module: &BTreeSet<RuleId>,
    sigma: &SignatureSet,
    kind: ModuleKind,
    rel: InsepRelation,
    bounds: &Bounds,
) -> Result<Vec<Check>, ExtractError> {
    let m = t.restrict(module);
    Ok(vec![
        Check { name: format!("{rel}-inseparable"), verdict: check_inseparability(t, &m, sigma, rel, bounds) },
        Check { name: "depleting".to_string(), verdict: check_depleting(t, module, sigma, kind)? },
        Check { name: "justifications".to_string(), verdict: check_justifications(t, module, sigma, bounds) },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::example_tbox;
    use crate::textio::parse_tbox;

    fn sig(names: &[&str], t: &TBox) -> SignatureSet {
        t.signature().symbols().filter(|p| names.contains(&p.name())).cloned().collect()
    }

    #[test]
    fn example_module_passes_everything() {
        let t = example_tbox();
        let s = sig(&["B", "C", "D", "G"], &t);
        let ids: BTreeSet<RuleId> = [4, 5, 6].map(RuleId).into();
        let checks =
            audit_module(&t, &ids, &s, SettingKind::I.into(), InsepRelation::Implication, &Bounds::default()).unwrap();
        for c in checks {
            assert!(c.verdict.is_pass(), "{}: {}", c.name, c.verdict);
        }
    }

    #[test]
    fn missing_rule_is_caught() {
        let t = example_tbox();
        let s = sig(&["B", "C", "D", "G"], &t);
        let ids: BTreeSet<RuleId> = [4, 5].map(RuleId).into();
        let v = check_justifications(&t, &ids, &s, &Bounds::default());
        assert_eq!(v, Verdict::Counterexample { witness: "{4,5,6} justifies D(x1) -> G(x1)".into(), definitive: true });
        let v = check_depleting(&t, &BTreeSet::new(), &s, SettingKind::I.into()).unwrap();
        assert_eq!(v.to_string(), "counterexample: remainder yields rules 4,5,6");
    }

    #[test]
    fn implications_include_bottom() {
        let t = parse_tbox("A(x) -> B(x)\nR(x,y) -> A(x)").unwrap();
        let rules: Vec<String> = sigma_implications(&t.signature()).iter().map(ToString::to_string).collect();
        assert_eq!(
            rules,
            ["A(x1) -> B(x1)", "A(x1) -> false", "B(x1) -> A(x1)", "B(x1) -> false", "R(x1,x2) -> false"]
        );
    }

    #[test]
    fn engine_and_saturation_agree() {
        let t = parse_tbox("A(x) -> B(x)\nB(x), R(x,y) -> B(y)\nB(x), C(x) -> false").unwrap();
        let abox: ABox = [Fact::of("A", &["a"]), Fact::of("R", &["a", "b"])].into();
        assert_eq!(compare_materialisation(&t, &abox, HyperLimits::depth(8)).unwrap(), Agreement::Agree);
        let clash: ABox = [Fact::of("A", &["a"]), Fact::of("C", &["a"])].into();
        assert_eq!(compare_materialisation(&t, &clash, HyperLimits::depth(8)).unwrap(), Agreement::Agree);
        let chain: ABox = (0..12)
            .map(|i| Fact::of("R", &[&format!("c{i}"), &format!("c{}", i + 1)]))
            .chain([Fact::of("A", &["c0"])])
            .collect();
        assert_eq!(compare_materialisation(&t, &chain, HyperLimits::depth(4)).unwrap(), Agreement::Bounded);
    }

    #[test]
    fn relations_per_kind() {
        assert_eq!(default_relation(SettingKind::Q.into()), InsepRelation::Fact);
        assert_eq!(default_relation(SettingKind::C0.into()), InsepRelation::Classification);
        assert_eq!(default_relation(LocalityKind::Bottom.into()), InsepRelation::Model);
    }
}
