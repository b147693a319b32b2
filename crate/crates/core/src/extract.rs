//! The extraction pipeline and setting comparison.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{compute_support, materialise, translate, EngineError};
use crate::locality::{extract_locality_module, LocalityKind};
use crate::model::{ABox, Atom, Constant, Fact, Predicate, RuleId, RuleOrigin, SignatureSet, TBox};
use crate::normalize::{expand_equality, uses_equality};
use crate::settings::{build_setting_with, check_sigma, Limits, SettingError, SettingKind};

/// A setting kind or a locality baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModuleKind {
    Setting(SettingKind),
    Locality(LocalityKind),
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleKind::Setting(k) => k.fmt(f),
            ModuleKind::Locality(k) => k.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown module kind `{0}`")]
pub struct UnknownModuleKind(pub String);

impl FromStr for ModuleKind {
    type Err = UnknownModuleKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(k) = s.parse::<SettingKind>() {
            return Ok(ModuleKind::Setting(k));
        }
        s.parse::<LocalityKind>().map(ModuleKind::Locality).map_err(|_| UnknownModuleKind(s.to_string()))
    }
}

impl From<SettingKind> for ModuleKind {
    fn from(k: SettingKind) -> Self {
        ModuleKind::Setting(k)
    }
}

impl From<LocalityKind> for ModuleKind {
    fn from(k: LocalityKind) -> Self {
        ModuleKind::Locality(k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Setting(#[from] SettingError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Result of one extraction, in the exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleReport {
    pub tool: String,
    pub setting: String,
    pub tbox_size: usize,
    pub sigma: Vec<String>,
    pub module_rule_ids: Vec<usize>,
    pub module_size: usize,
    pub support_rule_count: usize,
    pub materialisation_facts: usize,
    pub time_ms: f64,
    /// Ids of equality-axiomatisation rules in the module.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equality_rule_ids: Vec<usize>,
}

impl ModuleReport {
    /// User rules and equality rules of the module.
    pub fn all_rule_ids(&self) -> BTreeSet<RuleId> {
        self.module_rule_ids.iter().chain(&self.equality_rule_ids).map(|&i| RuleId(i)).collect()
    }
}

fn sigma_strings(sigma: &SignatureSet) -> Vec<String> {
    sigma.iter().filter(|p| !p.is_bottom()).map(|p| format!("{}/{}", p.name(), p.arity())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    pub limits: Limits,
    /// Reject Σ with predicates outside sig(T).
    pub strict_signature: bool,
    /// Add the equality axioms when `EQ` occurs.
    pub expand_equality: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { limits: Limits::default(), strict_signature: true, expand_equality: true }
    }
}

/// A module together with its report.
#[derive(Debug, Clone)]
pub struct Extraction {
    /// The module as a sub-TBox of the (equality-expanded) input.
    pub module: TBox,
    pub report: ModuleReport,
    pub elapsed: Duration,
}

/// Extracts with default options and returns the report.
pub fn extract_module(
    t: &TBox,
    sigma: &SignatureSet,
    kind: impl Into<ModuleKind>,
) -> Result<ModuleReport, ExtractError> {
    Ok(extract(t, sigma, kind.into(), &ExtractOptions::default())?.report)
}

/// Runs the pipeline: build the setting, translate, materialise the seed,
/// take the support of the relevant facts and map it back to source rules.
pub fn extract(
    t: &TBox,
    sigma: &SignatureSet,
    kind: ModuleKind,
    opts: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let tbox = if opts.expand_equality && uses_equality(t) { Cow::Owned(expand_equality(t)) } else { Cow::Borrowed(t) };
    let (ids, support_rules, facts) = match kind {
        ModuleKind::Locality(k) => {
            check_sigma(&tbox, sigma, opts.strict_signature)?;
            (extract_locality_module(&tbox, sigma, k), 0, 0)
        }
        ModuleKind::Setting(k) => {
            let setting = build_setting_with(&tbox, sigma, k, &opts.limits, opts.strict_signature)?;
            let (live, seed) = live_rules(&tbox, &setting.a0, setting.constants().iter());
            let program = translate(&live, &setting.theta)?;
            let m = materialise(&program, &seed);
            let support = compute_support(&m, &setting.arel);
            let ids: BTreeSet<RuleId> = support.rules.iter().map(|&r| program.rules[r].source).collect();
            (ids, support.rules.len(), m.len())
        }
    };
    let module = tbox.restrict(&ids);
    let (mut user, mut equality) = (Vec::new(), Vec::new());
    for r in module.rules() {
        match r.origin() {
            RuleOrigin::User => user.push(r.id().0),
            RuleOrigin::Equality => equality.push(r.id().0),
        }
    }
    user.sort_unstable();
    equality.sort_unstable();
    let elapsed = start.elapsed();
    let report = ModuleReport {
        tool: "modex".to_string(),
        setting: kind.to_string(),
        tbox_size: t.len(),
        sigma: sigma_strings(sigma),
        module_size: user.len(),
        module_rule_ids: user,
        support_rule_count: support_rules,
        materialisation_facts: facts,
        time_ms: elapsed.as_secs_f64() * 1000.0,
        equality_rule_ids: equality,
    };
    Ok(Extraction { module, report, elapsed })
}

/// Restricts `t` to the rules that can fire from `seed`: those whose body
/// predicates are all derivable from the seed and `TOP`. The returned seed
/// adds `TOP(c)` for every constant of `t` and every constant in `extra`, so
/// the materialisation is the one the whole of `t` would give.
fn live_rules<'a>(t: &TBox, seed: &ABox, extra: impl Iterator<Item = &'a Constant>) -> (TBox, ABox) {
    let top = Predicate::top();
    let mut live: HashSet<&Predicate> = seed.iter().map(Fact::predicate).collect();
    live.insert(&top);
    let rules = t.rules();
    let mut waiting: HashMap<&Predicate, Vec<usize>> = HashMap::new();
    let mut dead = vec![0usize; rules.len()];
    let mut queue = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        let mut preds: Vec<&Predicate> = r.body().iter().map(Atom::predicate).filter(|q| !live.contains(q)).collect();
        preds.sort_unstable();
        preds.dedup();
        dead[i] = preds.len();
        for q in preds {
            waiting.entry(q).or_default().push(i);
        }
        if dead[i] == 0 {
            queue.push(i);
        }
    }
    let bottom = Predicate::bottom();
    while let Some(i) = queue.pop() {
        let r = &rules[i];
        let mut heads: Vec<&Predicate> = r.head().iter().flatten().map(Atom::predicate).collect();
        if r.is_constraint() {
            heads.push(&bottom);
        }
        for h in heads {
            if live.insert(h) {
                for &j in waiting.get(h).into_iter().flatten() {
                    dead[j] -= 1;
                    if dead[j] == 0 {
                        queue.push(j);
                    }
                }
            }
        }
    }
    let ids: BTreeSet<RuleId> = rules.iter().zip(&dead).filter(|(_, &d)| d == 0).map(|(r, _)| r.id()).collect();
    let mut seed = seed.clone();
    for c in t.constant_pool().into_iter().chain(extra.cloned()) {
        seed.insert(Fact::new(top.clone(), vec![c]).expect("unary"));
    }
    (t.restrict(&ids), seed)
}

/// Pairs (a, b) along which M^a ⊆ M^b is guaranteed.
pub fn expected_containments() -> Vec<(ModuleKind, ModuleKind)> {
    use SettingKind::*;
    let chain1 = [I, F, Q, M, B];
    let chain2 = [I, C, B];
    let mut out = Vec::new();
    for chain in [&chain1[..], &chain2[..]] {
        for (i, a) in chain.iter().enumerate() {
            for b in &chain[i + 1..] {
                let pair = (ModuleKind::Setting(*a), ModuleKind::Setting(*b));
                if !out.contains(&pair) {
                    out.push(pair);
                }
            }
        }
    }
    out.push((LocalityKind::TopBottomStar.into(), LocalityKind::Bottom.into()));
    out
}

/// Reports for several kinds over one input, with pairwise containment.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub kinds: Vec<ModuleKind>,
    pub reports: Vec<ModuleReport>,
    /// `contains[a][b]`: module of kind a is a subset of that of kind b.
    pub contains: Vec<Vec<bool>>,
}

impl Comparison {
    /// Expected containments that fail.
    pub fn violations(&self) -> Vec<(ModuleKind, ModuleKind)> {
        let pos = |k: &ModuleKind| self.kinds.iter().position(|x| x == k);
        expected_containments()
            .into_iter()
            .filter(|(a, b)| match (pos(a), pos(b)) {
                (Some(i), Some(j)) => !self.contains[i][j],
                _ => false,
            })
            .collect()
    }

    /// Plain-text table: sizes, then the containment matrix.
    pub fn render(&self) -> String {
        let mut out = String::from("kind\tsize\n");
        for (k, r) in self.kinds.iter().zip(&self.reports) {
            out.push_str(&format!("{k}\t{}\n", r.module_size));
        }
        out.push_str("\nsubset");
        for k in &self.kinds {
            out.push_str(&format!("\t{k}"));
        }
        out.push('\n');
        for (i, k) in self.kinds.iter().enumerate() {
            out.push_str(&k.to_string());
            for j in 0..self.kinds.len() {
                out.push_str(if self.contains[i][j] { "\tyes" } else { "\tno" });
            }
            out.push('\n');
        }
        out
    }
}

pub fn compare_settings(t: &TBox, sigma: &SignatureSet, kinds: &[ModuleKind]) -> Result<Comparison, ExtractError> {
    let reports = kinds.iter().map(|k| extract_module(t, sigma, *k)).collect::<Result<Vec<_>, _>>()?;
    let sets: Vec<BTreeSet<RuleId>> = reports.iter().map(ModuleReport::all_rule_ids).collect();
    let contains = sets.iter().map(|a| sets.iter().map(|b| a.is_subset(b)).collect()).collect();
    Ok(Comparison { kinds: kinds.to_vec(), reports, contains })
}
