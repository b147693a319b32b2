//! Module settings: substitution, seed ABox and relevant facts.

mod build;
mod homomorphism;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::{FactId, Materialisation, RelevantFacts, Substitution};
use crate::model::{ABox, Constant, Fact, Predicate, SignatureSet};

pub use build::{build_optimal_setting, build_setting, build_setting_with, check_sigma};
pub use homomorphism::{find_homomorphism, SettingHomomorphism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SettingKind {
    I,
    F,
    Q,
    M,
    B,
    C,
    I0,
    C0,
    F0,
}

impl SettingKind {
    pub const ALL: [SettingKind; 9] = [
        SettingKind::I,
        SettingKind::F,
        SettingKind::Q,
        SettingKind::M,
        SettingKind::B,
        SettingKind::C,
        SettingKind::I0,
        SettingKind::C0,
        SettingKind::F0,
    ];

    /// The six main settings.
    pub const BASIC: [SettingKind; 6] =
        [SettingKind::I, SettingKind::F, SettingKind::Q, SettingKind::M, SettingKind::B, SettingKind::C];

    pub fn as_str(self) -> &'static str {
        match self {
            SettingKind::I => "i",
            SettingKind::F => "f",
            SettingKind::Q => "q",
            SettingKind::M => "m",
            SettingKind::B => "b",
            SettingKind::C => "c",
            SettingKind::I0 => "i0",
            SettingKind::C0 => "c0",
            SettingKind::F0 => "f0",
        }
    }

    pub fn is_optimal_family(self) -> bool {
        matches!(self, SettingKind::I0 | SettingKind::C0 | SettingKind::F0)
    }
}

impl fmt::Display for SettingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown setting kind `{0}`")]
pub struct UnknownSettingKind(pub String);

impl FromStr for SettingKind {
    type Err = UnknownSettingKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SettingKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownSettingKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettingError {
    #[error("signature predicate {0} does not occur in the TBox")]
    NotInTBox(String),
    #[error("predicate {name} has arity {sigma} in the signature but {tbox} in the TBox")]
    ArityMismatch { name: String, sigma: usize, tbox: usize },
    #[error("setting needs {needed} constants, over the budget of {limit}")]
    ConstantBudget { needed: u128, limit: u128 },
    #[error("setting needs {needed} facts, over the budget of {limit}")]
    FactBudget { needed: u128, limit: u128 },
}

/// Size budgets for setting construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_constants: u128,
    pub max_facts: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_constants: 1_000_000, max_facts: 1_000_000 }
    }
}

/// All facts over `predicates` whose arguments are drawn from `constants`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactGrid {
    pub predicates: BTreeSet<Predicate>,
    pub constants: BTreeSet<Constant>,
}

impl FactGrid {
    pub fn contains(&self, f: &Fact) -> bool {
        self.predicates.contains(f.predicate()) && f.args().iter().all(|c| self.constants.contains(c))
    }

    pub fn len(&self) -> u128 {
        let n = self.constants.len() as u128;
        self.predicates.iter().map(|p| n.saturating_pow(p.arity() as u32)).fold(0u128, u128::saturating_add)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn facts(&self) -> Vec<Fact> {
        let consts: Vec<Constant> = self.constants.iter().cloned().collect();
        let mut out = Vec::new();
        for p in &self.predicates {
            out.extend(tuples(&consts, p.arity()).map(|args| Fact::new(p.clone(), args).expect("arity")));
        }
        out
    }
}

/// Every tuple of length `n` over `domain`, in lexicographic order.
pub(crate) fn tuples<T: Clone>(domain: &[T], n: usize) -> impl Iterator<Item = Vec<T>> + '_ {
    let total = if domain.is_empty() && n > 0 { 0 } else { domain.len().pow(n as u32) };
    (0..total).map(move |mut code| {
        let mut digits = vec![0; n];
        for d in digits.iter_mut().rev() {
            *d = code % domain.len();
            code /= domain.len();
        }
        digits.into_iter().map(|d| domain[d].clone()).collect()
    })
}

/// Relevant facts: an explicit set plus an optional grid kept symbolic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relevant {
    pub explicit: ABox,
    pub grid: Option<FactGrid>,
}

impl Relevant {
    pub fn contains(&self, f: &Fact) -> bool {
        self.explicit.contains(f) || self.grid.as_ref().is_some_and(|g| g.contains(f))
    }

    /// Number of facts, counting overlaps once.
    pub fn len(&self) -> u128 {
        let overlap = match &self.grid {
            Some(g) => self.explicit.iter().filter(|f| g.contains(f)).count() as u128,
            None => 0,
        };
        self.explicit.len() as u128 + self.grid.as_ref().map_or(0, FactGrid::len) - overlap
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All facts, failing when there are more than `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<ABox, SettingError> {
        let needed = self.len();
        if needed > cap {
            return Err(SettingError::FactBudget { needed, limit: cap });
        }
        let mut out = self.explicit.clone();
        if let Some(g) = &self.grid {
            out.extend(g.facts());
        }
        Ok(out)
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out: BTreeSet<Constant> = self.explicit.iter().flat_map(|f| f.args().iter().cloned()).collect();
        // Grid constants only matter if some grid fact has arguments.
        if let Some(g) = self.grid.as_ref().filter(|g| g.predicates.iter().any(|p| p.arity() > 0)) {
            out.extend(g.constants.iter().cloned());
        }
        out
    }
}

impl RelevantFacts for Relevant {
    fn relevant_ids(&self, m: &Materialisation) -> Vec<FactId> {
        let mut ids = self.explicit.relevant_ids(m);
        if let Some(g) = &self.grid {
            let allowed: BTreeSet<u32> = g.constants.iter().filter_map(|c| m.const_id(c)).collect();
            for p in &g.predicates {
                for &id in m.facts_of(p) {
                    if m.args_of(id).iter().all(|a| allowed.contains(a)) {
                        ids.push(id);
                    }
                }
            }
            ids.sort_unstable();
            ids.dedup();
        }
        ids
    }
}

/// χ = ⟨θ, A₀, A_rel⟩ together with the kind and signature it was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleSetting {
    pub kind: SettingKind,
    pub sigma: SignatureSet,
    pub theta: Substitution,
    pub a0: ABox,
    pub arel: Relevant,
}

impl ModuleSetting {
    /// Every constant mentioned by the setting.
    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out: BTreeSet<Constant> = self.theta.values().cloned().collect();
        out.extend(self.a0.iter().flat_map(|f| f.args().iter().cloned()));
        out.extend(self.arel.constants());
        out
    }

    /// Image of θ, grouped: constant to the existentials mapped to it.
    pub fn theta_preimages(&self) -> BTreeMap<Constant, Vec<crate::model::Variable>> {
        let mut out: BTreeMap<Constant, Vec<_>> = BTreeMap::new();
        for (v, c) in &self.theta {
            out.entry(c.clone()).or_default().push(v.clone());
        }
        out
    }
}
