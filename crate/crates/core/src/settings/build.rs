use std::collections::BTreeSet;

use super::{tuples, FactGrid, Limits, ModuleSetting, Relevant, SettingError, SettingKind};
use crate::engine::Substitution;
use crate::model::{ABox, Constant, Fact, Predicate, SignatureSet, TBox};

/// Fresh-constant factory: names that collide with a TBox constant get
/// primes appended until they do not.
struct Names<'a> {
    pool: &'a BTreeSet<Constant>,
}

impl Names<'_> {
    fn fresh(&self, name: String) -> Constant {
        let mut c = Constant::new(&name);
        let mut name = name;
        while self.pool.contains(&c) {
            name.push('\'');
            c = Constant::new(&name);
        }
        c
    }

    fn star(&self) -> Constant {
        self.fresh("@star".to_string())
    }

    fn sig(&self, p: &Predicate) -> Vec<Constant> {
        (1..=p.arity()).map(|i| self.fresh(format!("@sig:{}:{i}", p.name()))).collect()
    }

    fn pair(&self, a: &Predicate, b: &Predicate) -> Vec<Constant> {
        (1..=a.arity()).map(|i| self.fresh(format!("@pair:{}:{}:{i}", a.name(), b.name()))).collect()
    }

    fn crit(&self, b: &Predicate, v: &[usize], k: usize) -> Constant {
        let v: Vec<String> = v.iter().map(ToString::to_string).collect();
        self.fresh(format!("@crit:{}:{}:{k}", b.name(), v.join(".")))
    }
}

fn fact(p: &Predicate, args: Vec<Constant>) -> Fact {
    Fact::new(p.clone(), args).expect("arity matches by construction")
}

/// Checks Σ against sig(T): arities must agree, and with `strict` every
/// predicate must occur in `t`.
pub fn check_sigma(t: &TBox, sigma: &SignatureSet, strict: bool) -> Result<(), SettingError> {
    let tsig = t.signature_ref();
    for p in sigma.iter().filter(|p| !p.is_bottom()) {
        match tsig.by_name(p.name()) {
            Some(q) if q.arity() != p.arity() => {
                return Err(SettingError::ArityMismatch {
                    name: p.name().to_string(),
                    sigma: p.arity(),
                    tbox: q.arity(),
                })
            }
            Some(_) => {}
            None if strict => return Err(SettingError::NotInTBox(p.name().to_string())),
            None => {}
        }
    }
    Ok(())
}

fn theta_fresh(t: &TBox, names: &Names) -> Substitution {
    let mut theta = Substitution::new();
    for r in t.rules() {
        for v in r.existentials() {
            let base = v.name().split('@').next().unwrap_or(v.name());
            theta.insert(v.clone(), names.fresh(format!("@y:{}:{base}", r.id())));
        }
    }
    theta
}

fn theta_star(t: &TBox, star: &Constant) -> Substitution {
    t.rules().iter().flat_map(|r| r.existentials().iter().cloned()).map(|v| (v, star.clone())).collect()
}

fn critical(preds: &[Predicate], star: &Constant) -> ABox {
    preds.iter().map(|p| fact(p, vec![star.clone(); p.arity()])).collect()
}

fn with_bottom(mut facts: ABox) -> Relevant {
    facts.insert(Fact::bottom());
    Relevant { explicit: facts, grid: None }
}

/// Builds the setting of `kind` with default limits, requiring Σ ⊆ sig(T).
pub fn build_setting(t: &TBox, sigma: &SignatureSet, kind: SettingKind) -> Result<ModuleSetting, SettingError> {
    build_setting_with(t, sigma, kind, &Limits::default(), true)
}

/// Same as [`build_setting`]; kept separate for the exponential families.
pub fn build_optimal_setting(t: &TBox, sigma: &SignatureSet, kind: SettingKind) -> Result<ModuleSetting, SettingError> {
    build_setting_with(t, sigma, kind, &Limits::default(), true)
}

/// Builds a setting. With `strict` off, Σ may mention predicates absent
/// from `t` (their arities are still checked against `t` where present).
pub fn build_setting_with(
    t: &TBox,
    sigma: &SignatureSet,
    kind: SettingKind,
    limits: &Limits,
    strict: bool,
) -> Result<ModuleSetting, SettingError> {
    check_sigma(t, sigma, strict)?;
    let pool = t.constant_pool();
    let names = Names { pool: &pool };
    let sig_prime: Vec<Predicate> = sigma.symbols().cloned().collect();
    let tsig_prime = || -> Vec<Predicate> { t.signature_ref().symbols().cloned().collect() };

    let (theta, a0, arel) = match kind {
        SettingKind::I | SettingKind::C => {
            let consts: Vec<(Predicate, Vec<Constant>)> = sig_prime.iter().map(|a| (a.clone(), names.sig(a))).collect();
            let a0 = consts.iter().map(|(a, c)| fact(a, c.clone())).collect();
            let targets = if kind == SettingKind::I { sig_prime.clone() } else { tsig_prime() };
            let mut rel = ABox::new();
            for (a, c) in &consts {
                for b in targets.iter().filter(|b| *b != a && b.arity() == a.arity()) {
                    rel.insert(fact(b, c.clone()));
                }
            }
            (theta_fresh(t, &names), a0, with_bottom(rel))
        }
        SettingKind::F => {
            let a0 = critical(&sig_prime, &names.star());
            let rel = with_bottom(a0.clone());
            (theta_fresh(t, &names), a0, rel)
        }
        SettingKind::Q => {
            let star = names.star();
            let theta = theta_fresh(t, &names);
            let a0 = critical(&sig_prime, &star);
            let mut constants: BTreeSet<Constant> = theta.values().cloned().collect();
            constants.insert(star);
            let grid = FactGrid { predicates: sig_prime.iter().cloned().collect(), constants };
            let rel = Relevant { explicit: ABox::from([Fact::bottom()]), grid: Some(grid) };
            (theta, a0, rel)
        }
        SettingKind::M | SettingKind::B => {
            let star = names.star();
            let a0 = critical(&sig_prime, &star);
            let rel = if kind == SettingKind::M {
                with_bottom(a0.clone())
            } else {
                with_bottom(critical(&tsig_prime(), &star))
            };
            (theta_star(t, &star), a0, rel)
        }
        SettingKind::I0 | SettingKind::C0 => {
            let targets = if kind == SettingKind::I0 { sig_prime.clone() } else { tsig_prime() };
            let mut a0 = ABox::new();
            let mut rel = ABox::new();
            for a in &sig_prime {
                for b in targets.iter().filter(|&b| b != a && b.arity() == a.arity()) {
                    let c = names.pair(a, b);
                    a0.insert(fact(a, c.clone()));
                    rel.insert(fact(b, c));
                }
                a0.insert(fact(a, names.pair(a, &Predicate::bottom())));
            }
            (theta_fresh(t, &names), a0, with_bottom(rel))
        }
        SettingKind::F0 => {
            let (a0, rel) = f0_aboxes(sigma, &sig_prime, &names, limits)?;
            (theta_fresh(t, &names), a0, with_bottom(rel))
        }
    };

    let setting = ModuleSetting { kind, sigma: sigma.clone(), theta, a0, arel };
    let constants = setting.constants().len() as u128;
    if constants > limits.max_constants {
        return Err(SettingError::ConstantBudget { needed: constants, limit: limits.max_constants });
    }
    Ok(setting)
}

/// For every B ∈ Σ (⊥ included) and v ∈ {1..n}^n with n = ar(B): constants
/// ∗¹..∗ⁿ⁺¹, all Σ′-facts over them except B(∗^v) in A₀, and B(∗^v) relevant.
fn f0_aboxes(
    sigma: &SignatureSet,
    sig_prime: &[Predicate],
    names: &Names,
    limits: &Limits,
) -> Result<(ABox, ABox), SettingError> {
    let mut constants: u128 = 0;
    let mut facts: u128 = 0;
    let bs: Vec<&Predicate> = sigma.iter().filter(|b| b.is_bottom() || !b.is_reserved()).collect();
    for b in &bs {
        let n = b.arity() as u128;
        let vectors = n.saturating_pow(n as u32);
        constants = constants.saturating_add(vectors.saturating_mul(n + 1));
        let per: u128 =
            sig_prime.iter().map(|a| (n + 1).saturating_pow(a.arity() as u32)).fold(0, u128::saturating_add);
        facts = facts.saturating_add(vectors.saturating_mul(per));
    }
    if constants > limits.max_constants {
        return Err(SettingError::ConstantBudget { needed: constants, limit: limits.max_constants });
    }
    if facts > limits.max_facts {
        return Err(SettingError::FactBudget { needed: facts, limit: limits.max_facts });
    }

    let mut a0 = ABox::new();
    let mut rel = ABox::new();
    for b in bs {
        let n = b.arity();
        let positions: Vec<usize> = (1..=n).collect();
        for v in tuples(&positions, n) {
            let stars: Vec<Constant> = (1..=n + 1).map(|k| names.crit(b, &v, k)).collect();
            let target = fact(b, v.iter().map(|&k| stars[k - 1].clone()).collect());
            for a in sig_prime {
                for args in tuples(&stars, a.arity()) {
                    let f = fact(a, args);
                    if f != target {
                        a0.insert(f);
                    }
                }
            }
            rel.insert(target);
        }
    }
    Ok((a0, rel))
}
