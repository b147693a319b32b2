use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Limits, ModuleSetting, Relevant, SettingError};
use crate::model::{ABox, Constant, Fact, Predicate};

/// Constant mapping μ with θ′ = θμ, A₀μ ⊆ A₀′ and A_relμ ⊆ A_rel′.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingHomomorphism {
    pub mu: BTreeMap<Constant, Constant>,
}

impl SettingHomomorphism {
    fn apply(&self, f: &Fact) -> Fact {
        let args = f.args().iter().map(|c| self.mu.get(c).unwrap_or(c).clone()).collect();
        Fact::new(f.predicate().clone(), args).expect("same predicate")
    }

    /// Checks the three conditions directly.
    pub fn verify(&self, src: &ModuleSetting, dst: &ModuleSetting) -> Result<bool, SettingError> {
        let theta_ok = src.theta.len() == dst.theta.len()
            && src.theta.iter().all(|(y, c)| dst.theta.get(y) == Some(self.mu.get(c).unwrap_or(c)));
        if !theta_ok {
            return Ok(false);
        }
        if !src.a0.iter().all(|f| dst.a0.contains(&self.apply(f))) {
            return Ok(false);
        }
        let rel = src.arel.enumerate(Limits::default().max_facts)?;
        Ok(rel.iter().all(|f| dst.arel.contains(&self.apply(f))))
    }
}

#[derive(Clone, Copy)]
enum Target {
    A0,
    Rel,
}

struct Problem<'a> {
    dst: &'a ModuleSetting,
    consts: Vec<Constant>,
    dst_consts: Vec<Constant>,
    /// Constraint facts with arguments as source constant indices.
    constraints: Vec<(Predicate, Vec<usize>, Target)>,
}

impl Problem<'_> {
    fn satisfied(&self, c: usize, assign: &[usize]) -> bool {
        let (p, args, target) = &self.constraints[c];
        let image: Vec<Constant> = args.iter().map(|&a| self.dst_consts[assign[a]].clone()).collect();
        let f = Fact::new(p.clone(), image).expect("same predicate");
        match target {
            Target::A0 => self.dst.a0.contains(&f),
            Target::Rel => self.dst.arel.contains(&f),
        }
    }
}

/// Position-wise candidate images for predicate `p` in `target`.
fn allowed_at(p: &Predicate, pos: usize, explicit: &ABox, rel: Option<&Relevant>) -> BTreeSet<Constant> {
    let mut out: BTreeSet<Constant> =
        explicit.iter().filter(|f| f.predicate() == p).map(|f| f.args()[pos].clone()).collect();
    if let Some(g) = rel.and_then(|r| r.grid.as_ref()) {
        if g.predicates.contains(p) {
            out.extend(g.constants.iter().cloned());
        }
    }
    out
}

/// Exact backtracking search for a homomorphism from `src` to `dst`.
///
/// Fails only when the source's relevant set is symbolic and too large to
/// enumerate.
pub fn find_homomorphism(
    src: &ModuleSetting,
    dst: &ModuleSetting,
) -> Result<Option<SettingHomomorphism>, SettingError> {
    let consts: Vec<Constant> = src.constants().into_iter().collect();
    let index: HashMap<&Constant, usize> = consts.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let dst_consts: Vec<Constant> = dst.constants().into_iter().collect();
    let dst_index: HashMap<&Constant, usize> = dst_consts.iter().enumerate().map(|(i, c)| (c, i)).collect();

    let mut domains: Vec<BTreeSet<usize>> = vec![(0..dst_consts.len()).collect(); consts.len()];

    // θ′ = θμ pins every θ-image.
    if src.theta.len() != dst.theta.len() {
        return Ok(None);
    }
    for (y, c) in &src.theta {
        let Some(target) = dst.theta.get(y) else {
            return Ok(None);
        };
        let d = &mut domains[index[c]];
        let t = dst_index[target];
        if !d.contains(&t) {
            return Ok(None);
        }
        d.retain(|&x| x == t);
    }

    let rel = src.arel.enumerate(Limits::default().max_facts)?;
    let mut constraints = Vec::new();
    for (facts, target) in [(&src.a0, Target::A0), (&rel, Target::Rel)] {
        for f in facts {
            let args: Vec<usize> = f.args().iter().map(|c| index[c]).collect();
            let (explicit, relevant) = match target {
                Target::A0 => (&dst.a0, None),
                Target::Rel => (&dst.arel.explicit, Some(&dst.arel)),
            };
            for (pos, &a) in args.iter().enumerate() {
                let allowed: BTreeSet<usize> =
                    allowed_at(f.predicate(), pos, explicit, relevant).iter().map(|c| dst_index[c]).collect();
                domains[a].retain(|x| allowed.contains(x));
            }
            constraints.push((f.predicate().clone(), args, target));
        }
    }
    if domains.iter().any(BTreeSet::is_empty) {
        return Ok(None);
    }

    let problem = Problem { dst, consts, dst_consts, constraints };
    // Nullary constraints have nothing to search over.
    let empty: Vec<usize> = vec![];
    for c in 0..problem.constraints.len() {
        if problem.constraints[c].1.is_empty() && !problem.satisfied(c, &empty) {
            return Ok(None);
        }
    }

    let mut order: Vec<usize> = (0..problem.consts.len()).collect();
    order.sort_by_key(|&v| (domains[v].len(), v));
    let mut position = vec![0; problem.consts.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    // Each constraint is checked once its last variable in `order` is set.
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (c, (_, args, _)) in problem.constraints.iter().enumerate() {
        if let Some(last) = args.iter().map(|&a| position[a]).max() {
            checks[last].push(c);
        }
    }
    let domains: Vec<Vec<usize>> = domains.into_iter().map(|d| d.into_iter().collect()).collect();
    let mut assign = vec![usize::MAX; order.len()];
    if search(&problem, &order, &domains, &checks, 0, &mut assign) {
        let mu = order.iter().map(|&v| (problem.consts[v].clone(), problem.dst_consts[assign[v]].clone())).collect();
        Ok(Some(SettingHomomorphism { mu }))
    } else {
        Ok(None)
    }
}

fn search(
    problem: &Problem,
    order: &[usize],
    domains: &[Vec<usize>],
    checks: &[Vec<usize>],
    depth: usize,
    assign: &mut [usize],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let var = order[depth];
    for &value in &domains[var] {
        assign[var] = value;
        if checks[depth].iter().all(|&c| problem.satisfied(c, assign))
            && search(problem, order, domains, checks, depth + 1, assign)
        {
            return true;
        }
    }
    assign[var] = usize::MAX;
    false
}
