//! Finite-domain grounding of a TBox to propositional clauses, and a small
//! DPLL solver to decide whether a partial interpretation extends to a
//! model.

use std::collections::BTreeMap;

use crate::model::{Atom, Predicate, TBox, Term, Variable};
use crate::settings::tuples;

/// Literal `v + 1` or `-(v + 1)`.
pub(crate) type Lit = i32;

/// A ground atom over the domain `0..n`.
pub(crate) type GroundAtom = (Predicate, Vec<usize>);

#[derive(Debug, Clone, Default)]
pub(crate) struct Grounding {
    pub atoms: BTreeMap<GroundAtom, usize>,
    pub nvars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

enum Value {
    True,
    False,
    Var(usize),
}

impl Grounding {
    fn var(&mut self, a: GroundAtom) -> usize {
        let next = self.nvars;
        let v = *self.atoms.entry(a).or_insert(next);
        if v == next {
            self.nvars += 1;
        }
        v
    }

    fn fresh(&mut self) -> usize {
        self.nvars += 1;
        self.nvars - 1
    }

    fn value(&mut self, a: &Atom, s: &BTreeMap<Variable, usize>, consts: &BTreeMap<String, usize>) -> Value {
        let args: Vec<usize> = a
            .args()
            .iter()
            .map(|t| match t {
                Term::Var(v) | Term::Exist(v) => s[v],
                Term::Const(c) => consts[c.name()],
            })
            .collect();
        let p = a.predicate();
        if p.is_top() {
            Value::True
        } else if p.is_equality() {
            if args[0] == args[1] {
                Value::True
            } else {
                Value::False
            }
        } else {
            Value::Var(self.var((p.clone(), args)))
        }
    }
}

/// Grounds `t` over `0..n`. Constants are interpreted by `consts`.
pub(crate) fn ground(t: &TBox, n: usize, consts: &BTreeMap<String, usize>) -> Grounding {
    let mut g = Grounding::default();
    let domain: Vec<usize> = (0..n).collect();
    for r in t.rules() {
        let xs = r.universal_variables();
        let ys = r.existentials();
        'inst: for xt in tuples(&domain, xs.len()) {
            let mut s: BTreeMap<Variable, usize> = xs.iter().cloned().zip(xt).collect();
            let mut clause: Vec<Lit> = Vec::new();
            for a in r.body() {
                match g.value(a, &s, consts) {
                    Value::True => {}
                    Value::False => continue 'inst,
                    Value::Var(v) => clause.push(-(v as Lit + 1)),
                }
            }
            let mut aux_clauses = Vec::new();
            for d in r.head() {
                for yt in tuples(&domain, ys.len()) {
                    for (y, e) in ys.iter().zip(yt) {
                        s.insert(y.clone(), e);
                    }
                    let mut lits = Vec::new();
                    let mut dead = false;
                    for a in d {
                        match g.value(a, &s, consts) {
                            Value::True => {}
                            Value::False => dead = true,
                            Value::Var(v) => lits.push(v as Lit + 1),
                        }
                    }
                    if dead {
                        continue;
                    }
                    match lits[..] {
                        [] => continue 'inst,
                        [l] => clause.push(l),
                        _ => {
                            let z = g.fresh() as Lit + 1;
                            clause.push(z);
                            for l in lits {
                                aux_clauses.push(vec![-z, l]);
                            }
                        }
                    }
                }
            }
            g.clauses.push(clause);
            g.clauses.extend(aux_clauses);
        }
    }
    g
}

/// DPLL with unit propagation.
pub(crate) fn satisfiable(nvars: usize, clauses: &[Vec<Lit>]) -> bool {
    let mut assign: Vec<i8> = vec![0; nvars];
    dpll(clauses, &mut assign)
}

fn lit_value(l: Lit, assign: &[i8]) -> i8 {
    let v = assign[(l.unsigned_abs() - 1) as usize];
    if l > 0 {
        v
    } else {
        -v
    }
}

fn dpll(clauses: &[Vec<Lit>], assign: &mut [i8]) -> bool {
    let mut trail: Vec<usize> = Vec::new();
    let undo = |assign: &mut [i8], trail: &[usize]| {
        for &v in trail {
            assign[v] = 0;
        }
    };
    loop {
        let mut changed = false;
        let mut branch: Option<Lit> = None;
        for c in clauses {
            let mut open = None;
            let mut nopen = 0;
            let mut sat = false;
            for &l in c {
                match lit_value(l, assign) {
                    1 => {
                        sat = true;
                        break;
                    }
                    0 => {
                        nopen += 1;
                        open = Some(l);
                    }
                    _ => {}
                }
            }
            if sat {
                continue;
            }
            match (nopen, open) {
                (0, _) => {
                    undo(assign, &trail);
                    return false;
                }
                (1, Some(l)) => {
                    let v = (l.unsigned_abs() - 1) as usize;
                    assign[v] = if l > 0 { 1 } else { -1 };
                    trail.push(v);
                    changed = true;
                }
                (_, Some(l)) => {
                    branch.get_or_insert(l);
                }
                _ => unreachable!(),
            }
        }
        if changed {
            continue;
        }
        let Some(l) = branch else { return true };
        let v = (l.unsigned_abs() - 1) as usize;
        for val in [if l > 0 { 1 } else { -1 }, if l > 0 { -1 } else { 1 }] {
            assign[v] = val;
            if dpll(clauses, assign) {
                return true;
            }
            assign[v] = 0;
        }
        undo(assign, &trail);
        return false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_tbox;

    #[test]
    fn dpll_basics() {
        assert!(satisfiable(2, &[vec![1, 2], vec![-1]]));
        assert!(!satisfiable(1, &[vec![1], vec![-1]]));
        assert!(!satisfiable(2, &[vec![1, 2], vec![-1, 2], vec![1, -2], vec![-1, -2]]));
        assert!(satisfiable(0, &[]));
    }

    #[test]
    fn grounding_forces_existential_witness() {
        let t = parse_tbox("TOP(x) -> exists y . R(x,y), A(y)\nA(x) -> false").unwrap();
        let g = ground(&t, 2, &BTreeMap::new());
        assert!(!satisfiable(g.nvars, &g.clauses));
        let t = parse_tbox("TOP(x) -> exists y . R(x,y), A(y)").unwrap();
        let g = ground(&t, 1, &BTreeMap::new());
        assert!(satisfiable(g.nvars, &g.clauses));
    }

    #[test]
    fn equality_is_identity() {
        let t = parse_tbox("A(x), A(y) -> EQ(x,y)").unwrap();
        let g = ground(&t, 2, &BTreeMap::new());
        let a0 = g.atoms[&(Predicate::new("A", 1), vec![0])] as Lit + 1;
        let a1 = g.atoms[&(Predicate::new("A", 1), vec![1])] as Lit + 1;
        let mut cs = g.clauses.clone();
        cs.push(vec![a0]);
        cs.push(vec![a1]);
        assert!(!satisfiable(g.nvars, &cs));
    }
}
