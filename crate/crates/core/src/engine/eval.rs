//! Semi-naive materialisation followed by a full instance enumeration pass.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::store::{FactId, FactStore, Interner};
use super::{DatalogProgram, ProofTree};
use crate::model::{ABox, Atom, Constant, Fact, Predicate, Term, Variable};

const UNBOUND: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Const(u32),
    Var(usize),
}

#[derive(Debug, Clone)]
struct CAtom {
    pred: u32,
    args: Vec<Slot>,
}

#[derive(Debug, Clone)]
struct CRule {
    body: Vec<CAtom>,
    head: CAtom,
    nvars: usize,
}

/// One body atom in a join order, with what is known when it is reached.
#[derive(Debug, Clone)]
struct Step {
    atom: usize,
    pred: u32,
    arity: usize,
    /// Positions fixed before this step (constants and earlier variables).
    mask: u32,
    key: Vec<Slot>,
    /// Positions binding a variable for the first time.
    binds: Vec<(usize, usize)>,
    /// Positions repeating a variable first bound in this same atom.
    checks: Vec<(usize, usize)>,
    /// `TOP(z)` with `z` used nowhere else: one match stands for all.
    witness: bool,
}

fn plan(rule: &CRule, order: &[usize], top: u32) -> Vec<Step> {
    let mut uses = vec![0usize; rule.nvars];
    for a in rule.body.iter().chain(std::iter::once(&rule.head)) {
        for slot in &a.args {
            if let Slot::Var(v) = *slot {
                uses[v] += 1;
            }
        }
    }
    let mut bound = vec![false; rule.nvars];
    let mut steps = Vec::with_capacity(order.len());
    for &ai in order {
        let atom = &rule.body[ai];
        let mut mask = 0u32;
        let mut key = Vec::new();
        let mut binds = Vec::new();
        let mut checks = Vec::new();
        let mut local: Vec<usize> = Vec::new();
        for (pos, slot) in atom.args.iter().enumerate() {
            match *slot {
                Slot::Const(_) => {
                    mask |= 1 << pos;
                    key.push(*slot);
                }
                Slot::Var(v) if bound[v] => {
                    mask |= 1 << pos;
                    key.push(*slot);
                }
                Slot::Var(v) if local.contains(&v) => checks.push((pos, v)),
                Slot::Var(v) => {
                    local.push(v);
                    binds.push((pos, v));
                }
            }
        }
        let witness = atom.pred == top && matches!(atom.args[..], [Slot::Var(v)] if uses[v] == 1);
        for v in local {
            bound[v] = true;
        }
        steps.push(Step { atom: ai, pred: atom.pred, arity: atom.args.len(), mask, key, binds, checks, witness });
    }
    steps
}

fn full_mask(arity: usize) -> u32 {
    if arity == 0 {
        0
    } else {
        (1u32 << arity) - 1
    }
}

/// A recorded rule application: `rule` fired on `body` (in body atom order)
/// and produced `head`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub rule: usize,
    pub head: FactId,
    /// Start of the body in the materialisation's body arena.
    body: u64,
}

/// Closed fact set plus every rule instance applicable over it.
#[derive(Debug, Clone)]
pub struct Materialisation {
    pub(crate) interner: Interner,
    pub(crate) store: FactStore,
    instances: Vec<Instance>,
    bodies: Vec<FactId>,
    rule_arity: Vec<u32>,
    /// Instances grouped by head fact: `by_head[offsets[f]..offsets[f+1]]`.
    head_offsets: Vec<u32>,
    by_head: Vec<u32>,
}

struct Evaluator<'a> {
    rules: &'a [CRule],
    store: &'a FactStore,
}

impl<'a> Evaluator<'a> {
    fn candidates(&self, step: &Step, binding: &[u32], range: Option<(usize, usize)>) -> Cand<'a> {
        let rel = match self.store.relations.get(step.pred as usize) {
            Some(r) => r,
            None => return Cand::Slice(&[]),
        };
        if let Some((lo, hi)) = range {
            return Cand::Slice(&rel.ids[lo..hi]);
        }
        if step.mask == 0 {
            return Cand::Slice(&rel.ids);
        }
        // Slot 0 holds the predicate, for full-key lookups.
        let mut buf = [0u32; 16];
        let mut heap = Vec::new();
        let full: &mut [u32] = if step.key.len() < buf.len() {
            &mut buf[..step.key.len() + 1]
        } else {
            heap.resize(step.key.len() + 1, 0);
            &mut heap
        };
        full[0] = step.pred;
        for (slot, s) in full[1..].iter_mut().zip(&step.key) {
            *slot = match *s {
                Slot::Const(c) => c,
                Slot::Var(v) => binding[v],
            };
        }
        if step.mask == full_mask(step.arity) {
            return match self.store.find(full) {
                Some(id) => Cand::One(id),
                None => Cand::Slice(&[]),
            };
        }
        Cand::Slice(self.store.lookup(step.pred, step.mask, &full[1..]))
    }

    /// Enumerates all matches of `steps`; the first step may be restricted
    /// to a range of its relation.
    fn join(
        &self,
        steps: &[Step],
        depth: usize,
        binding: &mut Vec<u32>,
        chosen: &mut Vec<FactId>,
        first_range: Option<(usize, usize)>,
        emit: &mut dyn FnMut(&[u32], &[FactId]),
    ) {
        if depth == steps.len() {
            emit(binding, chosen);
            return;
        }
        let step = &steps[depth];
        let range = if depth == 0 { first_range } else { None };
        let cands = self.candidates(step, binding, range);
        let ids: &[FactId] = match &cands {
            Cand::Slice(s) => s,
            Cand::One(id) => std::slice::from_ref(id),
        };
        for &fid in ids {
            let args = self.store.args_of(fid);
            if !self.matches(step, binding, args) {
                continue;
            }
            for &(pos, v) in &step.binds {
                binding[v] = args[pos];
            }
            chosen[step.atom] = fid;
            self.join(steps, depth + 1, binding, chosen, first_range, emit);
            for &(_, v) in &step.binds {
                binding[v] = UNBOUND;
            }
            if step.witness {
                break;
            }
        }
    }

    fn matches(&self, step: &Step, binding: &[u32], args: &[u32]) -> bool {
        let mut key = step.key.iter();
        for (pos, &arg) in args.iter().enumerate().take(step.arity) {
            if step.mask & (1 << pos) != 0 {
                let want = match *key.next().expect("one key slot per masked position") {
                    Slot::Const(c) => c,
                    Slot::Var(v) => binding[v],
                };
                if arg != want {
                    return false;
                }
            }
        }
        step.checks.iter().all(|&(pos, v)| {
            let first = step.binds.iter().find(|(_, bv)| *bv == v).map(|(p, _)| args[*p]).unwrap_or(UNBOUND);
            args[pos] == first
        })
    }

    /// Writes the head fact of `rule` under `binding` into `key`.
    fn head_key(&self, rule: usize, binding: &[u32], key: &mut Vec<u32>) {
        let head = &self.rules[rule].head;
        key.clear();
        key.push(head.pred);
        key.extend(head.args.iter().map(|s| match *s {
            Slot::Const(c) => c,
            Slot::Var(v) => binding[v],
        }));
    }
}

enum Cand<'a> {
    Slice(&'a [FactId]),
    One(FactId),
}

fn compile_atom(a: &Atom, interner: &mut Interner, vars: &mut HashMap<Variable, usize>) -> CAtom {
    let args = a
        .args()
        .iter()
        .map(|t| match t {
            Term::Const(c) => Slot::Const(interner.constant(c)),
            Term::Var(v) | Term::Exist(v) => {
                let n = vars.len();
                Slot::Var(*vars.entry(v.clone()).or_insert(n))
            }
        })
        .collect();
    CAtom { pred: interner.pred(a.predicate()), args }
}

fn compile(program: &DatalogProgram, interner: &mut Interner) -> Vec<CRule> {
    program
        .rules
        .iter()
        .map(|r| {
            let mut vars = HashMap::new();
            let body: Vec<CAtom> = r.body.iter().map(|a| compile_atom(a, interner, &mut vars)).collect();
            let head = compile_atom(&r.head, interner, &mut vars);
            CRule { body, head, nvars: vars.len() }
        })
        .collect()
}

/// Stand-in domain element for constant-free programs and seeds.
pub const DOMAIN_CONSTANT: &str = "@dom";

/// Computes the least fixpoint of `p` over `seed`, then records every rule
/// instance applicable over the final fact set. A `TOP(z)` atom whose
/// variable occurs nowhere else in its rule is matched once, since the
/// instances it would multiply differ only in seeded `TOP` leaves.
///
/// `TOP(c)` is seeded for every constant of the program and the seed. With
/// no constants at all, a single `@dom` constant stands in for the domain,
/// which is never empty.
pub fn materialise(p: &DatalogProgram, seed: &ABox) -> Materialisation {
    let mut interner = Interner::default();
    let top = interner.pred(&Predicate::top());
    let rules = compile(p, &mut interner);
    for f in seed {
        interner.pred(f.predicate());
        for c in f.args() {
            interner.constant(c);
        }
    }
    if interner.consts.is_empty() {
        interner.constant(&Constant::new(DOMAIN_CONSTANT));
    }

    let mut store = FactStore::default();
    store.ensure_pred(interner.preds.len() as u32);

    let full_plans: Vec<Vec<Step>> =
        rules.iter().map(|r| plan(r, &(0..r.body.len()).collect::<Vec<_>>(), top)).collect();
    // (rule, delta position) plans, grouped by the delta atom's predicate.
    let mut delta_plans: Vec<Vec<(usize, Vec<Step>)>> = vec![Vec::new(); interner.preds.len()];
    for (ri, r) in rules.iter().enumerate() {
        for pos in 0..r.body.len() {
            let mut order = vec![pos];
            order.extend((0..r.body.len()).filter(|&i| i != pos));
            delta_plans[r.body[pos].pred as usize].push((ri, plan(r, &order, top)));
        }
    }
    for steps in full_plans.iter().chain(delta_plans.iter().flatten().map(|(_, s)| s)) {
        for s in steps {
            if s.mask != 0 && s.mask != full_mask(s.arity) {
                store.relations[s.pred as usize].ensure_index(s.mask);
            }
        }
    }

    for f in seed {
        let mut key = vec![interner.find_pred(f.predicate()).unwrap()];
        key.extend(f.args().iter().map(|c| interner.find_const(c).unwrap()));
        store.insert(&key, 0);
    }
    for c in 0..interner.consts.len() as u32 {
        store.insert(&[top, c], 0);
    }

    // Round 1 is naive; later rounds only join against the previous delta.
    // New head keys, each prefixed by its length.
    let mut pending: Vec<u32> = Vec::new();
    let mut key = Vec::new();
    {
        let ev = Evaluator { rules: &rules, store: &store };
        for (ri, steps) in full_plans.iter().enumerate() {
            let mut binding = vec![UNBOUND; rules[ri].nvars];
            let mut chosen = vec![0; rules[ri].body.len()];
            ev.join(steps, 0, &mut binding, &mut chosen, None, &mut |b, _| {
                ev.head_key(ri, b, &mut key);
                if store.find(&key).is_none() {
                    pending.push(key.len() as u32);
                    pending.extend_from_slice(&key);
                }
            });
        }
    }
    let mut round = 1;
    let mut stamp = vec![0; interner.preds.len()];
    loop {
        // Predicate and relation size before this round, for each one that grew.
        let mut grown: Vec<(usize, usize)> = Vec::new();
        let mut at = 0;
        while at < pending.len() {
            let len = pending[at] as usize;
            let key = &pending[at + 1..at + 1 + len];
            at += 1 + len;
            let pred = key[0] as usize;
            let lo = store.relations.get(pred).map_or(0, |r| r.ids.len());
            if store.insert(key, round).is_some() && stamp[pred] != round {
                stamp[pred] = round;
                grown.push((pred, lo));
            }
        }
        pending.clear();
        grown.sort_unstable();
        let deltas: Vec<(usize, usize, usize)> =
            grown.into_iter().map(|(p, lo)| (p, lo, store.relations[p].ids.len())).collect();
        if deltas.is_empty() {
            break;
        }
        round += 1;
        let ev = Evaluator { rules: &rules, store: &store };
        for &(pred, lo, hi) in &deltas {
            let Some(plans) = delta_plans.get(pred) else {
                continue;
            };
            for (ri, steps) in plans {
                let ri = *ri;
                let mut binding = vec![UNBOUND; rules[ri].nvars];
                let mut chosen = vec![0; rules[ri].body.len()];
                ev.join(steps, 0, &mut binding, &mut chosen, Some((lo, hi)), &mut |b, _| {
                    ev.head_key(ri, b, &mut key);
                    if store.find(&key).is_none() {
                        pending.push(key.len() as u32);
                        pending.extend_from_slice(&key);
                    }
                });
            }
        }
    }

    let mut instances = Vec::new();
    let mut bodies = Vec::new();
    {
        let ev = Evaluator { rules: &rules, store: &store };
        for (ri, steps) in full_plans.iter().enumerate() {
            let mut binding = vec![UNBOUND; rules[ri].nvars];
            let mut chosen = vec![0; rules[ri].body.len()];
            ev.join(steps, 0, &mut binding, &mut chosen, None, &mut |b, body| {
                ev.head_key(ri, b, &mut key);
                let head = store.find(&key).expect("fixpoint is closed under every rule");
                instances.push(Instance { rule: ri, head, body: bodies.len() as u64 });
                bodies.extend_from_slice(body);
            });
        }
    }

    let mut counts = vec![0u32; store.len() + 1];
    for inst in &instances {
        counts[inst.head as usize + 1] += 1;
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    let mut fill = counts.clone();
    let mut by_head = vec![0u32; instances.len()];
    for (i, inst) in instances.iter().enumerate() {
        let slot = &mut fill[inst.head as usize];
        by_head[*slot as usize] = i as u32;
        *slot += 1;
    }

    Materialisation {
        interner,
        store,
        instances,
        bodies,
        rule_arity: rules.iter().map(|r| r.body.len() as u32).collect(),
        head_offsets: counts,
        by_head,
    }
}

impl Materialisation {
    /// Number of facts, seed included.
    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.len() == 0
    }

    pub fn fact(&self, id: FactId) -> Fact {
        self.store.to_fact(&self.interner, id)
    }

    pub fn fact_id(&self, f: &Fact) -> Option<FactId> {
        let key = self.store.key_of(&self.interner, f)?;
        self.store.find(&key)
    }

    pub fn contains(&self, f: &Fact) -> bool {
        self.fact_id(f).is_some()
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        (0..self.store.len() as FactId).map(|id| self.fact(id))
    }

    pub fn fact_set(&self) -> ABox {
        self.facts().collect()
    }

    /// Ids of the facts over `p`.
    pub fn facts_of(&self, p: &Predicate) -> &[FactId] {
        self.interner
            .find_pred(p)
            .and_then(|id| self.store.relations.get(id as usize))
            .map(|r| r.ids.as_slice())
            .unwrap_or(&[])
    }

    pub(crate) fn const_id(&self, c: &Constant) -> Option<u32> {
        self.interner.find_const(c)
    }

    pub(crate) fn args_of(&self, id: FactId) -> &[u32] {
        self.store.args_of(id)
    }

    /// True for seed facts and the seeded `TOP` facts.
    pub fn is_seed(&self, id: FactId) -> bool {
        self.store.rank[id as usize] == 0
    }

    /// Round in which the fact was first derived; 0 for seed facts.
    pub fn rank(&self, id: FactId) -> u32 {
        self.store.rank[id as usize]
    }

    /// Body facts of `inst`, in body atom order.
    pub fn body(&self, inst: &Instance) -> &[FactId] {
        let lo = inst.body as usize;
        &self.bodies[lo..lo + self.rule_arity[inst.rule] as usize]
    }

    /// Number of datalog rules of the program.
    pub fn rule_count(&self) -> usize {
        self.rule_arity.len()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    /// Indices into [`instances`](Self::instances) of the instances deriving `f`.
    pub fn instance_ids_for(&self, f: FactId) -> &[u32] {
        let lo = self.head_offsets[f as usize] as usize;
        let hi = self.head_offsets[f as usize + 1] as usize;
        &self.by_head[lo..hi]
    }

    /// Instances deriving `f`.
    pub fn instances_for(&self, f: FactId) -> impl Iterator<Item = &Instance> {
        self.instance_ids_for(f).iter().map(|&i| &self.instances[i as usize])
    }

    /// Proof of `f` in which every derived fact is obtained from facts of
    /// strictly lower rank.
    pub fn proof(&self, f: FactId) -> ProofTree {
        if self.is_seed(f) {
            return ProofTree { fact: self.fact(f), rule: None, children: Vec::new() };
        }
        let inst = self.grounded_instance(f);
        ProofTree {
            fact: self.fact(f),
            rule: Some(inst.rule),
            children: self.body(inst).iter().map(|&b| self.proof(b)).collect(),
        }
    }

    pub(crate) fn grounded_instance(&self, f: FactId) -> &Instance {
        let rank = self.rank(f);
        self.instances_for(f)
            .find(|i| self.body(i).iter().all(|&b| self.rank(b) < rank))
            .expect("every derived fact has an instance over lower-ranked facts")
    }

    /// Line-oriented dump of the derivation hypergraph.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sorted: BTreeSet<Fact> = self.facts().collect();
        for f in &sorted {
            let _ = writeln!(out, "FACT {f}");
        }
        let mut lines: Vec<String> = self
            .instances
            .iter()
            .map(|i| {
                let body: Vec<String> = self.body(i).iter().map(|&b| self.fact(b).to_string()).collect();
                format!("INST {} {} <- {}", i.rule, self.fact(i.head), body.join(","))
            })
            .collect();
        lines.sort();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{translate, Substitution};
    use crate::textio::parse_tbox;

    fn program(text: &str, theta: &[(&str, &str)]) -> DatalogProgram {
        let t = parse_tbox(text).unwrap();
        let th: Substitution = theta.iter().map(|(v, c)| (Variable::new(v), Constant::new(c))).collect();
        translate(&t, &th).unwrap()
    }

    fn abox(facts: &[Fact]) -> ABox {
        facts.iter().cloned().collect()
    }

    #[test]
    fn empty_program_seeds_top() {
        let m = materialise(&DatalogProgram::default(), &abox(&[Fact::of("B", &["s"])]));
        assert_eq!(m.len(), 2);
        assert!(m.contains(&Fact::of("TOP", &["s"])));
        assert!(m.instances().is_empty());
    }

    #[test]
    fn transitive_closure() {
        let p = program("E(x,y) -> T(x,y)\nT(x,y), E(y,z) -> T(x,z)", &[]);
        let seed = abox(&[Fact::of("E", &["a", "b"]), Fact::of("E", &["b", "c"]), Fact::of("E", &["c", "d"])]);
        let m = materialise(&p, &seed);
        let t: BTreeSet<_> = m.facts().filter(|f| f.predicate().name() == "T").collect();
        assert_eq!(t.len(), 6);
        assert!(m.contains(&Fact::of("T", &["a", "d"])));
    }

    #[test]
    fn isolated_top_is_matched_once() {
        let p = program("A(x), TOP(z) -> B(x)\nA(x), TOP(z) -> R(x,z)", &[]);
        let seed = abox(&[Fact::of("A", &["a"]), Fact::of("A", &["b"]), Fact::of("C", &["c"])]);
        let m = materialise(&p, &seed);
        let b = m.fact_id(&Fact::of("B", &["a"])).unwrap();
        assert_eq!(m.instances_for(b).count(), 1);
        // z reaches the head here, so every constant counts.
        let r: Vec<_> = m.facts().filter(|f| f.predicate().name() == "R").collect();
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn repeated_variable_and_constants() {
        let p = program("R(x,x) -> L(x)\nR(x,:k) -> K(x)", &[]);
        let seed = abox(&[Fact::of("R", &["a", "a"]), Fact::of("R", &["a", "b"]), Fact::of("R", &["b", "k"])]);
        let m = materialise(&p, &seed);
        assert!(m.contains(&Fact::of("L", &["a"])));
        assert!(!m.contains(&Fact::of("L", &["b"])));
        assert!(m.contains(&Fact::of("K", &["b"])));
        assert!(!m.contains(&Fact::of("K", &["a"])));
    }

    #[test]
    fn records_instances_completed_after_head() {
        // B(a) is derived in round 1 by the first rule; the second rule's
        // instance for B(a) only completes once C(a) exists.
        let p = program("A(x) -> B(x)\nA(x) -> C(x)\nC(x) -> D(x)\nD(x), A(x) -> B(x)", &[]);
        let m = materialise(&p, &abox(&[Fact::of("A", &["a"])]));
        let b = m.fact_id(&Fact::of("B", &["a"])).unwrap();
        let rules: BTreeSet<usize> = m.instances_for(b).map(|i| i.rule).collect();
        assert_eq!(rules, BTreeSet::from([0, 3]));
    }

    #[test]
    fn bottom_is_a_fact() {
        let p = program("G(x), H(x) -> false\nG(x) -> K(x)", &[]);
        let m = materialise(&p, &abox(&[Fact::of("G", &["a"]), Fact::of("H", &["a"])]));
        assert!(m.contains(&Fact::bottom()));
        assert!(m.contains(&Fact::of("K", &["a"])));
    }

    #[test]
    fn dump_format() {
        let p = program("A(x) -> B(x)", &[]);
        let m = materialise(&p, &abox(&[Fact::of("A", &["a"])]));
        assert_eq!(m.dump(), "FACT A(:a)\nFACT B(:a)\nFACT TOP(:a)\nINST 0 B(:a) <- A(:a)\n");
    }

    #[test]
    fn proofs_are_well_founded() {
        let p = program("E(x,y) -> T(x,y)\nT(x,y), T(y,z) -> T(x,z)", &[]);
        let seed = abox(&[Fact::of("E", &["a", "b"]), Fact::of("E", &["b", "c"]), Fact::of("E", &["c", "a"])]);
        let m = materialise(&p, &seed);
        let goal = m.fact_id(&Fact::of("T", &["a", "a"])).unwrap();
        let proof = m.proof(goal);
        assert!(proof.depth() >= 2);
        assert!(proof.check(&p, &seed));
    }
}
