//! Synthetic TBoxes: a seven-rule example, seeded random corpora and large
//! chain-shaped TBoxes for scalability runs.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::TBox;
use crate::textio::parse_tbox;

/// The seven-rule example TBox used throughout the tests.
pub const EXAMPLE_TBOX: &str = "\
A(x) -> exists y1 . R(x,y1), B(y1)
A(x) -> exists y2 . R(x,y2), C(y2)
B(x), C(x) -> D(x)
D(x) -> exists y3 . S(x,y3), E(y3)
D(x), S(x,y) -> F(y)
S(x,y), E(y), F(y) -> G(x)
G(x), H(x) -> false
";

pub fn example_tbox() -> TBox {
    parse_tbox(EXAMPLE_TBOX).expect("example parses")
}

/// Shape parameters for [`random_tbox`].
#[derive(Debug, Clone, Copy)]
pub struct CorpusParams {
    pub max_rules: usize,
    pub max_predicates: usize,
    pub max_arity: usize,
    pub max_body: usize,
    pub max_head_atoms: usize,
    /// Probability that a rule head has existential variables.
    pub existential: f64,
    /// Probability of a second head disjunct.
    pub disjunction: f64,
    /// Probability of a `false` head.
    pub constraint: f64,
    /// Probability of a `TOP(x)` body.
    pub top_body: f64,
}

impl CorpusParams {
    /// Up to 12 rules over up to 6 predicates of arity at most 2.
    pub fn standard() -> Self {
        CorpusParams {
            max_rules: 12,
            max_predicates: 6,
            max_arity: 2,
            max_body: 3,
            max_head_atoms: 2,
            existential: 0.35,
            disjunction: 0.2,
            constraint: 0.08,
            top_body: 0.05,
        }
    }

    /// Up to 8 rules over up to 4 predicates, small enough for the oracles.
    pub fn micro() -> Self {
        CorpusParams {
            max_rules: 8,
            max_predicates: 4,
            max_arity: 2,
            max_body: 2,
            max_head_atoms: 2,
            existential: 0.3,
            disjunction: 0.15,
            constraint: 0.08,
            top_body: 0.05,
        }
    }

    /// Datalog only: single head atoms, no existentials.
    pub fn datalog(self) -> Self {
        CorpusParams { existential: 0.0, disjunction: 0.0, max_head_atoms: 1, ..self }
    }
}

const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];
const VARS: [&str; 3] = ["x", "y", "z"];

fn atom(name: &str, args: &[&str]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(","))
    }
}

/// Rule text for one random rule over `preds` (name, arity).
fn random_rule(rng: &mut ChaCha8Rng, preds: &[(&str, usize)], p: &CorpusParams) -> String {
    let mut body = Vec::new();
    let mut body_vars: Vec<&str> = Vec::new();
    if rng.gen_bool(p.top_body) {
        body.push("TOP(x)".to_string());
        body_vars.push("x");
    } else {
        let n = rng.gen_range(1..=p.max_body);
        for _ in 0..n {
            let (name, arity) = *preds.choose(rng).expect("predicates");
            let args: Vec<&str> = (0..arity).map(|_| *VARS.choose(rng).expect("vars")).collect();
            for a in &args {
                if !body_vars.contains(a) {
                    body_vars.push(a);
                }
            }
            body.push(atom(name, &args));
        }
    }
    let body = body.join(", ");
    if rng.gen_bool(p.constraint) {
        return format!("{body} -> false");
    }

    let exist = rng.gen_bool(p.existential);
    let mut pool: Vec<&str> = body_vars.clone();
    if exist {
        pool.push("w");
    }
    // Nullary predicates need no terms; everything else needs a pool.
    let usable: Vec<(&str, usize)> = preds.iter().copied().filter(|(_, a)| *a == 0 || !pool.is_empty()).collect();
    if usable.is_empty() {
        return format!("{body} -> false");
    }
    let disjuncts = if rng.gen_bool(p.disjunction) { 2 } else { 1 };
    let mut head = Vec::new();
    let mut uses_w = false;
    for _ in 0..disjuncts {
        let n = rng.gen_range(1..=p.max_head_atoms);
        let mut conj = Vec::new();
        for _ in 0..n {
            let (name, arity) = *usable.choose(rng).expect("usable");
            let args: Vec<&str> = (0..arity).map(|_| *pool.choose(rng).expect("pool")).collect();
            uses_w |= args.contains(&"w");
            conj.push(atom(name, &args));
        }
        head.push(conj.join(", "));
    }
    let quant = if uses_w { "exists w . " } else { "" };
    format!("{body} -> {quant}{}", head.join(" | "))
}

/// A seeded random TBox with the given shape.
pub fn random_tbox(seed: u64, p: &CorpusParams) -> TBox {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let npreds = rng.gen_range(2..=p.max_predicates.min(NAMES.len()));
    let preds: Vec<(&str, usize)> = NAMES[..npreds]
        .iter()
        .map(|&n| {
            // Mostly unary, some binary, the odd nullary.
            let arity = match rng.gen_range(0..10) {
                0 => 0,
                1..=6 => 1,
                _ => 2,
            }
            .min(p.max_arity);
            (n, arity)
        })
        .collect();
    let nrules = rng.gen_range(1..=p.max_rules);
    let mut text = String::new();
    for _ in 0..nrules {
        let _ = writeln!(text, "{}", random_rule(&mut rng, &preds, p));
    }
    parse_tbox(&text).unwrap_or_else(|e| panic!("generated rule text must parse: {e}\n{text}"))
}

/// `count` random TBoxes with seeds `base..base+count`.
pub fn corpus(base: u64, count: usize, p: &CorpusParams) -> Vec<TBox> {
    (0..count as u64).map(|i| random_tbox(base + i, p)).collect()
}

/// A chain-shaped TBox with exactly `n` rules and at most three variables
/// per rule. Blocks of four rules create a fresh successor, branch on a
/// disjunction, join back through the successor and step on.
pub fn chain_tbox(n: usize) -> TBox {
    let mut text = String::with_capacity(n * 40);
    for k in 0..n {
        let j = k / 4;
        let a = |i: usize| format!("A{i}");
        let line = match k % 4 {
            0 => format!("{}(x) -> exists y . R{j}(x,y), {}(y)", a(k), a(k + 1)),
            1 => format!("{}(x) -> {}(x) | B{j}(x)", a(k), a(k + 1)),
            2 => format!("R{j}(x,y), {}(y) -> {}(x)", a(k), a(k + 1)),
            _ if j % 25 == 24 => format!("{}(x), B{j}(x) -> false", a(k)),
            _ => format!("{}(x), TOP(z) -> {}(x)", a(k), a(k + 1)),
        };
        text.push_str(&line);
        text.push('\n');
    }
    parse_tbox(&text).expect("chain parses")
}

/// `n` unary predicates linked by `P_i(x) -> P_{i+1}(x)` (n - 1 rules).
pub fn predicate_chain(n: usize) -> TBox {
    let mut text = String::new();
    for i in 0..n.saturating_sub(1) {
        let _ = writeln!(text, "P{i}(x) -> P{}(x)", i + 1);
    }
    parse_tbox(&text).expect("chain parses")
}
