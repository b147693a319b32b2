use std::collections::BTreeSet;

use proptest::prelude::*;

use modex::engine::{compute_support, entails_fact, materialise, translate, DatalogProgram, DOMAIN_CONSTANT};
use modex::extract::expected_containments;
use modex::sampling::sample_random_signature;
use modex::settings::{build_setting, find_homomorphism};
use modex::synth::{random_tbox, CorpusParams};
use modex::textio::{parse_signature, serialize_signature, serialize_tbox};
use modex::{
    extract, parse_tbox, ABox, Constant, ExtractOptions, Fact, ModuleKind, RuleId, SettingKind, SignatureSet, TBox,
};

const CHAIN_KINDS: [SettingKind; 6] =
    [SettingKind::I, SettingKind::F, SettingKind::Q, SettingKind::M, SettingKind::B, SettingKind::C];

fn instance(seed: u64, p: f64) -> (TBox, SignatureSet) {
    let t = random_tbox(seed, &CorpusParams::standard());
    let sig = sample_random_signature(&t, p, seed ^ 0x5eed).unwrap();
    (t, sig)
}

/// Σ may leave the TBox after restriction, so extraction is not strict.
fn module(t: &TBox, sig: &SignatureSet, kind: impl Into<ModuleKind>) -> BTreeSet<RuleId> {
    let opts = ExtractOptions { strict_signature: false, ..ExtractOptions::default() };
    extract(t, sig, kind.into(), &opts).unwrap().report.all_rule_ids()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn hierarchy_holds(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        for (a, b) in expected_containments() {
            let (ma, mb) = (module(&t, &sig, a), module(&t, &sig, b));
            prop_assert!(ma.is_subset(&mb), "{a} {ma:?} not in {b} {mb:?}");
        }
    }

    #[test]
    fn modules_are_idempotent_and_depleting(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        for kind in CHAIN_KINDS {
            let ids = module(&t, &sig, kind);
            let m = t.restrict(&ids);
            prop_assert_eq!(&module(&m, &sig, kind), &ids, "{} not idempotent", kind);
            let rest = t.without(&ids);
            prop_assert!(module(&rest, &sig, kind).is_empty(), "{} not depleting", kind);
        }
    }

    #[test]
    fn canonical_settings_agree(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        prop_assert_eq!(module(&t, &sig, SettingKind::I), module(&t, &sig, SettingKind::I0));
        prop_assert_eq!(module(&t, &sig, SettingKind::C), module(&t, &sig, SettingKind::C0));
    }

    #[test]
    fn homomorphisms_imply_containment(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        let settings: Vec<_> = CHAIN_KINDS.iter().map(|&k| build_setting(&t, &sig, k).unwrap()).collect();
        for (i, a) in settings.iter().enumerate() {
            for (j, b) in settings.iter().enumerate() {
                if let Some(h) = find_homomorphism(a, b).unwrap() {
                    prop_assert!(h.verify(a, b).unwrap());
                    let (ma, mb) = (module(&t, &sig, CHAIN_KINDS[i]), module(&t, &sig, CHAIN_KINDS[j]));
                    prop_assert!(ma.is_subset(&mb), "{} -> {}", CHAIN_KINDS[i], CHAIN_KINDS[j]);
                }
            }
        }
    }

    #[test]
    fn chain_homomorphisms_exist(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        use SettingKind::*;
        for (a, b) in [(I, F), (F, Q), (Q, M), (M, B), (I, C), (C, B)] {
            let sa = build_setting(&t, &sig, a).unwrap();
            let sb = build_setting(&t, &sig, b).unwrap();
            prop_assert!(find_homomorphism(&sa, &sb).unwrap().is_some(), "{} -> {}", a, b);
        }
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let t = random_tbox(seed, &CorpusParams::standard());
        let text = serialize_tbox(&t);
        let again = parse_tbox(&text).unwrap();
        prop_assert_eq!(serialize_tbox(&again), text);
        prop_assert_eq!(again.len(), t.len());
        let sig = t.signature();
        prop_assert_eq!(parse_signature(&serialize_signature(&sig)).unwrap(), sig);
    }
}

fn seed_abox(t: &TBox, picks: &[(usize, [usize; 2])]) -> ABox {
    let preds: Vec<_> = t.signature().symbols().cloned().collect();
    let consts = ["a", "b", "c"].map(Constant::new);
    let mut out = ABox::new();
    if preds.is_empty() {
        return out;
    }
    for (p, args) in picks {
        let p = &preds[p % preds.len()];
        let args = args[..p.arity()].iter().map(|&i| consts[i % 3].clone()).collect();
        out.insert(Fact::new(p.clone(), args).unwrap());
    }
    out
}

fn datalog_program(seed: u64) -> (TBox, DatalogProgram) {
    let t = random_tbox(seed, &CorpusParams::standard().datalog());
    let p = DatalogProgram::from_datalog_tbox(&t).unwrap();
    (t, p)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn materialisation_is_a_closed_superset(
        seed in any::<u64>(),
        picks in prop::collection::vec((0usize..8, [0usize..3, 0usize..3]), 0..6),
    ) {
        let (t, p) = datalog_program(seed);
        let abox = seed_abox(&t, &picks);
        let m = materialise(&p, &abox);
        let facts = m.fact_set();
        prop_assert!(abox.is_subset(&facts));
        // Materialising again from the result adds nothing new.
        let again = materialise(&p, &facts).fact_set();
        prop_assert_eq!(&again, &facts);
        for f in &facts {
            prop_assert!(entails_fact(&p, &abox, f));
        }
    }

    #[test]
    fn materialisation_is_monotone(
        seed in any::<u64>(),
        picks in prop::collection::vec((0usize..8, [0usize..3, 0usize..3]), 0..6),
        extra in prop::collection::vec((0usize..8, [0usize..3, 0usize..3]), 0..3),
    ) {
        let (t, p) = datalog_program(seed);
        let small = seed_abox(&t, &picks);
        let mut big = small.clone();
        big.extend(seed_abox(&t, &extra));
        // An empty seed gets a placeholder domain element; ignore it.
        let dom = Constant::new(DOMAIN_CONSTANT);
        let small: ABox = materialise(&p, &small).fact_set().into_iter().filter(|f| !f.args().contains(&dom)).collect();
        prop_assert!(small.is_subset(&materialise(&p, &big).fact_set()));
    }

    #[test]
    fn proofs_check_and_support_covers_them(
        seed in any::<u64>(),
        picks in prop::collection::vec((0usize..8, [0usize..3, 0usize..3]), 1..6),
    ) {
        let (t, p) = datalog_program(seed);
        let abox = seed_abox(&t, &picks);
        let m = materialise(&p, &abox);
        let all: ABox = m.fact_set();
        let support = compute_support(&m, &all);
        for f in &all {
            let id = m.fact_id(f).unwrap();
            let proof = m.proof(id);
            prop_assert!(proof.check(&p, &abox));
            prop_assert!(proof.rules_used().iter().all(|r| support.rules.contains(r)));
        }
    }

    #[test]
    fn translation_keeps_source_ids(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let (t, sig) = instance(seed, p);
        let setting = build_setting(&t, &sig, SettingKind::F).unwrap();
        let program = translate(&t, &setting.theta).unwrap();
        let ids = t.ids();
        prop_assert!(program.rules.iter().all(|r| ids.contains(&r.source)));
    }
}
