//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any of them fails.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modex::extract::expected_containments;
use modex::oracle::{
    check_inseparability, compare_materialisation, enumerate_justifications, sigma_implications, Agreement, Bounds,
    HyperLimits, InsepRelation, Verdict,
};
use modex::sampling::{sample_genuine_signatures, sample_random_signature};
use modex::settings::{build_setting_with, find_homomorphism, Limits};
use modex::synth::{chain_tbox, corpus, example_tbox, CorpusParams};
use modex::textio::serialize_tbox;
use modex::{
    extract, parse_signature, parse_tbox, run_batch, ABox, BatchConfig, Constant, ExtractOptions, Fact, LocalityKind,
    ModuleKind, RuleId, SamplingMode, SettingKind, SignatureSet, TBox,
};

const CORPUS_SIZE: usize = 500;
const MICRO_SIZE: usize = 80;
const CHAIN_RULES: usize = 50_000;
const CHAIN_SAMPLES: usize = 100;
const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const HIERARCHY_LIMIT: Duration = Duration::from_secs(60);
const EXTRACT_LIMIT: Duration = Duration::from_secs(5);
const MEMORY_LIMIT_KB: u64 = 2 * 1024 * 1024;

const CHAIN_KINDS: [SettingKind; 6] =
    [SettingKind::I, SettingKind::F, SettingKind::Q, SettingKind::M, SettingKind::B, SettingKind::C];

type Ids = BTreeSet<RuleId>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn sig(text: &str) -> SignatureSet {
    parse_signature(text).unwrap()
}

fn lenient() -> ExtractOptions {
    ExtractOptions { strict_signature: false, ..ExtractOptions::default() }
}

fn module(t: &TBox, sigma: &SignatureSet, kind: impl Into<ModuleKind>) -> Ids {
    extract(t, sigma, kind.into(), &lenient()).unwrap().report.all_rule_ids()
}

fn ids(list: &[usize]) -> Ids {
    list.iter().map(|&i| RuleId(i)).collect()
}

/// The standard corpus, each TBox with a random and a genuine signature.
fn instances() -> Vec<(TBox, SignatureSet)> {
    let mut out = Vec::new();
    for (i, t) in corpus(10_000, CORPUS_SIZE, &CorpusParams::standard()).into_iter().enumerate() {
        let seed = i as u64;
        let p = [0.2, 0.4, 0.6, 0.8][i % 4];
        out.push((t.clone(), sample_random_signature(&t, p, seed).unwrap()));
        let genuine = sample_genuine_signatures(&t, 1, seed).unwrap().remove(0);
        out.push((t, genuine));
    }
    out
}

fn micro() -> Vec<(TBox, SignatureSet)> {
    let mut out = Vec::new();
    for (i, t) in corpus(20_000, MICRO_SIZE, &CorpusParams::micro()).into_iter().enumerate() {
        let sigma = if i % 2 == 0 {
            sample_genuine_signatures(&t, 1, i as u64).unwrap().remove(0)
        } else {
            sample_random_signature(&t, 0.5, i as u64).unwrap()
        };
        out.push((t, sigma));
    }
    out
}

fn golden() -> Outcome {
    let start = Instant::now();
    let t = example_tbox();
    let cases: Vec<(TBox, &str, &str, Ids)> = vec![
        (t.clone(), "B/1 C/1 D/1 G/1", "i", ids(&[4, 5, 6])),
        (t.clone(), "B/1 C/1 D/1 G/1", "f", ids(&[3, 4, 5, 6])),
        (t.clone(), "A/1 B/1", "f", ids(&[])),
        (t.clone(), "A/1 D/1 R/2", "q", ids(&[1, 2])),
        (t.clone(), "A/1 D/1 R/2", "m", ids(&[1, 2, 3])),
        (t.clone(), "A/1", "b", ids(&[1, 2, 3, 4, 5, 6])),
        (t.clone(), "A/1", "c", ids(&[])),
        (parse_tbox("A(x) -> B(x)").unwrap(), "A/1", "c", ids(&[1])),
        (parse_tbox("A(x) -> B(x)").unwrap(), "A/1", "i", ids(&[])),
        (parse_tbox("A(x) -> B(x)\nB(x) -> A(x)").unwrap(), "A/1", "f", ids(&[1, 2])),
        (parse_tbox("A(x) -> B(x)\nB(x) -> A(x)").unwrap(), "A/1", "f0", ids(&[])),
    ];
    let mut wrong = Vec::new();
    for (t, s, kind, want) in &cases {
        let kind: ModuleKind = kind.parse().unwrap();
        let got = extract(t, &sig(s), kind, &ExtractOptions::default()).unwrap().report.all_rule_ids();
        if got != *want {
            wrong.push(format!("{kind} on {s}: {got:?}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = wrong.is_empty() && elapsed < GOLDEN_LIMIT;
    outcome(
        pass,
        format!(
            "{}/{} exact, {elapsed:.2?} (limit {GOLDEN_LIMIT:?}) {}",
            cases.len() - wrong.len(),
            cases.len(),
            wrong.join("; ")
        ),
    )
}

fn hierarchy(corpus: &[(TBox, SignatureSet)]) -> Outcome {
    let start = Instant::now();
    let mut violations = Vec::new();
    for (n, (t, s)) in corpus.iter().enumerate() {
        for (a, b) in expected_containments() {
            if !module(t, s, a).is_subset(&module(t, s, b)) {
                violations.push(format!("#{n} {a}⊄{b}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed < HIERARCHY_LIMIT;
    outcome(
        pass,
        format!(
            "{} instances, {} violations, {elapsed:.2?} (limit {HIERARCHY_LIMIT:?}) {}",
            corpus.len(),
            violations.len(),
            violations.join(" ")
        ),
    )
}

fn idempotence(corpus: &[(TBox, SignatureSet)]) -> Outcome {
    let (mut idem, mut depl) = (0, 0);
    for (t, s) in corpus {
        for kind in CHAIN_KINDS {
            let m = module(t, s, kind);
            if module(&t.restrict(&m), s, kind) != m {
                idem += 1;
            }
            if !module(&t.without(&m), s, kind).is_empty() {
                depl += 1;
            }
        }
    }
    outcome(
        idem + depl == 0,
        format!("{} checks, {idem} not idempotent, {depl} not depleting", corpus.len() * CHAIN_KINDS.len()),
    )
}

fn canonical(corpus: &[(TBox, SignatureSet)]) -> Outcome {
    let (mut i, mut c) = (0, 0);
    for (t, s) in corpus {
        i += usize::from(module(t, s, SettingKind::I) != module(t, s, SettingKind::I0));
        c += usize::from(module(t, s, SettingKind::C) != module(t, s, SettingKind::C0));
    }
    outcome(i + c == 0, format!("{} instances, i≠i0: {i}, c≠c0: {c}", corpus.len()))
}

fn homomorphisms(corpus: &[(TBox, SignatureSet)]) -> Outcome {
    use SettingKind::*;
    let chains = [(I, F), (F, Q), (Q, M), (M, B), (I, C), (C, B)];
    let (mut found, mut broken, mut missing, mut skipped) = (0, Vec::new(), Vec::new(), 0);
    for (n, (t, s)) in corpus.iter().enumerate() {
        let built: Vec<_> =
            SettingKind::ALL.iter().map(|&k| build_setting_with(t, s, k, &Limits::default(), false).ok()).collect();
        let modules: Vec<Ids> = SettingKind::ALL.iter().map(|&k| module(t, s, k)).collect();
        for (i, a) in built.iter().enumerate() {
            for (j, b) in built.iter().enumerate() {
                let (Some(a), Some(b)) = (a, b) else {
                    skipped += 1;
                    continue;
                };
                match find_homomorphism(a, b) {
                    Ok(Some(_)) => {
                        found += 1;
                        if !modules[i].is_subset(&modules[j]) {
                            broken.push(format!("#{n} {}→{}", SettingKind::ALL[i], SettingKind::ALL[j]));
                        }
                    }
                    Ok(None) => {}
                    Err(_) => skipped += 1,
                }
            }
        }
        for (a, b) in chains {
            let sa = build_setting_with(t, s, a, &Limits::default(), false).unwrap();
            let sb = build_setting_with(t, s, b, &Limits::default(), false).unwrap();
            if !matches!(find_homomorphism(&sa, &sb), Ok(Some(_))) {
                missing.push(format!("#{n} {a}→{b}"));
            }
        }
    }
    outcome(
        broken.is_empty() && missing.is_empty(),
        format!(
            "{found} homomorphisms, {} without containment, {} chain links missing, {skipped} pairs skipped {} {}",
            broken.len(),
            missing.len(),
            broken.join(" "),
            missing.join(" ")
        ),
    )
}

fn random_abox(t: &TBox, rng: &mut ChaCha8Rng) -> ABox {
    let preds: Vec<_> = t.signature().symbols().cloned().collect();
    let consts = ["a", "b", "c"].map(Constant::new);
    let mut out = ABox::new();
    if preds.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=4) {
        let p = &preds[rng.gen_range(0..preds.len())];
        let args = (0..p.arity()).map(|_| consts[rng.gen_range(0..3)].clone()).collect();
        out.insert(Fact::new(p.clone(), args).unwrap());
    }
    out
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut agree, mut bounded, mut disagree) = (0, 0, Vec::new());
    let tboxes = corpus(30_000, CORPUS_SIZE, &CorpusParams::standard().datalog());
    for (n, t) in tboxes.iter().enumerate() {
        let abox = random_abox(t, &mut rng);
        match compare_materialisation(t, &abox, HyperLimits::depth(8)).unwrap() {
            Agreement::Agree => agree += 1,
            Agreement::Bounded => bounded += 1,
            Agreement::Disagree { .. } => disagree.push(format!("#{n}")),
        }
    }
    outcome(
        disagree.is_empty(),
        format!(
            "{} programs: {agree} identical, {} disagreements, {bounded} hit the depth bound {}",
            tboxes.len(),
            disagree.len(),
            disagree.join(" ")
        ),
    )
}

fn is_counterexample(v: &Verdict) -> bool {
    matches!(v, Verdict::Counterexample { definitive: true, .. })
}

fn inseparability(micro: &[(TBox, SignatureSet)]) -> Outcome {
    let bounds = Bounds { body_size: 3, domain: 2, ..Bounds::default() };
    let mut failures = Vec::new();
    let mut tally = [0usize; 3];
    for (n, (t, s)) in micro.iter().enumerate() {
        for (slot, (kind, rel)) in [
            (SettingKind::I, InsepRelation::Implication),
            (SettingKind::F, InsepRelation::Fact),
            (SettingKind::M, InsepRelation::Model),
        ]
        .into_iter()
        .enumerate()
        {
            let m = t.restrict(&module(t, s, kind));
            match check_inseparability(t, &m, s, rel, &bounds) {
                Verdict::Pass => tally[slot] += 1,
                v => failures.push(format!("#{n} {kind}: {v}")),
            }
        }
    }

    // Strictness fixtures.
    let mut fixtures = Vec::new();
    let q = sig("Q/1");
    let empty = TBox::empty();
    let b = Bounds::default();
    let exists = parse_tbox("TOP(x) -> exists y . R(x,y), Q(y)").unwrap();
    fixtures.push((
        "f pass, m fails",
        check_inseparability(&exists, &empty, &q, InsepRelation::Fact, &b).is_pass()
            && is_counterexample(&check_inseparability(&exists, &empty, &q, InsepRelation::Model, &b)),
    ));
    fixtures.push((
        "M^f empty, M^q not",
        module(&exists, &q, SettingKind::F).is_empty() && !module(&exists, &q, SettingKind::Q).is_empty(),
    ));
    let consts = parse_tbox("Q(:a), Q(:b) -> Q(:c)").unwrap();
    fixtures.push((
        "i pass, f fails",
        check_inseparability(&consts, &empty, &q, InsepRelation::Implication, &b).is_pass()
            && is_counterexample(&check_inseparability(&consts, &empty, &q, InsepRelation::Fact, &b)),
    ));
    let split =
        parse_tbox("TOP(x) -> exists y . R(x,y), A(y)\nTOP(x) -> exists y . R(x,y), B(y)\nA(x), B(x) -> Q(x)").unwrap();
    let d1 = Bounds { domain: 1, ..b };
    fixtures.push((
        "f pass, m fails at domain 1",
        check_inseparability(&split, &empty, &q, InsepRelation::Fact, &d1).is_pass()
            && matches!(
                check_inseparability(&split, &empty, &q, InsepRelation::Model, &d1),
                Verdict::Counterexample { .. }
            ),
    ));
    let bad: Vec<&str> = fixtures.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();

    outcome(
        failures.is_empty() && bad.is_empty(),
        format!(
            "{} instances, pass i/f/m = {}/{}/{}, fixtures {}/{} {} {}",
            micro.len(),
            tally[0],
            tally[1],
            tally[2],
            fixtures.len() - bad.len(),
            fixtures.len(),
            failures.join("; "),
            bad.join("; ")
        ),
    )
}

fn justifications(micro: &[(TBox, SignatureSet)]) -> Outcome {
    let (mut sets, mut inexact, mut outside) = (0, 0, Vec::new());
    for (n, (t, s)) in micro.iter().enumerate() {
        let mi = module(t, s, SettingKind::I);
        for r in sigma_implications(s) {
            let js = enumerate_justifications(t, &r, 8).unwrap();
            inexact += usize::from(!js.exact);
            for j in &js.sets {
                sets += 1;
                if !j.is_subset(&mi) {
                    outside.push(format!("#{n} {r}"));
                }
            }
        }
    }
    let t = example_tbox();
    let dg = parse_tbox("D(x) -> G(x)").unwrap().rules()[0].clone();
    let js = enumerate_justifications(&t, &dg, 8).unwrap();
    let unique = js.exact && js.sets == BTreeSet::from([ids(&[4, 5, 6])]);
    outcome(
        outside.is_empty() && unique,
        format!(
            "{sets} justifications, {} outside M^i, {inexact} searches hit a bound, D→G unique {{4,5,6}}: {unique} {}",
            outside.len(),
            outside.join(" ")
        ),
    )
}

fn peak_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn scalability() -> Outcome {
    let reset = std::fs::write("/proc/self/clear_refs", "5").is_ok();
    let t = chain_tbox(CHAIN_RULES);
    let probes = sample_genuine_signatures(&t, 3, 7).unwrap();
    let mut text = String::new();
    let mut pass = true;
    let table: Vec<ModuleKind> = CHAIN_KINDS
        .iter()
        .map(|&k| k.into())
        .chain([LocalityKind::Bottom.into(), LocalityKind::TopBottomStar.into()])
        .collect();
    let canonical: Vec<ModuleKind> = [SettingKind::I0, SettingKind::C0, SettingKind::F0].map(Into::into).into();
    for (kinds, asserted) in [(&table, true), (&canonical, false)] {
        for &kind in kinds {
            let mut worst = Duration::ZERO;
            for s in &probes {
                let start = Instant::now();
                extract(&t, s, kind, &ExtractOptions::default()).unwrap();
                worst = worst.max(start.elapsed());
            }
            if asserted && worst >= EXTRACT_LIMIT {
                pass = false;
            }
            let _ = write!(text, "{kind} {:.2}s{} ", worst.as_secs_f64(), if asserted { "" } else { " (info)" });
        }
    }
    let peak = peak_kb();
    pass &= peak.is_some_and(|kb| kb < MEMORY_LIMIT_KB);

    let mut cfg = BatchConfig::new(CHAIN_KINDS.map(Into::into).into(), SamplingMode::Genuine, CHAIN_SAMPLES, 1);
    cfg.threads = 1;
    let run = run_batch(&t, &cfg).unwrap();
    let mut violations = 0;
    for per_sample in run.reports.chunks(CHAIN_KINDS.len()) {
        let of = |k: SettingKind| per_sample[CHAIN_KINDS.iter().position(|&c| c == k).unwrap()].all_rule_ids();
        for (a, b) in expected_containments() {
            if let (ModuleKind::Setting(a), ModuleKind::Setting(b)) = (a, b) {
                violations += usize::from(!of(a).is_subset(&of(b)));
            }
        }
    }
    pass &= violations == 0;
    outcome(
        pass,
        format!(
            "{CHAIN_RULES} rules, worst of {} samples: {text}(limit {EXTRACT_LIMIT:?}); peak {} MB (limit {} MB{}); {CHAIN_SAMPLES} samples, {violations} containment violations",
            probes.len(),
            peak.map_or("?".to_string(), |kb| (kb / 1024).to_string()),
            MEMORY_LIMIT_KB / 1024,
            if reset { "" } else { ", peak not reset" }
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.rls");
    std::fs::write(&path, serialize_tbox(&chain_tbox(4_000))).unwrap();
    let p = path.display().to_string();
    let run = |mode: &str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_modex"))
            .args(["bench", "--tbox", &p, "--mode", mode, "--prob", "0.01", "--samples", "40", "--seed", "7"])
            .args(["--setting", "i,f,q,m,b,c,loc-bot", "--threads", threads])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let mut lines = 0;
    let mut same = true;
    for mode in ["genuine", "random"] {
        let one = run(mode, "1");
        same &= one == run(mode, "16");
        lines += one.iter().filter(|&&b| b == b'\n').count();
    }
    outcome(same, format!("{lines} report lines, byte-identical for 1 and 16 threads: {same}"))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let corpus = instances();
    let micro = micro();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("golden examples", Box::new(golden)),
        ("hierarchy", Box::new(|| hierarchy(&corpus))),
        ("idempotence and depletingness", Box::new(|| idempotence(&corpus))),
        ("canonical settings", Box::new(|| canonical(&corpus))),
        ("homomorphisms imply containment", Box::new(|| homomorphisms(&corpus))),
        ("oracle agreement", Box::new(oracle_agreement)),
        ("inseparability", Box::new(|| inseparability(&micro))),
        ("justification preservation", Box::new(|| justifications(&micro))),
        ("scalability", Box::new(scalability)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {} {} {name}: {}", n + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail.trim_end());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
