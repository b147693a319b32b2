use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modex::normalize::expand_equality;
use modex::oracle::{audit_module, default_relation, Bounds, InsepRelation, Verdict};
use modex::textio::{check_signature, serialize_module};
use modex::{
    compare_settings, extract, parse_signature, parse_tbox, run_batch, serialize_report, BatchConfig, ExtractOptions,
    ModuleKind, SamplingMode, SignatureSet, TBox,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CHAIN: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(name = "modex", version, about = "Module extraction for existential rule TBoxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract modules and print their reports.
    Extract(ExtractArgs),
    /// Compare module sizes and containments across settings.
    Compare(CompareArgs),
    /// Extract and check the modules with the bounded oracles.
    Verify(VerifyArgs),
    /// Extract over sampled signatures and print one report per line.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    tbox: PathBuf,
    /// Settings or locality baselines, comma separated.
    #[arg(long, value_name = "KIND", value_delimiter = ',', default_value = "i")]
    setting: Vec<ModuleKind>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Rules,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "PATH")]
    sig: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "PATH")]
    sig: PathBuf,
    /// Reports or module rules instead of the size and containment table.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "PATH")]
    sig: PathBuf,
    /// Relation to check; defaults to the one each setting preserves.
    #[arg(long, value_name = "REL")]
    check: Option<InsepRelation>,
    /// Exit 4 on inconclusive checks and 3 on counterexamples.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = Bounds::default().depth)]
    depth: usize,
    #[arg(long, default_value_t = Bounds::default().body_size)]
    body_size: usize,
    #[arg(long, default_value_t = Bounds::default().domain)]
    domain: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Genuine,
    Random,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "genuine")]
    mode: Mode,
    /// Inclusion probability for random signatures.
    #[arg(long, default_value_t = 0.001, value_parser = probability)]
    prob: f64,
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep wall-clock times in the reports.
    #[arg(long)]
    timings: bool,
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not in [0, 1]"))
    }
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure { code: EXIT_INPUT, message: message.to_string() }
    }

    fn usage(message: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_tbox(path: &Path) -> Result<TBox, Failure> {
    parse_tbox(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_signature(path: &Path, t: &TBox) -> Result<SignatureSet, Failure> {
    let sig = parse_signature(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    check_signature(&sig, t).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(sig)
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            // A closed pipe is not worth reporting.
            let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
            Ok(())
        }
    }
}

fn cmd_extract(args: &ExtractArgs) -> Result<u8, Failure> {
    init_threads(args.common.threads)?;
    let t = load_tbox(&args.common.tbox)?;
    let sig = load_signature(&args.sig, &t)?;
    let mut text = String::new();
    for &kind in &args.common.setting {
        let e = extract(&t, &sig, kind, &ExtractOptions::default()).map_err(Failure::input)?;
        match args.format {
            Format::Json => {
                text.push_str(&serialize_report(&e.report));
                text.push('\n');
            }
            Format::Rules => {
                if args.common.setting.len() > 1 {
                    text.push_str(&format!("# {kind}\n"));
                }
                text.push_str(&serialize_module(&e.module));
            }
        }
    }
    emit(&args.common.out, &text)?;
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8, Failure> {
    if args.common.setting.len() < 2 {
        return Err(Failure::usage("compare needs at least two settings"));
    }
    init_threads(args.common.threads)?;
    let t = load_tbox(&args.common.tbox)?;
    let sig = load_signature(&args.sig, &t)?;
    let cmp = compare_settings(&t, &sig, &args.common.setting).map_err(Failure::input)?;
    let text = match args.format {
        None => cmp.render(),
        Some(Format::Json) => cmp.reports.iter().map(|r| serialize_report(r) + "\n").collect(),
        Some(Format::Rules) => cmp
            .kinds
            .iter()
            .zip(&cmp.reports)
            .map(|(k, r)| format!("# {k}\n{}", serialize_module(&t.restrict(&r.all_rule_ids()))))
            .collect(),
    };
    emit(&args.common.out, &text)?;
    let violations = cmp.violations();
    if violations.is_empty() {
        return Ok(0);
    }
    for (a, b) in violations {
        eprintln!("error: module of {a} is not contained in module of {b}");
    }
    Ok(EXIT_CHAIN)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    init_threads(args.common.threads)?;
    let t = load_tbox(&args.common.tbox)?;
    let sig = load_signature(&args.sig, &t)?;
    let full = expand_equality(&t);
    let bounds = Bounds { depth: args.depth, body_size: args.body_size, domain: args.domain, ..Bounds::default() };
    let (mut counterexample, mut inconclusive) = (false, false);
    let mut text = String::new();
    for &kind in &args.common.setting {
        let e = extract(&t, &sig, kind, &ExtractOptions::default()).map_err(Failure::input)?;
        let rel = args.check.unwrap_or_else(|| default_relation(kind));
        let checks = audit_module(&full, &e.report.all_rule_ids(), &sig, kind, rel, &bounds).map_err(Failure::input)?;
        for c in checks {
            match &c.verdict {
                Verdict::Pass => {}
                Verdict::Counterexample { definitive: true, .. } => counterexample = true,
                _ => inconclusive = true,
            }
            text.push_str(&format!("{kind}\t{}\t{}\n", c.name, c.verdict));
        }
    }
    emit(&args.common.out, &text)?;
    Ok(match (args.strict, counterexample, inconclusive) {
        (true, true, _) => EXIT_CHAIN,
        (true, false, true) => EXIT_INCONCLUSIVE,
        _ => 0,
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let t = load_tbox(&args.common.tbox)?;
    let mode = match args.mode {
        Mode::Genuine => SamplingMode::Genuine,
        Mode::Random => SamplingMode::Random { p: args.prob },
    };
    let mut cfg = BatchConfig::new(args.common.setting.clone(), mode, args.samples as usize, args.seed);
    cfg.threads = args.common.threads.unwrap_or(0);
    cfg.timings = args.timings;
    let run = run_batch(&t, &cfg).map_err(Failure::input)?;
    emit(&args.common.out, &run.json_lines())?;
    eprint!("{}", run.summary());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
