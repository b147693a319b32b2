//! Seeded batch extraction over sampled signatures.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::extract::{extract, ExtractError, ExtractOptions, ModuleKind, ModuleReport};
use crate::model::{SignatureSet, TBox};
use crate::sampling::{sample_genuine_signatures, sample_random_signature, SamplingError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Signatures of individual rules.
    Genuine,
    /// Every symbol independently with probability `p`.
    Random { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sampling mode `{0}` (expected genuine or random)")]
pub struct UnknownMode(pub String);

impl FromStr for SamplingMode {
    type Err = UnknownMode;

    /// Parses the mode name; random mode starts with p = 0.001.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "genuine" => Ok(SamplingMode::Genuine),
            "random" => Ok(SamplingMode::Random { p: 0.001 }),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingMode::Genuine => f.write_str("genuine"),
            SamplingMode::Random { p } => write!(f, "random(p={p})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub kinds: Vec<ModuleKind>,
    pub mode: SamplingMode,
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    /// Keep wall-clock times in reports. Off by default so that output is
    /// reproducible byte for byte.
    pub timings: bool,
    pub options: ExtractOptions,
}

impl BatchConfig {
    pub fn new(kinds: Vec<ModuleKind>, mode: SamplingMode, samples: usize, seed: u64) -> Self {
        BatchConfig { kinds, mode, samples, seed, threads: 0, timings: false, options: ExtractOptions::default() }
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("sample {sample}, setting {kind}: {source}")]
    Extract {
        sample: usize,
        kind: ModuleKind,
        #[source]
        source: ExtractError,
    },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("no module kinds given")]
    NoKinds,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Per-kind summary over all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KindStats {
    pub kind: ModuleKind,
    pub mean_size: f64,
    pub median_size: f64,
    pub mean_ms: f64,
    pub mean_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct BatchRun {
    pub signatures: Vec<SignatureSet>,
    /// Sample-major: all kinds of sample 0, then sample 1, and so on.
    pub reports: Vec<ModuleReport>,
    pub stats: Vec<KindStats>,
}

impl BatchRun {
    /// One JSON report per line.
    pub fn json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("reports serialise"));
            out.push('\n');
        }
        out
    }

    /// Tab-separated summary table.
    pub fn summary(&self) -> String {
        let mut out = String::from("kind\tmean_size\tmedian_size\tmean_ms\tmean_sigma\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{}\t{:.2}\t{:.1}\t{:.3}\t{:.2}\n",
                s.kind, s.mean_size, s.median_size, s.mean_ms, s.mean_sigma
            ));
        }
        out
    }
}

/// Signature of sample `i`; random samples get independent derived seeds.
fn signatures(t: &TBox, mode: SamplingMode, samples: usize, seed: u64) -> Result<Vec<SignatureSet>, SamplingError> {
    match mode {
        SamplingMode::Genuine => sample_genuine_signatures(t, samples, seed),
        SamplingMode::Random { p } => (0..samples as u64)
            .map(|i| sample_random_signature(t, p, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i)))
            .collect(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn run_batch(t: &TBox, cfg: &BatchConfig) -> Result<BatchRun, BatchError> {
    if cfg.samples == 0 {
        return Err(BatchError::NoSamples);
    }
    if cfg.kinds.is_empty() {
        return Err(BatchError::NoKinds);
    }
    let sigs = signatures(t, cfg.mode, cfg.samples, cfg.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    // Genuine signatures contain only symbols of T; random ones too, so the
    // strictness check never fires here.
    let jobs: Vec<(usize, ModuleKind)> = (0..sigs.len()).flat_map(|i| cfg.kinds.iter().map(move |&k| (i, k))).collect();
    let results: Vec<Result<ModuleReport, BatchError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, kind)| {
                let mut e = extract(t, &sigs[i], kind, &cfg.options).map_err(|source| BatchError::Extract {
                    sample: i,
                    kind,
                    source,
                })?;
                if !cfg.timings {
                    e.report.time_ms = 0.0;
                }
                Ok(e.report)
            })
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let stats = cfg
        .kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let rs: Vec<&ModuleReport> = reports.iter().skip(ki).step_by(cfg.kinds.len()).collect();
            let n = rs.len() as f64;
            KindStats {
                kind,
                mean_size: rs.iter().map(|r| r.module_size as f64).sum::<f64>() / n,
                median_size: median(rs.iter().map(|r| r.module_size as f64).collect()),
                mean_ms: rs.iter().map(|r| r.time_ms).sum::<f64>() / n,
                mean_sigma: rs.iter().map(|r| r.sigma.len() as f64).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(BatchRun { signatures: sigs, reports, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::settings::SettingKind;
    use crate::synth::{chain_tbox, example_tbox};

    fn kinds() -> Vec<ModuleKind> {
        vec![SettingKind::I.into(), SettingKind::F.into(), SettingKind::M.into()]
    }

    #[test]
    fn output_is_independent_of_threads() {
        let t = chain_tbox(400);
        let mut cfg = BatchConfig::new(kinds(), SamplingMode::Random { p: 0.02 }, 20, 7);
        cfg.threads = 1;
        let one = run_batch(&t, &cfg).unwrap().json_lines();
        cfg.threads = 4;
        assert_eq!(one, run_batch(&t, &cfg).unwrap().json_lines());
        assert_eq!(one.lines().count(), 60);
    }

    #[test]
    fn genuine_single_sample() {
        let t = example_tbox();
        let cfg = BatchConfig::new(vec![SettingKind::I.into()], SamplingMode::Genuine, 1, 3);
        let run = run_batch(&t, &cfg).unwrap();
        assert_eq!(run.reports.len(), 1);
        let sig = &run.signatures[0];
        assert!(t.rules().iter().any(|r| r.signature().symbols().cloned().collect::<SignatureSet>() == *sig));
        assert_eq!(run.stats[0].mean_size, run.reports[0].module_size as f64);
    }

    #[test]
    fn bad_configs() {
        let t = example_tbox();
        assert!(matches!(
            run_batch(&t, &BatchConfig::new(kinds(), SamplingMode::Genuine, 0, 1)),
            Err(BatchError::NoSamples)
        ));
        assert!(matches!(
            run_batch(&t, &BatchConfig::new(kinds(), SamplingMode::Random { p: 2.0 }, 1, 1)),
            Err(BatchError::Sampling(_))
        ));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
