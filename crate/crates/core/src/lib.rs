//! Module extraction for existential rule TBoxes by reduction to datalog
//! reasoning, with locality baselines and small-scale verification oracles.

pub mod batch;
pub mod engine;
pub mod extract;
pub mod locality;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod sampling;
pub mod settings;
pub mod synth;
pub mod textio;

pub use batch::{run_batch, BatchConfig, BatchError, BatchRun, KindStats, SamplingMode};
pub use extract::{
    compare_settings, extract, extract_module, Comparison, ExtractError, ExtractOptions, Extraction, ModuleKind,
    ModuleReport,
};
pub use locality::{extract_locality_module, LocalityKind};
pub use model::{
    signature_of, ABox, Atom, Constant, Fact, Predicate, Rule, RuleId, RuleOrigin, SignatureSet, TBox, Term, Variable,
};
pub use settings::{ModuleSetting, SettingKind};
pub use textio::{parse_signature, parse_tbox, serialize_report, ParseError};
