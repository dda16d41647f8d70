//! Experiment configuration documents.
//!
//! A config is a JSON object with a `schema_version`, a `name`, an `output`
//! block and exactly one experiment under `experiment`, keyed by its kind:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "mixing_bernoulli",
//!   "output": { "dir": "out", "stem": "mixing_bernoulli" },
//!   "experiment": {
//!     "scan": {
//!       "system": "bernoulli_cyclic:k=2,L=10",
//!       "family": { "single_coordinate": { "coords": [0, 1] } },
//!       "functional": "phi",
//!       "n_sets": 4,
//!       "j_min": 1,
//!       "j_max": 8
//!     }
//!   }
//! }
//! ```
//!
//! The other kinds are `entropy`, `spectral` and `ensemble`; see
//! [`Experiment`]. Parsing reports the line, column and field path of the
//! first problem; semantic checks report the field path.

use std::path::{Path, PathBuf};

use ergolab::extlab::{EnsembleSpec, Selector};
use ergolab::seqentropy::SequenceFamily;
use ergolab::spectral::{default_n_schedule, default_p_schedule, DegreePolicy, MAX_S_MAX};
use ergolab::zoo::SystemDescriptor;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub output: OutputSpec,
    pub experiment: Experiment,
}

/// Where the four output files go: `<dir>/<stem>.csv`, `.summary.json`,
/// `.dat` and `.meta.json`. A relative `dir` is taken from the config
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    pub stem: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Lag scan of φ, ψ or ψ_a.
    Scan(ScanSpec),
    /// Sequence-entropy estimate `max_j h_j` over a lag range.
    Entropy(EntropySpec),
    /// Arc-counting singularity test on a correlation sequence.
    Spectral(SpectralSpec),
    /// Seeded ensemble of random extensions.
    Ensemble(EnsembleExperiment),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Scan(_) => "scan",
            Experiment::Entropy(_) => "entropy",
            Experiment::Spectral(_) => "spectral",
            Experiment::Ensemble(_) => "ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub system: SystemDescriptor,
    pub family: FamilySpec,
    pub functional: FunctionalSpec,
    pub n_sets: usize,
    #[serde(default = "one")]
    pub j_min: u64,
    pub j_max: u64,
}

fn one() -> u64 {
    1
}

/// Which dense family the set functionals read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Dyadic blocks `A_1..A_{i_max}`.
    Canonical { i_max: usize },
    /// `{w_c = a}` for each listed coordinate and symbol (Bernoulli only).
    SingleCoordinate { coords: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Phi,
    Psi,
    /// `a` as rational text, `"1/2"` or `"0.5"`.
    PsiA { a: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySpec {
    pub system: SystemDescriptor,
    pub partition: PartitionSpec,
    pub sequence_family: SequenceFamily,
    #[serde(default = "one")]
    pub j_min: u64,
    pub j_max: u64,
}

/// Named partitions of a system's cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Trivial,
    /// Symbol at one coordinate (Bernoulli only).
    Coordinate { coord: usize },
    /// Joint symbols over coordinates `lo..=hi` (Bernoulli only).
    Window { lo: i64, hi: i64 },
    /// `count` consecutive blocks of near-equal size.
    Blocks { count: usize },
    /// Uniform random labels in `0..classes` from `seed`.
    Random { classes: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    pub input: SpectralInput,
    #[serde(default = "default_n_schedule")]
    pub n_schedule: Vec<u64>,
    #[serde(default = "default_p_schedule")]
    pub p_schedule: Vec<usize>,
    #[serde(default)]
    pub policy: DegreePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralInput {
    /// `σ̂(s) = ⟨Tˢf, f⟩` for a zoo system and a vector normalized to norm 1.
    System { system: SystemDescriptor, vector: VectorSpec, s_max: usize },
    /// Point mass at the rational angle `angle` (text, e.g. `"0"` or `"1/3"`).
    Dirac { angle: String, s_max: usize },
    Lebesgue { s_max: usize },
    /// Convex combination; every component must use the same `s_max`.
    Mixture { components: Vec<MixtureComponent> },
    /// External CSV with columns `s,re,im`; relative paths are taken from
    /// the config file's directory.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub input: SpectralInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorSpec {
    Indicator { cells: Vec<usize> },
    /// Uniform values in `[-1, 1)` drawn from `seed`.
    Random { seed: u64 },
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleExperiment {
    pub ensemble: EnsembleSpec,
    pub selector: Selector,
}

/// Parses a config document; `origin` names it in diagnostics.
pub fn parse_config(text: &str, origin: &str) -> CliResult<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let location = format!("{origin}:{}:{}", inner.line(), inner.column());
        if path.is_empty() || path == "." {
            CliError::Validation(format!("{location}: {inner}"))
        } else {
            CliError::Validation(format!("{location}: field `{path}`: {inner}"))
        }
    })?;
    validate(&config).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{origin}: {msg}")),
        other => other,
    })?;
    Ok(config)
}

/// Reads and parses a config file; also returns the directory relative
/// paths resolve against.
pub fn load_config(path: &Path) -> CliResult<(ExperimentConfig, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = parse_config(&text, &path.display().to_string())?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("field `{field}`: {msg}"))
}

/// Checks that do not need any system to be built.
pub fn validate(config: &ExperimentConfig) -> CliResult<()> {
    if config.schema_version != SCHEMA_VERSION {
        return Err(invalid("schema_version", format!("unsupported version {}, expected {SCHEMA_VERSION}", config.schema_version)));
    }
    let stem = &config.output.stem;
    if stem.is_empty() || stem.contains(['/', '\\']) || stem.starts_with('.') {
        return Err(invalid("output.stem", "must be a nonempty file name without separators or a leading dot"));
    }
    match &config.experiment {
        Experiment::Scan(s) => {
            let at = |f: &str| format!("experiment.scan.{f}");
            if s.n_sets == 0 {
                return Err(invalid(&at("n_sets"), "must be at least 1"));
            }
            if s.j_min > s.j_max {
                return Err(invalid(&at("j_min"), format!("{} exceeds j_max = {}", s.j_min, s.j_max)));
            }
            match &s.family {
                FamilySpec::Canonical { i_max } if *i_max < s.n_sets => {
                    return Err(invalid(&at("family.canonical.i_max"), format!("{i_max} is smaller than n_sets = {}", s.n_sets)));
                }
                FamilySpec::SingleCoordinate { coords } if coords.is_empty() => {
                    return Err(invalid(&at("family.single_coordinate.coords"), "must be nonempty"));
                }
                _ => {}
            }
            if let FunctionalSpec::PsiA { a } = &s.functional {
                let value = ergolab::asymptotics::parse_rational(a).map_err(|e| invalid(&at("functional.psi_a.a"), e))?;
                if value <= ergolab::Rational::from_integer(0) || value > ergolab::Rational::from_integer(1) {
                    return Err(invalid(&at("functional.psi_a.a"), format!("{a} is outside (0, 1]")));
                }
            }
        }
        Experiment::Entropy(e) => {
            if e.j_min == 0 || e.j_min > e.j_max {
                return Err(invalid("experiment.entropy.j_min", format!("need 1 ≤ j_min ≤ j_max, got {}..{}", e.j_min, e.j_max)));
            }
            for j in e.j_min..=e.j_max {
                e.sequence_family.lags(j).map_err(|err| invalid("experiment.entropy.sequence_family", format!("P_{j}: {err}")))?;
            }
        }
        Experiment::Spectral(s) => {
            if s.n_schedule.is_empty() || s.n_schedule.contains(&0) {
                return Err(invalid("experiment.spectral.n_schedule", "must be nonempty with every N ≥ 1"));
            }
            if s.p_schedule.is_empty() || s.p_schedule.iter().any(|&p| p < 3) {
                return Err(invalid("experiment.spectral.p_schedule", "must be nonempty with every P ≥ 3"));
            }
            validate_input(&s.input, "experiment.spectral.input")?;
        }
        Experiment::Ensemble(e) => {
            let at = |f: &str| format!("experiment.ensemble.{f}");
            if e.ensemble.trials == 0 {
                return Err(invalid(&at("ensemble.trials"), "must be at least 1"));
            }
            if e.ensemble.fiber_size == 0 {
                return Err(invalid(&at("ensemble.fiber_size"), "must be at least 1"));
            }
            match &e.selector {
                Selector::ARigidity { lags, n_sets, i_max, .. } | Selector::WeakMixingPhi { lags, n_sets, i_max } => {
                    if lags.is_empty() || lags.contains(&0) {
                        return Err(invalid(&at("selector.lags"), "must be nonempty positive lags"));
                    }
                    if *n_sets == 0 || n_sets > i_max {
                        return Err(invalid(&at("selector.n_sets"), format!("need 1 ≤ n_sets ≤ i_max = {i_max}")));
                    }
                }
                Selector::Rwm { n_sets, j, i_max } => {
                    if *j == 0 {
                        return Err(invalid(&at("selector.j"), "must be at least 1"));
                    }
                    if *n_sets == 0 || n_sets > i_max {
                        return Err(invalid(&at("selector.n_sets"), format!("need 1 ≤ n_sets ≤ i_max = {i_max}")));
                    }
                }
                Selector::HpBlowup { j_values, length, .. } => {
                    if j_values.is_empty() || j_values.contains(&0) || *length == 0 {
                        return Err(invalid(&at("selector"), "j_values must be nonempty positive and length ≥ 1"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn validate_input(input: &SpectralInput, at: &str) -> CliResult<()> {
    let check_s_max = |s_max: usize, field: &str| {
        if s_max > MAX_S_MAX {
            Err(invalid(field, format!("{s_max} exceeds the limit {MAX_S_MAX}")))
        } else {
            Ok(())
        }
    };
    match input {
        SpectralInput::System { s_max, vector, .. } => {
            check_s_max(*s_max, &format!("{at}.system.s_max"))?;
            if let VectorSpec::Indicator { cells } = vector {
                if cells.is_empty() {
                    return Err(invalid(&format!("{at}.system.vector.indicator.cells"), "must be nonempty"));
                }
            }
        }
        SpectralInput::Dirac { angle, s_max } => {
            check_s_max(*s_max, &format!("{at}.dirac.s_max"))?;
            parse_angle(angle).map_err(|e| invalid(&format!("{at}.dirac.angle"), e))?;
        }
        SpectralInput::Lebesgue { s_max } => check_s_max(*s_max, &format!("{at}.lebesgue.s_max"))?,
        SpectralInput::Mixture { components } => {
            if components.is_empty() {
                return Err(invalid(&format!("{at}.mixture.components"), "must be nonempty"));
            }
            for (i, c) in components.iter().enumerate() {
                if c.weight.is_nan() || c.weight < 0.0 {
                    return Err(invalid(&format!("{at}.mixture.components[{i}].weight"), "must be nonnegative"));
                }
                validate_input(&c.input, &format!("{at}.mixture.components[{i}].input"))?;
            }
        }
        SpectralInput::Csv { .. } => {}
    }
    Ok(())
}

/// Parses a nonnegative rational angle `num/den` (or an integer) in turns.
pub fn parse_angle(text: &str) -> Result<(u64, u64), String> {
    let (num, den) = text.trim().split_once('/').unwrap_or((text.trim(), "1"));
    let num: u64 = num.trim().parse().map_err(|_| format!("`{text}` is not a nonnegative rational num/den"))?;
    let den: u64 = den.trim().parse().map_err(|_| format!("`{text}` is not a nonnegative rational num/den"))?;
    if den == 0 {
        return Err(format!("`{text}` has a zero denominator"));
    }
    Ok((num, den))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCAN: &str = r#"{
  "schema_version": 1,
  "name": "t",
  "output": { "stem": "t" },
  "experiment": { "scan": {
    "system": "cyclic_rotation:n=8",
    "family": { "canonical": { "i_max": 8 } },
    "functional": { "psi_a": { "a": "1/2" } },
    "n_sets": 4, "j_max": 16 } }
}"#;

    #[test]
    fn parses_scan() {
        let c = parse_config(SCAN, "scan.json").unwrap();
        assert_eq!(c.output.dir, PathBuf::from("."));
        let Experiment::Scan(s) = &c.experiment else { panic!() };
        assert_eq!(s.j_min, 1);
        assert_eq!(s.system, SystemDescriptor::CyclicRotation { n: 8 });
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let bad = SCAN.replace("\"n_sets\": 4", "\"n_sets\": \"four\"");
        let msg = parse_config(&bad, "scan.json").unwrap_err().to_string();
        assert!(msg.starts_with("scan.json:9:"), "{msg}");
        assert!(msg.contains("experiment.scan.n_sets"), "{msg}");

        let bad = SCAN.replace("cyclic_rotation:n=8", "cyclic_rotation:m=8");
        let msg = parse_config(&bad, "scan.json").unwrap_err().to_string();
        assert!(msg.contains("experiment.scan.system") && msg.contains("parameter `m`"), "{msg}");

        let bad = SCAN.replace("\"name\"", "\"nmae\"");
        assert!(parse_config(&bad, "x").unwrap_err().to_string().contains("nmae"));
    }

    #[test]
    fn semantic_checks() {
        let bad = SCAN.replace("\"i_max\": 8", "\"i_max\": 2");
        let msg = parse_config(&bad, "s").unwrap_err().to_string();
        assert!(msg.contains("experiment.scan.family.canonical.i_max"), "{msg}");
        let bad = SCAN.replace("1/2", "3/2");
        assert!(parse_config(&bad, "s").unwrap_err().to_string().contains("functional.psi_a.a"));
        let bad = SCAN.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(parse_config(&bad, "s"), Err(CliError::Validation(_))));
        let bad = SCAN.replace("\"stem\": \"t\"", "\"stem\": \"../t\"");
        assert!(parse_config(&bad, "s").unwrap_err().to_string().contains("output.stem"));
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0"), Ok((0, 1)));
        assert_eq!(parse_angle(" 1/3 "), Ok((1, 3)));
        assert!(parse_angle("1/0").is_err());
        assert!(parse_angle("-1/2").is_err());
    }

    #[test]
    fn round_trips() {
        let c = parse_config(SCAN, "s").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(parse_config(&text, "s").unwrap(), c);
    }
}
