//! Executes an [`ExperimentConfig`] and writes its outputs.
//!
//! Every experiment produces three data files whose bytes depend only on the
//! config and the seeds in it (`.csv`, `.summary.json`, `.dat`) plus a
//! `.meta.json` that records when and how the run happened. Nothing is
//! written until the whole computation has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ergolab::asymptotics::{parse_rational, scan, Functional};
use ergolab::extlab::lift_experiment_with_cap;
use ergolab::seqentropy::hp_estimate;
use ergolab::spectral::{classify_singular, correlation_sequence, CorrelationSequence};
use ergolab::zoo::{canonical_family, SystemDescriptor, ZooSystem};
use ergolab::{rng, CellFunction, DenseFamily, Partition};
use serde_json::json;

use crate::config::{load_config, parse_angle, EntropySpec, Experiment, ExperimentConfig, FamilySpec, FunctionalSpec, PartitionSpec, ScanSpec, SpectralInput, SpectralSpec, VectorSpec};
use crate::error::{CliError, CliResult};
use crate::settings::Settings;

/// The deterministic outputs of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub csv: String,
    pub summary: String,
    pub dat: String,
}

/// Paths written by [`run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub dat: PathBuf,
    pub meta: PathBuf,
}

/// Loads, executes and writes one config. `out_dir` overrides the config's
/// output directory.
pub fn run(config_path: &Path, out_dir: Option<&Path>, settings: &Settings) -> CliResult<Written> {
    let (config, base) = load_config(config_path)?;
    let artifacts = execute(&config, &base, settings)?;
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None if config.output.dir.is_absolute() => config.output.dir.clone(),
        None => base.join(&config.output.dir),
    };
    let meta = json!({
        "name": config.name,
        "config": config_path.display().to_string(),
        "generated_unix_seconds": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "threads": settings.threads.unwrap_or_else(rayon::current_num_threads),
        "cell_cap": settings.cell_cap,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    write_outputs(&dir, &config.output.stem, &artifacts, &pretty(&meta))
}

/// Runs the experiment on a pool sized by `settings` and renders its
/// deterministic outputs. `base` resolves relative input paths.
pub fn execute(config: &ExperimentConfig, base: &Path, settings: &Settings) -> CliResult<Artifacts> {
    settings.install(|| match &config.experiment {
        Experiment::Scan(spec) => run_scan(config, spec, settings.cell_cap),
        Experiment::Entropy(spec) => run_entropy(config, spec, settings.cell_cap),
        Experiment::Spectral(spec) => run_spectral(config, spec, base, settings.cell_cap),
        Experiment::Ensemble(e) => {
            e.ensemble.check_cap(settings.cell_cap).map_err(|err| CliError::at_field("experiment.ensemble.ensemble", err))?;
            e.ensemble.base.build_with_cap(settings.cell_cap).map_err(|err| CliError::at_field("experiment.ensemble.ensemble.base", err))?;
            let report = lift_experiment_with_cap(&e.ensemble, &e.selector, settings.cell_cap)?;
            let mut dat = header(config, &["trial", "value", "witness"]);
            for r in &report.rows {
                writeln!(dat, "{} {:.17e} {}", r.trial, r.value, u8::from(r.witness)).unwrap();
            }
            Ok(Artifacts { csv: report.to_csv(), summary: summary(config, &report), dat })
        }
    })?
}

fn header(config: &ExperimentConfig, columns: &[&str]) -> String {
    format!("# ergolab {} experiment `{}`\n# columns: {}\n", config.experiment.kind(), config.name, columns.join(" "))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

fn summary(config: &ExperimentConfig, result: &impl serde::Serialize) -> String {
    pretty(&json!({
        "name": config.name,
        "kind": config.experiment.kind(),
        "schema_version": config.schema_version,
        "config": config,
        "result": result,
    }))
}

/// Builds a system, reporting problems against `field`.
pub fn build_system(descriptor: &SystemDescriptor, field: &str, cap: usize) -> CliResult<ZooSystem> {
    descriptor.build_with_cap(cap).map_err(|e| CliError::at_field(field, e))
}

pub fn build_family(system: &ZooSystem, spec: &FamilySpec, field: &str) -> CliResult<DenseFamily> {
    let family = match spec {
        FamilySpec::Canonical { i_max } => canonical_family(system.automorphism.space(), *i_max),
        FamilySpec::SingleCoordinate { coords } => match &system.bernoulli {
            Some(b) => b.single_coordinate_family(coords),
            None => Err(ergolab::Error::WrongKind { expected: "bernoulli_cyclic".into(), got: system.descriptor.kind().into() }),
        },
    };
    family.map_err(|e| CliError::at_field(field, e))
}

pub fn describe_family(spec: &FamilySpec) -> String {
    match spec {
        FamilySpec::Canonical { i_max } => format!("canonical dyadic family, I_max = {i_max}"),
        FamilySpec::SingleCoordinate { coords } => format!("single-coordinate sets at coordinates {coords:?}"),
    }
}

pub fn build_partition(system: &ZooSystem, spec: &PartitionSpec, field: &str) -> CliResult<Partition> {
    let space = system.automorphism.space();
    let n = space.len();
    let bernoulli = || {
        system.bernoulli.as_ref().ok_or_else(|| CliError::at_field(field, ergolab::Error::WrongKind { expected: "bernoulli_cyclic".into(), got: system.descriptor.kind().into() }))
    };
    match spec {
        PartitionSpec::Trivial => Ok(Partition::trivial(space)),
        PartitionSpec::Coordinate { coord } => bernoulli()?.coordinate_partition(*coord).map_err(|e| CliError::at_field(field, e)),
        PartitionSpec::Window { lo, hi } => bernoulli()?.window_partition(*lo, *hi).map_err(|e| CliError::at_field(field, e)),
        PartitionSpec::Blocks { count } => {
            if *count == 0 || *count > n {
                return Err(CliError::Validation(format!("field `{field}`: block count must be in 1..={n}")));
            }
            Ok(Partition::from_fn(space, |c| (c as u128 * *count as u128 / n as u128) as u64))
        }
        PartitionSpec::Random { classes, seed } => {
            if *classes == 0 {
                return Err(CliError::Validation(format!("field `{field}`: classes must be at least 1")));
            }
            let mut g = rng::generator(*seed);
            let labels: Vec<u64> = (0..n).map(|_| rng::below(&mut g, *classes as u64)).collect();
            Partition::from_labels(space, &labels).map_err(|e| CliError::at_field(field, e))
        }
    }
}

fn run_scan(config: &ExperimentConfig, spec: &ScanSpec, cap: usize) -> CliResult<Artifacts> {
    let system = build_system(&spec.system, "experiment.scan.system", cap)?;
    let family = build_family(&system, &spec.family, "experiment.scan.family")?;
    if spec.n_sets > family.len() {
        return Err(CliError::Validation(format!("field `experiment.scan.n_sets`: {} exceeds the family size {}", spec.n_sets, family.len())));
    }
    let functional = match &spec.functional {
        FunctionalSpec::Phi => Functional::Mixing,
        FunctionalSpec::Psi => Functional::Rigidity,
        FunctionalSpec::PsiA { a } => Functional::PartialRigidity(parse_rational(a).map_err(|e| CliError::at_field("experiment.scan.functional.psi_a.a", e))?),
    };
    let report = scan(&system.automorphism, &family, spec.n_sets, spec.j_min..=spec.j_max, functional)?;
    let mut dat = header(config, &["j", &report.functional]);
    for (j, v) in &report.values {
        writeln!(dat, "{j} {:.17e}", ergolab::to_f64(v)).unwrap();
    }
    let result = json!({ "family": describe_family(&spec.family), "scan": report });
    Ok(Artifacts { csv: report.to_csv(), summary: summary(config, &result), dat })
}

fn run_entropy(config: &ExperimentConfig, spec: &EntropySpec, cap: usize) -> CliResult<Artifacts> {
    let system = build_system(&spec.system, "experiment.entropy.system", cap)?;
    let xi = build_partition(&system, &spec.partition, "experiment.entropy.partition")?;
    let estimate = hp_estimate(&system.automorphism, &xi, &spec.sequence_family, spec.j_min..=spec.j_max)?;
    let mut dat = header(config, &["j", "h_j"]);
    for r in &estimate.rows {
        writeln!(dat, "{} {:.17e}", r.j, r.h_j).unwrap();
    }
    let result = json!({ "partition_entropy": xi.entropy(), "partition_classes": xi.class_count(), "estimate": estimate });
    Ok(Artifacts { csv: estimate.to_csv(), summary: summary(config, &result), dat })
}

/// Builds the correlation sequence a spectral input describes.
pub fn build_correlation(input: &SpectralInput, base: &Path, field: &str, cap: usize) -> CliResult<CorrelationSequence> {
    let at = |e| CliError::at_field(field, e);
    match input {
        SpectralInput::System { system, vector, s_max } => {
            let sys = build_system(system, &format!("{field}.system.system"), cap)?;
            let f = build_vector(&sys, vector).map_err(|e| CliError::at_field(&format!("{field}.system.vector"), e))?;
            correlation_sequence(&sys.automorphism, &f, *s_max).map_err(at)
        }
        SpectralInput::Dirac { angle, s_max } => {
            let (num, den) = parse_angle(angle).map_err(|e| CliError::Validation(format!("field `{field}.dirac.angle`: {e}")))?;
            CorrelationSequence::dirac(num, den, *s_max).map_err(at)
        }
        SpectralInput::Lebesgue { s_max } => CorrelationSequence::lebesgue(*s_max).map_err(at),
        SpectralInput::Mixture { components } => {
            let parts = components
                .iter()
                .enumerate()
                .map(|(i, c)| Ok((c.weight, build_correlation(&c.input, base, &format!("{field}.mixture.components[{i}].input"), cap)?)))
                .collect::<CliResult<Vec<_>>>()?;
            let refs: Vec<(f64, &CorrelationSequence)> = parts.iter().map(|(w, c)| (*w, c)).collect();
            CorrelationSequence::mixture(&refs).map_err(at)
        }
        SpectralInput::Csv { path } => {
            let full = if path.is_absolute() { path.clone() } else { base.join(path) };
            let file = fs::File::open(&full).map_err(|e| CliError::io(&full, e))?;
            CorrelationSequence::read_csv(std::io::BufReader::new(file), full.display().to_string()).map_err(|e| CliError::Validation(format!("{}: {e}", full.display())))
        }
    }
}

/// The unit-norm vector a [`VectorSpec`] names on `system`.
pub fn build_vector(system: &ZooSystem, spec: &VectorSpec) -> ergolab::Result<CellFunction> {
    let space = system.automorphism.space();
    let raw = match spec {
        VectorSpec::Indicator { cells } => ergolab::CellSet::from_cells(space, cells.iter().copied())?.indicator(),
        VectorSpec::Random { seed } => {
            let mut g = rng::generator(*seed);
            let values = (0..space.len()).map(|_| rng::below(&mut g, 1 << 53) as f64 / (1u64 << 52) as f64 - 1.0).collect();
            CellFunction::new(space, values)?
        }
        VectorSpec::Values { values } => CellFunction::new(space, values.clone())?,
    };
    raw.normalized()
}

fn run_spectral(config: &ExperimentConfig, spec: &SpectralSpec, base: &Path, cap: usize) -> CliResult<Artifacts> {
    let corr = build_correlation(&spec.input, base, "experiment.spectral.input", cap)?;
    let verdict = classify_singular(&corr, &spec.n_schedule, &spec.p_schedule, spec.policy).map_err(|e| CliError::at_field("experiment.spectral", e))?;
    let mut csv = String::from("n,p,degree,count,uncertified,bound,outcome\n");
    let mut dat = header(config, &["n", "p", "count", "uncertified"]);
    for r in &verdict.rows {
        let outcome = serde_json::to_value(r.outcome).expect("outcome serializes");
        writeln!(csv, "{},{},{},{},{},{:.17e},{}", r.n, r.p, r.degree, r.count, r.uncertified, r.bound, outcome.as_str().unwrap_or_default()).unwrap();
        writeln!(dat, "{} {} {} {}", r.n, r.p, r.count, r.uncertified).unwrap();
    }
    Ok(Artifacts { csv, summary: summary(config, &verdict), dat })
}

/// Writes the four outputs, staging each under a temporary name first so a
/// failure leaves no partial set behind.
pub fn write_outputs(dir: &Path, stem: &str, artifacts: &Artifacts, meta: &str) -> CliResult<Written> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let written = Written {
        csv: dir.join(format!("{stem}.csv")),
        summary: dir.join(format!("{stem}.summary.json")),
        dat: dir.join(format!("{stem}.dat")),
        meta: dir.join(format!("{stem}.meta.json")),
    };
    let files = [(&written.csv, &artifacts.csv), (&written.summary, &artifacts.summary), (&written.dat, &artifacts.dat), (&written.meta, &meta.to_string())];
    let staged: Vec<PathBuf> = files.iter().map(|(p, _)| p.with_extension(format!("{}.partial", p.extension().and_then(|e| e.to_str()).unwrap_or("")))).collect();
    let cleanup = |upto: usize| {
        for p in &staged[..upto] {
            let _ = fs::remove_file(p);
        }
    };
    for (i, ((_, body), tmp)) in files.iter().zip(&staged).enumerate() {
        if let Err(e) = fs::write(tmp, body.as_bytes()) {
            cleanup(i);
            return Err(CliError::io(tmp, e));
        }
    }
    for ((path, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, path).map_err(|e| CliError::io(*path, e))?;
    }
    Ok(written)
}
