use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergolab::asymptotics::{asymmetry_gap, parse_rational, phi_mix, psi_partial, psi_rigid, triple_correlation, Direction};
use ergolab::seqentropy::h_j;
use ergolab::spectral::{classify_singular, default_n_schedule, default_p_schedule, CorrelationSequence, DegreePolicy};
use ergolab::zoo::SystemDescriptor;
use ergolab::DEFAULT_CELL_CAP;
use serde_json::json;

use crate::catalog::{catalog, render_text};
use crate::config::{FamilySpec, PartitionSpec};
use crate::error::{exit, CliError, CliResult};
use crate::runner::{build_family, build_partition, build_system, describe_family, run};
use crate::settings::Settings;
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "ergolab", version, about = "Exact finite experiments on measure-preserving automorphisms")]
pub struct Cli {
    /// Largest number of cells any system or product space may have.
    #[arg(long, global = true, env = "ERGOLAB_CELL_CAP", default_value_t = DEFAULT_CELL_CAP)]
    pub cell_cap: usize,

    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "ERGOLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config and write its CSV, summary, data and metadata files.
    Run {
        config: PathBuf,
        /// Write outputs here instead of the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the system descriptor grammar, the cell cap and the inventory.
    ListSystems {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run acceptance checks; exit 0 iff all selected checks pass.
    Verify {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Print every sub-assertion under its check line.
        #[arg(long)]
        verbose: bool,
    },
    /// Evaluate one functional on one system.
    Diag {
        #[command(subcommand)]
        which: Diag,
    },
    /// Classify an external correlation sequence (CSV with columns s,re,im).
    SpectralClassify {
        csv: PathBuf,
        /// Comma-separated N values.
        #[arg(long, value_delimiter = ',', default_values_t = default_n_schedule())]
        n_schedule: Vec<u64>,
        /// Comma-separated P values (each ≥ 3).
        #[arg(long, value_delimiter = ',', default_values_t = default_p_schedule())]
        p_schedule: Vec<usize>,
        /// Fejér degree policy: adaptive:<factor>, scaled:<factor> or fixed:<degree>.
        #[arg(long, default_value = "adaptive:64", value_parser = parse_policy)]
        policy: DegreePolicy,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Args)]
pub struct SetArgs {
    /// System descriptor, e.g. `bernoulli_cyclic:k=2,L=10`.
    #[arg(long)]
    pub system: SystemDescriptor,
    /// Number of family sets `N`.
    #[arg(long, default_value_t = 4)]
    pub n_sets: usize,
    /// Lag `j`.
    #[arg(long)]
    pub j: u64,
    /// Use single-coordinate sets at these coordinates (Bernoulli only)
    /// instead of the canonical family.
    #[arg(long, value_delimiter = ',')]
    pub coords: Option<Vec<usize>>,
    /// Size of the canonical family.
    #[arg(long, default_value_t = 16)]
    pub i_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Diag {
    /// Mixing functional φ(N, j).
    Phi(SetArgs),
    /// Rigidity functional ψ(N, j).
    Psi(SetArgs),
    /// Partial rigidity functional ψ_a(N, j).
    PsiA {
        /// `a` in (0, 1], e.g. `1/2`.
        #[arg(long)]
        a: String,
        #[command(flatten)]
        set: SetArgs,
    },
    /// `h_j = H(⋁_p T^p ξ)/|P_j|` for an explicit lag set.
    HJ {
        #[arg(long)]
        system: SystemDescriptor,
        /// Coordinate partition (Bernoulli systems).
        #[arg(long, conflicts_with = "blocks")]
        coord: Option<usize>,
        /// Partition into this many consecutive blocks.
        #[arg(long)]
        blocks: Option<usize>,
        /// Comma-separated positive lags.
        #[arg(long, value_delimiter = ',', required = true)]
        lags: Vec<i64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Forward and backward triple correlations and their gap.
    Triple {
        #[arg(long)]
        system: SystemDescriptor,
        /// `A = {w_coord = symbol}` (Bernoulli systems).
        #[arg(long, conflicts_with = "cells")]
        coord: Option<usize>,
        #[arg(long, default_value_t = 0, requires = "coord")]
        symbol: usize,
        /// `A = [lo, hi)` as `lo,hi`.
        #[arg(long, value_parser = parse_cell_range)]
        cells: Option<(usize, usize)>,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn parse_cell_range(text: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = text.split_once(',').ok_or_else(|| format!("`{text}` is not lo,hi"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a nonnegative integer"));
    Ok((num(lo)?, num(hi)?))
}

fn parse_policy(text: &str) -> Result<DegreePolicy, String> {
    let (kind, value) = text.split_once(':').ok_or_else(|| format!("`{text}` is not kind:value"))?;
    let value: usize = value.parse().map_err(|_| format!("`{value}` is not a nonnegative integer"))?;
    match kind {
        "adaptive" => Ok(DegreePolicy::Adaptive { factor: value }),
        "scaled" => Ok(DegreePolicy::Scaled { factor: value }),
        "fixed" => Ok(DegreePolicy::Fixed { degree: value }),
        other => Err(format!("unknown policy `{other}`; expected adaptive, scaled or fixed")),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let settings = Settings { cell_cap: cli.cell_cap, threads: cli.threads };
    if settings.threads == Some(0) {
        let _ = writeln!(err, "error: field `--threads`: must be at least 1");
        return exit::VALIDATION;
    }
    match dispatch(cli.command, &settings, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> CliResult<()> {
    out.write_all(text.as_ref().as_bytes()).map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
}

fn dispatch(command: Command, settings: &Settings, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Run { config, out_dir } => {
            let written = run(&config, out_dir.as_deref(), settings)?;
            emit(out, format!("wrote {}\nwrote {}\nwrote {}\nwrote {}\n", written.csv.display(), written.summary.display(), written.dat.display(), written.meta.display()))?;
            Ok(exit::OK)
        }
        Command::ListSystems { format } => {
            let c = catalog(settings);
            match format {
                Format::Text => emit(out, render_text(&c))?,
                Format::Structured => emit(out, format!("{}\n", serde_json::to_string_pretty(&c).expect("catalog serializes")))?,
            }
            Ok(exit::OK)
        }
        Command::Verify { suite, verbose } => {
            let results = run_suite(suite, settings);
            for r in &results {
                emit(out, format!("{}\n", r.line()))?;
                if verbose || !r.passed {
                    for d in &r.details {
                        emit(out, format!("        {d}\n"))?;
                    }
                }
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            emit(out, format!("{} of {} checks passed\n", results.len() - failed, results.len()))?;
            Ok(if failed == 0 { exit::OK } else { exit::FAILURE })
        }
        Command::Diag { which } => {
            let mut buf: Vec<u8> = Vec::new();
            let code = settings.install(|| diag(which, settings, &mut buf))??;
            emit(out, String::from_utf8_lossy(&buf))?;
            Ok(code)
        }
        Command::SpectralClassify { csv, n_schedule, p_schedule, policy, format } => {
            let file = std::fs::File::open(&csv).map_err(|e| CliError::io(&csv, e))?;
            let corr = CorrelationSequence::read_csv(std::io::BufReader::new(file), csv.display().to_string()).map_err(|e| CliError::Validation(format!("{}: {e}", csv.display())))?;
            let verdict = settings
                .install(|| classify_singular(&corr, &n_schedule, &p_schedule, policy))?
                .map_err(|e| CliError::Validation(e.to_string()))?;
            match format {
                Format::Structured => emit(out, format!("{}\n", serde_json::to_string_pretty(&verdict).expect("verdict serializes")))?,
                Format::Text => {
                    let verdict_name = serde_json::to_value(verdict.verdict).expect("verdict serializes");
                    let mut text = format!("source: {}\nverdict: {}\n", verdict.source, verdict_name.as_str().unwrap_or_default());
                    if let Some(w) = verdict.witness {
                        text.push_str(&format!("witness: N = {}, P = {}\n", w.n, w.p));
                    }
                    text.push_str(&format!("margin: {:.6}\nerror budget: {:.3e}\n\n{:>4} {:>6} {:>9} {:>6} {:>6} {:>11}  outcome\n", verdict.margin, verdict.error_budget, "N", "P", "degree", "|D|", "open", "bound"));
                    for r in &verdict.rows {
                        let outcome = serde_json::to_value(r.outcome).expect("outcome serializes");
                        text.push_str(&format!("{:>4} {:>6} {:>9} {:>6} {:>6} {:>11.3e}  {}\n", r.n, r.p, r.degree, r.count, r.uncertified, r.bound, outcome.as_str().unwrap_or_default()));
                    }
                    emit(out, text)?;
                }
            }
            Ok(exit::OK)
        }
    }
}

fn report(out: &mut dyn Write, format: Format, text: String, structured: serde_json::Value) -> CliResult<i32> {
    match format {
        Format::Text => emit(out, format!("{text}\n"))?,
        Format::Structured => emit(out, format!("{}\n", serde_json::to_string_pretty(&structured).expect("JSON values serialize")))?,
    }
    Ok(exit::OK)
}

fn diag(which: Diag, settings: &Settings, out: &mut dyn Write) -> CliResult<i32> {
    let cap = settings.cell_cap;
    match which {
        Diag::Phi(args) => set_functional("phi", None, args, cap, out),
        Diag::Psi(args) => set_functional("psi", None, args, cap, out),
        Diag::PsiA { a, set } => {
            let a = parse_rational(&a).map_err(|e| CliError::at_field("--a", e))?;
            set_functional("psi_a", Some(a), set, cap, out)
        }
        Diag::HJ { system, coord, blocks, lags, format } => {
            let sys = build_system(&system, "--system", cap)?;
            let spec = match (coord, blocks) {
                (Some(coord), _) => PartitionSpec::Coordinate { coord },
                (None, Some(count)) => PartitionSpec::Blocks { count },
                (None, None) => return Err(CliError::Validation("h-j needs --coord or --blocks".into())),
            };
            let xi = build_partition(&sys, &spec, "partition")?;
            let value = h_j(&sys.automorphism, &xi, &lags).map_err(|e| CliError::at_field("--lags", e))?;
            let text = format!("h_j({system}, |P| = {}) = {value:.17e}  (H(xi) = {:.17e})", lags.len(), xi.entropy());
            report(out, format, text, json!({ "system": system.to_string(), "lags": lags, "h_j": value, "partition_entropy": xi.entropy() }))
        }
        Diag::Triple { system, coord, symbol, cells, m, format } => {
            let sys = build_system(&system, "--system", cap)?;
            let set = match (coord, cells) {
                (Some(c), _) => match &sys.bernoulli {
                    Some(b) => b.coordinate_set(c as i64, symbol).map_err(|e| CliError::at_field("--coord", e))?,
                    None => return Err(CliError::Validation("--coord needs a bernoulli_cyclic system".into())),
                },
                (None, Some((lo, hi))) => {
                    if lo >= hi || hi > sys.automorphism.len() {
                        return Err(CliError::Validation(format!("field `--cells`: need lo < hi ≤ {}", sys.automorphism.len())));
                    }
                    ergolab::CellSet::interval(sys.automorphism.space(), lo, hi)
                }
                (None, None) => return Err(CliError::Validation("triple needs --coord or --cells".into())),
            };
            let t = &sys.automorphism;
            let forward = triple_correlation(t, &set, m, Direction::Forward).map_err(|e| CliError::at_field("--m", e))?;
            let backward = triple_correlation(t, &set, m, Direction::Backward)?;
            let gap = asymmetry_gap(t, &set, m)?;
            let text = format!("mu(A) = {}\nforward  mu(A ∩ T^m A ∩ T^3m A) = {forward}\nbackward mu(A ∩ T^-m A ∩ T^-3m A) = {backward}\ngap = {gap}", set.measure());
            report(out, format, text, json!({ "system": system.to_string(), "m": m, "measure": set.measure().to_string(), "forward": forward.to_string(), "backward": backward.to_string(), "gap": gap.to_string() }))
        }
    }
}

fn set_functional(name: &str, a: Option<ergolab::Rational>, args: SetArgs, cap: usize, out: &mut dyn Write) -> CliResult<i32> {
    let sys = build_system(&args.system, "--system", cap)?;
    let spec = match &args.coords {
        Some(coords) => FamilySpec::SingleCoordinate { coords: coords.clone() },
        None => FamilySpec::Canonical { i_max: args.i_max },
    };
    let fam = build_family(&sys, &spec, "family")?;
    let t = &sys.automorphism;
    let value = match a {
        Some(a) => psi_partial(t, &fam, a, args.n_sets, args.j),
        None if name == "phi" => phi_mix(t, &fam, args.n_sets, args.j),
        None => psi_rigid(t, &fam, args.n_sets, args.j),
    }
    .map_err(|e| CliError::at_field("--n-sets/--j", e))?;
    let label = a.map_or_else(|| name.to_string(), |a| format!("{name}(a={a})"));
    let text = format!("{label}(N={}, j={}) on {} = {value}  ({:.17e}); family: {}", args.n_sets, args.j, args.system, ergolab::to_f64(&value), describe_family(&spec));
    let below = value < ergolab::Rational::new(1, args.n_sets as i128);
    report(
        out,
        args.format,
        text,
        json!({ "functional": label, "system": args.system.to_string(), "n_sets": args.n_sets, "j": args.j, "value": value.to_string(), "value_f64": ergolab::to_f64(&value), "below_one_over_n": below, "family": describe_family(&spec) }),
    )
}
