//! `mkbell`: partitions and entanglement indices, MK operator dumps and
//! identity checks, Bell-value classification, and ACC diagram exports.
//! File-based and deterministic: every command gives identical output for
//! identical flags (the seed defaults to 0).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mkbell_core::classifier::{
    acc_points, classify, classify_at, AccData, SettingsPolicy, TypeSpec,
};
use mkbell_core::io::{settings_from_json, state_from_json};
use mkbell_core::mk::{build_mk, build_mk_split};
use mkbell_core::optimizer::OptimizerConfig;
use mkbell_core::partition::partitions_iter;
use mkbell_core::Error as CoreError;

const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_INCONSISTENT: u8 = 4;

#[derive(Parser)]
#[command(name = "mkbell", version, about = "N-qubit entanglement classification via MK Bell operators")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Seed for every stochastic step; fixed default keeps runs reproducible.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Certification tolerance on bound comparisons.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Emit JSON where the command supports it.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV where the command supports it (default for `acc`).
    #[arg(long, global = true)]
    csv: bool,
    /// Write primary output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List the partitions of N with their indices and class bounds.
    Partitions { n: usize },
    /// Classify a state: optimize Bell values and certify a class.
    Classify {
        /// State spec JSON file.
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        /// Settings JSON file; when given, evaluation only (no optimization).
        #[arg(long, value_name = "FILE")]
        settings: Option<PathBuf>,
        /// Optimizer restarts.
        #[arg(long, default_value_t = 32)]
        restarts: usize,
    },
    /// Sample (⟨F⟩, ⟨F'⟩) point clouds for a state family.
    Acc {
        #[arg(long)]
        n: usize,
        /// `separable`, `haar`, or a partition like `3,1`.
        #[arg(long = "type", value_name = "SPEC")]
        type_spec: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// `random` or `optimized`.
        #[arg(long, default_value = "random")]
        policy: String,
        /// Optimizer restarts under the optimized policy.
        #[arg(long, default_value_t = 32)]
        restarts: usize,
    },
    /// Inspect MK operators.
    Mk {
        #[command(subcommand)]
        action: MkAction,
    },
}

#[derive(Subcommand)]
enum MkAction {
    /// Print the coefficient map of F_N, one term per line.
    Dump { n: usize },
    /// Verify the block identity against the recursion for every valid k.
    Check { n: usize },
}

struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { message: message.into(), code: EXIT_USAGE }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidArgument(_) | CoreError::DegenerateState(_) => EXIT_USAGE,
            CoreError::CapacityExceeded(_) => EXIT_CAPACITY,
            CoreError::InconsistentValue(_) => EXIT_INCONSISTENT,
        };
        Failure { message: e.to_string(), code }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MKBELL_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t > 0 => mkbell_core::set_max_threads(t),
            _ => {
                eprintln!("error: MKBELL_THREADS must be a positive integer");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; anything else is usage.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Partitions { n } => cmd_partitions(&cli.global, *n),
        Command::Classify { state, settings, restarts } => {
            cmd_classify(&cli.global, state, settings.as_deref(), *restarts)
        }
        Command::Acc { n, type_spec, samples, policy, restarts } => {
            cmd_acc(&cli.global, *n, type_spec, *samples, policy, *restarts)
        }
        Command::Mk { action } => match action {
            MkAction::Dump { n } => cmd_mk_dump(&cli.global, *n),
            MkAction::Check { n } => cmd_mk_check(*n),
        },
    }
}

fn write_output(global: &GlobalOpts, content: &str) -> Result<(), Failure> {
    match &global.out {
        Some(path) => {
            std::fs::write(path, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn optimizer_config(global: &GlobalOpts, restarts: usize) -> OptimizerConfig {
    OptimizerConfig {
        restarts,
        seed: global.seed,
        ..OptimizerConfig::default()
    }
}

/// Streaming writer for row-oriented commands; p(64) has 1.7M partitions
/// and must not be buffered whole.
fn output_sink(global: &GlobalOpts) -> Result<Box<dyn std::io::Write>, Failure> {
    Ok(match &global.out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

fn cmd_partitions(global: &GlobalOpts, n: usize) -> Result<(), Failure> {
    let mut sink = output_sink(global)?;
    if global.json {
        writeln!(sink, "[")?;
        let mut first = true;
        for p in partitions_iter(n)? {
            let s = p.stats();
            let row = serde_json::json!({
                "partition": p.parts(),
                "l": s.entangled_groups,
                "k1": s.singletons,
                "e": s.entanglement_index,
                "s": s.separability_index,
                "quadratic_bound": (2.0f64).powi(s.entanglement_index as i32 + 1),
                "separable": p.is_separable(),
            });
            if !first {
                writeln!(sink, ",")?;
            }
            write!(sink, "  {row}")?;
            first = false;
        }
        writeln!(sink, "\n]")?;
        sink.flush()?;
        return Ok(());
    }

    writeln!(
        sink,
        "{:<20} {:>3} {:>3} {:>3} {:>3} {:>16} {:>9}",
        "partition", "L", "K1", "E", "S", "quadratic_bound", "separable"
    )?;
    let mut total = 0u64;
    let mut distinct_indices = std::collections::BTreeSet::new();
    for p in partitions_iter(n)? {
        let s = p.stats();
        writeln!(
            sink,
            "{:<20} {:>3} {:>3} {:>3} {:>3} {:>16} {:>9}",
            p.to_string(),
            s.entangled_groups,
            s.singletons,
            s.entanglement_index,
            s.separability_index,
            (2.0f64).powi(s.entanglement_index as i32 + 1),
            if p.is_separable() { "yes" } else { "no" },
        )?;
        total += 1;
        if !p.is_separable() {
            distinct_indices.insert(s.entanglement_index);
        }
    }
    if n >= 2 {
        writeln!(
            sink,
            "{total} partitions, {} entanglement classes (E = 2..{n})",
            distinct_indices.len(),
        )?;
    }
    sink.flush()?;
    Ok(())
}

fn cmd_classify(
    global: &GlobalOpts,
    state_path: &Path,
    settings_path: Option<&Path>,
    restarts: usize,
) -> Result<(), Failure> {
    let state_text = std::fs::read_to_string(state_path)?;
    let state = state_from_json(&state_text)?;
    let report = match settings_path {
        Some(path) => {
            let settings = settings_from_json(&std::fs::read_to_string(path)?)?;
            classify_at(&state, &settings, global.tol)?
        }
        None => classify(&state, &optimizer_config(global, restarts), global.tol)?,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_output(global, &text)
}

fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

fn acc_csv(data: &AccData) -> String {
    let mut text = String::from("f,fprime,type,policy\n");
    for p in &data.points {
        writeln!(
            text,
            "{},{},{},{}",
            float17(p.f),
            float17(p.fprime),
            data.type_label,
            data.policy
        )
        .unwrap();
    }
    text
}

fn radii_json(data: &AccData) -> String {
    let map: serde_json::Map<String, serde_json::Value> = data
        .radii
        .iter()
        .map(|(e, r)| (e.to_string(), serde_json::json!(r)))
        .collect();
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map)).unwrap();
    text.push('\n');
    text
}

fn cmd_acc(
    global: &GlobalOpts,
    n: usize,
    type_spec: &str,
    samples: usize,
    policy: &str,
    restarts: usize,
) -> Result<(), Failure> {
    let spec = TypeSpec::parse(type_spec)?;
    let policy = SettingsPolicy::parse(policy)?;
    let config = optimizer_config(global, restarts);
    let data = acc_points(n, &spec, samples, global.seed, policy, &config)?;

    if global.json {
        let mut text = serde_json::to_string_pretty(&data).expect("acc data serializes");
        text.push('\n');
        return write_output(global, &text);
    }

    let csv = acc_csv(&data);
    let radii = radii_json(&data);
    match &global.out {
        Some(path) => {
            std::fs::write(path, csv)?;
            let sidecar = sidecar_path(path);
            std::fs::write(&sidecar, radii)?;
        }
        None => {
            print!("{csv}");
            // Keep stdout pipe-clean: the overlay radii go to stderr.
            eprint!("{radii}");
        }
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".radii.json");
    out.with_file_name(name)
}

fn cmd_mk_dump(global: &GlobalOpts, n: usize) -> Result<(), Failure> {
    let (f, _) = build_mk(n)?;
    let mut text = String::new();
    for line in f.dump_lines() {
        writeln!(text, "{line}").unwrap();
    }
    write_output(global, &text)
}

fn cmd_mk_check(n: usize) -> Result<(), Failure> {
    let (f, _) = build_mk(n)?;
    if n < 4 {
        println!("no valid splits for N={n} (need 2 <= k <= N-2)");
        return Ok(());
    }
    let mut all_ok = true;
    for k in 2..=n - 2 {
        let split = build_mk_split(n, k)?;
        let ok = split == f;
        all_ok &= ok;
        println!("k={k} {}", if ok { "PASS" } else { "FAIL" });
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure {
            message: format!("block identity violated for N={n}"),
            code: EXIT_INCONSISTENT,
        })
    }
}
