use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use mfree_core::calibration::load_calibration_file;
use mfree_core::io::{counts_to_json, read_counts_file};
use mfree_core::sim::{ghz_ideal, sample_noisy, synthetic_calibration, synthetic_correlated, IdealDistribution, NoiseSpec};
use mfree_core::solver::{mitigate_with_overhead, Method, SolveOptions};
use mfree_core::{estimate_csc_memory, expval, nearest_probability, BitString, DiagonalOperator, Error};

#[derive(Parser)]
#[command(name = "mfree", version, about = "Readout-error mitigation on the observed subspace")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mitigate a counts file against a calibration.
    Mitigate(MitigateArgs),
    /// Sample a synthetic counts file from a noisy GHZ or all-zeros state.
    Simulate(SimulateArgs),
    /// Estimate the memory a full CSC assignment matrix would need.
    Memory(MemoryArgs),
    /// Write a random tensored (or correlated) calibration file.
    SynthCal(SynthCalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Direct,
    Iterative,
}

#[derive(Args)]
struct MitigateArgs {
    #[arg(long)]
    counts: PathBuf,
    #[arg(long)]
    cal: PathBuf,
    /// Hamming distance cut-off.
    #[arg(long, default_value_t = 3)]
    distance: usize,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Iteration cap for the Krylov solver.
    #[arg(long, default_value_t = 1024)]
    max_iter: usize,
    /// Report the nearest probability distribution instead of quasi-probabilities.
    #[arg(long)]
    project: bool,
    /// Estimate the mitigation overhead and standard-deviation bound.
    #[arg(long)]
    overhead: bool,
    /// Diagonal operator over {I, Z, 0, 1}; leftmost character is the highest qubit.
    #[arg(long)]
    expval: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    qubits: usize,
    /// Prepare a GHZ state; otherwise all zeros.
    #[arg(long)]
    ghz: bool,
    /// Weight moved onto the uniform distribution.
    #[arg(long)]
    gate_noise: Option<f64>,
    #[arg(long)]
    cal: PathBuf,
    #[arg(long)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MemoryArgs {
    #[arg(long)]
    qubits: u32,
    #[arg(long)]
    distance: u32,
    #[arg(long, default_value_t = 4)]
    value_bytes: u32,
    #[arg(long, default_value_t = 8)]
    index_bytes: u32,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCalArgs {
    #[arg(long)]
    qubits: usize,
    #[arg(long, default_value_t = 0.01)]
    min_error: f64,
    #[arg(long, default_value_t = 0.02)]
    max_error: f64,
    /// Add pairwise matrices with this joint-flip weight.
    #[arg(long)]
    correlated: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

fn weights_object<'a>(entries: impl Iterator<Item = (&'a BitString, f64)>) -> Value {
    Value::Object(entries.map(|(k, w)| (k.to_string(), json!(w))).collect())
}

fn run_mitigate(args: &MitigateArgs) -> Result<(), Error> {
    let cal = load_calibration_file(&args.cal)?;
    let warnings = cal.validate()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let counts = read_counts_file(&args.counts)?;
    let op = args.expval.as_deref().map(DiagonalOperator::parse).transpose()?;
    let opts = SolveOptions {
        method: match args.method {
            MethodArg::Auto => Method::Auto,
            MethodArg::Direct => Method::Direct,
            MethodArg::Iterative => Method::Iterative,
        },
        tol: args.tol,
        max_iter: args.max_iter,
        ..Default::default()
    };
    let result = if args.overhead {
        mitigate_with_overhead(&cal, &counts, args.distance, &opts)?
    } else {
        let (quasi, report) = mfree_core::mitigate(&cal, &counts, args.distance, &opts)?;
        mfree_core::MitigationResult {
            quasi,
            report,
            overhead: None,
        }
    };

    let mut doc = Map::new();
    doc.insert("num_qubits".into(), json!(counts.width()));
    doc.insert("shots".into(), json!(counts.shots()));
    doc.insert("distance".into(), json!(args.distance));
    if args.project {
        let p = nearest_probability(&result.quasi);
        doc.insert("probabilities".into(), weights_object(p.iter()));
    } else {
        doc.insert("quasi_probabilities".into(), weights_object(result.quasi.iter()));
    }
    doc.insert("report".into(), serde_json::to_value(&result.report)?);
    if let Some(m) = &result.overhead {
        let mut o = serde_json::to_value(m)?;
        o["sigma_bound"] = json!(m.sigma_bound(counts.shots()));
        doc.insert("overhead".into(), o);
    }
    if let Some(op) = &op {
        let value = expval(&result.quasi, op)?;
        let stddev = result.overhead.as_ref().map(|m| m.sigma_bound(counts.shots()));
        doc.insert(
            "expval".into(),
            json!({ "operator": args.expval, "value": value, "stddev": stddev }),
        );
    }
    emit(&to_json(&Value::Object(doc)), args.out.as_ref())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let cal = load_calibration_file(&args.cal)?;
    if cal.num_qubits() != args.qubits {
        return Err(Error::WidthMismatch {
            expected: args.qubits,
            found: cal.num_qubits(),
        });
    }
    let ideal = if args.ghz {
        ghz_ideal(args.qubits, args.gate_noise)?
    } else {
        let g = args.gate_noise.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::InvalidArgument(format!("gate noise {g} outside [0, 1]")));
        }
        IdealDistribution::mixture(args.qubits, [(BitString::zeros(args.qubits)?, 1.0 - g)], g)?
    };
    let counts = sample_noisy(&ideal, &NoiseSpec::new(cal, args.seed), args.shots)?;
    emit(&counts_to_json(&counts), args.out.as_ref())
}

fn format_bytes(bytes: u128) -> String {
    const UNITS: [&str; 7] = ["KiB", "MiB", "GiB", "TiB", "PiB", "EiB", "ZiB"];
    if bytes < 1024 {
        return format!("{bytes} B");
    }
    let mut v = bytes as f64 / 1024.0;
    let mut unit = 0;
    while v >= 1024.0 && unit + 1 < UNITS.len() {
        v /= 1024.0;
        unit += 1;
    }
    format!("{v:.1} {}", UNITS[unit])
}

fn run_memory(args: &MemoryArgs) -> Result<(), Error> {
    let est = estimate_csc_memory(args.qubits, args.distance, args.value_bytes, args.index_bytes)?;
    let doc = to_json(&serde_json::to_value(est)?);
    if let Some(path) = &args.out {
        fs::write(path, &doc)?;
    }
    if args.json {
        print!("{doc}");
    } else {
        println!("CSC assignment matrix, N = {}, D = {}", est.num_qubits, est.distance);
        println!("  nonzeros per column  {}", est.entries_per_column);
        println!("  columns              {}", est.columns);
        println!("  values               {} ({} bytes)", format_bytes(est.value_bytes), est.value_bytes);
        println!("  row indices          {} ({} bytes)", format_bytes(est.row_index_bytes), est.row_index_bytes);
        println!("  column pointers      {} ({} bytes)", format_bytes(est.col_ptr_bytes), est.col_ptr_bytes);
        println!("  total                {} ({} bytes)", format_bytes(est.total_bytes), est.total_bytes);
    }
    Ok(())
}

fn run_synth_cal(args: &SynthCalArgs) -> Result<(), Error> {
    let mut cal = synthetic_calibration(args.qubits, args.min_error, args.max_error, args.seed)?;
    if let Some(strength) = args.correlated {
        cal = synthetic_correlated(&cal, strength)?;
    }
    let mut text = cal.to_json();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(&text, args.out.as_ref())
}

fn configure_threads() {
    let Ok(value) = std::env::var("MFREE_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not size thread pool: {e}");
            }
        }
        Err(_) => eprintln!("warning: ignoring MFREE_THREADS={value:?}"),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotConverged(_) => 3,
        e if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Mitigate(a) => run_mitigate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Memory(a) => run_memory(a),
        Command::SynthCal(a) => run_synth_cal(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
