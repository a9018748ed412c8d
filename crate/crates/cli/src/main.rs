//! `fopforge` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure or counterexample,
//! 2 input error, 3 budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use fopforge::fologic::{check_mutual_exclusion, classify_projection, Exclusion};
use fopforge::harness::{check_instance, sample_indices, HarnessError, InstanceOutcome, Stage, Summary};
use fopforge::oracles::{solve_3sat, solve_partition, solve_subsetsum, Budget, OracleError};
use fopforge::problems::{
    decode_partition, decode_sat, decode_subsetsum, encode_3sat, enumerate_3sat, is_rho1_image_form, parse_dimacs,
    PartitionInstance, ProblemError, SubsetSumInstance,
};
use fopforge::projana::{build_table, emit_table, ProjanaError};
use fopforge::reductions::{apply_reduction, resolve_def, ReductionDef, ReductionError, DEFAULT_NODE_BUDGET};
use fopforge::structures::{Structure, StructureError};

/// Seed used by `verify --samples` when none is given.
const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Verify(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Budget(_) => CliError::Budget(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Budget { .. } => CliError::Budget(e.to_string()),
            OracleError::Transport(_) => CliError::Verify(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Oracle(e) => e.into(),
            HarnessError::Reduction(e) => e.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<ProjanaError> for CliError {
    fn from(e: ProjanaError) -> Self {
        match e {
            ProjanaError::Reduction(e) => e.into(),
            ProjanaError::NotProjective { .. } | ProjanaError::Conflict { .. } => CliError::Verify(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_error!(ProblemError, StructureError, serde_json::Error);

#[derive(Parser)]
#[command(name = "fopforge", version, about = "First-order projections between 3SAT, SUBSET-SUM and PARTITION")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    #[value(name = "3sat")]
    Sat,
    Subsetsum,
    Partition,
}

#[derive(Subcommand)]
enum Command {
    /// DIMACS CNF to a ⟨P,N⟩ structure, squared to n variables and n clauses.
    Encode3sat(Io),
    /// Applies a reduction (rho1, rho2 or a definition file).
    Reduce {
        #[arg(long)]
        def: String,
        /// Comma-separated reductions applied after `--def`.
        #[arg(long)]
        chain: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Reads a structure as a problem instance.
    Decode {
        #[arg(long = "as", value_enum)]
        problem: Problem,
        #[command(flatten)]
        io: Io,
    },
    /// Runs the brute-force oracle; structures or instance JSON accepted.
    Solve {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Checks the chain on enumerated 3SAT instances.
    Verify(VerifyArgs),
    /// Checks that every formula of a definition is a projection at a size.
    CheckProjection {
        #[arg(long)]
        def: String,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Writes the dependency table of a projection.
    Deps {
        #[arg(long)]
        def: String,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary_only: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// rho1 or full; defaults to rho1 for exhaustive n=3 and full otherwise.
    #[arg(long)]
    stage: Option<String>,
    /// Where to write the JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_structure(path: &Path) -> Result<Structure, CliError> {
    Ok(Structure::from_json(&read_json(path)?)?)
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_def(name: &str) -> Result<ReductionDef, CliError> {
    Ok(resolve_def(name)?)
}

fn cmd_encode(io: &Io) -> Result<(), CliError> {
    let text = fs::read_to_string(&io.input).map_err(|e| CliError::Input(format!("{}: {e}", io.input.display())))?;
    let inst = parse_dimacs(&text)?;
    eprintln!("encoded {} variables, {} clauses", inst.n(), inst.clauses().len());
    write_json(io.out.as_deref(), &encode_3sat(&inst).to_json())
}

fn cmd_reduce(def: &str, chain: Option<&str>, io: &Io) -> Result<(), CliError> {
    let mut names = vec![def.to_string()];
    if let Some(c) = chain {
        names.extend(c.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from));
    }
    let mut s = read_structure(&io.input)?;
    let mut sizes = vec![s.size().to_string()];
    for name in &names {
        let d = load_def(name)?;
        if d.name == "rho2" {
            let report = is_rho1_image_form(&s);
            if !report.holds() {
                let failed: String = report.failed().iter().map(char::to_string).collect::<Vec<_>>().join(",");
                eprintln!("WARNING: input is not in rho1 image form (checks {failed} failed); applying rho2 mechanically");
            }
        }
        s = apply_reduction(&d, &s)?;
        sizes.push(s.size().to_string());
    }
    eprintln!("sizes: {}", sizes.join(" -> "));
    write_json(io.out.as_deref(), &s.to_json())
}

fn cmd_decode(problem: Problem, io: &Io) -> Result<(), CliError> {
    let s = read_structure(&io.input)?;
    let v = match problem {
        Problem::Sat => {
            let clauses = decode_sat(&s)?;
            json!({"n": s.size(), "clauses": clauses})
        }
        Problem::Subsetsum => serde_json::to_value(decode_subsetsum(&s)?)?,
        Problem::Partition => serde_json::to_value(decode_partition(&s)?)?,
    };
    write_json(io.out.as_deref(), &v)
}

/// Instance JSON accepts sizes as decimal strings or plain numbers.
fn stringify_numbers(v: &mut Value) {
    match v {
        Value::Number(n) => *v = Value::String(n.to_string()),
        Value::Array(a) => a.iter_mut().for_each(stringify_numbers),
        Value::Object(o) => o.values_mut().for_each(stringify_numbers),
        _ => {}
    }
}

fn cmd_solve(problem: Problem, input: &Path) -> Result<(), CliError> {
    let mut v = read_json(input)?;
    let budget = Budget::from_env();
    let is_instance = v.get("sizes").is_some();
    if is_instance {
        stringify_numbers(&mut v);
    }
    let (verdict, witness) = match problem {
        Problem::Sat => {
            let s = Structure::from_json(&v)?;
            let a = solve_3sat(&s, budget)?;
            (a.is_some(), a.map(|a| a.to_json()))
        }
        Problem::Subsetsum => {
            let inst: SubsetSumInstance =
                if is_instance { serde_json::from_value(v)? } else { decode_subsetsum(&Structure::from_json(&v)?)? };
            let w = solve_subsetsum(&inst, budget)?;
            (w.is_some(), w.map(|w| w.to_json()))
        }
        Problem::Partition => {
            let inst: PartitionInstance =
                if is_instance { serde_json::from_value(v)? } else { decode_partition(&Structure::from_json(&v)?)? };
            let w = solve_partition(&inst, budget)?;
            (w.is_some(), w.map(|w| w.to_json()))
        }
    };
    println!("verdict: {}", if verdict { "yes" } else { "no" });
    if let Some(w) = witness {
        println!("witness: {w}");
    }
    Ok(())
}

fn outcome_json(o: &InstanceOutcome) -> Value {
    json!({
        "index": o.index,
        "satisfiable": o.satisfiable,
        "subsetsum": o.subsetsum,
        "partition": o.partition,
        "agree": o.agrees(),
        "digits": {"t": o.digits.target, "sum": o.digits.row_sum, "b1": o.digits.b1, "b2": o.digits.b2},
        "transports": o.transports,
        "balanced_sides": o.partitions_checked,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    if !(2..=3).contains(&a.n) {
        return Err(CliError::Input(format!("--n must be 2 or 3, got {}", a.n)));
    }
    let e = enumerate_3sat(a.n)?;
    let (mode, indices) = match (a.exhaustive, a.samples) {
        (_, Some(k)) => ("samples", sample_indices(e.len(), k, a.seed)),
        _ => ("exhaustive", (0..e.len()).collect()),
    };
    let stage: Stage = match &a.stage {
        Some(s) => s.parse()?,
        None if mode == "exhaustive" && a.n == 3 => Stage::Rho1,
        None => Stage::Full,
    };
    let defs = fopforge::reductions::builtin_defs();
    let budget = Budget::from_env();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let start = Instant::now();
    let outcomes: Vec<InstanceOutcome> = pool.install(|| {
        indices.par_iter().map(|&i| check_instance(i, &e.instance_at(i), &defs, stage, budget)).collect::<Result<_, _>>()
    })?;
    let elapsed = start.elapsed();

    let mut summary = Summary::default();
    outcomes.iter().for_each(|o| summary.add(o));
    let counterexamples: Vec<Value> = outcomes
        .iter()
        .filter(|o| !o.agrees())
        .map(|o| json!({"index": o.index, "instance": e.instance_at(o.index), "discrepancies": o.discrepancies}))
        .collect();
    let targets: Vec<String> = summary.targets.iter().map(|t| t.to_str_radix(10)).collect();
    let report = json!({
        "command": "verify",
        "inputs": {"n": a.n, "mode": mode, "samples": a.samples, "stage": stage.to_string()},
        "seed": a.seed,
        "summary": {
            "instances": summary.instances,
            "agree": summary.agree,
            "satisfiable": summary.satisfiable,
            "transports": summary.transports,
            "balanced_sides": summary.partitions_checked,
            "targets": targets,
        },
        "verdicts": outcomes.iter().map(outcome_json).collect::<Vec<_>>(),
        "counterexamples": counterexamples,
        "timing": {"elapsed_ms": elapsed.as_millis() as u64},
    });
    if let Some(p) = &a.report {
        write_json(Some(p), &report)?;
    }
    println!(
        "n={} {mode} stage={stage}: {}/{} agree, {} satisfiable, {} distinct target(s), {:.2?}",
        a.n,
        summary.agree,
        summary.instances,
        summary.satisfiable,
        summary.targets.len(),
        elapsed
    );
    if summary.ok() {
        Ok(())
    } else {
        if let Some(c) = counterexamples.first() {
            println!("counterexample: {c}");
        }
        Err(CliError::Verify(format!("{} discrepant instance(s)", summary.instances - summary.agree)))
    }
}

fn cmd_check_projection(def: &str, size: usize, node_budget: u64) -> Result<(), CliError> {
    let d = load_def(def)?;
    d.validate()?;
    let mut undecided = None;
    for (rel, f) in &d.relations {
        let form = classify_projection(f).map_err(|e| CliError::Verify(format!("{rel}: not a projection: {e}")))?;
        let params = d.relation_params(rel)?;
        match check_mutual_exclusion(&form, &params, size, node_budget)
            .map_err(|e| CliError::Input(format!("{rel}: {e}")))?
        {
            Exclusion::Exclusive { pairs } => {
                println!("{rel}: projection with {} guards, {pairs} pairs exclusive at size {size}", form.guards().len())
            }
            Exclusion::Overlap { first, second, assignment } => {
                let at: Vec<String> = assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{rel}: guards {first} and {second} overlap at {}", at.join(" "));
                return Err(CliError::Verify(format!("{rel}: guards are not mutually exclusive")));
            }
            Exclusion::Undecided { first, second } => {
                println!("{rel}: guards {first} and {second} undecided within the node budget");
                undecided = Some(rel.clone());
            }
        }
    }
    match undecided {
        Some(rel) => Err(CliError::Budget(format!("{rel}: exclusion check ran out of budget"))),
        None => {
            println!("ok");
            Ok(())
        }
    }
}

fn cmd_deps(def: &str, size: usize, out: &Path, summary_only: bool, node_budget: u64) -> Result<(), CliError> {
    let d = load_def(def)?;
    let table = build_table(&d, size, node_budget)?;
    let v = emit_table(&table, summary_only);
    for t in v["tables"].as_array().into_iter().flatten() {
        println!("{}: {}", t["relation"].as_str().unwrap_or("?"), t["stats"]);
    }
    write_json(Some(out), &v)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Encode3sat(io) => cmd_encode(io),
        Command::Reduce { def, chain, io } => cmd_reduce(def, chain.as_deref(), io),
        Command::Decode { problem, io } => cmd_decode(*problem, io),
        Command::Solve { problem, input } => cmd_solve(*problem, input),
        Command::Verify(a) => cmd_verify(a),
        Command::CheckProjection { def, size, node_budget } => cmd_check_projection(def, *size, *node_budget),
        Command::Deps { def, size, out, summary_only, node_budget } => {
            cmd_deps(def, *size, out, *summary_only, *node_budget)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
