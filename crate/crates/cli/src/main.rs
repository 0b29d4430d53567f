use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::{info, warn};
use mps_core::{
    measure_extra_work, oracle, parse_arity_declarations, run_f64, Dataset, EngineConfig, Error,
    LoadOptions, RunOutput64,
};

/// Largest table the --oracle-check cross-validation accepts.
const ORACLE_CHECK_MAX_VARS: usize = 16;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

/// Enumerate the maximal parent sets of every variable in a categorical table.
#[derive(Parser, Debug)]
#[command(name = "mps", version)]
struct Args {
    /// CSV file with a header row of variable names.
    #[arg(long)]
    input: PathBuf,

    /// Result file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,

    /// Worker threads; defaults to the number of hardware threads.
    #[arg(long)]
    workers: Option<usize>,

    /// Bytes allowed for materialized frontiers; defaults to 75% of RAM.
    #[arg(long)]
    memory_budget: Option<u64>,

    #[arg(long, default_value_t = 4)]
    chunks_per_worker: usize,

    /// Sidecar of `name,arity` lines declaring states absent from the data.
    #[arg(long)]
    arities: Option<PathBuf>,

    /// Write run statistics as key=value lines.
    #[arg(long)]
    stats: Option<PathBuf>,

    /// Disable both pruning conditions.
    #[arg(long)]
    no_prune: bool,

    /// Switch to depth-first exploration at this layer.
    #[arg(long)]
    force_dfs_layer: Option<usize>,

    /// Do not process layers deeper than this.
    #[arg(long)]
    max_layer: Option<usize>,

    /// Cross-check the result against exhaustive enumeration (small tables only).
    #[arg(long)]
    oracle_check: bool,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Budget(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Budget(m) | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetTooSmall { .. } => Failure::Budget(e.to_string()),
            Error::Io(_) => Failure::Other(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// 75% of `MemTotal` from /proc/meminfo.
fn default_budget() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let kib: u64 = info
        .lines()
        .find_map(|l| l.strip_prefix("MemTotal:"))?
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kib * 1024 / 4 * 3)
}

fn engine_config(args: &Args) -> EngineConfig {
    let mut config = EngineConfig {
        chunks_per_worker: args.chunks_per_worker,
        max_layer: args.max_layer,
        dfs_force_layer: args.force_dfs_layer,
        pruning_enabled: !args.no_prune,
        ..EngineConfig::default()
    };
    if let Some(w) = args.workers {
        config.workers = w;
    }
    config.memory_budget_bytes = match args.memory_budget.or_else(default_budget) {
        Some(b) => b,
        None => {
            warn!("could not read total memory; running without a memory budget");
            u64::MAX
        }
    };
    config
}

fn write_results(out: &mut dyn Write, ds: &Dataset, result: &RunOutput64, format: Format) -> io::Result<()> {
    let records = (0..ds.n()).flat_map(|orig| {
        let k = ds.canonical_position(orig);
        result.lists[k].entries().iter().map(move |e| {
            let parents: Vec<&str> = e.parents.iter().map(|p| ds.canon_name(p)).collect();
            (ds.names()[orig].as_str(), parents, e.score)
        })
    });
    match format {
        Format::Jsonl => {
            for (var, parents, score) in records {
                writeln!(
                    out,
                    "{{\"variable\":{},\"parents\":{},\"score\":{score:.9}}}",
                    serde_json::to_string(var)?,
                    serde_json::to_string(&parents)?,
                )?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["variable", "parents", "score"])?;
            for (var, parents, score) in records {
                w.write_record([var, &parents.join(";"), &format!("{score:.9}")])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn write_stats(path: &Path, result: &RunOutput64, extra_work: Option<f64>) -> io::Result<()> {
    let s = &result.stats;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "l_max={}", s.l_max)?;
    writeln!(w, "l_z={}", s.l_z)?;
    writeln!(w, "z={}", s.z)?;
    writeln!(w, "z_f={}", s.z_f)?;
    writeln!(w, "flagged_rejected={}", s.flagged_rejected)?;
    writeln!(w, "nodes_processed={}", s.nodes_processed)?;
    writeln!(w, "tasks_processed={}", s.layer_tasks.iter().sum::<u64>())?;
    writeln!(w, "pruned_by_cond1={}", s.pruned_by_cond1)?;
    writeln!(w, "pruned_by_cond2={}", s.pruned_by_cond2)?;
    match s.dfs_switch_layer {
        Some(l) => writeln!(w, "dfs_switch_layer={l}")?,
        None => writeln!(w, "dfs_switch_layer=none")?,
    }
    writeln!(w, "peak_frontier_bytes={}", s.peak_frontier_bytes)?;
    writeln!(w, "wall_time_secs={:.3}", s.wall_time.as_secs_f64())?;
    for (l, (nodes, tasks)) in s.layer_nodes.iter().zip(&s.layer_tasks).enumerate() {
        writeln!(w, "layer.{l}.nodes={nodes}")?;
        writeln!(w, "layer.{l}.tasks={tasks}")?;
    }
    if let Some(f) = extra_work {
        writeln!(w, "extra_work={f:.6}")?;
    }
    w.flush()
}

/// Compares against exhaustive enumeration; returns the extra-work fraction.
fn oracle_check(ds: &Dataset, config: &EngineConfig, result: &RunOutput64) -> Result<f64, Failure> {
    let expected = oracle::brute_force(ds)?;
    for (k, (list, want)) in result.lists.iter().zip(&expected).enumerate() {
        let mut got: Vec<_> = list.entries().iter().map(|e| (e.parents, e.score)).collect();
        let mut want = want.clone();
        got.sort_by_key(|e| e.0);
        want.sort_by_key(|e| e.0);
        let same = got.len() == want.len()
            && got.iter().zip(&want).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-9);
        if !same {
            return Err(Failure::Other(format!(
                "oracle mismatch for variable {:?}",
                ds.canon_name(k)
            )));
        }
    }
    info!("oracle check passed");
    Ok(measure_extra_work::<f64>(ds, config)?.fraction)
}

fn execute(args: &Args) -> Result<(), Failure> {
    let arities = match &args.arities {
        Some(p) => Some(parse_arity_declarations(open(p)?).map_err(|e| Failure::Input(e.to_string()))?),
        None => None,
    };
    let ds = Dataset::load(open(&args.input)?, &LoadOptions { arities })
        .map_err(|e| Failure::Input(format!("{}: {e}", args.input.display())))?;
    info!("loaded {} variables, {} observations", ds.n(), ds.m());
    if args.oracle_check && ds.n() > ORACLE_CHECK_MAX_VARS {
        return Err(Failure::Input(format!(
            "--oracle-check supports at most {ORACLE_CHECK_MAX_VARS} variables, input has {}",
            ds.n()
        )));
    }

    let config = engine_config(args);
    let result = run_f64(&ds, &config)?;
    info!(
        "z={} l_max={} l_z={} in {:.2?}",
        result.stats.z, result.stats.l_max, result.stats.l_z, result.stats.wall_time
    );
    let extra_work = if args.oracle_check {
        Some(oracle_check(&ds, &config, &result)?)
    } else {
        None
    };

    let io_err = |what: &str, e: io::Error| Failure::Other(format!("{what}: {e}"));
    let mut out: BufWriter<Box<dyn Write>> = BufWriter::new(match &args.output {
        Some(p) => Box::new(File::create(p).map_err(|e| io_err(&p.display().to_string(), e))?),
        None => Box::new(io::stdout().lock()),
    });
    write_results(&mut out, &ds, &result, args.format)
        .and_then(|_| out.flush())
        .map_err(|e| io_err("writing results", e))?;
    if let Some(p) = &args.stats {
        write_stats(p, &result, extra_work).map_err(|e| io_err(&p.display().to_string(), e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mps: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
