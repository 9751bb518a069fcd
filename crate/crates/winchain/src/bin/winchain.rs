use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use winchain::bench::{mismatches, run_suite, write_report, BenchConfig, SUITES};
use winchain::csvio::import_csv;
use winchain::exec::output_schema;
use winchain::gen::{generate, GenSpec, OrderDirective};
use winchain::mem::DEFAULT_BLOCK_BYTES;
use winchain::runner::{prepare, run_query, RunConfig};
use winchain::spec::WorkloadSpec;
use winchain::table::TableReader;
use winchain::EngineError;
use winchain_core::optimizer::{self, Scheme, BFO_BOUND};

#[derive(Parser)]
#[command(name = "winchain", version, about = "Plan, run and benchmark chains of window functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic table, or import a CSV file, with statistics.
    Gen(GenArgs),
    /// Print the plan a scheme picks for a workload.
    Plan(QueryArgs),
    /// Plan and execute a workload.
    Run(RunArgs),
    /// Run a benchmark suite and write a CSV report.
    Bench(BenchArgs),
    /// Run a workload under every scheme and compare the results.
    Verify(QueryArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Table file to write; statistics go to `<out>.stats.json`.
    #[arg(long)]
    out: PathBuf,
    /// Import this CSV file instead of generating rows.
    #[arg(long, conflicts_with_all = ["rows", "schema"])]
    csv: Option<PathBuf>,
    /// Generator description (JSON); the web sales shape if unset.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    rows: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// none, sorted:<attr> or grouped:<attr>.
    #[arg(long, default_value = "none")]
    order: String,
    #[arg(long, default_value_t = DEFAULT_BLOCK_BYTES)]
    block_bytes: usize,
    /// Distinct items in the web sales shape.
    #[arg(long)]
    items: Option<u64>,
}

#[derive(Args)]
struct QueryArgs {
    /// Table file; overrides the spec's `table`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Workload spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's scheme (default cso).
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Memory per reorder step in blocks; overrides the spec (default 64).
    #[arg(long)]
    mem_blocks: Option<usize>,
    /// Spill block size; the table's block size if unset.
    #[arg(long)]
    block_bytes: Option<usize>,
    #[arg(long)]
    tmp_dir: Option<PathBuf>,
    /// Write the plan (plan) or result rows (run) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Skip the order checks between steps.
    #[arg(long)]
    no_validate: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite name or `all`.
    #[arg(long)]
    suite: String,
    /// Dataset directory; missing datasets are generated.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 200_000)]
    rows: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BLOCK_BYTES)]
    block_bytes: usize,
    #[arg(long)]
    tmp_dir: Option<PathBuf>,
    /// Memory grants as fractions of the table, comma separated.
    #[arg(long, value_delimiter = ',')]
    mem_fractions: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    items: Option<u64>,
    /// CSV report; stdout if unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Mismatch(String),
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Plan(a) => plan(a),
        Cmd::Run(a) => run(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Verify(a) => verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(msg)) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let stats = if let Some(csv) = &a.csv {
        import_csv(csv, &a.out, a.block_bytes).with_context(|| format!("importing {}", csv.display()))?
    } else {
        let mut spec = match &a.schema {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<GenSpec>(&text).map_err(|e| Failure::Usage(anyhow::anyhow!("{}: {e}", p.display())))?
            }
            None => GenSpec::web_sales(a.rows, a.seed),
        };
        if a.schema.is_none() {
            spec.order = OrderDirective::parse(&a.order).map_err(|e| Failure::Usage(e.into()))?;
            if let Some(items) = a.items {
                spec.columns.iter_mut().filter(|c| c.name == "item").for_each(|c| c.distinct = items);
            }
        }
        generate(&spec, &a.out, a.block_bytes).with_context(|| format!("generating {}", a.out.display()))?
    };
    println!("{}: {} rows in {} blocks of {} bytes", a.out.display(), stats.rows, stats.blocks, stats.block_bytes);
    Ok(())
}

struct Loaded {
    spec: WorkloadSpec,
    table: PathBuf,
    cfg: RunConfig,
}

fn load(a: &QueryArgs) -> Result<Loaded, Failure> {
    let spec = WorkloadSpec::load(&a.spec).map_err(|e| Failure::Usage(e.into()))?;
    let table = a
        .data
        .clone()
        .or_else(|| spec.table.clone())
        .ok_or_else(|| Failure::Usage(anyhow::anyhow!("no table: pass --data or set `table` in the spec")))?;
    let scheme = a.scheme.or(spec.scheme).unwrap_or(Scheme::Cso);
    let mem = a.mem_blocks.or(spec.mem_blocks).unwrap_or(64);
    if mem < 3 {
        return Err(Failure::Usage(anyhow::anyhow!("memory budget must be at least 3 blocks, got {mem}")));
    }
    let mut cfg = RunConfig::new(scheme, mem);
    cfg.block_bytes = a.block_bytes;
    cfg.tmp_dir = a.tmp_dir.clone();
    cfg.input = spec.input.clone();
    // Attribute names must exist in the table.
    let reader = TableReader::open(&table, None)?;
    let workload = spec.workload().map_err(|e| Failure::Usage(e.into()))?;
    for attr in workload.attributes().iter() {
        if reader.schema().index_of(attr.name()).is_none() {
            return Err(Failure::Usage(anyhow::anyhow!("attribute `{}` is not a column of {}", attr.name(), table.display())));
        }
    }
    output_schema(reader.schema(), &workload).map_err(|e| Failure::Usage(e.into()))?;
    Ok(Loaded { spec, table, cfg })
}

fn table_name(p: &Path) -> String {
    p.file_stem().map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned())
}

fn plan(a: QueryArgs) -> Result<(), Failure> {
    let l = load(&a)?;
    let workload = l.spec.workload().map_err(|e| Failure::Usage(e.into()))?;
    let prep = prepare(&l.table, &l.cfg)?;
    let start = Instant::now();
    let p = optimizer::plan(l.cfg.scheme, &prep.input, &workload, &prep.rel).map_err(|e| Failure::Usage(e.into()))?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    println!("{}", p.to_chain(&table_name(&l.table), &workload));
    println!("estimated cost {:.0} blocks, planned in {ms:.3} ms", p.est_cost());
    if let Some(out) = &a.out {
        let f = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
        serde_json::to_writer_pretty(f, &p).context("writing plan")?;
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let mut l = load(&a.query)?;
    l.cfg.validate = !a.no_validate;
    let workload = l.spec.workload().map_err(|e| Failure::Usage(e.into()))?;
    let schema = output_schema(TableReader::open(&l.table, None)?.schema(), &workload)?;
    let mut writer = match &a.query.out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(f));
            w.write_record(schema.columns().iter().map(|c| c.name.as_str())).context("writing results")?;
            Some(w)
        }
        None => None,
    };
    let report = run_query(&l.table, &table_name(&l.table), &workload, &l.cfg, |row| {
        if let Some(w) = &mut writer {
            w.write_record(row.iter().map(|v| if v.is_null() { String::new() } else { v.to_string() }))
                .map_err(|e| EngineError::format(e.to_string()))?;
        }
        Ok(())
    })?;
    if let Some(mut w) = writer {
        w.flush().context("writing results")?;
    }
    println!("{}", report.plan);
    println!(
        "{} rows, estimated {:.0} blocks, actual {} blocks, {:.1} ms",
        report.rows, report.est_cost, report.actual_io_blocks, report.wall_ms
    );
    if let Some(p) = &a.query.report {
        let f = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        serde_json::to_writer_pretty(f, &report).context("writing report")?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let suites: Vec<&str> = if a.suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&a.suite.as_str()) {
        vec![a.suite.as_str()]
    } else {
        return Err(Failure::Usage(anyhow::anyhow!("unknown suite `{}`; expected all or one of {}", a.suite, SUITES.join(", "))));
    };
    let mut cfg = BenchConfig::new(&a.data, a.rows);
    cfg.seed = a.seed;
    cfg.block_bytes = a.block_bytes;
    cfg.tmp_dir = a.tmp_dir.clone();
    cfg.mem_fractions = a.mem_fractions.clone();
    cfg.repeats = a.repeats;
    cfg.items = a.items;
    let mut all = Vec::new();
    for s in suites {
        let rows = run_suite(s, &cfg, |r| {
            eprintln!("{} {} M={} {:.1} ms", r.query, r.scheme, r.mem_blocks, r.wall_ms);
        })?;
        all.extend(rows);
    }
    match &a.out {
        Some(p) => write_report(File::create(p).with_context(|| format!("creating {}", p.display()))?, &all)?,
        None => write_report(std::io::stdout().lock(), &all)?,
    }
    let bad = mismatches(&all);
    if !bad.is_empty() {
        return Err(Failure::Mismatch(bad.join("; ")));
    }
    Ok(())
}

fn verify(a: QueryArgs) -> Result<(), Failure> {
    let l = load(&a)?;
    let workload = l.spec.workload().map_err(|e| Failure::Usage(e.into()))?;
    let mut first: Option<(Scheme, u64)> = None;
    let mut bad = Vec::new();
    for scheme in Scheme::ALL {
        if scheme == Scheme::Bfo && workload.len() > BFO_BOUND {
            continue;
        }
        let mut cfg = l.cfg.clone();
        cfg.scheme = scheme;
        cfg.validate = true;
        let r = run_query(&l.table, &table_name(&l.table), &workload, &cfg, |_| Ok(()))?;
        println!("{scheme}: {} rows, hash {:016x}, {}", r.rows, r.content_hash, r.plan);
        match first {
            None => first = Some((scheme, r.content_hash)),
            Some((s, h)) if h != r.content_hash => bad.push(format!("{scheme} differs from {s}")),
            _ => {}
        }
    }
    let _ = std::io::stdout().flush();
    if !bad.is_empty() {
        return Err(Failure::Mismatch(bad.join("; ")));
    }
    Ok(())
}
