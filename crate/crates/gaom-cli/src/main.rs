//! Command-line front end: map multivectors through outermorphism files,
//! run the benchmark grid, fit its CSV output, print memory accounting, and
//! dump kernel schedules.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use gaom::bench::{
    bench_run, fit_rows, memory_report, parse_bench_csv, BenchConfig, Method, SparsityClass,
};
use gaom::{
    build_btr, map_cbmm, map_obmm, map_obmm_traced, map_oracle, parse_multivector,
    parse_outermorphism, render_kernels, write_multivector, CbmmTable, TraceEvent,
};

#[derive(Parser)]
#[command(name = "gaom", about = "Outermorphism mapping and benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapMethod {
    Obmm,
    Cbmm,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Map a multivector file through an outermorphism file.
    Map {
        /// Outermorphism file: `dims <n> <m>` header, then n column lines.
        #[arg(long)]
        om: PathBuf,
        /// Multivector file: one `<blade_id> <coefficient>` per line.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MapMethod,
        /// Write the traversal event log to stderr (obmm only).
        #[arg(long)]
        trace: bool,
    },
    /// Time both mapping methods across dimensions and sparsity classes.
    Bench {
        /// Inclusive dimension range, e.g. `3..10`, or a single dimension.
        #[arg(long, default_value = "3..10")]
        dims: String,
        /// Comma-separated subset of full,kvectors,terms.
        #[arg(long, default_value = "full,kvectors,terms")]
        classes: String,
        /// Comma-separated subset of obmm,cbmm.
        #[arg(long, default_value = "obmm,cbmm")]
        methods: String,
        #[arg(long, default_value_t = 20)]
        reps: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run distinct (n, class, method) cells on separate threads.
        #[arg(long)]
        parallel_cells: bool,
    },
    /// Refit the exponential curves from a benchmark CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print scalar/node memory accounting per dimension.
    Mem {
        /// Inclusive dimension range, e.g. `3..15`, or a single dimension.
        #[arg(long, default_value = "3..15")]
        dims: String,
    },
    /// Emit the vector-wedge-kvector kernel schedules for one dimension.
    GenKernels {
        #[arg(long)]
        dim: u32,
    },
}

fn parse_dims(spec: &str) -> anyhow::Result<std::ops::RangeInclusive<u32>> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo.trim().parse().context("range start")?;
        let hi: u32 = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .context("range end")?;
        if lo > hi {
            bail!("empty dimension range {spec}");
        }
        Ok(lo..=hi)
    } else {
        let n: u32 = spec.parse().context("dimension")?;
        Ok(n..=n)
    }
}

fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let items: Vec<T> = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {what} list `{spec}`"))?;
    if items.is_empty() {
        bail!("empty {what} list");
    }
    Ok(items)
}

fn open(path: &PathBuf) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn print_trace(events: &[TraceEvent]) {
    let mut iteration = 0usize;
    for event in events {
        match event {
            TraceEvent::Pop { .. } => {
                iteration += 1;
                eprintln!("iteration {iteration}:");
                eprintln!("  {event}");
            }
            TraceEvent::Push { .. } if iteration == 0 => {
                eprintln!("initialize: {event}");
            }
            _ => eprintln!("  {event}"),
        }
    }
}

fn run_map(om: &PathBuf, input: &PathBuf, method: MapMethod, trace: bool) -> anyhow::Result<()> {
    let om = parse_outermorphism(open(om)?)?;
    let x = parse_multivector(open(input)?, om.domain_dim())?;
    if trace && !matches!(method, MapMethod::Obmm) {
        bail!("--trace is only available with --method obmm");
    }
    let result = match method {
        MapMethod::Obmm => {
            let tree = build_btr(&x);
            if trace {
                let (y, events) = map_obmm_traced(&om, &tree)?;
                print_trace(&events);
                y.to_sparse()
            } else {
                map_obmm(&om, &tree)?.to_sparse()
            }
        }
        MapMethod::Cbmm => map_cbmm(&CbmmTable::build(&om)?, &x)?.to_sparse(),
        MapMethod::Oracle => map_oracle(&om, &x)?,
    };
    print!("{}", write_multivector(&result));
    Ok(())
}

fn run_bench(
    dims: &str,
    classes: &str,
    methods: &str,
    reps: u32,
    seed: u64,
    out: Option<PathBuf>,
    parallel_cells: bool,
) -> anyhow::Result<()> {
    let config = BenchConfig {
        dims: parse_dims(dims)?,
        classes: parse_list::<SparsityClass>(classes, "class")?,
        methods: parse_list::<Method>(methods, "method")?,
        reps,
        seed,
        parallel_cells,
    };
    match out {
        Some(path) => {
            let mut file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            bench_run(&config, &mut file)?;
        }
        None => {
            let stdout = io::stdout();
            bench_run(&config, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn run_fit(input: &PathBuf) -> anyhow::Result<()> {
    let mut text = String::new();
    open(input)?.read_to_string(&mut text)?;
    let rows = parse_bench_csv(text.as_bytes())?;
    if rows.is_empty() {
        bail!("no measurement rows in {}", input.display());
    }
    for (class, method, fit) in fit_rows(&rows)? {
        println!(
            "class={class} method={method} c={:.6} b={:.6} residual={:.6}",
            fit.c, fit.b, fit.residual
        );
    }
    Ok(())
}

fn run_mem(dims: &str) -> anyhow::Result<()> {
    let dims = parse_dims(dims)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(
        w,
        "n,cbmm_def_scalars,cbmm_def_bytes,obmm_def_scalars,obmm_mapping_peak_scalars,btr_full_nodes,btr_kvectors_nodes,btr_terms_nodes"
    )?;
    for n in dims {
        let full = memory_report(n, SparsityClass::Full)?;
        let kvectors = memory_report(n, SparsityClass::KVectors)?;
        let terms = memory_report(n, SparsityClass::Terms)?;
        writeln!(
            w,
            "{n},{},{},{},{},{},{:.2},{}",
            full.cbmm_def_scalars,
            full.cbmm_def_scalars * 8,
            full.obmm_def_scalars,
            full.obmm_mapping_peak_scalars,
            full.btr_nodes as u64,
            kvectors.btr_nodes,
            terms.btr_nodes as u64
        )?;
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Map {
            om,
            input,
            method,
            trace,
        } => run_map(&om, &input, method, trace),
        Command::Bench {
            dims,
            classes,
            methods,
            reps,
            seed,
            out,
            parallel_cells,
        } => run_bench(&dims, &classes, &methods, reps, seed, out, parallel_cells),
        Command::Fit { input } => run_fit(&input),
        Command::Mem { dims } => run_mem(&dims),
        Command::GenKernels { dim } => {
            print!("{}", render_kernels(dim)?);
            Ok(())
        }
    }
}
