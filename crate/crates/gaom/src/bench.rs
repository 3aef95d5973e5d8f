//! Benchmark harness: sparsity-classed input generation, wall-clock timing
//! of the two mapping methods, exponential curve fitting of the time/dimension
//! relationship, and scalar-level memory accounting.
//!
//! Timing protocol: 3 untimed warm-up repetitions (which also calibrate the
//! block size), then `reps` timed samples of the map call alone — input
//! construction, tree building, table building and output allocation all sit
//! outside the timed region; the output's zeroing is inside it. A sample
//! times a block of consecutive map calls sized to roughly 20 µs and records
//! the per-call average, so clock reads never contaminate sub-microsecond
//! calls; at or above the block budget a sample is a single call. Monotonic
//! clock, mean and sample standard deviation reported, every mapping result
//! routed through `black_box`. The TERMS class draws a fresh single-term
//! input per timed call so its mean averages over random blades; the other
//! classes are structurally deterministic and reuse one input. Samples are
//! clamped to 1 ns so log-domain fitting stays defined.

use std::fmt;
use std::hint::black_box;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blade::{binomial, comb_unrank, BasisBladeId, FrameDescriptor};
use crate::btr::{build_btr, BtrTree};
use crate::error::{Error, Result};
use crate::multivector::SparseMultivector;
use crate::outermorphism::{
    map_cbmm_into, map_obmm_into, map_obmm_peak_stack, CbmmTable, GradedOutput, Outermorphism,
};

const WARMUP_REPS: u32 = 3;
/// Clock-resolution floor for a single timed sample, in microseconds.
const MIN_SAMPLE_US: f64 = 1e-3;

/// Input sparsity classes of the experimental protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsityClass {
    /// All 2^n terms present: the least sparse kind.
    Full,
    /// Grade-homogeneous inputs, one per grade 0..=n, averaged.
    KVectors,
    /// A single random term: the most sparse kind.
    Terms,
}

impl SparsityClass {
    pub const ALL: [SparsityClass; 3] = [
        SparsityClass::Full,
        SparsityClass::KVectors,
        SparsityClass::Terms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SparsityClass::Full => "full",
            SparsityClass::KVectors => "kvectors",
            SparsityClass::Terms => "terms",
        }
    }

    fn index(self) -> u64 {
        match self {
            SparsityClass::Full => 0,
            SparsityClass::KVectors => 1,
            SparsityClass::Terms => 2,
        }
    }
}

impl fmt::Display for SparsityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SparsityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SparsityClass::Full),
            "kvectors" => Ok(SparsityClass::KVectors),
            "terms" => Ok(SparsityClass::Terms),
            other => Err(Error::InvalidArgument(format!(
                "unknown sparsity class `{other}`"
            ))),
        }
    }
}

/// Mapping method under measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Obmm,
    Cbmm,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Obmm, Method::Cbmm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Obmm => "obmm",
            Method::Cbmm => "cbmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obmm" => Ok(Method::Obmm),
            "cbmm" => Ok(Method::Cbmm),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// Parameters of a fitted exponential `c * b^n` together with the RMS
/// residual of the log-domain fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub c: f64,
    pub b: f64,
    pub residual: f64,
}

/// Mean and sample standard deviation of timed samples, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean_us: f64,
    pub std_us: f64,
}

/// Scalar/node-count accounting for one dimension.
///
/// `btr_nodes` is class-dependent: total node count of the class's
/// representative input tree; for `KVectors` it is the mean over grades
/// 0..=n, which need not be integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryReport {
    pub n: u32,
    pub class: SparsityClass,
    /// Coefficients a cached blade-image table stores: sum of C(n,k)^2 = C(2n,n).
    pub cbmm_def_scalars: u64,
    /// Coefficients defining the map online: the n x n matrix.
    pub obmm_def_scalars: u64,
    /// Measured peak coefficients simultaneously alive on the k-vector stack
    /// during a full-multivector online map.
    pub obmm_mapping_peak_scalars: u64,
    pub btr_nodes: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6C62_272E_07BB_0142, |acc, &p| splitmix64(acc ^ p))
}

fn nonzero_coefficient(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        if c != 0.0 {
            return c;
        }
    }
}

/// Deterministic input generator for a sparsity class. Coefficients are
/// uniform on [-1, 1] excluding exact zero; the TERMS blade is uniform over
/// [1, 2^n). `grade` is consulted only by the KVECTORS class, where it is
/// required.
pub fn gen_input(
    n: u32,
    class: SparsityClass,
    grade: Option<u32>,
    seed: u64,
) -> Result<SparseMultivector> {
    let frame = FrameDescriptor::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(BasisBladeId, f64)> = match class {
        SparsityClass::Full => (0..frame.blade_count() as u32)
            .map(|id| (BasisBladeId(id), nonzero_coefficient(&mut rng)))
            .collect(),
        SparsityClass::KVectors => {
            let k = grade
                .ok_or_else(|| Error::InvalidArgument("kvectors class requires a grade".into()))?;
            if k > n {
                return Err(Error::InvalidGrade { grade: k, dim: n });
            }
            (0..binomial(n, k) as usize)
                .map(|r| Ok((comb_unrank(n, k, r)?, nonzero_coefficient(&mut rng))))
                .collect::<Result<_>>()?
        }
        SparsityClass::Terms => {
            let id = rng.gen_range(1..frame.blade_count() as u32);
            vec![(BasisBladeId(id), nonzero_coefficient(&mut rng))]
        }
    };
    SparseMultivector::new(n, terms)
}

/// One prepared mapping workload: everything built outside the timed region.
enum Prepared {
    Obmm {
        om: Outermorphism,
        trees: Vec<BtrTree>,
    },
    Cbmm {
        table: CbmmTable,
        inputs: Vec<SparseMultivector>,
    },
}

impl Prepared {
    fn build(method: Method, om: &Outermorphism, inputs: Vec<SparseMultivector>) -> Result<Self> {
        Ok(match method {
            Method::Obmm => Prepared::Obmm {
                om: om.clone(),
                trees: inputs.iter().map(build_btr).collect(),
            },
            Method::Cbmm => Prepared::Cbmm {
                table: CbmmTable::build(om)?,
                inputs,
            },
        })
    }

    fn len(&self) -> usize {
        match self {
            Prepared::Obmm { trees, .. } => trees.len(),
            Prepared::Cbmm { inputs, .. } => inputs.len(),
        }
    }

    fn codomain_dim(&self) -> u32 {
        match self {
            Prepared::Obmm { om, .. } => om.codomain_dim(),
            Prepared::Cbmm { table, .. } => table.base().codomain_dim(),
        }
    }

    fn map_into(&self, index: usize, output: &mut GradedOutput) -> Result<()> {
        match self {
            Prepared::Obmm { om, trees } => map_obmm_into(om, &trees[index], output),
            Prepared::Cbmm { table, inputs } => map_cbmm_into(table, &inputs[index], output),
        }
    }
}

/// How long one timed block should take. Sub-block-size calls are measured
/// in consecutive blocks and attributed block_time / block_size each, so the
/// clock read never contaminates a sample.
const TARGET_BLOCK_NANOS: u64 = 20_000;
const MAX_BLOCK_CALLS: u64 = 16_384;

/// Times one workload: warm-up on the first input (which also calibrates the
/// block size), then `reps` timed samples. Each sample measures one block of
/// consecutive map calls (one call per block once a call reaches the block
/// budget) and records the per-call average, cycling through the prepared
/// inputs call by call. The output value is allocated once out here and
/// reused, mirroring the accounting where mapping itself adds no storage;
/// its zeroing is part of each timed call. Appends per-call microseconds,
/// one sample per rep.
fn run_timed(prepared: &Prepared, reps: u32, samples: &mut Vec<f64>) -> Result<()> {
    let mut output = GradedOutput::zero(prepared.codomain_dim());
    let mut checksum = 0.0f64;
    let warmup_start = Instant::now();
    for _ in 0..WARMUP_REPS {
        prepared.map_into(0, &mut output)?;
        checksum += black_box(&output).scalar_count() as f64;
    }
    let per_call_estimate =
        (warmup_start.elapsed().as_nanos() as u64 / u64::from(WARMUP_REPS)).max(1);
    let block_calls = (TARGET_BLOCK_NANOS / per_call_estimate).clamp(1, MAX_BLOCK_CALLS) as u32;

    let mut call_index = 0usize;
    for _ in 0..reps {
        let start = Instant::now();
        for _ in 0..block_calls {
            prepared.map_into(call_index % prepared.len(), &mut output)?;
            black_box(&output);
            call_index += 1;
        }
        let elapsed = start.elapsed();
        let per_call_us = elapsed.as_secs_f64() * 1e6 / f64::from(block_calls);
        samples.push(per_call_us.max(MIN_SAMPLE_US));
    }
    checksum += output.scalar_count() as f64;
    black_box(checksum);
    Ok(())
}

fn mean_std(samples: &[f64]) -> Timing {
    let len = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / len;
    let std = if samples.len() > 1 {
        (samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (len - 1.0)).sqrt()
    } else {
        0.0
    };
    Timing {
        mean_us: mean,
        std_us: std,
    }
}

/// Random square outermorphism for a timing cell; shared by both methods of
/// the same cell since the method does not enter the seed derivation.
fn cell_outermorphism(n: u32, seed: u64) -> Outermorphism {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, n as u64, 0x6F6D]));
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    Outermorphism::from_columns(n, n, &columns).expect("generated columns have the right shape")
}

/// Mean wall-clock time of the map call for one `(method, n, class)` cell.
///
/// The KVECTORS class times each grade 0..=n separately (same rep count) and
/// pools the samples, so the reported mean is the per-grade mean of means.
pub fn time_mapping(
    method: Method,
    n: u32,
    class: SparsityClass,
    reps: u32,
    seed: u64,
) -> Result<Timing> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    FrameDescriptor::new(n)?;
    let om = cell_outermorphism(n, seed);
    let mut samples = Vec::new();
    match class {
        SparsityClass::KVectors => {
            for k in 0..=n {
                let input_seed = mix_seed(&[seed, n as u64, class.index(), k as u64]);
                let input = gen_input(n, class, Some(k), input_seed)?;
                let prepared = Prepared::build(method, &om, vec![input])?;
                run_timed(&prepared, reps, &mut samples)?;
            }
        }
        SparsityClass::Full => {
            let input_seed = mix_seed(&[seed, n as u64, class.index()]);
            let input = gen_input(n, class, None, input_seed)?;
            let prepared = Prepared::build(method, &om, vec![input])?;
            run_timed(&prepared, reps, &mut samples)?;
        }
        SparsityClass::Terms => {
            // One fresh random blade per rep: the cell mean averages over
            // the only structurally random class.
            let inputs = (0..reps)
                .map(|rep| {
                    let input_seed = mix_seed(&[seed, n as u64, class.index(), rep as u64]);
                    gen_input(n, class, None, input_seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let prepared = Prepared::build(method, &om, inputs)?;
            run_timed(&prepared, reps, &mut samples)?;
        }
    }
    Ok(mean_std(&samples))
}

/// Log-domain linear least squares for `time = c * b^n`: slope = ln b,
/// intercept = ln c on `(n, ln time)`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "exponential fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    for &(x, value) in points {
        if value <= 0.0 {
            return Err(Error::NonpositiveSample { x, value });
        }
    }
    let len = points.len() as f64;
    let sum_x: f64 = points.iter().map(|&(x, _)| x).sum();
    let sum_y: f64 = points.iter().map(|&(_, y)| y.ln()).sum();
    let mean_x = sum_x / len;
    let mean_y = sum_y / len;
    let sxx: f64 = points
        .iter()
        .map(|&(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    let sxy: f64 = points
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y.ln() - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "all points share one x value".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (points
        .iter()
        .map(|&(x, y)| {
            let r = y.ln() - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / len)
        .sqrt();
    Ok(FitResult {
        c: intercept.exp(),
        b: slope.exp(),
        residual,
    })
}

fn class_tree_nodes(n: u32, class: SparsityClass) -> Result<f64> {
    let count_nodes = |mv: &SparseMultivector| {
        let (internal, leaf) = build_btr(mv).node_count();
        (internal + leaf) as f64
    };
    Ok(match class {
        SparsityClass::Full => {
            let terms = (0..(1u64 << n) as u32).map(|id| (BasisBladeId(id), 1.0));
            count_nodes(&SparseMultivector::new(n, terms)?)
        }
        SparsityClass::KVectors => {
            let mut total = 0.0;
            for k in 0..=n {
                let terms = (0..binomial(n, k) as usize)
                    .map(|r| Ok((comb_unrank(n, k, r)?, 1.0)))
                    .collect::<Result<Vec<_>>>()?;
                total += count_nodes(&SparseMultivector::new(n, terms)?);
            }
            total / (n as f64 + 1.0)
        }
        SparsityClass::Terms => count_nodes(&SparseMultivector::new(n, [(BasisBladeId(1), 1.0)])?),
    })
}

/// Peak k-vector-stack coefficients during a full-multivector online map.
/// The identity map is used: stack entry sizes depend only on tree structure
/// and grades, so the value is a deterministic function of the dimension and
/// worth memoizing across reports.
fn full_map_peak_scalars(n: u32) -> Result<u64> {
    use std::sync::{Mutex, OnceLock};
    static MEMO: OnceLock<Mutex<std::collections::HashMap<u32, u64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(std::collections::HashMap::new()));
    if let Some(&peak) = memo.lock().expect("peak memo poisoned").get(&n) {
        return Ok(peak);
    }
    let om = Outermorphism::identity(n);
    let full_terms = (0..(1u64 << n) as u32).map(|id| (BasisBladeId(id), 1.0));
    let full = SparseMultivector::new(n, full_terms)?;
    let (_, peak) = map_obmm_peak_stack(&om, &build_btr(&full))?;
    memo.lock()
        .expect("peak memo poisoned")
        .insert(n, peak as u64);
    Ok(peak as u64)
}

/// Exact scalar/node accounting for one dimension. The cached-table and
/// defining-matrix figures are analytic (no table is allocated); the online
/// mapping peak is measured by instrumenting a full-multivector map.
pub fn memory_report(n: u32, class: SparsityClass) -> Result<MemoryReport> {
    FrameDescriptor::new(n)?;
    Ok(MemoryReport {
        n,
        class,
        cbmm_def_scalars: binomial(2 * n, n),
        obmm_def_scalars: (n as u64) * (n as u64),
        obmm_mapping_peak_scalars: full_map_peak_scalars(n)?,
        btr_nodes: class_tree_nodes(n, class)?,
    })
}

/// Configuration of a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dims: std::ops::RangeInclusive<u32>,
    pub classes: Vec<SparsityClass>,
    pub methods: Vec<Method>,
    pub reps: u32,
    pub seed: u64,
    pub parallel_cells: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            dims: 3..=10,
            classes: SparsityClass::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            reps: 20,
            seed: 42,
            parallel_cells: false,
        }
    }
}

/// One measurement row of the CSV report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n: u32,
    pub class: SparsityClass,
    pub method: Method,
    pub mean_us: f64,
    pub std_us: f64,
    pub scalar_mem: u64,
}

pub const BENCH_CSV_HEADER: &str = "n,class,method,mean_us,std_us,scalar_mem";

fn method_scalar_mem(method: Method, n: u32) -> u64 {
    match method {
        Method::Obmm => (n as u64) * (n as u64),
        Method::Cbmm => binomial(2 * n, n),
    }
}

/// Spins real mapping work for a moment before any cell is timed, so CPU
/// frequency scaling and caches settle; the smallest cells run first and are
/// the most sensitive to a cold machine.
fn global_warmup() {
    let om = cell_outermorphism(8, 0);
    let input = gen_input(8, SparsityClass::Full, None, 0).expect("warmup input");
    let table = CbmmTable::build(&om).expect("warmup table");
    let tree = build_btr(&input);
    let mut output = GradedOutput::zero(8);
    let deadline = Instant::now() + std::time::Duration::from_millis(60);
    while Instant::now() < deadline {
        map_cbmm_into(&table, &input, &mut output).expect("warmup map");
        black_box(&output);
        map_obmm_into(&om, &tree, &mut output).expect("warmup map");
        black_box(&output);
    }
}

/// Runs the full measurement grid and returns the rows in deterministic
/// `(n, class, method)` order. Cells are *measured* in a seed-shuffled order
/// so transient machine slowdowns spread across dimensions instead of
/// landing on whichever cells run first. With `parallel_cells` set, distinct
/// cells run on separate threads; each measurement loop stays
/// single-threaded.
pub fn bench_measure(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    global_warmup();
    let mut cells: Vec<(u32, SparsityClass, Method)> = config
        .dims
        .clone()
        .flat_map(|n| {
            config.classes.iter().flat_map(move |&class| {
                config.methods.iter().map(move |&method| (n, class, method))
            })
        })
        .collect();
    // Fisher-Yates with a seed-derived stream; measurement order only.
    let mut order_state = mix_seed(&[config.seed, 0x5348]);
    for i in (1..cells.len()).rev() {
        order_state = splitmix64(order_state);
        cells.swap(i, (order_state % (i as u64 + 1)) as usize);
    }

    let time_cell = |&(n, class, method): &(u32, SparsityClass, Method)| -> Result<BenchRow> {
        let timing = time_mapping(method, n, class, config.reps, config.seed)?;
        Ok(BenchRow {
            n,
            class,
            method,
            mean_us: timing.mean_us,
            std_us: timing.std_us,
            scalar_mem: method_scalar_mem(method, n),
        })
    };

    let mut rows: Vec<BenchRow> = if config.parallel_cells {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .iter()
                .map(|cell| scope.spawn(move || time_cell(cell)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark cell thread panicked"))
                .collect::<Result<Vec<BenchRow>>>()
        })?
    } else {
        cells
            .iter()
            .map(time_cell)
            .collect::<Result<Vec<BenchRow>>>()?
    };

    let class_position = |class: SparsityClass| {
        config
            .classes
            .iter()
            .position(|&c| c == class)
            .expect("measured class is configured")
    };
    let method_position = |method: Method| {
        config
            .methods
            .iter()
            .position(|&m| m == method)
            .expect("measured method is configured")
    };
    rows.sort_by_key(|row| {
        (
            row.n,
            class_position(row.class),
            method_position(row.method),
        )
    });
    Ok(rows)
}

/// Fits `c * b^n` per `(class, method)` column from measurement rows, in the
/// column order the rows appear.
pub fn fit_rows(rows: &[BenchRow]) -> Result<Vec<(SparsityClass, Method, FitResult)>> {
    let mut columns: Vec<(SparsityClass, Method)> = Vec::new();
    for row in rows {
        if !columns.contains(&(row.class, row.method)) {
            columns.push((row.class, row.method));
        }
    }
    columns
        .into_iter()
        .map(|(class, method)| {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.class == class && r.method == method)
                .map(|r| (r.n as f64, r.mean_us))
                .collect();
            Ok((class, method, fit_exponential(&points)?))
        })
        .collect()
}

/// Runs the grid and writes the CSV report: a header, one measurement row
/// per cell, then one `fit,...` footer row per `(class, method)` column.
pub fn bench_run(config: &BenchConfig, writer: &mut impl Write) -> Result<()> {
    let rows = bench_measure(config)?;
    writeln!(writer, "{BENCH_CSV_HEADER}")?;
    for row in &rows {
        writeln!(
            writer,
            "{},{},{},{:.3},{:.3},{}",
            row.n, row.class, row.method, row.mean_us, row.std_us, row.scalar_mem
        )?;
    }
    for (class, method, fit) in fit_rows(&rows)? {
        writeln!(
            writer,
            "fit,{},{},{:.6},{:.6},{:.6}",
            class, method, fit.c, fit.b, fit.residual
        )?;
    }
    Ok(())
}

/// Reads measurement rows back from a CSV report, skipping the header and
/// `fit,` footer rows.
pub fn parse_bench_csv(reader: impl BufRead) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == BENCH_CSV_HEADER || line.starts_with("fit,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let parse_err = |what: &str, e: &dyn fmt::Display| Error::Parse {
            line: lineno + 1,
            message: format!("{what}: {e}"),
        };
        rows.push(BenchRow {
            n: fields[0].parse().map_err(|e| parse_err("n", &e))?,
            class: fields[1].parse()?,
            method: fields[2].parse()?,
            mean_us: fields[3].parse().map_err(|e| parse_err("mean_us", &e))?,
            std_us: fields[4].parse().map_err(|e| parse_err("std_us", &e))?,
            scalar_mem: fields[5].parse().map_err(|e| parse_err("scalar_mem", &e))?,
        });
    }
    Ok(rows)
}
