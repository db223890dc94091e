//! Command-line front end.
//!
//! Every subcommand writes exactly one table, as CSV (default) or JSON, to
//! standard output or `--out`. Logs and summaries go to standard error.
//!
//! Column schemas:
//!
//! | command         | columns |
//! |-----------------|---------|
//! | `spectrum`      | `n,L,sector,multiplicity,lr_eigenvalue,ud_normalized_eigenvalue` |
//! | `corrlen`       | `n,lambda1,lambda2,xi_c` |
//! | `norm`          | `n,N,bc,norm,log_norm_per_site` |
//! | `block-entropy` | `n,L,lambda_singlet,lambda_adjoint,S_vn,S_renyi_<alpha>...` |
//! | `geom-ent`      | `n,L,E` |
//! | `correlator`    | `n,a,b,d,correlator` |
//! | `localizable`   | `n,N,outcomes,probability_sum,min_entropy,max_entropy,xi_c` |
//! | `verify`        | `n,check,status,max_deviation,tolerance,detail` |

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::entanglement;
use crate::localizable::{self, MeasureMode, MAX_EXHAUSTIVE_OUTCOMES};
use crate::repn::GroupRank;
use crate::state::{self, BoundaryCondition, DenseState};
use crate::transfer::{self, Boundary};
use crate::verify;
use crate::{Result, VbsError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

/// Inclusive integer range `start..end[:step]`, or a single value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntRange {
    pub start: i64,
    pub end: i64,
    pub step: i64,
}

impl IntRange {
    pub fn values(&self) -> Vec<i64> {
        (self.start..=self.end)
            .step_by(self.step as usize)
            .collect()
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("bad integer '{t}' in range '{s}'"))
        };
        let (span, step) = match s.split_once(':') {
            Some((span, step)) => (span, parse(step)?),
            None => (s, 1),
        };
        let (start, end) = match span.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(span)?;
                (v, v)
            }
        };
        if step < 1 {
            return Err(format!("step must be positive in '{s}'"));
        }
        if end < start {
            return Err(format!("empty range '{s}'"));
        }
        Ok(IntRange { start, end, step })
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else if self.step == 1 {
            write!(f, "{}..{}", self.start, self.end)
        } else {
            write!(f, "{}..{}:{}", self.start, self.end, self.step)
        }
    }
}

impl Serialize for IntRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcArg {
    Open,
    Periodic,
}

impl From<BcArg> for Boundary {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Open => Boundary::Open,
            BcArg::Periodic => Boundary::Periodic,
        }
    }
}

const RANGE_HELP: &str = "Ranges are written start..end[:step] (inclusive) or as a single value, \
e.g. --L 2..20:2. Set VBS_MAX_AMPLITUDES to change the dense-state memory budget.";

#[derive(Parser, Debug)]
#[command(
    name = "sunvbs",
    version,
    about = "SU(n) valence bond solid chains: spectra, entanglement and verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the table here instead of standard output
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Transfer eigenvalues and normalized block spectrum per sector
    #[command(after_help = RANGE_HELP)]
    Spectrum {
        /// Group rank range
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Block length range
        #[arg(long = "L", default_value = "1..10")]
        l: IntRange,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Transfer eigenvalues and correlation length
    #[command(after_help = RANGE_HELP)]
    Corrlen {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2..6")]
        n: IntRange,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Chain norm from the transfer matrix
    #[command(after_help = RANGE_HELP)]
    Norm {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Chain length range
        #[arg(long = "N", default_value = "1..10")]
        sites: IntRange,
        /// Boundary condition
        #[arg(long, value_enum, default_value = "periodic")]
        bc: BcArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Von Neumann and Rényi entropies of a block
    #[command(after_help = RANGE_HELP)]
    BlockEntropy {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Block length L (range)
        #[arg(long = "L", default_value = "1..10")]
        l: IntRange,
        /// Rényi orders, comma separated
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        alpha: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Geometric entanglement per block (even block lengths only)
    #[command(after_help = RANGE_HELP)]
    GeomEnt {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Block length L (range)
        #[arg(long = "L", default_value = "2..20:2")]
        l: IntRange,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Connected two-point correlator of adjoint generators
    #[command(after_help = RANGE_HELP)]
    Correlator {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Generator index on the first site
        #[arg(long, default_value_t = 0)]
        a: usize,
        /// Generator index on the second site
        #[arg(long, default_value_t = 0)]
        b: usize,
        /// Distance range
        #[arg(long, default_value = "1..8")]
        d: IntRange,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Boundary entanglement after Bell measurements on every site
    #[command(after_help = RANGE_HELP)]
    Localizable {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Chain length N (range)
        #[arg(long = "N", default_value = "1..4")]
        sites: IntRange,
        /// Sampled outcomes when exhaustive enumeration is too large (0 forbids sampling)
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory holding cached dense chain states
        #[arg(long)]
        state_cache: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare closed forms against independent numerical oracles
    #[command(after_help = RANGE_HELP)]
    Verify {
        /// Group rank n (range)
        #[arg(long = "n", default_value = "2")]
        n: IntRange,
        /// Largest dense chain used by the oracles
        #[arg(long = "max-N", default_value_t = 8)]
        max_sites: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Corrlen { .. } => "corrlen",
            Command::Norm { .. } => "norm",
            Command::BlockEntropy { .. } => "block-entropy",
            Command::GeomEnt { .. } => "geom-ent",
            Command::Correlator { .. } => "correlator",
            Command::Localizable { .. } => "localizable",
            Command::Verify { .. } => "verify",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::Spectrum { output, .. }
            | Command::Corrlen { output, .. }
            | Command::Norm { output, .. }
            | Command::BlockEntropy { output, .. }
            | Command::GeomEnt { output, .. }
            | Command::Correlator { output, .. }
            | Command::Localizable { output, .. }
            | Command::Verify { output, .. } => output,
        }
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

fn int(v: usize) -> Cell {
    Cell::Int(v as i64)
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, meta: Value) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    m.insert(c.clone(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut s =
            serde_json::to_string_pretty(&json!({ "meta": meta, "rows": rows })).expect("json");
        s.push('\n');
        s
    }
}

fn ranks(r: &IntRange) -> Result<Vec<GroupRank>> {
    r.values()
        .into_iter()
        .map(|v| {
            usize::try_from(v)
                .map_err(|_| VbsError::InvalidArgument(format!("n must be at least 2, got {v}")))
                .and_then(GroupRank::new)
        })
        .collect()
}

fn positive(r: &IntRange, what: &str) -> Result<Vec<u32>> {
    r.values()
        .into_iter()
        .map(|v| match u32::try_from(v) {
            Ok(x) if x >= 1 => Ok(x),
            _ => Err(VbsError::InvalidArgument(format!(
                "{what} must be a positive integer, got {v}"
            ))),
        })
        .collect()
}

fn grid<A: Copy + Sync, B: Copy + Sync>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .collect()
}

/// Evaluates sweep points on the worker pool, keeping sweep order.
fn sweep<P, F>(points: &[P], f: F) -> Result<Vec<Vec<Cell>>>
where
    P: Sync,
    F: Fn(&P) -> Result<Vec<Vec<Cell>>> + Sync + Send,
{
    let chunks = points.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn alpha_label(alpha: f64) -> String {
    format!("S_renyi_{alpha}")
}

fn spectrum_table(n: &IntRange, l: &IntRange) -> Result<Table> {
    let points = grid(&ranks(n)?, &positive(l, "L")?);
    let mut t = Table::new(&[
        "n",
        "L",
        "sector",
        "multiplicity",
        "lr_eigenvalue",
        "ud_normalized_eigenvalue",
    ]);
    t.rows = sweep(&points, |&(n, length)| {
        let b = entanglement::block_spectrum_exact(n, length)?;
        Ok(vec![
            vec![
                int(n.n()),
                Cell::Int(length as i64),
                Cell::Text("singlet".into()),
                Cell::Int(1),
                Cell::Float(transfer::lambda1_pow(n, length)),
                Cell::Float(b.lambda_singlet),
            ],
            vec![
                int(n.n()),
                Cell::Int(length as i64),
                Cell::Text("adjoint".into()),
                int(n.adjoint_dim()),
                Cell::Float(transfer::lambda2_pow(n, length)),
                Cell::Float(b.lambda_adjoint),
            ],
        ])
    })?;
    Ok(t)
}

fn corrlen_table(n: &IntRange) -> Result<Table> {
    let mut t = Table::new(&["n", "lambda1", "lambda2", "xi_c"]);
    t.rows = sweep(&ranks(n)?, |&n| {
        let p = transfer::ModelParams::new(n);
        Ok(vec![vec![
            int(n.n()),
            Cell::Float(p.lambda1),
            Cell::Float(p.lambda2),
            Cell::Float(p.xi_c),
        ]])
    })?;
    Ok(t)
}

fn norm_table(n: &IntRange, sites: &IntRange, bc: Boundary) -> Result<Table> {
    let points = grid(&ranks(n)?, &positive(sites, "N")?);
    let mut t = Table::new(&["n", "N", "bc", "norm", "log_norm_per_site"]);
    t.rows = sweep(&points, |&(n, sites)| {
        let norm = transfer::chain_norm(n, sites, bc)?;
        Ok(vec![vec![
            int(n.n()),
            Cell::Int(sites as i64),
            Cell::Text(bc.to_string()),
            Cell::Float(norm),
            Cell::Float(norm.ln() / sites as f64),
        ]])
    })?;
    Ok(t)
}

fn block_entropy_table(n: &IntRange, l: &IntRange, alphas: &[f64]) -> Result<Table> {
    for &a in alphas {
        if !(a.is_finite() && a > 0.0) {
            return Err(VbsError::InvalidArgument(format!(
                "Rényi order must be positive and finite, got {a}"
            )));
        }
    }
    let points = grid(&ranks(n)?, &positive(l, "L")?);
    let mut t = Table::new(&["n", "L", "lambda_singlet", "lambda_adjoint", "S_vn"]);
    t.columns.extend(alphas.iter().map(|&a| alpha_label(a)));
    t.rows = sweep(&points, |&(n, length)| {
        let b = entanglement::block_spectrum_exact(n, length)?;
        let report = b.report(alphas)?;
        let mut row = vec![
            int(n.n()),
            Cell::Int(length as i64),
            Cell::Float(b.lambda_singlet),
            Cell::Float(b.lambda_adjoint),
            Cell::Float(report.von_neumann),
        ];
        row.extend(report.renyi.iter().map(|&(_, s)| Cell::Float(s)));
        Ok(vec![row])
    })?;
    Ok(t)
}

fn geom_ent_table(n: &IntRange, l: &IntRange) -> Result<Table> {
    let lengths = l.values();
    if let Some(&bad) = lengths.iter().find(|&&v| v < 2 || v % 2 != 0) {
        return Err(VbsError::UnsupportedBlockLength(bad));
    }
    let points = grid(&ranks(n)?, &lengths);
    let mut t = Table::new(&["n", "L", "E"]);
    t.rows = sweep(&points, |&(n, length)| {
        let e = entanglement::geometric_entanglement_per_block(n, length)?;
        Ok(vec![vec![int(n.n()), Cell::Int(length), Cell::Float(e)]])
    })?;
    Ok(t)
}

fn correlator_table(n: &IntRange, a: usize, b: usize, d: &IntRange) -> Result<Table> {
    let points = grid(&ranks(n)?, &positive(d, "d")?);
    let mut t = Table::new(&["n", "a", "b", "d", "correlator"]);
    t.rows = sweep(&points, |&(n, dist)| {
        let c = transfer::connected_correlator(n, a, b, dist)?;
        Ok(vec![vec![
            int(n.n()),
            int(a),
            int(b),
            Cell::Int(dist as i64),
            Cell::Float(c),
        ]])
    })?;
    Ok(t)
}

fn cache_path(dir: &Path, n: GroupRank, sites: usize) -> PathBuf {
    dir.join(format!("vbs_n{}_N{}_open.bin", n.n(), sites))
}

/// Loads the open chain from the cache directory, building and storing it on a miss.
fn cached_chain(dir: Option<&Path>, n: GroupRank, sites: usize) -> Result<DenseState> {
    let Some(dir) = dir else {
        return state::build_dense_vbs(n, sites);
    };
    let path = cache_path(dir, n, sites);
    if path.exists() {
        let s = DenseState::read_from(BufReader::new(File::open(&path)?))?;
        if s.n == n && s.sites == sites && s.bc == BoundaryCondition::Open {
            log::info!("loaded {}", path.display());
            return Ok(s);
        }
        log::warn!("ignoring mismatched cache file {}", path.display());
    }
    let s = state::build_dense_vbs(n, sites)?;
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(&path)?);
    s.write_to(&mut w)?;
    w.flush()?;
    log::info!("cached {}", path.display());
    Ok(s)
}

fn localizable_table(
    n: &IntRange,
    sites: &IntRange,
    samples: usize,
    seed: u64,
    cache: Option<&Path>,
) -> Result<Table> {
    let points = grid(&ranks(n)?, &positive(sites, "N")?);
    for &(n, s) in &points {
        let exhaustive = (n.adjoint_dim() as u128)
            .checked_pow(s)
            .is_some_and(|c| c <= MAX_EXHAUSTIVE_OUTCOMES);
        if !exhaustive && samples == 0 {
            return Err(VbsError::InvalidArgument(format!(
                "n={} N={s} has too many outcomes to enumerate; pass --samples",
                n.n()
            )));
        }
    }
    let mut t = Table::new(&[
        "n",
        "N",
        "outcomes",
        "probability_sum",
        "min_entropy",
        "max_entropy",
        "xi_c",
    ]);
    // Dense chains are large; build them one at a time.
    for &(n, s) in &points {
        let sites = s as usize;
        let chain = cached_chain(cache, n, sites)?;
        let exhaustive = (n.adjoint_dim() as u128)
            .checked_pow(s)
            .is_some_and(|c| c <= MAX_EXHAUSTIVE_OUTCOMES);
        let mode = if exhaustive {
            MeasureMode::Exhaustive
        } else {
            MeasureMode::Sample {
                count: samples,
                seed: seed.wrapping_add(sites as u64),
            }
        };
        let r = localizable::length_row(n, &chain, mode)?;
        t.rows.push(vec![
            int(r.n),
            int(r.sites),
            int(r.outcomes),
            Cell::Float(r.probability_sum),
            Cell::Float(r.min_entropy),
            Cell::Float(r.max_entropy),
            Cell::Float(r.xi_c),
        ]);
    }
    Ok(t)
}

fn verify_table(
    n: &IntRange,
    max_sites: usize,
    seed: u64,
    err: &mut dyn Write,
) -> Result<(Table, bool)> {
    let mut t = Table::new(&[
        "n",
        "check",
        "status",
        "max_deviation",
        "tolerance",
        "detail",
    ]);
    let mut all = true;
    for n in ranks(n)? {
        let report = verify::run_all(n, max_sites, seed);
        writeln!(
            err,
            "verify n={}: {}/{} checks passed, {} skipped",
            n.n(),
            report.passed(),
            report.checks.len(),
            report.skipped()
        )?;
        for c in &report.checks {
            if !c.passed {
                writeln!(
                    err,
                    "  {} {}: {}",
                    c.status().to_uppercase(),
                    c.check,
                    c.detail
                )?;
            }
            t.rows.push(vec![
                int(n.n()),
                Cell::Text(c.check.clone()),
                Cell::Text(c.status().into()),
                Cell::Float(c.max_deviation),
                Cell::Float(c.tolerance),
                Cell::Text(c.detail.clone()),
            ]);
        }
        all &= report.all_passed();
    }
    Ok((t, all))
}

fn execute(cmd: &Command, err: &mut dyn Write) -> Result<(Table, bool)> {
    let ok = |t: Table| Ok((t, true));
    match cmd {
        Command::Spectrum { n, l, .. } => ok(spectrum_table(n, l)?),
        Command::Corrlen { n, .. } => ok(corrlen_table(n)?),
        Command::Norm { n, sites, bc, .. } => ok(norm_table(n, sites, (*bc).into())?),
        Command::BlockEntropy { n, l, alpha, .. } => ok(block_entropy_table(n, l, alpha)?),
        Command::GeomEnt { n, l, .. } => ok(geom_ent_table(n, l)?),
        Command::Correlator { n, a, b, d, .. } => ok(correlator_table(n, *a, *b, d)?),
        Command::Localizable {
            n,
            sites,
            samples,
            seed,
            state_cache,
            ..
        } => ok(localizable_table(
            n,
            sites,
            *samples,
            *seed,
            state_cache.as_deref(),
        )?),
        Command::Verify {
            n, max_sites, seed, ..
        } => verify_table(n, *max_sites, *seed, err),
    }
}

fn render(cmd: &Command, table: &Table) -> String {
    match cmd.output().format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let meta = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "command": cmd.name(),
                "config": cmd,
            });
            table.to_json(meta)
        }
    }
}

fn describe(e: &VbsError) -> String {
    match e {
        VbsError::UnsupportedBlockLength(l) => format!(
            "geom-ent: block length {l} is not supported; the closed form covers even L >= 2 only, \
             odd blocks need a separate derivation"
        ),
        other => other.to_string(),
    }
}

/// Runs the tool with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// Runs the tool writing data to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let (table, passed) = match execute(&cli.command, err) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}", describe(&e));
            return EXIT_INVALID;
        }
    };
    let text = render(&cli.command, &table);
    let written = match &cli.command.output().out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => out.write_all(text.as_bytes()).and_then(|_| out.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INVALID;
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("sunvbs").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn range_syntax() {
        assert_eq!(
            "2..8:2".parse::<IntRange>().unwrap().values(),
            vec![2, 4, 6, 8]
        );
        assert_eq!("1..3".parse::<IntRange>().unwrap().values(), vec![1, 2, 3]);
        assert_eq!("5".parse::<IntRange>().unwrap().values(), vec![5]);
        assert_eq!(
            "2..9:3".parse::<IntRange>().unwrap().values(),
            vec![2, 5, 8]
        );
        assert!("3..1".parse::<IntRange>().is_err());
        assert!("1..4:0".parse::<IntRange>().is_err());
        assert!("a..4".parse::<IntRange>().is_err());
        assert_eq!("2..8:2".parse::<IntRange>().unwrap().to_string(), "2..8:2");
    }

    #[test]
    fn geom_ent_rows() {
        let (code, out, _) =
            run_capture(&["geom-ent", "--n", "2", "--L", "2..8:2", "--format", "csv"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "n,L,E");
        assert_eq!(lines.len(), 5);
        let e2: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!((e2 - (9.0f64 / 5.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn odd_block_rejected() {
        let (code, out, err) = run_capture(&["geom-ent", "--L", "3"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("separate derivation"));
    }

    #[test]
    fn unknown_flag_exits_one() {
        let (code, _, err) = run_capture(&["spectrum", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("verify"));
    }

    #[test]
    fn validation_errors_exit_one() {
        assert_eq!(run_capture(&["corrlen", "--n", "1..3"]).0, 1);
        assert_eq!(run_capture(&["block-entropy", "--alpha", "-1"]).0, 1);
        assert_eq!(run_capture(&["norm", "--N", "0..2"]).0, 1);
    }

    #[test]
    fn block_entropy_header() {
        let (code, out, _) =
            run_capture(&["block-entropy", "--n", "3", "--L", "1..6", "--alpha", "2,3"]);
        assert_eq!(code, 0);
        assert_eq!(
            out.lines().next().unwrap(),
            "n,L,lambda_singlet,lambda_adjoint,S_vn,S_renyi_2,S_renyi_3"
        );
        assert_eq!(out.lines().count(), 7);
    }

    #[test]
    fn json_mirrors_columns() {
        let (code, out, _) = run_capture(&["corrlen", "--n", "2..3", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["meta"]["tool"], "sunvbs");
        assert_eq!(v["meta"]["config"]["corrlen"]["n"], "2..3");
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["n", "lambda1", "lambda2", "xi_c"]);
    }

    #[test]
    fn output_path_not_echoed() {
        let dir = tempfile::tempdir().unwrap();
        let read = |name: &str| {
            let p = dir.path().join(name);
            let code =
                run_capture(&["corrlen", "--format", "json", "--out", p.to_str().unwrap()]).0;
            assert_eq!(code, 0);
            std::fs::read(p).unwrap()
        };
        assert_eq!(read("a.json"), read("b.json"));
    }

    #[test]
    fn csv_floats_round_trip() {
        let (_, out, _) = run_capture(&["corrlen", "--n", "2..6"]);
        for line in out.lines().skip(1) {
            let n: f64 = line.split(',').next().unwrap().parse().unwrap();
            let xi: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert_eq!(xi, 1.0 / (n * n - 1.0).ln());
        }
    }

    #[test]
    fn state_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().to_str().unwrap();
        let args = [
            "localizable",
            "--n",
            "2",
            "--N",
            "1..2",
            "--state-cache",
            path,
        ];
        let (c1, o1, _) = run_capture(&args);
        let (c2, o2, _) = run_capture(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(o1, o2);
        assert!(dir.path().join("vbs_n2_N2_open.bin").exists());
    }
}
