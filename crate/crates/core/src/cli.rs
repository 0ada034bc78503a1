//! Command-line front end: config files, CSV output and run manifests.

use std::fs;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::{generate_drop, DuplexMode, SystemConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{run_sweep, threads_from_env, CellKey, ResultRow, ResultTable, RsiPoint, RunOptions, SweepSpec};
use crate::selftest;
use crate::strategies::{Direction, LinkRates, Strategy, StrategyResult, Variant};

pub const CSV_HEADER: &str = "distance_m,strategy,direction,rsi_db,mode,mean_bps_per_hz,std_error,n_drops";

#[derive(Debug, Parser)]
#[command(name = "backhaul-sim", version, about = "Monte Carlo simulator for massive-MIMO small-cell backhaul")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a parameter sweep and write CSV plus manifest.
    Sweep(SweepArgs),
    /// Print every link rate and strategy result of one drop.
    Drop(DropArgs),
    /// Run the built-in property checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// `key = value` configuration file.
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Replay the configuration and sweep stored in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output CSV path; the manifest goes to `<out>.manifest.json`.
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo drops per cell [default: 2000].
    #[arg(long)]
    pub drops: Option<usize>,
    /// Comma-separated strategies or `all`.
    #[arg(long)]
    pub strategies: Option<String>,
    /// `dl`, `ul` or `both`.
    #[arg(long)]
    pub direction: Option<String>,
    /// Comma-separated RSI values in dB; `auto` uses the mode default.
    #[arg(long)]
    pub rsi: Option<String>,
    /// `conservative`, `complete` or a comma-separated list.
    #[arg(long)]
    pub mode: Option<String>,
    /// `start:step:stop` in metres, or a comma-separated list.
    #[arg(long)]
    pub distances: Option<String>,
    /// Suppress the per-cell progress counter.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct DropArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// SC ring distance in metres.
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub mode: Option<DuplexMode>,
    #[arg(long)]
    pub rsi: Option<RsiPoint>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Everything needed to regenerate a CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the run started.
    pub timestamp_unix_s: u64,
    pub seed: u64,
    pub output_path: PathBuf,
    pub config: SystemConfig,
    pub sweep: SweepSpec,
}

impl RunManifest {
    pub fn path_for(csv: &Path) -> PathBuf {
        let mut s = csv.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parses a `key = value` config file; missing keys keep their defaults.
pub fn parse_config(path: &Path) -> Result<(SystemConfig, SweepSpec)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

/// As [`parse_config`] on in-memory text; `origin` labels errors.
pub fn parse_config_str(text: &str, origin: &str) -> Result<(SystemConfig, SweepSpec)> {
    let mut fields = match serde_json::to_value(SystemConfig::default())? {
        Value::Object(m) => m,
        _ => unreachable!("config serializes to an object"),
    };
    let mut spec = SweepSpec::default();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(format!("missing value for '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        let sweep_result = apply_sweep_key(&mut spec, key, value);
        match sweep_result {
            Some(r) => r.map_err(|e| err(e.to_string()))?,
            None => set_config_field(&mut fields, key, value).map_err(err)?,
        }
    }

    let cfg: SystemConfig = serde_json::from_value(Value::Object(fields)).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    spec.validate_against(&cfg)?;
    Ok((cfg, spec))
}

fn apply_sweep_key(spec: &mut SweepSpec, key: &str, value: &str) -> Option<Result<()>> {
    let r = match key {
        "drops" => parse_num::<usize>(key, value).map(|v| spec.drops = v),
        "seed" => parse_num::<u64>(key, value).map(|v| spec.seed = v),
        "distances" => parse_distances(value).map(|v| spec.distances_m = v),
        "strategies" => parse_strategies(value).map(|v| spec.strategies = v),
        "directions" | "direction" => parse_directions(value).map(|v| spec.directions = v),
        "rsi" => parse_list::<RsiPoint>(value).map(|v| spec.rsi_points = v),
        "modes" => parse_list::<DuplexMode>(value).map(|v| spec.modes = v),
        _ => return None,
    };
    Some(r)
}

fn set_config_field(fields: &mut Map<String, Value>, key: &str, value: &str) -> std::result::Result<(), String> {
    let slot = if let Some(v) = fields.get_mut(key) {
        v
    } else {
        // path-loss models flatten to `pl_b2u_intercept_db` etc.
        let nested = ["pl_b2u", "pl_b2s", "pl_s2u"].iter().find_map(|m| {
            key.strip_prefix(m)
                .and_then(|rest| rest.strip_prefix('_'))
                .map(|sub| (*m, sub))
        });
        match nested {
            Some((model, sub)) => fields
                .get_mut(model)
                .and_then(|m| m.get_mut(sub))
                .ok_or_else(|| format!("unknown key '{key}'"))?,
            None => return Err(format!("unknown key '{key}'")),
        }
    };
    let bad = |what: &str| format!("'{key}' expects {what}, got '{value}'");
    *slot = match slot {
        Value::Bool(_) => Value::Bool(value.parse().map_err(|_| bad("true or false"))?),
        Value::Number(n) if n.is_u64() => Value::from(value.parse::<u64>().map_err(|_| bad("a non-negative integer"))?),
        Value::Number(_) => {
            let v: f64 = value.parse().map_err(|_| bad("a number"))?;
            serde_json::Number::from_f64(v).map(Value::Number).ok_or_else(|| bad("a finite number"))?
        }
        Value::String(_) => {
            // only `mode` is a string field
            let mode: DuplexMode = value.parse().map_err(|e: Error| e.to_string())?;
            Value::String(mode.name().to_string())
        }
        Value::Null => {
            if value == "auto" {
                Value::Null
            } else {
                Value::from(value.parse::<u64>().map_err(|_| bad("an integer or 'auto'"))?)
            }
        }
        _ => return Err(format!("key '{key}' cannot be set directly")),
    };
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("'{key}' got invalid number '{value}'")))
}

fn parse_list<T>(value: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = Error>,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

pub fn parse_strategies(value: &str) -> Result<Vec<Strategy>> {
    if value.trim() == "all" {
        return Ok(Strategy::ALL.to_vec());
    }
    parse_list(value)
}

pub fn parse_directions(value: &str) -> Result<Vec<Direction>> {
    if value.trim() == "both" {
        return Ok(Direction::BOTH.to_vec());
    }
    parse_list(value)
}

/// `start:step:stop` (inclusive) or a comma-separated list, in metres.
pub fn parse_distances(value: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("invalid distances '{value}' (expected start:step:stop or a list)"));
    let nums = |s: &str, sep: char| -> Result<Vec<f64>> {
        s.split(sep)
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    if value.contains(':') {
        let parts = nums(value, ':')?;
        let [start, step, stop] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start + i as f64 * step).collect())
    } else {
        nums(value, ',')
    }
}

/// `%g`-style formatting with six significant digits.
pub fn format_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_writer<W: std::io::Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(sink)
}

fn write_rows<W: std::io::Write>(table: &ResultTable, w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(CSV_HEADER.split(','))?;
    for r in &table.rows {
        w.write_record([
            format_g(r.key.distance_m),
            r.key.strategy.to_string(),
            r.key.direction.to_string(),
            format_g(r.key.rsi_db),
            r.key.mode_name().to_string(),
            format_g(r.mean_bps_per_hz),
            format_g(r.std_error),
            r.n_drops.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_to_csv(table: &ResultTable) -> String {
    let mut w = csv_writer(Vec::new());
    write_rows(table, &mut w).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("flushed")).expect("ASCII output")
}

pub fn write_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv_writer(std::io::BufWriter::new(file));
    write_rows(table, &mut w).map_err(|e| Error::io(path, e.into()))
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}

pub fn parse_csv(text: &str, origin: &str) -> Result<ResultTable> {
    let err = |line: u64, message: String| Error::Parse {
        path: origin.to_string(),
        line: line as usize,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(err(1, "missing or unexpected header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let f = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line_no = f.position().map_or(0, |p| p.line());
        if f.len() != 8 {
            return Err(err(line_no, format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(line_no, format!("invalid number '{s}'")));
        let mode = match &f[4] {
            "none" => None,
            m => Some(m.parse::<DuplexMode>().map_err(|e| err(line_no, e.to_string()))?),
        };
        let n_drops: usize = f[7]
            .parse()
            .map_err(|_| err(line_no, format!("invalid drop count '{}'", &f[7])))?;
        let mean = num(&f[5])?;
        rows.push(ResultRow {
            key: CellKey {
                distance_m: num(&f[0])?,
                strategy: f[1].parse().map_err(|e: Error| err(line_no, e.to_string()))?,
                direction: f[2].parse().map_err(|e: Error| err(line_no, e.to_string()))?,
                rsi_db: num(&f[3])?,
                mode,
            },
            mean_bps_per_hz: mean,
            std_error: num(&f[6])?,
            n_drops,
            single_drop: n_drops == 1,
            access_bound_fraction: None,
            error: (n_drops == 0 && mean.is_nan()).then(|| "error cell".to_string()),
        });
    }
    Ok(ResultTable { rows })
}

/// Resolves config and sweep from the arguments: manifest or config file
/// first, then individual flags on top.
pub fn resolve_sweep(args: &SweepArgs) -> Result<(SystemConfig, SweepSpec)> {
    let (cfg, mut spec) = if let Some(m) = &args.manifest {
        let m = RunManifest::read(m)?;
        (m.config, m.sweep)
    } else if let Some(c) = &args.config {
        parse_config(c)?
    } else {
        (SystemConfig::default(), SweepSpec::default())
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(d) = args.drops {
        spec.drops = d;
    }
    if let Some(s) = &args.strategies {
        spec.strategies = parse_strategies(s)?;
    }
    if let Some(d) = &args.direction {
        spec.directions = parse_directions(d)?;
    }
    if let Some(r) = &args.rsi {
        spec.rsi_points = parse_list(r)?;
    }
    if let Some(m) = &args.mode {
        spec.modes = parse_list(m)?;
    }
    if let Some(d) = &args.distances {
        spec.distances_m = parse_distances(d)?;
    }
    spec.validate_against(&cfg)?;
    Ok((cfg, spec))
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let (cfg, spec) = resolve_sweep(args)?;
    let threads = threads_from_env()?;
    let started = Instant::now();
    let timestamp_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let table = run_sweep(
        &spec,
        &cfg,
        RunOptions {
            threads,
            progress: !args.quiet,
        },
    )?;
    write_csv(&table, &args.out)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix_s,
        seed: spec.seed,
        output_path: args.out.clone(),
        config: cfg,
        sweep: spec,
    };
    let manifest_path = RunManifest::path_for(&args.out);
    manifest.write(&manifest_path)?;

    let errors: Vec<&ResultRow> = table.errors().collect();
    eprintln!(
        "{} cells ({} failed) in {:.1} s -> {} + {}",
        table.rows.len(),
        errors.len(),
        started.elapsed().as_secs_f64(),
        args.out.display(),
        manifest_path.display()
    );
    for row in &errors {
        eprintln!("error: {}", row.error.as_deref().unwrap_or("unknown"));
    }
    Ok(if errors.is_empty() { 0 } else { 1 })
}

/// Text printed by the `drop` subcommand.
pub fn drop_report(args: &DropArgs) -> Result<String> {
    let mut cfg = match &args.config {
        Some(p) => parse_config(p)?.0,
        None => SystemConfig::default(),
    };
    if let Some(d) = args.distance {
        cfg.sc_ring_distance_m = d;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(r) = args.rsi {
        cfg.rsi_db = r.resolve(cfg.mode);
    }
    let drop = generate_drop(&cfg, &mut ChaCha8Rng::seed_from_u64(args.seed))?;
    let b = cfg.bandwidth_hz;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "seed {}  d_b2s {} m  mode {}  rsi {} dB  K {}  n_bs {}  n_sc {}  n_ue {}",
        args.seed,
        cfg.sc_ring_distance_m,
        cfg.mode.name(),
        cfg.rsi_db,
        cfg.num_cells,
        cfg.n_bs,
        cfg.n_sc,
        cfg.n_ue
    );
    let _ = writeln!(out, "\ncell  sc_x  sc_y  ue_x  ue_y  a_b2s_db  a_b2u_db  a_s2u_db");
    for k in 0..drop.num_cells {
        let db = |a: f64| 10.0 * a.log10();
        let _ = writeln!(
            out,
            "{k} {:.2} {:.2} {:.2} {:.2} {:.3} {:.3} {:.3}",
            drop.sc_positions[k][0],
            drop.sc_positions[k][1],
            drop.ue_positions[k][0],
            drop.ue_positions[k][1],
            db(drop.a_b2s[k]),
            db(drop.a_b2u[k]),
            db(drop.a_s2u[k])
        );
    }

    let per_hz = |v: &[f64]| v.iter().map(|x| format_g(x / b)).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "\nlink rates, bit/s/Hz per cell (full slot)");
    for variant in [Variant::Ctdd, Variant::Zdd, Variant::ZddIr] {
        match LinkRates::compute(&drop, &cfg, variant) {
            Ok(r) => {
                let _ = writeln!(out, "{variant:?}");
                let _ = writeln!(out, "  b2s {}", per_hz(&r.b2s));
                let _ = writeln!(out, "  s2u {}", per_hz(&r.s2u));
                let _ = writeln!(out, "  s2b {}", per_hz(&r.s2b));
                let _ = writeln!(out, "  u2s {}", per_hz(&r.u2s));
            }
            Err(e) => {
                let _ = writeln!(out, "{variant:?}: error: {e}");
            }
        }
    }

    let _ = writeln!(out, "\nstrategy sum rates, bit/s/Hz");
    for strategy in Strategy::ALL {
        match StrategyResult::compute(strategy, &drop, &cfg) {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{strategy}: dl {} ul {}",
                    format_g(r.dl_sum_rate_bps() / b),
                    format_g(r.ul_sum_rate_bps() / b)
                );
                if let Some(p) = r.time_plan() {
                    let _ = writeln!(
                        out,
                        "  time b2s {} s2u {} s2b {} u2s {}",
                        format_g(p.frac_b2s),
                        format_g(p.frac_s2u),
                        format_g(p.frac_s2b),
                        format_g(p.frac_u2s)
                    );
                }
                let _ = writeln!(out, "  dl per cell {}", per_hz(&r.dl.per_cell_bps));
                let _ = writeln!(out, "  ul per cell {}", per_hz(&r.ul.per_cell_bps));
            }
            Err(e) => {
                let _ = writeln!(out, "{strategy}: error: {e}");
            }
        }
    }
    Ok(out)
}

fn cmd_selftest(args: &SelftestArgs) -> i32 {
    let outcomes = selftest::run_all(args.seed);
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} checks, {} failed", outcomes.len(), failed);
    i32::from(failed > 0)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Drop(a) => drop_report(a).map(|text| {
            let _ = std::io::Write::write_all(&mut std::io::stdout(), text.as_bytes());
            0
        }),
        Command::Selftest(a) => Ok(cmd_selftest(a)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
