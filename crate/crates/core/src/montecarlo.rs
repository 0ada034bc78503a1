//! Sweeps over distance, strategy, direction, RSI and duplex mode.
//!
//! Every drop gets its own ChaCha8 stream seeded from the master seed and
//! the full cell key, so a cell's value never depends on which other cells
//! run, in what order, or on how many worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_drop, generate_fading, generate_large_scale, DuplexMode, SystemConfig};
use crate::error::{Error, Result};
use crate::strategies::{evaluate, Direction, Strategy};

/// Environment variable capping the worker count (`0` or unset = all cores).
pub const THREADS_ENV: &str = "BACKHAUL_SIM_THREADS";

/// An RSI sweep point: explicit decibels, or the default of the mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RsiPoint {
    Auto,
    Db(f64),
}

impl RsiPoint {
    pub fn resolve(self, mode: DuplexMode) -> f64 {
        match self {
            RsiPoint::Auto => mode.default_rsi_db(),
            RsiPoint::Db(db) => db,
        }
    }
}

impl fmt::Display for RsiPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RsiPoint::Auto => f.write_str("auto"),
            RsiPoint::Db(db) => write!(f, "{db}"),
        }
    }
}

impl FromStr for RsiPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(RsiPoint::Auto);
        }
        let db: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("invalid RSI value '{s}'")))?;
        if !(db >= 0.0) || !db.is_finite() {
            return Err(Error::Config(format!("RSI must be >= 0 dB, got {s}")));
        }
        Ok(RsiPoint::Db(db))
    }
}

impl From<RsiPoint> for String {
    fn from(p: RsiPoint) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for RsiPoint {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Axes of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub distances_m: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub directions: Vec<Direction>,
    pub rsi_points: Vec<RsiPoint>,
    pub modes: Vec<DuplexMode>,
    pub drops: usize,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            distances_m: (2..=15).map(|i| i as f64 * 100.0).collect(),
            strategies: Strategy::ALL.to_vec(),
            directions: Direction::BOTH.to_vec(),
            rsi_points: vec![RsiPoint::Db(0.0)],
            modes: vec![DuplexMode::Conservative],
            drops: 2000,
            seed: 1,
        }
    }
}

/// Closest ring distance accepted by a sweep.
pub const MIN_SWEEP_DISTANCE_M: f64 = 50.0;

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::Config("drops must be at least 1".into()));
        }
        for &d in &self.distances_m {
            if !(d >= MIN_SWEEP_DISTANCE_M) || !d.is_finite() {
                return Err(Error::Config(format!(
                    "distances must be >= {MIN_SWEEP_DISTANCE_M} m, got {d}"
                )));
            }
        }
        let empty = [
            ("distances", self.distances_m.is_empty()),
            ("strategies", self.strategies.is_empty()),
            ("directions", self.directions.is_empty()),
            ("rsi", self.rsi_points.is_empty()),
            ("modes", self.modes.is_empty()),
        ];
        for (name, is_empty) in empty {
            if is_empty {
                return Err(Error::Config(format!("sweep axis '{name}' is empty")));
            }
        }
        Ok(())
    }

    /// Every configuration the sweep will run, for up-front validation.
    pub fn validate_against(&self, cfg: &SystemConfig) -> Result<()> {
        self.validate()?;
        if self.strategies.iter().any(|s| s.is_full_duplex()) {
            for &mode in &self.modes {
                let c = SystemConfig { mode, ..cfg.clone() };
                if self.strategies.contains(&Strategy::ZddIr) {
                    c.validate_zdd_ir()?;
                }
                c.validate()?;
            }
        }
        cfg.validate()
    }

    /// Cell keys in table order. Half-duplex strategies ignore the RSI and
    /// mode axes and get a single cell per distance and direction.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut keys = Vec::new();
        for &strategy in &self.strategies {
            for &direction in &self.directions {
                for &distance_m in &self.distances_m {
                    if strategy.is_full_duplex() {
                        for &mode in &self.modes {
                            for &rsi in &self.rsi_points {
                                keys.push(CellKey {
                                    distance_m,
                                    strategy,
                                    direction,
                                    rsi_db: rsi.resolve(mode),
                                    mode: Some(mode),
                                });
                            }
                        }
                    } else {
                        keys.push(CellKey {
                            distance_m,
                            strategy,
                            direction,
                            rsi_db: 0.0,
                            mode: None,
                        });
                    }
                }
            }
        }
        keys.sort_by(CellKey::table_order);
        keys.dedup_by(|a, b| a.table_order(b).is_eq());
        keys
    }
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub distance_m: f64,
    pub strategy: Strategy,
    pub direction: Direction,
    pub rsi_db: f64,
    /// `None` for half-duplex strategies.
    pub mode: Option<DuplexMode>,
}

impl CellKey {
    /// Sort order of result tables: strategy, direction, RSI, mode, distance.
    pub fn table_order(&self, other: &Self) -> std::cmp::Ordering {
        self.strategy
            .cmp(&other.strategy)
            .then(self.direction.cmp(&other.direction))
            .then(self.rsi_db.total_cmp(&other.rsi_db))
            .then(self.mode.cmp(&other.mode))
            .then(self.distance_m.total_cmp(&other.distance_m))
    }

    pub fn mode_name(&self) -> &'static str {
        self.mode.map_or("none", DuplexMode::name)
    }

    /// The configuration this cell evaluates.
    pub fn config(&self, base: &SystemConfig) -> SystemConfig {
        SystemConfig {
            sc_ring_distance_m: self.distance_m,
            mode: self.mode.unwrap_or(base.mode),
            rsi_db: self.rsi_db,
            ..base.clone()
        }
    }

    /// Seed of drop `index`; `u64::MAX` is reserved for frozen geometry.
    pub fn drop_seed(&self, master: u64, index: u64) -> u64 {
        let mut h = splitmix64(master);
        for word in [
            self.distance_m.to_bits(),
            self.strategy.id(),
            self.direction.id(),
            self.rsi_db.to_bits(),
            self.mode.map_or(0, |m| m as u64 + 1),
            index,
        ] {
            h = splitmix64(h ^ word);
        }
        h
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} d={} rsi={} mode={}",
            self.strategy,
            self.direction,
            self.distance_m,
            self.rsi_db,
            self.mode_name()
        )
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Aggregate of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub key: CellKey,
    pub mean_bps_per_hz: f64,
    pub std_error: f64,
    pub n_drops: usize,
    /// Set when only one drop was run and the standard error is undefined.
    pub single_drop: bool,
    /// Share of (drop, cell) pairs whose access hop was the bottleneck.
    pub access_bound_fraction: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(key: CellKey, err: &Error) -> Self {
        Self {
            key,
            mean_bps_per_hz: f64::NAN,
            std_error: f64::NAN,
            n_drops: 0,
            single_drop: false,
            access_bound_fraction: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn errors(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn find(&self, strategy: Strategy, direction: Direction, distance_m: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.key.strategy == strategy && r.key.direction == direction && r.key.distance_m == distance_m
        })
    }

    /// Rows of one curve, ordered by distance.
    pub fn curve(
        &self,
        strategy: Strategy,
        direction: Direction,
        mode: Option<DuplexMode>,
        rsi_db: f64,
    ) -> Vec<&ResultRow> {
        let mut rows: Vec<&ResultRow> = self
            .rows
            .iter()
            .filter(|r| {
                r.key.strategy == strategy
                    && r.key.direction == direction
                    && (!strategy.is_full_duplex() || (r.key.mode == mode && r.key.rsi_db == rsi_db))
            })
            .collect();
        rows.sort_by(|a, b| a.key.distance_m.total_cmp(&b.key.distance_m));
        rows
    }
}

/// Per-drop values of one cell, before aggregation.
struct DropValue {
    rate_bps: f64,
    access_bound: Option<(usize, usize)>,
}

/// Runs `drops` drops of one cell on the current rayon pool.
pub fn run_point(base: &SystemConfig, key: &CellKey, drops: usize, master_seed: u64) -> Result<ResultRow> {
    let tag = |e: Error| Error::Cell {
        cell: key.to_string(),
        source: Box::new(e),
    };
    if drops == 0 {
        return Err(tag(Error::Config("drops must be at least 1".into())));
    }
    let cfg = key.config(base);
    cfg.validate().map_err(tag)?;
    if key.strategy == Strategy::ZddIr {
        cfg.validate_zdd_ir().map_err(tag)?;
    }
    let frozen = cfg.freeze_geometry.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(key.drop_seed(master_seed, u64::MAX));
        generate_large_scale(&cfg, &mut rng)
    });

    let values: Vec<DropValue> = (0..drops as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(key.drop_seed(master_seed, i));
            let drop = match &frozen {
                Some(large) => generate_fading(&cfg, large.clone(), &mut rng),
                None => generate_drop(&cfg, &mut rng)?,
            };
            let out = evaluate(key.strategy, &drop, &cfg, key.direction)?;
            Ok(DropValue {
                rate_bps: out.sum_rate_bps,
                access_bound: out
                    .access_bound
                    .map(|b| (b.iter().filter(|&&x| x).count(), b.len())),
            })
        })
        .collect::<Result<_>>()
        .map_err(tag)?;

    Ok(summarize(*key, &values, cfg.bandwidth_hz))
}

fn summarize(key: CellKey, values: &[DropValue], bandwidth_hz: f64) -> ResultRow {
    let n = values.len();
    let mean_bps = values.iter().map(|v| v.rate_bps).sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v.rate_bps - mean_bps).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt() / bandwidth_hz
    } else {
        0.0
    };
    let access_bound_fraction = if values.iter().all(|v| v.access_bound.is_some()) {
        let (bound, total) = values
            .iter()
            .filter_map(|v| v.access_bound)
            .fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
        (total > 0).then(|| bound as f64 / total as f64)
    } else {
        None
    };
    ResultRow {
        key,
        mean_bps_per_hz: mean_bps / bandwidth_hz,
        std_error,
        n_drops: n,
        single_drop: n == 1,
        access_bound_fraction,
        error: None,
    }
}

/// Worker count from [`THREADS_ENV`]; `0` means one per core.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

/// Options that affect how, but never what, a sweep computes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads, `0` for one per core.
    pub threads: usize,
    /// Print a per-cell counter on standard error.
    pub progress: bool,
}

/// Runs every cell of `spec`. Cells that fail are kept as error rows and do
/// not stop the sweep.
pub fn run_sweep(spec: &SweepSpec, base: &SystemConfig, opts: RunOptions) -> Result<ResultTable> {
    spec.validate()?;
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let total = cells.len();
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|key| {
                let row = run_point(base, key, spec.drops, spec.seed)
                    .unwrap_or_else(|e| ResultRow::failed(*key, &e));
                if opts.progress {
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    eprintln!("[{n}/{total}] {key}");
                }
                row
            })
            .collect()
    });
    Ok(ResultTable { rows })
}
