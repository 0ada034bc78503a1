//! Per-drop sum rates of the backhaul strategies.
//!
//! Every relayed strategy reduces to two hops per cell, a backhaul hop
//! (BS to SC downlink, SC to BS uplink) and an access hop (SC to UE
//! downlink, UE to SC uplink). A cell delivers the smaller of the two
//! time-weighted hop throughputs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{Drop, ScAntennas, SystemConfig};
use crate::error::{Error, Result};
use crate::link_rates::{
    apply_rsi, p2p_svd_rate, stream_rates, zdd_dl_interference, zdd_s2b_rate,
    zdd_ul_interference_all, zddir_b2s_rate, zddir_beamformer, zddir_s2b_rate, zf_dl_rate,
    zf_dl_scalar, zf_ul_stream_sinrs,
};
use crate::matrix_ops::pseudo_inverse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    DirectZf,
    CtddExh,
    CtddSub,
    Zdd,
    ZddIr,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::DirectZf,
        Strategy::CtddExh,
        Strategy::CtddSub,
        Strategy::Zdd,
        Strategy::ZddIr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::DirectZf => "direct_zf",
            Strategy::CtddExh => "ctdd_exh",
            Strategy::CtddSub => "ctdd_sub",
            Strategy::Zdd => "zdd",
            Strategy::ZddIr => "zdd_ir",
        }
    }

    /// Stable numeric tag used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Strategy::DirectZf => 1,
            Strategy::CtddExh => 2,
            Strategy::CtddSub => 3,
            Strategy::Zdd => 4,
            Strategy::ZddIr => 5,
        }
    }

    /// Whether the SC works in full duplex, so that the antenna split and
    /// residual self-interference matter.
    pub fn is_full_duplex(self) -> bool {
        matches!(self, Strategy::Zdd | Strategy::ZddIr)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy '{}' (expected one of direct_zf, ctdd_exh, ctdd_sub, zdd, zdd_ir)",
                    s.trim()
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Dl, Direction::Ul];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        }
    }

    pub fn id(self) -> u64 {
        match self {
            Direction::Dl => 1,
            Direction::Ul => 2,
        }
    }

    pub fn time_fraction(self, cfg: &SystemConfig) -> f64 {
        match self {
            Direction::Dl => cfg.frac_dl,
            Direction::Ul => cfg.frac_ul,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dl" => Ok(Direction::Dl),
            "ul" => Ok(Direction::Ul),
            other => Err(Error::Config(format!(
                "unknown direction '{other}' (expected dl or ul)"
            ))),
        }
    }
}

/// Full-time rates of the two hops of every cell in one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopRates {
    /// BS to SC (downlink) or SC to BS (uplink), bit/s per cell.
    pub backhaul: Vec<f64>,
    /// SC to UE (downlink) or UE to SC (uplink), bit/s per cell.
    pub access: Vec<f64>,
}

/// Which family of link-rate formulas produced a set of rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Half duplex, no cross-link interference.
    Ctdd,
    /// Full duplex with cross-link interference.
    Zdd,
    /// Full duplex with the interference-rejecting beamformer.
    ZddIr,
}

/// All four hop rates of every cell for one variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkRates {
    pub variant: Variant,
    pub b2s: Vec<f64>,
    pub s2u: Vec<f64>,
    pub s2b: Vec<f64>,
    pub u2s: Vec<f64>,
}

impl LinkRates {
    pub fn compute(drop: &Drop, cfg: &SystemConfig, variant: Variant) -> Result<Self> {
        let hops = |dir| match variant {
            Variant::Ctdd => ctdd_link_rates(drop, cfg, dir),
            Variant::Zdd => zdd_link_rates(drop, cfg, dir),
            Variant::ZddIr => zdd_ir_link_rates(drop, cfg, dir),
        };
        let dl = hops(Direction::Dl)?;
        let ul = hops(Direction::Ul)?;
        Ok(Self {
            variant,
            b2s: dl.backhaul,
            s2u: dl.access,
            s2b: ul.backhaul,
            u2s: ul.access,
        })
    }
}

/// Split of a direction's time fraction between its two hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSplit {
    pub backhaul: f64,
    pub access: f64,
}

/// Time fractions of the four half-duplex sub-phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePlan {
    pub frac_b2s: f64,
    pub frac_s2u: f64,
    pub frac_s2b: f64,
    pub frac_u2s: f64,
}

impl TimePlan {
    pub fn from_splits(dl: PhaseSplit, ul: PhaseSplit) -> Self {
        Self {
            frac_b2s: dl.backhaul,
            frac_s2u: dl.access,
            frac_s2b: ul.backhaul,
            frac_u2s: ul.access,
        }
    }
}

/// Result of one strategy in one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionOutcome {
    pub sum_rate_bps: f64,
    pub per_cell_bps: Vec<f64>,
    /// Chosen split (half-duplex relaying only).
    pub split: Option<PhaseSplit>,
    /// Per cell, whether the access hop is the binding one (relayed
    /// strategies only).
    pub access_bound: Option<Vec<bool>>,
}

impl DirectionOutcome {
    fn new(per_cell_bps: Vec<f64>, split: Option<PhaseSplit>, access_bound: Option<Vec<bool>>) -> Self {
        Self {
            sum_rate_bps: per_cell_bps.iter().sum(),
            per_cell_bps,
            split,
            access_bound,
        }
    }
}

/// Downlink and uplink outcome of a strategy on one drop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub dl: DirectionOutcome,
    pub ul: DirectionOutcome,
}

impl StrategyResult {
    pub fn compute(strategy: Strategy, drop: &Drop, cfg: &SystemConfig) -> Result<Self> {
        Ok(Self {
            strategy,
            dl: evaluate(strategy, drop, cfg, Direction::Dl)?,
            ul: evaluate(strategy, drop, cfg, Direction::Ul)?,
        })
    }

    pub fn dl_sum_rate_bps(&self) -> f64 {
        self.dl.sum_rate_bps
    }

    pub fn ul_sum_rate_bps(&self) -> f64 {
        self.ul.sum_rate_bps
    }

    pub fn time_plan(&self) -> Option<TimePlan> {
        Some(TimePlan::from_splits(self.dl.split?, self.ul.split?))
    }
}

/// Evaluates `strategy` on `drop` in one direction.
pub fn evaluate(strategy: Strategy, drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    match strategy {
        Strategy::DirectZf => direct_zf(drop, cfg, dir),
        Strategy::CtddExh => ctdd_exh(drop, cfg, dir),
        Strategy::CtddSub => ctdd_sub(drop, cfg, dir),
        Strategy::Zdd => zdd(drop, cfg, dir),
        Strategy::ZddIr => zdd_ir(drop, cfg, dir),
    }
}

/// Zero-forcing straight from the BS to the UEs, no small cells.
pub fn direct_zf(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    let h = drop.h_b2u_cal();
    let hd = pseudo_inverse(&h)?;
    let k = drop.num_cells;
    let rates = match dir {
        Direction::Dl => {
            let phi = zf_dl_scalar(&hd, cfg.p_bs_w, cfg.n_bs)?;
            zf_dl_rate(phi, cfg.bandwidth_hz, drop.noise_ue_w_hz, cfg.n_ue, k)
        }
        Direction::Ul => stream_rates(
            &zf_ul_stream_sinrs(&hd, cfg.p_ue_w, cfg.n_ue, cfg.bandwidth_hz, drop.noise_bs_w_hz),
            cfg.bandwidth_hz,
        ),
    };
    let frac = dir.time_fraction(cfg);
    Ok(DirectionOutcome::new(
        rates.iter().map(|c| frac * c).collect(),
        None,
        None,
    ))
}

/// Zero-forced BS-SC hop on the given SC antennas. `noise_sc` is the SC
/// receive noise (downlink only).
fn backhaul_zf(
    drop: &Drop,
    cfg: &SystemConfig,
    dir: Direction,
    antennas: &[usize],
    noise_sc: f64,
) -> Result<Vec<f64>> {
    let hd = pseudo_inverse(&drop.h_b2s_cal(antennas))?;
    let n = antennas.len();
    Ok(match dir {
        Direction::Dl => {
            let phi = zf_dl_scalar(&hd, cfg.p_bs_w, cfg.n_bs)?;
            zf_dl_rate(phi, cfg.bandwidth_hz, noise_sc, n, drop.num_cells)
        }
        Direction::Ul => stream_rates(
            &zf_ul_stream_sinrs(&hd, cfg.p_sc_w, n, cfg.bandwidth_hz, drop.noise_bs_w_hz),
            cfg.bandwidth_hz,
        ),
    })
}

/// Interference-free SC-UE hop on the given SC antennas, with `interference`
/// watts per cell added at the receiver. Uplink receive noise is `noise_sc`.
fn access_svd(
    drop: &Drop,
    cfg: &SystemConfig,
    dir: Direction,
    antennas: &[usize],
    noise_sc: f64,
    interference: &[f64],
) -> Result<Vec<f64>> {
    if cfg.access_unlimited {
        return Ok(vec![f64::INFINITY; drop.num_cells]);
    }
    (0..drop.num_cells)
        .map(|k| match dir {
            Direction::Dl => p2p_svd_rate(
                &drop.h_s2u_sub(k, antennas),
                drop.a_s2u[k],
                cfg.p_sc_w,
                cfg.bandwidth_hz,
                drop.noise_ue_w_hz,
                interference[k],
            ),
            Direction::Ul => p2p_svd_rate(
                &drop.h_u2s_sub(k, antennas),
                drop.a_s2u[k],
                cfg.p_ue_w,
                cfg.bandwidth_hz,
                noise_sc,
                interference[k],
            ),
        })
        .collect()
}

/// Half-duplex hop rates on an explicit antenna set and SC noise level.
pub fn ctdd_link_rates_on(
    drop: &Drop,
    cfg: &SystemConfig,
    dir: Direction,
    antennas: &ScAntennas,
    noise_sc: f64,
) -> Result<HopRates> {
    let zeros = vec![0.0; drop.num_cells];
    let (bk, acc) = match dir {
        Direction::Dl => (&antennas.rx, &antennas.tx),
        Direction::Ul => (&antennas.tx, &antennas.rx),
    };
    Ok(HopRates {
        backhaul: backhaul_zf(drop, cfg, dir, bk, noise_sc)?,
        access: access_svd(drop, cfg, dir, acc, noise_sc, &zeros)?,
    })
}

/// Half-duplex hop rates with every SC antenna.
pub fn ctdd_link_rates(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<HopRates> {
    ctdd_link_rates_on(drop, cfg, dir, &ScAntennas::all(cfg.n_sc), drop.noise_sc_w_hz)
}

/// Split of `frac` that equalizes the two hop throughputs of one link.
pub fn balanced_split(backhaul: f64, access: f64, frac: f64) -> PhaseSplit {
    if access.is_infinite() {
        return PhaseSplit {
            backhaul: frac,
            access: 0.0,
        };
    }
    if backhaul.is_infinite() {
        return PhaseSplit {
            backhaul: 0.0,
            access: frac,
        };
    }
    let total = backhaul + access;
    if total == 0.0 {
        return PhaseSplit {
            backhaul: frac / 2.0,
            access: frac / 2.0,
        };
    }
    PhaseSplit {
        backhaul: access / total * frac,
        access: backhaul / total * frac,
    }
}

/// One candidate split per cell, each optimal for its own link.
pub fn ctdd_time_candidates(rates: &HopRates, frac: f64) -> Vec<PhaseSplit> {
    rates
        .backhaul
        .iter()
        .zip(&rates.access)
        .map(|(&b, &a)| balanced_split(b, a, frac))
        .collect()
}

/// Single split from the rates summed over cells.
pub fn ctdd_sub_split(rates: &HopRates, frac: f64) -> PhaseSplit {
    balanced_split(rates.backhaul.iter().sum(), rates.access.iter().sum(), frac)
}

#[inline]
fn arm(time: f64, rate: f64) -> f64 {
    if rate.is_infinite() {
        f64::INFINITY
    } else {
        time * rate
    }
}

/// Per-cell delivered throughput under a common split.
pub fn ctdd_objective(rates: &HopRates, split: PhaseSplit) -> Vec<f64> {
    rates
        .backhaul
        .iter()
        .zip(&rates.access)
        .map(|(&b, &a)| arm(split.backhaul, b).min(arm(split.access, a)))
        .collect()
}

fn access_binding(rates: &HopRates, split: PhaseSplit) -> Vec<bool> {
    rates
        .backhaul
        .iter()
        .zip(&rates.access)
        .map(|(&b, &a)| arm(split.access, a) < arm(split.backhaul, b))
        .collect()
}

/// Best of the per-cell candidate splits, with the summed-rate split as one
/// more candidate. Ties keep the earlier candidate.
pub fn ctdd_exh_from_rates(rates: &HopRates, frac: f64) -> DirectionOutcome {
    let mut candidates = ctdd_time_candidates(rates, frac);
    candidates.push(ctdd_sub_split(rates, frac));
    let mut best: Option<(f64, Vec<f64>, PhaseSplit)> = None;
    for split in candidates {
        let per_cell = ctdd_objective(rates, split);
        let total: f64 = per_cell.iter().sum();
        if best.as_ref().is_none_or(|(t, _, _)| total > *t) {
            best = Some((total, per_cell, split));
        }
    }
    let (_, per_cell, split) = best.expect("at least one candidate");
    let bound = access_binding(rates, split);
    DirectionOutcome::new(per_cell, Some(split), Some(bound))
}

pub fn ctdd_sub_from_rates(rates: &HopRates, frac: f64) -> DirectionOutcome {
    let split = ctdd_sub_split(rates, frac);
    DirectionOutcome::new(
        ctdd_objective(rates, split),
        Some(split),
        Some(access_binding(rates, split)),
    )
}

pub fn ctdd_exh(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    let rates = ctdd_link_rates(drop, cfg, dir)?;
    Ok(ctdd_exh_from_rates(&rates, dir.time_fraction(cfg)))
}

pub fn ctdd_sub(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    let rates = ctdd_link_rates(drop, cfg, dir)?;
    Ok(ctdd_sub_from_rates(&rates, dir.time_fraction(cfg)))
}

/// Both hops active for the whole direction; each cell gets the weaker one.
pub fn full_duplex_outcome(rates: &HopRates, frac: f64) -> DirectionOutcome {
    let per_cell = rates
        .backhaul
        .iter()
        .zip(&rates.access)
        .map(|(&b, &a)| frac * b.min(a))
        .collect();
    let bound = rates
        .backhaul
        .iter()
        .zip(&rates.access)
        .map(|(&b, &a)| a < b)
        .collect();
    DirectionOutcome::new(per_cell, None, Some(bound))
}

/// Full-duplex hop rates with BS-SC and SC-UE links interfering.
pub fn zdd_link_rates(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<HopRates> {
    let ants = ScAntennas::for_config(cfg);
    let noise_sc = apply_rsi(drop.noise_sc_w_hz, cfg.rsi_db);
    let k_total = drop.num_cells;
    match dir {
        Direction::Dl => {
            let hd = pseudo_inverse(&drop.h_b2s_cal(&ants.rx))?;
            let phi = zf_dl_scalar(&hd, cfg.p_bs_w, cfg.n_bs)?;
            let backhaul = zf_dl_rate(phi, cfg.bandwidth_hz, noise_sc, ants.rx.len(), k_total);
            let phi_sq = phi * phi;
            let interference: Vec<f64> = (0..k_total)
                .map(|k| zdd_dl_interference(&drop.h_b2u_k(k), drop.a_b2u[k], phi_sq, &hd))
                .collect();
            let access = access_svd(drop, cfg, dir, &ants.tx, noise_sc, &interference)?;
            Ok(HopRates { backhaul, access })
        }
        Direction::Ul => {
            let hd = pseudo_inverse(&drop.h_b2s_cal(&ants.tx))?;
            let cross = drop.h_b2u_cal().matmul(&hd);
            let p_ue = if cfg.ul_interference_per_stream {
                cfg.p_ue_w / cfg.n_ue as f64
            } else {
                cfg.p_ue_w
            };
            let interference = zdd_ul_interference_all(&cross, p_ue);
            let backhaul = zdd_s2b_rate(
                &hd,
                &interference,
                cfg.p_sc_w,
                ants.tx.len(),
                cfg.bandwidth_hz,
                drop.noise_bs_w_hz,
            );
            let zeros = vec![0.0; k_total];
            let access = access_svd(drop, cfg, dir, &ants.rx, noise_sc, &zeros)?;
            Ok(HopRates { backhaul, access })
        }
    }
}

pub fn zdd(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    let rates = zdd_link_rates(drop, cfg, dir)?;
    Ok(full_duplex_outcome(&rates, dir.time_fraction(cfg)))
}

/// Full-duplex hop rates with the BS confined to the null space of the
/// BS-UE channel.
pub fn zdd_ir_link_rates(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<HopRates> {
    cfg.validate_zdd_ir()?;
    let ants = ScAntennas::for_config(cfg);
    let noise_sc = apply_rsi(drop.noise_sc_w_hz, cfg.rsi_db);
    let k_total = drop.num_cells;
    let zeros = vec![0.0; k_total];
    let h_b2u_cal = drop.h_b2u_cal();
    match dir {
        Direction::Dl => {
            let g = zddir_beamformer(&h_b2u_cal, &drop.h_b2s_cal(&ants.rx))?;
            let backhaul = zddir_b2s_rate(
                &g,
                cfg.p_bs_w,
                ants.rx.len(),
                k_total,
                cfg.bandwidth_hz,
                noise_sc,
            )?;
            let access = access_svd(drop, cfg, dir, &ants.tx, noise_sc, &zeros)?;
            Ok(HopRates { backhaul, access })
        }
        Direction::Ul => {
            let g = zddir_beamformer(&h_b2u_cal, &drop.h_b2s_cal(&ants.tx))?;
            let backhaul = zddir_s2b_rate(
                &g,
                cfg.p_sc_w,
                ants.tx.len(),
                cfg.bandwidth_hz,
                drop.noise_bs_w_hz,
            );
            let access = access_svd(drop, cfg, dir, &ants.rx, noise_sc, &zeros)?;
            Ok(HopRates { backhaul, access })
        }
    }
}

pub fn zdd_ir(drop: &Drop, cfg: &SystemConfig, dir: Direction) -> Result<DirectionOutcome> {
    let rates = zdd_ir_link_rates(drop, cfg, dir)?;
    Ok(full_duplex_outcome(&rates, dir.time_fraction(cfg)))
}
